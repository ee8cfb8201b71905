use thiserror::Error;

/// Exit statuses of the `ikn` binary.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const NUMERICAL: u8 = 2;
    pub const CHECK: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("fields missing: {0}; run `ikn fields` first")]
    FieldsMissing(String),

    #[error("malformed output file {path}: {reason}")]
    Malformed { path: String, reason: String },

    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: ikn_core::Error,
    },

    #[error("{0} check(s) failed")]
    CheckFailed(usize),
}

impl From<ikn_core::Error> for CliError {
    fn from(e: ikn_core::Error) -> Self {
        CliError::Core { stage: "setup", source: e }
    }
}

impl CliError {
    pub fn core(stage: &'static str) -> impl FnOnce(ikn_core::Error) -> CliError {
        move |source| CliError::Core { stage, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::FieldsMissing(_) | CliError::Malformed { .. } => exit::CONFIG,
            CliError::CheckFailed(_) => exit::CHECK,
            CliError::Core { source, .. } => core_code(source),
        }
    }
}

fn core_code(e: &ikn_core::Error) -> u8 {
    use ikn_core::Error as E;
    match e {
        E::SampleFailed { source, .. } => core_code(source),
        E::InvalidParameter { .. }
        | E::IndexOutOfRange { .. }
        | E::PeriodicBonds
        | E::GridTooSmall(_)
        | E::BackendMismatch(_)
        | E::MissingField(_)
        | E::OutsideGrid { .. }
        | E::TooFewSamples { .. } => exit::CONFIG,
        _ => exit::NUMERICAL,
    }
}
