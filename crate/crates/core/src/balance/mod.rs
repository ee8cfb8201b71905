//! Residuals of the continuum balance laws evaluated on assembled fields.

mod convergence;
mod manufactured;
mod residual;
mod stencil;

pub use convergence::{convergence_report, fit_log_log, stochastic_residual, ConvergenceFit, ConvergenceReport};
pub use manufactured::manufactured_fields;
pub use residual::{
    balance_report, energy_balance_residual, mass_balance_residual, momentum_balance_residual, BalanceEntry, BalanceReport,
    BalanceSpec, EnergyMode, TermNorm,
};
pub use stencil::{divergence, time_derivative};
