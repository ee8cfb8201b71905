//! On-disk bundle: manifest, trajectory store, field files and balance reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ikn_core::ensemble::EnsembleBatch;
use ikn_core::fields::{ncomp, Field};
use ikn_core::trajectory::{Clock, Sample};
use ikn_core::{Backend, FieldSet, GridSpec, Trajectory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const TRAJECTORIES: &str = "trajectories.bin";
pub const CONSERVATION: &str = "conservation.csv";
pub const FIELDS_DIR: &str = "fields";
pub const FIELD_INDEX: &str = "fields/index.json";
pub const BALANCE_DIR: &str = "balance";

pub const MANIFEST_VERSION: u32 = 1;
const FIELD_MAGIC: &[u8; 4] = b"IKNF";
const TRAJ_MAGIC: &[u8; 4] = b"IKNT";
const BINARY_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// Config echo plus checksums of every file in the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest: u32,
    pub code_version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Relative path → SHA-256 (hex).
    pub files: BTreeMap<String, String>,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn malformed(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Malformed { path: path.display().to_string(), reason: reason.into() }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.strip_prefix(root).map(|p| p != Path::new(MANIFEST)).unwrap_or(false) {
            out.push(path);
        }
    }
    Ok(())
}

/// Checksums every file under `out` except the manifest itself.
pub fn checksums(out: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = Vec::new();
    collect_files(out, out, &mut files)?;
    let mut map = BTreeMap::new();
    for path in files {
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let rel = path.strip_prefix(out).expect("collected under root");
        let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        map.insert(key, sha256_hex(&bytes));
    }
    Ok(map)
}

pub fn write_manifest(out: &Path, config: &RunConfig) -> Result<Manifest, CliError> {
    let m = Manifest {
        manifest: MANIFEST_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.ensemble.seed,
        config: config.clone(),
        files: checksums(out)?,
    };
    let path = out.join(MANIFEST);
    let text = serde_json::to_string_pretty(&m).expect("manifest serialises");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(m)
}

pub fn read_manifest(out: &Path) -> Result<Option<Manifest>, CliError> {
    let path = out.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let m = serde_path_to_error::deserialize(&mut de).map_err(|e| malformed(&path, format!("{}: {}", e.path(), e.inner())))?;
    Ok(Some(m))
}

fn backend_code(b: Backend) -> u32 {
    match b {
        Backend::Nve => 0,
        Backend::Nh => 1,
        Backend::Apr => 2,
    }
}

fn backend_from(code: u32) -> Option<Backend> {
    [Backend::Nve, Backend::Nh, Backend::Apr].into_iter().find(|b| backend_code(*b) == code)
}

/// Little-endian trajectory store: a 64-byte header followed by
/// `[member][sample](τ, t, z…)`.
pub fn write_trajectories(path: &Path, batch: &EnsembleBatch) -> Result<(), CliError> {
    let first = batch.trajectories.first().ok_or_else(|| malformed(path, "empty batch"))?;
    let samples = first.len();
    let dim = first.samples().first().map(|s| s.z.len()).unwrap_or(0);
    if batch.trajectories.iter().any(|t| t.len() != samples) {
        return Err(malformed(path, "members recorded different sample counts"));
    }
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(TRAJ_MAGIC);
    header.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    header.extend_from_slice(&backend_code(batch.backend).to_le_bytes());
    header.extend_from_slice(&(first.particle_count() as u32).to_le_bytes());
    header.extend_from_slice(&(batch.len() as u64).to_le_bytes());
    header.extend_from_slice(&(samples as u64).to_le_bytes());
    header.extend_from_slice(&(dim as u64).to_le_bytes());
    header.extend_from_slice(&first.dtau().to_le_bytes());
    header.extend_from_slice(&(first.record_every() as u64).to_le_bytes());
    header.resize(HEADER_LEN, 0);
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&header).map_err(io_err(path))?;
    for tr in &batch.trajectories {
        for s in tr.samples() {
            for x in std::iter::once(&s.tau).chain(std::iter::once(&s.t)).chain(&s.z) {
                w.write_all(&x.to_le_bytes()).map_err(io_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn read_trajectories(path: &Path) -> Result<EnsembleBatch, CliError> {
    let mut bytes = Vec::new();
    File::open(path).map_err(io_err(path))?.read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != TRAJ_MAGIC {
        return Err(malformed(path, "not a trajectory store"));
    }
    if u32_at(&bytes, 4) != BINARY_VERSION {
        return Err(malformed(path, "unsupported version"));
    }
    let backend = backend_from(u32_at(&bytes, 8)).ok_or_else(|| malformed(path, "unknown backend"))?;
    let particles = u32_at(&bytes, 12) as usize;
    let (members, samples, dim) = (u64_at(&bytes, 16) as usize, u64_at(&bytes, 24) as usize, u64_at(&bytes, 32) as usize);
    let (dtau, record_every) = (f64_at(&bytes, 40), u64_at(&bytes, 48) as usize);
    if bytes.len() != HEADER_LEN + members * samples * (dim + 2) * 8 {
        return Err(malformed(path, "length does not match header"));
    }
    let mut at = HEADER_LEN;
    let mut next = || {
        let x = f64_at(&bytes, at);
        at += 8;
        x
    };
    let mut trajectories = Vec::with_capacity(members);
    for _ in 0..members {
        let mut tr = Trajectory::new(backend, particles, dtau, record_every);
        for _ in 0..samples {
            let (tau, t) = (next(), next());
            let z = (0..dim).map(|_| next()).collect();
            tr.push(Sample { tau, t, z }).map_err(|e| malformed(path, e.to_string()))?;
        }
        trajectories.push(tr);
    }
    Ok(EnsembleBatch { backend, trajectories, monitors: Vec::new() })
}

pub fn write_conservation(path: &Path, batch: &EnsembleBatch) -> Result<(), CliError> {
    let mut s = String::from("member,h0,max_rel_drift,final_rel_drift,max_momentum_drift\n");
    for (i, m) in batch.monitors.iter().enumerate() {
        let p = m.max_momentum_drift.map(|x| format!("{x:e}")).unwrap_or_default();
        let _ = writeln!(s, "{i},{:e},{:e},{:e},{p}", m.h0, m.max_rel_drift, m.final_rel_drift);
    }
    fs::write(path, s).map_err(io_err(path))
}

/// Component labels of a tensor of the given order.
pub fn component_names(order: u8) -> Vec<String> {
    const AXES: [&str; 3] = ["x", "y", "z"];
    match order {
        0 => vec!["value".into()],
        1 => AXES.iter().map(|a| a.to_string()).collect(),
        _ => (0..ncomp(order))
            .map(|k| {
                let mut idx = Vec::new();
                let mut r = k;
                for _ in 0..order {
                    idx.push(AXES[r % 3]);
                    r /= 3;
                }
                idx.reverse();
                idx.concat()
            })
            .collect(),
    }
}

/// File stem of field `name` at time index `t`.
pub fn field_file(name: &str, t: usize) -> String {
    format!("{name}_t{t:04}")
}

/// Writes one time slice as CSV with columns `t, x, y, z`, the components and,
/// when `stderr` is given, their standard errors.
pub fn write_field_csv(path: &Path, grid: &GridSpec, time: f64, order: u8, values: &[f64], stderr: Option<&[f64]>) -> Result<(), CliError> {
    let c = ncomp(order);
    let names = component_names(order);
    let mut s = String::from("t,x,y,z");
    for n in &names {
        s.push(',');
        s.push_str(n);
    }
    if stderr.is_some() {
        for n in &names {
            let _ = write!(s, ",se_{n}");
        }
    }
    s.push('\n');
    for node in 0..grid.node_count() {
        let r = grid.node(node);
        let _ = write!(s, "{time},{},{},{}", r.x, r.y, r.z);
        for x in &values[node * c..(node + 1) * c] {
            let _ = write!(s, ",{x:e}");
        }
        if let Some(se) = stderr {
            for x in &se[node * c..(node + 1) * c] {
                let _ = write!(s, ",{x:e}");
            }
        }
        s.push('\n');
    }
    fs::write(path, s).map_err(io_err(path))
}

/// Reads the component and standard-error columns back from a field CSV.
pub fn read_field_csv(path: &Path, nodes: usize, order: u8) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let c = ncomp(order);
    let file = File::open(path).map_err(|_| CliError::FieldsMissing(path.display().to_string()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| malformed(path, "empty file"))?.map_err(io_err(path))?;
    if header.split(',').count() != 4 + 2 * c {
        return Err(malformed(path, format!("expected {} columns", 4 + 2 * c)));
    }
    let (mut values, mut stderr) = (Vec::with_capacity(nodes * c), Vec::with_capacity(nodes * c));
    for (row, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 + 2 * c {
            return Err(malformed(path, format!("row {row}: wrong column count")));
        }
        for (k, col) in cols[4..].iter().enumerate() {
            let x: f64 = col.parse().map_err(|_| malformed(path, format!("row {row}: bad number {col:?}")))?;
            if k < c {
                values.push(x);
            } else {
                stderr.push(x);
            }
        }
    }
    if values.len() != nodes * c {
        return Err(malformed(path, format!("expected {nodes} rows")));
    }
    Ok((values, stderr))
}

/// Binary slice: 64-byte header (`IKNF`, version, nx, ny, nz, order, time,
/// lower corner, dx) then values and standard errors as little-endian `f64`.
pub fn write_field_binary(path: &Path, grid: &GridSpec, time: f64, order: u8, values: &[f64], stderr: &[f64]) -> Result<(), CliError> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * values.len());
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    for n in grid.shape() {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(order as u32).to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for x in grid.lower {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&grid.dx.to_le_bytes());
    debug_assert_eq!(buf.len(), HEADER_LEN);
    for x in values.iter().chain(stderr) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Header and payload of a binary field slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySlice {
    pub shape: [usize; 3],
    pub order: u8,
    pub time: f64,
    pub lower: [f64; 3],
    pub dx: f64,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

pub fn read_field_binary(path: &Path) -> Result<BinarySlice, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != FIELD_MAGIC {
        return Err(malformed(path, "not an IKNF file"));
    }
    if u32_at(&bytes, 4) != BINARY_VERSION {
        return Err(malformed(path, "unsupported version"));
    }
    let shape = [u32_at(&bytes, 8) as usize, u32_at(&bytes, 12) as usize, u32_at(&bytes, 16) as usize];
    let order = u32_at(&bytes, 20) as u8;
    let len = shape.iter().product::<usize>() * ncomp(order);
    if bytes.len() != HEADER_LEN + 16 * len {
        return Err(malformed(path, "length does not match header"));
    }
    let data: Vec<f64> = (0..2 * len).map(|i| f64_at(&bytes, HEADER_LEN + 8 * i)).collect();
    Ok(BinarySlice {
        shape,
        order,
        time: f64_at(&bytes, 24),
        lower: [f64_at(&bytes, 32), f64_at(&bytes, 40), f64_at(&bytes, 48)],
        dx: f64_at(&bytes, 56),
        values: data[..len].to_vec(),
        stderr: data[len..].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    pub order: u8,
}

/// Everything about a field set except the values, which live in the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldIndex {
    pub backend: Backend,
    pub clock: Clock,
    pub samples: usize,
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub fields: Vec<FieldEntry>,
    /// `[time][node]` as a string of `0`/`1`.
    pub v_defined: String,
}

pub fn write_fields(out: &Path, fs_: &FieldSet, binary: bool) -> Result<usize, CliError> {
    let dir = out.join(FIELDS_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let nodes = fs_.nodes();
    let mut entries = Vec::new();
    for (name, f) in fs_.iter() {
        let c = f.ncomp();
        for (t, time) in fs_.times.iter().enumerate() {
            let span = t * nodes * c..(t + 1) * nodes * c;
            let stem = field_file(name, t);
            write_field_csv(&dir.join(format!("{stem}.csv")), &fs_.grid, *time, f.order, &f.values[span.clone()], Some(&f.stderr[span.clone()]))?;
            if binary {
                write_field_binary(&dir.join(format!("{stem}.iknf")), &fs_.grid, *time, f.order, &f.values[span.clone()], &f.stderr[span])?;
            }
        }
        entries.push(FieldEntry { name: name.to_string(), order: f.order });
    }
    let index = FieldIndex {
        backend: fs_.backend,
        clock: fs_.clock,
        samples: fs_.samples,
        grid: fs_.grid.clone(),
        times: fs_.times.clone(),
        fields: entries,
        v_defined: fs_.v_defined.iter().map(|d| if *d { '1' } else { '0' }).collect(),
    };
    let path = out.join(FIELD_INDEX);
    fs::write(&path, serde_json::to_string_pretty(&index).expect("index serialises") + "\n").map_err(io_err(&path))?;
    Ok(index.fields.len())
}

pub fn read_fields(out: &Path) -> Result<FieldSet, CliError> {
    let path = out.join(FIELD_INDEX);
    if !path.exists() {
        return Err(CliError::FieldsMissing(path.display().to_string()));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let index: FieldIndex = serde_json::from_str(&text).map_err(|e| malformed(&path, e.to_string()))?;
    let nodes = index.grid.node_count();
    if index.v_defined.len() != nodes * index.times.len() {
        return Err(malformed(&path, "v_defined has the wrong length"));
    }
    let mut set = FieldSet::new(index.grid.clone(), index.times.clone(), index.clock, index.backend, index.samples);
    set.v_defined = index.v_defined.chars().map(|c| c == '1').collect();
    let dir = out.join(FIELDS_DIR);
    for e in &index.fields {
        let mut field = Field::zeros(e.order, index.times.len(), nodes);
        let c = field.ncomp();
        for t in 0..index.times.len() {
            let (v, se) = read_field_csv(&dir.join(format!("{}.csv", field_file(&e.name, t))), nodes, e.order)?;
            field.values[t * nodes * c..(t + 1) * nodes * c].copy_from_slice(&v);
            field.stderr[t * nodes * c..(t + 1) * nodes * c].copy_from_slice(&se);
        }
        set.insert(e.name.clone(), field);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_component_names_are_row_major() {
        assert_eq!(component_names(2), ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"]);
        assert_eq!(component_names(0), ["value"]);
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn lower_exp_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(format!("{x:e}").parse::<f64>().unwrap(), x);
        }
    }
}
