use rayon::prelude::*;

use super::fieldset::{ncomp, Field, FieldSet};
use super::kernel::{BondQuadrature, Kernel, Stamp};
use crate::dynamics::{Backend, EquationsOfMotion, System};
use crate::ensemble::EnsembleBatch;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::dot;
use crate::potentials::PairEval;
use crate::state::{AprState, NhState, NveState};
use crate::trajectory::Clock;
use crate::Vec3;

/// Per-sample microscopic quantities at one instant.
struct Micro {
    r: Vec<Vec3>,
    mom: Vec<Vec3>,
    vel: Vec<Vec3>,
    mass: Vec<f64>,
    site: Vec<f64>,
    grad_ext: Vec<Vec3>,
    pairs: Vec<PairEval>,
    s: f64,
    aux: Aux,
}

#[derive(Clone, Copy)]
enum Aux {
    None,
    Nh { p_s: f64, q: f64, a: f64, omega: f64, two_kin: f64 },
    Apr { pf: f64, omega: f64 },
}

fn micro(system: &System, z: &[f64]) -> Result<Micro> {
    let parts = system.particles();
    let n = parts.len();
    let mass = parts.masses().to_vec();
    let (r, mom, s, aux) = match system {
        System::Nve(_) => {
            let st = NveState::from_phase(z, n);
            (st.positions, st.momenta, 1.0, Aux::None)
        }
        System::Nh(sys) => {
            let st = NhState::from_phase(z, n);
            st.check()?;
            let mom: Vec<Vec3> = st.momenta.iter().map(|p| p / st.s).collect();
            (st.positions, mom, st.s, Aux::Nh { p_s: st.p_s, q: sys.q, a: sys.a(), omega: sys.omega_ref, two_kin: 0.0 })
        }
        System::Apr(sys) => {
            let st = AprState::from_phase(z, n);
            let finv_t = st.cell_inverse_transpose()?;
            let r = st.reference.iter().map(|s| st.cell * s).collect();
            let mom = st.momenta.iter().map(|p| finv_t * p).collect();
            (r, mom, 1.0, Aux::Apr { pf: dot(&sys.piola, &st.cell), omega: sys.omega_ref })
        }
    };
    let vel: Vec<Vec3> = mom.iter().zip(&mass).map(|(p, m)| p / *m).collect();
    let aux = match aux {
        Aux::Nh { p_s, q, a, omega, .. } => {
            let two_kin = vel.iter().zip(&mass).map(|(v, m)| m * v.norm_squared()).sum();
            Aux::Nh { p_s, q, a, omega, two_kin }
        }
        other => other,
    };
    let inter = system.interactions();
    if inter.has_periodic_bonds() {
        return Err(Error::PeriodicBonds);
    }
    let ext = &inter.external;
    let mut site: Vec<f64> = r.iter().map(|x| ext.energy(x)).collect();
    let grad_ext = r.iter().map(|x| ext.gradient(x)).collect();
    let pairs = inter.pairs(&r, None)?;
    for p in &pairs {
        site[p.i] += 0.5 * p.v;
        site[p.j] += 0.5 * p.v;
    }
    Ok(Micro { r, mom, vel, mass, site, grad_ext, pairs, s, aux })
}

/// Channel layout of one accumulation pass.
struct Layout {
    entries: Vec<(&'static str, u8, usize)>,
    width: usize,
}

impl Layout {
    fn new(list: &[(&'static str, u8)]) -> Self {
        let mut entries = Vec::new();
        let mut width = 0;
        for (n, o) in list {
            entries.push((*n, *o, width));
            width += ncomp(*o);
        }
        Layout { entries, width }
    }

    fn off(&self, name: &str) -> usize {
        self.entries.iter().find(|e| e.0 == name).map(|e| e.2).expect("channel registered")
    }
}

fn pass1_layout(backend: Backend) -> Layout {
    let mut l = vec![("n", 0), ("rho", 0), ("rho_v", 1), ("eps_K", 0), ("eps_V", 0), ("f_e", 1), ("sigma_eps_0", 0)];
    match backend {
        Backend::Nve => {}
        Backend::Nh => l.extend([
            ("sigma_rho", 0),
            ("sigma_eps_K", 0),
            ("sigma_eps_V", 0),
            ("eps_bar_ps", 0),
            ("eps_bar_s", 0),
            ("sigma_bar_ps", 0),
            ("sigma_bar_s", 0),
            ("rho@s", 0),
            ("rho_v@s", 1),
            ("eps_K@s", 0),
            ("eps_V@s", 0),
            ("eps_bar_ps@s", 0),
            ("eps_bar_s@s", 0),
        ]),
        Backend::Apr => l.push(("eps_bar_P", 0)),
    }
    Layout::new(&l)
}

fn pass2_layout(backend: Backend) -> Layout {
    let mut l = vec![("T_K", 2), ("q_K", 1), ("q_T", 1), ("T_V", 2), ("q_V", 1), ("T", 2)];
    match backend {
        Backend::Nve => {}
        Backend::Nh => l.extend([("q_ps", 1), ("q_s", 1)]),
        Backend::Apr => l.push(("q_P", 1)),
    }
    Layout::new(&l)
}

fn collective_names(backend: Backend) -> &'static [&'static str] {
    match backend {
        Backend::Nve => &[],
        Backend::Nh => &["eps_ps", "eps_s", "sigma_eps_ps", "sigma_eps_s", "eps_ps@s", "eps_s@s"],
        Backend::Apr => &["eps_P"],
    }
}

/// Per-particle pass-1 channel values, in layout order.
fn pass1_values(m: &Micro, k: usize, n: f64, out: &mut Vec<f64>) {
    out.clear();
    let mass = m.mass[k];
    let v = m.vel[k];
    let kin = 0.5 * mass * v.norm_squared();
    let pi = m.mom[k];
    out.extend([1.0 / n, mass, pi.x, pi.y, pi.z, kin, m.site[k]]);
    let fe = -m.grad_ext[k];
    out.extend([fe.x, fe.y, fe.z, m.grad_ext[k].dot(&v)]);
    match m.aux {
        Aux::None => {}
        Aux::Nh { p_s, q, a, two_kin, .. } => {
            let g = p_s / q;
            let e_ps = p_s * p_s / (2.0 * q);
            let e_s = a * (m.s.ln() - 1.0);
            let sig_ps = p_s * p_s * p_s / (2.0 * q * q) + g * (two_kin - a);
            let sig_s = g * a * m.s.ln();
            let s = m.s;
            out.extend([g * mass, -g * kin, g * m.site[k], e_ps / n, e_s / n, sig_ps / n, sig_s / n]);
            out.extend([s * mass, s * pi.x, s * pi.y, s * pi.z, s * kin, s * m.site[k], s * (e_ps / n), s * (e_s / n)]);
        }
        Aux::Apr { pf, omega } => out.push(-omega * pf / n),
    }
}

fn collective_values(m: &Micro) -> Vec<f64> {
    match m.aux {
        Aux::None => vec![],
        Aux::Nh { p_s, q, a, omega, two_kin } => {
            let e_ps = p_s * p_s / (2.0 * q * omega);
            let e_s = a * (m.s.ln() - 1.0) / omega;
            let sig_ps = p_s * p_s * p_s / (2.0 * q * q * omega) + p_s / (q * omega) * (two_kin - a);
            let sig_s = p_s / (q * omega) * a * m.s.ln();
            vec![e_ps, e_s, sig_ps, sig_s, m.s * e_ps, m.s * e_s]
        }
        Aux::Apr { pf, .. } => vec![-pf],
    }
}

/// Dense per-sample scratch with touched-node bookkeeping, reduced into
/// running sums of values and squares.
struct Acc {
    width: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    scratch: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
}

impl Acc {
    fn new(nodes: usize, width: usize) -> Self {
        Acc {
            width,
            sum: vec![0.0; nodes * width],
            sumsq: vec![0.0; nodes * width],
            scratch: vec![0.0; nodes * width],
            mark: vec![false; nodes],
            touched: Vec::new(),
        }
    }

    fn slot(&mut self, node: usize) -> &mut [f64] {
        if !self.mark[node] {
            self.mark[node] = true;
            self.touched.push(node);
        }
        &mut self.scratch[node * self.width..(node + 1) * self.width]
    }

    fn flush(&mut self) {
        for &node in &self.touched {
            let range = node * self.width..(node + 1) * self.width;
            for i in range {
                let x = self.scratch[i];
                self.sum[i] += x;
                self.sumsq[i] += x * x;
                self.scratch[i] = 0.0;
            }
            self.mark[node] = false;
        }
        self.touched.clear();
    }
}

fn mean_se(sum: f64, sumsq: f64, m: usize) -> (f64, f64) {
    let mf = m as f64;
    let mean = sum / mf;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - mf * mean * mean) / (mf - 1.0)).max(0.0);
    (mean, (var / mf).sqrt())
}

struct TimeSlice {
    fields: Vec<(&'static str, u8, Vec<f64>, Vec<f64>)>,
    v_defined: Vec<bool>,
}

/// Grouped so that `a = b` yields a bitwise symmetric tensor.
fn outer_into(out: &mut [f64], a: &Vec3, b: &Vec3, scale: f64) {
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] += scale * (a[i] * b[j]);
        }
    }
}

fn assemble_time(system: &System, batch: &EnsembleBatch, grid: &GridSpec, kernel: &Kernel, quad: &BondQuadrature, time: f64, clock: Clock) -> Result<TimeSlice> {
    let backend = system.backend();
    let nodes = grid.node_count();
    let m_samples = batch.len();
    let n = system.particles().len() as f64;
    let micros: Vec<Micro> = batch
        .trajectories
        .iter()
        .map(|t| t.state_at(time, clock).and_then(|z| micro(system, &z)))
        .collect::<Result<_>>()?;
    for m in &micros {
        for (k, r) in m.r.iter().enumerate() {
            if !grid.contains_padded(r) {
                return Err(Error::OutsideGrid { particle: k, position: [r.x, r.y, r.z] });
            }
        }
    }

    let l1 = pass1_layout(backend);
    let mut acc1 = Acc::new(nodes, l1.width);
    let coll_names = collective_names(backend);
    let mut coll_sum = vec![0.0; coll_names.len()];
    let mut coll_sq = vec![0.0; coll_names.len()];
    let mut stamp = Stamp::default();
    let mut vals = Vec::with_capacity(l1.width);
    for m in &micros {
        for k in 0..m.r.len() {
            stamp.fill(grid, kernel, &m.r[k])?;
            pass1_values(m, k, n, &mut vals);
            for (&node, &w) in stamp.nodes.iter().zip(&stamp.weights) {
                for (o, x) in acc1.slot(node).iter_mut().zip(&vals) {
                    *o += w * x;
                }
            }
        }
        acc1.flush();
        for (i, c) in collective_values(m).into_iter().enumerate() {
            coll_sum[i] += c;
            coll_sq[i] += c * c;
        }
    }

    let mut fields = Vec::new();
    let w1 = l1.width;
    let mut means1 = vec![0.0; nodes * w1];
    let mut ses1 = vec![0.0; nodes * w1];
    for i in 0..nodes * w1 {
        let (a, b) = mean_se(acc1.sum[i], acc1.sumsq[i], m_samples);
        means1[i] = a;
        ses1[i] = b;
    }
    drop(acc1);

    let total_mass = system.particles().total_mass();
    let floor = 1e-8 * total_mass / grid.box_volume();
    let (o_rho, o_rv) = (l1.off("rho"), l1.off("rho_v"));
    let mut vfield = vec![0.0; nodes * 3];
    let mut vse = vec![0.0; nodes * 3];
    let mut v_defined = vec![false; nodes];
    for node in 0..nodes {
        let rho = means1[node * w1 + o_rho];
        if rho > floor {
            v_defined[node] = true;
            for c in 0..3 {
                vfield[node * 3 + c] = means1[node * w1 + o_rv + c] / rho;
                vse[node * 3 + c] = ses1[node * w1 + o_rv + c] / rho;
            }
        }
    }

    let l2 = pass2_layout(backend);
    let w2 = l2.width;
    let mut acc2 = Acc::new(nodes, w2);
    let (o_tk, o_qk, o_qt, o_tv, o_qv, o_t) = (l2.off("T_K"), l2.off("q_K"), l2.off("q_T"), l2.off("T_V"), l2.off("q_V"), l2.off("T"));
    let (o_a, o_b) = match backend {
        Backend::Nve => (0, 0),
        Backend::Nh => (l2.off("q_ps"), l2.off("q_s")),
        Backend::Apr => (l2.off("q_P"), 0),
    };
    for m in &micros {
        let (c_a, c_b) = match m.aux {
            Aux::None => (0.0, 0.0),
            Aux::Nh { p_s, q, a, .. } => (p_s * p_s / (2.0 * q) / n, a * (m.s.ln() - 1.0) / n),
            Aux::Apr { pf, omega } => (-omega * pf / n, 0.0),
        };
        for k in 0..m.r.len() {
            stamp.fill(grid, kernel, &m.r[k])?;
            let mass = m.mass[k];
            for (&node, &w) in stamp.nodes.iter().zip(&stamp.weights) {
                let vn = Vec3::new(vfield[node * 3], vfield[node * 3 + 1], vfield[node * 3 + 2]);
                let u = m.vel[k] - vn;
                let slot = acc2.slot(node);
                outer_into(&mut slot[o_tk..o_tk + 9], &u, &u, -w * mass);
                let kin_u = 0.5 * mass * u.norm_squared();
                for c in 0..3 {
                    slot[o_qk + c] += w * kin_u * u[c];
                    slot[o_qt + c] += w * m.site[k] * u[c];
                }
                match backend {
                    Backend::Nve => {}
                    Backend::Nh => {
                        for c in 0..3 {
                            slot[o_a + c] += w * c_a * u[c];
                            slot[o_b + c] += w * c_b * u[c];
                        }
                    }
                    Backend::Apr => {
                        for c in 0..3 {
                            slot[o_a + c] += w * c_a * u[c];
                        }
                    }
                }
            }
        }
        for p in &m.pairs {
            let (ri, rj) = (m.r[p.i], m.r[p.j]);
            let coef = p.dv / p.r;
            let vbar = (m.vel[p.i] + m.vel[p.j]) * 0.5;
            for (alpha, wa) in quad.nodes() {
                let point = ri * alpha + rj * (1.0 - alpha);
                stamp.fill(grid, kernel, &point)?;
                for (&node, &w) in stamp.nodes.iter().zip(&stamp.weights) {
                    let b = wa * w;
                    let vn = Vec3::new(vfield[node * 3], vfield[node * 3 + 1], vfield[node * 3 + 2]);
                    let slot = acc2.slot(node);
                    outer_into(&mut slot[o_tv..o_tv + 9], &p.x, &p.x, b * coef);
                    let proj = p.x.dot(&(vbar - vn));
                    for c in 0..3 {
                        slot[o_qv + c] -= b * coef * p.x[c] * proj;
                    }
                }
            }
        }
        for &node in &acc2.touched {
            let slot = &mut acc2.scratch[node * w2..(node + 1) * w2];
            for c in 0..9 {
                slot[o_t + c] = slot[o_tk + c] + slot[o_tv + c];
            }
        }
        acc2.flush();
    }

    for (name, order, off) in &l1.entries {
        let c = ncomp(*order);
        let mut v = vec![0.0; nodes * c];
        let mut s = vec![0.0; nodes * c];
        for node in 0..nodes {
            for i in 0..c {
                v[node * c + i] = means1[node * w1 + off + i];
                s[node * c + i] = ses1[node * w1 + off + i];
            }
        }
        fields.push((*name, *order, v, s));
    }
    fields.push(("v", 1, vfield, vse));
    for (name, order, off) in &l2.entries {
        let c = ncomp(*order);
        let mut v = vec![0.0; nodes * c];
        let mut s = vec![0.0; nodes * c];
        for node in 0..nodes {
            for i in 0..c {
                let (a, b) = mean_se(acc2.sum[node * w2 + off + i], acc2.sumsq[node * w2 + off + i], m_samples);
                v[node * c + i] = a;
                s[node * c + i] = b;
            }
        }
        fields.push((*name, *order, v, s));
    }
    for (i, name) in coll_names.iter().enumerate() {
        let (a, b) = mean_se(coll_sum[i], coll_sq[i], m_samples);
        fields.push((*name, 0, vec![a; nodes], vec![b; nodes]));
    }
    Ok(TimeSlice { fields, v_defined })
}

/// Assembles every backend-applicable field on the grid's time samples.
///
/// Times are read on `clock`. For NH, the virtual clock is required by the
/// balance module; the `@s` fields carry the weight used for its time derivative.
pub fn compute_fields(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.backend != system.backend() {
        return Err(Error::BackendMismatch(format!("batch is {} but system is {}", batch.backend, system.backend())));
    }
    grid.validate()?;
    let kernel = Kernel::new(grid.h)?;
    let quad = BondQuadrature::gauss_legendre8();
    let times = grid.times();
    let slices: Vec<TimeSlice> = times
        .par_iter()
        .map(|&t| assemble_time(system, batch, grid, &kernel, &quad, t, clock))
        .collect::<Result<_>>()?;

    let nodes = grid.node_count();
    let nt = times.len();
    let mut set = FieldSet::new(grid.clone(), times.clone(), clock, system.backend(), batch.len());
    for (fi, (name, order, _, _)) in slices[0].fields.iter().enumerate() {
        let mut f = Field::zeros(*order, nt, nodes);
        let chunk = nodes * ncomp(*order);
        for (ti, sl) in slices.iter().enumerate() {
            f.values[ti * chunk..(ti + 1) * chunk].copy_from_slice(&sl.fields[fi].2);
            f.stderr[ti * chunk..(ti + 1) * chunk].copy_from_slice(&sl.fields[fi].3);
        }
        set.insert(*name, f);
    }
    for (ti, sl) in slices.iter().enumerate() {
        set.v_defined[ti * nodes..(ti + 1) * nodes].copy_from_slice(&sl.v_defined);
    }
    if system.backend() == Backend::Apr {
        let eps = set.get("eps_P")?.clone();
        let mut f = Field::zeros(0, nt, nodes);
        for ti in 0..nt {
            let at = |i: usize| (eps.values[i * nodes], eps.stderr[i * nodes]);
            let (d, se) = if nt < 2 {
                (0.0, 0.0)
            } else if ti == 0 || ti == nt - 1 {
                let (a, b) = if ti == 0 { (at(0), at(1)) } else { (at(nt - 2), at(nt - 1)) };
                ((b.0 - a.0) / grid.dt, (a.1 * a.1 + b.1 * b.1).sqrt() / grid.dt)
            } else {
                let (a, b) = (at(ti - 1), at(ti + 1));
                ((b.0 - a.0) / (2.0 * grid.dt), (a.1 * a.1 + b.1 * b.1).sqrt() / (2.0 * grid.dt))
            };
            f.values[ti * nodes..(ti + 1) * nodes].fill(d);
            f.stderr[ti * nodes..(ti + 1) * nodes].fill(se);
        }
        set.insert("sigma_eps_apr", f);
    }
    Ok(set)
}
