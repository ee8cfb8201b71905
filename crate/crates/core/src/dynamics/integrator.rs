use serde::{Deserialize, Serialize};

use super::EquationsOfMotion;
use crate::error::{Error, Result};
use crate::trajectory::{Sample, Trajectory};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitMidpoint,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dtau: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl IntegratorSpec {
    pub fn midpoint(dtau: f64) -> Self {
        IntegratorSpec { scheme: Scheme::ImplicitMidpoint, dtau, tol: 1e-12, max_iter: 50 }
    }

    pub fn rk4(dtau: f64) -> Self {
        IntegratorSpec { scheme: Scheme::Rk4, ..Self::midpoint(dtau) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::InvalidParameter { name: "integrator.dtau", reason: "must be positive".into() });
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter { name: "integrator.tol", reason: "need positive tolerance and iterations".into() });
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `z' = z + h f((z + z')/2)` by fixed-point iteration, returning `z'`.
fn midpoint_step<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64], spec: &IntegratorSpec, step_index: usize) -> Result<Vec<f64>> {
    let d = z.len();
    let h = spec.dtau;
    let mut f = vec![0.0; d];
    eom.rhs(z, &mut f)?;
    let mut next: Vec<f64> = z.iter().zip(&f).map(|(a, b)| a + h * b).collect();
    let mut mid = vec![0.0; d];
    let scale = max_abs(z).max(1.0);
    let mut change = f64::INFINITY;
    for _ in 0..spec.max_iter {
        for i in 0..d {
            mid[i] = 0.5 * (z[i] + next[i]);
        }
        eom.rhs(&mid, &mut f)?;
        change = 0.0;
        for i in 0..d {
            let v = z[i] + h * f[i];
            change = f64::max(change, (v - next[i]).abs());
            next[i] = v;
        }
        if change <= spec.tol * scale {
            return Ok(next);
        }
    }
    Err(Error::NonConvergence { step: step_index, iterations: spec.max_iter, residual: change })
}

fn rk4_step<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64], h: f64) -> Result<Vec<f64>> {
    let d = z.len();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let axpy = |k: &[f64], c: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    eom.rhs(z, &mut k1)?;
    eom.rhs(&axpy(&k1, 0.5 * h), &mut k2)?;
    eom.rhs(&axpy(&k2, 0.5 * h), &mut k3)?;
    eom.rhs(&axpy(&k3, h), &mut k4)?;
    Ok((0..d).map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// Advances one step and validates the state invariants of the result.
pub fn step<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64], spec: &IntegratorSpec, step_index: usize) -> Result<Vec<f64>> {
    let next = match spec.scheme {
        Scheme::ImplicitMidpoint => midpoint_step(eom, z, spec, step_index),
        Scheme::Rk4 => rk4_step(eom, z, spec.dtau),
    }
    .map_err(|e| match e {
        Error::NonPositiveS(_) | Error::SingularCell(_) => Error::StateInvariant { step: step_index, reason: e.to_string() },
        other => other,
    })?;
    if next.iter().any(|x| !x.is_finite()) {
        return Err(Error::StateInvariant { step: step_index, reason: "non-finite phase vector".into() });
    }
    eom.check_state(&next).map_err(|e| Error::StateInvariant { step: step_index, reason: e.to_string() })?;
    Ok(next)
}

/// Running drift of the Hamiltonian (and total momentum, when defined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationMonitor {
    pub h0: f64,
    pub max_rel_drift: f64,
    pub final_rel_drift: f64,
    pub max_momentum_drift: Option<f64>,
    #[serde(skip)]
    momentum0: Option<Vec3>,
}

impl ConservationMonitor {
    pub fn new<E: EquationsOfMotion + ?Sized>(eom: &E, z0: &[f64]) -> Result<Self> {
        let momentum0 = eom.linear_momentum(z0);
        Ok(ConservationMonitor {
            h0: eom.hamiltonian(z0)?,
            max_rel_drift: 0.0,
            final_rel_drift: 0.0,
            max_momentum_drift: momentum0.map(|_| 0.0),
            momentum0,
        })
    }

    pub fn observe<E: EquationsOfMotion + ?Sized>(&mut self, eom: &E, z: &[f64]) -> Result<()> {
        let drift = (eom.hamiltonian(z)? - self.h0).abs() / self.h0.abs().max(1.0);
        self.final_rel_drift = drift;
        self.max_rel_drift = self.max_rel_drift.max(drift);
        if let (Some(p0), Some(p)) = (self.momentum0, eom.linear_momentum(z)) {
            let d = (p - p0).norm();
            self.max_momentum_drift = Some(self.max_momentum_drift.unwrap_or(0.0).max(d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationRun {
    pub trajectory: Trajectory,
    pub monitor: ConservationMonitor,
    /// Set when integration stopped early; the trajectory ends at the last good state.
    pub failure: Option<Error>,
}

/// Integrates `n_steps`, recording every `record_every`-th state (and the last).
/// Failures stop the run and are reported alongside the partial trajectory.
pub fn integrate_partial<E: EquationsOfMotion + ?Sized>(
    eom: &E,
    z0: &[f64],
    n_steps: usize,
    spec: &IntegratorSpec,
    record_every: usize,
) -> Result<IntegrationRun> {
    spec.validate()?;
    if z0.len() != eom.dim() {
        return Err(Error::InvalidParameter { name: "state", reason: format!("phase vector has length {}, expected {}", z0.len(), eom.dim()) });
    }
    eom.check_state(z0)?;
    let every = record_every.max(1);
    let mut monitor = ConservationMonitor::new(eom, z0)?;
    let mut traj = Trajectory::new(eom.backend(), eom.particles().len(), spec.dtau, every);
    let mut z = z0.to_vec();
    let (mut tau, mut t) = (0.0, 0.0);
    let mut s_prev = eom.thermostat_s(&z);
    traj.push(Sample { tau, t, z: z.clone() })?;
    let mut failure = None;
    for n in 1..=n_steps {
        let next = match step(eom, &z, spec, n).and_then(|nz| monitor.observe(eom, &nz).map(|_| nz)) {
            Ok(nz) => nz,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        tau += spec.dtau;
        match (s_prev, eom.thermostat_s(&next)) {
            (Some(a), Some(b)) => {
                t += 0.5 * spec.dtau * (1.0 / a + 1.0 / b);
                s_prev = Some(b);
            }
            _ => t = tau,
        }
        z = next;
        if n % every == 0 || n == n_steps {
            traj.push(Sample { tau, t, z: z.clone() })?;
        }
    }
    if failure.is_some() && traj.samples().last().map(|s| s.tau) != Some(tau) {
        traj.push(Sample { tau, t, z })?;
    }
    Ok(IntegrationRun { trajectory: traj, monitor, failure })
}

/// Like [`integrate_partial`] but turns an early stop into an error.
pub fn integrate<E: EquationsOfMotion + ?Sized>(
    eom: &E,
    z0: &[f64],
    n_steps: usize,
    spec: &IntegratorSpec,
    record_every: usize,
) -> Result<IntegrationRun> {
    let run = integrate_partial(eom, z0, n_steps, spec, record_every)?;
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

/// Physical time `t(τ) = ∫ dα/s(α)` by the cumulative trapezoid rule on a uniform τ grid.
pub fn real_time_map(s: &[f64], dtau: f64) -> Result<Vec<f64>> {
    if let Some(bad) = s.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::NonPositiveS(*bad));
    }
    let mut t = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for (i, si) in s.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dtau * (1.0 / s[i - 1] + 1.0 / si);
        }
        t.push(acc);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_map_examples() {
        let ones = vec![1.0; 11];
        let t = real_time_map(&ones, 0.1).unwrap();
        let mut tau = 0.0;
        for ti in &t[1..] {
            tau += 0.1;
            assert_eq!(*ti, tau);
        }
        let t = real_time_map(&[2.0; 5], 0.25).unwrap();
        assert_eq!(t[4], 0.5);
        let h = 1e-3;
        let s: Vec<f64> = (0..=1000).map(|i| (i as f64 * h).exp()).collect();
        let t = real_time_map(&s, h).unwrap();
        assert!((t[1000] - (1.0 - (-1f64).exp())).abs() < 1e-6);
        assert!(real_time_map(&[1.0, 0.0], 0.1).is_err());
    }
}
