//! Append-only time series of phase vectors with paired virtual/physical clocks.

use serde::{Deserialize, Serialize};

use crate::dynamics::Backend;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub t: f64,
    pub z: Vec<f64>,
}

/// Which time axis a query refers to. They coincide except for NH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    #[default]
    Virtual,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    backend: Backend,
    particles: usize,
    dtau: f64,
    record_every: usize,
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(backend: Backend, particles: usize, dtau: f64, record_every: usize) -> Self {
        Trajectory { backend, particles, dtau, record_every, samples: Vec::new() }
    }

    /// Appends a sample; both clocks must strictly increase.
    pub fn push(&mut self, s: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(s.tau > last.tau && s.t > last.t) {
                return Err(Error::StateInvariant { step: self.samples.len(), reason: "clock not strictly increasing".into() });
            }
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn clock_value(s: &Sample, clock: Clock) -> f64 {
        match clock {
            Clock::Virtual => s.tau,
            Clock::Physical => s.t,
        }
    }

    pub fn span(&self, clock: Clock) -> (f64, f64) {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (Self::clock_value(a, clock), Self::clock_value(b, clock)),
            _ => (f64::NAN, f64::NAN),
        }
    }

    /// Phase vector at `time` on the chosen clock, linear between stored samples.
    /// Queries within `1e-9 Δτ` of a stored sample return it unchanged.
    pub fn state_at(&self, time: f64, clock: Clock) -> Result<Vec<f64>> {
        let (start, end) = self.span(clock);
        let snap = 1e-9 * self.dtau;
        if self.samples.is_empty() || !(time >= start - snap && time <= end + snap) {
            return Err(Error::TimeOutOfRange { time, start, end });
        }
        let idx = self.samples.partition_point(|s| Self::clock_value(s, clock) < time);
        for cand in [idx.wrapping_sub(1), idx] {
            if let Some(s) = self.samples.get(cand) {
                if (Self::clock_value(s, clock) - time).abs() <= snap {
                    return Ok(s.z.clone());
                }
            }
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let (ta, tb) = (Self::clock_value(a, clock), Self::clock_value(b, clock));
        let w = (time - ta) / (tb - ta);
        Ok(a.z.iter().zip(&b.z).map(|(x, y)| x + w * (y - x)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj() -> Trajectory {
        let mut t = Trajectory::new(Backend::Nh, 1, 0.5, 1);
        t.push(Sample { tau: 0.0, t: 0.0, z: vec![0.0, 1.0] }).unwrap();
        t.push(Sample { tau: 0.5, t: 0.25, z: vec![1.0, 3.0] }).unwrap();
        t.push(Sample { tau: 1.0, t: 0.5, z: vec![3.0, 3.0] }).unwrap();
        t
    }

    #[test]
    fn node_pass_through_and_interpolation() {
        let t = traj();
        assert_eq!(t.state_at(0.5, Clock::Virtual).unwrap(), vec![1.0, 3.0]);
        assert_eq!(t.state_at(0.25, Clock::Physical).unwrap(), vec![1.0, 3.0]);
        assert_eq!(t.state_at(0.75, Clock::Virtual).unwrap(), vec![2.0, 3.0]);
        assert_eq!(t.state_at(0.125, Clock::Physical).unwrap(), vec![0.5, 2.0]);
        assert!(matches!(t.state_at(1.5, Clock::Virtual), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn rejects_non_increasing_clock() {
        let mut t = traj();
        assert!(t.push(Sample { tau: 1.0, t: 0.6, z: vec![0.0, 0.0] }).is_err());
    }
}
