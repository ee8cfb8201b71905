use serde::{Deserialize, Serialize};

use super::residual::{balance_report, BalanceEntry, BalanceSpec};
use crate::error::{Error, Result};
use crate::fields::FieldSet;

/// Least-squares fit of `ln value = c + slope · ln size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
}

pub fn fit_log_log(sizes: &[usize], values: &[f64]) -> Result<ConvergenceFit> {
    let n = sizes.len();
    if n < 3 || values.len() != n {
        return Err(Error::TooFewSamples { needed: 3, got: n.min(values.len()) });
    }
    let fit = |slope, slope_stderr| ConvergenceFit { sizes: sizes.to_vec(), values: values.to_vec(), slope, slope_stderr };
    if values.iter().all(|v| *v == values[0]) {
        return Ok(fit(0.0, 0.0));
    }
    if values.iter().any(|v| !(*v > 0.0)) || sizes.iter().any(|s| *s == 0) {
        return Err(Error::InvalidParameter { name: "values", reason: "log-log fit needs positive data".into() });
    }
    let x: Vec<f64> = sizes.iter().map(|s| (*s as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - ym - slope * (a - xm)).powi(2)).sum();
    Ok(fit(slope, (ssr / (n as f64 - 2.0) / sxx).sqrt()))
}

/// Statistical part of a residual, `‖R_A − R_B‖ / √2`, from two independent
/// ensembles of equal size evaluated on the same grid.
pub fn stochastic_residual(a: &BalanceEntry, b: &BalanceEntry) -> Result<f64> {
    if a.values.len() != b.values.len() || a.order != b.order {
        return Err(Error::InvalidParameter { name: "entries", reason: "residuals live on different grids".into() });
    }
    let c = a.ncomp();
    let mut acc = 0.0;
    for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if a.mask[i / c] && b.mask[i / c] {
            acc += (x - y) * (x - y);
        }
    }
    Ok((acc / 2.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: BalanceSpec,
    pub balances: Vec<(String, ConvergenceFit)>,
}

/// Sweeps ensemble sizes; `fields(m, half)` must return fields from two
/// independent halves (`half ∈ {0, 1}`) of size `m` each.
pub fn convergence_report<F>(sizes: &[usize], spec: &BalanceSpec, mut fields: F) -> Result<ConvergenceReport>
where
    F: FnMut(usize, usize) -> Result<FieldSet>,
{
    if sizes.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: sizes.len() });
    }
    let mut per_balance: Vec<(String, Vec<f64>)> = Vec::new();
    for &m in sizes {
        let a = balance_report(&fields(m, 0)?, spec)?;
        let b = balance_report(&fields(m, 1)?, spec)?;
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            let r = stochastic_residual(ea, eb)?;
            match per_balance.iter_mut().find(|p| p.0 == ea.name) {
                Some(p) => p.1.push(r),
                None => per_balance.push((ea.name.clone(), vec![r])),
            }
        }
    }
    let balances = per_balance
        .into_iter()
        .map(|(name, v)| fit_log_log(sizes, &v).map(|f| (name, f)))
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport { spec: *spec, balances })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let f = fit_log_log(&[64, 256, 1024], &[1.0, 0.5, 0.25]).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn needs_three_points() {
        assert!(matches!(fit_log_log(&[1, 4], &[1.0, 0.5]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn constant_residual_has_zero_slope() {
        assert_eq!(fit_log_log(&[1, 4, 16], &[0.0; 3]).unwrap().slope, 0.0);
    }
}
