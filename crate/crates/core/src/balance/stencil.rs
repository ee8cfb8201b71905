use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Second-order central divergence of a vector (`order = 1`) or tensor
/// (`order = 2`, `(div T)_i = Σ_j ∂_j T_ji`) field at one time. Nodes on the
/// outermost layer have no stencil and are set to zero.
pub fn divergence(grid: &GridSpec, values: &[f64], order: u8) -> Result<Vec<f64>> {
    let s = grid.shape();
    if s.iter().any(|&n| n < 3) {
        return Err(Error::GridTooSmall("divergence needs at least three nodes per axis".into()));
    }
    let nodes = grid.node_count();
    let (cin, cout) = match order {
        1 => (3, 1),
        2 => (9, 3),
        _ => return Err(Error::InvalidParameter { name: "order", reason: "divergence needs a vector or tensor field".into() }),
    };
    if values.len() != nodes * cin {
        return Err(Error::InvalidParameter { name: "values", reason: "length does not match grid".into() });
    }
    let strides = [s[1] * s[2], s[2], 1];
    let inv = 1.0 / (2.0 * grid.dx);
    let mut out = vec![0.0; nodes * cout];
    for node in 0..nodes {
        let ijk = grid.unflatten(node);
        if (0..3).any(|a| ijk[a] == 0 || ijk[a] + 1 == s[a]) {
            continue;
        }
        for i in 0..cout {
            let mut acc = 0.0;
            for (j, &st) in strides.iter().enumerate() {
                let comp = if order == 1 { j } else { 3 * j + i };
                acc += (values[(node + st) * cin + comp] - values[(node - st) * cin + comp]) * inv;
            }
            out[node * cout + i] = acc;
        }
    }
    Ok(out)
}

/// Central differences in time; the two endpoints are dropped.
pub fn time_derivative(series: &[&[f64]], dt: f64) -> Result<Vec<Vec<f64>>> {
    if series.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: series.len() });
    }
    Ok((1..series.len() - 1).map(|t| central(series[t - 1], series[t + 1], dt)).collect())
}

pub(crate) fn central(before: &[f64], after: &[f64], dt: f64) -> Vec<f64> {
    before.iter().zip(after).map(|(a, b)| (b - a) / (2.0 * dt)).collect()
}
