use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::density::{from_grid_values, DensityEstimate};
use super::grid::GridConfig;
use super::PointSet;
use crate::error::{AmiError, Result};

/// Bandwidth choice for the Gaussian-kernel baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `0.9 min(sd, IQR / 1.34) n^(-1/5)` per axis.
    Silverman,
    /// Explicit bandwidth per axis.
    Fixed(Vec<f64>),
}

/// Silverman's rule of thumb for coordinate `d`. A sample without spread falls back to unit
/// scale, so a single point still yields a bump.
pub fn silverman_bandwidth(points: PointSet<'_>, d: usize) -> f64 {
    let n = points.len();
    let mut v: Vec<f64> = (0..n).map(|j| points.coord(j, d)).collect();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let q = |p: f64| {
        let h = p * (n - 1) as f64;
        let i = h.floor() as usize;
        let j = (i + 1).min(n - 1);
        v[i] + (h - i as f64) * (v[j] - v[i])
    };
    let iqr = q(0.75) - q(0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => 1.0,
    };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Gaussian product-kernel density evaluated directly at every grid node, then normalized by
/// trapezoidal quadrature.
pub fn baseline_kde_fit(points: PointSet<'_>, grid: &GridConfig, rule: &BandwidthRule) -> Result<DensityEstimate> {
    points.validate()?;
    if points.dims() != grid.dims() {
        return Err(AmiError::InvalidGrid(format!(
            "{}-dimensional data on a {}-dimensional grid",
            points.dims(),
            grid.dims()
        )));
    }
    let h: Vec<f64> = match rule {
        BandwidthRule::Silverman => (0..grid.dims()).map(|d| silverman_bandwidth(points, d)).collect(),
        BandwidthRule::Fixed(h) => {
            if h.len() != grid.dims() || h.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
                return Err(AmiError::InvalidParameter(format!("bad bandwidths {h:?}")));
            }
            h.clone()
        }
    };
    let values = kde_on_grid(points, grid, &h);
    from_grid_values(grid.clone(), values, points.len())
}

/// Gaussian KDE whose bandwidth maximizes the leave-one-out log-likelihood over multiples of
/// the Silverman bandwidth (one-dimensional data only).
pub fn loo_kde_fit(points: &[f64], grid: &GridConfig, candidates: usize) -> Result<(DensityEstimate, f64)> {
    let set = PointSet::Line(points);
    set.validate()?;
    if grid.dims() != 1 {
        return Err(AmiError::InvalidGrid("leave-one-out tuning is one-dimensional".into()));
    }
    if points.len() < 2 || candidates == 0 {
        return Err(AmiError::TooFewObservations { need: 2, got: points.len() });
    }
    let h0 = silverman_bandwidth(set, 0);
    let n = points.len();
    let mut best = (f64::NEG_INFINITY, h0);
    for c in 0..candidates {
        // multipliers spaced geometrically over [0.25, 4]
        let t = if candidates == 1 { 0.5 } else { c as f64 / (candidates - 1) as f64 };
        let h = h0 * 16f64.powf(t) / 4.0;
        let inv = 1.0 / (2.0 * h * h);
        let norm = 1.0 / ((n - 1) as f64 * h * (2.0 * PI).sqrt());
        let mut ll = 0.0;
        for (i, &xi) in points.iter().enumerate() {
            let s: f64 = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (-(xi - xj) * (xi - xj) * inv).exp())
                .sum();
            ll += (s * norm).max(1e-300).ln();
        }
        if ll > best.0 {
            best = (ll, h);
        }
    }
    let values = kde_on_grid(set, grid, &[best.1]);
    Ok((from_grid_values(grid.clone(), values, n)?, best.1))
}

fn kde_on_grid(points: PointSet<'_>, grid: &GridConfig, h: &[f64]) -> Vec<f64> {
    let n = points.len();
    let axis_weights = |d: usize, j: usize| -> Vec<f64> {
        let a = grid.axis(d);
        let x = points.coord(j, d);
        let c = 1.0 / (h[d] * (2.0 * PI).sqrt());
        (0..a.points)
            .map(|i| {
                let z = (a.node(i) - x) / h[d];
                c * (-0.5 * z * z).exp()
            })
            .collect()
    };
    let mut out = vec![0.0; grid.len()];
    for j in 0..n {
        let w0 = axis_weights(0, j);
        if grid.dims() == 1 {
            for (o, w) in out.iter_mut().zip(&w0) {
                *o += w;
            }
        } else {
            let w1 = axis_weights(1, j);
            let m1 = w1.len();
            for (i, a) in w0.iter().enumerate() {
                for (o, b) in out[i * m1..(i + 1) * m1].iter_mut().zip(&w1) {
                    *o += a * b;
                }
            }
        }
    }
    for o in out.iter_mut() {
        *o /= n as f64;
    }
    out
}
