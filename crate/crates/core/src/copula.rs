//! Rank transforms to the unit square and copula density fits.

use serde::{Deserialize, Serialize};

use crate::error::{AmiError, Result};
use crate::sample::Sample;
use crate::sce::{
    sce_fit_on_support, DensityEstimate, EcfMode, GridConfig, OutsidePolicy, PointSet, DEFAULT_PADDING,
    DEFAULT_POINTS_2D,
};
use crate::warning::Warning;

/// How pseudo-observations were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformRule {
    /// Midrank over `n + 1` within the same sample.
    Rank,
    /// Position within a separate reference sample.
    Reference,
}

/// Pairs `(u, v)` strictly inside the unit square, tagged with the rows they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservations {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub ids: Vec<usize>,
    pub rule: TransformRule,
}

impl PseudoObservations {
    /// Rank transform of both columns of `sample`.
    pub fn from_sample(sample: &Sample) -> Result<Self> {
        Ok(Self {
            u: ecdf_transform(sample.x())?,
            v: ecdf_transform(sample.y())?,
            ids: (0..sample.len()).collect(),
            rule: TransformRule::Rank,
        })
    }

    /// Transform of `sample` through the marginals of `reference`.
    pub fn with_reference(sample: &Sample, reference: &Sample) -> Result<Self> {
        Ok(Self {
            u: transform_with_reference(sample.x(), reference.x())?,
            v: transform_with_reference(sample.y(), reference.y())?,
            ids: (0..sample.len()).collect(),
            rule: TransformRule::Reference,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.u.iter().zip(&self.v).map(|(&u, &v)| [u, v]).collect()
    }
}

/// `rank / (n + 1)`, with tied values sharing their mean rank.
pub fn ecdf_transform(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(AmiError::TooFewObservations { need: 2, got: n });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(AmiError::NonFinite { index });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let denom = (n + 1) as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank / denom;
        }
        start = end;
    }
    Ok(out)
}

/// Position of each new value within `reference`:
/// `(#{ref < x} + #{ref == x} / 2 + 1/2) / (n_ref + 1)`.
pub fn transform_with_reference(new_values: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if reference.is_empty() {
        return Err(AmiError::EmptyData);
    }
    if let Some(index) = new_values.iter().position(|v| !v.is_finite()) {
        return Err(AmiError::NonFinite { index });
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (sorted.len() + 1) as f64;
    Ok(new_values
        .iter()
        .map(|&x| {
            let less = sorted.partition_point(|&r| r < x);
            let not_more = sorted.partition_point(|&r| r <= x);
            (less as f64 + 0.5 * (not_more - less) as f64 + 0.5) / denom
        })
        .collect())
}

/// Grid for copula fits: `points_per_dim` nodes per axis over the padded unit square.
pub fn copula_grid(points_per_dim: usize) -> Result<GridConfig> {
    GridConfig::unit_square(points_per_dim, DEFAULT_PADDING)
}

/// Default copula grid (256 x 256).
pub fn default_copula_grid() -> GridConfig {
    copula_grid(DEFAULT_POINTS_2D).expect("default grid is valid")
}

/// Copula density estimate with any warnings raised while fitting.
#[derive(Debug, Clone)]
pub struct CopulaFit {
    pub density: DensityEstimate,
    pub warnings: Vec<Warning>,
}

/// Fits the copula density on the padded square and renormalizes it over `[0, 1]^2`.
/// Evaluation outside the unit square is an error.
pub fn fit_copula_density(pseudo: &PseudoObservations, grid: &GridConfig, mode: EcfMode) -> Result<CopulaFit> {
    if pseudo.len() < 4 {
        return Err(AmiError::TooFewObservations {
            need: 4,
            got: pseudo.len(),
        });
    }
    if let Some(i) = pseudo
        .u
        .iter()
        .zip(&pseudo.v)
        .position(|(&u, &v)| !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
    {
        return Err(AmiError::OutsideDomain { index: i });
    }
    let mut warnings = Vec::new();
    let same = pseudo.u.iter().zip(&pseudo.v).all(|(u, v)| (u - v).abs() < 1e-12);
    let opposite = pseudo.u.iter().zip(&pseudo.v).all(|(u, v)| (u + v - 1.0).abs() < 1e-12);
    if same || opposite {
        warnings.push(Warning::DegenerateCopula {
            detail: format!(
                "pairs are perfectly {}; the copula density is unbounded",
                if same { "comonotone" } else { "countermonotone" }
            ),
        });
    }
    let points = pseudo.points();
    let density = sce_fit_on_support(
        PointSet::Plane(&points),
        grid,
        mode,
        &[(0.0, 1.0), (0.0, 1.0)],
        OutsidePolicy::Reject,
    )?;
    Ok(CopulaFit { density, warnings })
}
