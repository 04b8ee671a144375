//! Bandwidth-free density estimation from the empirical characteristic function.
//!
//! A fit proceeds in four steps: the ECF `C(t)` is evaluated on the frequency grid
//! conjugate to the spatial grid, a flood fill from `t = 0` keeps the contiguous set of
//! frequencies with `|C(t)|^2 >= 4(n-1)/n^2`, the optimal kernel `kappa(t)` is applied to
//! `C(t)` on that set, and the product is inverted back onto the spatial grid.

mod baseline;
mod density;
mod ecf;
mod fft;
mod filter;
mod grid;
mod kernel;

pub use baseline::{baseline_kde_fit, loo_kde_fit, silverman_bandwidth, BandwidthRule};
pub use density::{
    sce_fit, sce_fit_on_support, DensityEstimate, OutsidePolicy, DEFAULT_FLOOR_EPSILON,
};
pub use ecf::{ecf_eval, EcfGrid, EcfMode, AUTO_EXACT_BUDGET};
pub use filter::{build_filter, filter_threshold, FilterMask};
pub use grid::{
    AxisGrid, FrequencyGrid, GridConfig, DEFAULT_PADDING, DEFAULT_POINTS_1D, DEFAULT_POINTS_2D,
};
pub use kernel::{fixed_point_iterate, kappa, transform_kernel, FixedPoint, TransformKernelGrid};

use crate::error::{AmiError, Result};

/// Borrowed observations in one or two dimensions.
#[derive(Debug, Clone, Copy)]
pub enum PointSet<'a> {
    Line(&'a [f64]),
    Plane(&'a [[f64; 2]]),
}

impl PointSet<'_> {
    pub fn dims(&self) -> usize {
        match self {
            PointSet::Line(_) => 1,
            PointSet::Plane(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Line(p) => p.len(),
            PointSet::Plane(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate `d` of observation `j`.
    pub fn coord(&self, j: usize, d: usize) -> f64 {
        match self {
            PointSet::Line(p) => p[j],
            PointSet::Plane(p) => p[j][d],
        }
    }

    pub(crate) fn write_point(&self, j: usize, out: &mut [f64; 2]) {
        match self {
            PointSet::Line(p) => out[0] = p[j],
            PointSet::Plane(p) => *out = p[j],
        }
    }

    /// Minimum and maximum of coordinate `d`.
    pub fn range(&self, d: usize) -> (f64, f64) {
        (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
            let v = self.coord(j, d);
            (lo.min(v), hi.max(v))
        })
    }

    /// Fails on empty input or a non-finite coordinate.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(AmiError::EmptyData);
        }
        for j in 0..self.len() {
            for d in 0..self.dims() {
                if !self.coord(j, d).is_finite() {
                    return Err(AmiError::NonFinite { index: j });
                }
            }
        }
        Ok(())
    }
}
