use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::PointSet;
use crate::error::{AmiError, Result};

/// Default number of spatial nodes for one-dimensional fits.
pub const DEFAULT_POINTS_1D: usize = 1024;
/// Default number of spatial nodes per axis for two-dimensional fits.
pub const DEFAULT_POINTS_2D: usize = 256;
/// Default fraction of the data range added on each side of the domain.
pub const DEFAULT_PADDING: f64 = 0.25;

/// One axis of the spatial grid: `points` equally spaced nodes from `lower` to `upper`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl AxisGrid {
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }

    /// Length of one period of the discrete Fourier representation.
    pub fn period(&self) -> f64 {
        self.points as f64 * self.spacing()
    }

    /// Spacing of the conjugate frequency grid.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * PI / self.period()
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.upper <= self.lower {
            return Err(AmiError::InvalidGrid(format!(
                "bounds [{}, {}] are not an increasing finite interval",
                self.lower, self.upper
            )));
        }
        if self.points < 16 || !self.points.is_power_of_two() {
            return Err(AmiError::InvalidGrid(format!(
                "{} nodes per axis; need a power of two >= 16",
                self.points
            )));
        }
        Ok(())
    }
}

/// Spatial grid on which densities are represented, in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    axes: Vec<AxisGrid>,
    padding_factor: f64,
}

impl GridConfig {
    pub fn new(axes: Vec<AxisGrid>, padding_factor: f64) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(AmiError::InvalidGrid(format!(
                "{} dimensions; only 1 or 2 are supported",
                axes.len()
            )));
        }
        if !(padding_factor >= 0.0 && padding_factor.is_finite()) {
            return Err(AmiError::InvalidGrid(format!(
                "padding factor {padding_factor} must be finite and >= 0"
            )));
        }
        for axis in &axes {
            axis.validate()?;
        }
        Ok(Self {
            axes,
            padding_factor,
        })
    }

    /// Grid spanning the data range of every axis, widened by `padding_factor` times the
    /// range on each side.
    pub fn from_data(points: PointSet<'_>, points_per_dim: usize, padding_factor: f64) -> Result<Self> {
        points.validate()?;
        let axes = (0..points.dims())
            .map(|d| {
                let (lo, hi) = points.range(d);
                let pad = padding_factor * (hi - lo);
                AxisGrid {
                    lower: lo - pad,
                    upper: hi + pad,
                    points: points_per_dim,
                }
            })
            .collect();
        let grid = Self::new(axes, padding_factor)?;
        grid.check_strictly_contains(points)?;
        Ok(grid)
    }

    /// Square grid over `[-delta, 1 + delta]^2` whose spacing is `1/q` for an integer `q`, so
    /// that 0 and 1 fall exactly on nodes. `delta` is the padding factor rounded to the grid.
    pub fn unit_square(points_per_dim: usize, padding_factor: f64) -> Result<Self> {
        if points_per_dim < 16 || !points_per_dim.is_power_of_two() {
            return Err(AmiError::InvalidGrid(format!(
                "{points_per_dim} nodes per axis; need a power of two >= 16"
            )));
        }
        if !(padding_factor > 0.0 && padding_factor.is_finite()) {
            return Err(AmiError::InvalidGrid(format!(
                "unit-square padding {padding_factor} must be positive"
            )));
        }
        // points - 1 = q + 2p intervals, with p / q as close to the padding factor as possible.
        let intervals = points_per_dim - 1;
        let mut q = (intervals as f64 / (1.0 + 2.0 * padding_factor)).round() as usize;
        if (intervals - q) % 2 == 1 {
            q += 1;
        }
        let p = (intervals - q) / 2;
        if p == 0 {
            return Err(AmiError::InvalidGrid(
                "padding too small to leave a node outside [0, 1]".into(),
            ));
        }
        let dx = 1.0 / q as f64;
        let axis = AxisGrid {
            lower: -(p as f64) * dx,
            upper: (q + p) as f64 * dx,
            points: points_per_dim,
        };
        Self::new(vec![axis, axis], p as f64 / q as f64)
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &AxisGrid {
        &self.axes[d]
    }

    pub fn padding_factor(&self) -> f64 {
        self.padding_factor
    }

    /// Total number of spatial nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frequency_grid(&self) -> FrequencyGrid {
        FrequencyGrid::conjugate_to(self)
    }

    /// True when `point` lies strictly inside the grid bounds.
    pub fn strictly_contains(&self, point: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(point)
            .all(|(a, &v)| v > a.lower && v < a.upper)
    }

    pub(crate) fn check_strictly_contains(&self, points: PointSet<'_>) -> Result<()> {
        if points.dims() != self.dims() {
            return Err(AmiError::InvalidGrid(format!(
                "{}-dimensional data on a {}-dimensional grid",
                points.dims(),
                self.dims()
            )));
        }
        let mut buf = [0.0; 2];
        for j in 0..points.len() {
            points.write_point(j, &mut buf);
            if !self.strictly_contains(&buf[..self.dims()]) {
                return Err(AmiError::OutsideDomain { index: j });
            }
        }
        Ok(())
    }
}

/// Discrete frequencies conjugate to a [`GridConfig`]: `t = k * dt` for integer
/// `k` in `-half..=half` on each axis, where `half = points / 2 - 1`.
///
/// The Nyquist node `k = -points / 2` is left out so the grid is closed under negation.
/// A one-dimensional grid is stored as a lattice whose second axis holds the single
/// node `k = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    spacing: [f64; 2],
    half: [usize; 2],
    dims: usize,
}

impl FrequencyGrid {
    pub fn conjugate_to(grid: &GridConfig) -> Self {
        let mut spacing = [0.0; 2];
        let mut half = [0usize; 2];
        for (d, axis) in grid.axes().iter().enumerate() {
            spacing[d] = axis.frequency_spacing();
            half[d] = axis.points / 2 - 1;
        }
        Self {
            spacing,
            half,
            dims: grid.dims(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.spacing[d]
    }

    /// Largest index magnitude on axis `d`.
    pub fn half(&self, d: usize) -> usize {
        self.half[d]
    }

    /// Nodes along axis `d`.
    pub fn len_axis(&self, d: usize) -> usize {
        2 * self.half[d] + 1
    }

    /// Total number of frequency nodes.
    pub fn len(&self) -> usize {
        self.len_axis(0) * self.len_axis(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequencies along axis `d`, ascending.
    pub fn freqs(&self, d: usize) -> Vec<f64> {
        let h = self.half[d] as i64;
        (-h..=h).map(|k| k as f64 * self.spacing[d]).collect()
    }

    pub fn contains(&self, k: [i64; 2]) -> bool {
        k[0].unsigned_abs() as usize <= self.half[0] && k[1].unsigned_abs() as usize <= self.half[1]
    }

    /// Flat storage index of lattice node `k` (row-major, first axis slowest).
    pub fn flat(&self, k: [i64; 2]) -> usize {
        debug_assert!(self.contains(k));
        let row = (k[0] + self.half[0] as i64) as usize;
        let col = (k[1] + self.half[1] as i64) as usize;
        row * self.len_axis(1) + col
    }

    /// Lattice node stored at flat index `i`.
    pub fn lattice(&self, i: usize) -> [i64; 2] {
        let w = self.len_axis(1);
        [
            (i / w) as i64 - self.half[0] as i64,
            (i % w) as i64 - self.half[1] as i64,
        ]
    }

    pub fn zero_index(&self) -> usize {
        self.flat([0, 0])
    }

    /// Frequency vector of lattice node `k`.
    pub fn frequency(&self, k: [i64; 2]) -> [f64; 2] {
        [k[0] as f64 * self.spacing[0], k[1] as f64 * self.spacing[1]]
    }

    /// Face-adjacent lattice neighbours of `k` that lie on the grid.
    pub fn neighbours(&self, k: [i64; 2]) -> impl Iterator<Item = [i64; 2]> + '_ {
        let steps: &[[i64; 2]] = if self.dims == 1 {
            &[[1, 0], [-1, 0]]
        } else {
            &[[1, 0], [-1, 0], [0, 1], [0, -1]]
        };
        steps
            .iter()
            .map(move |s| [k[0] + s[0], k[1] + s[1]])
            .filter(move |n| self.contains(*n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_axes() {
        let bad = |lower, upper, points| GridConfig::new(vec![AxisGrid { lower, upper, points }], 0.25);
        assert!(bad(0.0, 1.0, 100).is_err());
        assert!(bad(0.0, 1.0, 8).is_err());
        assert!(bad(1.0, 1.0, 64).is_err());
        assert!(bad(0.0, f64::NAN, 64).is_err());
        assert!(bad(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn from_data_pads_each_side() {
        let data = [0.0, 4.0, 2.0];
        let g = GridConfig::from_data(PointSet::Line(&data), 64, 0.25).unwrap();
        assert_eq!(g.axis(0).lower, -1.0);
        assert_eq!(g.axis(0).upper, 5.0);
        // zero padding puts the extremes on the boundary
        assert!(GridConfig::from_data(PointSet::Line(&data), 64, 0.0).is_err());
    }

    #[test]
    fn unit_square_has_nodes_at_zero_and_one() {
        let g = GridConfig::unit_square(256, 0.25).unwrap();
        let a = g.axis(0);
        let dx = a.spacing();
        let i0 = (-a.lower / dx).round();
        let i1 = ((1.0 - a.lower) / dx).round();
        assert!((a.node(i0 as usize)).abs() < 1e-12);
        assert!((a.node(i1 as usize) - 1.0).abs() < 1e-12);
        assert!((g.padding_factor() - 0.25).abs() < 0.01);
    }

    #[test]
    fn frequency_grid_is_symmetric_and_contains_zero() {
        let g = GridConfig::new(
            vec![AxisGrid { lower: -1.0, upper: 2.0, points: 32 }],
            0.25,
        )
        .unwrap();
        let f = g.frequency_grid();
        let t = f.freqs(0);
        assert_eq!(t.len(), 31);
        assert_eq!(t[15], 0.0);
        for i in 0..t.len() {
            assert_eq!(t[i], -t[t.len() - 1 - i]);
        }
        assert_eq!(f.len(), 31);
        assert_eq!(f.lattice(f.zero_index()), [0, 0]);
    }

    #[test]
    fn flat_and_lattice_are_inverse() {
        let g = GridConfig::unit_square(16, 0.25).unwrap();
        let f = g.frequency_grid();
        for i in 0..f.len() {
            assert_eq!(f.flat(f.lattice(i)), i);
        }
    }
}
