use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::ecf::{binned_centered, lower_corner, shift, EcfMode, LazyExact, AUTO_EXACT_BUDGET};
use super::fft;
use super::filter::{filter_threshold, flood_fill, Region};
use super::grid::GridConfig;
use super::kernel::kappa;
use super::PointSet;
use crate::error::{AmiError, Result};

/// Density floor applied before taking logarithms.
pub const DEFAULT_FLOOR_EPSILON: f64 = 1e-12;

/// What evaluation does with a query point outside the estimate's support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsidePolicy {
    /// Return the floor value.
    Floor,
    /// Fail with [`AmiError::OutsideSupport`].
    Reject,
}

/// A density on a spatial grid, normalized to unit mass over its support.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    grid: GridConfig,
    values: Vec<f64>,
    /// Transform of the estimate before clipping, on the filtered frequencies only.
    phi_nodes: Vec<[i64; 2]>,
    phi_values: Vec<Complex64>,
    pre_clip_mass: f64,
    support_fraction: f64,
    floor_epsilon: f64,
    support: [(usize, usize); 2],
    policy: OutsidePolicy,
    n: usize,
    mode: EcfMode,
}

/// Fits the self-consistent estimate of `points` on `grid`, normalized over the whole grid.
pub fn sce_fit(points: PointSet<'_>, grid: &GridConfig, mode: EcfMode) -> Result<DensityEstimate> {
    let support: Vec<(f64, f64)> = grid.axes().iter().map(|a| (a.lower, a.upper)).collect();
    sce_fit_on_support(points, grid, mode, &support, OutsidePolicy::Floor)
}

/// Fits on `grid` but normalizes over the box `support`, whose faces must lie on grid nodes.
/// Queries outside the box follow `policy`.
pub fn sce_fit_on_support(
    points: PointSet<'_>,
    grid: &GridConfig,
    mode: EcfMode,
    support: &[(f64, f64)],
    policy: OutsidePolicy,
) -> Result<DensityEstimate> {
    points.validate()?;
    let n = points.len();
    if n < 4 {
        return Err(AmiError::TooFewObservations { need: 4, got: n });
    }
    grid.check_strictly_contains(points)?;
    for d in 0..points.dims() {
        let (lo, hi) = points.range(d);
        if hi <= lo {
            return Err(AmiError::Degenerate(format!(
                "all observations share coordinate {d} = {lo}"
            )));
        }
    }
    let support = support_indices(grid, support)?;

    let (region, mode) = filtered_region(points, grid, mode)?;
    let phi_a: Vec<Complex64> = region
        .values
        .iter()
        .map(|c| c * kappa(c.norm(), n))
        .collect();

    let mut values = invert(grid, &region.nodes, &phi_a);
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let pre_clip_mass = trapezoid(grid, &full_support(grid), &values);
    let mass = trapezoid(grid, &support, &values);
    if !(mass > 0.0) {
        return Err(AmiError::Degenerate("estimate has no positive mass on its support".into()));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }

    let freq = grid.frequency_grid();
    let a = lower_corner(grid);
    let phi_values = region
        .nodes
        .iter()
        .zip(&phi_a)
        .map(|(&k, p)| p * shift(&freq, k, a))
        .collect();
    Ok(DensityEstimate {
        grid: grid.clone(),
        values,
        phi_nodes: region.nodes,
        phi_values,
        pre_clip_mass,
        support_fraction: mass / pre_clip_mass,
        floor_epsilon: DEFAULT_FLOOR_EPSILON,
        support,
        policy,
        n,
        mode,
    })
}

/// ECF on the filtered region, relative to the grid's lower corner, and the mode that
/// produced it.
fn filtered_region(points: PointSet<'_>, grid: &GridConfig, mode: EcfMode) -> Result<(Region, EcfMode)> {
    let freq = grid.frequency_grid();
    let threshold = filter_threshold(points.len());
    let dense = |points| -> Result<(Region, EcfMode)> {
        let values = binned_centered(points, grid)?;
        let region = flood_fill(&freq, threshold, |k| Some(values[freq.flat(k)]))
            .expect("dense evaluation never aborts");
        Ok((region, EcfMode::Binned))
    };
    match mode {
        EcfMode::Binned => dense(points),
        EcfMode::Exact | EcfMode::Auto => {
            let budget = if mode == EcfMode::Exact {
                usize::MAX
            } else {
                AUTO_EXACT_BUDGET
            };
            let mut lazy = LazyExact::new(points, grid);
            let region = flood_fill(&freq, threshold, |k| {
                (lazy.work() <= budget).then(|| lazy.value(k))
            });
            match region {
                Some(region) => Ok((region, EcfMode::Exact)),
                None => dense(points),
            }
        }
    }
}

fn support_indices(grid: &GridConfig, support: &[(f64, f64)]) -> Result<[(usize, usize); 2]> {
    if support.len() != grid.dims() {
        return Err(AmiError::InvalidGrid(format!(
            "{} support intervals for a {}-dimensional grid",
            support.len(),
            grid.dims()
        )));
    }
    let mut out = [(0, 0); 2];
    for (d, &(lo, hi)) in support.iter().enumerate() {
        let axis = grid.axis(d);
        let dx = axis.spacing();
        let snap = |v: f64| -> Result<usize> {
            let pos = (v - axis.lower) / dx;
            let i = pos.round();
            if (pos - i).abs() > 1e-6 || i < 0.0 || i > (axis.points - 1) as f64 {
                return Err(AmiError::InvalidGrid(format!(
                    "support bound {v} is not a grid node on axis {d}"
                )));
            }
            Ok(i as usize)
        };
        let (a, b) = (snap(lo)?, snap(hi)?);
        if b <= a {
            return Err(AmiError::InvalidGrid(format!("empty support on axis {d}")));
        }
        out[d] = (a, b);
    }
    Ok(out)
}

/// Real part of the inverse transform of `phi_a` (given on `nodes`, relative to the lower
/// corner) at every spatial node, row-major.
fn invert(grid: &GridConfig, nodes: &[[i64; 2]], phi_a: &[Complex64]) -> Vec<f64> {
    let m0 = grid.axis(0).points;
    let scale0 = 1.0 / grid.axis(0).period();
    if grid.dims() == 1 {
        let mut buf = vec![Complex64::new(0.0, 0.0); m0];
        for (k, p) in nodes.iter().zip(phi_a) {
            buf[k[0].rem_euclid(m0 as i64) as usize] += p;
        }
        fft::plan(m0, FftDirection::Forward).process(&mut buf);
        return buf.iter().map(|v| v.re * scale0).collect();
    }

    let m1 = grid.axis(1).points;
    let scale = scale0 / grid.axis(1).period();
    let rows = nodes.iter().map(|k| k[0].max(0) as usize).max().unwrap_or(0) + 1;
    // G_k0[l1] = sum_k1 phi_a(k0, k1) exp(-2 pi i k1 l1 / m1) for k0 >= 0. Rows k0 < 0 are the
    // conjugates of rows -k0, so only the real part of the k0 > 0 terms is needed twice.
    let mut g = vec![Complex64::new(0.0, 0.0); rows * m1];
    for (k, p) in nodes.iter().zip(phi_a) {
        if k[0] >= 0 {
            g[k[0] as usize * m1 + k[1].rem_euclid(m1 as i64) as usize] += p;
        }
    }
    let plan = fft::plan(m1, FftDirection::Forward);
    for row in g.chunks_mut(m1) {
        plan.process(row);
    }
    let mut g_re = vec![0.0; rows * m1];
    let mut g_im = vec![0.0; rows * m1];
    for (i, v) in g.iter().enumerate() {
        let w = if i < m1 { scale } else { 2.0 * scale };
        g_re[i] = w * v.re;
        g_im[i] = w * v.im;
    }
    let mut out = vec![0.0; m0 * m1];
    for l0 in 0..m0 {
        let row = &mut out[l0 * m1..(l0 + 1) * m1];
        row.copy_from_slice(&g_re[..m1]);
        for k0 in 1..rows {
            let theta = 2.0 * PI * ((k0 * l0) % m0) as f64 / m0 as f64;
            let (s, c) = theta.sin_cos();
            let gr = &g_re[k0 * m1..(k0 + 1) * m1];
            let gi = &g_im[k0 * m1..(k0 + 1) * m1];
            for ((o, &r), &i) in row.iter_mut().zip(gr).zip(gi) {
                *o += c * r + s * i;
            }
        }
    }
    out
}

fn full_support(grid: &GridConfig) -> [(usize, usize); 2] {
    [
        (0, grid.axis(0).points - 1),
        (0, grid.axes().get(1).map_or(0, |a| a.points - 1)),
    ]
}

fn trapezoid(grid: &GridConfig, support: &[(usize, usize); 2], values: &[f64]) -> f64 {
    let weights = |d: usize| -> Vec<(usize, f64)> {
        let (a, b) = support[d];
        let dx = grid.axis(d).spacing();
        (a..=b)
            .map(|i| (i, if i == a || i == b { 0.5 * dx } else { dx }))
            .collect()
    };
    let w0 = weights(0);
    if grid.dims() == 1 {
        return w0.iter().map(|&(i, w)| w * values[i]).sum();
    }
    let m1 = grid.axis(1).points;
    let w1 = weights(1);
    w0.iter()
        .map(|&(i, wi)| wi * w1.iter().map(|&(j, wj)| wj * values[i * m1 + j]).sum::<f64>())
        .sum()
}

impl DensityEstimate {
    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    /// Density at every spatial node, row-major with the first axis slowest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mass over the whole grid of the raw estimate with negative lobes set to zero, before
    /// renormalization. It exceeds 1 by the negative mass that clipping removed.
    pub fn pre_clip_mass(&self) -> f64 {
        self.pre_clip_mass
    }

    /// Share of the clipped estimate's mass that fell inside the support before
    /// renormalization.
    pub fn support_fraction(&self) -> f64 {
        self.support_fraction
    }

    pub fn floor_epsilon(&self) -> f64 {
        self.floor_epsilon
    }

    pub fn with_floor_epsilon(mut self, floor: f64) -> Self {
        self.floor_epsilon = floor;
        self
    }

    pub fn policy(&self) -> OutsidePolicy {
        self.policy
    }

    /// Sample size the estimate was fitted on.
    pub fn n(&self) -> usize {
        self.n
    }

    /// ECF mode actually used, after resolving `Auto`.
    pub fn mode(&self) -> EcfMode {
        self.mode
    }

    /// Number of frequencies kept by the filter.
    pub fn filter_size(&self) -> usize {
        self.phi_nodes.len()
    }

    /// Support box in data units.
    pub fn support(&self) -> Vec<(f64, f64)> {
        (0..self.grid.dims())
            .map(|d| {
                let a = self.grid.axis(d);
                (a.node(self.support[d].0), a.node(self.support[d].1))
            })
            .collect()
    }

    /// Transformed estimate at lattice node `k`; zero outside the filter.
    pub fn phi_hat_at(&self, k: [i64; 2]) -> Complex64 {
        self.phi_nodes
            .iter()
            .position(|&q| q == k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.phi_values[i])
    }

    /// Transformed estimate on every node of the frequency grid.
    pub fn phi_hat(&self) -> Vec<Complex64> {
        let freq = self.grid.frequency_grid();
        let mut out = vec![Complex64::new(0.0, 0.0); freq.len()];
        for (&k, &v) in self.phi_nodes.iter().zip(&self.phi_values) {
            out[freq.flat(k)] = v;
        }
        out
    }

    /// Full complex inverse transform of the unclipped estimate (before normalization over
    /// the support). The imaginary part vanishes up to rounding.
    pub fn raw_inverse(&self) -> Vec<Complex64> {
        let freq = self.grid.frequency_grid();
        let a = lower_corner(&self.grid);
        let m0 = self.grid.axis(0).points;
        let m1 = if self.grid.dims() == 2 { self.grid.axis(1).points } else { 1 };
        let mut buf = vec![Complex64::new(0.0, 0.0); m0 * m1];
        for (&k, &v) in self.phi_nodes.iter().zip(&self.phi_values) {
            let i0 = k[0].rem_euclid(m0 as i64) as usize;
            let i1 = k[1].rem_euclid(m1 as i64) as usize;
            buf[i0 * m1 + i1] += v * shift(&freq, k, a).conj();
        }
        if self.grid.dims() == 1 {
            fft::plan(m0, FftDirection::Forward).process(&mut buf);
        } else {
            fft::transform_2d(&mut buf, m0, m1, FftDirection::Forward);
        }
        let scale: f64 = self.grid.axes().iter().map(|ax| 1.0 / ax.period()).product();
        buf.iter().map(|v| v * scale).collect()
    }

    /// Trapezoidal mass of the stored values over the support.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.support, &self.values)
    }

    /// Trapezoidal integrated squared error against `pdf` over the whole 1D grid.
    pub fn ise_1d(&self, pdf: impl Fn(f64) -> f64) -> Result<f64> {
        if self.grid.dims() != 1 {
            return Err(AmiError::InvalidParameter("ise_1d needs a one-dimensional estimate".into()));
        }
        let a = self.grid.axis(0);
        let dx = a.spacing();
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let e = v - pdf(a.node(i));
                let w = if i == 0 || i + 1 == a.points { 0.5 } else { 1.0 };
                w * e * e * dx
            })
            .sum())
    }

    fn in_support(&self, d: usize, v: f64) -> bool {
        let a = self.grid.axis(d);
        let dx = a.spacing();
        let lo = a.lower + self.support[d].0 as f64 * dx;
        let hi = a.lower + self.support[d].1 as f64 * dx;
        v >= lo - 1e-12 && v <= hi + 1e-12
    }

    /// Multilinear interpolation of the grid values at `point`.
    ///
    /// Points outside the support give the floor under [`OutsidePolicy::Floor`] and an error
    /// under [`OutsidePolicy::Reject`].
    pub fn density_at(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.grid.dims() {
            return Err(AmiError::InvalidParameter(format!(
                "{}-dimensional query on a {}-dimensional estimate",
                point.len(),
                self.grid.dims()
            )));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(AmiError::NonFinite { index: 0 });
        }
        if !(0..point.len()).all(|d| self.in_support(d, point[d])) {
            return match self.policy {
                OutsidePolicy::Floor => Ok(self.floor_epsilon),
                OutsidePolicy::Reject => Err(AmiError::OutsideSupport),
            };
        }
        let cell = |d: usize| {
            let a = self.grid.axis(d);
            let pos = ((point[d] - a.lower) / a.spacing()).clamp(0.0, (a.points - 1) as f64);
            let i = (pos.floor() as usize).min(a.points - 2);
            (i, pos - i as f64)
        };
        let (i0, f0) = cell(0);
        if self.grid.dims() == 1 {
            return Ok(self.values[i0] * (1.0 - f0) + self.values[i0 + 1] * f0);
        }
        let m1 = self.grid.axis(1).points;
        let (i1, f1) = cell(1);
        let v = |a: usize, b: usize| self.values[a * m1 + b];
        Ok((1.0 - f0) * ((1.0 - f1) * v(i0, i1) + f1 * v(i0, i1 + 1))
            + f0 * ((1.0 - f1) * v(i0 + 1, i1) + f1 * v(i0 + 1, i1 + 1)))
    }

    /// [`density_at`](Self::density_at) raised to at least the floor.
    pub fn density_at_clamped(&self, point: &[f64]) -> Result<f64> {
        Ok(self.density_at(point)?.max(self.floor_epsilon))
    }

    /// Log of the clamped density.
    pub fn log_density_at(&self, point: &[f64]) -> Result<f64> {
        Ok(self.density_at_clamped(point)?.ln())
    }

    /// Writes one row per spatial node: the coordinates under `dim_names`, then the density.
    pub fn write_csv<W: Write>(&self, writer: W, dim_names: &[&str]) -> Result<()> {
        if dim_names.len() != self.grid.dims() {
            return Err(AmiError::InvalidParameter(format!(
                "{} column names for a {}-dimensional estimate",
                dim_names.len(),
                self.grid.dims()
            )));
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = dim_names.to_vec();
        header.push("density");
        w.write_record(&header)?;
        let m1 = if self.grid.dims() == 2 { self.grid.axis(1).points } else { 1 };
        for (i, v) in self.values.iter().enumerate() {
            let mut row = vec![self.grid.axis(0).node(i / m1).to_string()];
            if self.grid.dims() == 2 {
                row.push(self.grid.axis(1).node(i % m1).to_string());
            }
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wraps node values computed elsewhere, clipped and normalized over the whole grid.
pub(crate) fn from_grid_values(grid: GridConfig, mut values: Vec<f64>, n: usize) -> Result<DensityEstimate> {
    let support = full_support(&grid);
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let pre_clip_mass = trapezoid(&grid, &support, &values);
    let mass = pre_clip_mass;
    if !(mass > 0.0) {
        return Err(AmiError::Degenerate("estimate has no positive mass on the grid".into()));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    Ok(DensityEstimate {
        grid,
        values,
        phi_nodes: vec![[0, 0]],
        phi_values: vec![Complex64::new(1.0, 0.0)],
        pre_clip_mass,
        support_fraction: 1.0,
        floor_epsilon: DEFAULT_FLOOR_EPSILON,
        support,
        policy: OutsidePolicy::Floor,
        n,
        mode: EcfMode::Exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sce::ecf::ecf_eval;
    use crate::sce::filter::build_filter;
    use crate::sce::grid::AxisGrid;
    use crate::sce::kernel::transform_kernel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn normal_pairs(n: usize, rho: f64, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                [a, rho * a + (1.0 - rho * rho).sqrt() * b]
            })
            .collect()
    }

    fn ise(est: &DensityEstimate, pdf: impl Fn(f64) -> f64) -> f64 {
        est.ise_1d(pdf).unwrap()
    }

    fn std_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn normal_density_at_zero() {
        let x = normal(1000, 1);
        let g = GridConfig::from_data(PointSet::Line(&x), 1024, 0.25).unwrap();
        let est = sce_fit(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        assert!((est.density_at(&[0.0]).unwrap() - 0.3989).abs() < 0.05);
        assert!((est.mass() - 1.0).abs() < 1e-9);
        assert!((est.phi_hat_at([0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(est.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_small_and_degenerate_samples() {
        let g = GridConfig::new(vec![AxisGrid { lower: -1.0, upper: 2.0, points: 64 }], 0.25).unwrap();
        assert!(matches!(
            sce_fit(PointSet::Line(&[0.0, 0.5, 1.0]), &g, EcfMode::Exact),
            Err(AmiError::TooFewObservations { need: 4, got: 3 })
        ));
        assert!(matches!(
            sce_fit(PointSet::Line(&[0.5; 6]), &g, EcfMode::Exact),
            Err(AmiError::Degenerate(_))
        ));
        assert!(matches!(
            sce_fit(PointSet::Line(&[0.0, 0.5, 1.0, 3.0]), &g, EcfMode::Exact),
            Err(AmiError::OutsideDomain { index: 3 })
        ));
    }

    #[test]
    fn imaginary_part_of_inverse_vanishes() {
        let x = normal(300, 2);
        let g = GridConfig::from_data(PointSet::Line(&x), 256, 0.25).unwrap();
        let est = sce_fit(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        let raw = est.raw_inverse();
        let max_im = raw.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-9, "{max_im}");

        let pts = normal_pairs(300, 0.5, 3);
        let g2 = GridConfig::from_data(PointSet::Plane(&pts), 64, 0.25).unwrap();
        let est2 = sce_fit(PointSet::Plane(&pts), &g2, EcfMode::Exact).unwrap();
        let raw2 = est2.raw_inverse();
        let max_im2 = raw2.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im2 < 1e-9, "{max_im2}");
    }

    #[test]
    fn fast_inversion_matches_full_transform() {
        let pts = normal_pairs(400, -0.3, 4);
        let g = GridConfig::from_data(PointSet::Plane(&pts), 64, 0.25).unwrap();
        let est = sce_fit(PointSet::Plane(&pts), &g, EcfMode::Exact).unwrap();
        let raw = est.raw_inverse();
        let freq = g.frequency_grid();
        let a = lower_corner(&g);
        let phi_a: Vec<Complex64> = est
            .phi_nodes
            .iter()
            .zip(&est.phi_values)
            .map(|(&k, v)| v * shift(&freq, k, a).conj())
            .collect();
        let fast = invert(&g, &est.phi_nodes, &phi_a);
        for (f, r) in fast.iter().zip(&raw) {
            assert!((f - r.re).abs() < 1e-12);
        }
    }

    #[test]
    fn pipeline_matches_public_stages() {
        let x = normal(500, 5);
        let g = GridConfig::from_data(PointSet::Line(&x), 512, 0.25).unwrap();
        let ecf = ecf_eval(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        let mask = build_filter(&ecf);
        let kern = transform_kernel(&ecf, &mask);
        let est = sce_fit(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        assert_eq!(est.filter_size(), mask.count());
        let dense = est.phi_hat();
        for i in 0..dense.len() {
            assert!((dense[i] - kern.values[i] * ecf.values[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn binned_matches_exact_on_filter() {
        let pts = normal_pairs(1000, 0.5, 6);
        let g = GridConfig::from_data(PointSet::Plane(&pts), 256, 0.25).unwrap();
        let exact = ecf_eval(PointSet::Plane(&pts), &g, EcfMode::Exact).unwrap();
        let binned = ecf_eval(PointSet::Plane(&pts), &g, EcfMode::Binned).unwrap();
        let mask = build_filter(&exact);
        let err = (0..exact.values.len())
            .filter(|&i| mask.included[i])
            .map(|i| (exact.values[i] - binned.values[i]).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");

        let x = normal(5000, 7);
        let g = GridConfig::from_data(PointSet::Line(&x), 1024, 0.25).unwrap();
        let exact = ecf_eval(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        let binned = ecf_eval(PointSet::Line(&x), &g, EcfMode::Binned).unwrap();
        let mask = build_filter(&exact);
        let err = (0..exact.values.len())
            .filter(|&i| mask.included[i])
            .map(|i| (exact.values[i] - binned.values[i]).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn larger_samples_usually_fit_better() {
        let mut wins = 0;
        for s in 0..50 {
            let small = normal(250, 1000 + s);
            let large = normal(2000, 2000 + s);
            let fit = |x: &[f64]| {
                let g = GridConfig::from_data(PointSet::Line(x), 1024, 0.25).unwrap();
                sce_fit(PointSet::Line(x), &g, EcfMode::Auto).unwrap()
            };
            if ise(&fit(&large), std_pdf) < ise(&fit(&small), std_pdf) {
                wins += 1;
            }
        }
        assert!(wins >= 45, "{wins}/50");
    }

    #[test]
    fn interpolation_identities() {
        let g = GridConfig::new(vec![AxisGrid { lower: 0.0, upper: 15.0, points: 16 }], 0.25).unwrap();
        let mut values = vec![0.0; 16];
        values[3] = 0.2;
        values[4] = 0.4;
        // unit mass on a unit-spaced grid, so normalization leaves the values unchanged
        values[10] = 0.4;
        let est = from_grid_values(g, values, 0).unwrap();
        assert!((est.density_at(&[3.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!((est.density_at(&[3.5]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(est.density_at(&[-1.0]).unwrap(), DEFAULT_FLOOR_EPSILON);
        assert_eq!(est.density_at(&[15.0]).unwrap(), 0.0);
        assert_eq!(est.density_at_clamped(&[15.0]).unwrap(), DEFAULT_FLOOR_EPSILON);
        assert!(matches!(est.density_at(&[f64::NAN]), Err(AmiError::NonFinite { .. })));
    }

    #[test]
    fn csv_export_has_header_and_all_nodes() {
        let x = normal(100, 8);
        let g = GridConfig::from_data(PointSet::Line(&x), 64, 0.25).unwrap();
        let est = sce_fit(PointSet::Line(&x), &g, EcfMode::Exact).unwrap();
        let mut out = Vec::new();
        est.write_csv(&mut out, &["x"]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,density"));
        assert_eq!(lines.count(), 64);
    }
}
