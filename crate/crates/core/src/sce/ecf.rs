use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::{FrequencyGrid, GridConfig};
use super::PointSet;
use crate::error::{AmiError, Result};

/// Point-frequency products that `Auto` mode spends on direct summation before it
/// switches to the binned transform.
pub const AUTO_EXACT_BUDGET: usize = 1 << 24;

/// How the empirical characteristic function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcfMode {
    /// Direct summation over observations.
    Exact,
    /// Cloud-in-cell deposit on the spatial grid followed by an FFT.
    Binned,
    /// Direct summation while the work stays within [`AUTO_EXACT_BUDGET`], binned otherwise.
    #[default]
    Auto,
}

/// Empirical characteristic function `C(t) = n^-1 sum_j exp(i t.X_j)` on every node of a
/// frequency grid, stored in the grid's flat layout.
#[derive(Debug, Clone)]
pub struct EcfGrid {
    pub freq: FrequencyGrid,
    pub values: Vec<Complex64>,
    pub n: usize,
}

impl EcfGrid {
    pub fn at(&self, k: [i64; 2]) -> Complex64 {
        self.values[self.freq.flat(k)]
    }
}

/// Evaluates the ECF of `points` on the full frequency grid conjugate to `grid`.
///
/// `Auto` resolves to `Exact` when `n` times the number of frequency nodes fits the budget.
pub fn ecf_eval(points: PointSet<'_>, grid: &GridConfig, mode: EcfMode) -> Result<EcfGrid> {
    points.validate()?;
    if points.dims() != grid.dims() {
        return Err(AmiError::InvalidGrid(format!(
            "{}-dimensional data on a {}-dimensional grid",
            points.dims(),
            grid.dims()
        )));
    }
    let freq = grid.frequency_grid();
    let n = points.len();
    let binned = match mode {
        EcfMode::Exact => false,
        EcfMode::Binned => true,
        EcfMode::Auto => n.saturating_mul(freq.len()) > AUTO_EXACT_BUDGET,
    };
    let mut values = if binned {
        binned_centered(points, grid)?
    } else {
        let mut lazy = LazyExact::new(points, grid);
        (0..freq.len()).map(|i| lazy.value(freq.lattice(i))).collect()
    };
    let lower = lower_corner(grid);
    for (i, v) in values.iter_mut().enumerate() {
        *v *= shift(&freq, freq.lattice(i), lower);
    }
    values[freq.zero_index()] = Complex64::new(1.0, 0.0);
    Ok(EcfGrid { freq, values, n })
}

pub(crate) fn lower_corner(grid: &GridConfig) -> [f64; 2] {
    let mut a = [0.0; 2];
    for (d, axis) in grid.axes().iter().enumerate() {
        a[d] = axis.lower;
    }
    a
}

/// `exp(i t.a)`, which converts a transform taken relative to corner `a` back to the origin.
pub(crate) fn shift(freq: &FrequencyGrid, k: [i64; 2], a: [f64; 2]) -> Complex64 {
    let t = freq.frequency(k);
    Complex64::from_polar(1.0, t[0] * a[0] + t[1] * a[1])
}

/// Direct summation of the ECF relative to the grid's lower corner,
/// `C_a(t) = n^-1 sum_j exp(i t.(X_j - a))`, evaluated one node at a time.
///
/// Powers `exp(i k dt (x_j - a))` are cached per axis, so a node costs `n` complex products.
pub(crate) struct LazyExact {
    n: usize,
    dims: usize,
    powers: [Vec<Vec<Complex64>>; 2],
    inv_n: f64,
    work: usize,
}

impl LazyExact {
    pub(crate) fn new(points: PointSet<'_>, grid: &GridConfig) -> Self {
        let n = points.len();
        let freq = grid.frequency_grid();
        let mut powers: [Vec<Vec<Complex64>>; 2] = [Vec::new(), Vec::new()];
        for d in 0..grid.dims() {
            let a = grid.axis(d).lower;
            let dt = freq.spacing(d);
            let base: Vec<Complex64> = (0..n)
                .map(|j| Complex64::from_polar(1.0, dt * (points.coord(j, d) - a)))
                .collect();
            powers[d] = vec![vec![Complex64::new(1.0, 0.0); n], base];
        }
        Self {
            n,
            dims: grid.dims(),
            powers,
            inv_n: 1.0 / n as f64,
            work: 0,
        }
    }

    /// Point-frequency products spent so far.
    pub(crate) fn work(&self) -> usize {
        self.work
    }

    fn ensure(&mut self, d: usize, k: usize) {
        let p = &mut self.powers[d];
        while p.len() <= k {
            let next: Vec<Complex64> = p[p.len() - 1].iter().zip(&p[1]).map(|(a, b)| a * b).collect();
            p.push(next);
        }
    }

    pub(crate) fn value(&mut self, k: [i64; 2]) -> Complex64 {
        let k0 = k[0].unsigned_abs() as usize;
        self.ensure(0, k0);
        self.work += self.n;
        if self.dims == 1 {
            let s: Complex64 = self.powers[0][k0].iter().sum();
            let s = s * self.inv_n;
            return if k[0] < 0 { s.conj() } else { s };
        }
        let k1 = k[1].unsigned_abs() as usize;
        self.ensure(1, k1);
        let sa = if k[0] < 0 { -1.0 } else { 1.0 };
        let sb = if k[1] < 0 { -1.0 } else { 1.0 };
        let (mut re, mut im) = (0.0, 0.0);
        for (a, b) in self.powers[0][k0].iter().zip(&self.powers[1][k1]) {
            let ai = sa * a.im;
            let bi = sb * b.im;
            re += a.re * b.re - ai * bi;
            im += a.re * bi + ai * b.re;
        }
        Complex64::new(re * self.inv_n, im * self.inv_n)
    }
}

/// Cloud-in-cell estimate of `C_a` on every node of the frequency grid.
///
/// Each observation is split linearly between its neighbouring spatial nodes, the deposit is
/// transformed, and the triangular assignment kernel is divided out with `sinc^2(t dx / 2)`.
pub(crate) fn binned_centered(points: PointSet<'_>, grid: &GridConfig) -> Result<Vec<Complex64>> {
    grid.check_strictly_contains(points)?;
    let freq = grid.frequency_grid();
    let dims = grid.dims();
    let m0 = grid.axis(0).points;
    let m1 = if dims == 2 { grid.axis(1).points } else { 1 };
    let mut buf = vec![Complex64::new(0.0, 0.0); m0 * m1];
    let w = 1.0 / points.len() as f64;
    let cell = |v: f64, d: usize| {
        let axis = grid.axis(d);
        let pos = (v - axis.lower) / axis.spacing();
        let i = (pos.floor() as usize).min(axis.points - 2);
        (i, pos - i as f64)
    };
    for j in 0..points.len() {
        let (i0, f0) = cell(points.coord(j, 0), 0);
        if dims == 1 {
            buf[i0].re += w * (1.0 - f0);
            buf[i0 + 1].re += w * f0;
        } else {
            let (i1, f1) = cell(points.coord(j, 1), 1);
            buf[i0 * m1 + i1].re += w * (1.0 - f0) * (1.0 - f1);
            buf[i0 * m1 + i1 + 1].re += w * (1.0 - f0) * f1;
            buf[(i0 + 1) * m1 + i1].re += w * f0 * (1.0 - f1);
            buf[(i0 + 1) * m1 + i1 + 1].re += w * f0 * f1;
        }
    }
    // Inverse direction gives sum_l b_l exp(+2 pi i k l / m), the ECF sign convention.
    if dims == 1 {
        fft::plan(m0, FftDirection::Inverse).process(&mut buf);
    } else {
        fft::transform_2d(&mut buf, m0, m1, FftDirection::Inverse);
    }
    let deconv = |k: i64, m: usize| {
        if k == 0 {
            return 1.0;
        }
        let h = std::f64::consts::PI * k as f64 / m as f64;
        let s = h.sin() / h;
        1.0 / (s * s)
    };
    let wrap = |k: i64, m: usize| k.rem_euclid(m as i64) as usize;
    let values = (0..freq.len())
        .map(|i| {
            let k = freq.lattice(i);
            if dims == 1 {
                buf[wrap(k[0], m0)] * deconv(k[0], m0)
            } else {
                buf[wrap(k[0], m0) * m1 + wrap(k[1], m1)] * deconv(k[0], m0) * deconv(k[1], m1)
            }
        })
        .collect();
    Ok(values)
}
