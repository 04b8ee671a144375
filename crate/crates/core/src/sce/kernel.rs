use num_complex::Complex64;

use super::ecf::EcfGrid;
use super::filter::FilterMask;
use super::grid::FrequencyGrid;
use crate::error::{AmiError, Result};

/// Optimal transform kernel at a node with `|C(t)| = c_abs` for a sample of size `n`:
/// `n / (2(n-1)) * [1 + sqrt(1 - 4(n-1) / (n |C|)^2)]`.
///
/// Written as `(n|C| + sqrt((n|C|)^2 - 4(n-1))) / (2(n-1)|C|)`, which is exactly 1 at
/// `|C| = 1` in floating point. Rounding below the threshold clamps the root to zero.
pub fn kappa(c_abs: f64, n: usize) -> f64 {
    let nf = n as f64;
    let nc = nf * c_abs;
    let disc = (nc * nc - 4.0 * (nf - 1.0)).max(0.0);
    (nc + disc.sqrt()) / (2.0 * (nf - 1.0) * c_abs)
}

/// `kappa(t)` on every frequency node; zero outside the filter.
#[derive(Debug, Clone)]
pub struct TransformKernelGrid {
    pub freq: FrequencyGrid,
    pub values: Vec<Complex64>,
}

pub fn transform_kernel(ecf: &EcfGrid, mask: &FilterMask) -> TransformKernelGrid {
    let values = ecf
        .values
        .iter()
        .zip(&mask.included)
        .map(|(c, &inc)| {
            if inc {
                Complex64::new(kappa(c.norm(), ecf.n), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    TransformKernelGrid {
        freq: ecf.freq.clone(),
        values,
    }
}

/// Result of [`fixed_point_iterate`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub phi: Vec<Complex64>,
    pub iterations: usize,
    pub last_change: f64,
}

/// Iterates `phi <- n C / (n - 1 + |phi|^-2)` from `phi = C` on the mask (zero elsewhere)
/// until the sup-norm change drops below `tol`.
///
/// Converges to `kappa * C`, slowly for nodes whose `|C|^2` sits just above the threshold.
pub fn fixed_point_iterate(
    ecf: &EcfGrid,
    mask: &FilterMask,
    max_iter: usize,
    tol: f64,
) -> Result<FixedPoint> {
    let nf = ecf.n as f64;
    let idx: Vec<usize> = (0..ecf.values.len()).filter(|&i| mask.included[i]).collect();
    let c: Vec<Complex64> = idx.iter().map(|&i| ecf.values[i]).collect();
    let mut cur = c.clone();
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        last_change = 0.0;
        for (p, &cj) in cur.iter_mut().zip(&c) {
            let s = p.norm_sqr();
            let next = cj * (nf * s / ((nf - 1.0) * s + 1.0));
            last_change = f64::max(last_change, (next - *p).norm());
            *p = next;
        }
        if last_change < tol {
            let mut phi = vec![Complex64::new(0.0, 0.0); ecf.values.len()];
            for (&i, p) in idx.iter().zip(cur) {
                phi[i] = p;
            }
            return Ok(FixedPoint {
                phi,
                iterations,
                last_change,
            });
        }
    }
    Err(AmiError::NotConverged {
        iterations,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sce::filter::{build_filter, filter_threshold};
    use crate::sce::grid::GridConfig;

    #[test]
    fn unit_modulus_gives_exactly_one() {
        for n in [4, 10, 100, 1000, 4177] {
            assert_eq!(kappa(1.0, n), 1.0, "n = {n}");
        }
    }

    #[test]
    fn threshold_node_gives_half_ratio() {
        let n = 100;
        let c = filter_threshold(n).sqrt();
        assert!((kappa(c, n) - 100.0 / 198.0).abs() < 1e-6);
    }

    #[test]
    fn kappa_stays_in_range() {
        let n = 50;
        let lo = filter_threshold(n).sqrt();
        for i in 0..=1000 {
            let c = lo + (1.0 - lo) * i as f64 / 1000.0;
            let k = kappa(c, n);
            assert!((0.0..=n as f64 / (n as f64 - 1.0)).contains(&k));
        }
    }

    #[test]
    fn masked_nodes_stay_zero_and_unit_nodes_stay_one() {
        let freq = GridConfig::unit_square(16, 0.25).unwrap().frequency_grid();
        let mut values = vec![Complex64::new(0.01, 0.0); freq.len()];
        values[freq.zero_index()] = Complex64::new(1.0, 0.0);
        values[freq.flat([1, 0])] = Complex64::new(0.0, 0.8);
        values[freq.flat([-1, 0])] = Complex64::new(0.0, -0.8);
        let ecf = EcfGrid { freq, values, n: 100 };
        let mask = build_filter(&ecf);
        assert_eq!(mask.count(), 3);
        let fp = fixed_point_iterate(&ecf, &mask, 200, 1e-10).unwrap();
        let kern = transform_kernel(&ecf, &mask);
        assert_eq!(fp.phi[ecf.freq.zero_index()], Complex64::new(1.0, 0.0));
        for i in 0..ecf.values.len() {
            let closed = kern.values[i] * ecf.values[i];
            assert!((fp.phi[i] - closed).norm() < 1e-8);
            if !mask.included[i] {
                assert_eq!(fp.phi[i], Complex64::new(0.0, 0.0));
                assert_eq!(kern.values[i], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn reports_non_convergence() {
        let freq = GridConfig::unit_square(16, 0.25).unwrap().frequency_grid();
        let mut values = vec![Complex64::new(0.0, 0.0); freq.len()];
        values[freq.zero_index()] = Complex64::new(1.0, 0.0);
        values[freq.flat([1, 0])] = Complex64::new(0.5, 0.0);
        values[freq.flat([-1, 0])] = Complex64::new(0.5, 0.0);
        let ecf = EcfGrid { freq, values, n: 100 };
        let mask = build_filter(&ecf);
        assert!(matches!(
            fixed_point_iterate(&ecf, &mask, 1, 1e-14),
            Err(AmiError::NotConverged { iterations: 1, .. })
        ));
    }
}
