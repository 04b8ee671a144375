//! Permutation test for independence and the asymptotic test for predictive asymmetry.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::PseudoObservations;
use crate::error::{AmiError, Result};
use crate::estimators::{
    copula_grid_for, entropy_ratio, fit_marginal, no_split_mi, plugin_entropy, z_two_sided, AmiReport, FitConfig,
};
use crate::rng::stream_rng;
use crate::sample::Sample;
use crate::warning::Warning;

pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const MIN_PERMUTATION_N: usize = 20;
pub const MIN_PERMUTATIONS: usize = 99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationStatistic {
    #[default]
    AmiXy,
    Mi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub statistic: PermutationStatistic,
    pub observed: f64,
    pub null_stats: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    /// Empirical `(1 - alpha)` quantile of the null statistics.
    pub critical_value: f64,
    pub reject: bool,
    pub permutations: usize,
    pub seed: u64,
}

impl PermutationTestResult {
    /// Writes the null statistics as a one-column CSV.
    pub fn write_null_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["null_stat"])?;
        for s in &self.null_stats {
            w.write_record([s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest admissible permutation count at level `alpha`: `max(99, ceil(1/alpha - 1))`.
pub fn min_permutations(alpha: f64) -> usize {
    MIN_PERMUTATIONS.max((1.0 / alpha - 1.0 - 1e-9).ceil() as usize)
}

/// `(1 + #{null >= observed}) / (R + 1)`.
pub fn permutation_p_value(observed: f64, null_stats: &[f64]) -> f64 {
    let count = null_stats.iter().filter(|&&s| s >= observed).count();
    (1 + count) as f64 / (null_stats.len() + 1) as f64
}

/// Empirical `(1 - alpha)` quantile: the `ceil((1 - alpha) R)`-th smallest null statistic.
pub fn empirical_quantile(null_stats: &[f64], alpha: f64) -> f64 {
    let mut sorted = null_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len();
    let k = (((1.0 - alpha) * r as f64) - 1e-9).ceil().clamp(1.0, r as f64) as usize;
    sorted[k - 1]
}

/// Permutes the `Y` column `permutations` times and recomputes the statistic in no-split mode.
///
/// Marginal entropies do not change under permutation, so they are fitted once; each replicate
/// refits only the copula. Replicate `i` draws its permutation from stream `i + 1` of `seed`.
pub fn permutation_independence_test(
    sample: &Sample,
    permutations: usize,
    alpha: f64,
    seed: u64,
    statistic: PermutationStatistic,
    cfg: &FitConfig,
) -> Result<PermutationTestResult> {
    if sample.len() < MIN_PERMUTATION_N {
        return Err(AmiError::TooFewObservations { need: MIN_PERMUTATION_N, got: sample.len() });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AmiError::InvalidParameter(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let need = min_permutations(alpha);
    if permutations < need {
        return Err(AmiError::InsufficientPermutations { permutations, alpha, need });
    }
    let pseudo = PseudoObservations::from_sample(sample)?;
    let scale = match statistic {
        PermutationStatistic::Mi => 1.0,
        PermutationStatistic::AmiXy => {
            let hx = plugin_entropy(&fit_marginal(sample.x(), cfg)?, sample.x())?;
            let hy = plugin_entropy(&fit_marginal(sample.y(), cfg)?, sample.y())?;
            entropy_ratio(hx, hy).0
        }
    };
    let grid = copula_grid_for(cfg)?;
    let observed = scale * no_split_mi(&pseudo.u, &pseudo.v, &grid, cfg.mode)?;
    let null_stats = (0..permutations)
        .into_par_iter()
        .map(|i| {
            let mut v = pseudo.v.clone();
            v.shuffle(&mut stream_rng(seed, i as u64 + 1));
            Ok(scale * no_split_mi(&pseudo.u, &v, &grid, cfg.mode)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let critical_value = empirical_quantile(&null_stats, alpha);
    Ok(PermutationTestResult {
        statistic,
        observed,
        p_value: permutation_p_value(observed, &null_stats),
        alpha,
        critical_value,
        reject: observed > critical_value,
        permutations,
        seed,
        null_stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymmetryConclusion {
    Symmetric,
    #[serde(rename = "X_dominant")]
    XDominant,
    #[serde(rename = "Y_dominant")]
    YDominant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryTestResult {
    pub x_label: String,
    pub y_label: String,
    pub delta_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub n2: usize,
    pub conclusion: AsymmetryConclusion,
    pub warnings: Vec<Warning>,
}

/// Classifies an interval against zero.
pub fn conclude(ci_low: f64, ci_high: f64) -> AsymmetryConclusion {
    if ci_low > 0.0 {
        AsymmetryConclusion::XDominant
    } else if ci_high < 0.0 {
        AsymmetryConclusion::YDominant
    } else {
        AsymmetryConclusion::Symmetric
    }
}

/// `Delta +- z sigma_Delta / sqrt(n2)` and the three-way conclusion.
pub fn asymmetry_test(report: &AmiReport, alpha: f64) -> Result<AsymmetryTestResult> {
    let inf = report.inference()?;
    let se = inf.sigma_delta_sq.sqrt() / (report.n2 as f64).sqrt();
    let half = z_two_sided(alpha)? * se;
    let (ci_low, ci_high) = (report.delta_hat - half, report.delta_hat + half);
    Ok(AsymmetryTestResult {
        x_label: report.x_label.clone(),
        y_label: report.y_label.clone(),
        delta_hat: report.delta_hat,
        se,
        ci_low,
        ci_high,
        alpha,
        n2: report.n2,
        conclusion: conclude(ci_low, ci_high),
        warnings: report.warnings.clone(),
    })
}

/// Adds [`Warning::PossibleIndependence`] when the permutation test did not reject.
pub fn flag_possible_independence(warnings: &mut Vec<Warning>, test: &PermutationTestResult) {
    if !test.reject {
        warnings.push(Warning::PossibleIndependence {
            p_value: test.p_value,
            alpha: test.alpha,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{full_pipeline, SplitConfig};
    use crate::synth::{gen_pattern, Pattern, PatternSpec};

    #[test]
    fn p_value_examples() {
        let null: Vec<f64> = (0..999).map(|i| i as f64 / 1000.0).collect();
        assert!((permutation_p_value(5.0, &null) - 1.0 / 1000.0).abs() < 1e-15);
        assert_eq!(permutation_p_value(-1.0, &null), 1.0);
        // ties count against the observed statistic
        assert_eq!(permutation_p_value(0.0, &[0.0, 0.0, 1.0]), 1.0);
    }

    #[test]
    fn quantile_rule() {
        let null: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&null, 0.05), 95.0);
        let null: Vec<f64> = (1..=999).map(f64::from).collect();
        assert_eq!(empirical_quantile(&null, 0.05), 950.0);
    }

    #[test]
    fn permutation_floor() {
        assert_eq!(min_permutations(0.05), 99);
        assert_eq!(min_permutations(0.001), 999);
        let s = gen_pattern(&PatternSpec { pattern: Pattern::P1, a: 1.0, n: 50, seed: 1 }).unwrap();
        let err = permutation_independence_test(&s, 9, 0.05, 0, PermutationStatistic::AmiXy, &FitConfig::default());
        assert!(matches!(err, Err(AmiError::InsufficientPermutations { need: 99, .. })));
        let small = gen_pattern(&PatternSpec { pattern: Pattern::P1, a: 1.0, n: 19, seed: 1 }).unwrap();
        assert!(permutation_independence_test(&small, 99, 0.05, 0, PermutationStatistic::Mi, &FitConfig::default()).is_err());
    }

    #[test]
    fn detects_strong_dependence_and_is_deterministic() {
        let s = gen_pattern(&PatternSpec { pattern: Pattern::P3, a: 1.0, n: 300, seed: 4 }).unwrap();
        let cfg = FitConfig::default();
        let a = permutation_independence_test(&s, 99, 0.05, 7, PermutationStatistic::AmiXy, &cfg).unwrap();
        assert!(a.reject && a.p_value <= 0.02, "{a:?}");
        let b = permutation_independence_test(&s, 99, 0.05, 7, PermutationStatistic::AmiXy, &cfg).unwrap();
        assert_eq!(a, b);
        // the ER factor is shared, so both statistics order the nulls identically
        let m = permutation_independence_test(&s, 99, 0.05, 7, PermutationStatistic::Mi, &cfg).unwrap();
        assert_eq!(a.p_value, m.p_value);
        assert_eq!(a.reject, m.reject);
    }

    #[test]
    fn decision_is_invariant_under_monotone_transforms() {
        let s = gen_pattern(&PatternSpec { pattern: Pattern::P1, a: 0.3, n: 200, seed: 12 }).unwrap();
        let t = s.map(|x| x.exp(), |y| 3.0 * y - 1.0).unwrap();
        let cfg = FitConfig::default();
        let a = permutation_independence_test(&s, 99, 0.05, 1, PermutationStatistic::Mi, &cfg).unwrap();
        let b = permutation_independence_test(&t, 99, 0.05, 1, PermutationStatistic::Mi, &cfg).unwrap();
        assert_eq!(a.null_stats, b.null_stats);
        assert_eq!(a.reject, b.reject);
    }

    #[test]
    fn conclusions() {
        assert_eq!(conclude(0.2108, 0.4826), AsymmetryConclusion::XDominant);
        assert_eq!(conclude(-0.3, -0.1), AsymmetryConclusion::YDominant);
        assert_eq!(conclude(-0.1, 0.1), AsymmetryConclusion::Symmetric);
        assert_eq!(conclude(0.0, 0.0), AsymmetryConclusion::Symmetric);
        assert_eq!(serde_json::to_string(&AsymmetryConclusion::XDominant).unwrap(), "\"X_dominant\"");
    }

    #[test]
    fn asymmetry_test_needs_split_report() {
        let s = gen_pattern(&PatternSpec { pattern: Pattern::P2, a: 1.0, n: 400, seed: 2 }).unwrap();
        let r = crate::estimators::no_split_estimate(&s, &FitConfig::default()).unwrap();
        assert!(matches!(asymmetry_test(&r, 0.05), Err(AmiError::MissingVariances)));
        let r = full_pipeline(&s, &SplitConfig::with_seed(1), &FitConfig::default(), 0.05).unwrap();
        let t = asymmetry_test(&r, 0.05).unwrap();
        assert!(t.ci_low <= t.delta_hat && t.delta_hat <= t.ci_high);
        let (lo, hi) = r.inference.unwrap().delta_ci;
        assert!((lo - t.ci_low).abs() < 1e-15 && (hi - t.ci_high).abs() < 1e-15);
    }

    #[test]
    fn null_csv_export() {
        let r = PermutationTestResult {
            statistic: PermutationStatistic::Mi,
            observed: 0.1,
            null_stats: vec![0.01, -0.02],
            p_value: 1.0 / 3.0,
            alpha: 0.05,
            critical_value: 0.01,
            reject: true,
            permutations: 2,
            seed: 0,
        };
        let mut buf = Vec::new();
        r.write_null_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "null_stat\n0.01\n-0.02\n");
    }
}
