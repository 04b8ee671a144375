//! Plug-in estimators of MI, marginal entropies, ER, AMI and Delta, with delta-method variances
//! under data splitting.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::copula::{copula_grid, fit_copula_density, transform_with_reference, PseudoObservations};
use crate::error::{AmiError, Result};
use crate::rng::stream_rng;
use crate::sample::Sample;
use crate::sce::{
    sce_fit, DensityEstimate, EcfMode, GridConfig, PointSet, DEFAULT_PADDING, DEFAULT_POINTS_1D, DEFAULT_POINTS_2D,
};
use crate::warning::Warning;

/// Minimum sample size for a split fit.
pub const MIN_SPLIT_N: usize = 8;

/// Pre-clip masses outside this band raise [`Warning::PreClipMass`].
pub const PRE_CLIP_MASS_BAND: (f64, f64) = (0.95, 1.05);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleRule {
    /// Fisher-Yates shuffle of the row indices; the first `round(ratio n)` form `D1`.
    #[default]
    FisherYates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub seed: u64,
    pub ratio: f64,
    #[serde(default)]
    pub shuffle: ShuffleRule,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ratio: 0.5,
            shuffle: ShuffleRule::FisherYates,
        }
    }
}

impl SplitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Grid and ECF settings shared by the three density fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub points_1d: usize,
    pub points_2d: usize,
    pub padding: f64,
    pub mode: EcfMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            points_1d: DEFAULT_POINTS_1D,
            points_2d: DEFAULT_POINTS_2D,
            padding: DEFAULT_PADDING,
            mode: EcfMode::Auto,
        }
    }
}

/// Row indices of `D1` and `D2`.
pub fn split_indices(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < MIN_SPLIT_N {
        return Err(AmiError::TooFewObservations { need: MIN_SPLIT_N, got: n });
    }
    if !(cfg.ratio > 0.0 && cfg.ratio < 1.0) {
        return Err(AmiError::InvalidParameter(format!("split ratio {} must lie in (0, 1)", cfg.ratio)));
    }
    let n1 = (cfg.ratio * n as f64).round() as usize;
    if n1 < 4 || n - n1 < 4 {
        return Err(AmiError::InvalidParameter(format!(
            "split ratio {} leaves parts of size {n1} and {}; both need at least 4",
            cfg.ratio,
            n - n1
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    match cfg.shuffle {
        ShuffleRule::FisherYates => idx.shuffle(&mut stream_rng(cfg.seed, 0)),
    }
    let d2 = idx.split_off(n1);
    Ok((idx, d2))
}

/// Disjoint random halves `(D1, D2)` with `|D1| = round(ratio n)`.
pub fn split(sample: &Sample, cfg: &SplitConfig) -> Result<(Sample, Sample)> {
    let (a, b) = split_indices(sample.len(), cfg)?;
    Ok((sample.subset(&a), sample.subset(&b)))
}

/// Densities fitted on one sample: the copula of its pseudo-observations and both marginals.
#[derive(Debug, Clone)]
pub struct SplitFit {
    pub copula: DensityEstimate,
    pub marginal_x: DensityEstimate,
    pub marginal_y: DensityEstimate,
    /// Training columns, used to carry new points into copula coordinates.
    pub reference: Sample,
    /// The copula was fitted to `(v, u)`; evaluation swaps coordinates back.
    pub copula_transposed: bool,
    pub n1: usize,
    pub warnings: Vec<Warning>,
}

impl SplitFit {
    /// `log c(u, v)` under the floor.
    pub fn log_copula_at(&self, u: f64, v: f64) -> Result<f64> {
        if self.copula_transposed {
            self.copula.log_density_at(&[v, u])
        } else {
            self.copula.log_density_at(&[u, v])
        }
    }
}

/// One-dimensional SCE on a grid padded around `values`.
pub fn fit_marginal(values: &[f64], cfg: &FitConfig) -> Result<DensityEstimate> {
    let set = PointSet::Line(values);
    let grid = GridConfig::from_data(set, cfg.points_1d, cfg.padding)?;
    sce_fit(set, &grid, cfg.mode)
}

/// Fits the copula and marginal densities on `d1`.
pub fn fit_split(d1: &Sample, cfg: &FitConfig) -> Result<SplitFit> {
    let pseudo = PseudoObservations::from_sample(d1)?;
    fit_with_pseudo(d1, &pseudo, cfg)
}

fn fit_with_pseudo(d1: &Sample, pseudo: &PseudoObservations, cfg: &FitConfig) -> Result<SplitFit> {
    let marginal_x = fit_marginal(d1.x(), cfg)?;
    let marginal_y = fit_marginal(d1.y(), cfg)?;
    let grid = copula_grid_for(cfg)?;
    // The copula is fitted in a canonical orientation so that swapping X and Y reproduces the
    // same fit bit for bit.
    let transposed = pseudo.v.iter().map(|x| x.to_bits()).lt(pseudo.u.iter().map(|x| x.to_bits()));
    let cop = if transposed {
        let flipped = PseudoObservations {
            u: pseudo.v.clone(),
            v: pseudo.u.clone(),
            ids: pseudo.ids.clone(),
            rule: pseudo.rule,
        };
        fit_copula_density(&flipped, &grid, cfg.mode)?
    } else {
        fit_copula_density(pseudo, &grid, cfg.mode)?
    };
    let mut warnings = cop.warnings;
    for (name, est) in [("copula", &cop.density), (d1.x_label(), &marginal_x), (d1.y_label(), &marginal_y)] {
        push_mass_warning(&mut warnings, name, est);
    }
    Ok(SplitFit {
        copula: cop.density,
        marginal_x,
        marginal_y,
        reference: d1.clone(),
        copula_transposed: transposed,
        n1: d1.len(),
        warnings,
    })
}

pub(crate) fn copula_grid_for(cfg: &FitConfig) -> Result<GridConfig> {
    if cfg.padding == DEFAULT_PADDING {
        copula_grid(cfg.points_2d)
    } else {
        GridConfig::unit_square(cfg.points_2d, cfg.padding)
    }
}

fn push_mass_warning(warnings: &mut Vec<Warning>, name: &str, est: &DensityEstimate) {
    let m = est.pre_clip_mass();
    if !(PRE_CLIP_MASS_BAND.0..=PRE_CLIP_MASS_BAND.1).contains(&m) {
        warnings.push(Warning::PreClipMass {
            density: name.to_string(),
            mass: m,
        });
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance, shifted by the first value; zero for fewer than two values.
fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let (s, s2) = v.iter().fold((0.0, 0.0), |(s, s2), x| {
        let d = x - v[0];
        (s + d, s2 + d * d)
    });
    ((s2 - s * s / n) / (n - 1.0)).max(0.0)
}

/// `log c(Z_j)` for the rows of `d2`, carried into copula coordinates through the training
/// marginals.
pub fn log_copula_terms(fit: &SplitFit, d2: &Sample) -> Result<Vec<f64>> {
    let u = transform_with_reference(d2.x(), fit.reference.x())?;
    let v = transform_with_reference(d2.y(), fit.reference.y())?;
    u.iter().zip(&v).map(|(&a, &b)| fit.log_copula_at(a, b)).collect()
}

/// `log f(x_j)` for each value.
pub fn log_density_terms(est: &DensityEstimate, values: &[f64]) -> Result<Vec<f64>> {
    values.iter().map(|&x| est.log_density_at(&[x])).collect()
}

/// Mean log copula density over `d2`.
pub fn plugin_mi(fit: &SplitFit, d2: &Sample) -> Result<f64> {
    Ok(mean(&log_copula_terms(fit, d2)?))
}

/// Mean of `-log f` over `values`.
pub fn plugin_entropy(est: &DensityEstimate, values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(AmiError::EmptyData);
    }
    Ok(-mean(&log_density_terms(est, values)?))
}

/// `(ER(X|Y), ER(Y|X))` from the marginal entropies, `ER(X|Y) = 1 / (1 + exp(h_y - h_x))`.
pub fn entropy_ratio(h_x: f64, h_y: f64) -> (f64, f64) {
    complementary_logistic(h_x - h_y)
}

/// `(ER(X|Y), ER(Y|X))` from conditional entropies `H(X|Y)` and `H(Y|X)`.
pub fn entropy_ratio_conditional(h_x_given_y: f64, h_y_given_x: f64) -> (f64, f64) {
    complementary_logistic(h_x_given_y - h_y_given_x)
}

/// `(1 / (1 + e^-z), 1 / (1 + e^z))`. The smaller value is computed directly and the larger as
/// its complement, so negating `z` swaps the pair exactly.
fn complementary_logistic(z: f64) -> (f64, f64) {
    let e = (-z.abs()).exp();
    let small = e / (1.0 + e);
    if z >= 0.0 {
        (1.0 - small, small)
    } else {
        (small, 1.0 - small)
    }
}

/// `(AMI(X|Y), AMI(Y|X), Delta)` with `Delta = mi tanh((h_x - h_y) / 2)`.
pub fn ami_delta(mi: f64, h_x: f64, h_y: f64) -> (f64, f64, f64) {
    let (er_xy, er_yx) = entropy_ratio(h_x, h_y);
    (mi * er_xy, mi * er_yx, mi * ((h_x - h_y) / 2.0).tanh())
}

/// Sample variances over `d2` of `log c(Z)`, `log f_X(X)` and `log f_Y(Y)`.
pub fn variance_components(fit: &SplitFit, d2: &Sample) -> Result<(f64, f64, f64)> {
    if d2.len() < 2 {
        return Err(AmiError::TooFewObservations { need: 2, got: d2.len() });
    }
    Ok((
        sample_variance(&log_copula_terms(fit, d2)?),
        sample_variance(&log_density_terms(&fit.marginal_x, d2.x())?),
        sample_variance(&log_density_terms(&fit.marginal_y, d2.y())?),
    ))
}

/// Asymptotic variances `(sigma_AMI^2, sigma_Delta^2)` of `AMI(X|Y)` and `Delta`, given the
/// pair `(ER(X|Y), ER(Y|X))`.
pub fn asymptotic_variances(mi: f64, er: (f64, f64), s1: f64, s2: f64, s3: f64) -> Result<(f64, f64)> {
    if [s1, s2, s3].iter().any(|s| !(*s >= 0.0)) {
        return Err(AmiError::InvalidParameter(format!(
            "variance components must be non-negative, got ({s1}, {s2}, {s3})"
        )));
    }
    // written symmetrically in (ER, 1 - ER) so that swapping X and Y leaves sigma_Delta^2
    // unchanged bit for bit
    let (er_xy, er_yx) = er;
    let b = mi * (er_xy * er_yx);
    let ami = er_xy * er_xy * s1 + b * b * (s2 + s3);
    let delta = (er_xy - er_yx).powi(2) * s1 + 4.0 * b * b * (s2 + s3);
    Ok((ami, delta))
}

/// Two-sided standard normal quantile `z_{1 - alpha/2}`.
pub fn z_two_sided(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AmiError::InvalidParameter(format!("alpha {alpha} must lie in (0, 1)")));
    }
    Ok(Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha / 2.0))
}

/// `estimate +- z sigma / sqrt(n2)`.
pub fn confidence_interval(estimate: f64, sigma_sq: f64, n2: usize, alpha: f64) -> Result<(f64, f64)> {
    if !(sigma_sq >= 0.0) {
        return Err(AmiError::InvalidParameter(format!("variance {sigma_sq} is negative")));
    }
    let half = z_two_sided(alpha)? * sigma_sq.sqrt() / (n2 as f64).sqrt();
    Ok((estimate - half, estimate + half))
}

/// Split-mode variance components and intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInference {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma3_sq: f64,
    pub sigma_ami_sq: f64,
    pub sigma_delta_sq: f64,
    pub alpha: f64,
    pub ami_xy_ci: (f64, f64),
    pub delta_ci: (f64, f64),
    pub split_seed: u64,
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmiReport {
    pub x_label: String,
    pub y_label: String,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub mi_hat: f64,
    pub h_x_hat: f64,
    pub h_y_hat: f64,
    pub er_xy: f64,
    pub er_yx: f64,
    pub ami_xy: f64,
    pub ami_yx: f64,
    pub delta_hat: f64,
    /// Absent for no-split estimates.
    pub inference: Option<SplitInference>,
    pub warnings: Vec<Warning>,
}

impl AmiReport {
    fn from_parts(
        sample: &Sample,
        n1: usize,
        n2: usize,
        mi: f64,
        h_x: f64,
        h_y: f64,
        inference: Option<SplitInference>,
        warnings: Vec<Warning>,
    ) -> Self {
        let (er_xy, er_yx) = entropy_ratio(h_x, h_y);
        let (ami_xy, ami_yx, delta) = ami_delta(mi, h_x, h_y);
        Self {
            x_label: sample.x_label().to_string(),
            y_label: sample.y_label().to_string(),
            n: sample.len(),
            n1,
            n2,
            mi_hat: mi,
            h_x_hat: h_x,
            h_y_hat: h_y,
            er_xy,
            er_yx,
            ami_xy,
            ami_yx,
            delta_hat: delta,
            inference,
            warnings,
        }
    }

    /// Variance components, or [`AmiError::MissingVariances`] for a no-split report.
    pub fn inference(&self) -> Result<&SplitInference> {
        self.inference.as_ref().ok_or(AmiError::MissingVariances)
    }
}

/// Split, fit on `D1`, evaluate on `D2` and attach variances and intervals at level `alpha`.
pub fn full_pipeline(sample: &Sample, split_cfg: &SplitConfig, fit_cfg: &FitConfig, alpha: f64) -> Result<AmiReport> {
    let (d1, d2) = split(sample, split_cfg)?;
    let fit = fit_split(&d1, fit_cfg)?;
    let lc = log_copula_terms(&fit, &d2)?;
    let lx = log_density_terms(&fit.marginal_x, d2.x())?;
    let ly = log_density_terms(&fit.marginal_y, d2.y())?;
    let (mi, h_x, h_y) = (mean(&lc), -mean(&lx), -mean(&ly));
    let (s1, s2, s3) = (sample_variance(&lc), sample_variance(&lx), sample_variance(&ly));
    let (sa, sd) = asymptotic_variances(mi, entropy_ratio(h_x, h_y), s1, s2, s3)?;
    let (ami_xy, _, delta) = ami_delta(mi, h_x, h_y);
    let n2 = d2.len();
    let inference = SplitInference {
        sigma1_sq: s1,
        sigma2_sq: s2,
        sigma3_sq: s3,
        sigma_ami_sq: sa,
        sigma_delta_sq: sd,
        alpha,
        ami_xy_ci: confidence_interval(ami_xy, sa, n2, alpha)?,
        delta_ci: confidence_interval(delta, sd, n2, alpha)?,
        split_seed: split_cfg.seed,
        split_ratio: split_cfg.ratio,
    };
    Ok(AmiReport::from_parts(sample, d1.len(), n2, mi, h_x, h_y, Some(inference), fit.warnings))
}

/// Fits and evaluates on the whole sample (in-sample plug-in); no variances.
pub fn no_split_estimate(sample: &Sample, fit_cfg: &FitConfig) -> Result<AmiReport> {
    if sample.len() < 4 {
        return Err(AmiError::TooFewObservations { need: 4, got: sample.len() });
    }
    let pseudo = PseudoObservations::from_sample(sample)?;
    let fit = fit_with_pseudo(sample, &pseudo, fit_cfg)?;
    let terms = pseudo
        .u
        .iter()
        .zip(&pseudo.v)
        .map(|(&a, &b)| fit.log_copula_at(a, b))
        .collect::<Result<Vec<_>>>()?;
    let mi = mean(&terms);
    let h_x = plugin_entropy(&fit.marginal_x, sample.x())?;
    let h_y = plugin_entropy(&fit.marginal_y, sample.y())?;
    Ok(AmiReport::from_parts(sample, sample.len(), sample.len(), mi, h_x, h_y, None, fit.warnings))
}

/// Mean log copula density at the given pseudo-observations.
pub(crate) fn in_sample_mi(copula: &DensityEstimate, u: &[f64], v: &[f64]) -> Result<f64> {
    let terms = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| copula.log_density_at(&[a, b]))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&terms))
}

/// Copula-only MI estimate in no-split mode, reusing a copula grid.
pub(crate) fn no_split_mi(u: &[f64], v: &[f64], grid: &GridConfig, mode: EcfMode) -> Result<f64> {
    let pseudo = PseudoObservations {
        u: u.to_vec(),
        v: v.to_vec(),
        ids: (0..u.len()).collect(),
        rule: crate::copula::TransformRule::Rank,
    };
    let fit = fit_copula_density(&pseudo, grid, mode)?;
    in_sample_mi(&fit.density, u, v)
}
