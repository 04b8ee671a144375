//! Simulation designs: association patterns P1-P8 and copula x marginal constructions, with
//! reference values for the quantities the estimators target.
//!
//! Noise written `N(0, s)` uses `s` as the standard deviation.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{AmiError, Result};
use crate::estimators::{ami_delta, entropy_ratio};
use crate::rng::stream_rng;
use crate::sample::Sample;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// Linear, Gaussian noise: `Y = aX + e`, `e ~ N(0, 0.5)`.
    P1,
    /// Linear, skewed noise: `Y = aX + (e - 1)`, `e ~ Exp(1)`.
    P2,
    /// Quadratic, Gaussian noise: `Y = aX^2 + e`, `e ~ N(0, 0.5)`.
    P3,
    /// Quadratic, skewed noise: `Y = aX^2 + (e - 1)`, `e ~ Exp(1)`.
    P4,
    /// Circle: `X = 3cos(2 pi t)`, `Y = 3a sin(2 pi t) + e`, `t ~ U(0, 1)`, `e ~ N(0, 1)`.
    P5,
    /// Spiral: `X = a t cos(pi t) + e1`, `Y = t sin(pi t) + e2`, `t ~ U(0, 4)`, `e ~ N(0, 0.1)`.
    P6,
    /// Exponential: `X = U + e1`, `Y = a exp(U) + e2`, `U ~ U(-3, 3)`, `e ~ N(0, 0.1)`.
    P7,
    /// Sinusoid: `X = U + e1`, `Y = a sin(2 pi U / sqrt 12) + e2`, `U ~ U(0, sqrt 12)`,
    /// `e ~ N(0, 0.1)`.
    P8,
}

impl Pattern {
    pub const ALL: [Pattern; 8] = [
        Pattern::P1,
        Pattern::P2,
        Pattern::P3,
        Pattern::P4,
        Pattern::P5,
        Pattern::P6,
        Pattern::P7,
        Pattern::P8,
    ];
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Pattern {
    type Err = AmiError;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AmiError::InvalidParameter(format!("unknown pattern `{s}` (expected P1..P8)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub pattern: Pattern,
    pub a: f64,
    pub n: usize,
    pub seed: u64,
}

/// Draws `spec.n` observations of the pattern.
pub fn gen_pattern(spec: &PatternSpec) -> Result<Sample> {
    if !(spec.a >= 0.0 && spec.a.is_finite()) {
        return Err(AmiError::InvalidParameter(format!("signal a = {} must be >= 0", spec.a)));
    }
    if spec.n == 0 {
        return Err(AmiError::EmptyData);
    }
    let mut rng = stream_rng(spec.seed, 0);
    let a = spec.a;
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let normal = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        sd * z
    };
    for _ in 0..spec.n {
        let (xi, yi) = match spec.pattern {
            Pattern::P1 | Pattern::P3 => {
                let xi = normal(&mut rng, 1.0);
                let e = normal(&mut rng, 0.5);
                let s = if spec.pattern == Pattern::P1 { xi } else { xi * xi };
                (xi, a * s + e)
            }
            Pattern::P2 | Pattern::P4 => {
                let xi = normal(&mut rng, 1.0);
                let e: f64 = rng.sample(Exp1);
                let s = if spec.pattern == Pattern::P2 { xi } else { xi * xi };
                (xi, a * s + (e - 1.0))
            }
            Pattern::P5 => {
                let t: f64 = rng.random();
                let e = normal(&mut rng, 1.0);
                let w = 2.0 * PI * t;
                (3.0 * w.cos(), 3.0 * a * w.sin() + e)
            }
            Pattern::P6 => {
                let t = 4.0 * rng.random::<f64>();
                let e1 = normal(&mut rng, 0.1);
                let e2 = normal(&mut rng, 0.1);
                (a * t * (PI * t).cos() + e1, t * (PI * t).sin() + e2)
            }
            Pattern::P7 => {
                let u = -3.0 + 6.0 * rng.random::<f64>();
                let e1 = normal(&mut rng, 0.1);
                let e2 = normal(&mut rng, 0.1);
                (u + e1, a * u.exp() + e2)
            }
            Pattern::P8 => {
                let r12 = 12f64.sqrt();
                let u = r12 * rng.random::<f64>();
                let e1 = normal(&mut rng, 0.1);
                let e2 = normal(&mut rng, 0.1);
                (u + e1, a * (2.0 * PI * u / r12).sin() + e2)
            }
        };
        x.push(xi);
        y.push(yi);
    }
    Sample::new(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Gaussian,
    Clayton,
    Gumbel,
}

impl FromStr for CopulaFamily {
    type Err = AmiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(CopulaFamily::Gaussian),
            "clayton" => Ok(CopulaFamily::Clayton),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            _ => Err(AmiError::InvalidParameter(format!("unknown copula family `{s}`"))),
        }
    }
}

impl CopulaFamily {
    /// Fails unless `param` is admissible: `rho` in (-1, 1), Clayton `theta > 0`,
    /// Gumbel `theta >= 1`.
    pub fn check(&self, param: f64) -> Result<()> {
        let ok = match self {
            CopulaFamily::Gaussian => param > -1.0 && param < 1.0,
            CopulaFamily::Clayton => param > 0.0 && param.is_finite(),
            CopulaFamily::Gumbel => param >= 1.0 && param.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(AmiError::InvalidParameter(format!("{self:?} copula parameter {param} is inadmissible")))
        }
    }

    /// Kendall's tau implied by the parameter.
    pub fn kendall_tau(&self, param: f64) -> f64 {
        match self {
            CopulaFamily::Gaussian => 2.0 / PI * param.asin(),
            CopulaFamily::Clayton => param / (param + 2.0),
            CopulaFamily::Gumbel => 1.0 - 1.0 / param,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MarginalSpec {
    /// `N(0, sigma)`.
    Normal { sigma: f64 },
    /// `Exp(rate)`.
    Exponential { rate: f64 },
    /// `log X` with `X ~ Exp(scale)`.
    LogExponential { scale: f64 },
}

impl MarginalSpec {
    fn parameter(&self) -> f64 {
        match *self {
            MarginalSpec::Normal { sigma } => sigma,
            MarginalSpec::Exponential { rate } => rate,
            MarginalSpec::LogExponential { scale } => scale,
        }
    }

    pub fn check(&self) -> Result<()> {
        let p = self.parameter();
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            Err(AmiError::InvalidParameter(format!("marginal parameter {p} must be positive")))
        }
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        match *self {
            MarginalSpec::Normal { sigma } => normal_entropy(sigma),
            MarginalSpec::Exponential { rate } => exponential_entropy(rate),
            MarginalSpec::LogExponential { scale } => log_exponential_entropy(scale),
        }
    }
}

impl FromStr for MarginalSpec {
    type Err = AmiError;

    /// Parses `normal:1.5`, `exponential:2` or `log_exponential:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| AmiError::InvalidParameter(format!("marginal `{s}` must look like family:parameter")))?;
        let p: f64 = value
            .trim()
            .parse()
            .map_err(|_| AmiError::InvalidParameter(format!("bad marginal parameter `{value}`")))?;
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => MarginalSpec::Normal { sigma: p },
            "exponential" | "exp" => MarginalSpec::Exponential { rate: p },
            "log_exponential" | "logexp" | "log-exponential" => MarginalSpec::LogExponential { scale: p },
            other => return Err(AmiError::InvalidParameter(format!("unknown marginal family `{other}`"))),
        };
        spec.check()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    pub param: f64,
    pub marginal_x: MarginalSpec,
    pub marginal_y: MarginalSpec,
    pub n: usize,
    pub seed: u64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Keeps a uniform draw strictly inside (0, 1) after rounding.
fn interior(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `n` pairs from the copula, strictly inside the unit square.
pub fn sample_copula(family: CopulaFamily, param: f64, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    family.check(param)?;
    let mut rng = stream_rng(seed, 0);
    let phi = std_normal();
    let out = (0..n)
        .map(|_| match family {
            CopulaFamily::Gaussian => {
                let z1: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                let z2 = param * z1 + (1.0 - param * param).sqrt() * e;
                [interior(phi.cdf(z1)), interior(phi.cdf(z2))]
            }
            CopulaFamily::Clayton => {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                let t = param;
                let v = ((w.powf(-t / (1.0 + t)) - 1.0) * u.powf(-t) + 1.0).powf(-1.0 / t);
                [u, interior(v)]
            }
            CopulaFamily::Gumbel => {
                let alpha = 1.0 / param;
                let s = positive_stable(&mut rng, alpha);
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                [
                    interior((-(e1 / s).powf(alpha)).exp()),
                    interior((-(e2 / s).powf(alpha)).exp()),
                ]
            }
        })
        .collect();
    Ok(out)
}

/// Positive stable variable with Laplace transform `exp(-s^alpha)`, `0 < alpha <= 1`
/// (Kanter's representation).
fn positive_stable<R: Rng>(rng: &mut R, alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let theta = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * theta).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// Inverse CDF of the marginal at `u` in (0, 1).
pub fn marginal_quantile(spec: &MarginalSpec, u: f64) -> Result<f64> {
    spec.check()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(AmiError::InvalidParameter(format!("quantile level {u} must lie in (0, 1)")));
    }
    Ok(match *spec {
        MarginalSpec::Normal { sigma } => sigma * std_normal().inverse_cdf(u),
        MarginalSpec::Exponential { rate } => -(-u).ln_1p() / rate,
        MarginalSpec::LogExponential { scale } => scale.ln() + (-(-u).ln_1p()).ln(),
    })
}

/// Copula sample pushed through the two marginal quantile functions.
pub fn gen_copula_sample(spec: &CopulaSpec) -> Result<Sample> {
    spec.marginal_x.check()?;
    spec.marginal_y.check()?;
    let uv = sample_copula(spec.family, spec.param, spec.n, spec.seed)?;
    let x = uv.iter().map(|p| marginal_quantile(&spec.marginal_x, p[0])).collect::<Result<Vec<_>>>()?;
    let y = uv.iter().map(|p| marginal_quantile(&spec.marginal_y, p[1])).collect::<Result<Vec<_>>>()?;
    Sample::new(x, y)
}

/// Log copula density at `(u, v)` in the open unit square.
pub fn copula_log_density(family: CopulaFamily, param: f64, u: f64, v: f64) -> f64 {
    match family {
        CopulaFamily::Gaussian => {
            let phi = std_normal();
            let (a, b) = (phi.inverse_cdf(u), phi.inverse_cdf(v));
            gaussian_copula_log_density_scores(param, a, b)
        }
        CopulaFamily::Clayton => {
            let t = param;
            (1.0 + t).ln() - (t + 1.0) * (u.ln() + v.ln())
                - (2.0 + 1.0 / t) * (u.powf(-t) + v.powf(-t) - 1.0).ln()
        }
        CopulaFamily::Gumbel => gumbel_log_density(param, u.ln(), v.ln()),
    }
}

fn gaussian_copula_log_density_scores(rho: f64, a: f64, b: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    -0.5 * r2.ln() - (rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * r2)
}

/// Gumbel log density from `ln u` and `ln v`, which keeps precision near the corners.
fn gumbel_log_density(theta: f64, ln_u: f64, ln_v: f64) -> f64 {
    let (x, y) = (-ln_u, -ln_v);
    let a = x.powf(theta) + y.powf(theta);
    let a_inv = a.powf(1.0 / theta);
    -a_inv - ln_u - ln_v + (theta - 1.0) * (x.ln() + y.ln()) + (-2.0 + 2.0 / theta) * a.ln()
        + ((theta - 1.0) / a_inv + 1.0).ln()
}

pub fn copula_density(family: CopulaFamily, param: f64, u: f64, v: f64) -> f64 {
    copula_log_density(family, param, u, v).exp()
}

/// `-1/2 log(1 - rho^2)`.
pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

/// `1/2 log(2 pi e sigma^2)`.
pub fn normal_entropy(sigma: f64) -> f64 {
    0.5 * (2.0 * PI * E * sigma * sigma).ln()
}

/// `1 - log(rate)`.
pub fn exponential_entropy(rate: f64) -> f64 {
    1.0 - rate.ln()
}

/// Entropy of `log X`, `X ~ Exp(scale)`, by Simpson quadrature of `-f log f`.
pub fn log_exponential_entropy(scale: f64) -> f64 {
    // f(y) = exp(y - l - exp(y - l)) with l = ln(scale); the integrand is negligible outside
    // y - l in [-40, 4].
    let l = scale.ln();
    let (lo, hi, steps) = (l - 40.0, l + 4.0, 20_000);
    let h = (hi - lo) / steps as f64;
    let g = |y: f64| {
        let z = y - l;
        let log_f = z - z.exp();
        -log_f.exp() * log_f
    };
    let mut s = g(lo) + g(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Mutual information `E[log c(U, V)]` of the copula: closed form for the Gaussian family,
/// Simpson quadrature in normal-score coordinates otherwise.
pub fn copula_mi(family: CopulaFamily, param: f64) -> f64 {
    if family == CopulaFamily::Gaussian {
        return gaussian_mi(param);
    }
    let phi = std_normal();
    let (lim, steps) = (8.5, 1200usize);
    let h = 2.0 * lim / steps as f64;
    let z: Vec<f64> = (0..=steps).map(|i| -lim + i as f64 * h).collect();
    // ln Phi(z) and ln(1 - Phi(z)) without cancellation
    let ln_cdf: Vec<f64> = z.iter().map(|&t| ln_normal_cdf(t)).collect();
    let pdf: Vec<f64> = z.iter().map(|&t| phi.pdf(t)).collect();
    let w = |i: usize| {
        if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for i in 0..=steps {
        let mut row = 0.0;
        for j in 0..=steps {
            let lc = match family {
                CopulaFamily::Clayton => {
                    let (lu, lv) = (ln_cdf[i], ln_cdf[j]);
                    let t = param;
                    (1.0 + t).ln() - (t + 1.0) * (lu + lv)
                        - (2.0 + 1.0 / t) * ((-t * lu).exp() + (-t * lv).exp() - 1.0).ln()
                }
                CopulaFamily::Gumbel => gumbel_log_density(param, ln_cdf[i], ln_cdf[j]),
                CopulaFamily::Gaussian => unreachable!(),
            };
            let dens = lc.exp() * pdf[i] * pdf[j];
            if dens > 0.0 && dens.is_finite() {
                row += w(j) * dens * lc;
            }
        }
        total += w(i) * row;
    }
    total * h * h / 9.0
}

/// `ln Phi(z)`, accurate in both tails.
fn ln_normal_cdf(z: f64) -> f64 {
    let phi = std_normal();
    if z > -5.0 {
        phi.cdf(z).ln()
    } else {
        // asymptotic series for the lower tail
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        phi.ln_pdf(z) - (-z).ln() + series.ln()
    }
}

/// Population values of the quantities the pipeline estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    pub mi: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub er_xy: f64,
    pub er_yx: f64,
    pub ami_xy: f64,
    pub ami_yx: f64,
    pub delta: f64,
    pub kendall_tau: f64,
}

pub fn oracle_values(spec: &CopulaSpec) -> Result<OracleValues> {
    spec.family.check(spec.param)?;
    spec.marginal_x.check()?;
    spec.marginal_y.check()?;
    let mi = copula_mi(spec.family, spec.param);
    let h_x = spec.marginal_x.entropy();
    let h_y = spec.marginal_y.entropy();
    let (er_xy, er_yx) = entropy_ratio(h_x, h_y);
    let (ami_xy, ami_yx, delta) = ami_delta(mi, h_x, h_y);
    Ok(OracleValues {
        mi,
        h_x,
        h_y,
        er_xy,
        er_yx,
        ami_xy,
        ami_yx,
        delta,
        kendall_tau: spec.family.kendall_tau(spec.param),
    })
}

/// Kendall's tau-a of paired data, O(n^2).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let p = (x[i] - x[j]) * (y[i] - y[j]);
            s += if p > 0.0 {
                1
            } else if p < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}
