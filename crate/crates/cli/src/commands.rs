use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ami_core::estimators::{full_pipeline, no_split_estimate, AmiReport, FitConfig, SplitConfig};
use ami_core::inference::{
    asymmetry_test, flag_possible_independence, permutation_independence_test, AsymmetryConclusion,
    PermutationStatistic,
};
use ami_core::io::{read_sample_path, write_sample};
use ami_core::rng::{derive_seed, stream_rng};
use ami_core::sce::{baseline_kde_fit, loo_kde_fit, sce_fit, silverman_bandwidth, BandwidthRule, GridConfig, PointSet};
use ami_core::synth::{gen_copula_sample, gen_pattern, oracle_values, CopulaSpec, OracleValues, PatternSpec};
use ami_core::Sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AsymmetryArgs, BenchArgs, DataArgs, DesignArgs, EstimateArgs, IndependenceArgs, McArgs, SimulateArgs};
use crate::error::{CliError, CliResult};

fn load(data: &DataArgs) -> CliResult<Sample> {
    Ok(read_sample_path(&data.input, &data.cols.0, &data.cols.1)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_err(path: Option<&Path>) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

/// Pretty JSON to `path`, or stdout.
fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(ami_core::AmiError::from)?;
    match path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}").and_then(|_| w.flush()).map_err(write_err(Some(p)))
        }
        None => writeln!(std::io::stdout(), "{text}").map_err(write_err(None)),
    }
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let sample = load(&args.data)?;
    let fit = args.fit.config();
    let report = if args.no_split {
        no_split_estimate(&sample, &fit)?
    } else {
        full_pipeline(&sample, &args.split.config(), &fit, args.alpha)?
    };
    emit_json(&report, args.output.as_deref())
}

pub fn test_independence(args: &IndependenceArgs) -> CliResult<()> {
    let sample = load(&args.data)?;
    let result = permutation_independence_test(
        &sample,
        args.permutations,
        args.alpha,
        args.seed,
        args.statistic.into(),
        &args.fit.config(),
    )?;
    if let Some(p) = &args.null_csv {
        result.write_null_csv(create(p)?)?;
    }
    emit_json(&result, args.output.as_deref())
}

pub fn test_asymmetry(args: &AsymmetryArgs) -> CliResult<()> {
    let sample = load(&args.data)?;
    let fit = args.fit.config();
    let report = full_pipeline(&sample, &args.split.config(), &fit, args.alpha)?;
    let mut result = asymmetry_test(&report, args.alpha)?;
    if !args.skip_independence {
        let perm =
            permutation_independence_test(&sample, args.permutations, args.alpha, args.seed, PermutationStatistic::AmiXy, &fit)?;
        flag_possible_independence(&mut result.warnings, &perm);
    }
    emit_json(&result, args.output.as_deref())
}

/// One synthetic design point: a pattern at signal `a`, or a copula at parameter `theta`.
#[derive(Debug, Clone, Copy)]
enum Design {
    Pattern(PatternSpec),
    Copula(CopulaSpec),
}

impl Design {
    fn cells(args: &DesignArgs, n: usize, seed: u64) -> Vec<Design> {
        match (args.pattern, args.copula) {
            (Some(pattern), _) => args.a.iter().map(|&a| Design::Pattern(PatternSpec { pattern, a, n, seed })).collect(),
            (None, Some(family)) => args
                .theta
                .iter()
                .map(|&param| {
                    Design::Copula(CopulaSpec {
                        family,
                        param,
                        marginal_x: args.marginal_x,
                        marginal_y: args.marginal_y,
                        n,
                        seed,
                    })
                })
                .collect(),
            (None, None) => unreachable!("clap requires a design"),
        }
    }

    fn with_seed(self, seed: u64) -> Design {
        match self {
            Design::Pattern(s) => Design::Pattern(PatternSpec { seed, ..s }),
            Design::Copula(s) => Design::Copula(CopulaSpec { seed, ..s }),
        }
    }

    fn generate(&self) -> CliResult<Sample> {
        let s = match self {
            Design::Pattern(s) => gen_pattern(s)?,
            Design::Copula(s) => gen_copula_sample(s)?,
        };
        Ok(Sample::with_labels("X", "Y", s.x().to_vec(), s.y().to_vec())?)
    }

    fn name(&self) -> String {
        match self {
            Design::Pattern(s) => s.pattern.to_string(),
            Design::Copula(s) => format!("{:?}", s.family).to_lowercase(),
        }
    }

    fn level(&self) -> f64 {
        match self {
            Design::Pattern(s) => s.a,
            Design::Copula(s) => s.param,
        }
    }

    fn n(&self) -> usize {
        match self {
            Design::Pattern(s) => s.n,
            Design::Copula(s) => s.n,
        }
    }

    fn oracle(&self) -> CliResult<Option<OracleValues>> {
        match self {
            Design::Copula(s) => Ok(Some(oracle_values(s)?)),
            Design::Pattern(_) => Ok(None),
        }
    }

    /// Population Delta where it is known: copula designs, and patterns without signal.
    fn true_delta(&self) -> CliResult<Option<f64>> {
        Ok(match self {
            Design::Pattern(s) if s.a == 0.0 => Some(0.0),
            _ => self.oracle()?.map(|o| o.delta),
        })
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let design = Design::cells(&args.design, args.n, args.seed);
    let [design] = design.as_slice() else {
        return Err(CliError::Validation("simulate takes a single --a or --theta value".into()));
    };
    if args.output.extension().is_some_and(|e| e == "json") {
        return Err(CliError::Validation("the sample is CSV; choose an output path without a .json extension".into()));
    }
    let sample = design.generate()?;
    let mut w = create(&args.output)?;
    write_sample(&sample, &mut w)?;
    w.flush().map_err(write_err(Some(&args.output)))?;

    let sidecar = args.output.with_extension("json");
    let meta = match design {
        Design::Pattern(spec) => serde_json::json!({ "design": "pattern", "spec": spec }),
        Design::Copula(spec) => serde_json::json!({ "design": "copula", "spec": spec, "oracle": design.oracle()? }),
    };
    emit_json(&meta, Some(&sidecar))
}

/// One replicate row, or (with `row_type = "summary"`) the aggregate of a design cell. In
/// summary rows the Delta interval columns hold the 2.5% and 97.5% quantiles of the replicate
/// estimates, `covers_truth` holds the coverage rate and `perm_reject` the rejection rate.
#[derive(Debug, Clone, Serialize)]
struct McRow {
    row_type: &'static str,
    design: String,
    level: f64,
    n: usize,
    replicate: Option<usize>,
    seed: Option<u64>,
    mi_hat: f64,
    ami_xy: f64,
    ami_yx: f64,
    delta_hat: f64,
    delta_ci_low: f64,
    delta_ci_high: f64,
    ci_width: f64,
    conclusion: String,
    true_delta: Option<f64>,
    covers_truth: Option<f64>,
    perm_p_value: Option<f64>,
    perm_reject: Option<f64>,
}

fn replicate(design: &Design, r: usize, seed: u64, args: &McArgs, fit: &FitConfig, truth: Option<f64>) -> CliResult<McRow> {
    let sample = design.with_seed(seed).generate()?;
    let split = SplitConfig {
        ratio: args.ratio,
        ..SplitConfig::with_seed(derive_seed(seed, 1))
    };
    let report: AmiReport = full_pipeline(&sample, &split, fit, args.alpha)?;
    let test = asymmetry_test(&report, args.alpha)?;
    let perm = if args.permutations > 0 {
        Some(permutation_independence_test(
            &sample,
            args.permutations,
            args.alpha,
            derive_seed(seed, 2),
            PermutationStatistic::AmiXy,
            fit,
        )?)
    } else {
        None
    };
    let covers = truth.map(|t| f64::from(u8::from(test.ci_low <= t && t <= test.ci_high)));
    Ok(McRow {
        row_type: "replicate",
        design: design.name(),
        level: design.level(),
        n: design.n(),
        replicate: Some(r),
        seed: Some(seed),
        mi_hat: report.mi_hat,
        ami_xy: report.ami_xy,
        ami_yx: report.ami_yx,
        delta_hat: report.delta_hat,
        delta_ci_low: test.ci_low,
        delta_ci_high: test.ci_high,
        ci_width: test.ci_high - test.ci_low,
        conclusion: conclusion_label(test.conclusion).into(),
        true_delta: truth,
        covers_truth: covers,
        perm_p_value: perm.as_ref().map(|p| p.p_value),
        perm_reject: perm.map(|p| f64::from(u8::from(p.reject))),
    })
}

fn conclusion_label(c: AsymmetryConclusion) -> &'static str {
    match c {
        AsymmetryConclusion::Symmetric => "symmetric",
        AsymmetryConclusion::XDominant => "X_dominant",
        AsymmetryConclusion::YDominant => "Y_dominant",
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    s / k as f64
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

fn summarize(rows: &[McRow]) -> McRow {
    let first = &rows[0];
    let mut deltas: Vec<f64> = rows.iter().map(|r| r.delta_hat).collect();
    deltas.sort_by(f64::total_cmp);
    let rate = |f: fn(&McRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| mean(v.into_iter()))
    };
    McRow {
        row_type: "summary",
        design: first.design.clone(),
        level: first.level,
        n: first.n,
        replicate: None,
        seed: None,
        mi_hat: mean(rows.iter().map(|r| r.mi_hat)),
        ami_xy: mean(rows.iter().map(|r| r.ami_xy)),
        ami_yx: mean(rows.iter().map(|r| r.ami_yx)),
        delta_hat: mean(deltas.iter().copied()),
        delta_ci_low: quantile(&deltas, 0.025),
        delta_ci_high: quantile(&deltas, 0.975),
        ci_width: mean(rows.iter().map(|r| r.ci_width)),
        conclusion: String::new(),
        true_delta: first.true_delta,
        covers_truth: rate(|r| r.covers_truth),
        perm_p_value: None,
        perm_reject: rate(|r| r.perm_reject),
    }
}

pub fn mc(args: &McArgs) -> CliResult<()> {
    if args.reps == 0 {
        return Err(CliError::Validation("--reps must be positive".into()));
    }
    let fit = args.fit.config();
    let mut out = csv::Writer::from_writer(match &args.output {
        Some(p) => Box::new(create(p)?) as Box<dyn Write>,
        None => Box::new(std::io::stdout()),
    });
    for &n in &args.n {
        for design in Design::cells(&args.design, n, args.seed) {
            let truth = design.true_delta()?;
            // replicates run concurrently; collect keeps replicate order
            let rows = (0..args.reps)
                .into_par_iter()
                .map(|r| replicate(&design, r, derive_seed(args.seed, r as u64), args, &fit, truth))
                .collect::<CliResult<Vec<McRow>>>()?;
            for row in rows.iter().chain(std::iter::once(&summarize(&rows))) {
                out.serialize(row).map_err(ami_core::AmiError::from)?;
            }
        }
    }
    out.flush().map_err(write_err(args.output.as_deref()))
}

#[derive(Debug, Serialize)]
struct BenchRow {
    n: usize,
    sce_seconds: f64,
    kde_seconds: f64,
    loo_kde_seconds: f64,
    silverman_bandwidth: f64,
    loo_bandwidth: f64,
    sce_ise: f64,
    kde_ise: f64,
    loo_kde_ise: f64,
    sce_filter_size: usize,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    seed: u64,
    grid_points: usize,
    padding: f64,
    loo_candidates: usize,
    timing_repeats: usize,
    machine: Machine,
    results: Vec<BenchRow>,
}

#[derive(Debug, Serialize)]
struct Machine {
    os: &'static str,
    arch: &'static str,
    threads: usize,
    version: &'static str,
}

fn fastest<T>(reps: usize, mut f: impl FnMut() -> CliResult<T>) -> CliResult<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        last = Some(f()?);
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok((last.expect("at least one repeat"), best))
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let mut results = Vec::new();
    for (i, &n) in args.n.iter().enumerate() {
        let mut rng = stream_rng(args.seed, i as u64);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let pts = PointSet::Line(&x);
        let grid = GridConfig::from_data(pts, args.grid, ami_core::sce::DEFAULT_PADDING)?;
        let (sce, sce_seconds) = fastest(args.reps, || Ok(sce_fit(pts, &grid, ami_core::sce::EcfMode::Auto)?))?;
        let (kde, kde_seconds) = fastest(args.reps, || Ok(baseline_kde_fit(pts, &grid, &BandwidthRule::Silverman)?))?;
        let ((loo, h), loo_kde_seconds) = fastest(args.reps, || Ok(loo_kde_fit(&x, &grid, args.candidates)?))?;
        results.push(BenchRow {
            n,
            sce_seconds,
            kde_seconds,
            loo_kde_seconds,
            silverman_bandwidth: silverman_bandwidth(pts, 0),
            loo_bandwidth: h,
            sce_ise: sce.ise_1d(normal_pdf)?,
            kde_ise: kde.ise_1d(normal_pdf)?,
            loo_kde_ise: loo.ise_1d(normal_pdf)?,
            sce_filter_size: sce.filter_size(),
        });
    }
    let report = BenchReport {
        seed: args.seed,
        grid_points: args.grid,
        padding: ami_core::sce::DEFAULT_PADDING,
        loo_candidates: args.candidates,
        timing_repeats: args.reps.max(1),
        machine: Machine {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        },
        results,
    };
    emit_json(&report, args.output.as_deref())
}
