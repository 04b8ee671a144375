use std::path::PathBuf;

use ami_core::estimators::{FitConfig, SplitConfig};
use ami_core::inference::{PermutationStatistic, DEFAULT_PERMUTATIONS};
use ami_core::sce::{EcfMode, DEFAULT_PADDING, DEFAULT_POINTS_1D, DEFAULT_POINTS_2D};
use ami_core::synth::{CopulaFamily, MarginalSpec, Pattern};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ami", version, about = "Asymmetric mutual information: estimation, tests and simulation")]
pub struct Cli {
    /// File of default flag values (JSON object or `key = value` lines); explicit flags win
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate MI, entropies, AMI in both directions and Delta for two columns
    Estimate(EstimateArgs),
    /// Permutation test of independence
    TestIndependence(IndependenceArgs),
    /// Confidence interval for Delta and the dominance conclusion
    TestAsymmetry(AsymmetryArgs),
    /// Draw a synthetic sample to CSV, with a JSON sidecar describing the design
    Simulate(SimulateArgs),
    /// Monte Carlo replicate loop over a synthetic design
    Mc(McArgs),
    /// Time and compare SCE against bandwidth-based KDE on N(0,1) draws
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a header row (`.tsv` files are read tab-delimited). Derived columns, such as
    /// abalone age = rings + 1.5, must be added to the file beforehand.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// The two columns to analyse
    #[arg(long, value_name = "X,Y", value_parser = parse_cols)]
    pub cols: (String, String),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EcfArg {
    Auto,
    Exact,
    Binned,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Copula grid points per axis
    #[arg(long, default_value_t = DEFAULT_POINTS_2D)]
    pub grid: usize,

    /// Marginal grid points
    #[arg(long, default_value_t = DEFAULT_POINTS_1D)]
    pub grid_1d: usize,

    /// Empirical characteristic function evaluation
    #[arg(long, value_enum, default_value = "auto")]
    pub ecf: EcfArg,
}

impl FitArgs {
    pub fn config(&self) -> FitConfig {
        FitConfig {
            points_1d: self.grid_1d,
            points_2d: self.grid,
            padding: DEFAULT_PADDING,
            mode: match self.ecf {
                EcfArg::Auto => EcfMode::Auto,
                EcfArg::Exact => EcfMode::Exact,
                EcfArg::Binned => EcfMode::Binned,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Seed of the D1/D2 shuffle
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,

    /// Fraction of rows in the fitting half D1
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
}

impl SplitArgs {
    pub fn config(&self) -> SplitConfig {
        SplitConfig {
            ratio: self.ratio,
            ..SplitConfig::with_seed(self.split_seed)
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub split: SplitArgs,

    /// Significance level of the reported intervals
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,

    /// Fit and evaluate on all rows; no variances or intervals
    #[arg(long)]
    pub no_split: bool,

    /// Write JSON here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatisticArg {
    /// AMI(X -> Y)
    Ami,
    /// Copula mutual information
    Mi,
}

impl From<StatisticArg> for PermutationStatistic {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Ami => PermutationStatistic::AmiXy,
            StatisticArg::Mi => PermutationStatistic::Mi,
        }
    }
}

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,

    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,

    /// Seed of the permutation streams
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "ami")]
    pub statistic: StatisticArg,

    /// Also write the null statistics as CSV
    #[arg(long, value_name = "PATH")]
    pub null_csv: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AsymmetryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub split: SplitArgs,

    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,

    /// Permutations of the accompanying independence check
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,

    /// Seed of the independence check
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Skip the independence check (no possible_independence warning is produced)
    #[arg(long)]
    pub skip_independence: bool,

    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Functional pattern design, P1..P8
    #[arg(long, value_parser = parse_pattern, conflicts_with = "copula", required_unless_present = "copula")]
    pub pattern: Option<Pattern>,

    /// Copula design: gaussian, clayton or gumbel
    #[arg(long, value_parser = parse_family)]
    pub copula: Option<CopulaFamily>,

    /// Pattern signal strength(s)
    #[arg(long, value_delimiter = ',', default_value = "1", requires = "pattern")]
    pub a: Vec<f64>,

    /// Copula parameter(s): rho for gaussian, theta otherwise
    #[arg(long, value_delimiter = ',', default_value = "0.5", requires = "copula")]
    pub theta: Vec<f64>,

    /// Marginal of X for copula designs, e.g. normal:1, exponential:2, log_exponential:1
    #[arg(long, value_parser = parse_marginal, default_value = "normal:1")]
    pub marginal_x: MarginalSpec,

    #[arg(long, value_parser = parse_marginal, default_value = "normal:1")]
    pub marginal_y: MarginalSpec,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    #[arg(long, default_value_t = 500)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV path; the sidecar goes next to it with a `.json` extension
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub fit: FitArgs,

    /// Sample size(s)
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub n: Vec<usize>,

    /// Replicates per design cell
    #[arg(long, default_value_t = 100)]
    pub reps: usize,

    /// Master seed; replicate r uses the same data seed in every cell
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Permutations per replicate for the independence test; 0 skips it
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,

    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sample sizes
    #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
    pub n: Vec<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Grid points shared by all estimators
    #[arg(long, default_value_t = DEFAULT_POINTS_1D)]
    pub grid: usize,

    /// Bandwidth candidates for the leave-one-out tuned KDE
    #[arg(long, default_value_t = 20)]
    pub candidates: usize,

    /// Timing repeats; the fastest is reported
    #[arg(long, default_value_t = 3)]
    pub reps: usize,

    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

fn parse_cols(s: &str) -> Result<(String, String), String> {
    match s.split(',').map(str::trim).collect::<Vec<_>>().as_slice() {
        [x, y] if !x.is_empty() && !y.is_empty() => Ok((x.to_string(), y.to_string())),
        _ => Err(format!("expected two column names as X,Y, got `{s}`")),
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a <= 0.5 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 0.5], got {a}"))
    }
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    s.parse().map_err(|e: ami_core::AmiError| e.to_string())
}

fn parse_family(s: &str) -> Result<CopulaFamily, String> {
    s.parse().map_err(|e: ami_core::AmiError| e.to_string())
}

fn parse_marginal(s: &str) -> Result<MarginalSpec, String> {
    s.parse().map_err(|e: ami_core::AmiError| e.to_string())
}
