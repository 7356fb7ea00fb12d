use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "ap",
    version,
    about = "Numerical experiments on almost periodic functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report here instead of standard output.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub out: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Mean value M(f) by averaging over growing cubes.
    Mean(MeanArgs),
    /// Bohr-Fourier coefficient at one frequency.
    Coeff(CoeffArgs),
    /// Coefficients at candidate frequencies with a threshold.
    Spectrum(SpectrumArgs),
    /// ε-period search with relative-density verdicts.
    Periods(PeriodsArgs),
    /// Sup-differences along a shift sequence.
    Recur(RecurArgs),
    /// Decay of a function at infinity on a masked region.
    Decay(DecayArgs),
    /// Check of a split f = g + q into periodic and decaying parts.
    Split(SplitArgs),
    /// Full, causal or window convolution sampled on a grid.
    Convolve(ConvolveArgs),
    /// Gaussian or Poisson semigroup sampled on a grid.
    Semigroup(SemigroupArgs),
    /// Half-line heat solution sampled on an (x, t) grid.
    Heat(HeatArgs),
    /// Picard iteration for a Hammerstein integral equation.
    Hammerstein(HammersteinArgs),
    /// Mild solution of a delayed evolution equation.
    Delay(DelayArgs),
    /// Vallée-Poussin singular integrals and their errors.
    Vp(VpArgs),
    /// Dense-grid versus sampling-grid suprema of random polynomials.
    Sampling(SamplingArgs),
    /// Execute a JSON job file.
    #[serde(skip)]
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mean(_) => "mean",
            Command::Coeff(_) => "coeff",
            Command::Spectrum(_) => "spectrum",
            Command::Periods(_) => "periods",
            Command::Recur(_) => "recur",
            Command::Decay(_) => "decay",
            Command::Split(_) => "split",
            Command::Convolve(_) => "convolve",
            Command::Semigroup(_) => "semigroup",
            Command::Heat(_) => "heat",
            Command::Hammerstein(_) => "hammerstein",
            Command::Delay(_) => "delay",
            Command::Vp(_) => "vp",
            Command::Sampling(_) => "sampling",
            Command::Run(_) => "run",
        }
    }
}

/// One or more exprlang sources (one per range component) in `dim` variables.
#[derive(Args, Debug, Serialize)]
pub struct FnSpec {
    /// Component source in `t1..tn`; repeat for vector-valued functions.
    #[arg(long = "f", required = true, allow_hyphen_values = true)]
    pub f: Vec<String>,
    /// Number of variables n.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AveragingArgs {
    /// Comma-separated list of averaging half-widths T.
    #[arg(long, value_delimiter = ',', default_values_t = [25.0, 50.0, 100.0])]
    pub t_seq: Vec<f64>,
    /// Fixed node count per axis; otherwise 64 nodes per unit length.
    #[arg(long)]
    pub nodes_per_axis: Option<usize>,
    /// Cube center, comma-separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct MeanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: AveragingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct CoeffArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    /// Frequency vector, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub freq: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: AveragingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    /// Candidate frequencies separated by `;`, coordinates by `,`.
    #[arg(long, conflicts_with = "lattice_order", allow_hyphen_values = true)]
    pub candidates: Option<String>,
    /// Use every integer frequency with max-norm at most this order.
    #[arg(long)]
    pub lattice_order: Option<u32>,
    #[arg(long)]
    pub threshold: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: AveragingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PeriodsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    #[arg(long)]
    pub eps: f64,
    /// Domain grid `lo:hi:count` per axis, axes joined by commas.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: String,
    /// Candidate shift grid.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    /// Side lengths for the relative-density verdicts.
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct RecurArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    /// Shifts separated by `;`, coordinates by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub taus: String,
    #[arg(long, allow_hyphen_values = true)]
    pub domain: String,
}

#[derive(Args, Debug, Serialize)]
pub struct DecayArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    /// `full`, `orthant` or `sector:c1:c2`.
    #[arg(long, default_value = "full", allow_hyphen_values = true)]
    pub mask: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub domain: String,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    #[arg(long = "f", allow_hyphen_values = true)]
    pub f: String,
    #[arg(long = "g", allow_hyphen_values = true)]
    pub g: String,
    #[arg(long = "q", allow_hyphen_values = true)]
    pub q: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub domain: String,
    #[arg(long, default_value = "full", allow_hyphen_values = true)]
    pub mask: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub decay_tol: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long)]
    pub l: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolveKind {
    Full,
    Causal,
    Window,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    #[arg(long, value_enum, default_value_t = ConvolveKind::Full)]
    pub kind: ConvolveKind,
    /// Kernel as an exprlang source in the same variables.
    #[arg(long, allow_hyphen_values = true)]
    pub kernel: Option<String>,
    /// Built-in kernel: `gaussian:t0`, `poisson:t0` or `exp-orthant`.
    #[arg(long, conflicts_with = "kernel", allow_hyphen_values = true)]
    pub builtin: Option<String>,
    /// Support of a source kernel: `full`, `orthant` or `box:lo:hi[,lo:hi...]`.
    #[arg(long, default_value = "full", allow_hyphen_values = true)]
    pub support: String,
    /// Declared L¹ norm of a source kernel; computed on the truncation box if absent.
    #[arg(long)]
    pub kernel_l1: Option<f64>,
    /// Truncation box (or the window for `--kind window`).
    #[arg(long, allow_hyphen_values = true)]
    pub trunc: String,
    #[arg(long, default_value_t = 0.999)]
    pub min_mass: f64,
    /// Grid on which the output is sampled.
    #[arg(long, allow_hyphen_values = true)]
    pub eval: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SemigroupKind {
    Gauss,
    Poisson,
}

#[derive(Args, Debug, Serialize)]
pub struct SemigroupArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    #[arg(long, value_enum)]
    pub kind: SemigroupKind,
    #[arg(long)]
    pub t0: f64,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value_t = 0.999)]
    pub min_mass: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eval: String,
}

#[derive(Args, Debug, Serialize)]
pub struct HeatArgs {
    /// Initial value on the half-line, a source in `t1`.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: String,
    /// Grid over (x, t), both positive.
    #[arg(long, allow_hyphen_values = true)]
    pub eval: String,
    #[arg(long, default_value_t = 4001)]
    pub nodes: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    Natural,
    Zero,
}

#[derive(Args, Debug, Serialize)]
pub struct HammersteinArgs {
    /// Forcing g(t).
    #[arg(long, default_value = "sin(t1)", allow_hyphen_values = true)]
    pub g: String,
    #[arg(long, default_value = "exp(-abs(t1))/4", allow_hyphen_values = true)]
    pub kernel: String,
    #[arg(long, default_value_t = 0.5)]
    pub kernel_l1: f64,
    /// Nonlinearity F(s, y) with `y` written as `x1`.
    #[arg(long, default_value = "sin(x1)", allow_hyphen_values = true)]
    pub nonlinearity: String,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    #[arg(long, default_value = "-40:80:2401", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 40)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = StartKind::Natural)]
    pub start: StartKind,
}

#[derive(Args, Debug, Serialize)]
pub struct DelayArgs {
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub delta: String,
    /// Retained frequencies of the diagonal family.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    pub frequencies: Vec<f64>,
    /// Forcing f(t, v), one source per frequency, with `v` written as `x1, x2, ...`.
    #[arg(
        long = "f",
        default_value = "0.25*sin(t1)*cos(x1)",
        allow_hyphen_values = true
    )]
    pub f: Vec<String>,
    #[arg(long, default_value_t = 0.25)]
    pub lipschitz: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delay: f64,
    #[arg(long, default_value = "0:60:6001", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long)]
    pub history: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = StartKind::Natural)]
    pub start: StartKind,
}

#[derive(Args, Debug, Serialize)]
pub struct VpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub func: FnSpec,
    /// Orders k, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Orders m in the second variable; defaults to k.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Quadrature nodes per axis; 1024 in one variable and 256 in two.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Test grid for the sup-error.
    #[arg(long, allow_hyphen_values = true)]
    pub test: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SamplingArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub l: u64,
    /// Sampling grid size N per axis.
    #[arg(long = "big-n")]
    pub big_n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 64)]
    pub dense_factor: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub job: String,
}
