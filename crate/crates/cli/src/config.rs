use std::path::PathBuf;

use anyhow::{bail, Result};
use blf::{DiscountPair, Method, NigPrior, ProcessKind, SearchGrid, PRIOR_SEGMENT};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "blf", about = "Bayesian lattice filter for time-varying autoregressions")]
pub struct Cli {
    /// Worker threads for grid search, posterior draws and replicates (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated series with its true coefficients and spectrogram.
    Simulate(SimulateArgs),
    /// Fit a TVAR model to a one-column CSV series.
    Fit(FitArgs),
    /// Run seeded replicates of simulate, fit and score against the truth.
    Benchmark(BenchmarkArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// tvar2, tvar6, piecewise or tvvar.
    pub process: String,
    #[arg(long = "T", default_value_t = 1024)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.005)]
    pub freq_step: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Blffix,
    Blfdyn,
    Fixed,
}

/// Options shared by `fit` and `benchmark`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.8)]
    pub grid_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub grid_hi: f64,
    #[arg(long, default_value_t = 0.02)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 15)]
    pub p_max: usize,
    /// Percent-change threshold of the order rule.
    #[arg(long, default_value_t = blf::DEFAULT_TAU)]
    pub tau: f64,
    /// Explicit prior as mu0,c0,v0,kappa0; by default it is set from the first observations.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub prior: Option<Vec<f64>>,
    /// Observations used for the default prior variance.
    #[arg(long, default_value_t = PRIOR_SEGMENT)]
    pub prior_segment: usize,
    #[arg(long, default_value_t = 0.005)]
    pub freq_step: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Blfdyn)]
    pub method: MethodArg,
    /// Discounts and order for `--method fixed`.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Posterior draws for the spectral uncertainty surfaces; 0 skips them.
    #[arg(long, default_value_t = 0)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    pub process: String,
    /// Number of replicates; replicate i uses seed + i.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1024)]
    pub len: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "blfdyn,blffix")]
    pub method: Vec<MethodArg>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Score the true spectrogram against itself; checks the pipeline, every ASE is 0.
    #[arg(long)]
    pub self_test: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// How the lattice is fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    Select(Method),
    Fixed { pair: DiscountPair, order: usize },
}

impl FitMethod {
    pub fn name(&self) -> String {
        match self {
            Self::Select(m) => m.to_string(),
            Self::Fixed { .. } => "fixed".into(),
        }
    }

    /// Highest lattice stage the fit needs.
    pub fn max_order(&self, grid: &SearchGrid) -> usize {
        match self {
            Self::Select(_) => grid.p_max,
            Self::Fixed { order, .. } => *order,
        }
    }
}

/// Validated model settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: FitMethod,
    pub grid: SearchGrid,
    pub tau: f64,
    /// `None` means the prior is set from the data.
    pub prior: Option<NigPrior>,
    pub prior_segment: usize,
    pub freqs: Vec<f64>,
}

impl RunConfig {
    pub fn new(
        method: MethodArg,
        gamma: Option<f64>,
        delta: Option<f64>,
        order: Option<usize>,
        m: &ModelArgs,
    ) -> Result<Self> {
        let grid = SearchGrid::uniform(m.grid_lo, m.grid_hi, m.grid_step, m.p_max)?;
        if !(m.tau.is_finite() && m.tau >= 0.0) {
            bail!("tau must be finite and >= 0; got {}", m.tau);
        }
        if m.prior_segment < 2 {
            bail!("prior segment needs at least two observations");
        }
        let method = match method {
            MethodArg::Blffix => FitMethod::Select(Method::BlfFix),
            MethodArg::Blfdyn => FitMethod::Select(Method::BlfDyn),
            MethodArg::Fixed => {
                let (Some(g), Some(d), Some(order)) = (gamma, delta, order) else {
                    bail!("--method fixed needs --gamma, --delta and --order");
                };
                if order == 0 {
                    bail!("--order must be at least 1");
                }
                FitMethod::Fixed {
                    pair: DiscountPair::new(g, d)?,
                    order,
                }
            }
        };
        let prior = match &m.prior {
            Some(p) => Some(NigPrior::new(p[0], p[1], p[2], p[3])?),
            None => None,
        };
        Ok(Self {
            method,
            grid,
            tau: m.tau,
            prior,
            prior_segment: m.prior_segment,
            freqs: blf::frequency_grid(m.freq_step)?,
        })
    }

    pub fn prior_for(&self, x: &[f64]) -> Result<NigPrior> {
        match self.prior {
            Some(p) => Ok(p),
            None => Ok(NigPrior::from_signal(x, self.prior_segment)?),
        }
    }

    pub fn check_length(&self, n: usize) -> Result<()> {
        let p = self.method.max_order(&self.grid);
        if n < p + 2 {
            bail!("series of length {n} is too short for order {p}; need at least {}", p + 2);
        }
        Ok(())
    }
}

pub fn parse_process(name: &str) -> Result<ProcessKind> {
    Ok(name.parse::<ProcessKind>()?)
}
