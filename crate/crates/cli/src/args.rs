use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sparsetrig::models::external::ExternalModelSpec;
use sparsetrig::models::{BuiltinModel, Domain, ModelSpec, NoiseSpec};
use sparsetrig::{RefineMode, Space};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sparsetrig", version, about = "Adaptive sparse trigonometric interpolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the initial isotropic grid and write it to disk.
    Build(BuildArgs),
    /// Refine a stored grid until the node budget is reached.
    Refine(RefineArgs),
    /// Evaluate a stored grid at points read from a CSV file.
    Eval(EvalArgs),
    /// Compare refinement strategies on a built-in model.
    Study(StudyArgs),
    /// Fit the decay rates of a stored grid's coefficients.
    ReportAnisotropy(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Built-in model: product:<orders>, anisotropic6d, pib, constant:<c>, zero.
    #[arg(long)]
    pub model: Option<String>,
    /// Input dimension (needed by constant models and by external models
    /// without --domain).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Amplitude of uniform noise added to a built-in model.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// External backend, run as `<cmd> [args...] request.csv response.csv`.
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Extra leading argument for --model-cmd (repeatable).
    #[arg(long = "model-arg", allow_hyphen_values = true)]
    pub model_args: Vec<String>,
    /// Exchange directory polled for responses instead of running a command.
    #[arg(long)]
    pub exchange_dir: Option<PathBuf>,
    /// Box domain of an external model, `a1:b1,a2:b2,...` (default [0,1]^dim).
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Directory for request/response files in command mode.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    pub batch_size: usize,
    /// Seconds per backend call (overridden by SPARSETRIG_MODEL_TIMEOUT).
    #[arg(long, default_value_t = 600.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Keep request/response files.
    #[arg(long)]
    pub keep_io: bool,
    /// Concurrent backend calls.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "hyperbolic")]
    pub space: Space,
    #[arg(long, default_value_t = sparsetrig::adaptive::DEFAULT_L0)]
    pub l0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, default_value_t = sparsetrig::metrics::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_new_nodes: usize,
    /// Grid file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value = "adaptive")]
    pub mode: String,
    /// Comma-separated rates for --mode analytic.
    #[arg(long)]
    pub alpha: Option<String>,
    /// New node budget (default: the stored one).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub space: Option<Space>,
    #[arg(long)]
    pub min_new_nodes: Option<usize>,
    /// Keep request/response files of an external model.
    #[arg(long)]
    pub keep_io: bool,
    /// Concurrent backend calls of an external model.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Headerless CSV of points in model coordinates (`-` for stdin).
    #[arg(long)]
    pub points: PathBuf,
    /// Clamp out-of-domain points instead of rejecting them.
    #[arg(long)]
    pub clamp: bool,
    /// Output CSV (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Strategies: <space>-<mode> (e.g. hyperbolic-adaptive,
    /// total-degree-isotropic, hyperbolic-analytic) or full-tensor.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "hyperbolic-adaptive,hyperbolic-isotropic"
    )]
    pub arms: Vec<String>,
    /// Rates for analytic arms (default: the model's known rates).
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = sparsetrig::adaptive::DEFAULT_L0)]
    pub l0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, default_value_t = sparsetrig::metrics::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_new_nodes: usize,
    #[arg(long, default_value_t = sparsetrig::metrics::VALIDATION_POINTS)]
    pub validation_points: usize,
    /// Measure errors only after the node count grew by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub error_growth: f64,
    /// Output directory for one CSV per strategy.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Fit form (default: the space stored with the grid).
    #[arg(long)]
    pub space: Option<Space>,
}

pub fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("bad {what} value {s:?}")))
        })
        .collect()
}

pub fn parse_mode(mode: &str, alpha: Option<&str>) -> CliResult<RefineMode> {
    match mode {
        "adaptive" => Ok(RefineMode::Adaptive),
        "isotropic" => Ok(RefineMode::Isotropic),
        "analytic" => {
            let alpha = alpha.ok_or_else(|| CliError::input("--mode analytic needs --alpha"))?;
            Ok(RefineMode::Analytic(parse_list(alpha, "alpha")?))
        }
        _ => Err(CliError::input(format!(
            "unknown mode {mode:?} (expected adaptive, analytic or isotropic)"
        ))),
    }
}

pub fn parse_domain(text: &str) -> CliResult<Domain> {
    let bounds = text
        .split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| CliError::input(format!("domain entry {pair:?} is not of the form a:b")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::input(format!("bad domain bound {s:?}")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Domain::new(bounds)?)
}

impl ModelArgs {
    /// `default_work_dir` is used for request/response files when no
    /// --work-dir is given.
    pub fn to_spec(&self, default_work_dir: PathBuf) -> CliResult<ModelSpec> {
        let external = self.model_cmd.is_some() || self.exchange_dir.is_some();
        match (&self.model, external) {
            (Some(_), true) => Err(CliError::input(
                "--model cannot be combined with --model-cmd or --exchange-dir",
            )),
            (None, false) => Err(CliError::input(
                "a model is required: --model, --model-cmd or --exchange-dir",
            )),
            (Some(name), false) => {
                let model = BuiltinModel::parse(name, self.dim)?;
                let noise = self.noise.map(|amplitude| NoiseSpec {
                    amplitude,
                    seed: self.noise_seed,
                });
                if let Some(n) = &noise {
                    if !(n.amplitude >= 0.0 && n.amplitude.is_finite()) {
                        return Err(CliError::input(format!("bad noise amplitude {}", n.amplitude)));
                    }
                }
                Ok(ModelSpec::Builtin { model, noise })
            }
            (None, true) => {
                if self.model_cmd.is_some() && self.exchange_dir.is_some() {
                    return Err(CliError::input("use either --model-cmd or --exchange-dir, not both"));
                }
                if self.noise.is_some() {
                    return Err(CliError::input("--noise applies to built-in models only"));
                }
                let domain = match (&self.domain, self.dim) {
                    (Some(text), dim) => {
                        let domain = parse_domain(text)?;
                        if dim.is_some_and(|d| d != domain.dim()) {
                            return Err(CliError::input("--dim disagrees with --domain"));
                        }
                        domain
                    }
                    (None, Some(d)) => Domain::unit(d),
                    (None, None) => return Err(CliError::input("external models need --domain or --dim")),
                };
                let command = self.model_cmd.as_ref().map(|c| {
                    std::iter::once(c.clone())
                        .chain(self.model_args.iter().cloned())
                        .collect()
                });
                Ok(ModelSpec::External(ExternalModelSpec {
                    command,
                    exchange_dir: self.exchange_dir.clone(),
                    work_dir: self.work_dir.clone().unwrap_or(default_work_dir),
                    domain,
                    batch_size: self.batch_size,
                    timeout_secs: self.timeout,
                    retries: self.retries,
                    keep_io: self.keep_io,
                    jobs: self.jobs,
                }))
            }
        }
    }
}
