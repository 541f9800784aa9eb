use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nvsat::ensembles::{Beta, DensityMode, EnsembleConfig, Sampler};
use nvsat_cli::{preset, run, CliError, CommandKind, GridSpec, OutputFormat, Quantity, RunConfig};

/// Embedded random-matrix ensembles of two non-interacting particles:
/// sampling, fluctuation estimates and closed-form number variance.
#[derive(Debug, Parser)]
#[command(name = "nvsat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one-particle spectra into the cache.
    Generate {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate form factor, number variance and spacings in windows.
    Stats {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        /// Window centres on the unfolded scale.
        #[arg(
            long = "zeta",
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        zeta: Vec<f64>,
        /// Window half-width on the unfolded scale [default: 2N].
        #[arg(long)]
        half_width: Option<f64>,
        /// Form-factor grid in units of chi = k R.
        #[arg(long)]
        k_grid: Option<GridSpec>,
        #[arg(long)]
        r_grid: Option<GridSpec>,
        /// Spacing orders, e.g. 0,1,2,3.
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        spacing_bins: usize,
        /// Interval centres averaged by the number-variance estimator.
        #[arg(long, default_value_t = 33)]
        offsets: usize,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate a closed-form statistic.
    Analytic {
        /// egue, egse, egoe, poisson, goe, gue or gse.
        #[arg(long)]
        model: String,
        /// Local two-particle density R (embedded models).
        #[arg(long)]
        density: Option<f64>,
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Tabulate a frequency-cutoff model.
    Model {
        /// poisson, goe, gue or gse.
        #[arg(long)]
        cutoff: String,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Join estimates with their analytic curves and report a verdict.
    Compare {
        #[arg(long)]
        stats_dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Execute a JSON run configuration (one object or an array).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the run configurations of a figure preset.
    Preset {
        /// One of fig2 .. fig13.
        name: String,
        /// Use the full-size ensembles instead of the desk-scale defaults.
        #[arg(long)]
        full_scale: bool,
        /// Root directory for the preset outputs.
        #[arg(long, default_value = "figures")]
        root: String,
        /// Execute the configurations instead of printing them.
        #[arg(long)]
        run: bool,
    },
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// 1, 2, 4 (goe, gue, gse) or poisson.
    #[arg(long)]
    beta: Beta,
    /// One-particle dimension N.
    #[arg(long = "n")]
    n_levels: usize,
    #[arg(long)]
    realizations: u64,
    #[arg(long, default_value_t = 20261015)]
    seed: u64,
    /// uniform or semicircle.
    #[arg(long, default_value = "uniform")]
    density_mode: DensityMode,
    /// Draw from dense matrices instead of the tridiagonal model.
    #[arg(long)]
    dense: bool,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long, value_enum, default_value = "sigma2")]
    quantity: QuantityArg,
    #[arg(long)]
    r_grid: Option<GridSpec>,
    /// Frequency grid (chi = k R for embedded models).
    #[arg(long)]
    k_grid: Option<GridSpec>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum QuantityArg {
    Sigma2,
    Delta3,
    FormFactor,
    Cluster,
}

impl EnsembleArgs {
    fn config(&self) -> Result<EnsembleConfig, CliError> {
        let sampler = if self.dense {
            Sampler::Dense
        } else {
            Sampler::Tridiagonal
        };
        EnsembleConfig::new(self.beta, self.n_levels, self.realizations, self.seed)
            .and_then(|c| c.with_density_mode(self.density_mode))
            .and_then(|c| c.with_sampler(sampler))
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl CommonArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.output_dir = self.output_dir.clone();
        c.threads = self.threads;
        c.format = match self.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
}

impl CurveArgs {
    fn apply(&self, c: &mut RunConfig) {
        self.common.apply(c);
        c.quantity = match self.quantity {
            QuantityArg::Sigma2 => Quantity::Sigma2,
            QuantityArg::Delta3 => Quantity::Delta3,
            QuantityArg::FormFactor => Quantity::FormFactor,
            QuantityArg::Cluster => Quantity::Cluster,
        };
        c.r_grid = self.r_grid.clone();
        c.k_grid = self.k_grid.clone();
    }
}

fn configs(command: Command) -> Result<(Vec<RunConfig>, bool), CliError> {
    let mut c = RunConfig::new(CommandKind::Generate, ".");
    match command {
        Command::Generate {
            ensemble,
            cache_dir,
            common,
        } => {
            common.apply(&mut c);
            c.ensemble = Some(ensemble.config()?);
            c.cache_dir = cache_dir;
        }
        Command::Stats {
            ensemble,
            zeta,
            half_width,
            k_grid,
            r_grid,
            orders,
            spacing_bins,
            offsets,
            cache_dir,
            common,
        } => {
            c.command = CommandKind::Stats;
            common.apply(&mut c);
            c.ensemble = Some(ensemble.config()?);
            c.zeta_targets = zeta;
            c.window_half_width = half_width;
            c.k_grid = k_grid;
            c.r_grid = r_grid;
            c.spacing_orders = orders;
            c.spacing_bins = spacing_bins;
            c.offsets = offsets;
            c.cache_dir = cache_dir;
        }
        Command::Analytic {
            model,
            density,
            curve,
        } => {
            c.command = CommandKind::Analytic;
            curve.apply(&mut c);
            c.model = Some(model.to_ascii_lowercase());
            c.density = density;
        }
        Command::Model {
            cutoff,
            delta,
            curve,
        } => {
            c.command = CommandKind::Model;
            curve.apply(&mut c);
            c.cutoff = Some(cutoff.to_ascii_lowercase());
            c.delta = Some(delta);
        }
        Command::Compare { stats_dir, common } => {
            c.command = CommandKind::Compare;
            common.apply(&mut c);
            c.stats_dir = Some(stats_dir);
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            let list = if value.is_array() {
                value
            } else {
                serde_json::Value::Array(vec![value])
            };
            let cfgs: Vec<RunConfig> = serde_json::from_value(list)
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            return Ok((cfgs, true));
        }
        Command::Preset {
            name,
            full_scale,
            root,
            run,
        } => {
            let cfgs = preset(&name, full_scale, &root)?;
            if !run {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&cfgs).expect("configs serialize")
                );
                return Ok((Vec::new(), false));
            }
            return Ok((cfgs, true));
        }
    }
    Ok((vec![c], true))
}

fn execute(command: Command) -> Result<(), CliError> {
    let (cfgs, go) = configs(command)?;
    if !go {
        return Ok(());
    }
    for c in &cfgs {
        c.validate()?;
    }
    if let Some(n) = cfgs.iter().find_map(|c| c.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    for c in &cfgs {
        for path in run(c)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvsat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
