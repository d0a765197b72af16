use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eit_optomech::config::{Experiment, ExperimentConfig};
use eit_optomech::experiments::{self, RunOutput};
use eit_optomech::linsys::ModelTier;
use eit_optomech::{Error, Result};

/// Default output directory when neither --out nor [output].dir is given.
const OUT_ENV: &str = "EITSIM_OUT";

#[derive(Parser)]
#[command(name = "eitsim", version, about = "EIT-assisted optomechanics: cooling, state mapping and entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML), or a CSV output whose header is reused.
    /// Without it the built-in default for the subcommand is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory. Falls back to [output].dir, then $EITSIM_OUT, then ./eitsim-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Model tier: full, rwa-anti-stokes, rwa-stokes or bare.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Accepted for scripting compatibility. Every computation is deterministic.
    #[arg(long, global = true)]
    seedless: bool,

    /// Also print the JSON summary to stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Cavity transmission with and without atoms.
    Spectrum,
    /// Steady-state mirror occupancy over a sweep.
    Cool,
    /// Transfer of an atomic squeezed state to the mirror.
    Map,
    /// Steady-state atom-mirror entanglement over a sweep.
    Entangle,
    /// Derived rates, analytic predictions, regime checks and stability.
    Rates,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Spectrum => Experiment::Spectrum,
            Command::Cool => Experiment::Cool,
            Command::Map => Experiment::Map,
            Command::Entangle => Experiment::Entangle,
            Command::Rates => Experiment::Rates,
        }
    }
}

fn run(cli: &Cli) -> Result<RunOutput> {
    let experiment = cli.command.experiment();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_toml(experiment.default_config())?,
    };
    if let Some(m) = &cli.model {
        cfg.tier = m
            .parse::<ModelTier>()
            .map_err(|_| Error::Config(format!("--model: unknown model tier `{m}`")))?;
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers: must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::NumericFailure(format!("worker pool: {e}")))?;
    let output = pool.install(|| experiments::run(&cfg, experiment))?;

    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("eitsim-out"));
    std::fs::create_dir_all(&dir)?;
    for f in &output.files {
        std::fs::write(dir.join(&f.name), &f.contents)?;
    }
    // A closed stdout (e.g. piped into `head`) must not turn a finished run into a panic.
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", output.report);
    for f in &output.files {
        let _ = writeln!(out, "wrote {}", dir.join(&f.name).display());
    }
    if cli.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&output.summary).unwrap_or_default());
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) if out.all_unstable => {
            eprintln!("eitsim: every sweep point is unstable");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eitsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
