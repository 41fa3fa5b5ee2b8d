mod cache;
mod commands;

use bhreduce::RunConfig;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bhreduce", version, about = "Reduce the periodic stationary NLS to its lattice model and check the reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML); the built-in reference configuration if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for band solves and sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Accept sigma below 1/2.
    #[arg(long, global = true)]
    allow_low_sigma: bool,
    /// Cache directory, overriding the config.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Band structure per hbar.
    Bands,
    /// Localized basis per hbar.
    Wannier,
    /// Lattice parameters per hbar.
    Params,
    /// Lattice ground-state ladder over the eta list.
    Dnls,
    /// Continuum states rebuilt from the lattice ladder.
    Reconstruct,
    /// Full sweep with fits.
    Scan,
    /// Acceptance checks; exits 1 if any fails.
    Verify,
}

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<bhreduce::Error>() {
        Some(bhreduce::Error::InvalidConfig(_) | bhreduce::Error::InvalidPotential(_)) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| bhreduce::Error::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::reference(),
    };
    if let Some(c) = &cli.cache {
        cfg.io.cache_dir = c.clone();
    }
    if let Some(o) = &cli.out {
        cfg.io.output_dir = o.clone();
    }
    cfg.validate(cli.allow_low_sigma)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let run = match cli.command {
        Command::Bands => commands::bands(&cfg, cli.allow_low_sigma),
        Command::Wannier => commands::wannier(&cfg, cli.allow_low_sigma),
        Command::Params => commands::params(&cfg, cli.allow_low_sigma),
        Command::Dnls => commands::dnls(&cfg),
        Command::Reconstruct => commands::reconstruct(&cfg, cli.allow_low_sigma),
        Command::Scan => commands::scan(&cfg, cli.allow_low_sigma),
        Command::Verify => commands::verify(&cfg, cli.allow_low_sigma),
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
