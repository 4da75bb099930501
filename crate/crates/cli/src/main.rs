mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::Config;
use output::{Meta, OutDir};

/// Return-time large deviations on shifts of finite type.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment description; defaults to the full 2-shift with zero potential.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pressure, survivor pressures of the holes and the Gibbs constant.
    Pressure,
    /// CGF and rate function of the target (cgf.csv, rate.csv, domain.json).
    Rate,
    /// Monte Carlo estimates of CGF and tail rates.
    Simulate,
    /// Runs the built-in verification checks.
    Verify,
    /// Inner, outer and boundary approximations of the target.
    Approx,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Rate => "rate",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Approx => "approx",
        }
    }
}

fn load(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let cfg = load(cli)?;
    let meta = Meta {
        command: cli.command.name(),
        config_hash: cfg.hash(),
        version: returnlab::VERSION,
        seed: cfg.seed,
    };
    let mut out = OutDir::create(&cli.out, meta)?;
    let result = match cli.command {
        Command::Pressure => commands::pressure(&cfg, &mut out),
        Command::Rate => commands::rate(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Verify => commands::verify(&cfg, &mut out),
        Command::Approx => commands::approx(&cfg, &mut out),
    };
    for p in out.written() {
        eprintln!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
