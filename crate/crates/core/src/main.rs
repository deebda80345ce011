use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mhpm::harness::{self, RunConfig};
use mhpm::Error;

/// Run one mHPM experiment and write its artifacts.
#[derive(Parser, Debug)]
#[command(name = "mhpm", version)]
struct Cli {
    /// charlm, saccade, arbitration, skinner or gradcheck
    experiment: String,
    /// Config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u64>,
    /// Output directory; overrides the config and MHPM_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set("general", "seed", &s.to_string())?;
    }
    if let Some(t) = cli.ticks {
        cfg.set("general", "ticks", &t.to_string())?;
    }
    if let Some(o) = &cli.out {
        cfg.set("general", "out_dir", &o.to_string_lossy())?;
    }
    let out = harness::run_experiment(&cli.experiment, &cfg)?;
    let dir = harness::out_dir(&cfg);
    harness::write_artifacts(&out, &cfg, &dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            println!("{}: artifacts in {}", cli.experiment, dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
