use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nltva_cli::commands::{describe, execute, Run};
use nltva_cli::config::{Analysis, Overrides, RunConfig};
use nltva_cli::output::{Artifacts, RunManifest};
use nltva_cli::CliError;
use nltva_core::timedomain::configure_threads;

#[derive(Parser)]
#[command(
    name = "nltva",
    version,
    about = "Frequency responses, bifurcation tracking and basins of a Duffing oscillator with a nonlinear absorber"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absorber parameters from the tuning rules.
    Tune(Common),
    /// Frequency response with stability and bifurcations.
    FreqResponse(Common),
    /// Fold and Neimark-Sacker loci in the (ω, F) plane.
    Track(Common),
    /// Basins of attraction and basin-size ratios.
    Basins(Common),
    /// Region boundaries over an absorber parameter sweep.
    Regions(Common),
}

#[derive(Args)]
struct Common {
    /// Dotted-key TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a configuration key, e.g. `--set analysis.track.F_max=0.25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn run(kind: &str, common: Common) -> Result<(), CliError> {
    let started = Instant::now();
    let overrides = Overrides {
        out: common.out,
        seed: common.seed,
        threads: common.threads,
        set: common.set,
    };
    let config = RunConfig::load(common.config.as_deref(), kind, &overrides)?;
    configure_threads(config.run.threads)?;
    if !matches!(config.analysis, Analysis::Tune(_) | Analysis::Regions(_)) {
        eprintln!("system: {}", describe(&config.system.params()?));
    }
    let mut run = Run {
        artifacts: Artifacts::new(&config.run.out)?,
        warnings: Vec::new(),
        truncated: false,
    };
    execute(&config, &mut run)?;
    let manifest = RunManifest {
        command: kind.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_toml()?,
        wall_time_s: started.elapsed().as_secs_f64(),
        truncated: run.truncated,
        warnings: run.warnings,
        outputs: run.artifacts.files.clone(),
    };
    manifest.write(run.artifacts.dir())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (kind, common) = match cli.command {
        Command::Tune(c) => ("tune", c),
        Command::FreqResponse(c) => ("freq_response", c),
        Command::Track(c) => ("track", c),
        Command::Basins(c) => ("basins", c),
        Command::Regions(c) => ("regions", c),
    };
    match run(kind, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
