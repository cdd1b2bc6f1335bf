//! Thin experiment runner over the `cfmon` library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cfmon::experiments::{report_signaling, run_experiment, with_worker_pool, ExperimentSpec, ExperimentTag};
use cfmon::scenario::SystemParams;
use cfmon::transmission::MonitoringConfig;

/// Cell-free massive MIMO proactive-monitoring experiments.
#[derive(Parser, Debug)]
#[command(name = "cfmon", version, about)]
struct Cli {
    /// Plain-text key=value parameter file (defaults match the reference
    /// setup; see README for the key list).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment tag: D_sweep | M_sweep | csi_cases | N_sweep | Nr_sweep |
    /// rhoJ_sweep | asymptotics.
    #[arg(long)]
    experiment: String,

    /// Run seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV results and the JSON run manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = library default). Affects wall time only.
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Shrink every Monte-Carlo depth tenfold.
    #[arg(long)]
    fast: bool,
}

fn run(cli: Cli) -> cfmon::Result<()> {
    let mut params = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            SystemParams::from_config_str(&text)?
        }
        None => SystemParams::default(),
    };
    if let Some(seed) = cli.seed {
        params.rng_seed = seed;
    }
    params.validate()?;

    let tag = ExperimentTag::parse(&cli.experiment)?;
    let spec = ExperimentSpec::defaults(tag, &params, cli.fast, cli.out.clone());

    // Fronthaul cost of the configured system, printed up front.
    print!(
        "{}",
        report_signaling(&params, &MonitoringConfig::all_observing(params.m, params.nr))
    );

    let written = with_worker_pool(cli.workers, || run_experiment(&params, &spec))?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{{\"error\":\"{}\"}}", e.to_string().replace('"', "'"));
            ExitCode::from(1)
        }
    }
}
