use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use relaqd_core::config::{load_config, BraggScenario, KdMode, ScenarioKind};
use relaqd_core::scenario::{bragg_solve, run_scenario};
use relaqd_core::units::PhysicalConstants;
use relaqd_core::{Error, ErrorKind};

/// Relativistic quantum dynamics: Dirac and Klein-Gordon grid propagation,
/// Kapitza-Dirac mode dynamics and relativistic tunneling exponents.
#[derive(Debug, Parser)]
#[command(name = "relaqd", version)]
struct Cli {
    /// Directory for result files (overrides `[output] dir`).
    #[arg(long, global = true, value_name = "PATH")]
    out_dir: Option<PathBuf>,
    /// Worker threads for the solvers (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Log progress; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split-operator Dirac propagation on a periodic grid.
    PropagateDirac(ConfigArg),
    /// Split-operator Klein-Gordon propagation on a periodic grid.
    PropagateKg(ConfigArg),
    /// Kapitza-Dirac scattering in the plane-wave mode expansion.
    KapitzaDirac {
        #[command(subcommand)]
        mode: KdCommand,
    },
    /// Tunneling exponent over a momentum grid.
    WkbMap(ConfigArg),
    /// Most probable longitudinal momentum at the tunnel exit.
    WkbPeak(ConfigArg),
    /// Electron momentum satisfying the Bragg condition.
    Bragg(BraggArgs),
    /// Propagation throughput against grid size.
    Bench(ConfigArg),
}

#[derive(Debug, Subcommand)]
enum KdCommand {
    /// One pulse with the configured flat top.
    Evolve(ConfigArg),
    /// Transfer probability against flat-top duration.
    Scan(ConfigArg),
}

#[derive(Debug, Args)]
struct BraggArgs {
    /// Scenario file with a `[bragg]` block, instead of the flags below.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["nr", "nl", "photon_ev", "theta_deg"])]
    config: Option<PathBuf>,
    /// Photons absorbed from the right-moving beam.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    nr: Option<i32>,
    /// Photons absorbed from the left-moving beam (negative: emitted).
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    nl: Option<i32>,
    #[arg(long, required_unless_present = "config")]
    photon_ev: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    theta_deg: f64,
}

fn run_config(path: &Path, expected: ScenarioKind, kd_mode: Option<KdMode>, out_dir: Option<&Path>) -> Result<(), Error> {
    let mut cfg = load_config(path)?;
    if cfg.kind != expected {
        return Err(Error::config(
            "kind",
            format!("`{}` scenario given to the `{}` command", cfg.kind.as_str(), expected.as_str()),
        ));
    }
    if let Some(mode) = kd_mode {
        cfg.set_kd_mode(mode)?;
    }
    let report = run_scenario(&cfg, out_dir)?;
    info!(
        "wrote {} to {} in {:.2} s",
        report.outputs.join(", "),
        report.out_dir.display(),
        report.manifest.wall_time_seconds
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let out = cli.out_dir.as_deref();
    match cli.command {
        Command::PropagateDirac(a) => run_config(&a.config, ScenarioKind::PropagateDirac, None, out),
        Command::PropagateKg(a) => run_config(&a.config, ScenarioKind::PropagateKg, None, out),
        Command::KapitzaDirac { mode } => match mode {
            KdCommand::Evolve(a) => run_config(&a.config, ScenarioKind::KapitzaDirac, Some(KdMode::Evolve), out),
            KdCommand::Scan(a) => run_config(&a.config, ScenarioKind::KapitzaDirac, Some(KdMode::Scan), out),
        },
        Command::WkbMap(a) => run_config(&a.config, ScenarioKind::WkbMap, None, out),
        Command::WkbPeak(a) => run_config(&a.config, ScenarioKind::WkbPeak, None, out),
        Command::Bench(a) => run_config(&a.config, ScenarioKind::Bench, None, out),
        Command::Bragg(a) => match a.config {
            Some(path) => run_config(&path, ScenarioKind::Bragg, None, out),
            None => {
                let scenario = BraggScenario {
                    // clap enforces presence without --config
                    n_r: a.nr.unwrap_or_default(),
                    n_l: a.nl.unwrap_or_default(),
                    photon_ev: a.photon_ev.unwrap_or_default(),
                    theta: a.theta_deg.to_radians(),
                };
                let r = bragg_solve(&scenario, &PhysicalConstants::atomic())?;
                println!("p_mag = {:.10} a.u. ({:.6} keV/c)", r.p_mag, r.p_kev);
                println!("residual = {:.3e}", r.residual);
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            error!("--threads must be at least 1");
            return ExitCode::from(ErrorKind::Config.exit_code() as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
