use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use horizon_harness::error::exit;
use horizon_harness::live::{LiveOptions, LiveServer, WS_PATH};
use horizon_harness::replay::{replay_file, write_estimates, ReplayOptions};
use horizon_harness::suite::{run_suites, write_suite, SuiteName, SuiteOptions};
use horizon_harness::{
    experiment::recompute_report, run_experiment, ExperimentConfig, HarnessError, Result, RunStatus,
};

#[derive(Parser)]
#[command(name = "horizon-lab", version, about = "Event-camera horizon tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set delays.event_us=12000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self, defaults: &[(&str, &str)], seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = seed {
            overrides.push(format!("seed={seed}"));
        }
        ExperimentConfig::load_with_defaults(self.config.as_deref(), defaults, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one batch experiment and write its logs and run.json.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Run identification suites and print their pass/fail table.
    Suite {
        /// Suites to run; all of them by default.
        #[arg(value_parser = parse_suite)]
        names: Vec<SuiteName>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: u64,
        /// Override a suite option, e.g. `--opt rmse.duration_s=5`.
        #[arg(long = "opt", value_name = "KEY=VALUE")]
        options: Vec<String>,
        #[arg(long, default_value = "suite")]
        out: PathBuf,
    },
    /// Serve the manual scenario in real time over a websocket.
    Serve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: SocketAddr,
        #[arg(long, default_value_t = 60.0)]
        telemetry_hz: f64,
        /// Stop after this many seconds instead of waiting for Ctrl-C.
        #[arg(long)]
        duration_s: Option<f64>,
    },
    /// Run the estimator offline over an event log.
    Replay {
        events: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "replay_estimate.csv")]
        out: PathBuf,
        /// Delivery delay applied to every event (us).
        #[arg(long, default_value_t = 0)]
        event_us: u64,
        /// Seed the filter at zero attitude on the first tick.
        #[arg(long)]
        prior: bool,
    },
    /// Recompute a run's summary from its logs and compare with run.json.
    Report { dir: PathBuf },
}

fn parse_suite(s: &str) -> std::result::Result<SuiteName, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(config: &ConfigArgs, seed: u64, out: &Path) -> Result<i32> {
    let cfg = config.load(&[], Some(seed))?;
    let output = run_experiment(&cfg)?;
    let report = output.write(out)?;
    print_json(&report.summary)?;
    match &report.status {
        RunStatus::Completed => Ok(exit::PASS),
        RunStatus::Faulted { at_us, message } => {
            eprintln!("run faulted at {at_us} us: {message}");
            Ok(exit::RUN_FAULT)
        }
    }
}

fn suite(names: &[SuiteName], config: &ConfigArgs, seed: u64, options: &[String], out: &Path) -> Result<i32> {
    let cfg = config.load(
        &[("duration_s", "1.0"), ("scenario", "{ kind = \"coast\" }")],
        Some(seed),
    )?;
    let options = SuiteOptions::with_overrides(options)?;
    let names = if names.is_empty() {
        SuiteName::ALL.to_vec()
    } else {
        names.to_vec()
    };
    let report = run_suites(&cfg, &names, &options)?;
    write_suite(out, &report)?;
    for check in &report.checks {
        println!("{check}");
    }
    Ok(if report.passed() { exit::PASS } else { exit::ACCEPTANCE })
}

fn serve(config: &ConfigArgs, seed: u64, addr: SocketAddr, telemetry_hz: f64, duration_s: Option<f64>) -> Result<i32> {
    let cfg = config.load(
        &[
            ("duration_s", "1e9"),
            ("scenario", "{ kind = \"manual\", ramp_deg_s = 0.0 }"),
        ],
        Some(seed),
    )?;
    let options = LiveOptions {
        telemetry_hz,
        ..LiveOptions::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| HarnessError::Server(e.to_string()))?;
    let summary = runtime.block_on(async move {
        let server = LiveServer::bind(cfg, addr, options).await?;
        eprintln!("serving ws://{}{WS_PATH}", server.local_addr()?);
        server
            .run(async move {
                match duration_s {
                    Some(s) => tokio::time::sleep(Duration::from_secs_f64(s.max(0.0))).await,
                    None => {
                        let _ = tokio::signal::ctrl_c().await;
                    }
                }
            })
            .await
    })?;
    print_json(&summary)?;
    Ok(if summary.fault.is_some() {
        exit::RUN_FAULT
    } else {
        exit::PASS
    })
}

fn replay(events: &Path, config: &ConfigArgs, out: &Path, event_us: u64, prior: bool) -> Result<i32> {
    let cfg = config.load(
        &[
            ("seed", "0"),
            ("duration_s", "1.0"),
            ("scenario", "{ kind = \"coast\" }"),
        ],
        None,
    )?;
    let options = ReplayOptions {
        event_us,
        prior,
        ..ReplayOptions::default()
    };
    let rows = replay_file(events, &cfg.camera, cfg.estimator, &options)?;
    write_estimates(out, &rows)?;
    let measured = rows.iter().filter(|r| r.has_measurement()).count();
    println!(
        "{} ticks, {measured} with a measurement, written to {}",
        rows.len(),
        out.display()
    );
    Ok(exit::PASS)
}

fn report(dir: &Path) -> Result<i32> {
    let (report, recomputed) = recompute_report(dir)?;
    print_json(&recomputed)?;
    if recomputed == report.summary {
        println!("summary matches {}", dir.join("run.json").display());
        Ok(exit::PASS)
    } else {
        eprintln!("summary recomputed from logs differs from run.json");
        Ok(exit::ACCEPTANCE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => run(config, *seed, out),
        Command::Suite {
            names,
            config,
            seed,
            options,
            out,
        } => suite(names, config, *seed, options, out),
        Command::Serve {
            config,
            seed,
            addr,
            telemetry_hz,
            duration_s,
        } => serve(config, *seed, *addr, *telemetry_hz, *duration_s),
        Command::Replay {
            events,
            config,
            out,
            event_us,
            prior,
        } => replay(events, config, out, *event_us, *prior),
        Command::Report { dir } => report(dir),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
