use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resteer_core::engine::{render_files, run_live, validate_files, EngineConfig};

#[derive(Parser)]
#[command(name = "resteer", version, about = "Resonance-model filtering steered by position")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a mono WAV along a pose trajectory.
    Render {
        #[arg(long = "in", value_name = "WAV")]
        input: PathBuf,
        #[arg(long, value_name = "CSV")]
        traj: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_name = "WAV")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-block parameter log here.
        #[arg(long, value_name = "CSV")]
        log: Option<PathBuf>,
        /// Engine settings file (key = value).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve telemetry over OSC/UDP and the JSON bridge until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a model and map; exits 0 only when they fit together.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_name = "HZ")]
        min_bandwidth: Option<f64>,
        #[arg(long, value_name = "HZ", default_value_t = 44_100.0)]
        sample_rate: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                msg.push_str(&format!(": {s}"));
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Render {
            input,
            traj,
            model,
            map,
            out,
            seed,
            log,
            config,
        } => {
            let mut cfg = match config {
                Some(path) => EngineConfig::load(&path)?,
                None => EngineConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let result = render_files(&input, &traj, &model, &map, &out, log.as_deref(), &cfg)?;
            log::info!(
                "rendered {} samples in {} blocks to {}",
                result.samples.len(),
                result.log.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { config } => {
            let cfg = EngineConfig::load(&config)?;
            let handle = run_live(&cfg)?;
            let stop = handle.stop_flag();
            ctrlc::set_handler(move || stop.store(true, std::sync::atomic::Ordering::SeqCst))?;
            log::info!("press Ctrl-C to stop");
            handle.wait()?;
            log::info!("stopped");
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            model,
            map,
            min_bandwidth,
            sample_rate,
        } => {
            let min_bandwidth = min_bandwidth.unwrap_or(EngineConfig::default().min_bandwidth_hz);
            let report = validate_files(&model, &map, min_bandwidth, sample_rate)?;
            println!("{report}");
            Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
