use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skyflow_cli::commands::{run_evaluate, run_flow, run_predict, run_synth};
use skyflow_cli::config::Settings;
use skyflow_cli::Result;

#[derive(Parser, Debug)]
#[command(
    name = "skyflow",
    version,
    about = "Cloud motion estimation and short-term forecasts from sky images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Velocity field between two frames
    Flow { frame1: PathBuf, frame2: PathBuf },
    /// Forecast the next frames from the latest two in a directory
    Predict {
        /// Directory of timestamped frames
        input_dir: Option<PathBuf>,
    },
    /// Score cascaded forecasts against the observed frames
    Evaluate {
        /// Directory of timestamped frames
        input_dir: Option<PathBuf>,
    },
    /// Write a synthetic sequence with ground truth
    Synth,
}

#[derive(Args, Debug)]
struct Common {
    /// key = value settings file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Minutes between frames
    #[arg(long, global = true)]
    interval: Option<f64>,
    /// Forecast steps
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Flow solver: hs, lk or clg
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    window_sigma: Option<f64>,
    /// Solver sweeps per warp
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Pyramid depth; 0 goes as deep as the image allows
    #[arg(long, global = true)]
    pyramid_levels: Option<usize>,
    /// PNG mask of scored pixels (white = scored)
    #[arg(long, global = true)]
    roi: Option<PathBuf>,
    /// Frame filename glob
    #[arg(long, global = true)]
    pattern: Option<String>,
    /// Also write the flow of every forecast step
    #[arg(long, global = true)]
    write_flows: bool,
}

fn settings(common: &Common, input_dir: Option<&PathBuf>) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let mut put = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            s.set(key, v);
        }
    };
    put("input_dir", input_dir.map(|p| p.display().to_string()));
    put("out", common.out.as_ref().map(|p| p.display().to_string()));
    put("interval", common.interval.map(|v| v.to_string()));
    put("steps", common.steps.map(|v| v.to_string()));
    put("method", common.method.clone());
    put("alpha", common.alpha.map(|v| v.to_string()));
    put("window_sigma", common.window_sigma.map(|v| v.to_string()));
    put("iterations", common.iterations.map(|v| v.to_string()));
    put(
        "pyramid_levels",
        common.pyramid_levels.map(|v| v.to_string()),
    );
    put("roi", common.roi.as_ref().map(|p| p.display().to_string()));
    put("pattern", common.pattern.clone());
    put(
        "write_flows",
        common.write_flows.then(|| "true".to_string()),
    );
    Ok(s)
}

fn run(cli: &Cli) -> Result<()> {
    let input_dir = match &cli.command {
        Command::Predict { input_dir } | Command::Evaluate { input_dir } => input_dir.as_ref(),
        _ => None,
    };
    let settings = settings(&cli.common, input_dir)?;
    let config = settings.run_config()?;
    let written = match &cli.command {
        Command::Flow { frame1, frame2 } => {
            let summary = run_flow(frame1, frame2, &config)?;
            println!(
                "median velocity: ({:.4}, {:.4}) px/min",
                summary.median.0, summary.median.1
            );
            summary.written
        }
        Command::Predict { .. } => run_predict(&config)?,
        Command::Evaluate { .. } => {
            let (report, written) = run_evaluate(&config)?;
            print!("{}", report.to_csv());
            written
        }
        Command::Synth => run_synth(&settings, &config)?,
    };
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
