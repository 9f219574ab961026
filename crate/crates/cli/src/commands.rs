//! The four subcommands. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use chrono::Duration;
use log::info;
use skyflow::flow::{pyramid_flow, to_velocity};
use skyflow::segmentation::{evaluate_runs, segment_with, EvalOptions, TimedFrame};
use skyflow::{cascade_predict, generate, io, ratio_channel, AccuracyReport, ScalarField};

use crate::config::{RunConfig, Settings, TIMESTAMP_FORMAT};
use crate::error::{CliError, Result};
use crate::ingest::ingest;
use crate::plot::accuracy_svg;

pub const CSV_NAME: &str = "accuracy.csv";
pub const SVG_NAME: &str = "accuracy.svg";
pub const TRUTH_DIR: &str = "truth";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "frame".to_string(), |s| s.to_string_lossy().into_owned())
}

fn input_dir(config: &RunConfig) -> Result<&Path> {
    config.input_dir.as_deref().ok_or_else(|| {
        CliError::invalid("no input directory given (argument or `input_dir` setting)")
    })
}

/// `2` for whole minutes, `2.5` otherwise.
pub fn format_minutes(m: f64) -> String {
    if m.fract() == 0.0 {
        format!("{}", m as i64)
    } else {
        format!("{m}")
    }
}

fn median(field: &ScalarField) -> f64 {
    let mut v = field.data().to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    /// Median velocity in pixels per minute.
    pub median: (f64, f64),
    pub written: Vec<PathBuf>,
}

/// Velocity between two frames: NFLO in pixels per minute, a false-colour
/// map per component and a text summary.
pub fn run_flow(frame1: &Path, frame2: &Path, config: &RunConfig) -> Result<FlowSummary> {
    let a = io::load_image(frame1)?;
    let b = io::load_image(frame2)?;
    if a.dims() != b.dims() {
        return Err(CliError::invalid(format!(
            "frame sizes differ: {} is {}x{}, {} is {}x{}",
            frame1.display(),
            a.width(),
            a.height(),
            frame2.display(),
            b.width(),
            b.height()
        )));
    }
    let flow = pyramid_flow(&ratio_channel(&a)?, &ratio_channel(&b)?, &config.flow)?;
    let velocity = to_velocity(&flow, config.frame_interval)?;

    let out = &config.output_dir;
    create_dir(out)?;
    let base = stem(frame1);
    let nflo = out.join(format!("{base}_flow.nflo"));
    let vx_png = out.join(format!("{base}_vx.png"));
    let vy_png = out.join(format!("{base}_vy.png"));
    let summary_txt = out.join(format!("{base}_flow.txt"));

    io::write_nflo(&nflo, velocity.as_flow())?;
    let (x_lo, x_hi) = io::write_false_color(&vx_png, velocity.x())?;
    let (y_lo, y_hi) = io::write_false_color(&vy_png, velocity.y())?;
    let med = (median(velocity.x()), median(velocity.y()));
    let text = format!(
        "units = pixels_per_minute\ninterval_minutes = {}\nmethod = {}\n\
         vx_min = {x_lo:.6}\nvx_max = {x_hi:.6}\nvx_median = {:.6}\n\
         vy_min = {y_lo:.6}\nvy_max = {y_hi:.6}\nvy_median = {:.6}\n",
        config.frame_interval, config.flow.method, med.0, med.1
    );
    write_text(&summary_txt, &text)?;
    Ok(FlowSummary {
        median: med,
        written: vec![nflo, vx_png, vy_png, summary_txt],
    })
}

/// Cascaded forecast from the last two frames of the latest run, with a
/// sky/cloud mask per predicted frame.
pub fn run_predict(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = input_dir(config)?;
    let data = ingest(dir, &config.pattern, config.frame_interval)?;
    let (run, paths) = (
        data.runs.last().expect("ingest yields a run"),
        data.paths.last().expect("paths mirror runs"),
    );
    if run.len() < 2 {
        return Err(CliError::invalid(format!(
            "prediction needs at least 2 consecutive frames, the latest run has {}",
            run.len()
        )));
    }
    let (prev, cur) = (&run[run.len() - 2], &run[run.len() - 1]);
    let forecast = cascade_predict(&prev.1, &cur.1, config.max_lead_steps, &config.flow)?
        .with_timing(cur.0, config.frame_interval);
    info!(
        "forecasting {} steps from {}",
        forecast.len(),
        cur.0.format(TIMESTAMP_FORMAT)
    );

    let out = &config.output_dir;
    create_dir(out)?;
    let base = stem(&paths[paths.len() - 1]);
    let mut written = Vec::new();
    for (k, (frame, flow)) in forecast.frames.iter().zip(&forecast.flows).enumerate() {
        let name = format!(
            "{base}_pred+{}min",
            format_minutes(forecast.lead_minutes(k + 1))
        );
        let png = out.join(format!("{name}.png"));
        let mask_png = out.join(format!("{name}_mask.png"));
        io::save_image(&png, frame)?;
        io::write_mask_png(&mask_png, &segment_with(frame, &config.segment)?.mask)?;
        written.push(png);
        written.push(mask_png);
        if config.write_flows {
            let nflo = out.join(format!("{name}.nflo"));
            io::write_nflo(&nflo, flow)?;
            written.push(nflo);
        }
    }
    Ok(written)
}

/// Forecast accuracy per lead time over every run of the input directory,
/// as CSV and SVG.
pub fn run_evaluate(config: &RunConfig) -> Result<(AccuracyReport, Vec<PathBuf>)> {
    let dir = input_dir(config)?;
    let data = ingest(dir, &config.pattern, config.frame_interval)?;
    let roi = config.roi.as_deref().map(io::read_roi_png).transpose()?;
    let options = EvalOptions {
        nominal_interval_minutes: Some(config.frame_interval),
        roi,
        segment: config.segment,
    };
    let runs: Vec<&[TimedFrame]> = data.runs.iter().map(Vec::as_slice).collect();
    let report = evaluate_runs(&runs, config.max_lead_steps, &config.flow, &options)?;

    let out = &config.output_dir;
    create_dir(out)?;
    let (csv, svg) = (out.join(CSV_NAME), out.join(SVG_NAME));
    write_text(&csv, &report.to_csv())?;
    write_text(&svg, &accuracy_svg(&report))?;
    Ok((report, vec![csv, svg]))
}

/// Synthetic sequence: frames named by timestamp, plus ground-truth masks
/// and per-pair flow (pixels per frame) under `truth/`.
pub fn run_synth(settings: &Settings, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = settings.scene_spec()?;
    let start = settings.synth_start()?;
    let scene = generate(&spec)?;
    let out = &config.output_dir;
    let truth = out.join(TRUTH_DIR);
    create_dir(&truth)?;

    let step_ms = (config.frame_interval * 60_000.0).round() as i64;
    let mut written = Vec::new();
    for (k, frame) in scene.frames.iter().enumerate() {
        let t = start + Duration::milliseconds(step_ms * k as i64);
        let name = format!("sky_{}", t.format(TIMESTAMP_FORMAT));
        let png = out.join(format!("{name}.png"));
        io::save_image(&png, frame)?;
        written.push(png);
        let mask = truth.join(format!("{name}_mask.png"));
        io::write_mask_png(&mask, &scene.true_masks[k])?;
        written.push(mask);
        if let Some(flow) = scene.true_flow.get(k) {
            let nflo = truth.join(format!("{name}_flow.nflo"));
            io::write_nflo(&nflo, flow)?;
            written.push(nflo);
        }
    }
    let scene_cfg = truth.join("scene.cfg");
    let text = format!(
        "width = {}\nheight = {}\nframes = {}\nvelocity_x = {}\nvelocity_y = {}\ndeformation_rate = {}\n\
         blobs = {}\nblob_scale = {}\nnoise_sigma = {}\nseed = {}\nstart = {}\ninterval = {}\n",
        spec.width,
        spec.height,
        spec.n_frames,
        spec.velocity.0,
        spec.velocity.1,
        spec.deformation_rate,
        spec.n_blobs,
        spec.blob_scale,
        spec.noise_sigma,
        spec.seed,
        start.format(TIMESTAMP_FORMAT),
        config.frame_interval
    );
    write_text(&scene_cfg, &text)?;
    written.push(scene_cfg);
    Ok(written)
}
