//! Flat `key = value` configuration with `#` comments.
//!
//! Command-line flags are folded into the same key space after the file is
//! read, so a flag always overrides the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use skyflow::prediction::DEFAULT_FRAME_INTERVAL;
use skyflow::segmentation::SegmentParams;
use skyflow::{FlowParams, Method, SceneSpec};

use crate::error::{CliError, Result};

pub const DEFAULT_PATTERN: &str = "*.png";
pub const DEFAULT_STEPS: usize = 5;
pub const DEFAULT_SYNTH_START: &str = "20150416100000";
pub const TIMESTAMP_FORMAT: &str = "%Y%m%d%H%M%S";

const RUN_KEYS: &[&str] = &[
    "input_dir",
    "pattern",
    "interval",
    "steps",
    "roi",
    "out",
    "write_flows",
    "fallback_threshold",
    "method",
    "alpha",
    "window_sigma",
    "iterations",
    "pyramid_scale",
    "pyramid_min_dim",
    "pyramid_levels",
    "warps_per_level",
    "eigen_threshold",
];

const SCENE_KEYS: &[&str] = &[
    "width",
    "height",
    "frames",
    "velocity_x",
    "velocity_y",
    "deformation_rate",
    "blobs",
    "blob_scale",
    "noise_sigma",
    "seed",
    "start",
];

/// Raw settings, keyed by lower-case names with `-` folded to `_`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::invalid(format!(
                    "config line {}: expected key = value, got `{line}`",
                    n + 1
                ))
            })?;
            let key = normalize_key(key);
            if !RUN_KEYS.contains(&key.as_str()) && !SCENE_KEYS.contains(&key.as_str()) {
                return Err(CliError::invalid(format!(
                    "config line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            settings.values.insert(key, value.trim().to_string());
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(normalize_key(key), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::invalid(format!("setting `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        let d = FlowParams::default();
        let method: Method = match self.raw("method") {
            Some(m) => m
                .parse()
                .map_err(|e| CliError::invalid(format!("setting `method`: {e}")))?,
            None => d.method,
        };
        let params = FlowParams {
            method,
            alpha: self.get_or("alpha", d.alpha)?,
            window_sigma: self.get_or("window_sigma", d.window_sigma)?,
            iterations: self.get_or("iterations", d.iterations)?,
            pyramid_scale: self.get_or("pyramid_scale", d.pyramid_scale)?,
            pyramid_min_dim: self.get_or("pyramid_min_dim", d.pyramid_min_dim)?,
            pyramid_levels: self.get_or("pyramid_levels", d.pyramid_levels)?,
            warps_per_level: self.get_or("warps_per_level", d.warps_per_level)?,
            eigen_threshold: self.get_or("eigen_threshold", d.eigen_threshold)?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let config = RunConfig {
            input_dir: self.get("input_dir")?,
            pattern: self.get_or("pattern", DEFAULT_PATTERN.to_string())?,
            frame_interval: self.get_or("interval", DEFAULT_FRAME_INTERVAL)?,
            flow: self.flow_params()?,
            max_lead_steps: self.get_or("steps", DEFAULT_STEPS)?,
            roi: self.get("roi")?,
            output_dir: self.get_or("out", PathBuf::from("."))?,
            write_flows: self.get_or("write_flows", false)?,
            segment: SegmentParams {
                fallback_threshold: self.get_or(
                    "fallback_threshold",
                    SegmentParams::default().fallback_threshold,
                )?,
            },
        };
        if !(config.frame_interval > 0.0 && config.frame_interval.is_finite()) {
            return Err(CliError::invalid(format!(
                "interval must be positive, got {}",
                config.frame_interval
            )));
        }
        if config.max_lead_steps == 0 {
            return Err(CliError::invalid("steps must be at least 1"));
        }
        Ok(config)
    }

    pub fn scene_spec(&self) -> Result<SceneSpec> {
        let d = SceneSpec::default();
        let spec = SceneSpec {
            width: self.get_or("width", d.width)?,
            height: self.get_or("height", d.height)?,
            n_frames: self.get_or("frames", d.n_frames)?,
            velocity: (
                self.get_or("velocity_x", d.velocity.0)?,
                self.get_or("velocity_y", d.velocity.1)?,
            ),
            deformation_rate: self.get_or("deformation_rate", d.deformation_rate)?,
            n_blobs: self.get_or("blobs", d.n_blobs)?,
            blob_scale: self.get_or("blob_scale", d.blob_scale)?,
            noise_sigma: self.get_or("noise_sigma", d.noise_sigma)?,
            seed: self.get_or("seed", d.seed)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Timestamp of the first synthetic frame.
    pub fn synth_start(&self) -> Result<DateTime<Utc>> {
        let raw = self.raw("start").unwrap_or(DEFAULT_SYNTH_START);
        NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT)
            .map(|t| t.and_utc())
            .map_err(|_| {
                CliError::invalid(format!(
                    "setting `start`: expected YYYYMMDDhhmmss, got `{raw}`"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_dir: Option<PathBuf>,
    pub pattern: String,
    /// Minutes between consecutive frames.
    pub frame_interval: f64,
    pub flow: FlowParams,
    pub max_lead_steps: usize,
    pub roi: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub write_flows: bool,
    pub segment: SegmentParams,
}
