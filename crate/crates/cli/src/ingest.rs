//! Loading timestamped frame sequences from a directory.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};
use glob::Pattern;
use log::warn;
use skyflow::segmentation::TimedFrame;

use crate::config::TIMESTAMP_FORMAT;
use crate::error::{CliError, Result};

/// Consecutive frames further apart than this many intervals start a new run.
pub const GAP_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    /// Time-ordered runs without gaps.
    pub runs: Vec<Vec<TimedFrame>>,
    /// Source file of every frame, shaped like `runs`.
    pub paths: Vec<Vec<PathBuf>>,
    pub skipped: Vec<Skipped>,
}

impl Ingested {
    pub fn frame_count(&self) -> usize {
        self.runs.iter().map(Vec::len).sum()
    }
}

/// Reads the first run of 14 or more digits in `name` as `YYYYMMDDhhmmss`
/// (UTC).
pub fn parse_timestamp(name: &str) -> Option<DateTime<Utc>> {
    let bytes = name.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i - start >= 14 {
            let digits = &name[start..start + 14];
            return NaiveDateTime::parse_from_str(digits, TIMESTAMP_FORMAT)
                .ok()
                .map(|t| t.and_utc());
        }
    }
    None
}

/// Splits time-ordered frames wherever the spacing exceeds
/// `GAP_FACTOR * interval_minutes`.
pub fn split_runs(frames: Vec<TimedFrame>, interval_minutes: f64) -> Vec<Vec<TimedFrame>> {
    split_by_gap(frames, |f| f.0, interval_minutes)
}

fn split_by_gap<T>(
    items: Vec<T>,
    time: impl Fn(&T) -> DateTime<Utc>,
    interval_minutes: f64,
) -> Vec<Vec<T>> {
    let max_gap_ms = GAP_FACTOR * interval_minutes * 60_000.0;
    let mut runs: Vec<Vec<T>> = Vec::new();
    for item in items {
        let continues = runs.last().and_then(|run| run.last()).is_some_and(|prev| {
            ((time(&item) - time(prev)).num_milliseconds() as f64) <= max_gap_ms
        });
        match runs.last_mut() {
            Some(run) if continues => run.push(item),
            _ => runs.push(vec![item]),
        }
    }
    runs
}

fn skip(skipped: &mut Vec<Skipped>, path: &Path, reason: String) {
    warn!("skipping {}: {reason}", path.display());
    skipped.push(Skipped {
        path: path.to_path_buf(),
        reason,
    });
}

/// Loads every file in `dir` whose name matches `pattern`, orders the frames
/// by the timestamp in their names and splits them into gap-free runs.
/// Files without a timestamp or that fail to decode are skipped with a
/// warning.
pub fn ingest(dir: &Path, pattern: &str, interval_minutes: f64) -> Result<Ingested> {
    let matcher = Pattern::new(pattern)
        .map_err(|e| CliError::invalid(format!("bad filename pattern `{pattern}`: {e}")))?;
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut candidates = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if matcher.matches(&name) && entry.path().is_file() {
            candidates.push((name, entry.path()));
        }
    }
    if candidates.is_empty() {
        return Err(skyflow::Error::EmptyInput(format!(
            "no files matching `{pattern}` in {}",
            dir.display()
        ))
        .into());
    }
    candidates.sort();

    let mut skipped = Vec::new();
    let mut frames: Vec<(PathBuf, TimedFrame)> = Vec::new();
    for (name, path) in candidates {
        let Some(time) = parse_timestamp(&name) else {
            skip(
                &mut skipped,
                &path,
                "no YYYYMMDDhhmmss timestamp in the file name".into(),
            );
            continue;
        };
        if frames.iter().any(|(_, (t, _))| *t == time) {
            skip(
                &mut skipped,
                &path,
                format!("duplicate timestamp {}", time.format(TIMESTAMP_FORMAT)),
            );
            continue;
        }
        match skyflow::io::load_image(&path) {
            Ok(img) if img.channels() == 3 => frames.push((path, (time, img))),
            Ok(_) => skip(&mut skipped, &path, "not an RGB image".into()),
            Err(e) => skip(&mut skipped, &path, e.to_string()),
        }
    }
    if frames.is_empty() {
        return Err(skyflow::Error::EmptyInput(format!(
            "none of the files in {} could be read",
            dir.display()
        ))
        .into());
    }
    frames.sort_by_key(|(_, (t, _))| *t);
    if let Some((_, first)) = frames.first() {
        let dims = first.1.dims();
        if let Some((_, (t, img))) = frames.iter().find(|(_, (_, img))| img.dims() != dims) {
            return Err(CliError::invalid(format!(
                "frame at {} is {}x{} but the first frame is {}x{}",
                t.format(TIMESTAMP_FORMAT),
                img.width(),
                img.height(),
                dims.0,
                dims.1
            )));
        }
    }
    let (paths, runs) = split_by_gap(frames, |(_, f)| f.0, interval_minutes)
        .into_iter()
        .map(|run| run.into_iter().unzip())
        .unzip();
    Ok(Ingested {
        runs,
        paths,
        skipped,
    })
}
