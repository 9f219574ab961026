use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, TimeZone, Utc};
use skyflow::io::{load_image, read_mask_png, read_nflo, save_image};
use skyflow::synthetic::{generate, SceneSpec};
use skyflow::Image;
use skyflow_cli::config::TIMESTAMP_FORMAT;
use skyflow_cli::ingest::ingest;

fn skyflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skyflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Saves `frames` as `sky_<timestamp>.png` at the given minute offsets.
fn write_frames(dir: &Path, frames: &[Image], minutes: &[i64]) -> Vec<PathBuf> {
    let t0 = Utc.with_ymd_and_hms(2015, 4, 16, 9, 0, 0).unwrap();
    frames
        .iter()
        .zip(minutes)
        .map(|(img, &m)| {
            let path = dir.join(format!(
                "sky_{}.png",
                (t0 + Duration::minutes(m)).format(TIMESTAMP_FORMAT)
            ));
            save_image(&path, img).unwrap();
            path
        })
        .collect()
}

fn scene(velocity: (f64, f64), n_frames: usize, seed: u64) -> Vec<Image> {
    generate(&SceneSpec {
        width: 64,
        height: 64,
        n_frames,
        velocity,
        n_blobs: 4,
        seed,
        ..SceneSpec::default()
    })
    .unwrap()
    .frames
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn ingest_orders_frames_and_splits_on_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((1.0, 0.0), 5, 1);
    write_frames(dir.path(), &frames, &[0, 2, 4, 6, 8]);
    let data = ingest(dir.path(), "*.png", 2.0).unwrap();
    assert_eq!(data.runs.len(), 1);
    assert_eq!(data.runs[0].len(), 5);
    assert!(data.runs[0].windows(2).all(|p| p[0].0 < p[1].0));
    assert_eq!(data.runs[0][3].1, load_image(&data.paths[0][3]).unwrap());

    let gapped = tempfile::tempdir().unwrap();
    write_frames(gapped.path(), &frames, &[0, 2, 8, 10, 12]);
    let data = ingest(gapped.path(), "*.png", 2.0).unwrap();
    assert_eq!(
        data.runs.iter().map(Vec::len).collect::<Vec<_>>(),
        vec![2, 3]
    );
}

#[test]
fn ingest_skips_unreadable_files() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((1.0, 0.0), 4, 2);
    let paths = write_frames(dir.path(), &frames, &[0, 2, 4, 6]);
    std::fs::write(&paths[3], b"\x89PNG\r\n\x1a\nthis is not a png").unwrap();
    let data = ingest(dir.path(), "*.png", 2.0).unwrap();
    assert_eq!(data.runs.iter().map(Vec::len).collect::<Vec<_>>(), vec![3]);
    assert_eq!(data.skipped.len(), 1);
    assert_eq!(data.skipped[0].path, paths[3]);
}

#[test]
fn ingest_skips_names_without_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    write_frames(dir.path(), &scene((1.0, 0.0), 3, 2), &[0, 2, 4]);
    std::fs::write(dir.path().join("notes.png"), b"no timestamp").unwrap();
    std::fs::write(dir.path().join("readme.txt"), b"ignored by the pattern").unwrap();
    let data = ingest(dir.path(), "*.png", 2.0).unwrap();
    assert_eq!(data.frame_count(), 3);
    assert_eq!(data.skipped.len(), 1);
    assert!(data.skipped[0].reason.contains("timestamp"));
    assert_eq!(
        ingest(dir.path(), "sky_*.png", 2.0).unwrap().skipped.len(),
        0
    );
}

#[test]
fn ingest_of_an_empty_match_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = ingest(dir.path(), "*.png", 2.0).unwrap_err();
    assert!(
        matches!(
            err,
            skyflow_cli::CliError::Core(skyflow::Error::EmptyInput(_))
        ),
        "{err}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn flow_of_identical_frames_is_still() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((0.0, 0.0), 3, 3);
    let paths = write_frames(dir.path(), &frames[..2], &[0, 2]);
    let out = dir.path().join("out");
    let run = skyflow(&["flow", arg(&paths[0]), arg(&paths[1]), "--out", arg(&out)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let stem = paths[0].file_stem().unwrap().to_str().unwrap();
    let flow = read_nflo(&out.join(format!("{stem}_flow.nflo"))).unwrap();
    assert_eq!(flow.max_norm(), 0.0);
    for suffix in ["_vx.png", "_vy.png", "_flow.txt"] {
        assert!(out.join(format!("{stem}{suffix}")).is_file(), "{suffix}");
    }
}

#[test]
fn flow_reports_velocity_in_pixels_per_minute() {
    let dir = tempfile::tempdir().unwrap();
    let frames = generate(&SceneSpec {
        velocity: (2.0, 0.0),
        seed: 4,
        ..SceneSpec::default()
    })
    .unwrap()
    .frames;
    let paths = write_frames(dir.path(), &frames[..2], &[0, 2]);
    let out = dir.path().join("out");
    let run = skyflow(&[
        "flow",
        arg(&paths[0]),
        arg(&paths[1]),
        "--out",
        arg(&out),
        "--interval",
        "2",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let stem = paths[0].file_stem().unwrap().to_str().unwrap();
    let summary = std::fs::read_to_string(out.join(format!("{stem}_flow.txt"))).unwrap();
    let value = |key: &str| -> f64 {
        summary
            .lines()
            .find_map(|l| {
                l.strip_prefix(key)
                    .and_then(|r| r.trim_start().strip_prefix('='))
            })
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    let (vx, vy) = (value("vx_median"), value("vy_median"));
    assert!(
        (vx - 1.0).abs() < 0.15 && vy.abs() < 0.15,
        "median velocity ({vx}, {vy})"
    );
}

#[test]
fn flow_rejects_mismatched_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    save_image(&a, &Image::rgb_from_fn(40, 30, |_, _| [0.2, 0.4, 0.8])).unwrap();
    save_image(&b, &Image::rgb_from_fn(36, 30, |_, _| [0.2, 0.4, 0.8])).unwrap();
    let run = skyflow(&["flow", arg(&a), arg(&b), "--out", arg(dir.path())]);
    assert_eq!(run.status.code(), Some(2));
    let msg = stderr(&run);
    assert!(msg.contains("40x30") && msg.contains("36x30"), "{msg}");
}

#[test]
fn predicting_a_static_sky_returns_the_last_frame() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((0.0, 0.0), 3, 5);
    let paths = write_frames(dir.path(), &frames, &[0, 2, 4]);
    let out = dir.path().join("out");
    let run = skyflow(&[
        "predict",
        arg(dir.path()),
        "--out",
        arg(&out),
        "--steps",
        "3",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let last = load_image(&paths[2]).unwrap();
    let stem = paths[2].file_stem().unwrap().to_str().unwrap();
    for m in [2, 4, 6] {
        let pred = load_image(&out.join(format!("{stem}_pred+{m}min.png"))).unwrap();
        assert_eq!(pred, last, "lead {m}");
    }
}

#[test]
fn prediction_writes_frames_and_masks_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((1.0, 1.0), 3, 6);
    let paths = write_frames(dir.path(), &frames, &[0, 2, 4]);
    let out = dir.path().join("out");
    let run = skyflow(&[
        "predict",
        arg(dir.path()),
        "--out",
        arg(&out),
        "--steps",
        "5",
        "--write-flows",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let stem = paths[2].file_stem().unwrap().to_str().unwrap();
    let mut expected: Vec<String> = [2, 4, 6, 8, 10]
        .iter()
        .flat_map(|m| {
            ["png", "nflo"]
                .iter()
                .map(move |ext| format!("{stem}_pred+{m}min.{ext}"))
                .chain(std::iter::once(format!("{stem}_pred+{m}min_mask.png")))
        })
        .collect();
    expected.sort();
    let mut found: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    found.sort();
    assert_eq!(found, expected);
    let mask = read_mask_png(&out.join(format!("{stem}_pred+2min_mask.png"))).unwrap();
    assert_eq!(mask.dims(), (64, 64));
    assert!(mask.count() > 0);
}

#[test]
fn prediction_needs_two_frames() {
    let dir = tempfile::tempdir().unwrap();
    write_frames(dir.path(), &scene((1.0, 0.0), 3, 7)[..1], &[0]);
    let run = skyflow(&[
        "predict",
        arg(dir.path()),
        "--out",
        arg(&dir.path().join("out")),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("at least 2"), "{}", stderr(&run));
}

#[test]
fn evaluating_a_static_sky_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((0.0, 0.0), 7, 8);
    write_frames(dir.path(), &frames, &[0, 2, 4, 6, 8, 10, 12]);
    let out = dir.path().join("out");
    let run = skyflow(&[
        "evaluate",
        arg(dir.path()),
        "--out",
        arg(&out),
        "--steps",
        "5",
        "--interval",
        "2",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let csv = std::fs::read_to_string(out.join("accuracy.csv")).unwrap();
    assert_eq!(
        csv,
        "lead_minutes,accuracy,n_frames\n2,1.000000,1\n4,1.000000,1\n6,1.000000,1\n8,1.000000,1\n10,1.000000,1\n"
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout), csv);
}

#[test]
fn evaluation_names_the_frames_it_needs() {
    let dir = tempfile::tempdir().unwrap();
    write_frames(dir.path(), &scene((1.0, 0.0), 4, 9), &[0, 2, 4, 6]);
    let run = skyflow(&[
        "evaluate",
        arg(dir.path()),
        "--out",
        arg(&dir.path().join("out")),
        "--steps",
        "5",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("at least 7"), "{}", stderr(&run));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scene.cfg");
    std::fs::write(
        &cfg,
        "# small scene\nwidth = 40\nheight = 36\nframes = 4\nseed = 11\ninterval = 5\n",
    )
    .unwrap();
    let out = dir.path().join("seq");
    let run = skyflow(&[
        "synth",
        "--config",
        arg(&cfg),
        "--out",
        arg(&out),
        "--interval",
        "3",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let names: Vec<String> = {
        let mut v: Vec<String> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".png"))
            .collect();
        v.sort();
        v
    };
    assert_eq!(
        names,
        [
            "sky_20150416100000.png",
            "sky_20150416100300.png",
            "sky_20150416100600.png",
            "sky_20150416100900.png"
        ]
    );
    assert_eq!(load_image(&out.join(&names[0])).unwrap().dims(), (40, 36));
    let truth = out.join("truth");
    assert!(truth.join("sky_20150416100600_flow.nflo").is_file());
    assert!(!truth.join("sky_20150416100900_flow.nflo").exists());
    assert!(truth.join("sky_20150416100900_mask.png").is_file());
}

#[test]
fn bad_settings_exit_with_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "alpha = quick\n").unwrap();
    let run = skyflow(&["synth", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(run.status.code(), Some(2));
    let run = skyflow(&["synth", "--method", "sobel", "--out", arg(dir.path())]);
    assert_eq!(run.status.code(), Some(2));
    let run = skyflow(&["synth", "--config", arg(&dir.path().join("missing.cfg"))]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn reruns_reproduce_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let frames = scene((1.0, 0.5), 3, 12);
    let paths = write_frames(dir.path(), &frames, &[0, 2, 4]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = skyflow(&["flow", arg(&paths[0]), arg(&paths[1]), "--out", arg(out)]);
        assert!(run.status.success());
        let run = skyflow(&[
            "predict",
            arg(dir.path()),
            "--out",
            arg(out),
            "--steps",
            "2",
            "--write-flows",
        ]);
        assert!(run.status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4 + 6);
    for name in names {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}
