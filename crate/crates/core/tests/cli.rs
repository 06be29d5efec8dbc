//! Command-line behavior: exit codes, messages and files written.

use std::path::Path;

use viascope::cli::run_cli;
use viascope::io::fdm::{load_depth_map, save_depth_map};
use viascope::io::pgm::encode_pgm16;
use viascope::io::LightsConfig;
use viascope::prelude::*;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run_cli(
        std::iter::once("viascope").chain(args.iter().copied()),
        &mut o,
        &mut e,
    );
    (
        code,
        String::from_utf8(o).unwrap(),
        String::from_utf8(e).unwrap(),
    )
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn write_lights(dir: &Path, k: usize) -> String {
    let cfg = LightsConfig::from_light_set(&ring_lights(k, 45.0).unwrap());
    let path = dir.join("lights.json");
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    s(&path)
}

fn write_frame(dir: &Path, name: &str, w: usize, h: usize) -> String {
    let path = dir.join(name);
    std::fs::write(&path, encode_pgm16(&Raster::filled(w, h, 0.5))).unwrap();
    s(&path)
}

fn files_in(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().count()
}

#[test]
fn reconstruct_needs_three_images() {
    let dir = tempfile::tempdir().unwrap();
    let lights = write_lights(dir.path(), 3);
    let a = write_frame(dir.path(), "a.pgm", 4, 4);
    let b = write_frame(dir.path(), "b.pgm", 4, 4);
    let out = dir.path().join("depth.fdm1");
    let (code, _, err) = run(&[
        "reconstruct",
        "--lights",
        &lights,
        "--pitch",
        "1",
        "--out",
        &s(&out),
        &a,
        &b,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 3 images"), "{err}");
    assert!(!out.exists());
}

#[test]
fn mismatched_frame_sizes_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let lights = write_lights(dir.path(), 3);
    let a = write_frame(dir.path(), "a.pgm", 4, 4);
    let b = write_frame(dir.path(), "b.pgm", 4, 4);
    let c = write_frame(dir.path(), "c.pgm", 5, 4);
    let out = dir.path().join("depth.fdm1");
    let (code, _, err) = run(&[
        "reconstruct",
        "--lights",
        &lights,
        "--pitch",
        "1",
        "--out",
        &s(&out),
        &a,
        &b,
        &c,
    ]);
    assert_eq!(code, 1);
    assert!(
        err.contains("c.pgm") && err.contains("5x4") && err.contains("4x4"),
        "{err}"
    );
    assert!(!out.exists());
}

#[test]
fn coplanar_lights_are_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    // three lights in one vertical plane
    let cfg = r#"{"kind":"unit_vectors","lights":[[0.6,0,0.8],[-0.6,0,0.8],[0,0,1]]}"#;
    let lights = dir.path().join("lights.json");
    std::fs::write(&lights, cfg).unwrap();
    let frames: Vec<String> = (0..3)
        .map(|k| write_frame(dir.path(), &format!("{k}.pgm"), 4, 4))
        .collect();
    let out = dir.path().join("depth.fdm1");
    let mut args = vec![
        "reconstruct",
        "--lights",
        lights.to_str().unwrap(),
        "--pitch",
        "1",
        "--out",
    ];
    let out_s = s(&out);
    args.push(&out_s);
    args.extend(frames.iter().map(String::as_str));
    let (code, _, err) = run(&args);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("rank deficient"), "{err}");
    assert!(!out.exists());
}

#[test]
fn flat_map_has_no_via() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.fdm1");
    save_depth_map(&input, &DepthMap::new(Raster::zeros(16, 16), 1.0).unwrap()).unwrap();
    let out = dir.path().join("metrics.csv");
    let (code, _, err) = run(&[
        "inspect",
        "--slices",
        "3",
        "--in",
        &s(&input),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("no via"), "{err}");
    assert_eq!(files_in(dir.path()), 1);
}

#[test]
fn lightcheck_prints_both_heights() {
    let (code, out, _) = run(&[
        "lightcheck",
        "--na",
        "0.2",
        "--n-substrate",
        "1.46",
        "--offset-mm",
        "20",
    ]);
    assert_eq!(code, 0);
    let critical = (1.0f64 / 1.46).asin();
    let aperture = 0.2f64.asin();
    let expect = format!(
        "h_min_mm={:.6} h_max_mm={:.6}\n",
        20.0 / critical.tan(),
        20.0 / (2.0 * aperture).tan()
    );
    assert_eq!(out, expect);

    let (code, out, _) = run(&[
        "lightcheck",
        "--na",
        "0.5",
        "--n-substrate",
        "1.46",
        "--offset-mm",
        "20",
    ]);
    assert_eq!((code, out.as_str()), (0, "EMPTY\n"));
    let (code, _, err) = run(&[
        "lightcheck",
        "--na",
        "0.2",
        "--n-substrate",
        "1.46",
        "--offset-mm",
        "-1",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("offset"), "{err}");
}

/// Renders a taper under an overhead light plus a ring of four.
fn render_frames(dir: &Path) -> Vec<String> {
    let scene = SceneSpec::single(96, 96, 0.5, ViaSpec::tapered([0.0, 0.0], 15.0, 12.0, 20.0));
    std::fs::write(dir.join("scene.json"), serde_json::to_vec(&scene).unwrap()).unwrap();
    let mut dirs = ring_lights(4, 45.0).unwrap().to_arrays();
    dirs.insert(0, [0.0, 0.0, 1.0]);
    let cfg = LightsConfig::UnitVectors { lights: dirs };
    std::fs::write(dir.join("lights.json"), serde_json::to_vec(&cfg).unwrap()).unwrap();
    let (code, out, err) = run(&[
        "render",
        &s(&dir.join("scene.json")),
        "--lights",
        &s(&dir.join("lights.json")),
        "--out-dir",
        &s(&dir.join("frames")),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("rendered 5 frames of 96x96"), "{out}");
    (0..5).map(|k| format!("frames/frame_{k:02}.pgm")).collect()
}

#[test]
fn run_job_resolves_paths_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let frames = render_frames(dir.path());
    let lights = std::fs::read_to_string(dir.path().join("frames/lights.json")).unwrap();
    let job = format!(
        r#"{{
  "lights": {lights},
  "images": {images},
  "pixel_pitch_um": 0.5,
  "leveling": {{ "spatial_sigma": 1.0, "depth_sigma": 10.0 }},
  "slice_count": 5,
  "references": [{{ "depth_um": 20.0, "diameter_um": 29.6 }}],
  "outputs": {{
    "depth": "out/depth.fdm1",
    "leveled": "out/leveled.fdm1",
    "metrics": "out/metrics.csv",
    "report": "out/report.csv"
  }}
}}"#,
        images = serde_json::to_string(&frames).unwrap(),
    );
    std::fs::create_dir(dir.path().join("out")).unwrap();
    let config = dir.path().join("job.json");
    std::fs::write(&config, job).unwrap();

    let (code, out, err) = run(&["run", "--config", &s(&config)]);
    assert_eq!(code, 0, "{err}");
    assert!(
        out.lines().next().unwrap().starts_with("via 0: depth "),
        "{out}"
    );
    assert!(out.contains("depth MAPE"), "{out}");
    for name in [
        "depth.fdm1",
        "leveled.fdm1",
        "metrics.csv",
        "metrics.summary.csv",
        "report.csv",
    ] {
        assert!(
            dir.path().join("out").join(name).is_file(),
            "{name} missing"
        );
    }
    let metrics = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 5);
    let report = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let mape: Vec<f64> = report
        .lines()
        .last()
        .unwrap()
        .split(',')
        .filter_map(|v| v.parse().ok())
        .collect();
    assert_eq!(mape.len(), 2);
    assert!(mape.iter().all(|m| *m < 5.0), "{report}");

    let leveled = load_depth_map(&dir.path().join("out/leveled.fdm1")).unwrap();
    assert_eq!(
        (leveled.width(), leveled.height(), leveled.pixel_pitch),
        (96, 96, 0.5)
    );
}

#[test]
fn failing_job_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let frames = render_frames(dir.path());
    let lights = std::fs::read_to_string(dir.path().join("frames/lights.json")).unwrap();
    // 4x1 tiles cut the single via apart, so inspection fails after
    // reconstruction and leveling already succeeded
    let job = format!(
        r#"{{"lights": {lights}, "images": {images}, "pixel_pitch_um": 0.5, "tiles": [4, 1],
            "leveling": {{ "spatial_sigma": 1.0 }},
            "outputs": {{ "depth": "depth.fdm1", "leveled": "leveled.fdm1", "metrics": "metrics.csv" }}}}"#,
        images = serde_json::to_string(&frames).unwrap(),
    );
    let config = dir.path().join("job.json");
    std::fs::write(&config, job).unwrap();
    let before = files_in(dir.path());
    let (code, _, err) = run(&["run", "--config", &s(&config)]);
    assert_ne!(code, 0);
    assert!(err.starts_with("error: "), "{err}");
    assert_eq!(files_in(dir.path()), before);
}

#[test]
fn job_with_too_few_images_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("job.json");
    std::fs::write(
        &config,
        r#"{"lights": {"kind": "positions_mm", "lights": [[10,0,10],[0,10,10],[-10,0,10]]},
            "images": ["a.pgm", "b.pgm"], "pixel_pitch_um": 1.0,
            "outputs": {"depth": "d.fdm1", "metrics": "m.csv"}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&["run", "--config", &s(&config)]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 3 images"), "{err}");
}

#[test]
fn compare_checks_via_counts() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    std::fs::write(
        dir.path().join("metrics.summary.csv"),
        "via_id,depth_um,diameter_um\n0,10,20\n1,11,21\n",
    )
    .unwrap();
    let reference = dir.path().join("ref.csv");
    std::fs::write(&reference, "via_id,ref_depth_um,ref_diam_um\n0,10,20\n").unwrap();
    let out = dir.path().join("report.csv");
    let (code, _, err) = run(&[
        "compare",
        "--reference",
        &s(&reference),
        "--in",
        &s(&metrics),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("2 measurements vs 1 references"), "{err}");
    assert!(!out.exists());

    std::fs::write(
        &reference,
        "via_id,ref_depth_um,ref_diam_um\n0,10,20\n1,10,20\n",
    )
    .unwrap();
    let (code, out_text, _) = run(&[
        "compare",
        "--reference",
        &s(&reference),
        "--in",
        &s(&metrics),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(out_text, "depth MAPE 5.0000%, diameter MAPE 2.5000%\n");
    let report = std::fs::read_to_string(&out).unwrap();
    assert_eq!(report.lines().last(), Some("MAPE,,,5.00000,,,2.50000"));
}
