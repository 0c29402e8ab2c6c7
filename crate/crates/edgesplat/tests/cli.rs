use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn edgesplat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgesplat")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = edgesplat(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: [&str; 10] = [
    "--set",
    "loop.tracking_iterations=3",
    "--set",
    "loop.mapping_iterations=3",
    "--set",
    "init.n_total=40",
    "--set",
    "init.d_min=0.8",
    "--set",
    "init.d_max=1.6",
];

fn simulate(dir: &Path, reference: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(format!("sim-{reference}"));
    let mut args = vec!["simulate", "--reference", reference, "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn simulate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "single-line", &[]);
    for f in [
        "events.txt",
        "trajectory_gt.tum",
        "camera.txt",
        "scene.txt",
        "brightness_first.pgm",
        "brightness_last.pgm",
        "edge_mask_first.pgm",
        "edge_mask_last.pgm",
        "effective_config.txt",
    ] {
        assert!(sim.join(f).is_file(), "missing {f}");
    }
    let events = std::fs::read_to_string(sim.join("events.txt")).unwrap();
    assert!(events.starts_with("# t_us x y p\n# resolution 64 64\n"));
}

#[test]
fn binary_and_text_events_give_identical_edge_maps() {
    let dir = tempfile::tempdir().unwrap();
    let text = simulate(dir.path(), "line-grid", &[]);
    let bin_dir = dir.path().join("bin");
    ok(&["simulate", "--reference", "line-grid", "--format", "binary", "--out", s(&bin_dir)]);
    for (src, name) in [(text.join("events.txt"), "a"), (bin_dir.join("events.bin"), "b")] {
        ok(&["detect-edges", "--events", s(&src), "--out", s(&dir.path().join(name))]);
    }
    let a = std::fs::read(dir.path().join("a/edges_0000.pgm")).unwrap();
    let b = std::fs::read(dir.path().join("b/edges_0000.pgm")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim = simulate(d, "line-orbit", &["--set", "sim.noise_ratio=0.5", "--seed", "2"]);
    let cam = sim.join("camera.txt");

    ok(&["detect-edges", "--events", s(&sim.join("events.txt")), "--camera", s(&cam), "--out", s(&d.join("edges"))]);
    ok(&[
        "init-gaussians",
        "--edge-map",
        s(&d.join("edges/edges_0000.pgm")),
        "--camera",
        s(&cam),
        "--set",
        "init.n_total=50",
        "--out",
        s(&d.join("init")),
    ]);
    let ply = std::fs::read_to_string(d.join("init/gaussians.ply")).unwrap();
    assert!(ply.contains("element vertex 50\n"));

    let rec = d.join("rec");
    let events = sim.join("events.txt");
    let mut args = vec!["reconstruct", "--events", s(&events), "--camera", s(&cam), "--out", s(&rec)];
    args.extend_from_slice(&FAST);
    ok(&args);
    let traj = std::fs::read_to_string(rec.join("trajectory.tum")).unwrap();
    assert_eq!(traj.lines().filter(|l| !l.starts_with('#')).count(), 9);
    let loss = std::fs::read_to_string(rec.join("loss.csv")).unwrap();
    assert!(loss.lines().count() > 1);
    let config = std::fs::read_to_string(rec.join("effective_config.txt")).unwrap();
    assert!(config.contains("loop.tracking_iterations = 3"));

    ok(&[
        "eval",
        "--trajectory",
        s(&rec.join("trajectory.tum")),
        "--gt",
        s(&sim.join("trajectory_gt.tum")),
        "--name",
        "orbit",
        "--out",
        s(&d.join("eval")),
    ]);
    let metrics = std::fs::read_to_string(d.join("eval/metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    assert!(row.starts_with("orbit,"), "{row}");

    ok(&[
        "render",
        "--scene",
        s(&rec.join("scene.ply")),
        "--camera",
        s(&cam),
        "--trajectory",
        s(&rec.join("trajectory.tum")),
        "--time-us",
        "100000",
        "--out",
        s(&d.join("render")),
    ]);
    let pgm = std::fs::read(d.join("render/render.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n65535\n"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    std::fs::write(&cfg, "# test\nseed = 9\nloss.beta = 1.5\n").unwrap();
    let out = dir.path().join("o");
    ok(&["simulate", "--reference", "single-line", "--config", s(&cfg), "--set", "loss.beta=0.5", "--out", s(&out)]);
    let snap = std::fs::read_to_string(out.join("effective_config.txt")).unwrap();
    assert!(snap.contains("seed = 9"));
    assert!(snap.contains("loss.beta = 0.5"));
}

#[test]
fn errors_are_single_lines_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());

    let unknown = edgesplat(&["simulate", "--reference", "single-line", "--set", "loss.gamma=1", "--out", out]);
    assert_eq!(unknown.status.code(), Some(1));
    let err = String::from_utf8(unknown.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]:") && err.contains("loss.gamma"), "{err}");

    let missing =
        edgesplat(&["reconstruct", "--events", "/nonexistent/e.txt", "--camera", "/nonexistent/c.txt", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));
    let err = String::from_utf8(missing.stderr).unwrap();
    assert!(err.starts_with("error[io]:") && err.contains("/nonexistent/"), "{err}");

    let bad_scene = dir.path().join("bad.txt");
    std::fs::write(&bad_scene, "background = 0.3\n[segment]\na = 0 0\n").unwrap();
    let parse = edgesplat(&[
        "simulate",
        "--scene",
        s(&bad_scene),
        "--camera",
        s(&bad_scene),
        "--trajectory",
        s(&bad_scene),
        "--out",
        out,
    ]);
    assert_eq!(parse.status.code(), Some(1));
    assert!(String::from_utf8(parse.stderr).unwrap().starts_with("error[parse]:"));

    let usage = edgesplat(&["simulate", "--out", out]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8(usage.stderr).unwrap().starts_with("error[usage]:"));

    let out_of_range = edgesplat(&["simulate", "--reference", "single-line", "--set", "loss.lambda=2", "--out", out]);
    assert_eq!(out_of_range.status.code(), Some(1));
}
