use std::path::Path;
use std::process::{Command, Output};

use crt_core::grid::{Image2D, VlineSinogram};
use crt_core::io::{Container, DataFile};

fn crt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crt")).args(args).current_dir(dir).output().expect("binary runs")
}

fn crt_threads(args: &[&str], dir: &Path, threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crt"))
        .args(args)
        .current_dir(dir)
        .env("CRT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

#[test]
fn phantom_then_forward_has_expected_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--smiley", "-n", "201", "-o", "f.crtd"], d));
    ok(&crt(&["forward-vline", "-i", "f.crtd", "--nphi", "64", "--npsi", "51", "-o", "g.crtd"], d));
    let f = Image2D::load(d.join("f.crtd")).unwrap();
    assert_eq!((f.n_y, f.n_x), (201, 201));
    let g = VlineSinogram::load(d.join("g.crtd")).unwrap();
    assert_eq!((g.n_phi, g.n_psi()), (64, 51));
    assert!(g.data.iter().all(|v| v.is_finite()));
    assert!(g.data.iter().any(|&v| v > 0.0));
}

#[test]
fn zero_sinogram_inverts_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--disc", "0.4", "-n", "33", "-o", "f.crtd"], d));
    ok(&crt(&["forward-vline", "-i", "f.crtd", "--nphi", "32", "--npsi", "33", "-o", "g.crtd"], d));
    let mut g = VlineSinogram::load(d.join("g.crtd")).unwrap();
    g.data.iter_mut().for_each(|v| *v = 0.0);
    g.save(d.join("z.crtd")).unwrap();
    ok(&crt(&["invert-vline", "-i", "z.crtd", "--size", "33", "-o", "r.crtd"], d));
    let r = Image2D::load(d.join("r.crtd")).unwrap();
    assert_eq!((r.n_y, r.n_x), (33, 33));
    assert!(r.values.iter().all(|&v| v == 0.0));
}

#[test]
fn reproduce_writes_figures_and_noise_hurts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = crt(&["reproduce-fig4", "--out-dir", "fig", "-n", "65", "--nphi", "64", "--npsi", "65"], d);
    ok(&out);
    for name in ["phantom.pgm", "sinogram.pgm", "clean.pgm", "noisy.pgm", "metrics.json"] {
        assert!(d.join("fig").join(name).is_file(), "{name} missing");
    }
    let text = std::fs::read_to_string(d.join("fig/metrics.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    let clean = m["clean_error"].as_f64().unwrap();
    let noisy = m["noisy_error"].as_f64().unwrap();
    assert!(clean.is_finite() && noisy >= clean, "clean {clean}, noisy {noisy}");
    assert_eq!(m["seed"], 2024);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = crt(&["phantom", "--smiley", "--frobnicate", "-o", "f.crtd"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = crt(&["phantom", "-o", "f.crtd"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = crt(&["phantom", "--smiley", "-n", "1", "-o", "f.crtd"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_and_missing_files_exit_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.crtd"), b"CRTX\x01\x00").unwrap();
    let out = crt(&["render", "-i", "bad.crtd", "-o", "x.pgm"], d);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("offset 0"), "stderr: {err}");

    // Valid header, payload cut short.
    let file = DataFile::new(vec![4, 4], vec![1.0; 16], Default::default()).unwrap();
    let mut bytes = file.encode();
    bytes.truncate(40);
    std::fs::write(d.join("short.crtd"), bytes).unwrap();
    let out = crt(&["render", "-i", "short.crtd", "-o", "x.pgm"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));

    let out = crt(&["render", "-i", "nope.crtd", "-o", "x.pgm"], d);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn wrong_container_kind_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--disc", "0.4", "-n", "33", "-o", "f.crtd"], d));
    // Well-formed file, wrong content for the command: a validation failure.
    let out = crt(&["invert-vline", "-i", "f.crtd", "-o", "r.crtd"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("image2d"));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--blobs", "7", "-n", "24", "-o", "v.crtd"], d));
    let args = |o: &'static str| {
        ["forward-cone", "-i", "v.crtd", "--nphi", "8", "--nz", "4", "--nbeta", "6", "--npsi", "8", "--neta", "16", "--step", "0.01", "-o", o]
    };
    ok(&crt_threads(&args("c1.crtd"), d, "1"));
    ok(&crt_threads(&args("c4.crtd"), d, "4"));
    let a = std::fs::read(d.join("c1.crtd")).unwrap();
    let b = std::fs::read(d.join("c4.crtd")).unwrap();
    assert_eq!(a, b);

    ok(&crt(&["phantom", "--smiley", "-n", "51", "-o", "s.crtd"], d));
    ok(&crt(&["forward-vline", "-i", "s.crtd", "--nphi", "32", "--npsi", "51", "-o", "g.crtd"], d));
    ok(&crt_threads(&["invert-vline", "-i", "g.crtd", "--size", "51", "-o", "r1.crtd"], d, "1"));
    ok(&crt_threads(&["invert-vline", "-i", "g.crtd", "--size", "51", "-o", "r3.crtd"], d, "3"));
    assert_eq!(std::fs::read(d.join("r1.crtd")).unwrap(), std::fs::read(d.join("r3.crtd")).unwrap());
}

#[test]
fn render_writes_binary_pgm() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--ball", "indicator", "-n", "16", "-o", "v.crtd"], d));
    ok(&crt(&["render", "-i", "v.crtd", "--slice", "8", "-o", "v.pgm"], d));
    let bytes = std::fs::read(d.join("v.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n16 16\n255\n"));
    assert_eq!(bytes.len(), b"P5\n16 16\n255\n".len() + 256);
}

#[test]
fn norms_reports_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&crt(&["phantom", "--blobs", "3", "-n", "16", "-o", "v.crtd"], d));
    ok(&crt(
        &["forward-cone", "-i", "v.crtd", "--nphi", "8", "--nz", "6", "--z-min", "-2", "--z-max", "2", "--nbeta", "8", "--npsi", "8", "--neta", "16", "--step", "0.01", "-o", "c.crtd"],
        d,
    ));
    let out = crt(&["norms", "-i", "v.crtd", "-c", "c.crtd"], d);
    ok(&out);
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["k_weight"], 1);
    assert!(m["sobolev_minus_1"].as_f64().unwrap() > 0.0);
    assert!(m["cone_norm"].as_f64().unwrap() > 0.0);
}
