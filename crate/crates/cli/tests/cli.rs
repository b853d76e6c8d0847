use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volrank"))
        .args(args)
        .env("VOLRANK_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = path(dir, name);
    let mut args = vec!["gen", "--output", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn gen_is_deterministic_with_expected_size() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(&dir, "a.s3dv", &["--kind", "blobs", "--dims", "64,64,64", "--seed", "5"]);
    let b = gen(&dir, "b.s3dv", &["--kind", "blobs", "--dims", "64,64,64", "--seed", "5"]);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes.len(), 20 + 64 * 64 * 64 * 8);
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let c = gen(&dir, "c.s3dv", &["--kind", "blobs", "--dims", "64,64,64", "--seed", "6"]);
    assert_ne!(bytes, std::fs::read(&c).unwrap());
    let f = gen(&dir, "f.s3dv", &["--kind", "blobs_noisy", "--dims", "8,9,10", "--dtype", "f32"]);
    assert_eq!(std::fs::read(&f).unwrap().len(), 20 + 720 * 4);
}

#[test]
fn argument_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "--kind", "multirank", "--dims", "4,5,6", "--rank", "5", "--output", s(&path(&dir, "x"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).starts_with("error kind="));

    let x = gen(&dir, "x.s3dv", &["--kind", "multirank", "--dims", "6,7,8", "--rank", "2"]);
    let out = run(&["decompose", "--input", s(&x), "--method", "s3dsvd", "--rank", "7", "--output", s(&path(&dir, "m"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains('6'), "{}", stderr(&out));

    for ks in ["0,2", "3,2", ""] {
        let out = run(&["sweep", "--input", s(&x), "--ks", ks, "--method", "s3dsvd"]);
        assert_eq!(code(&out), 2, "ks={ks:?}: {}", stderr(&out));
    }
    assert_eq!(code(&run(&["sweep", "--input", s(&x)])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["decompose", "--input", s(&x), "--method", "svd", "--rank", "2", "--output", "m"])), 2);
}

#[test]
fn reconstruct_rejects_level_zero_and_bad_slices() {
    let dir = tempfile::tempdir().unwrap();
    let x = gen(&dir, "x.s3dv", &["--kind", "multirank", "--dims", "6,7,8", "--rank", "2"]);
    let m = path(&dir, "m.s3dm");
    ok(&["decompose", "--input", s(&x), "--method", "tucker", "--rank", "3", "--output", s(&m)]);
    let y = path(&dir, "y.s3dv");
    assert_eq!(code(&run(&["reconstruct", "--input", s(&m), "--k", "0", "--output", s(&y)])), 2);
    assert_eq!(code(&run(&["reconstruct", "--input", s(&m), "--k", "4", "--output", s(&y)])), 2);
    assert_eq!(code(&run(&["reconstruct", "--input", s(&m), "--slices", "8", "--output", s(&y)])), 2);
    ok(&["reconstruct", "--input", s(&m), "--k", "2", "--slices", "0,7", "--output", s(&y)]);
    let slice = std::fs::read_to_string(format!("{}.slice7.txt", s(&y))).unwrap();
    assert_eq!(slice.lines().count(), 6);
    assert!(slice.lines().all(|l| l.split_whitespace().count() == 7));
}

#[test]
fn cpd_models_are_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let x = gen(&dir, "x.s3dv", &["--kind", "blobs", "--dims", "10,10,10", "--blobs", "3"]);
    let fit = |name: &str, seed: &str| {
        let m = path(&dir, name);
        let out = ok(&["decompose", "--input", s(&x), "--method", "cpd", "--rank", "3", "--seed", seed, "--output", s(&m)]);
        assert!(stderr(&out).contains("iterations="));
        std::fs::read(m).unwrap()
    };
    let a = fit("a.s3dm", "7");
    assert_eq!(a, fit("b.s3dm", "7"));
    assert_ne!(a, fit("c.s3dm", "8"));

    let y = path(&dir, "y.s3dv");
    let out = ok(&["reconstruct", "--input", s(&path(&dir, "a.s3dm")), "--k", "1", "--output", s(&y)]);
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn multirank_pipeline_recovers_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let x = gen(&dir, "x.s3dv", &["--kind", "multirank", "--dims", "20,24,28", "--rank", "4", "--seed", "2"]);
    let m = path(&dir, "m.s3dm");
    ok(&["decompose", "--input", s(&x), "--method", "s3dsvd", "--rank", "8", "--output", s(&m)]);
    let y = path(&dir, "y.s3dv");
    ok(&["reconstruct", "--input", s(&m), "--k", "4", "--output", s(&y)]);
    let out = ok(&["metrics", "--input", s(&x), "--reconstruction", s(&y)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("psnr_db,mse,rel_err"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[2] < 1e-10, "{row:?}");
}

#[test]
fn sweep_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let x = gen(&dir, "x.s3dv", &["--kind", "blobs", "--dims", "12,12,12"]);
    let csv = path(&dir, "sweep.csv");
    let args = ["sweep", "--input", s(&x), "--ks", "1,2,4,8,12", "--seeds", "0..3", "--no-timing", "--csv", s(&csv)];
    let out = ok(&args);
    assert!(stderr(&out).contains("per_0.99_rank="));
    let first = std::fs::read(&csv).unwrap();
    ok(&args);
    assert_eq!(first, std::fs::read(&csv).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    assert!(!text.lines().next().unwrap().contains("time_s"));

    let plot = path(&dir, "per.dat");
    ok(&["plotdata", "--csv", s(&csv), "--curve", "per", "--output", s(&plot)]);
    let plot = std::fs::read_to_string(plot).unwrap();
    let points: Vec<&str> = plot.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(points.len(), 5);
    assert_eq!(points[4], "12 1.0");

    let bad = path(&dir, "bad.csv");
    std::fs::write(&bad, "method,k,psnr_db\ns3dsvd,1,20.0\n").unwrap();
    let out = run(&["plotdata", "--csv", s(&bad), "--curve", "per"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).starts_with("error kind=parse"), "{}", stderr(&out));
}

#[test]
fn unreadable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(&dir, "missing.s3dv");
    assert_eq!(code(&run(&["metrics", "--input", s(&missing), "--reconstruction", s(&missing)])), 5);
    let junk = path(&dir, "junk.s3dv");
    std::fs::write(&junk, b"not a volume at all").unwrap();
    assert_eq!(code(&run(&["metrics", "--input", s(&junk), "--reconstruction", s(&junk)])), 3);
}
