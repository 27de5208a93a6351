use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
# quick run
classes = 4
dims = 3
n_head = 60
imbalance_ratio = 10
test_per_class = 30
probe_per_class = 20
hidden = 8
epochs = 4
probe_epochs = 3
lr_milestones = 2,3
seeds = 0,1
test_mus = 0.1
";

fn xerm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xerm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn xerm")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(xerm(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(xerm(&["train-xe", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(xerm(&["train-xe", "--set", "gamma=abc"], dir.path()).status.code(), Some(1));
    assert_eq!(xerm(&["train-xe", "--set", "no_such_key=1"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_inputs_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = xerm(&["eval", "--checkpoint", "absent.ckpt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = xerm(&["report", "absent/manifest.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_causal_reports_every_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = xerm(&["verify-causal", "--count", "50", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.ends_with("pass")).count(), 6, "{text}");
    assert_eq!(xerm(&["verify-causal", "--max-card", "1"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_file_pipeline_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = xerm(&["--config", &cfg, "--out", "runs", "train-xerm"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m0 = dir.path().join("runs/seed-0/manifest.json");
    let m1 = dir.path().join("runs/seed-1/manifest.json");
    assert!(m0.exists() && m1.exists());
    for f in ["xe.ckpt", "xerm.ckpt", "xe_loss.csv", "xerm_loss.csv", "weights.csv"] {
        assert!(dir.path().join("runs/seed-0").join(f).exists(), "{f}");
    }

    let out = xerm(
        &["--out", "table", "report", m0.to_str().unwrap(), m1.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("table/summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("xerm,balanced,accuracy,")), "{summary}");

    let ckpt = dir.path().join("runs/seed-0/xerm.ckpt");
    let out = xerm(
        &["--config", &cfg, "--seed", "0", "eval", "--checkpoint", ckpt.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("mu=0.1"));
}

#[test]
fn report_rejects_mixed_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for (out, gamma) in [("a", "1"), ("b", "2")] {
        let set = format!("gamma={gamma}");
        let o = xerm(&["--config", &cfg, "--seed", "0", "--out", out, "--set", &set, "train-xerm"], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let out = xerm(&["report", "a/seed-0/manifest.json", "b/seed-0/manifest.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_data_and_sweeps_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |args: &[&str]| {
        let mut full = vec!["--config", cfg.as_str(), "--seed", "1", "--out", "o"];
        full.extend_from_slice(args);
        let out = xerm(&full, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["gen-data", "--format", "raw-f32"]);
    assert!(dir.path().join("o/seed-1/train.bin").exists());
    run(&["gen-data"]);
    let csv = std::fs::read_to_string(dir.path().join("o/seed-1/test.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 30);

    let out = run(&["sweep-gamma", "--gammas", "-2,0,2"]);
    assert_eq!(stdout(&out).lines().filter(|l| l.trim_start().starts_with('-')).count(), 1);
    assert!(dir.path().join("o/sweep_gamma.csv").exists());
    run(&["ablate-w", "--ws", "0,1"]);
    assert!(dir.path().join("o/ablate_w.csv").exists());
    let out = run(&["probe"]);
    assert_eq!(stdout(&out).lines().count(), 3);

    let bad = ["--config", cfg.as_str(), "--out", "o", "ablate-w", "--ws", "1.5"];
    assert_eq!(xerm(&bad, dir.path()).status.code(), Some(1));
}
