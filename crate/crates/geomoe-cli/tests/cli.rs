//! End-to-end CLI behavior: artifact layout, exit codes, determinism.

use std::path::Path;
use std::process::Command;

fn geomoe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geomoe"))
}

fn run_ok(args: &[&str]) -> String {
    let out = geomoe().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success for {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(args: &[&str]) -> i32 {
    geomoe().args(args).output().expect("binary runs").status.code().unwrap_or(-1)
}

fn generate_into(dir: &Path, nodes: usize, seed: u64) {
    run_ok(&[
        "generate",
        "--nodes",
        &nodes.to_string(),
        "--mix",
        "tree:0.4,cycle:0.4,inter:0.3",
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
}

#[test]
fn generate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    generate_into(&a, 120, 7);
    generate_into(&b, 120, 7);
    for file in ["edges.txt", "features.txt", "manifest.json"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical invocations");
    }
}

#[test]
fn generate_rejects_bad_mix() {
    let tmp = tempfile::tempdir().unwrap();
    let code = exit_code(&[
        "generate",
        "--nodes",
        "50",
        "--mix",
        "blob:1.0",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn analyze_curvature_reports_tree_negative() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    // Tree-only graph: fraction_negative should dominate.
    run_ok(&[
        "generate",
        "--nodes",
        "127",
        "--mix",
        "tree:1.0",
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    let csv = tmp.path().join("hist.csv");
    let stdout = run_ok(&[
        "analyze-curvature",
        "--graph",
        data.join("edges.txt").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    let neg_line = stdout
        .lines()
        .find(|l| l.starts_with("fraction_negative"))
        .expect("summary printed");
    let frac: f64 = neg_line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(frac > 0.5, "tree should be predominantly negative, got {frac}");
    let hist = std::fs::read_to_string(csv).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,count\n"));
}

#[test]
fn analyze_curvature_rejects_missing_graph() {
    assert_eq!(exit_code(&["analyze-curvature", "--graph", "/nonexistent/x.txt"]), 2);
}

#[test]
fn unknown_flag_is_an_error() {
    assert_eq!(exit_code(&["generate", "--nodes", "50", "--does-not-exist", "1"]), 2);
}

#[test]
fn help_exits_zero_and_documents_flags() {
    let out = geomoe().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for sub in ["generate", "analyze-curvature", "train", "evaluate"] {
        assert!(text.contains(sub), "--help must mention `{sub}`");
    }
    for (sub, flags) in [
        ("generate", vec!["--nodes", "--mix", "--seed", "--out", "--feat-dim"]),
        ("analyze-curvature", vec!["--graph", "--samples", "--seed", "--out"]),
        (
            "train",
            vec![
                "--task",
                "--graph",
                "--features",
                "--labels",
                "--config",
                "--out",
                "--threads",
                "--deterministic",
            ],
        ),
        ("evaluate", vec!["--run", "--graph", "--pairs", "--threads"]),
    ] {
        let out = geomoe().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        for flag in flags {
            assert!(text.contains(flag), "`{sub} --help` must document {flag}");
        }
    }
}

fn write_fast_config(path: &Path) {
    std::fs::write(
        path,
        "train.epochs = 12\ntrain.patience = 12\npairs.budget = 150\n\
         dims.d_h = 8\ndims.d_out = 8\ndims.d_t = 8\n",
    )
    .unwrap();
}

#[test]
fn train_then_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate_into(&data, 90, 5);
    let cfg = tmp.path().join("fast.toml");
    write_fast_config(&cfg);
    let run = tmp.path().join("run");

    run_ok(&[
        "train",
        "--task",
        "lp",
        "--graph",
        data.join("edges.txt").to_str().unwrap(),
        "--features",
        data.join("features.txt").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--deterministic",
        "--out",
        run.to_str().unwrap(),
    ]);

    for artifact in [
        "config.echo",
        "checkpoint.json",
        "log.csv",
        "report.json",
        "curves.csv",
        "per_node_distortion.csv",
        "embeddings.csv",
        "gating.csv",
    ] {
        assert!(run.join(artifact).exists(), "missing run artifact {artifact}");
    }

    let report_before = std::fs::read_to_string(run.join("report.json")).unwrap();
    let stdout = run_ok(&[
        "evaluate",
        "--run",
        run.to_str().unwrap(),
        "--graph",
        data.join("edges.txt").to_str().unwrap(),
        "--features",
        data.join("features.txt").to_str().unwrap(),
        "--pairs",
        "full",
    ]);
    assert!(stdout.contains("auc="));
    let report_after = std::fs::read_to_string(run.join("report.json")).unwrap();
    // Evaluation right after training reproduces the training-time report
    // (auto mode already ran full pairs at this size).
    assert_eq!(report_before, report_after);
}

#[test]
fn train_nc_without_labels_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate_into(&data, 60, 2);
    let code = exit_code(&[
        "train",
        "--task",
        "nc",
        "--graph",
        data.join("edges.txt").to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn train_rejects_unknown_config_key_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate_into(&data, 60, 2);
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "train.lurning_rate = 0.1\n").unwrap();
    let out = geomoe()
        .args([
            "train",
            "--task",
            "lp",
            "--graph",
            data.join("edges.txt").to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            tmp.path().join("run").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(
        stderr.contains("train.lurning_rate"),
        "error must name the unknown key, got: {stderr}"
    );
}

#[test]
fn corrupted_checkpoint_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate_into(&data, 60, 2);
    let run = tmp.path().join("run");
    std::fs::create_dir_all(&run).unwrap();
    std::fs::write(run.join("config.echo"), "task = \"lp\"\n").unwrap();
    std::fs::write(run.join("checkpoint.json"), "{ not json").unwrap();
    let code = exit_code(&[
        "evaluate",
        "--run",
        run.to_str().unwrap(),
        "--graph",
        data.join("edges.txt").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}
