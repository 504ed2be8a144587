//! End-to-end pipeline checks through the `annoclean` binary: synthesize,
//! train a two-run matrix, evaluate, compare and plot, plus the exit-code
//! contract.

use std::path::Path;
use std::process::Command;

fn annoclean() -> Command {
    Command::new(env!("CARGO_BIN_EXE_annoclean"))
}

fn write_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let cfg = format!(
        r#"
[dataset]
clean_source = "procedural"
n_clean = 10
clean_height = 32
clean_width = 32
kind = "radial_line"
n_pairs = 30
seed = 5
out_dir = "{}"

[model]
depth = 2
base_channels = 4

[train]
loss = "l1"
batch_size = 4
epochs = 2
learning_rate = 1e-3
seed = 3

[eval]
split = "test"

[matrix]
scheme = ["n2n", "n2c"]
"#,
        out_dir.display()
    );
    let path = dir.join("experiment.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

#[test]
fn full_pipeline_micro_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let cfg = write_config(tmp.path(), &data);

    // Synthesize.
    let out = run(annoclean().args(["synth", "-c"]).arg(&cfg));
    assert_eq!(out.code, 0, "synth failed: {}", out.stderr);
    assert!(out.stdout.contains("manifest:"), "{}", out.stdout);
    assert!(data.join("manifest.json").is_file());

    // Re-running without --force collides (exit 3).
    let out = run(annoclean().args(["synth", "-c"]).arg(&cfg));
    assert_eq!(out.code, 3, "expected collision: {}", out.stderr);
    let out = run(annoclean().args(["synth", "-c"]).arg(&cfg).arg("--force"));
    assert_eq!(out.code, 0, "forced synth failed: {}", out.stderr);

    // Train the two-run matrix.
    let runs = tmp.path().join("runs");
    let out = run(annoclean()
        .args(["train", "-c"])
        .arg(&cfg)
        .arg("--manifest")
        .arg(&data)
        .arg("--out")
        .arg(&runs));
    assert_eq!(out.code, 0, "train failed: {}", out.stderr);
    for run_id in ["n2n_l1_linear", "n2c_l1_linear"] {
        let dir = runs.join(run_id);
        assert!(dir.join("config.toml").is_file(), "{run_id} snapshot");
        assert!(dir.join("epoch_1.ckpt").is_file());
        assert!(dir.join("epoch_2.ckpt").is_file());
        assert!(dir.join("loss.csv").is_file());
    }

    // Conflicting run ids collide (exit 3); --resume replays and finishes.
    let out = run(annoclean()
        .args(["train", "-c"])
        .arg(&cfg)
        .arg("--manifest")
        .arg(&data)
        .arg("--out")
        .arg(&runs));
    assert_eq!(out.code, 3, "expected run collision: {}", out.stderr);
    let out = run(annoclean()
        .args(["train", "-c"])
        .arg(&cfg)
        .arg("--manifest")
        .arg(&data)
        .arg("--out")
        .arg(&runs)
        .arg("--resume"));
    assert_eq!(out.code, 0, "resume failed: {}", out.stderr);
    assert!(out.stdout.contains("already complete"), "{}", out.stdout);

    // Perfect-restoration stub: the harness self-test scores everything 1.
    let eval_dir = tmp.path().join("oracle_eval");
    let out = run(annoclean()
        .args(["eval", "--oracle", "perfect", "--manifest"])
        .arg(&data)
        .arg("--out")
        .arg(&eval_dir));
    assert_eq!(out.code, 0, "oracle eval failed: {}", out.stderr);
    let csv = std::fs::read_to_string(eval_dir.join("report_test.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[0], "Oracle (clean)");
    let dice_mean: f64 = cols[3].parse().unwrap();
    let psnr_mean: f64 = cols[11].parse().unwrap();
    assert_eq!(dice_mean, 1.0);
    assert_eq!(psnr_mean, 100.0);

    // Checkpoint evaluation writes its reports into the run directory.
    let ckpt = runs.join("n2n_l1_linear").join("epoch_2.ckpt");
    let out = run(annoclean()
        .args(["eval", "--manifest"])
        .arg(&data)
        .arg("--checkpoint")
        .arg(&ckpt));
    assert_eq!(out.code, 0, "checkpoint eval failed: {}", out.stderr);
    assert!(out.stdout.contains("Costumed U-Net"), "{}", out.stdout);
    assert!(runs.join("n2n_l1_linear").join("report_test.csv").is_file());

    // Deterministic re-evaluation: byte-identical reports.
    let first = std::fs::read(runs.join("n2n_l1_linear").join("report_test.csv")).unwrap();
    let out = run(annoclean()
        .args(["eval", "--manifest"])
        .arg(&data)
        .arg("--checkpoint")
        .arg(&ckpt));
    assert_eq!(out.code, 0);
    let second = std::fs::read(runs.join("n2n_l1_linear").join("report_test.csv")).unwrap();
    assert_eq!(first, second);

    // Comparison table over both checkpoints.
    let cmp_dir = tmp.path().join("cmp");
    let out = run(annoclean()
        .args(["compare", "--manifest"])
        .arg(&data)
        .arg("--checkpoint")
        .arg(runs.join("n2n_l1_linear").join("epoch_2.ckpt"))
        .arg("--checkpoint")
        .arg(runs.join("n2c_l1_linear").join("epoch_2.ckpt"))
        .arg("--out")
        .arg(&cmp_dir));
    assert_eq!(out.code, 0, "compare failed: {}", out.stderr);
    assert!(out.stdout.contains("N2N") && out.stdout.contains("N2C"), "{}", out.stdout);
    let table = std::fs::read_to_string(cmp_dir.join("report_compare_test.txt")).unwrap();
    assert_eq!(table.lines().count(), 3, "header plus two rows:\n{table}");

    // Convergence summary and plot.
    let curves_dir = tmp.path().join("curves");
    let out = run(annoclean()
        .arg("losscurves")
        .arg(runs.join("n2n_l1_linear"))
        .arg(runs.join("n2c_l1_linear"))
        .arg("--out")
        .arg(&curves_dir)
        .args(["--window", "3"]));
    assert_eq!(out.code, 0, "losscurves failed: {}", out.stderr);
    assert!(curves_dir.join("convergence.csv").is_file());
    let png = std::fs::read(curves_dir.join("losscurves.png")).unwrap();
    assert_eq!(&png[1..4], b"PNG");
}

#[test]
fn input_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");

    // Config pointing at a missing clean directory.
    let cfg_text = format!(
        r#"
[dataset]
clean_source = "dir"
clean_dir = "{}/does_not_exist"
kind = "body_marker"
n_pairs = 4
out_dir = "{}"

[train]
batch_size = 2
epochs = 1
"#,
        tmp.path().display(),
        data.display()
    );
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, cfg_text).unwrap();
    let out = run(annoclean().args(["synth", "-c"]).arg(&cfg));
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);
    assert!(out.stderr.contains("does_not_exist"), "{}", out.stderr);

    // Eval on a split that does not exist.
    let good_cfg = write_config(tmp.path(), &data);
    let out = run(annoclean().args(["synth", "-c"]).arg(&good_cfg).arg("--force"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = run(annoclean()
        .args(["eval", "--oracle", "perfect", "--manifest"])
        .arg(&data)
        .args(["--split", "nope"]));
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);

    // Missing run directory for losscurves.
    let out = run(annoclean().arg("losscurves").arg(tmp.path().join("no_such_run")));
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);
}

#[test]
fn env_seed_is_honored_when_flag_absent() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let cfg = write_config(tmp.path(), &data);

    let out = run(annoclean()
        .args(["synth", "-c"])
        .arg(&cfg)
        .env("ANNOCLEAN_SEED", "99"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 99);

    // The flag outranks the environment.
    let out = run(annoclean()
        .args(["synth", "-c"])
        .arg(&cfg)
        .arg("--force")
        .args(["--seed", "7"])
        .env("ANNOCLEAN_SEED", "99"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 7);

    // Garbage in the environment variable is an input error.
    let out = run(annoclean()
        .args(["synth", "-c"])
        .arg(&cfg)
        .arg("--force")
        .env("ANNOCLEAN_SEED", "not_a_number"));
    assert_eq!(out.code, 2, "{}", out.stderr);
}
