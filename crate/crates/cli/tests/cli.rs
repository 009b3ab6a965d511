use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quasipot::characteristics::{shoot, ShootSettings};
use quasipot::dynamics::{find_fixed_points, MaierStein, NewtonSettings};
use quasipot::net::{Checkpoint, NetArchitecture};
use quasipot::trainer::{train, TrainingConfig};
use quasipot::{ExecMode, Rect};

fn quasipot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasipot"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("QUASIPOT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = quasipot(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_owned();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn exact(x1: f64, x2: f64) -> f64 {
    0.5 * ((x1 * x1 - 1.0).powi(2) + 2.0 * x2 * x2 * (x1 * x1 + 1.0))
}

const SMALL_TRAINING: &str = "steps = 1500\nn_collocation = 300\nhidden_sizes = [8, 8]\ntrace_interval = 50\nseed_count = 200\n";

#[test]
fn fixed_points_for_both_gammas() {
    let dir = tempfile::tempdir().unwrap();
    for gamma in ["1", "5"] {
        let stdout = ok(dir.path(), &["fixed-points", "--gamma", gamma]);
        assert_eq!(stdout.lines().count(), 3);
        let v: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("fixed_points.json")).unwrap(),
        )
        .unwrap();
        let kinds: Vec<&str> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["kind"].as_str().unwrap())
            .collect();
        assert_eq!(kinds, ["stable_node", "saddle", "stable_node"]);
        assert_eq!(v[0]["location"][0], -1.0);
    }
}

#[test]
fn empty_search_box_fails_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "search_x1_min = 5.0\nsearch_x1_max = 6.0\nsearch_x2_min = 5.0\nsearch_x2_max = 6.0\n",
    );
    let out = quasipot(dir.path(), &["fixed-points", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error[NO_FIXED_POINTS]: "));
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gama = 1.0\n");
    let out = quasipot(dir.path(), &["fixed-points", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[CONFIG]: "));

    let out = quasipot(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[CONFIG]: "));

    let out = quasipot(
        dir.path(),
        &["eval-grid", "--checkpoint", "/nonexistent/ck.json"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[IO]: "));
}

#[test]
fn shoot_writes_oracle_consistent_dataset() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["shoot"]);
    let (header, rows) = csv_rows(&dir.path().join("dataset.csv"));
    assert_eq!(header, "x1,x2,p1,p2,V");
    assert!(!rows.is_empty() && rows.len() <= 400);
    for r in &rows {
        assert_eq!(r.len(), 5);
        assert!((r[4] - exact(r[0], r[1])).abs() <= 1e-2);
    }
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("shoot.json")).unwrap()).unwrap();
    assert_eq!(diag["diagnostics"]["trajectories"], 2000);

    let tiny = tempfile::tempdir().unwrap();
    ok(tiny.path(), &["shoot", "--seed-count", "4"]);
    let (header, rows) = csv_rows(&tiny.path().join("dataset.csv"));
    assert_eq!(header, "x1,x2,p1,p2,V");
    assert!(!rows.is_empty() && rows.len() <= 4 * 400);
}

#[test]
fn train_matches_the_library_and_feeds_eval_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TRAINING);
    ok(dir.path(), &["shoot", "--config", &cfg]);
    ok(dir.path(), &["train", "--config", &cfg]);

    let sys = MaierStein::new(1.0).unwrap();
    let fps = find_fixed_points(
        &sys,
        &Rect::new(-2.0, 2.0, -2.0, 2.0),
        &NewtonSettings::default(),
    )
    .unwrap();
    let settings = ShootSettings {
        count: 200,
        ..ShootSettings::default()
    };
    let (dataset, _) = shoot(&sys, &fps[0], &settings, ExecMode::Parallel).unwrap();
    let tc = TrainingConfig {
        steps: 1500,
        n_collocation: 300,
        architecture: NetArchitecture::with_hidden(vec![8, 8]),
        trace_interval: 50,
        ..TrainingConfig::default()
    };
    let outcome = train(&sys, &dataset, &tc).unwrap();
    let ck = Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
    assert_eq!(ck.params, outcome.params);
    assert_eq!(ck.loss, Some(outcome.final_loss));

    let (header, trace) = csv_rows(&dir.path().join("loss_trace.csv"));
    assert_eq!(header, "step,L_p,L_H,L_0,L_d,L_all");
    assert_eq!(trace.len(), 31);
    assert_eq!(trace.last().unwrap()[0], 1500.0);

    // 4 × 3 lattice puts a node on the stable point (−1, 0)
    let grid_cfg = write_config(
        dir.path(),
        &format!("{SMALL_TRAINING}eval_rows = 3\neval_cols = 4\n"),
    );
    ok(dir.path(), &["eval-grid", "--config", &grid_cfg]);
    let (header, rows) = csv_rows(&dir.path().join("grid.csv"));
    assert_eq!(header, "x1,x2,V,p1,p2,V_exact,error");
    assert_eq!(rows.len(), 12);
    let node = rows.iter().find(|r| r[0] == -1.0 && r[1] == 0.0).unwrap();
    assert!(node[2].abs() <= 0.01, "{}", node[2]);

    let one = write_config(
        dir.path(),
        &format!("{SMALL_TRAINING}eval_rows = 1\neval_cols = 1\n"),
    );
    ok(dir.path(), &["eval-grid", "--config", &one]);
    assert_eq!(csv_rows(&dir.path().join("grid.csv")).1.len(), 1);

    // a checkpoint for another field is refused
    let out = quasipot(dir.path(), &["eval-grid", "--config", &one, "--gamma", "5"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn analytic_grid_has_zero_error_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eval_rows = 5\neval_cols = 7\n");
    ok(dir.path(), &["eval-grid", "--config", &cfg, "--analytic"]);
    let (_, rows) = csv_rows(&dir.path().join("grid.csv"));
    assert_eq!(rows.len(), 35);
    assert!(rows.iter().all(|r| r[6] == 0.0 && r[2] == r[5]));
}

#[test]
fn trace_path_with_the_analytic_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["trace-path", "--analytic"]);
    assert!(stdout.contains("path action"));
    let (header, rows) = csv_rows(&dir.path().join("path.csv"));
    assert_eq!(header, "t,x1,x2");
    assert!(rows.iter().all(|r| r[2].abs() <= 0.01));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("path.json")).unwrap()).unwrap();
    let action = summary["path"]["action"].as_f64().unwrap();
    assert!((0.48..=0.52).contains(&action), "{action}");
    assert!(summary["mirror_deviation"].as_f64().unwrap() <= 0.02);
    assert!(dir.path().join("path_mirror.csv").exists());
}

#[test]
fn exit_time_is_reproducible_across_modes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "exit-time",
        "--sigma",
        "0.3",
        "--n-traj",
        "64",
        "--seed",
        "7",
    ];
    ok(a.path(), &args);
    let mut serial = args.to_vec();
    serial.push("--serial");
    ok(b.path(), &serial);
    let read = |d: &Path| fs::read(d.join("exit_time.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let v: serde_json::Value = serde_json::from_slice(&read(a.path())).unwrap();
    assert_eq!(
        v["estimate"]["n"].as_u64().unwrap() + v["estimate"]["n_censored"].as_u64().unwrap(),
        64
    );

    let c = tempfile::tempdir().unwrap();
    ok(
        c.path(),
        &[
            "exit-time",
            "--sigma",
            "0.3",
            "--n-traj",
            "16",
            "--c",
            "0.25",
            "--analytic",
        ],
    );
    let controlled: serde_json::Value = serde_json::from_slice(&read(c.path())).unwrap();
    assert_eq!(controlled["c"], 0.25);
}

#[test]
fn control_reports_are_identical_up_to_metadata() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "control",
        "--analytic",
        "--sigma",
        "0.3",
        "--target-time",
        "20",
        "--n-traj",
        "64",
    ];
    let stdout = ok(a.path(), &args);
    assert!(stdout.starts_with("V0 0.5\n"));
    ok(b.path(), &args);
    let strip = |d: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join("control.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("meta");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    let v = strip(a.path());
    assert!(v["iterates"]
        .as_array()
        .unwrap()
        .iter()
        .all(|i| i["c"].as_f64().unwrap() <= 0.5));
}

#[test]
fn repro_runs_end_to_end_and_honours_the_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{SMALL_TRAINING}sigma = 0.3\ntarget_time = 20.0\nn_traj = 32\nmax_iterations = 2\n"
        ),
    );
    let target = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_quasipot"))
        .args(["repro", "--config", &cfg])
        .env("QUASIPOT_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "dataset.csv",
        "shoot.json",
        "checkpoint.json",
        "loss_trace.csv",
        "control.json",
    ] {
        assert!(target.join(f).exists(), "{f}");
    }
}
