use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmf-lab"))
        .args(args)
        .env_remove("RMF_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn sign_changes_writes_manifest_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = lab(&[
        "sign-changes", "--model", "f", "--alpha", "0.5", "--limit", "100000", "--trials", "8", "--seed", "42",
        "--out", &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    for key in ["experiment", "model", "alpha", "N", "trials", "base_seed", "prime_limit", "sigma_grid", "tool_version", "wall_time"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["N"], 100000);
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert!(csv.starts_with("trial,seed,count,last_position,final_value,max_abs\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn euler_outside_domain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["euler", "--model", "fstar", "--sigma", "0.4", "--t", "0", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 3);
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn euler_in_mobius_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&[
        "euler", "--model", "f", "--sigma", "2", "--prime-limit", "100000", "--all-minus-one", "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("euler.csv")).unwrap();
    let re: f64 = csv.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((re - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-4);
}

#[test]
fn mellin_check_reports_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&[
        "mellin-check", "--alpha", "0.5", "--sigma", "0.75", "--limit", "100000", "--seed", "7", "--assert", "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("identity holds"));
    let csv = std::fs::read_to_string(dir.path().join("mellin_check.csv")).unwrap();
    let residual: f64 = csv.lines().nth(1).unwrap().split(',').nth(9).unwrap().parse().unwrap();
    assert!(residual <= 1e-9);
}

#[test]
fn mellin_check_divergent_kernel_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["mellin-check", "--alpha", "0.5", "--sigma", "0.5", "--limit", "100", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&lab(&["sign-changes", "--limit", "10", "--bogus"])), 2);
    assert_eq!(code(&lab(&["frobnicate"])), 2);
    assert_eq!(code(&lab(&["series", "--limit", "ten"])), 2);
    assert_eq!(code(&lab(&["series", "--model", "g", "--limit", "10"])), 2);
}

#[test]
fn precondition_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&lab(&["sign-changes", "--alpha", "0.75", "--limit", "100", "--out", &out])), 3);
    assert_eq!(code(&lab(&["harper", "--sigma-grid", "0.7", "--prime-limit", "1000", "--out", &out])), 3);
    assert_eq!(
        code(&lab(&["divergence", "--sigma-grid", "0.52,0.56", "--limit", "1000", "--prime-limit", "1000", "--out", &out])),
        3
    );
    assert_eq!(code(&lab(&["positivity", "--limit", "100", "--trials", "0", "--out", &out])), 3);
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let target = blocker.join("sub");
    let o = lab(&["series", "--limit", "100", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn bad_signs_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let signs = dir.path().join("signs.txt");
    std::fs::write(&signs, "2 1\n3 zero\n").unwrap();
    let o = lab(&["series", "--limit", "10", "--signs-file", signs.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 4);
}

#[test]
fn explicit_signs_file_drives_series() {
    let dir = tempfile::tempdir().unwrap();
    let signs = dir.path().join("signs.txt");
    std::fs::write(&signs, "# p sign\n2 1\n3 -1\n").unwrap();
    let out = dir.path().join("run");
    let o = lab(&["series", "--limit", "3", "--signs-file", signs.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let last: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, 1.0);
}

#[test]
fn assert_mode_turns_expectations_into_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let base = ["sign-changes", "--limit", "1000", "--trials", "4", "--min-changes", "1000000", "--out", &out];
    assert_eq!(code(&lab(&base)), 0);
    let mut strict = base.to_vec();
    strict.push("--assert");
    assert_eq!(code(&lab(&strict)), 1);
    let open = ["sign-changes", "--model", "fstar", "--alpha", "0.5", "--limit", "1000", "--trials", "4",
        "--min-changes", "1000000", "--assert", "--out", &out];
    let o = lab(&open);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("reporting only"));
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = lab(&[
        "divergence", "--model", "fstar", "--alpha", "0", "--sigma-grid", "0.6,0.55", "--limit", "20000",
        "--prime-limit", "2000", "--trials", "3", "--seed", "5", "--threads", "2", "--out", &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = lab(&["replay", "--dir", &out, "--threads", "1"]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    assert!(stdout(&r).contains("trials.csv: identical"));

    let path = dir.path().join("trials.csv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("tampered\n");
    std::fs::write(&path, text).unwrap();
    let r = lab(&["replay", "--dir", &out]);
    assert_eq!(code(&r), 1);
    assert!(stdout(&r).contains("MISMATCH"));
}

#[test]
fn replay_without_manifest_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lab(&["replay", "--dir", &out_arg(dir.path())])), 4);
}

#[test]
fn thread_count_from_environment_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "growth".to_string(), "--limit".into(), "20000".into(), "--trials".into(), "5".into(),
            "--seed".into(), "3".into(), "--out".into(), out_arg(d),
        ]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_rmf-lab")).args(args(a.path())).env("RMF_LAB_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_rmf-lab")).args(args(b.path())).env("RMF_LAB_THREADS", "4").output().unwrap();
    assert_eq!((code(&one), code(&four)), (0, 0));
    let read = |d: &Path| std::fs::read(d.join("trials.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["threads"], 4);
}

#[test]
fn other_experiments_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&lab(&["positivity", "--limit", "1000", "--trials", "50", "--out", &out])), 0);
    assert_eq!(
        code(&lab(&["harper", "--sigma-grid", "0.58,0.55", "--prime-limit", "2000", "--trials", "2", "--out", &out])),
        0
    );
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert!(csv.starts_with("trial,seed,sigma,t_star,sup_value,centered_value,grid_step,prime_limit\n"));
}
