use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acoustic-shape"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn status(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("status.json")).unwrap()).unwrap()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("reference_linear.toml"))
        .unwrap()
        .replace("resolution = 24", "resolution = 8")
        .replace("steps = 100", "steps = 40");
    let path = dir.join("small.toml");
    std::fs::write(&path, format!("{text}\n{extra}")).unwrap();
    path
}

#[test]
fn missing_config_file_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["solve", "--config", "/nonexistent/config.toml"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ConfigError"));
    assert_eq!(status(&out)["status"], "config_error");
    assert!(out.join("VERSION").exists());
    assert!(out.join("config.toml").exists());
}

#[test]
fn malformed_config_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[mesh\nresolution = ").unwrap();
    let o = run(
        &["gradient", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("run"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_error_exits_with_1_and_names_the_class() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(small_config(tmp.path(), ""))
        .unwrap()
        .replace("focal_center = [0.3, 0.0]", "focal_center = [0.95, 0.0]");
    let cfg = tmp.path().join("edge.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("run");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("InvalidInput"));
    let s = status(&out);
    assert_eq!(s["status"], "error");
    assert_eq!(s["error_class"], "InvalidInput");
}

#[test]
fn check_passes_on_a_pristine_build() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["check", "--seed", "7"], &out);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
    assert!(out.join("checks.csv").exists());
    assert_eq!(status(&out)["status"], "ok");
}

#[test]
fn solve_writes_trajectory_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("run");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--threads", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "time,energy,margin,probe0,probe1");
    assert_eq!(traj.lines().count(), 42);
    // every 25 steps plus the last
    for n in [0, 25, 40] {
        assert!(out.join(format!("state_{n:05}.vtk")).exists());
    }
    assert_eq!(status(&out)["status"], "ok");
}

#[test]
fn adjoint_and_gradient_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out = tmp.path().join("adj");
    assert_eq!(
        run(&["adjoint", "--config", cfg.to_str().unwrap()], &out).status.code(),
        Some(0)
    );
    assert!(out.join("trajectory_adjoint.csv").exists());
    assert!(out.join("adjoint_00000.vtk").exists());
    let out = tmp.path().join("grad");
    assert_eq!(
        run(&["gradient", "--config", cfg.to_str().unwrap()], &out)
            .status
            .code(),
        Some(0)
    );
    let grad = std::fs::read_to_string(out.join("gradient.csv")).unwrap();
    assert!(grad.starts_with("slot,vertex,x,y,nx,ny,curvature,density,corner"));
    assert!(out.join("gradient.vtk").exists());
}

#[test]
fn taylor_test_on_the_reference_linear_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = configs().join("reference_linear.toml");
    let o = run(&["taylor-test", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("taylor.csv")).unwrap();
    assert!(csv.lines().count() >= 5, "{csv}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    let order: f64 = stdout
        .split("order=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("no order in {stdout}"));
    assert!(order >= 1.7, "{stdout}");
}

#[test]
fn identical_runs_give_identical_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "[optimization]\nmax_iters = 2\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["optimize", "--config", cfg.to_str().unwrap()], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["history.csv", "final_mesh.txt", "status.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(status(&a)["iterations"].as_u64().unwrap() <= 2);
    assert!(status(&a)["final_J"].as_f64().unwrap() > 0.0);
}
