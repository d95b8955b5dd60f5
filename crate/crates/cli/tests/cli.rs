use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-virial"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn report(dir: &Path) -> Vec<(String, String)> {
    fs::read_to_string(dir.join("report.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn value(r: &[(String, String)], key: &str) -> f64 {
    r.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

#[test]
fn list_systems_shows_catalog() {
    let out = run(&["list-systems"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["damped_oscillator", "parachute", "forced_oscillator", "brownian_oscillator", "gierer_meinhardt"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("planar-conformal"));
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["simulate", "--system", "damped_oscillator", "--horizon", "20", "--output-dir", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["trajectory.csv", "report.txt", "running_averages.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let r = report(&a);
    assert_eq!(r[0], ("tool".to_string(), "contact-virial".to_string()));
    assert!(r.iter().any(|(k, _)| k == "tool_version"));
    assert!(value(&r, "residual_exact").abs() < 1e-9);

    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,s,q,p,G");
    for cell in lines.next().unwrap().split(',') {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(format!("{v:.16e}"), cell);
    }
    assert!(fs::read_to_string(a.join("running_averages.csv")).unwrap().starts_with("T,kinetic,potential,friction,rate,boundary_term"));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("forced.toml");
    let out_dir = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            "[system]\nname = \"forced_oscillator\"\n[system.params]\nF0 = 1.0\nOmega = 2.0\n\
             [integrator]\nmethod = \"rk4\"\ndt = 1e-3\n\
             [run]\nhorizon = 10.0\nt_start = 50.0\noutput_dir = {:?}\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    // t_start beyond the horizon is rejected before any work.
    assert_eq!(code(&run(&["virial", "-c", cfg.to_str().unwrap()])), 2);
    let out = run(&["virial", "-c", cfg.to_str().unwrap(), "--horizon", "200", "--t-start", "150"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(value(&r, "param.F0"), 1.0);
    assert_eq!(value(&r, "t_start"), 150.0);
    assert!((value(&r, "term.kinetic.mean") - 0.11062).abs() < 2e-3);
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[system]\nname = \"damped_oscillator\"\nmass = 2.0\n").unwrap();
    assert_eq!(code(&run(&["simulate", "-c", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["simulate", "--system", "pendulum"])), 2);
    assert_eq!(code(&run(&["simulate", "--system", "damped_oscillator", "--param", "mass=2"])), 2);
    assert_eq!(code(&run(&["simulate", "--system", "damped_oscillator", "--param", "gamma=-1"])), 2);
    assert_eq!(code(&run(&["simulate", "--system", "forced_oscillator", "--chart", "lagrangian"])), 2);
    assert_eq!(code(&run(&["simulate", "--system", "damped_oscillator", "--initial", "1,2"])), 2);
    assert_eq!(code(&run(&["ensemble", "--system", "damped_oscillator"])), 2);
    assert_eq!(code(&run(&["simulate"])), 2);
}

#[test]
fn abort_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--system", "parachute", "--initial", "0,720,0", "--horizon", "1", "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let r = report(tmp.path());
    assert!(r.iter().any(|(k, v)| k == "status" && v == "aborted"));
    assert!(tmp.path().join("trajectory.csv").exists());
}

#[test]
fn residual_breach_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = run(&["check-identity", "--system", "damped_oscillator", "--horizon", "10", "--dt", "0.1", "--residual-tolerance", "1e-14", "--output-dir", dir]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("FAIL"));
    let out = run(&["check-identity", "--system", "gierer_meinhardt", "--horizon", "10", "--output-dir", dir]);
    assert_eq!(code(&out), 0);
}

#[test]
fn gradcheck_passes_on_catalog() {
    let out = run(&["gradcheck", "--points", "4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

#[test]
fn ensemble_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&[
            "ensemble", "--system", "brownian_oscillator", "--size", "16", "--horizon", "5", "--dt", "1e-2",
            "--seed", "11", "--output-dir", dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(a.join("report.txt")).unwrap(), fs::read(b.join("report.txt")).unwrap());
    let r = report(&a);
    assert_eq!(value(&r, "seed"), 11.0);
    assert!(r.iter().any(|(k, _)| k == "term.friction_noise.mean.std_err"));
}
