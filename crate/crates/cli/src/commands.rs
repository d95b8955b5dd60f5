use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use contact_virial::integrate::{
    euler_maruyama_langevin, fmt_f64, integrate_adaptive, integrate_fixed, time_average,
    AdaptiveOptions, RunMetadata, StateObservable, Trajectory,
};
use contact_virial::systems::{make_system, Constraint, System, CATALOG};
use contact_virial::virial::{
    ensemble_report, running_averages, virial_report, EnsembleOptions, ReportOptions, VirialReport,
};

use crate::config::{Experiment, Method};
use crate::CliError;

const TOOL: &str = "contact-virial";
const VERSION: &str = env!("CARGO_PKG_VERSION");
const RUNNING_ROWS: usize = 1000;

fn header(command: &str, exp: &Experiment) -> Vec<(String, String)> {
    let initial: Vec<String> = exp.initial.iter().map(|v| fmt_f64(*v)).collect();
    vec![
        ("tool".into(), TOOL.into()),
        ("tool_version".into(), VERSION.into()),
        ("command".into(), command.into()),
        ("layout".into(), exp.spec.layout().join(",")),
        ("initial".into(), initial.join(",")),
        ("residual_tolerance".into(), fmt_f64(exp.residual_tolerance)),
    ]
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    f(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_file(path, |w| w.write_all(text.as_bytes()))
}

/// Keeps every `every`-th sample and the last one.
fn thin(traj: &Trajectory, every: usize) -> Trajectory {
    let last = traj.len().saturating_sub(1);
    let keep: Vec<usize> = (0..traj.len()).filter(|i| i % every == 0 || *i == last).collect();
    Trajectory {
        times: keep.iter().map(|i| traj.times[*i]).collect(),
        states: keep.iter().map(|i| traj.states[*i].clone()).collect(),
        ..traj.clone()
    }
}

fn csv_stride(exp: &Experiment) -> usize {
    match exp.method {
        Method::Dopri45 => 1,
        _ => ((exp.sample_interval / exp.dt).round() as usize).max(1),
    }
}

fn integrate(exp: &Experiment) -> Result<Trajectory, CliError> {
    let meta = RunMetadata {
        system: exp.spec.name.to_string(),
        params: exp.spec.params.clone(),
        ..RunMetadata::default()
    };
    let field = exp.spec.field();
    let traj = match exp.method {
        Method::Rk4 => integrate_fixed(field.as_ref(), &exp.initial, exp.horizon, exp.dt, 1, meta)?,
        Method::Dopri45 => {
            let mut opts = AdaptiveOptions::new(exp.rel_tol, exp.abs_tol, exp.sample_interval);
            opts.initial_step = Some(exp.dt);
            integrate_adaptive(field.as_ref(), &exp.initial, exp.horizon, opts, meta)?
        }
        Method::EulerMaruyama => {
            let System::Brownian(osc) = &exp.spec.system else {
                return Err(CliError::config("euler_maruyama needs a stochastic system"));
            };
            let noise = osc.noise(exp.seed)?;
            euler_maruyama_langevin(osc, &noise, &exp.initial, exp.horizon, exp.dt, 1)?
        }
    };
    Ok(traj)
}

fn g_column(exp: &Experiment) -> Vec<(String, StateObservable)> {
    let g = exp.spec.virial_setup().g;
    vec![("G".to_string(), Arc::new(move |x: &[f64]| g.value(x)) as StateObservable)]
}

fn write_trajectory(exp: &Experiment, traj: &Trajectory) -> Result<(), CliError> {
    let thinned = thin(traj, csv_stride(exp));
    let cols = g_column(exp);
    write_file(&exp.output_dir.join("trajectory.csv"), |w| thinned.write_csv(w, &cols))
}

fn aborted(command: &str, exp: &Experiment, traj: &Trajectory, write_traj: bool) -> Result<(), CliError> {
    let reason = traj.abort.as_ref().map(|r| r.to_string()).unwrap_or_default();
    create_dir(&exp.output_dir)?;
    if write_traj {
        write_trajectory(exp, traj)?;
    }
    let mut text = String::new();
    for (k, v) in header(command, exp) {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str(&format!("system = {}\nchart = {}\n", exp.spec.name, exp.spec.chart));
    for (k, v) in &exp.spec.params {
        text.push_str(&format!("param.{k} = {}\n", fmt_f64(*v)));
    }
    text.push_str(&format!("integrator = {}\n", exp.method.as_str()));
    text.push_str(&format!("status = aborted\nabort = {reason}\nsamples = {}\n", traj.len()));
    write_text(&exp.output_dir.join("report.txt"), &text)?;
    Err(CliError::aborted(format!("integration aborted: {reason}; partial artifacts kept in {}", exp.output_dir.display())))
}

fn report(exp: &Experiment, traj: &Trajectory) -> Result<VirialReport, CliError> {
    let opts = ReportOptions {
        t_start: exp.t_start,
        residual_tolerance: exp.residual_tolerance,
    };
    let field = exp.spec.field();
    Ok(virial_report(traj, field.as_ref(), &exp.spec.virial_setup(), exp.spec.chart.as_str(), opts)?)
}

fn check_residual(r: &VirialReport, tolerance: f64) -> Result<(), CliError> {
    let res = r.residual_exact.value;
    if res.abs() <= tolerance {
        Ok(())
    } else {
        Err(CliError::breach(format!(
            "exact identity residual {} exceeds tolerance {}",
            fmt_f64(res),
            fmt_f64(tolerance)
        )))
    }
}

fn summary(r: &VirialReport) -> String {
    let mut s = format!("{} [{}] T = {}\n", r.system, r.chart, r.horizon);
    for t in &r.terms {
        s.push_str(&format!("  {:>3} <{}> = {:.6e}\n", if t.sign > 0.0 { "+" } else { "-" }, t.name, t.mean.value));
    }
    s.push_str(&format!("  boundary term    = {:.6e}\n", r.boundary_term.value));
    s.push_str(&format!("  residual_exact   = {:.3e}\n", r.residual_exact.value));
    s.push_str(&format!("  theorem_residual = {:.6e}\n", r.theorem_residual.value));
    if let Some(b) = &r.boundedness {
        s.push_str(&format!("  boundedness      = {} (exponent {:.3})\n", b.verdict.as_str(), b.exponent));
    }
    s
}

/// Shared pipeline of `simulate`, `virial` and `check-identity`.
fn deterministic(command: &str, exp: &Experiment, write_traj: bool, write_running: bool) -> Result<VirialReport, CliError> {
    if exp.method == Method::EulerMaruyama {
        return Err(CliError::config(format!("{command} needs a deterministic integrator; use `ensemble`")));
    }
    let traj = integrate(exp)?;
    if traj.is_aborted() {
        aborted(command, exp, &traj, write_traj)?;
    }
    let r = report(exp, &traj)?;
    create_dir(&exp.output_dir)?;
    if write_traj {
        write_trajectory(exp, &traj)?;
    }
    if write_running {
        let field = exp.spec.field();
        let stride = (traj.len() / RUNNING_ROWS).max(1);
        let running = running_averages(&traj, field.as_ref(), &exp.spec.virial_setup(), exp.t_start, stride)?;
        write_file(&exp.output_dir.join("running_averages.csv"), |w| running.write_csv(w))?;
    }
    write_text(&exp.output_dir.join("report.txt"), &r.to_text(&header(command, exp)))?;
    Ok(r)
}

pub fn simulate(exp: &Experiment) -> Result<(), CliError> {
    if exp.method == Method::EulerMaruyama {
        return stochastic_path(exp);
    }
    let r = deterministic("simulate", exp, true, true)?;
    out!("{}", summary(&r));
    check_residual(&r, exp.residual_tolerance)
}

/// One noisy path: trajectory plus single-path term averages.
fn stochastic_path(exp: &Experiment) -> Result<(), CliError> {
    let traj = integrate(exp)?;
    if traj.is_aborted() {
        aborted("simulate", exp, &traj, true)?;
    }
    create_dir(&exp.output_dir)?;
    write_trajectory(exp, &traj)?;
    let System::Brownian(osc) = exp.spec.system else { unreachable!() };
    let (m, k) = (osc.m, osc.m * osc.omega * osc.omega);
    let ke = time_average(&traj, |x| x[3] * x[3] / (2.0 * m))?;
    let pe = time_average(&traj, |x| k * x[2] * x[2] / 2.0)?;
    let mut text = String::new();
    for (key, v) in header("simulate", exp) {
        text.push_str(&format!("{key} = {v}\n"));
    }
    text.push_str(&format!("system = {}\nchart = {}\n", exp.spec.name, exp.spec.chart));
    for (key, v) in &exp.spec.params {
        text.push_str(&format!("param.{key} = {}\n", fmt_f64(*v)));
    }
    text.push_str(&format!(
        "integrator = euler_maruyama\nstep = {}\nseed = {}\nsamples = {}\npath.kinetic.mean = {}\npath.potential.mean = {}\n",
        fmt_f64(exp.dt),
        exp.seed,
        traj.len(),
        fmt_f64(ke),
        fmt_f64(pe)
    ));
    write_text(&exp.output_dir.join("report.txt"), &text)?;
    outln!("brownian_oscillator single path: <KE> = {ke:.6e}, <PE> = {pe:.6e}");
    Ok(())
}

pub fn virial(exp: &Experiment) -> Result<(), CliError> {
    let r = deterministic("virial", exp, false, true)?;
    out!("{}", r.to_text(&header("virial", exp)));
    check_residual(&r, exp.residual_tolerance)
}

pub fn check_identity(exp: &Experiment) -> Result<(), CliError> {
    let r = deterministic("check-identity", exp, false, false)?;
    let res = r.residual_exact.value;
    let ok = res.abs() <= exp.residual_tolerance;
    outln!(
        "{} {} [{}]: <X(G)> = {:.12e}, (G(T)-G(t0))/(T-t0) = {:.12e}, residual = {:.3e} (tolerance {:.1e})",
        if ok { "PASS" } else { "FAIL" },
        r.system,
        r.chart,
        r.rate_average.value,
        r.boundary_term.value,
        res,
        exp.residual_tolerance
    );
    check_residual(&r, exp.residual_tolerance)
}

/// Ensemble of noisy paths. Per path the exact identity only holds up to the
/// O(dt) discretization error of the noise integral, so the breach test is
/// statistical: the signed term sum must match half the boundary term within
/// three standard errors.
pub fn ensemble(exp: &Experiment) -> Result<(), CliError> {
    let System::Brownian(osc) = exp.spec.system else {
        return Err(CliError::config("ensemble needs a stochastic system"));
    };
    let noise = osc.noise(exp.seed)?;
    let initial: [f64; 4] = exp.initial.as_slice().try_into().map_err(|_| CliError::config("initial state must have 4 components"))?;
    let opts = EnsembleOptions {
        members: exp.size,
        horizon: exp.horizon,
        dt: exp.dt,
        t_start: exp.t_start,
        initial,
    };
    let r = ensemble_report(&osc, &noise, &opts)?;
    create_dir(&exp.output_dir)?;
    let first = euler_maruyama_langevin(&osc, &noise.member(0), &exp.initial, exp.horizon, exp.dt, 1)?;
    write_trajectory(exp, &first)?;
    let text = r.to_text(&header("ensemble", exp));
    write_text(&exp.output_dir.join("report.txt"), &text)?;
    out!("{text}");
    let gap = r.theorem_residual.value - 0.5 * r.boundary_term.value;
    let se = |e: &contact_virial::virial::Estimate| e.std_err.unwrap_or(0.0);
    let spread = (se(&r.theorem_residual).powi(2) + 0.25 * se(&r.boundary_term).powi(2)).sqrt();
    let allowed = exp.residual_tolerance + 3.0 * spread;
    if gap.abs() <= allowed {
        Ok(())
    } else {
        Err(CliError::breach(format!(
            "ensemble virial sum differs from half the boundary term by {} (allowed {})",
            fmt_f64(gap),
            fmt_f64(allowed)
        )))
    }
}

pub fn list_systems() {
    for e in CATALOG {
        let charts: Vec<&str> = e.charts.iter().map(|c| c.as_str()).collect();
        outln!("{}{}", e.name, if e.stochastic { " (stochastic)" } else { "" });
        outln!("  {}", e.summary);
        outln!("  charts: {}", charts.join(", "));
        for p in e.params {
            let c = match p.constraint {
                Constraint::Positive => "> 0",
                Constraint::NonNegative => ">= 0",
                Constraint::Real => "real",
            };
            outln!("  {:<7} {:<6} {:<5} default {:<5} {}", p.name, p.unit, c, p.default, p.description);
        }
    }
}

/// Sample states around the default: fixed offsets, no randomness.
fn sample_states(base: &[f64], count: usize) -> Vec<Vec<f64>> {
    let mut out = vec![base.to_vec()];
    for i in 1..count {
        out.push(
            base.iter()
                .enumerate()
                .map(|(j, v)| v + 0.3 * (1.7 * i as f64 * (j + 1) as f64).sin())
                .collect(),
        );
    }
    out
}

pub fn gradcheck(system: Option<&str>, params: &[(String, f64)], points: usize) -> Result<(), CliError> {
    let names: Vec<&str> = match system {
        Some(s) => vec![s],
        None => CATALOG.iter().map(|e| e.name).collect(),
    };
    let mut failures = 0;
    for name in names {
        let base = make_system(name, if system.is_some() { params } else { &[] })?;
        for chart in base.entry().charts {
            let spec = base.clone().with_chart(*chart)?;
            let mut checks = 0;
            let mut worst: f64 = 0.0;
            let mut worst_abs: f64 = 0.0;
            let mut flagged = Vec::new();
            for x in sample_states(&spec.default_state(), points) {
                for r in spec.gradcheck(&x)? {
                    checks += r.checks.len();
                    worst = worst.max(r.max_rel_error());
                    worst_abs = r.checks.iter().map(|c| c.abs_err).fold(worst_abs, f64::max);
                    flagged.extend(r.flagged().map(|c| format!("{}:{}", r.model, c.label)));
                    flagged.extend(r.failures.iter().map(|c| format!("{}:{c} (non-finite)", r.model)));
                }
            }
            let status = if flagged.is_empty() { "PASS" } else { "FAIL" };
            outln!("{status} {name} [{chart}]: {checks} checks, max abs error {worst_abs:.2e}, max relative error beyond abs floor {worst:.2e}");
            for f in &flagged {
                outln!("  flagged {f}");
            }
            failures += flagged.len();
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::breach(format!("{failures} partial derivative checks failed")))
    }
}
