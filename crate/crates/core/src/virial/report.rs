use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::Arc;

use super::observable::{rate_along, StateFunction};
use crate::error::{ensure_dim, Error, Result};
use crate::integrate::{fmt_f64, AverageAccumulator, RunMetadata, Trajectory, VectorField};

/// Segments of the trailing half-window used by the growth fit.
const GROWTH_SEGMENTS: usize = 8;
/// Fitted power-law exponent of `max|G|` above which `G` is called growing.
const GROWTH_EXPONENT: f64 = 0.5;

/// One named contribution to the virial relation. `sign` is the sign with
/// which the term's average enters the left side, which sums to zero.
#[derive(Clone)]
pub struct VirialTerm {
    pub name: String,
    pub sign: f64,
    pub observable: Arc<dyn StateFunction>,
}

impl VirialTerm {
    pub fn new(name: impl Into<String>, sign: f64, observable: impl StateFunction + 'static) -> Self {
        Self {
            name: name.into(),
            sign,
            observable: Arc::new(observable),
        }
    }
}

/// `G` and the term decomposition of its averaged rate for one chart.
#[derive(Clone)]
pub struct VirialSetup {
    pub g: Arc<dyn StateFunction>,
    pub terms: Vec<VirialTerm>,
}

impl VirialSetup {
    fn check(&self, dim: usize) -> Result<()> {
        ensure_dim(dim, self.g.dim())?;
        for t in &self.terms {
            ensure_dim(dim, t.observable.dim())?;
        }
        Ok(())
    }
}

/// A value with an optional standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_err: None }
    }

    /// `|value| ≤ k·σ`; without an error bar, `value == 0`.
    pub fn consistent_with_zero(&self, k: f64) -> bool {
        self.value.abs() <= k * self.std_err.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermAverage {
    pub name: String,
    pub sign: f64,
    pub mean: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Growing => "growing",
        }
    }
}

/// Growth diagnostic for `G`: power-law fit `max|G| ~ c·τᵅ` over the trailing
/// half of the averaging window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    pub verdict: Verdict,
    pub exponent: f64,
    /// Fitted `|G(T)|/T`.
    pub growth_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirialReport {
    pub system: String,
    pub chart: String,
    pub meta: RunMetadata,
    /// End of the averaging window (elapsed time).
    pub horizon: f64,
    pub t_start: f64,
    pub samples: usize,
    pub terms: Vec<TermAverage>,
    /// `⟨X(G)⟩`.
    pub rate_average: Estimate,
    /// `(G(T) − G(t₀))/(T − t₀)`.
    pub boundary_term: Estimate,
    /// `⟨X(G)⟩ − boundary term`.
    pub residual_exact: Estimate,
    /// `Σ sign·⟨term⟩`.
    pub theorem_residual: Estimate,
    pub boundedness: Option<Boundedness>,
    pub extras: Vec<(String, f64)>,
}

impl VirialReport {
    pub fn term(&self, name: &str) -> Option<&TermAverage> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// `key = value` lines; every number is written with 17 significant
    /// digits.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        fn est(out: &mut Vec<(String, String)>, key: &str, e: &Estimate) {
            out.push((key.to_string(), fmt_f64(e.value)));
            if let Some(se) = e.std_err {
                out.push((format!("{key}.std_err"), fmt_f64(se)));
            }
        }
        let mut out = vec![
            ("horizon".to_string(), fmt_f64(self.horizon)),
            ("t_start".to_string(), fmt_f64(self.t_start)),
            ("samples".to_string(), self.samples.to_string()),
        ];
        for t in &self.terms {
            out.push((format!("term.{}.sign", t.name), fmt_f64(t.sign)));
            est(&mut out, &format!("term.{}.mean", t.name), &t.mean);
        }
        est(&mut out, "rate_average", &self.rate_average);
        est(&mut out, "boundary_term", &self.boundary_term);
        est(&mut out, "residual_exact", &self.residual_exact);
        est(&mut out, "theorem_residual", &self.theorem_residual);
        if let Some(b) = &self.boundedness {
            out.push(("boundedness".into(), b.verdict.as_str().into()));
            out.push(("growth_exponent".into(), fmt_f64(b.exponent)));
            out.push(("growth_rate".into(), fmt_f64(b.growth_rate)));
        }
        for (k, v) in &self.extras {
            out.push((format!("extra.{k}"), fmt_f64(*v)));
        }
        out
    }

    /// Full text report: `header` lines first, then the metadata of the run,
    /// then the results.
    pub fn to_text(&self, header: &[(String, String)]) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| {
            let _ = writeln!(s, "{k} = {v}");
        };
        for (k, v) in header {
            line(k, v);
        }
        line("system", &self.system);
        line("chart", &self.chart);
        for (k, v) in &self.meta.params {
            line(&format!("param.{k}"), &fmt_f64(*v));
        }
        line("integrator", &self.meta.integrator);
        if let Some(v) = self.meta.step {
            line("step", &fmt_f64(v));
        }
        if let Some(v) = self.meta.rel_tol {
            line("rel_tol", &fmt_f64(v));
        }
        if let Some(v) = self.meta.abs_tol {
            line("abs_tol", &fmt_f64(v));
        }
        if let Some(v) = self.meta.seed {
            line("seed", &v.to_string());
        }
        for (k, v) in self.to_key_values() {
            line(&k, &v);
        }
        s
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("report line {} is not `key = value`", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn window_start(traj: &Trajectory, t_start: f64) -> Result<usize> {
    let slack = 1e-9 * t_start.abs().max(1.0);
    let i = traj
        .times
        .iter()
        .position(|t| *t >= t_start - slack)
        .ok_or(Error::EmptyTrajectory)?;
    if traj.times.len() - i < 2 {
        return Err(Error::EmptyTrajectory);
    }
    Ok(i)
}

/// `(G(final) − G(initial))/T` over the whole trajectory.
pub fn boundary_term(traj: &Trajectory, g: &dyn StateFunction) -> Result<f64> {
    boundary_term_window(traj, g, f64::NEG_INFINITY)
}

/// Boundary term over samples with `t ≥ t_start`.
pub fn boundary_term_window(traj: &Trajectory, g: &dyn StateFunction, t_start: f64) -> Result<f64> {
    let first = window_start(traj, t_start)?;
    let last = traj.len() - 1;
    ensure_dim(traj.states[first].len(), g.dim())?;
    let span = traj.times[last] - traj.times[first];
    Ok((g.value(&traj.states[last]) - g.value(&traj.states[first])) / span)
}

/// Power-law fit of `max|G|` over the trailing half of `(times, values)`.
pub fn boundedness(times: &[f64], g_values: &[f64], residual_tolerance: f64) -> Boundedness {
    let bounded = Boundedness {
        verdict: Verdict::Bounded,
        exponent: 0.0,
        growth_rate: 0.0,
    };
    let (Some(&t0), Some(&t_end)) = (times.first(), times.last()) else {
        return bounded;
    };
    let span = t_end - t0;
    if !(span > 0.0) {
        return bounded;
    }
    let half = t0 + span / 2.0;
    let width = span / 2.0 / GROWTH_SEGMENTS as f64;
    let mut maxima = [0.0f64; GROWTH_SEGMENTS];
    let mut seen = [false; GROWTH_SEGMENTS];
    for (t, g) in times.iter().zip(g_values) {
        if *t < half {
            continue;
        }
        let k = (((*t - half) / width) as usize).min(GROWTH_SEGMENTS - 1);
        maxima[k] = maxima[k].max(g.abs());
        seen[k] = true;
    }
    let points: Vec<(f64, f64)> = (0..GROWTH_SEGMENTS)
        .filter(|&k| seen[k] && maxima[k] > 0.0)
        .map(|k| {
            let tau = span / 2.0 + (k + 1) as f64 * width;
            (tau.ln(), maxima[k].ln())
        })
        .collect();
    if points.len() < 2 {
        return bounded;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let fitted_end = (my + exponent * (span.ln() - mx)).exp();
    let growth_rate = fitted_end / span;
    let verdict = if exponent > GROWTH_EXPONENT && growth_rate > 100.0 * residual_tolerance {
        Verdict::Growing
    } else {
        Verdict::Bounded
    };
    Boundedness {
        verdict,
        exponent,
        growth_rate,
    }
}

/// Options for [`virial_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Start of the averaging window.
    pub t_start: f64,
    /// Tolerance on the exact identity; feeds the growth verdict.
    pub residual_tolerance: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            residual_tolerance: 1e-8,
        }
    }
}

/// Term averages, exact identity and boundedness diagnostic for a
/// deterministic trajectory of `field`.
pub fn virial_report(
    traj: &Trajectory,
    field: &dyn VectorField,
    setup: &VirialSetup,
    chart: &str,
    opts: ReportOptions,
) -> Result<VirialReport> {
    if let Some(reason) = &traj.abort {
        return Err(Error::Aborted(reason.to_string()));
    }
    ensure_dim(field.dim(), traj.layout.len())?;
    setup.check(field.dim())?;
    let first = window_start(traj, opts.t_start)?;
    let times = &traj.times[first..];
    let states = &traj.states[first..];

    let mut term_acc = vec![AverageAccumulator::new(); setup.terms.len()];
    let mut rate_acc = AverageAccumulator::new();
    let mut g_values = Vec::with_capacity(states.len());
    for (t, x) in times.iter().zip(states) {
        for (acc, term) in term_acc.iter_mut().zip(&setup.terms) {
            acc.push(*t, term.observable.value(x));
        }
        rate_acc.push(*t, rate_along(field, setup.g.as_ref(), x)?);
        g_values.push(setup.g.value(x));
    }

    let span = times[times.len() - 1] - times[0];
    let mut terms = Vec::with_capacity(setup.terms.len());
    let mut theorem = 0.0;
    for (acc, term) in term_acc.iter().zip(&setup.terms) {
        let mean = acc.average().ok_or(Error::EmptyTrajectory)?;
        theorem += term.sign * mean;
        terms.push(TermAverage {
            name: term.name.clone(),
            sign: term.sign,
            mean: Estimate::exact(mean),
        });
    }
    let rate = rate_acc.average().ok_or(Error::EmptyTrajectory)?;
    let boundary = (g_values[g_values.len() - 1] - g_values[0]) / span;

    Ok(VirialReport {
        system: traj.meta.system.clone(),
        chart: chart.to_string(),
        meta: traj.meta.clone(),
        horizon: times[times.len() - 1],
        t_start: times[0],
        samples: times.len(),
        terms,
        rate_average: Estimate::exact(rate),
        boundary_term: Estimate::exact(boundary),
        residual_exact: Estimate::exact(rate - boundary),
        theorem_residual: Estimate::exact(theorem),
        boundedness: Some(boundedness(times, &g_values, opts.residual_tolerance)),
        extras: Vec::new(),
    })
}

/// Per-term running averages against the window end, for convergence plots.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverages {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RunningAverages {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Running averages of each term, of `X(G)` and the boundary term, emitted
/// every `stride` samples and at the last sample.
pub fn running_averages(
    traj: &Trajectory,
    field: &dyn VectorField,
    setup: &VirialSetup,
    t_start: f64,
    stride: usize,
) -> Result<RunningAverages> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    setup.check(field.dim())?;
    let first = window_start(traj, t_start)?;
    let mut columns = vec!["T".to_string()];
    columns.extend(setup.terms.iter().map(|t| t.name.clone()));
    columns.push("rate".into());
    columns.push("boundary_term".into());

    let mut term_acc = vec![AverageAccumulator::new(); setup.terms.len()];
    let mut rate_acc = AverageAccumulator::new();
    let g0 = setup.g.value(&traj.states[first]);
    let t0 = traj.times[first];
    let last = traj.len() - 1;
    let mut rows = Vec::new();
    for i in first..=last {
        let (t, x) = (traj.times[i], &traj.states[i]);
        for (acc, term) in term_acc.iter_mut().zip(&setup.terms) {
            acc.push(t, term.observable.value(x));
        }
        rate_acc.push(t, rate_along(field, setup.g.as_ref(), x)?);
        if i > first && ((i - first) % stride == 0 || i == last) {
            let mut row = vec![t];
            row.extend(term_acc.iter().map(|a| a.average().unwrap_or(f64::NAN)));
            row.push(rate_acc.average().unwrap_or(f64::NAN));
            row.push((setup.g.value(x) - g0) / (t - t0));
            rows.push(row);
        }
    }
    Ok(RunningAverages { columns, rows })
}
