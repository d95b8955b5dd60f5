use rayon::prelude::*;

use super::report::{Estimate, TermAverage, VirialReport};
use crate::error::{Error, Result};
use crate::integrate::{
    euler_maruyama_langevin_observed, AverageAccumulator, CompensatedSum, NoiseSpec, RunMetadata,
    Welford,
};
use crate::systems::BrownianOscillator;

/// Ensemble parameters. Member `i` draws its noise from seed `seed ^ i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub members: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Start of the averaging window.
    pub t_start: f64,
    /// Initial `(t, s, q, p)`.
    pub initial: [f64; 4],
}

impl EnsembleOptions {
    pub fn new(members: usize, horizon: f64, dt: f64) -> Self {
        Self {
            members,
            horizon,
            dt,
            t_start: 0.0,
            initial: [0.0, 0.0, 1.0, 0.0],
        }
    }
}

/// Time averages of one member.
#[derive(Debug, Clone, Copy)]
struct Member {
    kinetic: f64,
    potential: f64,
    friction_noise: f64,
    rate: f64,
    boundary: f64,
}

fn run_member(osc: &BrownianOscillator, noise: &NoiseSpec, opts: &EnsembleOptions) -> Result<Option<Member>> {
    let BrownianOscillator { m, omega, gamma, .. } = *osc;
    let k = m * omega * omega;
    let kinetic = |x: &[f64; 4]| x[3] * x[3] / (2.0 * m);
    let potential = |x: &[f64; 4]| k * x[2] * x[2] / 2.0;
    let friction = |x: &[f64; 4]| -0.5 * gamma * x[2] * x[3];
    let smooth_rate = |x: &[f64; 4]| 2.0 * kinetic(x) - 2.0 * potential(x) - gamma * x[2] * x[3];

    let mut ke = AverageAccumulator::new();
    let mut pe = AverageAccumulator::new();
    let mut fr = AverageAccumulator::new();
    let mut rate = AverageAccumulator::new();
    // Stochastic parts integrated at the left point.
    let mut noise_virial = CompensatedSum::default();
    let mut g_start = None;
    let mut g_end = 0.0;
    let slack = 1e-9 * opts.t_start.abs().max(1.0);

    let traj = euler_maruyama_langevin_observed(
        osc,
        noise,
        &opts.initial,
        opts.horizon,
        opts.dt,
        usize::MAX,
        |step| {
            if step.t < opts.t_start - slack {
                return;
            }
            let (a, b) = (&step.before, &step.after);
            if g_start.is_none() {
                g_start = Some(a[2] * a[3]);
                ke.push(step.t, kinetic(a));
                pe.push(step.t, potential(a));
                fr.push(step.t, friction(a));
                rate.push(step.t, smooth_rate(a));
            }
            let t = step.t + step.dt;
            ke.push(t, kinetic(b));
            pe.push(t, potential(b));
            fr.push(t, friction(b));
            rate.push(t, smooth_rate(b));
            noise_virial.add(a[2] * step.eta * step.dt);
            g_end = b[2] * b[3];
        },
    )?;
    if traj.is_aborted() {
        return Ok(None);
    }
    let span = ke.elapsed();
    let (Some(g0), true) = (g_start, span > 0.0) else {
        return Err(Error::EmptyTrajectory);
    };
    let noise_avg = noise_virial.value() / span;
    let avg = |a: &AverageAccumulator| a.average().unwrap_or(0.0);
    Ok(Some(Member {
        kinetic: avg(&ke),
        potential: avg(&pe),
        friction_noise: avg(&fr) + 0.5 * noise_avg,
        rate: avg(&rate) + noise_avg,
        boundary: (g_end - g0) / span,
    }))
}

fn estimate(w: &Welford) -> Estimate {
    Estimate {
        value: w.mean,
        std_err: Some(w.std_err()),
    }
}

/// Ensemble-mean virial report of the Brownian oscillator with standard-error
/// bars. Terms are `kinetic (+)`, `potential (−)` and
/// `friction_noise = ½q(−γp + η) (+)`.
pub fn ensemble_report(
    osc: &BrownianOscillator,
    noise: &NoiseSpec,
    opts: &EnsembleOptions,
) -> Result<VirialReport> {
    if opts.members < 2 {
        return Err(Error::InvalidArgument("ensemble needs at least 2 members".into()));
    }
    if !(opts.t_start >= 0.0 && opts.t_start < opts.horizon) {
        return Err(Error::InvalidArgument(format!(
            "averaging start {} outside [0, {})",
            opts.t_start, opts.horizon
        )));
    }
    let results: Vec<Result<Option<Member>>> = (0..opts.members)
        .into_par_iter()
        .map(|i| run_member(osc, &noise.member(i as u64), opts))
        .collect();

    let mut ke = Welford::default();
    let mut pe = Welford::default();
    let mut fr = Welford::default();
    let mut rate = Welford::default();
    let mut boundary = Welford::default();
    let mut residual_exact = Welford::default();
    let mut theorem = Welford::default();
    let mut difference = Welford::default();
    let mut aborted = 0usize;
    for r in results {
        let Some(m) = r? else {
            aborted += 1;
            continue;
        };
        ke.push(m.kinetic);
        pe.push(m.potential);
        fr.push(m.friction_noise);
        rate.push(m.rate);
        boundary.push(m.boundary);
        residual_exact.push(m.rate - m.boundary);
        theorem.push(m.kinetic - m.potential + m.friction_noise);
        difference.push(m.kinetic - m.potential);
    }
    if ke.count == 0 {
        return Err(Error::AllAborted(opts.members));
    }

    let meta = RunMetadata {
        system: "brownian_oscillator".into(),
        params: osc.params(),
        integrator: "euler_maruyama".into(),
        step: Some(opts.dt),
        seed: Some(noise.seed),
        ..RunMetadata::default()
    };
    let term = |name: &str, sign: f64, w: &Welford| TermAverage {
        name: name.into(),
        sign,
        mean: estimate(w),
    };
    Ok(VirialReport {
        system: meta.system.clone(),
        chart: "extended".into(),
        meta,
        horizon: opts.horizon,
        t_start: opts.t_start,
        samples: ke.count as usize,
        terms: vec![
            term("kinetic", 1.0, &ke),
            term("potential", -1.0, &pe),
            term("friction_noise", 1.0, &fr),
        ],
        rate_average: estimate(&rate),
        boundary_term: estimate(&boundary),
        residual_exact: estimate(&residual_exact),
        theorem_residual: estimate(&theorem),
        boundedness: None,
        extras: vec![
            ("members".into(), opts.members as f64),
            ("aborted".into(), aborted as f64),
            ("equipartition".into(), osc.kt / 2.0),
            ("kinetic_minus_potential".into(), difference.mean),
            ("kinetic_minus_potential.std_err".into(), difference.std_err()),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_order_independent() {
        let osc = BrownianOscillator::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let noise = osc.noise(42).unwrap();
        let opts = EnsembleOptions::new(8, 5.0, 1e-2);
        let a = ensemble_report(&osc, &noise, &opts).unwrap();
        let b = ensemble_report(&osc, &noise, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples, 8);
        assert!(a.term("kinetic").unwrap().mean.std_err.unwrap() > 0.0);
    }

    #[test]
    fn zero_temperature_collapses_error_bars() {
        let osc = BrownianOscillator::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let noise = osc.noise(1).unwrap();
        let r = ensemble_report(&osc, &noise, &EnsembleOptions::new(4, 10.0, 1e-3)).unwrap();
        for t in &r.terms {
            assert_eq!(t.mean.std_err, Some(0.0));
        }
    }

    #[test]
    fn rejects_small_ensembles_and_bad_windows() {
        let osc = BrownianOscillator::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let noise = osc.noise(1).unwrap();
        assert!(ensemble_report(&osc, &noise, &EnsembleOptions::new(1, 1.0, 1e-2)).is_err());
        let mut opts = EnsembleOptions::new(4, 1.0, 1e-2);
        opts.t_start = 2.0;
        assert!(ensemble_report(&osc, &noise, &opts).is_err());
    }
}
