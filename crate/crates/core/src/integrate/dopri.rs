//! Dormand–Prince 5(4) with a standard step-size controller and the
//! fourth-order continuous extension for evenly spaced output.

use super::{AbortReason, RunMetadata, Trajectory, VectorField};
use crate::error::{ensure_dim, Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const UNDERFLOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Spacing of recorded samples; the horizon is always recorded.
    pub sample_interval: f64,
    /// Optional initial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl AdaptiveOptions {
    pub fn new(rel_tol: f64, abs_tol: f64, sample_interval: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            sample_interval,
            initial_step: None,
        }
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// Fills stages 2..7 given `k[0] = f(x)`, writes the fifth-order solution.
    fn step(&mut self, field: &dyn VectorField, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
        let n = x.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.tmp[i] = x[i] + h * acc;
            }
            field.eval(&self.tmp, &mut self.k[s])?;
            if s == 6 {
                out.copy_from_slice(&self.tmp);
            }
        }
        Ok(())
    }

    fn error_norm(&self, x: &[f64], x_new: &[f64], h: f64, opts: &AdaptiveOptions) -> f64 {
        let n = x.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * self.k[j][i];
            }
            let scale = opts.abs_tol + opts.rel_tol * x[i].abs().max(x_new[i].abs());
            let r = h * e / scale;
            sum += r * r;
        }
        (sum / n as f64).sqrt()
    }

    /// Interpolant at `theta ∈ [0, 1]` across the accepted step `x → x_new`.
    fn dense(&self, x: &[f64], x_new: &[f64], h: f64, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for i in 0..x.len() {
            let r2 = x_new[i] - x[i];
            let r3 = h * self.k[0][i] - r2;
            let r4 = r2 - h * self.k[6][i] - r3;
            let mut r5 = 0.0;
            for (j, d) in D.iter().enumerate() {
                r5 += d * self.k[j][i];
            }
            r5 *= h;
            out[i] = x[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
        }
    }
}

fn rms(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn initial_step(
    field: &dyn VectorField,
    x: &[f64],
    f0: &[f64],
    horizon: f64,
    opts: &AdaptiveOptions,
) -> Result<f64> {
    let scale: Vec<f64> = x.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
    let d0 = rms(x, &scale);
    let d1 = rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(horizon);
    let x1: Vec<f64> = x.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; x.len()];
    field.eval(&x1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(horizon))
}

/// Embedded Runge–Kutta 4(5) integration from elapsed time 0 to `horizon`,
/// sampled every `opts.sample_interval` through dense output.
///
/// Steps smaller than `1e-12 · horizon` abort the run with
/// [`AbortReason::StepUnderflow`].
pub fn integrate_adaptive(
    field: &dyn VectorField,
    x0: &[f64],
    horizon: f64,
    opts: AdaptiveOptions,
    meta: RunMetadata,
) -> Result<Trajectory> {
    ensure_dim(field.dim(), x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    if !(opts.sample_interval > 0.0) {
        return Err(Error::InvalidArgument("sample interval must be positive".into()));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("initial state component {i}"),
            value: x0[i],
        });
    }

    let meta = RunMetadata {
        integrator: "dopri45".into(),
        rel_tol: Some(opts.rel_tol),
        abs_tol: Some(opts.abs_tol),
        ..meta
    };
    let mut traj = Trajectory::new(field.layout(), meta);
    traj.push(0.0, x0);

    let n = x0.len();
    let mut stages = Stages::new(n);
    let mut x = x0.to_vec();
    let mut x_new = vec![0.0; n];
    let mut sample = vec![0.0; n];
    let mut t = 0.0;
    let mut next_sample: u64 = 1;

    if let Err(e) = field.eval(&x, &mut stages.k[0]) {
        traj.abort = Some(AbortReason::FieldError { time: 0.0, message: e.to_string() });
        return Ok(traj);
    }
    let mut h = match opts.initial_step {
        Some(h) => h.min(horizon),
        None => match initial_step(field, &x, &stages.k[0].clone(), horizon, &opts) {
            Ok(h) => h,
            Err(e) => {
                traj.abort = Some(AbortReason::FieldError { time: 0.0, message: e.to_string() });
                return Ok(traj);
            }
        },
    };

    while t < horizon {
        let last = t + h >= horizon * (1.0 - 1e-14);
        if last {
            h = horizon - t;
        }
        if h < UNDERFLOW * horizon {
            traj.abort = Some(AbortReason::StepUnderflow { time: t, step: h });
            break;
        }
        if let Err(e) = stages.step(field, &x, h, &mut x_new) {
            // Evaluation outside the domain inside a trial step: shrink and retry.
            h *= MIN_FACTOR;
            if h < UNDERFLOW * horizon {
                traj.abort = Some(AbortReason::FieldError { time: t, message: e.to_string() });
                break;
            }
            continue;
        }
        let err = stages.error_norm(&x, &x_new, h, &opts);
        if !err.is_finite() {
            h *= MIN_FACTOR;
            continue;
        }
        if err <= 1.0 {
            let t_new = if last { horizon } else { t + h };
            loop {
                let ts = next_sample as f64 * opts.sample_interval;
                if ts >= t_new || ts >= horizon * (1.0 - 1e-12) {
                    break;
                }
                stages.dense(&x, &x_new, h, (ts - t) / h, &mut sample);
                traj.push(ts, &sample);
                next_sample += 1;
            }
            if let Some(component) = x_new.iter().position(|v| !v.is_finite()) {
                traj.abort = Some(AbortReason::NonFinite { time: t_new, component });
                break;
            }
            t = t_new;
            std::mem::swap(&mut x, &mut x_new);
            // First-same-as-last: the seventh stage is f at the new point.
            let k7 = std::mem::take(&mut stages.k[6]);
            stages.k[0].copy_from_slice(&k7);
            stages.k[6] = k7;
            if last {
                traj.push(t, &x);
                break;
            }
            let factor = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR);
            h *= factor;
        } else {
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
        }
    }
    if traj.abort.is_some() && traj.final_time() != Some(t) && t > 0.0 {
        traj.push(t, &x);
    }
    Ok(traj)
}
