//! Euler–Maruyama for the harmonically trapped Brownian particle in the
//! extended contact chart `(t, s, q, p)`.
//!
//! Per step the momentum receives the additive increment
//! `√(2mγk_BT·dt)·N(0,1)`; the same realized increment divided by `dt` is the
//! forcing `η̂` seen by the `s` equation over that step, evaluated at the left
//! point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AbortReason, RunMetadata, Trajectory};
use crate::error::{ensure_dim, Error, Result};
use crate::systems::BrownianOscillator;

/// Upper bound on `γ·dt`.
pub const MAX_GAMMA_DT: f64 = 0.1;

/// Statistics of the thermal force: `⟨η⟩ = 0`, `⟨η(t)η(t')⟩ = 2mγk_BT δ(t−t')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mass: f64,
    pub gamma: f64,
    pub kt: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// `kt = 0` is accepted and switches the noise off.
    pub fn new(mass: f64, gamma: f64, kt: f64, seed: u64) -> Result<Self> {
        let check = |name: &str, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name: name.into(),
                    value,
                    reason: "out of range".into(),
                })
            }
        };
        check("m", mass, mass > 0.0 && mass.is_finite())?;
        check("gamma", gamma, gamma > 0.0 && gamma.is_finite())?;
        check("kT", kt, kt >= 0.0 && kt.is_finite())?;
        let spec = Self { mass, gamma, kt, seed };
        check("diffusion amplitude", spec.amplitude(), spec.amplitude().is_finite())?;
        Ok(spec)
    }

    /// `√(2mγk_BT)`.
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.mass * self.gamma * self.kt).sqrt()
    }

    /// Seed for ensemble member `index`.
    pub fn member(&self, index: u64) -> Self {
        Self {
            seed: self.seed ^ index,
            ..*self
        }
    }
}

/// One Euler–Maruyama step as seen by an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinStep {
    /// Elapsed time at the start of the step.
    pub t: f64,
    pub dt: f64,
    /// `(t, s, q, p)` before the step.
    pub before: [f64; 4],
    /// `(t, s, q, p)` after the step.
    pub after: [f64; 4],
    /// Realized forcing `η̂ = ΔW_p / dt` over the step.
    pub eta: f64,
}

/// Euler–Maruyama trajectory sampled every `sample_every` steps.
pub fn euler_maruyama_langevin(
    oscillator: &BrownianOscillator,
    noise: &NoiseSpec,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    euler_maruyama_langevin_observed(oscillator, noise, x0, horizon, dt, sample_every, |_| {})
}

/// As [`euler_maruyama_langevin`], calling `observer` after every step.
pub fn euler_maruyama_langevin_observed(
    oscillator: &BrownianOscillator,
    noise: &NoiseSpec,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
    mut observer: impl FnMut(&LangevinStep),
) -> Result<Trajectory> {
    ensure_dim(4, x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt <= horizon) {
        return Err(Error::InvalidArgument(format!("bad step {dt}")));
    }
    if !(oscillator.gamma * dt < MAX_GAMMA_DT) {
        return Err(Error::InvalidArgument(format!(
            "gamma*dt = {} violates the stability guard gamma*dt < {MAX_GAMMA_DT}",
            oscillator.gamma * dt
        )));
    }
    if sample_every == 0 {
        return Err(Error::InvalidArgument("sample_every must be >= 1".into()));
    }
    if noise.mass != oscillator.m || noise.gamma != oscillator.gamma {
        return Err(Error::InvalidArgument(
            "noise mass/damping do not match the oscillator".into(),
        ));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("initial state component {i}"),
            value: x0[i],
        });
    }

    let meta = RunMetadata {
        system: "brownian_oscillator".into(),
        params: oscillator.params(),
        integrator: "euler_maruyama".into(),
        step: Some(dt),
        seed: Some(noise.seed),
        ..RunMetadata::default()
    };
    let layout = vec!["t".into(), "s".into(), "q".into(), "p".into()];
    let mut traj = Trajectory::new(layout, meta);
    traj.push(0.0, x0);

    let BrownianOscillator { m, omega, gamma, .. } = *oscillator;
    let k = m * omega * omega;
    let increment_scale = (noise.amplitude() * noise.amplitude() * dt).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let steps = (horizon / dt).round().max(1.0) as u64;
    let t0 = x0[0];
    let mut x = [x0[0], x0[1], x0[2], x0[3]];

    for n in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let dw = increment_scale * z;
        let eta = dw / dt;
        let [_, s, q, p] = x;
        let elapsed = n as f64 * dt;
        let elapsed_next = if n + 1 == steps { horizon } else { (n + 1) as f64 * dt };
        let h = elapsed_next - elapsed;
        let next = [
            t0 + elapsed_next,
            s + h * (p * p / (2.0 * m) - k * q * q / 2.0 - gamma * s + q * eta),
            q + h * p / m,
            p + h * (-gamma * p - k * q) + dw,
        ];
        if let Some(component) = next.iter().position(|v| !v.is_finite()) {
            traj.abort = Some(AbortReason::NonFinite { time: elapsed_next, component });
            if traj.final_time() != Some(elapsed) {
                traj.push(elapsed, &x);
            }
            break;
        }
        observer(&LangevinStep {
            t: elapsed,
            dt: h,
            before: x,
            after: next,
            eta,
        });
        x = next;
        if n + 1 == steps || (n + 1) % sample_every as u64 == 0 {
            traj.push(elapsed_next, &x);
        }
    }
    Ok(traj)
}
