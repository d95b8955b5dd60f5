use crate::contact::{DarbouxPoint, Partials, PhaseFunction};
use crate::error::{Error, Result};
use crate::extended::{ExtendedPoint, TimeDependentHamiltonian, TimePartials};
use crate::herglotz::{
    LagrangianModel, LagrangianPartials, LagrangianPoint, LagrangianSecondPartials,
};
use crate::integrate::NoiseSpec;

pub(crate) fn require(name: &str, value: f64, ok: bool, reason: &str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.into(),
            value,
            reason: reason.into(),
        })
    }
}

pub(crate) fn positive(name: &str, value: f64) -> Result<()> {
    require(name, value, value > 0.0, "must be > 0")
}

pub(crate) fn non_negative(name: &str, value: f64) -> Result<()> {
    require(name, value, value >= 0.0, "must be >= 0")
}

/// `h = p²/2m + mω²q²/2 + γs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl DampedOscillator {
    pub fn new(m: f64, omega: f64, gamma: f64) -> Result<Self> {
        positive("m", m)?;
        positive("omega", omega)?;
        positive("gamma", gamma)?;
        Ok(Self { m, omega, gamma })
    }

    pub fn stiffness(&self) -> f64 {
        self.m * self.omega * self.omega
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("m".into(), self.m),
            ("omega".into(), self.omega),
            ("gamma".into(), self.gamma),
        ]
    }

    /// The Herglotz chart `L = mq̇²/2 − mω²q²/2 − γs`.
    pub fn lagrangian(&self) -> DampedLagrangian {
        DampedLagrangian(*self)
    }
}

impl PhaseFunction for DampedOscillator {
    fn name(&self) -> &str {
        "damped_oscillator"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        let (q, p) = (x.q[0], x.p[0]);
        p * p / (2.0 * self.m) + self.stiffness() * q * q / 2.0 + self.gamma * x.s
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        Partials {
            ds: self.gamma,
            dq: vec![self.stiffness() * x.q[0]],
            dp: vec![x.p[0] / self.m],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedLagrangian(pub DampedOscillator);

impl LagrangianModel for DampedLagrangian {
    fn name(&self) -> &str {
        "damped_oscillator"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, z: &LagrangianPoint) -> f64 {
        let o = &self.0;
        let (q, v) = (z.q[0], z.qdot[0]);
        o.m * v * v / 2.0 - o.stiffness() * q * q / 2.0 - o.gamma * z.s
    }
    fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials {
        let o = &self.0;
        LagrangianPartials {
            ds: -o.gamma,
            dq: vec![-o.stiffness() * z.q[0]],
            dqdot: vec![o.m * z.qdot[0]],
        }
    }
    fn second_partials(&self, _z: &LagrangianPoint) -> LagrangianSecondPartials {
        LagrangianSecondPartials {
            w: vec![self.0.m],
            q_qdot: vec![0.0],
            s_qdot: vec![0.0],
        }
    }
}

/// `h = p²/2m + mω²q²/2 + γs − q F₀ cos(Ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedOscillator {
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub f0: f64,
    pub drive: f64,
}

impl ForcedOscillator {
    pub fn new(m: f64, omega: f64, gamma: f64, f0: f64, drive: f64) -> Result<Self> {
        DampedOscillator::new(m, omega, gamma)?;
        non_negative("F0", f0)?;
        positive("Omega", drive)?;
        Ok(Self {
            m,
            omega,
            gamma,
            f0,
            drive,
        })
    }

    pub fn force(&self, t: f64) -> f64 {
        self.f0 * (self.drive * t).cos()
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("m".into(), self.m),
            ("omega".into(), self.omega),
            ("gamma".into(), self.gamma),
            ("F0".into(), self.f0),
            ("Omega".into(), self.drive),
        ]
    }

    /// Amplitude and phase-free steady-state averages `(⟨KE⟩, ⟨PE⟩)`.
    pub fn steady_state_energies(&self) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        let d2 = self.drive * self.drive;
        let denom = (w2 - d2).powi(2) + (self.gamma * self.drive).powi(2);
        let amp2 = (self.f0 / self.m).powi(2) / denom;
        (
            self.m * amp2 * d2 / 4.0,
            self.m * w2 * amp2 / 4.0,
        )
    }
}

impl TimeDependentHamiltonian for ForcedOscillator {
    fn name(&self) -> &str {
        "forced_oscillator"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, y: &ExtendedPoint) -> f64 {
        let (q, p) = (y.base.q[0], y.base.p[0]);
        let k = self.m * self.omega * self.omega;
        p * p / (2.0 * self.m) + k * q * q / 2.0 + self.gamma * y.base.s - q * self.force(y.t)
    }
    fn partials(&self, y: &ExtendedPoint) -> TimePartials {
        let (q, p) = (y.base.q[0], y.base.p[0]);
        let k = self.m * self.omega * self.omega;
        TimePartials {
            dt: q * self.f0 * self.drive * (self.drive * y.t).sin(),
            base: Partials {
                ds: self.gamma,
                dq: vec![k * q - self.force(y.t)],
                dp: vec![p / self.m],
            },
        }
    }
}

/// Harmonically trapped particle in a thermal bath. As a Hamiltonian it is
/// the noise-free part `p²/2m + mω²q²/2 + γs`; the force `η(t)` enters
/// through [`crate::integrate::euler_maruyama_langevin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianOscillator {
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub kt: f64,
}

impl BrownianOscillator {
    pub fn new(m: f64, omega: f64, gamma: f64, kt: f64) -> Result<Self> {
        DampedOscillator::new(m, omega, gamma)?;
        non_negative("kT", kt)?;
        Ok(Self { m, omega, gamma, kt })
    }

    pub fn noise(&self, seed: u64) -> Result<NoiseSpec> {
        NoiseSpec::new(self.m, self.gamma, self.kt, seed)
    }

    pub fn damped(&self) -> DampedOscillator {
        DampedOscillator {
            m: self.m,
            omega: self.omega,
            gamma: self.gamma,
        }
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        let mut p = self.damped().params();
        p.push(("kT".into(), self.kt));
        p
    }
}

impl TimeDependentHamiltonian for BrownianOscillator {
    fn name(&self) -> &str {
        "brownian_oscillator"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, y: &ExtendedPoint) -> f64 {
        self.damped().value(&y.base)
    }
    fn partials(&self, y: &ExtendedPoint) -> TimePartials {
        TimePartials {
            dt: 0.0,
            base: self.damped().partials(&y.base),
        }
    }
}

/// `N` unit-coupled damped particles:
/// `h = Σ pᵢ²/2m + V(q) + γs`, `V = Σ mω²qᵢ²/2 + κ Σ (qᵢ − qᵢ₊₁)⁴/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedParticles {
    pub n: usize,
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl DampedParticles {
    pub fn new(n: usize, m: f64, omega: f64, gamma: f64, kappa: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        DampedOscillator::new(m, omega, gamma)?;
        non_negative("kappa", kappa)?;
        Ok(Self {
            n,
            m,
            omega,
            gamma,
            kappa,
        })
    }

    pub fn potential(&self, q: &[f64]) -> f64 {
        let k = self.m * self.omega * self.omega;
        let harmonic: f64 = q.iter().map(|x| k * x * x / 2.0).sum();
        let coupling: f64 = q.windows(2).map(|w| (w[0] - w[1]).powi(4) / 4.0).sum();
        harmonic + self.kappa * coupling
    }

    pub fn potential_gradient(&self, q: &[f64]) -> Vec<f64> {
        let k = self.m * self.omega * self.omega;
        let mut g: Vec<f64> = q.iter().map(|x| k * x).collect();
        for i in 0..q.len().saturating_sub(1) {
            let f = self.kappa * (q[i] - q[i + 1]).powi(3);
            g[i] += f;
            g[i + 1] -= f;
        }
        g
    }
}

impl PhaseFunction for DampedParticles {
    fn name(&self) -> &str {
        "damped_particles"
    }
    fn dof(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        let kinetic: f64 = x.p.iter().map(|p| p * p / (2.0 * self.m)).sum();
        kinetic + self.potential(&x.q) + self.gamma * x.s
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        Partials {
            ds: self.gamma,
            dq: self.potential_gradient(&x.q),
            dp: x.p.iter().map(|p| p / self.m).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::contact_vector_field;
    use crate::herglotz::{energy, legendre_map};
    use crate::oracle::{check_partials, check_time_partials, check_lagrangian_partials, DEFAULT_STEP};

    #[test]
    fn damped_field_example() {
        let h = DampedOscillator::new(1.0, 1.0, 0.1).unwrap();
        let v = contact_vector_field(&h, &DarbouxPoint::scalar(0.0, 1.0, 2.0)).unwrap();
        assert!((v.ds - 1.5).abs() < 1e-15);
        assert!((v.dq[0] - 2.0).abs() < 1e-15);
        assert!((v.dp[0] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn parameters_are_validated() {
        assert!(DampedOscillator::new(0.0, 1.0, 0.1).is_err());
        assert!(DampedOscillator::new(1.0, 1.0, 0.0).is_err());
        assert!(ForcedOscillator::new(1.0, 1.0, 0.1, -1.0, 2.0).is_err());
        assert!(ForcedOscillator::new(1.0, 1.0, 0.1, 0.0, 2.0).is_ok());
        assert!(BrownianOscillator::new(1.0, 1.0, 0.5, -0.1).is_err());
        assert!(DampedParticles::new(0, 1.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn steady_state_closed_form() {
        let f = ForcedOscillator::new(1.0, 1.0, 0.1, 1.0, 2.0).unwrap();
        let (ke, pe) = f.steady_state_energies();
        assert!((ke - 1.0 / 9.04).abs() < 1e-15);
        assert!((pe - 0.25 / 9.04).abs() < 1e-15);
    }

    #[test]
    fn partials_agree_with_differences() {
        let x = DarbouxPoint::scalar(0.3, -0.7, 1.1);
        let h = DampedOscillator::new(2.0, 1.5, 0.3).unwrap();
        assert!(check_partials(&h, &x, DEFAULT_STEP).unwrap().passed());
        let z = LagrangianPoint::scalar(-0.7, 0.4, 0.3);
        assert!(check_lagrangian_partials(&h.lagrangian(), &z, DEFAULT_STEP).unwrap().passed());
        let f = ForcedOscillator::new(1.0, 1.0, 0.1, 1.0, 2.0).unwrap();
        let y = ExtendedPoint::new(0.9, x.clone()).unwrap();
        assert!(check_time_partials(&f, &y, DEFAULT_STEP).unwrap().passed());
        let particles = DampedParticles::new(3, 1.0, 1.0, 0.1, 0.5).unwrap();
        let xp = DarbouxPoint::new(0.2, vec![0.5, -0.3, 0.8], vec![0.1, 0.0, -0.4]).unwrap();
        assert!(check_partials(&particles, &xp, DEFAULT_STEP).unwrap().passed());
    }

    #[test]
    fn hamiltonian_of_legendre_image_is_energy() {
        let h = DampedOscillator::new(2.0, 1.5, 0.3).unwrap();
        let l = h.lagrangian();
        for &(q, v, s) in &[(0.1, 0.2, 0.3), (-1.0, 2.0, 5.0), (3.0, -0.5, -2.0)] {
            let z = LagrangianPoint::scalar(q, v, s);
            let e = energy(&l, &z).unwrap();
            let hv = h.value(&legendre_map(&l, &z).unwrap());
            assert!((e - hv).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}
