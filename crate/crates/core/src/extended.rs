//! Explicitly time-dependent contact Hamiltonians on `M_c × ℝ`.
//!
//! The evolution field is `∂/∂t + X_h`, where `X_h` is the contact field of
//! the Hamiltonian frozen at the current time.

use crate::contact::{contact_vector_field, DarbouxPoint, Partials, PhaseFunction};
use crate::error::{ensure_finite, Error, Result};

/// `(t, s, q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPoint {
    pub t: f64,
    pub base: DarbouxPoint,
}

impl ExtendedPoint {
    pub fn new(t: f64, base: DarbouxPoint) -> Result<Self> {
        ensure_finite(|| "time coordinate".into(), t)?;
        base.validate()?;
        Ok(Self { t, base })
    }

    /// Reads the flat layout `(t, s, q.., p..)`.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.is_empty() {
            return Err(Error::InvalidArgument("empty extended state".into()));
        }
        Self::new(state[0], DarbouxPoint::from_state(&state[1..])?)
    }

    pub fn to_state(&self) -> Vec<f64> {
        let mut out = vec![self.t];
        out.extend(self.base.to_state());
        out
    }
}

/// Partials of a time-dependent Hamiltonian: `∂h/∂t` plus the Darboux ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartials {
    pub dt: f64,
    pub base: Partials,
}

pub trait TimeDependentHamiltonian: Send + Sync {
    fn name(&self) -> &str;
    fn dof(&self) -> usize;
    fn value(&self, y: &ExtendedPoint) -> f64;
    fn partials(&self, y: &ExtendedPoint) -> TimePartials;
}

/// `h(t₀, ·)` as an autonomous phase function.
pub struct FrozenTime<'a, H: ?Sized> {
    pub hamiltonian: &'a H,
    pub t: f64,
}

impl<'a, H: TimeDependentHamiltonian + ?Sized> FrozenTime<'a, H> {
    pub fn new(hamiltonian: &'a H, t: f64) -> Self {
        Self { hamiltonian, t }
    }

    fn lift(&self, x: &DarbouxPoint) -> ExtendedPoint {
        ExtendedPoint {
            t: self.t,
            base: x.clone(),
        }
    }
}

impl<H: TimeDependentHamiltonian + ?Sized> PhaseFunction for FrozenTime<'_, H> {
    fn name(&self) -> &str {
        self.hamiltonian.name()
    }
    fn dof(&self) -> usize {
        self.hamiltonian.dof()
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        self.hamiltonian.value(&self.lift(x))
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        self.hamiltonian.partials(&self.lift(x)).base
    }
}

/// Components `(dt, ds, dq, dp)` of the evolution field.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTangent {
    pub dt: f64,
    pub ds: f64,
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl ExtendedTangent {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 + 2 * self.dq.len());
        out.push(self.dt);
        out.push(self.ds);
        out.extend_from_slice(&self.dq);
        out.extend_from_slice(&self.dp);
        out
    }
}

/// `Ξ_h = ∂/∂t + X_h`: unit time rate, contact field of the frozen Hamiltonian.
pub fn evolution_field<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    y: &ExtendedPoint,
) -> Result<ExtendedTangent> {
    ensure_finite(|| "time coordinate".into(), y.t)?;
    let v = contact_vector_field(&FrozenTime::new(h, y.t), &y.base)?;
    Ok(ExtendedTangent {
        dt: 1.0,
        ds: v.ds,
        dq: v.dq,
        dp: v.dp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    /// h = p²/2 + q²/2 + 0.1 s − q F0 cos(2t).
    struct Forced {
        f0: f64,
    }

    impl TimeDependentHamiltonian for Forced {
        fn name(&self) -> &str {
            "forced"
        }
        fn dof(&self) -> usize {
            1
        }
        fn value(&self, y: &ExtendedPoint) -> f64 {
            let (q, p) = (y.base.q[0], y.base.p[0]);
            p * p / 2.0 + q * q / 2.0 + 0.1 * y.base.s - q * self.f0 * (2.0 * y.t).cos()
        }
        fn partials(&self, y: &ExtendedPoint) -> TimePartials {
            let (q, p) = (y.base.q[0], y.base.p[0]);
            TimePartials {
                dt: 2.0 * q * self.f0 * (2.0 * y.t).sin(),
                base: Partials {
                    ds: 0.1,
                    dq: vec![q - self.f0 * (2.0 * y.t).cos()],
                    dp: vec![p],
                },
            }
        }
    }

    #[test]
    fn forced_oscillator_at_t0() {
        let y = ExtendedPoint::new(0.0, DarbouxPoint::scalar(0.0, 1.0, 2.0)).unwrap();
        let v = evolution_field(&Forced { f0: 1.0 }, &y).unwrap();
        assert_eq!(v.dt, 1.0);
        assert!((v.ds - 2.5).abs() < 1e-15);
        assert!((v.dq[0] - 2.0).abs() < 1e-15);
        assert!((v.dp[0] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn forcing_vanishes_at_quarter_period() {
        let y = ExtendedPoint::new(FRAC_PI_4, DarbouxPoint::scalar(0.0, 1.0, 2.0)).unwrap();
        let v = evolution_field(&Forced { f0: 1.0 }, &y).unwrap();
        assert!((v.ds - 1.5).abs() < 1e-15);
        assert!((v.dq[0] - 2.0).abs() < 1e-15);
        assert!((v.dp[0] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn state_layout_round_trip() {
        let y = ExtendedPoint::from_state(&[1.5, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(y.t, 1.5);
        assert_eq!(y.base, DarbouxPoint::scalar(0.1, 0.2, 0.3));
        assert_eq!(y.to_state(), vec![1.5, 0.1, 0.2, 0.3]);
        assert!(ExtendedPoint::from_state(&[]).is_err());
    }
}
