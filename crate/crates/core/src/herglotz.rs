//! Contact Lagrangian (Herglotz) dynamics on `TQ × ℝ` in the chart `(q, q̇, s)`.

use nalgebra::DMatrix;

use crate::contact::DarbouxPoint;
use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// Reciprocal condition number of `W` below which the Lagrangian is treated
/// as singular.
pub const MIN_RCOND: f64 = 1e-12;

/// `(q, q̇, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPoint {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub s: f64,
}

impl LagrangianPoint {
    pub fn new(q: Vec<f64>, qdot: Vec<f64>, s: f64) -> Result<Self> {
        let z = Self { q, qdot, s };
        z.validate()?;
        Ok(z)
    }

    pub fn scalar(q: f64, qdot: f64, s: f64) -> Self {
        Self {
            q: vec![q],
            qdot: vec![qdot],
            s,
        }
    }

    /// Reads the flat layout `(q.., q̇.., s)`.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.len() < 3 || state.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "Lagrangian state must have odd length >= 3, got {}",
                state.len()
            )));
        }
        let n = (state.len() - 1) / 2;
        Self::new(
            state[..n].to_vec(),
            state[n..2 * n].to_vec(),
            state[2 * n],
        )
    }

    pub fn to_state(&self) -> Vec<f64> {
        let mut out = self.q.clone();
        out.extend_from_slice(&self.qdot);
        out.push(self.s);
        out
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::InvalidArgument(
                "a Lagrangian point needs at least one degree of freedom".into(),
            ));
        }
        ensure_dim(self.q.len(), self.qdot.len())?;
        ensure_finite(|| "s coordinate".into(), self.s)?;
        for v in self.q.iter().chain(&self.qdot) {
            ensure_finite(|| "Lagrangian coordinate".into(), *v)?;
        }
        Ok(())
    }
}

/// First partials `(∂L/∂s, ∂L/∂qⁱ, ∂L/∂q̇ⁱ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPartials {
    pub ds: f64,
    pub dq: Vec<f64>,
    pub dqdot: Vec<f64>,
}

/// Second partials needed by the dynamical field. Matrices are row-major
/// `n × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSecondPartials {
    /// `W[i][j] = ∂²L/∂q̇ⁱ∂q̇ʲ`.
    pub w: Vec<f64>,
    /// `[j][k] = ∂²L/∂qʲ∂q̇ᵏ`.
    pub q_qdot: Vec<f64>,
    /// `[k] = ∂²L/∂s∂q̇ᵏ`.
    pub s_qdot: Vec<f64>,
}

pub trait LagrangianModel: Send + Sync {
    fn name(&self) -> &str;
    fn dof(&self) -> usize;
    fn value(&self, z: &LagrangianPoint) -> f64;
    fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials;
    fn second_partials(&self, z: &LagrangianPoint) -> LagrangianSecondPartials;
}

impl<T: LagrangianModel + ?Sized> LagrangianModel for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dof(&self) -> usize {
        (**self).dof()
    }
    fn value(&self, z: &LagrangianPoint) -> f64 {
        (**self).value(z)
    }
    fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials {
        (**self).partials(z)
    }
    fn second_partials(&self, z: &LagrangianPoint) -> LagrangianSecondPartials {
        (**self).second_partials(z)
    }
}

/// Components `(ds, dq, dq̇)` of a tangent vector in the Lagrangian chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianTangent {
    pub dq: Vec<f64>,
    pub dqdot: Vec<f64>,
    pub ds: f64,
}

impl LagrangianTangent {
    /// Flat layout matching [`LagrangianPoint::to_state`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.dq.clone();
        out.extend_from_slice(&self.dqdot);
        out.push(self.ds);
        out
    }
}

fn first_order<L: LagrangianModel + ?Sized>(
    lagrangian: &L,
    z: &LagrangianPoint,
) -> Result<(f64, LagrangianPartials)> {
    ensure_dim(lagrangian.dof(), z.dof())?;
    ensure_dim(z.q.len(), z.qdot.len())?;
    let value = ensure_finite(|| format!("{} value", lagrangian.name()), lagrangian.value(z))?;
    let d = lagrangian.partials(z);
    ensure_dim(z.dof(), d.dq.len())?;
    ensure_dim(z.dof(), d.dqdot.len())?;
    ensure_finite(|| "∂L/∂s".into(), d.ds)?;
    for v in d.dq.iter().chain(&d.dqdot) {
        ensure_finite(|| "first partial of L".into(), *v)?;
    }
    Ok((value, d))
}

/// `E_L = q̇ⁱ ∂L/∂q̇ⁱ − L`.
pub fn energy<L: LagrangianModel + ?Sized>(lagrangian: &L, z: &LagrangianPoint) -> Result<f64> {
    let (value, d) = first_order(lagrangian, z)?;
    let pairing: f64 = z.qdot.iter().zip(&d.dqdot).map(|(v, lv)| v * lv).sum();
    Ok(pairing - value)
}

/// Inverse of the velocity Hessian together with its reciprocal 1-norm
/// condition number.
pub fn inverse_velocity_hessian(w: &[f64], n: usize) -> Result<(DMatrix<f64>, f64)> {
    ensure_dim(n * n, w.len())?;
    for v in w {
        ensure_finite(|| "velocity Hessian entry".into(), *v)?;
    }
    let m = DMatrix::from_row_slice(n, n, w);
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::SingularHessian { rcond: 0.0 })?;
    let rcond = 1.0 / (one_norm(&m) * one_norm(&inv));
    if !(rcond >= MIN_RCOND) {
        return Err(Error::SingularHessian { rcond });
    }
    Ok((inv, rcond))
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The Herglotz dynamical field:
///
/// `ds = L`, `dqⁱ = q̇ⁱ`,
/// `dq̇ⁱ = W^{ik} (∂L/∂qᵏ − ∂²L/∂qʲ∂q̇ᵏ q̇ʲ − L ∂²L/∂s∂q̇ᵏ + ∂L/∂s ∂L/∂q̇ᵏ)`.
pub fn lagrangian_field<L: LagrangianModel + ?Sized>(
    lagrangian: &L,
    z: &LagrangianPoint,
) -> Result<LagrangianTangent> {
    let n = z.dof();
    let (value, d) = first_order(lagrangian, z)?;
    let second = lagrangian.second_partials(z);
    ensure_dim(n * n, second.q_qdot.len())?;
    ensure_dim(n, second.s_qdot.len())?;
    let (w_inv, _) = inverse_velocity_hessian(&second.w, n)?;

    let rhs: Vec<f64> = (0..n)
        .map(|k| {
            let transport: f64 = (0..n).map(|j| second.q_qdot[j * n + k] * z.qdot[j]).sum();
            d.dq[k] - transport - value * second.s_qdot[k] + d.ds * d.dqdot[k]
        })
        .collect();
    let dqdot = (0..n)
        .map(|i| (0..n).map(|k| w_inv[(i, k)] * rhs[k]).sum::<f64>())
        .map(|a| ensure_finite(|| "acceleration".into(), a))
        .collect::<Result<Vec<_>>>()?;

    Ok(LagrangianTangent {
        dq: z.qdot.clone(),
        dqdot,
        ds: value,
    })
}

/// Fibre derivative `(s, q, q̇) ↦ (s, q, p = ∂L/∂q̇)`.
pub fn legendre_map<L: LagrangianModel + ?Sized>(
    lagrangian: &L,
    z: &LagrangianPoint,
) -> Result<DarbouxPoint> {
    let (_, d) = first_order(lagrangian, z)?;
    DarbouxPoint::new(z.s, z.q.clone(), d.dqdot)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// L = q̇²/2 − q²/2 − γs (unit mass and frequency).
    struct Damped {
        gamma: f64,
    }

    impl LagrangianModel for Damped {
        fn name(&self) -> &str {
            "damped"
        }
        fn dof(&self) -> usize {
            1
        }
        fn value(&self, z: &LagrangianPoint) -> f64 {
            z.qdot[0] * z.qdot[0] / 2.0 - z.q[0] * z.q[0] / 2.0 - self.gamma * z.s
        }
        fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials {
            LagrangianPartials {
                ds: -self.gamma,
                dq: vec![-z.q[0]],
                dqdot: vec![z.qdot[0]],
            }
        }
        fn second_partials(&self, _z: &LagrangianPoint) -> LagrangianSecondPartials {
            LagrangianSecondPartials {
                w: vec![1.0],
                q_qdot: vec![0.0],
                s_qdot: vec![0.0],
            }
        }
    }

    /// L = q̇₀ q̇₁ scaled by `eps` on one block; used for singularity checks.
    struct Degenerate {
        eps: f64,
    }

    impl LagrangianModel for Degenerate {
        fn name(&self) -> &str {
            "degenerate"
        }
        fn dof(&self) -> usize {
            2
        }
        fn value(&self, z: &LagrangianPoint) -> f64 {
            z.qdot[0] * z.qdot[0] / 2.0 + self.eps * z.qdot[1] * z.qdot[1] / 2.0
        }
        fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials {
            LagrangianPartials {
                ds: 0.0,
                dq: vec![0.0, 0.0],
                dqdot: vec![z.qdot[0], self.eps * z.qdot[1]],
            }
        }
        fn second_partials(&self, _z: &LagrangianPoint) -> LagrangianSecondPartials {
            LagrangianSecondPartials {
                w: vec![1.0, 0.0, 0.0, self.eps],
                q_qdot: vec![0.0; 4],
                s_qdot: vec![0.0; 2],
            }
        }
    }

    #[test]
    fn free_particle_energy_is_kinetic() {
        let l = Damped { gamma: 0.0 };
        let z = LagrangianPoint::scalar(0.0, 3.0, 0.0);
        assert_eq!(energy(&l, &z).unwrap(), 4.5);
    }

    #[test]
    fn harmonic_limit_field() {
        let l = Damped { gamma: 0.0 };
        let v = lagrangian_field(&l, &LagrangianPoint::scalar(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(v.ds, -0.5);
        assert_eq!(v.dq, vec![0.0]);
        assert_eq!(v.dqdot, vec![-1.0]);
    }

    #[test]
    fn damped_field_matches_closed_form() {
        let l = Damped { gamma: 0.1 };
        let v = lagrangian_field(&l, &LagrangianPoint::scalar(1.0, 2.0, 0.0)).unwrap();
        assert!((v.ds - 1.5).abs() < 1e-15);
        assert_eq!(v.dq, vec![2.0]);
        assert!((v.dqdot[0] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn singular_hessian_is_fatal() {
        let z = LagrangianPoint::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0).unwrap();
        assert!(lagrangian_field(&Degenerate { eps: 1e-3 }, &z).is_ok());
        let err = lagrangian_field(&Degenerate { eps: 1e-14 }, &z).unwrap_err();
        match err {
            Error::SingularHessian { rcond } => assert!(rcond < MIN_RCOND),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            lagrangian_field(&Degenerate { eps: 0.0 }, &z),
            Err(Error::SingularHessian { .. })
        ));
    }

    #[test]
    fn legendre_of_damped() {
        let l = Damped { gamma: 0.1 };
        let x = legendre_map(&l, &LagrangianPoint::scalar(1.0, 2.0, 0.0)).unwrap();
        assert_eq!(x, DarbouxPoint::scalar(0.0, 1.0, 2.0));
    }

    #[test]
    fn layout_round_trip() {
        let z = LagrangianPoint::from_state(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(z.q, vec![1.0, 2.0]);
        assert_eq!(z.qdot, vec![3.0, 4.0]);
        assert_eq!(z.s, 5.0);
        assert_eq!(z.to_state(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }
}
