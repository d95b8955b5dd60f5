//! Gierer–Meinhardt activator–inhibitor kinetics as a conformal Hamiltonian
//! system in the plane, and as the projection of a contact flow with
//! `η = dz − y dx` (so `z ↔ s`, `x ↔ q`, `y ↔ p`).

use super::oscillators::require;
use crate::contact::{contact_vector_field, DarbouxPoint, Partials, PhaseFunction};
use crate::error::{ensure_dim, Error, Result};
use crate::integrate::VectorField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiererMeinhardt {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub k: f64,
}

impl GiererMeinhardt {
    pub fn new(a: f64, b: f64, c: f64, d: f64, k: f64) -> Result<Self> {
        require("A", a, a != 0.0, "must be non-zero")?;
        require("B", b, true, "must be finite")?;
        require("C", c, true, "must be finite")?;
        require("D", d, true, "must be finite")?;
        require("K", k, true, "must be finite")?;
        Ok(Self { a, b, c, d, k })
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("A".into(), self.a),
            ("B".into(), self.b),
            ("C".into(), self.c),
            ("D".into(), self.d),
            ("K".into(), self.k),
        ]
    }

    /// Conformal factor `a = −(C + K)`.
    pub fn conformal_factor(&self) -> f64 {
        -(self.c + self.k)
    }

    pub fn check_inhibitor(&self, y: f64) -> Result<()> {
        if y.is_finite() && self.b + y > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("B + y must be positive, got y = {y} with B = {}", self.b)))
        }
    }

    /// Planar Hamiltonian `H = A ln(B+y) − Dx²/2 − Cxy`.
    pub fn planar_hamiltonian(&self, x: f64, y: f64) -> f64 {
        self.a * (self.b + y).ln() - self.d * x * x / 2.0 - self.c * x * y
    }

    /// `ẋ = ∂H/∂y`, `ẏ = −∂H/∂x + a y`.
    pub fn planar_field(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        self.check_inhibitor(y)?;
        let h_x = -self.d * x - self.c * y;
        let h_y = self.a / (self.b + y) - self.c * x;
        Ok([h_y, -h_x + self.conformal_factor() * y])
    }

    /// Closed-form `ż = A[y/(B+y) − ln(B+y)] + Dx²/2 − (C+K)z`.
    pub fn z_rate(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.check_inhibitor(y)?;
        let w = self.b + y;
        Ok(self.a * (y / w - w.ln()) + self.d * x * x / 2.0 - (self.c + self.k) * z)
    }

    /// Fixed point of the planar field: `ẏ = 0` gives `y = Dx/K`, then
    /// Newton on `ẋ = 0` from `x = 0.5`.
    pub fn fixed_point(&self) -> Result<(f64, f64)> {
        if self.k == 0.0 {
            return Err(Error::InvalidArgument("no isolated fixed point for K = 0".into()));
        }
        let r = self.d / self.k;
        let f = |x: f64| self.a / (self.b + r * x) - self.c * x;
        let df = |x: f64| -self.a * r / (self.b + r * x).powi(2) - self.c;
        let mut x = 0.5;
        for _ in 0..100 {
            let step = f(x) / df(x);
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let y = r * x;
        self.check_inhibitor(y)?;
        if !(f(x).abs() < 1e-12) {
            return Err(Error::InvalidArgument("fixed point iteration did not converge".into()));
        }
        Ok((x, y))
    }
}

/// Contact Hamiltonian `h = A ln(B+y) − Dx²/2 + C(z − xy) + Kz`.
impl PhaseFunction for GiererMeinhardt {
    fn name(&self) -> &str {
        "gierer_meinhardt"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, p: &DarbouxPoint) -> f64 {
        let (z, x, y) = (p.s, p.q[0], p.p[0]);
        self.a * (self.b + y).ln() - self.d * x * x / 2.0 + self.c * (z - x * y) + self.k * z
    }
    fn partials(&self, p: &DarbouxPoint) -> Partials {
        let (x, y) = (p.q[0], p.p[0]);
        Partials {
            ds: self.c + self.k,
            dq: vec![-self.d * x - self.c * y],
            dp: vec![self.a / (self.b + y) - self.c * x],
        }
    }
    fn check_domain(&self, p: &DarbouxPoint) -> Result<()> {
        self.check_inhibitor(p.p[0])
    }
}

/// The planar conformal field on states `(x, y)`.
pub struct PlanarConformalFlow<'a> {
    pub model: &'a GiererMeinhardt,
}

impl VectorField for PlanarConformalFlow<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn layout(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        ensure_dim(2, x.len())?;
        dx.copy_from_slice(&self.model.planar_field(x[0], x[1])?);
        Ok(())
    }
}

/// Planar field, `(ẋ, ẏ)` of the contact field, their largest difference
/// and the contact `ż`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCheck {
    pub planar: [f64; 2],
    pub projected: [f64; 2],
    pub max_abs_diff: f64,
    pub z_rate: f64,
}

pub fn conformal_projection_check(
    model: &GiererMeinhardt,
    x: f64,
    y: f64,
    z: f64,
) -> Result<ProjectionCheck> {
    let planar = model.planar_field(x, y)?;
    let v = contact_vector_field(model, &DarbouxPoint::scalar(z, x, y))?;
    let projected = [v.dq[0], v.dp[0]];
    let max_abs_diff = (planar[0] - projected[0])
        .abs()
        .max((planar[1] - projected[1]).abs());
    Ok(ProjectionCheck {
        planar,
        projected,
        max_abs_diff,
        z_rate: v.ds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_partials, numerical_jacobian, DEFAULT_STEP};

    fn unit() -> GiererMeinhardt {
        GiererMeinhardt::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn projection_at_sample_point() {
        let r = conformal_projection_check(&unit(), 0.5, 0.5, 0.0).unwrap();
        assert!((r.planar[0] - (1.0 / 1.5 - 0.5)).abs() < 1e-15);
        assert!(r.planar[1].abs() < 1e-15);
        assert!(r.max_abs_diff < 1e-12);
    }

    #[test]
    fn fixed_point_is_golden() {
        let gm = unit();
        let (x, y) = gm.fixed_point().unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((x - golden).abs() < 1e-14 && (y - golden).abs() < 1e-14);
        let f = gm.planar_field(0.618034, 0.618034).unwrap();
        assert!(f[0].abs() < 1e-6 && f[1].abs() < 1e-6);
        for z in [-2.0, 0.0, 3.0] {
            let r = conformal_projection_check(&gm, x, y, z).unwrap();
            assert!(r.planar.iter().all(|v| v.abs() < 1e-14));
            assert!((r.z_rate - gm.z_rate(x, y, z).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn conservative_limit_is_divergence_free() {
        let gm = GiererMeinhardt::new(1.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        let flow = PlanarConformalFlow { model: &gm };
        let j = numerical_jacobian(&flow, &[0.3, 0.7], DEFAULT_STEP).unwrap();
        assert!((j[0][0] + j[1][1]).abs() < 1e-9);
    }

    #[test]
    fn domain_is_enforced() {
        let gm = unit();
        assert!(matches!(gm.planar_field(0.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(
            conformal_projection_check(&gm, 0.0, -2.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(GiererMeinhardt::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn partials_agree_with_differences() {
        let gm = GiererMeinhardt::new(1.2, 0.8, 0.3, 0.7, 0.4).unwrap();
        let p = DarbouxPoint::scalar(0.4, 0.2, 0.9);
        assert!(check_partials(&gm, &p, DEFAULT_STEP).unwrap().passed());
    }
}
