use super::oscillators::positive;
use crate::contact::{DarbouxPoint, Partials, PhaseFunction};
use crate::error::Result;
use crate::herglotz::{
    LagrangianModel, LagrangianPartials, LagrangianPoint, LagrangianSecondPartials,
};

/// Fall with quadratic drag:
/// `h = (p − 2λs)²/2m + (mg/2λ)(e^{2λq} − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parachute {
    pub m: f64,
    pub g: f64,
    pub lambda: f64,
}

impl Parachute {
    pub fn new(m: f64, g: f64, lambda: f64) -> Result<Self> {
        positive("m", m)?;
        positive("g", g)?;
        positive("lambda", lambda)?;
        Ok(Self { m, g, lambda })
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("m".into(), self.m),
            ("g".into(), self.g),
            ("lambda".into(), self.lambda),
        ]
    }

    /// `V(q) = (mg/2λ)(e^{2λq} − 1)`.
    pub fn potential(&self, q: f64) -> f64 {
        self.m * self.g / (2.0 * self.lambda) * (2.0 * self.lambda * q).exp_m1()
    }

    pub fn force_gradient(&self, q: f64) -> f64 {
        self.m * self.g * (2.0 * self.lambda * q).exp()
    }

    /// `−√(g/λ)`.
    pub fn terminal_velocity(&self) -> f64 {
        -(self.g / self.lambda).sqrt()
    }

    /// Velocity `q̇ = (p − 2λs)/m` in the Hamiltonian chart.
    pub fn velocity(&self, x: &DarbouxPoint) -> f64 {
        (x.p[0] - 2.0 * self.lambda * x.s) / self.m
    }

    /// `L = mq̇²/2 − V(q) + 2λq̇s`.
    pub fn lagrangian(&self) -> ParachuteLagrangian {
        ParachuteLagrangian(*self)
    }
}

impl PhaseFunction for Parachute {
    fn name(&self) -> &str {
        "parachute"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        let u = x.p[0] - 2.0 * self.lambda * x.s;
        u * u / (2.0 * self.m) + self.potential(x.q[0])
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        let v = self.velocity(x);
        Partials {
            ds: -2.0 * self.lambda * v,
            dq: vec![self.force_gradient(x.q[0])],
            dp: vec![v],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParachuteLagrangian(pub Parachute);

impl LagrangianModel for ParachuteLagrangian {
    fn name(&self) -> &str {
        "parachute"
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, z: &LagrangianPoint) -> f64 {
        let c = &self.0;
        let v = z.qdot[0];
        c.m * v * v / 2.0 - c.potential(z.q[0]) + 2.0 * c.lambda * v * z.s
    }
    fn partials(&self, z: &LagrangianPoint) -> LagrangianPartials {
        let c = &self.0;
        let v = z.qdot[0];
        LagrangianPartials {
            ds: 2.0 * c.lambda * v,
            dq: vec![-c.force_gradient(z.q[0])],
            dqdot: vec![c.m * v + 2.0 * c.lambda * z.s],
        }
    }
    fn second_partials(&self, _z: &LagrangianPoint) -> LagrangianSecondPartials {
        LagrangianSecondPartials {
            w: vec![self.0.m],
            q_qdot: vec![0.0],
            s_qdot: vec![2.0 * self.0.lambda],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{contact_vector_field, reeb_derivative};
    use crate::herglotz::{energy, lagrangian_field, legendre_map};
    use crate::oracle::{check_lagrangian_partials, check_partials, DEFAULT_STEP};

    fn chute() -> Parachute {
        Parachute::new(1.0, 10.0, 0.5).unwrap()
    }

    #[test]
    fn reeb_derivative_example() {
        let x = DarbouxPoint::scalar(0.0, 1.0, 1.0);
        assert!((reeb_derivative(&chute(), &x).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn second_order_reduction_pointwise() {
        let c = chute();
        for &(s, q, p) in &[(0.0, 0.0, 0.0), (0.3, -2.0, 1.0), (-1.0, 0.5, -3.0)] {
            let x = DarbouxPoint::scalar(s, q, p);
            let v = contact_vector_field(&c, &x).unwrap();
            let qddot = (v.dp[0] - 2.0 * c.lambda * v.ds) / c.m;
            let qdot = c.velocity(&x);
            let expected = c.lambda * qdot * qdot - c.g;
            assert!((qddot - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn herglotz_acceleration_is_drag_law() {
        let l = chute().lagrangian();
        let z = LagrangianPoint::scalar(-1.5, -2.0, 0.7);
        let v = lagrangian_field(&l, &z).unwrap();
        assert!((v.dqdot[0] - (0.5 * 4.0 - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn charts_agree_on_energy() {
        let c = chute();
        let l = c.lagrangian();
        for &(q, v, s) in &[(0.0, 1.0, 3.0), (-2.0, -4.0, 0.5), (0.4, 0.3, -1.0)] {
            let z = LagrangianPoint::scalar(q, v, s);
            let e = energy(&l, &z).unwrap();
            let x = legendre_map(&l, &z).unwrap();
            assert!((c.value(&x) - e).abs() <= 1e-12 * e.abs().max(1.0));
            assert!((c.velocity(&x) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn partials_agree_with_differences() {
        let c = Parachute::new(1.3, 9.8, 0.4).unwrap();
        let x = DarbouxPoint::scalar(0.2, -0.8, 0.6);
        assert!(check_partials(&c, &x, DEFAULT_STEP).unwrap().passed());
        let z = LagrangianPoint::scalar(-0.8, 0.6, 0.2);
        assert!(check_lagrangian_partials(&c.lagrangian(), &z, DEFAULT_STEP).unwrap().passed());
    }
}
