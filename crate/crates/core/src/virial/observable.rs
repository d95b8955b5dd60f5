use std::sync::Arc;

use crate::contact::{poisson_bracket, reeb_derivative, DarbouxPoint, Partials, PhaseFunction};
use crate::error::{ensure_dim, Error, Result};
use crate::integrate::VectorField;

/// A function on flat states of some chart, with its analytic gradient.
///
/// Virial terms and `G` are expressed this way so that the same harness
/// serves the contact, extended, Herglotz and planar charts.
pub trait StateFunction: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<T: StateFunction + ?Sized> StateFunction for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

type StateValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type StateGradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A state function assembled from closures.
pub struct FnStateFunction {
    name: String,
    dim: usize,
    value: Box<StateValueFn>,
    gradient: Box<StateGradientFn>,
}

impl FnStateFunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }
}

impl StateFunction for FnStateFunction {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// A phase function read off states whose contact block `(s, q.., p..)`
/// starts at index `lead`; `lead = 1` serves the extended chart.
pub struct PhaseObservable<F> {
    pub inner: F,
    pub lead: usize,
}

impl<F: PhaseFunction> PhaseObservable<F> {
    pub fn new(inner: F, lead: usize) -> Self {
        Self { inner, lead }
    }

    fn point(&self, x: &[f64]) -> DarbouxPoint {
        let n = self.inner.dof();
        let c = &x[self.lead..];
        DarbouxPoint {
            s: c[0],
            q: c[1..=n].to_vec(),
            p: c[n + 1..=2 * n].to_vec(),
        }
    }
}

impl<F: PhaseFunction> StateFunction for PhaseObservable<F> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.lead + 1 + 2 * self.inner.dof()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.point(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let Partials { ds, dq, dp } = self.inner.partials(&self.point(x));
        let mut g = vec![0.0; self.lead];
        g.push(ds);
        g.extend(dq);
        g.extend(dp);
        g
    }
}

/// `G = Σ qⁱpᵢ` on the contact chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVirial {
    pub n: usize,
}

impl PhaseFunction for PhaseVirial {
    fn name(&self) -> &str {
        "G"
    }
    fn dof(&self) -> usize {
        self.n
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        x.q.iter().zip(&x.p).map(|(q, p)| q * p).sum()
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        Partials {
            ds: 0.0,
            dq: x.p.clone(),
            dp: x.q.clone(),
        }
    }
}

/// `G = Σ mᵢ q̇ⁱ qⁱ` on the Herglotz chart `(q.., q̇.., s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityVirial {
    pub masses: Vec<f64>,
}

impl StateFunction for VelocityVirial {
    fn name(&self) -> &str {
        "G"
    }
    fn dim(&self) -> usize {
        2 * self.masses.len() + 1
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.masses.len();
        (0..n).map(|i| self.masses[i] * x[i] * x[n + i]).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.masses.len();
        let mut g = vec![0.0; 2 * n + 1];
        for i in 0..n {
            g[i] = self.masses[i] * x[n + i];
            g[n + i] = self.masses[i] * x[i];
        }
        g
    }
}

/// The virial observable of either chart.
#[derive(Debug, Clone, PartialEq)]
pub enum VirialObservable {
    Phase(PhaseVirial),
    Velocity(VelocityVirial),
}

impl StateFunction for VirialObservable {
    fn name(&self) -> &str {
        "G"
    }
    fn dim(&self) -> usize {
        match self {
            Self::Phase(g) => 1 + 2 * g.n,
            Self::Velocity(g) => g.dim(),
        }
    }
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Phase(g) => PhaseObservable::new(*g, 0).value(x),
            Self::Velocity(g) => g.value(x),
        }
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Phase(g) => PhaseObservable::new(*g, 0).gradient(x),
            Self::Velocity(g) => g.gradient(x),
        }
    }
}

/// `G = Σ qⁱpᵢ` without masses, `G = Σ mᵢq̇ⁱqⁱ` on the Herglotz chart when
/// masses are given.
pub fn virial_observable(n: usize, masses: Option<&[f64]>) -> Result<VirialObservable> {
    if n == 0 {
        return Err(Error::InvalidArgument("virial observable needs n >= 1".into()));
    }
    match masses {
        None => Ok(VirialObservable::Phase(PhaseVirial { n })),
        Some(m) => {
            ensure_dim(n, m.len())?;
            if let Some(bad) = m.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter {
                    name: "m".into(),
                    value: *bad,
                    reason: "must be > 0".into(),
                });
            }
            Ok(VirialObservable::Velocity(VelocityVirial { masses: m.to_vec() }))
        }
    }
}

/// Decomposition of `X_h(G)` into its Poisson and Reeb parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialRate {
    /// `{G, h}` (Poisson).
    pub pb: f64,
    /// `G ξ(h)`.
    pub reeb_term: f64,
    /// `pb − reeb_term`.
    pub total: f64,
}

pub fn virial_rate<H: PhaseFunction + ?Sized>(h: &H, x: &DarbouxPoint) -> Result<VirialRate> {
    let g = PhaseVirial { n: x.dof() };
    let pb = poisson_bracket(&g, h, x)?;
    let reeb_term = g.value(x) * reeb_derivative(h, x)?;
    Ok(VirialRate {
        pb,
        reeb_term,
        total: pb - reeb_term,
    })
}

/// `∇f · F(x)`: rate of `f` along the flow of `field`.
pub fn rate_along(field: &dyn VectorField, f: &dyn StateFunction, x: &[f64]) -> Result<f64> {
    ensure_dim(field.dim(), x.len())?;
    ensure_dim(field.dim(), f.dim())?;
    let mut dx = vec![0.0; x.len()];
    field.eval(x, &mut dx)?;
    Ok(f.gradient(x).iter().zip(&dx).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{apply_field_to_observable, FnPhaseFunction};
    use crate::integrate::ContactFlow;

    fn damped() -> FnPhaseFunction {
        FnPhaseFunction::new(
            "damped",
            1,
            |x| x.p[0] * x.p[0] / 2.0 + x.q[0] * x.q[0] / 2.0 + 0.1 * x.s,
            |x| Partials {
                ds: 0.1,
                dq: vec![x.q[0]],
                dp: vec![x.p[0]],
            },
        )
    }

    #[test]
    fn observable_examples() {
        let g = virial_observable(1, None).unwrap();
        assert_eq!(g.value(&[0.0, 1.0, 2.0]), 2.0);
        let gv = virial_observable(1, Some(&[1.0])).unwrap();
        assert_eq!(gv.value(&[1.0, 2.0, 0.0]), 2.0);
        assert_eq!(gv.value(&[0.0, 1.0, 3.0]), 0.0);
        assert!(virial_observable(0, None).is_err());
        assert!(virial_observable(2, Some(&[1.0])).is_err());
        assert!(virial_observable(1, Some(&[-1.0])).is_err());
    }

    #[test]
    fn damped_rate_decomposition() {
        let x = DarbouxPoint::scalar(0.0, 1.0, 2.0);
        let r = virial_rate(&damped(), &x).unwrap();
        assert!((r.pb - 3.0).abs() < 1e-15);
        assert!((r.reeb_term - 0.2).abs() < 1e-15);
        assert!((r.total - 2.8).abs() < 1e-15);
        let via_field = apply_field_to_observable(&damped(), &PhaseVirial { n: 1 }, &x).unwrap();
        assert!((via_field - r.total).abs() < 1e-15);
        let h = damped();
        let flow = ContactFlow::new(&h);
        let g = virial_observable(1, None).unwrap();
        assert!((rate_along(&flow, &g, &x.to_state()).unwrap() - 2.8).abs() < 1e-15);
    }

    #[test]
    fn phase_observable_shifts_layout() {
        let obs = PhaseObservable::new(PhaseVirial { n: 1 }, 1);
        assert_eq!(obs.dim(), 4);
        assert_eq!(obs.value(&[7.0, 0.0, 3.0, 2.0]), 6.0);
        assert_eq!(obs.gradient(&[7.0, 0.0, 3.0, 2.0]), vec![0.0, 0.0, 2.0, 3.0]);
    }
}
