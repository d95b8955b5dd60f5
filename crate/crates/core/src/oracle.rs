//! Central-difference oracle guarding analytic partials.
//!
//! Step for coordinate `i` is `step · max(1, |xᵢ|)`. A partial passes when its
//! relative error is at most [`REL_TOL`] or its absolute error at most
//! [`ABS_TOL`].

use crate::contact::{contact_vector_field, DarbouxPoint, PhaseFunction};
use crate::error::Result;
use crate::extended::{ExtendedPoint, TimeDependentHamiltonian};
use crate::herglotz::{LagrangianModel, LagrangianPoint};
use crate::integrate::VectorField;
use crate::virial::StateFunction;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-6;
pub const ABS_TOL: f64 = 1e-9;

/// Outcome for one declared partial.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCheck {
    pub label: String,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub passed: bool,
}

impl PartialCheck {
    fn new(label: String, analytic: f64, numeric: f64) -> Self {
        let abs_err = (analytic - numeric).abs();
        let rel_err = if numeric != 0.0 {
            abs_err / numeric.abs()
        } else if abs_err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let passed = abs_err <= ABS_TOL || rel_err <= REL_TOL;
        Self {
            label,
            analytic,
            numeric,
            abs_err,
            rel_err,
            passed,
        }
    }
}

/// Per-model consistency report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialsReport {
    pub model: String,
    pub checks: Vec<PartialCheck>,
    /// Coordinates whose perturbed evaluations were non-finite.
    pub failures: Vec<String>,
}

impl PartialsReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Largest relative error over checks that failed the absolute fallback;
    /// zero when every check is within [`ABS_TOL`].
    pub fn max_rel_error(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.abs_err > ABS_TOL)
            .map(|c| c.rel_err)
            .fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &PartialCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, label: String, analytic: f64, numeric: Option<f64>) {
        match numeric {
            Some(n) => self.checks.push(PartialCheck::new(label, analytic, n)),
            None => self.failures.push(label),
        }
    }

    pub fn merge(&mut self, other: PartialsReport) {
        self.checks.extend(other.checks);
        self.failures.extend(other.failures);
    }
}

/// `(f(x + hᵢeᵢ) − f(x − hᵢeᵢ)) / 2hᵢ`, or `None` if either side is non-finite.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, step: f64) -> Option<f64> {
    let h = step * x[i].abs().max(1.0);
    let mut probe = x.to_vec();
    probe[i] = x[i] + h;
    let plus = f(&probe);
    probe[i] = x[i] - h;
    let minus = f(&probe);
    let d = (plus - minus) / (2.0 * h);
    d.is_finite().then_some(d)
}

fn contact_labels(n: usize) -> Vec<String> {
    let mut labels = vec!["s".to_string()];
    labels.extend((0..n).map(|i| format!("q[{i}]")));
    labels.extend((0..n).map(|i| format!("p[{i}]")));
    labels
}

/// Compares every declared partial of `model` against central differences.
pub fn check_partials<F: PhaseFunction + ?Sized>(
    model: &F,
    x: &DarbouxPoint,
    step: f64,
) -> Result<PartialsReport> {
    crate::error::ensure_dim(model.dof(), x.dof())?;
    x.validate()?;
    let n = x.dof();
    let d = model.partials(x);
    let analytic = {
        let mut v = vec![d.ds];
        v.extend(&d.dq);
        v.extend(&d.dp);
        v
    };
    let state = x.to_state();
    let eval = |y: &[f64]| {
        let point = DarbouxPoint {
            s: y[0],
            q: y[1..=n].to_vec(),
            p: y[n + 1..].to_vec(),
        };
        match model.check_domain(&point) {
            Ok(()) => model.value(&point),
            Err(_) => f64::NAN,
        }
    };
    let mut report = PartialsReport {
        model: model.name().to_string(),
        ..Default::default()
    };
    for (i, label) in contact_labels(n).into_iter().enumerate() {
        report.push(
            format!("∂/∂{label}"),
            analytic[i],
            central_difference(eval, &state, i, step),
        );
    }
    Ok(report)
}

/// Same check for a time-dependent Hamiltonian, including `∂h/∂t`.
pub fn check_time_partials<H: TimeDependentHamiltonian + ?Sized>(
    model: &H,
    y: &ExtendedPoint,
    step: f64,
) -> Result<PartialsReport> {
    crate::error::ensure_dim(model.dof(), y.base.dof())?;
    let d = model.partials(y);
    let mut analytic = vec![d.dt, d.base.ds];
    analytic.extend(&d.base.dq);
    analytic.extend(&d.base.dp);
    let state = y.to_state();
    let eval = |v: &[f64]| match ExtendedPoint::from_state(v) {
        Ok(p) => model.value(&p),
        Err(_) => f64::NAN,
    };
    let mut labels = vec!["t".to_string()];
    labels.extend(contact_labels(y.base.dof()));
    let mut report = PartialsReport {
        model: model.name().to_string(),
        ..Default::default()
    };
    for (i, label) in labels.into_iter().enumerate() {
        report.push(
            format!("∂/∂{label}"),
            analytic[i],
            central_difference(eval, &state, i, step),
        );
    }
    Ok(report)
}

/// Checks first partials of `L` against differences of `L`, and the second
/// partials `W`, `∂²L/∂q∂q̇`, `∂²L/∂s∂q̇` against differences of `∂L/∂q̇`.
pub fn check_lagrangian_partials<L: LagrangianModel + ?Sized>(
    model: &L,
    z: &LagrangianPoint,
    step: f64,
) -> Result<PartialsReport> {
    crate::error::ensure_dim(model.dof(), z.dof())?;
    z.validate()?;
    let n = z.dof();
    let state = z.to_state();
    let unpack = |v: &[f64]| LagrangianPoint {
        q: v[..n].to_vec(),
        qdot: v[n..2 * n].to_vec(),
        s: v[2 * n],
    };
    let d = model.partials(z);
    let second = model.second_partials(z);
    let mut report = PartialsReport {
        model: model.name().to_string(),
        ..Default::default()
    };

    let value = |v: &[f64]| model.value(&unpack(v));
    for i in 0..n {
        report.push(format!("∂L/∂q[{i}]"), d.dq[i], central_difference(value, &state, i, step));
        report.push(
            format!("∂L/∂qdot[{i}]"),
            d.dqdot[i],
            central_difference(value, &state, n + i, step),
        );
    }
    report.push("∂L/∂s".into(), d.ds, central_difference(value, &state, 2 * n, step));

    for k in 0..n {
        let momentum = |v: &[f64]| model.partials(&unpack(v)).dqdot[k];
        for j in 0..n {
            report.push(
                format!("∂²L/∂qdot[{j}]∂qdot[{k}]"),
                second.w[j * n + k],
                central_difference(momentum, &state, n + j, step),
            );
            report.push(
                format!("∂²L/∂q[{j}]∂qdot[{k}]"),
                second.q_qdot[j * n + k],
                central_difference(momentum, &state, j, step),
            );
        }
        report.push(
            format!("∂²L/∂s∂qdot[{k}]"),
            second.s_qdot[k],
            central_difference(momentum, &state, 2 * n, step),
        );
    }
    Ok(report)
}

/// Checks the gradient of a flat-state function.
pub fn check_state_gradient(
    f: &(impl StateFunction + ?Sized),
    x: &[f64],
    step: f64,
) -> Result<PartialsReport> {
    crate::error::ensure_dim(f.dim(), x.len())?;
    let g = f.gradient(x);
    crate::error::ensure_dim(x.len(), g.len())?;
    let mut report = PartialsReport {
        model: f.name().to_string(),
        ..Default::default()
    };
    for (i, analytic) in g.into_iter().enumerate() {
        report.push(
            format!("∂/∂x[{i}]"),
            analytic,
            central_difference(|v| f.value(v), x, i, step),
        );
    }
    Ok(report)
}

/// Central-difference Jacobian `J[i][j] = ∂fᵢ/∂xⱼ` of a vector field.
pub fn numerical_jacobian(field: &dyn VectorField, x: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    let dim = field.dim();
    crate::error::ensure_dim(dim, x.len())?;
    let mut jac = vec![vec![0.0; dim]; dim];
    let mut probe = x.to_vec();
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for j in 0..dim {
        let h = step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        field.eval(&probe, &mut plus)?;
        probe[j] = x[j] - h;
        field.eval(&probe, &mut minus)?;
        probe[j] = x[j];
        for i in 0..dim {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Trace of the central-difference Jacobian of `X_h`.
pub fn numerical_divergence<H: PhaseFunction + ?Sized>(
    h: &H,
    x: &DarbouxPoint,
    step: f64,
) -> Result<f64> {
    let state = x.to_state();
    let mut trace = 0.0;
    for i in 0..state.len() {
        let hi = step * state[i].abs().max(1.0);
        let mut probe = state.clone();
        probe[i] = state[i] + hi;
        let plus = contact_vector_field(h, &DarbouxPoint::from_state(&probe)?)?.to_vec();
        probe[i] = state[i] - hi;
        let minus = contact_vector_field(h, &DarbouxPoint::from_state(&probe)?)?.to_vec();
        trace += (plus[i] - minus[i]) / (2.0 * hi);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{FnPhaseFunction, Partials};

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
    fn central_difference_of_cubic() {
        let d = central_difference(|v| v[0].powi(3), &[2.0], 0, 1e-5).unwrap();
        assert!((d - 12.0).abs() < 1e-8);
        assert!(central_difference(|v| (v[0] - 1.0).ln(), &[1.0], 0, 1e-5).is_none());
    }

    #[test]
    fn consistent_model_passes() {
        let report = check_partials(&damped(), &DarbouxPoint::scalar(0.0, 1.0, 2.0), 1e-5).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checks.len(), 3);
    }

    #[test]
    fn corrupted_partial_is_flagged() {
        let inner = damped();
        let corrupted = FnPhaseFunction::new(
            "corrupted",
            1,
            move |x| inner.value(x),
            |x| Partials {
                ds: 0.1,
                dq: vec![x.q[0] + 1.0],
                dp: vec![x.p[0]],
            },
        );
        let report =
            check_partials(&corrupted, &DarbouxPoint::scalar(0.0, 1.0, 2.0), 1e-5).unwrap();
        assert!(!report.passed());
        let flagged: Vec<_> = report.flagged().collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].label, "∂/∂q[0]");
        assert!((flagged[0].rel_err - 1.0).abs() < 1e-6);
    }

    #[test]
    fn failed_perturbation_is_reported_not_fatal() {
        let log = FnPhaseFunction::new(
            "log",
            1,
            |x| x.p[0].ln(),
            |x| Partials {
                ds: 0.0,
                dq: vec![0.0],
                dp: vec![1.0 / x.p[0]],
            },
        );
        let report = check_partials(&log, &DarbouxPoint::scalar(0.0, 0.0, 1e-7), 1e-5).unwrap();
        assert_eq!(report.failures, vec!["∂/∂p[0]".to_string()]);
        assert!(!report.passed());
    }
}
