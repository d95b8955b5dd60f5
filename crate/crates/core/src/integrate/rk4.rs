use super::{AbortReason, RunMetadata, Trajectory, VectorField};
use crate::error::{ensure_dim, Error, Result};

/// Below this fraction of the horizon a leftover step is absorbed into the
/// previous one instead of taken separately.
const LANDING_SLACK: f64 = 1e-12;

fn rk4_step(
    field: &dyn VectorField,
    x: &[f64],
    h: f64,
    k: &mut [Vec<f64>; 4],
    tmp: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let n = x.len();
    field.eval(x, &mut k[0])?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k[0][i];
    }
    field.eval(tmp, &mut k[1])?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k[1][i];
    }
    field.eval(tmp, &mut k[2])?;
    for i in 0..n {
        tmp[i] = x[i] + h * k[2][i];
    }
    field.eval(tmp, &mut k[3])?;
    for i in 0..n {
        out[i] = x[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta from elapsed time 0 to `horizon`.
///
/// Records the initial state, every `sample_every`-th step and the final
/// state. The last step is shortened to land exactly on `horizon`. A
/// non-finite state or a field evaluation failure truncates the trajectory
/// and records the reason in [`Trajectory::abort`].
pub fn integrate_fixed(
    field: &dyn VectorField,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    sample_every: usize,
    meta: RunMetadata,
) -> Result<Trajectory> {
    ensure_dim(field.dim(), x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt <= horizon) {
        return Err(Error::InvalidArgument(format!(
            "step must satisfy 0 < dt <= horizon, got dt={dt}"
        )));
    }
    if sample_every == 0 {
        return Err(Error::InvalidArgument("sample_every must be >= 1".into()));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("initial state component {i}"),
            value: x0[i],
        });
    }

    let meta = RunMetadata {
        integrator: "rk4".into(),
        step: Some(dt),
        ..meta
    };
    let mut traj = Trajectory::new(field.layout(), meta);
    traj.push(0.0, x0);

    let n = x0.len();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut t = 0.0;
    let mut step_index: u64 = 0;

    loop {
        let mut t_next = (step_index + 1) as f64 * dt;
        let last = t_next >= horizon * (1.0 - LANDING_SLACK);
        if last {
            t_next = horizon;
        }
        let h = t_next - t;
        if let Err(e) = rk4_step(field, &x, h, &mut k, &mut tmp, &mut next) {
            traj.abort = Some(AbortReason::FieldError {
                time: t,
                message: e.to_string(),
            });
            break;
        }
        if let Some(component) = next.iter().position(|v| !v.is_finite()) {
            traj.abort = Some(AbortReason::NonFinite { time: t_next, component });
            break;
        }
        std::mem::swap(&mut x, &mut next);
        t = t_next;
        step_index += 1;
        if last {
            traj.push(t, &x);
            break;
        }
        if step_index % sample_every as u64 == 0 {
            traj.push(t, &x);
        }
    }
    if traj.abort.is_some() && traj.final_time() != Some(t) {
        traj.push(t, &x);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::FnField;
    use std::f64::consts::TAU;

    fn oscillator() -> FnField<impl Fn(&[f64], &mut [f64]) -> Result<()> + Sync> {
        FnField::new(vec!["q".into(), "p".into()], |x: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = -x[0];
            Ok(())
        })
    }

    #[test]
    fn lands_exactly_on_horizon() {
        let traj = integrate_fixed(&oscillator(), &[1.0, 0.0], TAU, 1e-3, 10, RunMetadata::default())
            .unwrap();
        assert_eq!(traj.final_time(), Some(TAU));
        assert!((traj.final_state().unwrap()[0] - 1.0).abs() < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.meta.integrator, "rk4");
    }

    #[test]
    fn sampling_interval() {
        let traj =
            integrate_fixed(&oscillator(), &[1.0, 0.0], 1.0, 0.01, 10, RunMetadata::default()).unwrap();
        assert_eq!(traj.len(), 11);
        assert!((traj.times[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn blow_up_truncates_with_reason() {
        let field = FnField::new(vec!["x".into()], |x: &[f64], dx: &mut [f64]| {
            dx[0] = x[0] * x[0];
            Ok(())
        });
        let traj = integrate_fixed(&field, &[1.0], 2.0, 1e-3, 1, RunMetadata::default()).unwrap();
        let reason = traj.abort.clone().expect("must abort");
        assert!(matches!(reason, AbortReason::NonFinite { .. } | AbortReason::FieldError { .. }));
        assert!(traj.final_time().unwrap() < 1.01);
        assert!(traj.states.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = oscillator();
        let m = RunMetadata::default;
        assert!(integrate_fixed(&f, &[1.0], 1.0, 0.1, 1, m()).is_err());
        assert!(integrate_fixed(&f, &[1.0, 0.0], -1.0, 0.1, 1, m()).is_err());
        assert!(integrate_fixed(&f, &[1.0, 0.0], 1.0, 2.0, 1, m()).is_err());
        assert!(integrate_fixed(&f, &[1.0, 0.0], 1.0, 0.1, 0, m()).is_err());
        assert!(integrate_fixed(&f, &[f64::NAN, 0.0], 1.0, 0.1, 1, m()).is_err());
    }
}
