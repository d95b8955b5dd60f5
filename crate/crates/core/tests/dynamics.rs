use std::f64::consts::PI;

use contact_virial::contact::{DarbouxPoint, FnPhaseFunction, Partials};
use contact_virial::integrate::{
    integrate_adaptive, integrate_fixed, AdaptiveOptions, ContactFlow, ExtendedFlow, RunMetadata,
    VectorField,
};
use contact_virial::systems::{
    damped_particles_setup, make_system, Chart, DampedOscillator, DampedParticles,
    ForcedOscillator, GiererMeinhardt, System,
};
use contact_virial::virial::{virial_report, ReportOptions};

fn meta() -> RunMetadata {
    RunMetadata::default()
}

fn harmonic() -> FnPhaseFunction {
    FnPhaseFunction::new(
        "harmonic",
        1,
        |x: &DarbouxPoint| (x.p[0] * x.p[0] + x.q[0] * x.q[0]) / 2.0,
        |x: &DarbouxPoint| Partials {
            ds: 0.0,
            dq: vec![x.q[0]],
            dp: vec![x.p[0]],
        },
    )
}

#[test]
fn harmonic_period_returns_home() {
    let h = harmonic();
    let flow = ContactFlow::new(&h);
    let traj = integrate_fixed(&flow, &[0.0, 1.0, 0.0], 2.0 * PI, 1e-3, 1, meta()).unwrap();
    assert_eq!(traj.final_time(), Some(2.0 * PI));
    let x = traj.final_state().unwrap();
    assert!((x[1] - 1.0).abs() < 1e-8);
    assert!(x[2].abs() < 1e-8);
    // s accumulates the action ∫(p²/2 − q²/2) dt, zero over a period.
    assert!(x[0].abs() < 1e-8);
}

#[test]
fn damped_amplitude_follows_envelope() {
    let h = DampedOscillator::new(1.0, 1.0, 0.1).unwrap();
    let flow = ContactFlow::new(&h);
    let traj = integrate_fixed(&flow, &[0.0, 1.0, 0.0], 40.0, 1e-3, 1, meta()).unwrap();
    let x = traj.final_state().unwrap();
    let amplitude = (x[1] * x[1] + x[2] * x[2]).sqrt();
    let envelope = (-0.1f64 * 40.0 / 2.0).exp();
    assert!((amplitude / envelope - 1.0).abs() < 0.1, "{amplitude} vs {envelope}");
}

#[test]
fn phase_volume_contracts_at_divergence_rate() {
    let gamma = 0.1;
    let h = DampedOscillator::new(1.0, 1.0, gamma).unwrap();
    let flow = ContactFlow::new(&h);
    let x0 = [0.2, 0.7, -0.3];
    let end = |x: &[f64]| integrate_fixed(&flow, x, 5.0, 1e-3, 100_000, meta()).unwrap().final_state().unwrap().to_vec();
    let eps = 1e-6;
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let (mut a, mut b) = (x0, x0);
        a[j] += eps;
        b[j] -= eps;
        let (fa, fb) = (end(&a), end(&b));
        for i in 0..3 {
            jac[i][j] = (fa[i] - fb[i]) / (2.0 * eps);
        }
    }
    let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    let expected = (-2.0 * gamma * 5.0).exp();
    assert!((det / expected - 1.0).abs() < 0.01, "{det} vs {expected}");
}

#[test]
fn adaptive_agrees_with_fixed_step() {
    let h = DampedOscillator::new(1.0, 1.0, 0.1).unwrap();
    let flow = ContactFlow::new(&h);
    let fixed = integrate_fixed(&flow, &[0.0, 1.0, 0.0], 20.0, 1e-3, 1, meta()).unwrap();
    let adaptive = integrate_adaptive(&flow, &[0.0, 1.0, 0.0], 20.0, AdaptiveOptions::new(1e-10, 1e-12, 0.5), meta()).unwrap();
    assert_eq!(adaptive.final_time(), Some(20.0));
    let (a, b) = (fixed.final_state().unwrap(), adaptive.final_state().unwrap());
    for i in 0..3 {
        assert!((a[i] - b[i]).abs() < 1e-6, "component {i}: {} vs {}", a[i], b[i]);
    }
    // Dense output lands on the requested sample grid.
    assert!((adaptive.times[1] - 0.5).abs() < 1e-12);
}

#[test]
fn gierer_meinhardt_settles_on_fixed_point() {
    let spec = make_system("gierer_meinhardt", &[]).unwrap();
    let System::GiererMeinhardt(gm) = spec.system else { unreachable!() };
    let traj = integrate_adaptive(spec.field().as_ref(), &[0.2, 0.2], 50.0, AdaptiveOptions::new(1e-10, 1e-12, 1.0), meta()).unwrap();
    let x = traj.final_state().unwrap();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    assert!((x[0] - golden).abs() < 1e-6 && (x[1] - golden).abs() < 1e-6, "{x:?}");
    let (xf, yf) = gm.fixed_point().unwrap();
    assert!((xf - golden).abs() < 1e-12 && (yf - golden).abs() < 1e-12);
}

#[test]
fn gierer_meinhardt_conservative_limit_keeps_hamiltonian() {
    let gm = GiererMeinhardt::new(1.0, 1.0, 0.5, 1.0, -0.5).unwrap();
    assert_eq!(gm.conformal_factor(), 0.0);
    let spec = make_system("gierer_meinhardt", &gm.params()).unwrap();
    let traj = integrate_fixed(spec.field().as_ref(), &[0.3, 0.4], 10.0, 1e-3, 1000, meta()).unwrap();
    let h0 = gm.planar_hamiltonian(0.3, 0.4);
    for x in &traj.states {
        assert!((gm.planar_hamiltonian(x[0], x[1]) - h0).abs() < 1e-9);
    }
}

#[test]
fn forced_oscillator_reaches_steady_amplitude() {
    let h = ForcedOscillator::new(1.0, 1.0, 0.1, 1.0, 2.0).unwrap();
    let flow = ExtendedFlow::new(&h);
    let traj = integrate_fixed(&flow, &[0.0, 0.0, 1.0, 0.0], 200.0 + 4.0 * PI, 1e-3, 1, meta()).unwrap();
    let amplitude = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= 200.0)
        .map(|(_, x)| x[2].abs())
        .fold(0.0, f64::max);
    assert!((amplitude - 0.33259).abs() < 1e-4, "{amplitude}");
    let x = traj.final_state().unwrap();
    assert_eq!(x[0], 200.0 + 4.0 * PI);
}

#[test]
fn parachute_lagrangian_chart_reaches_terminal_velocity() {
    let spec = make_system("parachute", &[]).unwrap().with_chart(Chart::Lagrangian).unwrap();
    let traj = integrate_fixed(spec.field().as_ref(), &spec.default_state(), 20.0, 1e-3, 1000, meta()).unwrap();
    let qdot = traj.final_state().unwrap()[1];
    assert!((qdot + 20f64.sqrt()).abs() < 1e-4, "{qdot}");
}

#[test]
fn coupled_particles_satisfy_summed_identity() {
    let model = DampedParticles::new(3, 1.0, 1.0, 0.1, 0.5).unwrap();
    let flow = ContactFlow::new(&model);
    let x0 = [0.0, 1.0, -0.5, 0.2, 0.0, 0.3, -0.1];
    let traj = integrate_fixed(&flow, &x0, 100.0, 1e-3, 1, meta()).unwrap();
    let setup = damped_particles_setup(&model);
    let r = virial_report(&traj, &flow as &dyn VectorField, &setup, "hamiltonian", ReportOptions::default()).unwrap();
    assert!(r.residual_exact.value.abs() < 1e-8, "{}", r.residual_exact.value);
    let half_boundary = 0.5 * r.boundary_term.value;
    assert!((r.theorem_residual.value - half_boundary).abs() < 1e-5);
    assert!(r.term("kinetic").is_some() && r.term("potential").is_some() && r.term("friction").is_some());
}
