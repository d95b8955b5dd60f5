//! Catalog of example systems with analytic partials, their charts and their
//! virial decompositions.

mod gierer_meinhardt;
mod oscillators;
mod parachute;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use gierer_meinhardt::{
    conformal_projection_check, GiererMeinhardt, PlanarConformalFlow, ProjectionCheck,
};
pub use oscillators::{
    BrownianOscillator, DampedLagrangian, DampedOscillator, DampedParticles, ForcedOscillator,
};
pub use parachute::{Parachute, ParachuteLagrangian};

use crate::contact::DarbouxPoint;
use crate::error::{Error, Result};
use crate::extended::ExtendedPoint;
use crate::herglotz::LagrangianPoint;
use crate::integrate::{ContactFlow, ExtendedFlow, HerglotzFlow, VectorField};
use crate::oracle::{
    check_lagrangian_partials, check_partials, check_state_gradient, check_time_partials,
    PartialsReport, DEFAULT_STEP,
};
use crate::virial::{
    virial_observable, FnStateFunction, PhaseObservable, PhaseVirial, VirialSetup, VirialTerm,
};

/// Coordinate chart a system is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Contact Darboux coordinates `(s, q, p)`.
    Hamiltonian,
    /// Herglotz coordinates `(q, q̇, s)`.
    Lagrangian,
    /// Time-extended contact coordinates `(t, s, q, p)`.
    Extended,
    /// Planar `(x, y)` with a conformal Hamiltonian field.
    PlanarConformal,
}

impl Chart {
    pub fn as_str(&self) -> &'static str {
        match self {
            Chart::Hamiltonian => "hamiltonian",
            Chart::Lagrangian => "lagrangian",
            Chart::Extended => "extended",
            Chart::PlanarConformal => "planar-conformal",
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Chart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamiltonian" => Ok(Chart::Hamiltonian),
            "lagrangian" => Ok(Chart::Lagrangian),
            "extended" => Ok(Chart::Extended),
            "planar-conformal" | "planar_conformal" => Ok(Chart::PlanarConformal),
            other => Err(Error::InvalidArgument(format!("unknown chart `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Positive,
    NonNegative,
    Real,
}

impl Constraint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Constraint::Positive => "> 0",
            Constraint::NonNegative => ">= 0",
            Constraint::Real => "real",
        }
    }

    fn admits(&self, v: f64) -> bool {
        v.is_finite()
            && match self {
                Constraint::Positive => v > 0.0,
                Constraint::NonNegative => v >= 0.0,
                Constraint::Real => true,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub constraint: Constraint,
    pub default: f64,
    pub description: &'static str,
}

const fn param(
    name: &'static str,
    unit: &'static str,
    constraint: Constraint,
    default: f64,
    description: &'static str,
) -> ParamSpec {
    ParamSpec {
        name,
        unit,
        constraint,
        default,
        description,
    }
}

use Constraint::{NonNegative, Positive, Real};

const DAMPED: &[ParamSpec] = &[
    param("m", "kg", Positive, 1.0, "mass"),
    param("omega", "rad/s", Positive, 1.0, "natural frequency"),
    param("gamma", "1/s", Positive, 0.1, "damping rate"),
];
const PARACHUTE: &[ParamSpec] = &[
    param("m", "kg", Positive, 1.0, "mass"),
    param("g", "m/s^2", Positive, 10.0, "gravitational acceleration"),
    param("lambda", "1/m", Positive, 0.5, "drag coefficient per unit mass"),
];
const FORCED: &[ParamSpec] = &[
    param("m", "kg", Positive, 1.0, "mass"),
    param("omega", "rad/s", Positive, 1.0, "natural frequency"),
    param("gamma", "1/s", Positive, 0.1, "damping rate"),
    param("F0", "N", NonNegative, 1.0, "forcing amplitude"),
    param("Omega", "rad/s", Positive, 2.0, "forcing frequency"),
];
const BROWNIAN: &[ParamSpec] = &[
    param("m", "kg", Positive, 1.0, "mass"),
    param("omega", "rad/s", Positive, 1.0, "trap frequency"),
    param("gamma", "1/s", Positive, 0.5, "friction rate"),
    param("kT", "J", NonNegative, 1.0, "bath temperature times Boltzmann constant"),
];
const GIERER_MEINHARDT: &[ParamSpec] = &[
    param("A", "1", Real, 1.0, "activator production (non-zero)"),
    param("B", "1", Real, 1.0, "inhibitor saturation; requires B + y > 0"),
    param("C", "1", Real, 1.0, "activator decay"),
    param("D", "1", Real, 1.0, "inhibitor production"),
    param("K", "1", Real, 1.0, "inhibitor decay"),
];

/// Catalog entry: name, charts (default first), parameter schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub charts: &'static [Chart],
    pub params: &'static [ParamSpec],
    pub stochastic: bool,
    pub summary: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "damped_oscillator",
        charts: &[Chart::Hamiltonian, Chart::Lagrangian],
        params: DAMPED,
        stochastic: false,
        summary: "h = p^2/2m + m omega^2 q^2/2 + gamma s",
    },
    CatalogEntry {
        name: "parachute",
        charts: &[Chart::Hamiltonian, Chart::Lagrangian],
        params: PARACHUTE,
        stochastic: false,
        summary: "h = (p - 2 lambda s)^2/2m + (m g/2 lambda)(exp(2 lambda q) - 1)",
    },
    CatalogEntry {
        name: "forced_oscillator",
        charts: &[Chart::Extended],
        params: FORCED,
        stochastic: false,
        summary: "h = p^2/2m + m omega^2 q^2/2 + gamma s - q F0 cos(Omega t)",
    },
    CatalogEntry {
        name: "brownian_oscillator",
        charts: &[Chart::Extended],
        params: BROWNIAN,
        stochastic: true,
        summary: "damped oscillator driven by white noise <eta eta'> = 2 m gamma kT delta",
    },
    CatalogEntry {
        name: "gierer_meinhardt",
        charts: &[Chart::PlanarConformal, Chart::Hamiltonian],
        params: GIERER_MEINHARDT,
        stochastic: false,
        summary: "h = A ln(B+y) - D x^2/2 + C(z - x y) + K z, contact form dz - y dx",
    },
];

pub fn catalog_entry(name: &str) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSystem(name.to_string()))
}

/// Resolves `given` against a schema: unknown keys are rejected, missing
/// keys take defaults, constraints are enforced. Output follows schema order.
pub fn resolve_params(schema: &[ParamSpec], given: &[(String, f64)]) -> Result<Vec<(String, f64)>> {
    for (k, _) in given {
        if !schema.iter().any(|p| p.name == k) {
            return Err(Error::UnknownParameter(k.clone()));
        }
    }
    schema
        .iter()
        .map(|p| {
            let v = given
                .iter()
                .rev()
                .find(|(k, _)| k == p.name)
                .map_or(p.default, |(_, v)| *v);
            if p.constraint.admits(v) {
                Ok((p.name.to_string(), v))
            } else {
                Err(Error::InvalidParameter {
                    name: p.name.into(),
                    value: v,
                    reason: format!("must be {}", p.constraint.as_str()),
                })
            }
        })
        .collect()
}

/// A constructed model of one catalog system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Damped(DampedOscillator),
    Parachute(Parachute),
    Forced(ForcedOscillator),
    Brownian(BrownianOscillator),
    GiererMeinhardt(GiererMeinhardt),
}

/// A validated system in a chosen chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub name: &'static str,
    pub chart: Chart,
    pub params: Vec<(String, f64)>,
    pub system: System,
}

/// Builds a catalog system in its default chart. Parameters are validated
/// and the analytic partials are checked against finite differences at the
/// default state.
pub fn make_system(name: &str, params: &[(String, f64)]) -> Result<SystemSpec> {
    let entry = catalog_entry(name)?;
    let resolved = resolve_params(entry.params, params)?;
    let v = |k: &str| resolved.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap_or(f64::NAN);
    let system = match entry.name {
        "damped_oscillator" => System::Damped(DampedOscillator::new(v("m"), v("omega"), v("gamma"))?),
        "parachute" => System::Parachute(Parachute::new(v("m"), v("g"), v("lambda"))?),
        "forced_oscillator" => System::Forced(ForcedOscillator::new(
            v("m"),
            v("omega"),
            v("gamma"),
            v("F0"),
            v("Omega"),
        )?),
        "brownian_oscillator" => {
            System::Brownian(BrownianOscillator::new(v("m"), v("omega"), v("gamma"), v("kT"))?)
        }
        "gierer_meinhardt" => System::GiererMeinhardt(GiererMeinhardt::new(
            v("A"),
            v("B"),
            v("C"),
            v("D"),
            v("K"),
        )?),
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    let spec = SystemSpec {
        name: entry.name,
        chart: entry.charts[0],
        params: resolved,
        system,
    };
    for chart in entry.charts {
        let alt = spec.clone().with_chart(*chart)?;
        let state = alt.default_state();
        alt.ensure_partials(&state)?;
    }
    Ok(spec)
}

fn mismatch(report: &PartialsReport) -> Error {
    let detail = report
        .flagged()
        .map(|c| format!("{} analytic {} numeric {}", c.label, c.analytic, c.numeric))
        .chain(report.failures.iter().map(|f| format!("{f} not evaluable")))
        .collect::<Vec<_>>()
        .join("; ");
    Error::PartialsMismatch {
        model: report.model.clone(),
        detail,
    }
}

impl SystemSpec {
    pub fn entry(&self) -> &'static CatalogEntry {
        catalog_entry(self.name).expect("spec built from catalog")
    }

    pub fn with_chart(mut self, chart: Chart) -> Result<Self> {
        if !self.entry().charts.contains(&chart) {
            return Err(Error::UnsupportedChart {
                system: self.name.into(),
                chart: chart.to_string(),
            });
        }
        self.chart = chart;
        Ok(self)
    }

    pub fn is_stochastic(&self) -> bool {
        self.entry().stochastic
    }

    /// Number of mechanical degrees of freedom.
    pub fn dof(&self) -> usize {
        1
    }

    /// Default initial state in the current chart's layout.
    pub fn default_state(&self) -> Vec<f64> {
        match (&self.system, self.chart) {
            (System::Damped(_), Chart::Hamiltonian) => vec![0.0, 1.0, 0.0],
            (System::Damped(_), _) => vec![1.0, 0.0, 0.0],
            (System::Parachute(_), _) => vec![0.0, 0.0, 0.0],
            (System::Forced(_) | System::Brownian(_), _) => vec![0.0, 0.0, 1.0, 0.0],
            (System::GiererMeinhardt(_), Chart::PlanarConformal) => vec![0.2, 0.2],
            (System::GiererMeinhardt(_), _) => vec![0.0, 0.2, 0.2],
        }
    }

    /// The deterministic vector field in the current chart. For the Brownian
    /// oscillator this is the noise-free drift.
    pub fn field(&self) -> Box<dyn VectorField + '_> {
        match (&self.system, self.chart) {
            (System::Damped(h), Chart::Lagrangian) => Box::new(OwnedHerglotz(LagrangianOwned::Damped(h.lagrangian()))),
            (System::Damped(h), _) => Box::new(ContactFlow::new(h)),
            (System::Parachute(h), Chart::Lagrangian) => {
                Box::new(OwnedHerglotz(LagrangianOwned::Parachute(h.lagrangian())))
            }
            (System::Parachute(h), _) => Box::new(ContactFlow::new(h)),
            (System::Forced(h), _) => Box::new(ExtendedFlow::new(h)),
            (System::Brownian(h), _) => Box::new(ExtendedFlow::new(h)),
            (System::GiererMeinhardt(h), Chart::PlanarConformal) => {
                Box::new(PlanarConformalFlow { model: h })
            }
            (System::GiererMeinhardt(h), _) => Box::new(
                ContactFlow::new(h).with_layout(vec!["z".into(), "x".into(), "y".into()]),
            ),
        }
    }

    pub fn layout(&self) -> Vec<String> {
        self.field().layout()
    }

    /// `G` and the named terms whose signed averages sum to zero in the
    /// long-time limit.
    pub fn virial_setup(&self) -> VirialSetup {
        match (&self.system, self.chart) {
            (System::Damped(o), Chart::Lagrangian) => damped_lagrangian_setup(o),
            (System::Damped(o), _) => damped_hamiltonian_setup(o, 0),
            (System::Parachute(c), Chart::Lagrangian) => parachute_lagrangian_setup(c),
            (System::Parachute(c), _) => parachute_hamiltonian_setup(c),
            (System::Forced(f), _) => forced_setup(f),
            (System::Brownian(b), _) => damped_hamiltonian_setup(&b.damped(), 1),
            (System::GiererMeinhardt(g), Chart::PlanarConformal) => gierer_meinhardt_setup(g, 0),
            (System::GiererMeinhardt(g), _) => gierer_meinhardt_setup(g, 1),
        }
    }

    /// Oracle reports for the chart's model and the virial observables at `state`.
    pub fn gradcheck(&self, state: &[f64]) -> Result<Vec<PartialsReport>> {
        let mut reports = Vec::new();
        match (&self.system, self.chart) {
            (System::Damped(o), Chart::Lagrangian) => reports.push(check_lagrangian_partials(
                &o.lagrangian(),
                &LagrangianPoint::from_state(state)?,
                DEFAULT_STEP,
            )?),
            (System::Damped(o), _) => {
                reports.push(check_partials(o, &DarbouxPoint::from_state(state)?, DEFAULT_STEP)?)
            }
            (System::Parachute(c), Chart::Lagrangian) => reports.push(check_lagrangian_partials(
                &c.lagrangian(),
                &LagrangianPoint::from_state(state)?,
                DEFAULT_STEP,
            )?),
            (System::Parachute(c), _) => {
                reports.push(check_partials(c, &DarbouxPoint::from_state(state)?, DEFAULT_STEP)?)
            }
            (System::Forced(f), _) => reports.push(check_time_partials(
                f,
                &ExtendedPoint::from_state(state)?,
                DEFAULT_STEP,
            )?),
            (System::Brownian(b), _) => reports.push(check_time_partials(
                b,
                &ExtendedPoint::from_state(state)?,
                DEFAULT_STEP,
            )?),
            (System::GiererMeinhardt(g), Chart::PlanarConformal) => {
                g.check_inhibitor(state[1])?;
                let contact = DarbouxPoint::scalar(0.0, state[0], state[1]);
                reports.push(check_partials(g, &contact, DEFAULT_STEP)?);
            }
            (System::GiererMeinhardt(g), _) => {
                reports.push(check_partials(g, &DarbouxPoint::from_state(state)?, DEFAULT_STEP)?)
            }
        }
        let setup = self.virial_setup();
        reports.push(check_state_gradient(setup.g.as_ref(), state, DEFAULT_STEP)?);
        for term in &setup.terms {
            let mut r = check_state_gradient(term.observable.as_ref(), state, DEFAULT_STEP)?;
            r.model = format!("term {}", term.name);
            reports.push(r);
        }
        Ok(reports)
    }

    fn ensure_partials(&self, state: &[f64]) -> Result<()> {
        for report in self.gradcheck(state)? {
            if !report.passed() {
                return Err(mismatch(&report));
            }
        }
        Ok(())
    }
}

/// Owned Lagrangian of either dual-chart system.
#[derive(Debug, Clone, Copy, PartialEq)]
enum LagrangianOwned {
    Damped(DampedLagrangian),
    Parachute(ParachuteLagrangian),
}

impl crate::herglotz::LagrangianModel for LagrangianOwned {
    fn name(&self) -> &str {
        match self {
            Self::Damped(l) => l.name(),
            Self::Parachute(l) => l.name(),
        }
    }
    fn dof(&self) -> usize {
        1
    }
    fn value(&self, z: &LagrangianPoint) -> f64 {
        match self {
            Self::Damped(l) => l.value(z),
            Self::Parachute(l) => l.value(z),
        }
    }
    fn partials(&self, z: &LagrangianPoint) -> crate::herglotz::LagrangianPartials {
        match self {
            Self::Damped(l) => l.partials(z),
            Self::Parachute(l) => l.partials(z),
        }
    }
    fn second_partials(&self, z: &LagrangianPoint) -> crate::herglotz::LagrangianSecondPartials {
        match self {
            Self::Damped(l) => l.second_partials(z),
            Self::Parachute(l) => l.second_partials(z),
        }
    }
}

struct OwnedHerglotz(LagrangianOwned);

impl VectorField for OwnedHerglotz {
    fn dim(&self) -> usize {
        HerglotzFlow::new(&self.0).dim()
    }
    fn layout(&self) -> Vec<String> {
        HerglotzFlow::new(&self.0).layout()
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        HerglotzFlow::new(&self.0).eval(x, dx)
    }
}

fn term(
    name: &str,
    sign: f64,
    dim: usize,
    value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
) -> VirialTerm {
    VirialTerm::new(name, sign, FnStateFunction::new(name, dim, value, gradient))
}

/// Contact or extended chart; `lead` is 1 when `t` precedes `(s, q, p)`.
fn damped_hamiltonian_setup(o: &DampedOscillator, lead: usize) -> VirialSetup {
    let (m, k, gamma) = (o.m, o.stiffness(), o.gamma);
    let dim = lead + 3;
    let (iq, ip) = (lead + 1, lead + 2);
    let grad = move |dq: f64, dp: f64| {
        let mut g = vec![0.0; dim];
        g[iq] = dq;
        g[ip] = dp;
        g
    };
    VirialSetup {
        g: Arc::new(PhaseObservable::new(PhaseVirial { n: 1 }, lead)),
        terms: vec![
            term("kinetic", 1.0, dim, move |x| x[ip] * x[ip] / (2.0 * m), move |x| grad(0.0, x[ip] / m)),
            term("potential", -1.0, dim, move |x| k * x[iq] * x[iq] / 2.0, move |x| grad(k * x[iq], 0.0)),
            term(
                "friction",
                -1.0,
                dim,
                move |x| 0.5 * gamma * x[iq] * x[ip],
                move |x| grad(0.5 * gamma * x[ip], 0.5 * gamma * x[iq]),
            ),
        ],
    }
}

/// State `(q, q̇, s)`.
fn damped_lagrangian_setup(o: &DampedOscillator) -> VirialSetup {
    let (m, k, gamma) = (o.m, o.stiffness(), o.gamma);
    VirialSetup {
        g: Arc::new(virial_observable(1, Some(&[m])).expect("positive mass")),
        terms: vec![
            term("kinetic", 1.0, 3, move |x| m * x[1] * x[1] / 2.0, move |x| vec![0.0, m * x[1], 0.0]),
            term("potential", -1.0, 3, move |x| k * x[0] * x[0] / 2.0, move |x| vec![k * x[0], 0.0, 0.0]),
            term(
                "friction",
                -1.0,
                3,
                move |x| 0.5 * m * gamma * x[0] * x[1],
                move |x| vec![0.5 * m * gamma * x[1], 0.5 * m * gamma * x[0], 0.0],
            ),
        ],
    }
}

/// State `(s, q, p)`; decomposition of `X_h(G) = {G,h} − G ξ(h)`.
fn parachute_hamiltonian_setup(c: &Parachute) -> VirialSetup {
    let (m, g, l) = (c.m, c.g, c.lambda);
    let c = *c;
    VirialSetup {
        g: Arc::new(PhaseObservable::new(PhaseVirial { n: 1 }, 0)),
        terms: vec![
            term(
                "kinetic",
                1.0,
                3,
                move |x| x[2] * (x[2] - 2.0 * l * x[0]) / m,
                move |x| vec![-2.0 * l * x[2] / m, 0.0, (2.0 * x[2] - 2.0 * l * x[0]) / m],
            ),
            term(
                "drag",
                -1.0,
                3,
                move |x| -2.0 * l * x[2] * x[1] * (x[2] - 2.0 * l * x[0]) / m,
                move |x| {
                    let (s, q, p) = (x[0], x[1], x[2]);
                    vec![
                        4.0 * l * l * p * q / m,
                        -2.0 * l * p * (p - 2.0 * l * s) / m,
                        -2.0 * l * q * (2.0 * p - 2.0 * l * s) / m,
                    ]
                },
            ),
            term(
                "potential",
                -1.0,
                3,
                move |x| x[1] * c.force_gradient(x[1]),
                move |x| vec![0.0, m * g * (2.0 * l * x[1]).exp() * (1.0 + 2.0 * l * x[1]), 0.0],
            ),
        ],
    }
}

/// State `(q, q̇, s)`.
fn parachute_lagrangian_setup(c: &Parachute) -> VirialSetup {
    let (m, g, l) = (c.m, c.g, c.lambda);
    VirialSetup {
        g: Arc::new(virial_observable(1, Some(&[m])).expect("positive mass")),
        terms: vec![
            term("kinetic", 1.0, 3, move |x| m * x[1] * x[1] / 2.0, move |x| vec![0.0, m * x[1], 0.0]),
            term("potential", -1.0, 3, move |x| 0.5 * m * g * x[0], move |_| vec![0.5 * m * g, 0.0, 0.0]),
            term(
                "drag",
                -1.0,
                3,
                move |x| -0.5 * m * l * x[0] * x[1] * x[1],
                move |x| vec![-0.5 * m * l * x[1] * x[1], -m * l * x[0] * x[1], 0.0],
            ),
        ],
    }
}

/// State `(t, s, q, p)`.
fn forced_setup(f: &ForcedOscillator) -> VirialSetup {
    let base = damped_hamiltonian_setup(
        &DampedOscillator {
            m: f.m,
            omega: f.omega,
            gamma: f.gamma,
        },
        1,
    );
    let (gamma, f0, w) = (f.gamma, f.f0, f.drive);
    let mut terms: Vec<VirialTerm> = base.terms.into_iter().filter(|t| t.name != "friction").collect();
    terms.push(term(
        "nonpotential",
        1.0,
        4,
        move |x| 0.5 * x[2] * (-gamma * x[3] + f0 * (w * x[0]).cos()),
        move |x| {
            let (t, q, p) = (x[0], x[2], x[3]);
            vec![
                -0.5 * q * f0 * w * (w * t).sin(),
                0.0,
                0.5 * (-gamma * p + f0 * (w * t).cos()),
                -0.5 * gamma * q,
            ]
        },
    ));
    VirialSetup { g: base.g, terms }
}

/// Planar `(x, y)` when `lead = 0`, contact `(z, x, y)` when `lead = 1`.
/// Terms are those of `Ġ/A` with `G = xy`.
fn gierer_meinhardt_setup(gm: &GiererMeinhardt, lead: usize) -> VirialSetup {
    let GiererMeinhardt { a, b, c, d, k } = *gm;
    let dim = lead + 2;
    let (ix, iy) = (lead, lead + 1);
    let grad = move |dx: f64, dy: f64| {
        let mut g = vec![0.0; dim];
        g[ix] = dx;
        g[iy] = dy;
        g
    };
    let g = FnStateFunction::new("G", dim, move |x| x[ix] * x[iy], move |x| grad(x[iy], x[ix]));
    VirialSetup {
        g: Arc::new(g),
        terms: vec![
            term(
                "saturation",
                1.0,
                dim,
                move |x| x[iy] / (b + x[iy]),
                move |x| grad(0.0, b / (b + x[iy]).powi(2)),
            ),
            term(
                "production",
                1.0,
                dim,
                move |x| d / a * x[ix] * x[ix],
                move |x| grad(2.0 * d / a * x[ix], 0.0),
            ),
            term(
                "decay",
                -1.0,
                dim,
                move |x| (c + k) / a * x[ix] * x[iy],
                move |x| grad((c + k) / a * x[iy], (c + k) / a * x[ix]),
            ),
        ],
    }
}

/// `G = Σqp` and the terms `Σp²/2m (+)`, `½Σq∂V/∂q (−)`, `½γΣqp (−)` for
/// [`DampedParticles`] on `(s, q.., p..)`.
pub fn damped_particles_setup(model: &DampedParticles) -> VirialSetup {
    let n = model.n;
    let dim = 1 + 2 * n;
    let (m, gamma) = (model.m, model.gamma);
    let mv = *model;
    VirialSetup {
        g: Arc::new(PhaseObservable::new(PhaseVirial { n }, 0)),
        terms: vec![
            term(
                "kinetic",
                1.0,
                dim,
                move |x| x[1 + n..].iter().map(|p| p * p).sum::<f64>() / (2.0 * m),
                move |x| {
                    let mut g = vec![0.0; dim];
                    for i in 0..n {
                        g[1 + n + i] = x[1 + n + i] / m;
                    }
                    g
                },
            ),
            term(
                "potential",
                -1.0,
                dim,
                move |x| {
                    let q = &x[1..=n];
                    0.5 * q.iter().zip(mv.potential_gradient(q)).map(|(a, b)| a * b).sum::<f64>()
                },
                move |x| {
                    // d/dq of ½ q·∇V = ½(∇V + Hess V · q).
                    let q = &x[1..=n];
                    let k = mv.m * mv.omega * mv.omega;
                    let grad_v = mv.potential_gradient(q);
                    let mut g = vec![0.0; dim];
                    for i in 0..n {
                        g[1 + i] = 0.5 * (grad_v[i] + k * q[i]);
                    }
                    for i in 0..n.saturating_sub(1) {
                        let h = 3.0 * mv.kappa * (q[i] - q[i + 1]).powi(2);
                        let dq = q[i] - q[i + 1];
                        g[1 + i] += 0.5 * h * dq;
                        g[2 + i] -= 0.5 * h * dq;
                    }
                    g
                },
            ),
            term(
                "friction",
                -1.0,
                dim,
                move |x| 0.5 * gamma * (0..n).map(|i| x[1 + i] * x[1 + n + i]).sum::<f64>(),
                move |x| {
                    let mut g = vec![0.0; dim];
                    for i in 0..n {
                        g[1 + i] = 0.5 * gamma * x[1 + n + i];
                        g[1 + n + i] = 0.5 * gamma * x[1 + i];
                    }
                    g
                },
            ),
        ],
    }
}
