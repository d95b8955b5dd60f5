//! Contact Hamiltonian geometry in a Darboux chart `(s, q, p)` with contact
//! form `ds - p_i dq^i` and Reeb field `∂/∂s`.
//!
//! Hamiltonians and observables share one interface, [`PhaseFunction`]: a
//! value plus analytic first partials. Everything here is a pure function of
//! its inputs.

use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// A point `(s, q¹..qⁿ, p₁..pₙ)` of the contact phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxPoint {
    pub s: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl DarbouxPoint {
    pub fn new(s: f64, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let point = Self { s, q, p };
        point.validate()?;
        Ok(point)
    }

    /// One degree of freedom, unchecked. Handy for catalog systems and tests.
    pub fn scalar(s: f64, q: f64, p: f64) -> Self {
        Self {
            s,
            q: vec![q],
            p: vec![p],
        }
    }

    /// Reads the flat layout `(s, q.., p..)`.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.len() < 3 || state.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "contact state must have odd length >= 3, got {}",
                state.len()
            )));
        }
        let n = (state.len() - 1) / 2;
        Self::new(state[0], state[1..=n].to_vec(), state[n + 1..].to_vec())
    }

    pub fn to_state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.dof());
        out.push(self.s);
        out.extend_from_slice(&self.q);
        out.extend_from_slice(&self.p);
        out
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::InvalidArgument(
                "a Darboux point needs at least one degree of freedom".into(),
            ));
        }
        ensure_dim(self.q.len(), self.p.len())?;
        ensure_finite(|| "s coordinate".into(), self.s)?;
        for (i, v) in self.q.iter().enumerate() {
            ensure_finite(|| format!("q[{i}]"), *v)?;
        }
        for (i, v) in self.p.iter().enumerate() {
            ensure_finite(|| format!("p[{i}]"), *v)?;
        }
        Ok(())
    }
}

/// Components of a tangent vector at a Darboux point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub ds: f64,
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl TangentVector {
    /// Flat layout matching [`DarbouxPoint::to_state`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.dq.len());
        out.push(self.ds);
        out.extend_from_slice(&self.dq);
        out.extend_from_slice(&self.dp);
        out
    }
}

/// First partials `(∂/∂s, ∂/∂qⁱ, ∂/∂pᵢ)` of a phase function.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub ds: f64,
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl Partials {
    pub fn zeros(n: usize) -> Self {
        Self {
            ds: 0.0,
            dq: vec![0.0; n],
            dp: vec![0.0; n],
        }
    }

    fn ensure_finite(&self, owner: &str) -> Result<()> {
        ensure_finite(|| format!("∂{owner}/∂s"), self.ds)?;
        for (i, v) in self.dq.iter().enumerate() {
            ensure_finite(|| format!("∂{owner}/∂q[{i}]"), *v)?;
        }
        for (i, v) in self.dp.iter().enumerate() {
            ensure_finite(|| format!("∂{owner}/∂p[{i}]"), *v)?;
        }
        Ok(())
    }
}

/// A smooth function on the contact phase space with analytic first partials.
///
/// Contact Hamiltonians and observables both implement this. Partials must
/// agree with central differences of [`PhaseFunction::value`]; see
/// [`crate::oracle::check_partials`].
pub trait PhaseFunction: Send + Sync {
    fn name(&self) -> &str;

    /// Degrees of freedom `n`.
    fn dof(&self) -> usize;

    fn value(&self, x: &DarbouxPoint) -> f64;

    fn partials(&self, x: &DarbouxPoint) -> Partials;

    /// Rejects points where the function is undefined (poles, logarithms).
    fn check_domain(&self, _x: &DarbouxPoint) -> Result<()> {
        Ok(())
    }
}

impl<T: PhaseFunction + ?Sized> PhaseFunction for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dof(&self) -> usize {
        (**self).dof()
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        (**self).value(x)
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        (**self).partials(x)
    }
    fn check_domain(&self, x: &DarbouxPoint) -> Result<()> {
        (**self).check_domain(x)
    }
}

/// Value and partials evaluated together, after dimension, domain and
/// finiteness checks.
pub(crate) struct Evaluated {
    pub value: f64,
    pub d: Partials,
}

pub(crate) fn evaluate<F: PhaseFunction + ?Sized>(f: &F, x: &DarbouxPoint) -> Result<Evaluated> {
    ensure_dim(f.dof(), x.dof())?;
    ensure_dim(x.q.len(), x.p.len())?;
    f.check_domain(x)?;
    let value = ensure_finite(|| format!("{} value", f.name()), f.value(x))?;
    let d = f.partials(x);
    ensure_dim(f.dof(), d.dq.len())?;
    ensure_dim(f.dof(), d.dp.len())?;
    d.ensure_finite(f.name())?;
    Ok(Evaluated { value, d })
}

/// The contact Hamiltonian vector field `X_h` at `x`:
/// `ds = pᵢ ∂h/∂pᵢ − h`, `dqⁱ = ∂h/∂pᵢ`, `dpᵢ = −(∂h/∂qⁱ + pᵢ ∂h/∂s)`.
pub fn contact_vector_field<H: PhaseFunction + ?Sized>(
    h: &H,
    x: &DarbouxPoint,
) -> Result<TangentVector> {
    let Evaluated { value, d } = evaluate(h, x)?;
    let ds = x.p.iter().zip(&d.dp).map(|(p, hp)| p * hp).sum::<f64>() - value;
    let dq = d.dp.clone();
    let dp = x
        .p
        .iter()
        .zip(&d.dq)
        .map(|(p, hq)| -(hq + p * d.ds))
        .collect();
    Ok(TangentVector { ds, dq, dp })
}

/// `ξ(h) = ∂h/∂s`.
pub fn reeb_derivative<H: PhaseFunction + ?Sized>(h: &H, x: &DarbouxPoint) -> Result<f64> {
    Ok(evaluate(h, x)?.d.ds)
}

fn bracket_parts(f: &Evaluated, g: &Evaluated, x: &DarbouxPoint) -> (f64, f64) {
    let reeb = f.value * g.d.ds - f.d.ds * g.value;
    let mut mixed = 0.0;
    let mut poisson = 0.0;
    for i in 0..x.dof() {
        mixed += x.p[i] * (f.d.ds * g.d.dp[i] - f.d.dp[i] * g.d.ds);
        poisson += f.d.dq[i] * g.d.dp[i] - f.d.dp[i] * g.d.dq[i];
    }
    (reeb + mixed, poisson)
}

/// The Lagrange (Jacobi) bracket in Darboux coordinates:
///
/// `{f,g} = f ∂g/∂s − ∂f/∂s g + pᵢ(∂f/∂s ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂s)
///          + ∂f/∂qⁱ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂qⁱ`.
pub fn lagrange_bracket<F, G>(f: &F, g: &G, x: &DarbouxPoint) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let fe = evaluate(f, x)?;
    let ge = evaluate(g, x)?;
    let (s_part, poisson) = bracket_parts(&fe, &ge, x);
    Ok(s_part + poisson)
}

/// The canonical Poisson bracket `∂f/∂qⁱ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂qⁱ`; `s` is
/// treated as a parameter.
pub fn poisson_bracket<F, G>(f: &F, g: &G, x: &DarbouxPoint) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let fe = evaluate(f, x)?;
    let ge = evaluate(g, x)?;
    Ok(bracket_parts(&fe, &ge, x).1)
}

/// `X_h(f) = {f,h} − f ξ(h)`, the rate of change of `f` along the flow.
pub fn apply_field_to_observable<H, F>(h: &H, f: &F, x: &DarbouxPoint) -> Result<f64>
where
    H: PhaseFunction + ?Sized,
    F: PhaseFunction + ?Sized,
{
    let he = evaluate(h, x)?;
    let fe = evaluate(f, x)?;
    let (s_part, poisson) = bracket_parts(&fe, &he, x);
    Ok(s_part + poisson - fe.value * he.d.ds)
}

/// `⟨∇f, v⟩` through the chain rule on `(ds, dq, dp)`.
pub fn directional_derivative<F: PhaseFunction + ?Sized>(
    f: &F,
    x: &DarbouxPoint,
    v: &TangentVector,
) -> Result<f64> {
    ensure_dim(x.dof(), v.dq.len())?;
    ensure_dim(x.dof(), v.dp.len())?;
    let d = evaluate(f, x)?.d;
    let mut acc = d.ds * v.ds;
    for i in 0..x.dof() {
        acc += d.dq[i] * v.dq[i] + d.dp[i] * v.dp[i];
    }
    Ok(acc)
}

/// `div X_h = −(n+1) ∂h/∂s`.
pub fn divergence<H: PhaseFunction + ?Sized>(h: &H, x: &DarbouxPoint) -> Result<f64> {
    let reeb = reeb_derivative(h, x)?;
    Ok(-((x.dof() + 1) as f64) * reeb)
}

/// A single Darboux coordinate used as an observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    S,
    Q(usize),
    P(usize),
}

/// Observable returning one coordinate of the point.
#[derive(Debug, Clone)]
pub struct CoordinateFunction {
    coordinate: Coordinate,
    dof: usize,
    name: String,
}

impl CoordinateFunction {
    pub fn new(coordinate: Coordinate, dof: usize) -> Result<Self> {
        let name = match coordinate {
            Coordinate::S => "s".to_string(),
            Coordinate::Q(i) | Coordinate::P(i) if i >= dof => {
                return Err(Error::InvalidArgument(format!(
                    "coordinate index {i} out of range for {dof} degrees of freedom"
                )))
            }
            Coordinate::Q(i) => format!("q[{i}]"),
            Coordinate::P(i) => format!("p[{i}]"),
        };
        Ok(Self {
            coordinate,
            dof,
            name,
        })
    }
}

impl PhaseFunction for CoordinateFunction {
    fn name(&self) -> &str {
        &self.name
    }
    fn dof(&self) -> usize {
        self.dof
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        match self.coordinate {
            Coordinate::S => x.s,
            Coordinate::Q(i) => x.q[i],
            Coordinate::P(i) => x.p[i],
        }
    }
    fn partials(&self, _x: &DarbouxPoint) -> Partials {
        let mut d = Partials::zeros(self.dof);
        match self.coordinate {
            Coordinate::S => d.ds = 1.0,
            Coordinate::Q(i) => d.dq[i] = 1.0,
            Coordinate::P(i) => d.dp[i] = 1.0,
        }
        d
    }
}

/// The constant function.
#[derive(Debug, Clone)]
pub struct ConstantFunction {
    pub value: f64,
    pub dof: usize,
}

impl PhaseFunction for ConstantFunction {
    fn name(&self) -> &str {
        "constant"
    }
    fn dof(&self) -> usize {
        self.dof
    }
    fn value(&self, _x: &DarbouxPoint) -> f64 {
        self.value
    }
    fn partials(&self, _x: &DarbouxPoint) -> Partials {
        Partials::zeros(self.dof)
    }
}

type ValueFn = dyn Fn(&DarbouxPoint) -> f64 + Send + Sync;
type PartialsFn = dyn Fn(&DarbouxPoint) -> Partials + Send + Sync;

/// A phase function assembled from closures.
pub struct FnPhaseFunction {
    name: String,
    dof: usize,
    value: Box<ValueFn>,
    partials: Box<PartialsFn>,
}

impl FnPhaseFunction {
    pub fn new(
        name: impl Into<String>,
        dof: usize,
        value: impl Fn(&DarbouxPoint) -> f64 + Send + Sync + 'static,
        partials: impl Fn(&DarbouxPoint) -> Partials + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dof,
            value: Box::new(value),
            partials: Box::new(partials),
        }
    }
}

impl PhaseFunction for FnPhaseFunction {
    fn name(&self) -> &str {
        &self.name
    }
    fn dof(&self) -> usize {
        self.dof
    }
    fn value(&self, x: &DarbouxPoint) -> f64 {
        (self.value)(x)
    }
    fn partials(&self, x: &DarbouxPoint) -> Partials {
        (self.partials)(x)
    }
}
