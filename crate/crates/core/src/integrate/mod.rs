//! Trajectory production for contact, extended, Herglotz and planar fields.

mod average;
mod dopri;
mod langevin;
mod rk4;
mod trajectory;

pub(crate) use average::CompensatedSum;
pub use average::{time_average, time_average_window, AverageAccumulator, Welford};
pub use dopri::{integrate_adaptive, AdaptiveOptions};
pub use langevin::{
    euler_maruyama_langevin, euler_maruyama_langevin_observed, LangevinStep, NoiseSpec,
    MAX_GAMMA_DT,
};
pub use rk4::integrate_fixed;
pub use trajectory::{fmt_f64, AbortReason, RunMetadata, StateObservable, Trajectory};

use crate::contact::{contact_vector_field, DarbouxPoint, PhaseFunction};
use crate::error::{ensure_dim, Result};
use crate::extended::{evolution_field, ExtendedPoint, TimeDependentHamiltonian};
use crate::herglotz::{lagrangian_field, LagrangianModel, LagrangianPoint};

/// An autonomous vector field on a flat state vector. Time-dependent systems
/// carry `t` as a state component.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    /// Component names in state order.
    fn layout(&self) -> Vec<String>;

    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()>;
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// Names for the contact layout `(s, q.., p..)`.
pub fn contact_layout(n: usize) -> Vec<String> {
    let mut names = vec!["s".to_string()];
    names.extend(indexed("q", n));
    names.extend(indexed("p", n));
    names
}

/// `X_h` on states `(s, q.., p..)`.
pub struct ContactFlow<'a, H: ?Sized> {
    pub hamiltonian: &'a H,
    names: Option<Vec<String>>,
}

impl<'a, H: PhaseFunction + ?Sized> ContactFlow<'a, H> {
    pub fn new(hamiltonian: &'a H) -> Self {
        Self {
            hamiltonian,
            names: None,
        }
    }

    /// Overrides the column names, e.g. `(z, x, y)` for a non-mechanical chart.
    pub fn with_layout(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }
}

impl<H: PhaseFunction + ?Sized> VectorField for ContactFlow<'_, H> {
    fn dim(&self) -> usize {
        1 + 2 * self.hamiltonian.dof()
    }
    fn layout(&self) -> Vec<String> {
        self.names
            .clone()
            .unwrap_or_else(|| contact_layout(self.hamiltonian.dof()))
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        ensure_dim(self.dim(), x.len())?;
        let v = contact_vector_field(self.hamiltonian, &DarbouxPoint::from_state(x)?)?;
        dx.copy_from_slice(&v.to_vec());
        Ok(())
    }
}

/// `∂/∂t + X_h` on states `(t, s, q.., p..)`.
pub struct ExtendedFlow<'a, H: ?Sized> {
    pub hamiltonian: &'a H,
}

impl<'a, H: TimeDependentHamiltonian + ?Sized> ExtendedFlow<'a, H> {
    pub fn new(hamiltonian: &'a H) -> Self {
        Self { hamiltonian }
    }
}

impl<H: TimeDependentHamiltonian + ?Sized> VectorField for ExtendedFlow<'_, H> {
    fn dim(&self) -> usize {
        2 + 2 * self.hamiltonian.dof()
    }
    fn layout(&self) -> Vec<String> {
        let mut names = vec!["t".to_string()];
        names.extend(contact_layout(self.hamiltonian.dof()));
        names
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        ensure_dim(self.dim(), x.len())?;
        let v = evolution_field(self.hamiltonian, &ExtendedPoint::from_state(x)?)?;
        dx.copy_from_slice(&v.to_vec());
        Ok(())
    }
}

/// `X_L` on states `(q.., q̇.., s)`.
pub struct HerglotzFlow<'a, L: ?Sized> {
    pub lagrangian: &'a L,
}

impl<'a, L: LagrangianModel + ?Sized> HerglotzFlow<'a, L> {
    pub fn new(lagrangian: &'a L) -> Self {
        Self { lagrangian }
    }
}

impl<L: LagrangianModel + ?Sized> VectorField for HerglotzFlow<'_, L> {
    fn dim(&self) -> usize {
        1 + 2 * self.lagrangian.dof()
    }
    fn layout(&self) -> Vec<String> {
        let n = self.lagrangian.dof();
        let mut names = indexed("q", n);
        names.extend(indexed("qdot", n));
        names.push("s".into());
        names
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        ensure_dim(self.dim(), x.len())?;
        let v = lagrangian_field(self.lagrangian, &LagrangianPoint::from_state(x)?)?;
        dx.copy_from_slice(&v.to_vec());
        Ok(())
    }
}

/// A vector field given by a closure, for ad-hoc systems and tests.
pub struct FnField<F> {
    layout: Vec<String>,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    pub fn new(layout: Vec<String>, f: F) -> Self {
        Self { layout, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    fn dim(&self) -> usize {
        self.layout.len()
    }
    fn layout(&self) -> Vec<String> {
        self.layout.clone()
    }
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        ensure_dim(self.dim(), x.len())?;
        (self.f)(x, dx)
    }
}
