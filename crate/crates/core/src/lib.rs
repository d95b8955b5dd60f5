//! Contact Hamiltonian and Herglotz dynamics in Darboux coordinates, with a
//! harness that verifies generalized virial theorems on a catalog of
//! dissipative, driven, stochastic and reaction systems.
//!
//! - [`contact`]: vector fields, brackets and the Reeb derivative.
//! - [`extended`]: time-dependent Hamiltonians on `(t, s, q, p)`.
//! - [`herglotz`]: contact Lagrangian dynamics and the Legendre map.
//! - [`integrate`]: RK4, Dormand–Prince 5(4), Euler–Maruyama and averaging.
//! - [`virial`]: term averages, the exact finite-horizon identity, ensembles.
//! - [`systems`]: the catalog.
//! - [`oracle`]: finite-difference checks of analytic partials.

pub mod contact;
pub mod error;
pub mod extended;
pub mod herglotz;
pub mod integrate;
pub mod oracle;
pub mod systems;
pub mod virial;

pub use error::{Error, Result};
