//! Verification harness for the generalized virial theorems.
//!
//! For a bounded observable `G` the long-time average of its rate along the
//! flow vanishes. At finite horizon the identity `⟨X(G)⟩ = (G(T) − G(t₀))/(T − t₀)`
//! holds exactly and is checked independently of whether `G` stays bounded.

mod ensemble;
mod observable;
mod report;

pub use ensemble::{ensemble_report, EnsembleOptions};
pub use observable::{
    rate_along, virial_observable, virial_rate, FnStateFunction, PhaseObservable, PhaseVirial,
    StateFunction, VelocityVirial, VirialObservable, VirialRate,
};
pub use report::{
    boundary_term, boundary_term_window, boundedness, parse_report, running_averages,
    virial_report, Boundedness, Estimate, ReportOptions, RunningAverages, TermAverage, Verdict,
    VirialReport, VirialSetup, VirialTerm,
};
