use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

/// A real-valued function of a flat state vector.
pub type StateObservable = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Why an integration stopped before reaching its horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    NonFinite { time: f64, component: usize },
    StepUnderflow { time: f64, step: f64 },
    FieldError { time: f64, message: String },
}

impl AbortReason {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            AbortReason::NonFinite { .. } => "non_finite_state",
            AbortReason::StepUnderflow { .. } => "step_underflow",
            AbortReason::FieldError { .. } => "field_error",
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            AbortReason::NonFinite { time, .. }
            | AbortReason::StepUnderflow { time, .. }
            | AbortReason::FieldError { time, .. } => *time,
        }
    }
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::NonFinite { time, component } => {
                write!(f, "non_finite_state at t={time} (component {component})")
            }
            AbortReason::StepUnderflow { time, step } => {
                write!(f, "step_underflow at t={time} (step {step:e})")
            }
            AbortReason::FieldError { time, message } => {
                write!(f, "field_error at t={time}: {message}")
            }
        }
    }
}

/// Provenance carried by every trajectory and report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetadata {
    pub system: String,
    pub params: Vec<(String, f64)>,
    pub integrator: String,
    pub step: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Time-ordered samples of a flow. Times are elapsed times from the initial
/// state and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub layout: Vec<String>,
    pub meta: RunMetadata,
    pub abort: Option<AbortReason>,
}

impl Trajectory {
    pub fn new(layout: Vec<String>, meta: RunMetadata) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            layout,
            meta,
            abort: None,
        }
    }

    pub(crate) fn push(&mut self, t: f64, state: &[f64]) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.states.push(state.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn first_state(&self) -> Option<&[f64]> {
        self.states.first().map(Vec::as_slice)
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Column index of a named state component.
    pub fn component(&self, name: &str) -> Option<usize> {
        self.layout.iter().position(|c| c == name)
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index]).collect()
    }

    /// Writes `t,<layout>,<observable names>` then one row per sample with 17
    /// significant digits.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        observables: &[(String, StateObservable)],
    ) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.layout.iter().cloned());
        header.extend(observables.iter().map(|(n, _)| n.clone()));
        writeln!(out, "{}", header.join(","))?;
        let mut row = String::new();
        for (t, state) in self.times.iter().zip(&self.states) {
            row.clear();
            row.push_str(&fmt_f64(*t));
            for v in state {
                row.push(',');
                row.push_str(&fmt_f64(*v));
            }
            for (_, f) in observables {
                row.push(',');
                row.push_str(&fmt_f64(f(state)));
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits; parses back to the same
/// double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
