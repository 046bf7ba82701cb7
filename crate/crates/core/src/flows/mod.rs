//! Discrete-time flows: proximal point, cyclic proximal splitting and the
//! stochastic iterations for finitely supported measures of functionals.
//! Every run returns a [`RunRecord`] with per-iterate certificates.

mod deterministic;
mod record;
mod stochastic;

pub use deterministic::{
    cyclic_ppa, envelope_closed_form, envelope_constant, envelope_kconvex, envelope_sequence, ppa,
    FlowMode,
};
pub use record::{
    fmt_num, Event, FlowKind, FunctionalSummary, IterateRow, Residuals, RunRecord, RunStatus,
    Violation,
};
pub use stochastic::{
    expectation_and_variance, inductive_mean, jensen_run, reference_minimizer, stochastic_ppa,
    stochastic_ppa_with_draws, Expectation, MeasureSpec, Minimizer,
};

use crate::scalar::Scalar;
use crate::spaces::Point;

/// Options shared by all flows.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions<T> {
    /// Point the certificates are measured against (a minimizer, or `𝔼μ`).
    pub reference: Option<Point<T>>,
    /// Stop once a full cycle moves every iterate less than this.
    pub stop_tol: Option<T>,
}

impl<T: Scalar> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            reference: None,
            stop_tol: Some(T::cst(1e-12)),
        }
    }
}

impl<T: Scalar> FlowOptions<T> {
    pub fn with_reference(reference: Point<T>) -> Self {
        Self {
            reference: Some(reference),
            ..Self::default()
        }
    }
}
