//! Error type shared by every numerical module.

use thiserror::Error;

/// Failures raised by the numerical pipeline.
///
/// Every variant that belongs to a point on a wave curve carries the wave
/// speed so that callers (the CLI in particular) can report where a sweep
/// broke down.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument is outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampled function that should be even has a significant odd part.
    #[error("symmetry violation: odd part {odd_norm:.3e} exceeds {tol:.3e}")]
    SymmetryViolation { odd_norm: f64, tol: f64 },

    /// The profile touched or crossed the wave speed (c - phi <= 0).
    #[error("gap violation at c = {c}: min(c - phi) = {min_gap:.3e}")]
    GapViolation { c: f64, min_gap: f64 },

    /// Newton did not reach the residual tolerance.
    #[error("Newton failed to converge at c = {c} after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { c: f64, iterations: usize, residual: f64 },

    /// Newton collapsed onto the trivial solution phi = 0.
    #[error("iteration collapsed to the trivial solution at c = {c}")]
    TrivialCollapse { c: f64 },

    /// Continuation step was halved below the minimum admissible size.
    #[error("continuation step underflow at c = {c} (step {step:.3e})")]
    StepUnderflow { c: f64, step: f64 },

    /// Right-hand side is not orthogonal to the kernel of a singular operator.
    #[error("solvability violation: kernel projection {projection:.3e}")]
    SolvabilityViolation { projection: f64 },

    /// Deflated operator is numerically singular.
    #[error("near-singular operator: condition number {condition:.3e}")]
    NearSingular { condition: f64 },

    /// A linear solve passed its pre-checks but failed the residual check.
    #[error("inaccurate solve: relative residual {residual:.3e}")]
    InaccurateSolve { residual: f64 },

    /// Adaptive ODE integration could not proceed.
    #[error("ODE integration failed at x = {x} (step {step:.3e})")]
    IntegrationFailure { x: f64, step: f64 },

    /// The two independent estimates of the Floquet discriminant disagree.
    #[error("inconsistent theta: derivative {derivative:.12e}, periodic fit {fit:.12e}")]
    InconsistentTheta { derivative: f64, fit: f64 },

    /// A Sylvester-type count came out negative, signalling a bookkeeping error.
    #[error("negative constrained count ({n_l} - {n0} - {z0})")]
    NegativeCount { n_l: usize, n0: usize, z0: usize },

    /// A symmetric eigensolve or factorisation failed.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// Time evolution produced a non-finite or exploding state.
    #[error("blow-up detected at t = {t}: sup|u| = {sup:.3e}")]
    BlowupDetected { t: f64, sup: f64 },
}

impl Error {
    /// Wave speed attached to the failure, if any.
    pub fn speed(&self) -> Option<f64> {
        match self {
            Error::GapViolation { c, .. }
            | Error::NoConvergence { c, .. }
            | Error::TrivialCollapse { c }
            | Error::StepUnderflow { c, .. } => Some(*c),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
