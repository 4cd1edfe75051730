//! Error type shared by every module of the crate.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A coherent-state label left the open unit disk.
    #[error("point {z} is outside the coherent-state domain |z| < 1")]
    OutOfDomain { z: Complex64 },

    /// A trajectory or iterate came within the hard guard of the disk
    /// boundary. We fail instead of clamping: clamping silently corrupts
    /// the dynamics exactly where instability sets in.
    #[error("disk boundary guard tripped ({which}, |z| = {abs_z:.17}{})",
            .t.map(|t| format!(", t = {t:.6e}")).unwrap_or_default())]
    BoundaryProximity {
        which: &'static str,
        abs_z: f64,
        t: Option<f64>,
    },

    /// The truncated Fock basis is too small for the requested state.
    #[error("Fock truncation insufficient: tail norm {tail_norm:.3e} exceeds {limit:.1e}")]
    TruncationInsufficient { tail_norm: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Adaptive integration drove the step size below the representable
    /// floor; the flow is effectively singular at `t`.
    #[error("step size underflow at t = {t:.12e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    /// A quasienergy spectrum was requested for a mode whose monodromy is
    /// hyperbolic.
    #[error("mode is unstable: |monodromy trace| = {trace_abs:.12} > 2")]
    UnstableMode { trace_abs: f64 },

    /// Two algebraically equivalent evaluation routes disagreed beyond
    /// the internal consistency tolerance.
    #[error("internal consistency failure: {0}")]
    ConsistencyFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
