use thiserror::Error;

/// Errors reported by the solvers and the resonance arithmetic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode k={k} is not admissible (no Lyapunov family)")]
    InadmissibleMode { k: usize },

    #[error("eigensolver failed for mode k={k}: {detail}")]
    Eigensolver { k: usize, detail: String },

    #[error("constraint set is unbalanced in stage `{stage}`: {detail}")]
    UnbalancedConstraints { stage: String, detail: String },

    #[error("Newton iteration did not converge: {iterations} iterations, residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton solve ({detail})")]
    SingularJacobian { detail: String },

    #[error("continuation stalled after {steps} steps (step size below {ds_min:.3e})")]
    Stalled { steps: usize, ds_min: f64 },

    #[error("pipeline stage failed: {0}")]
    Stage(String),

    #[error("no sign change of the monitor brackets the target {target}")]
    NoBracket { target: f64 },

    #[error("{ell} and {m} are not coprime")]
    NotCoprime { ell: i64, m: i64 },

    #[error("orbit ratio {found:.12} does not match {ell}:{m} (|Δ| = {delta:.3e})")]
    RatioMismatch { ell: i64, m: i64, found: f64, delta: f64 },

    #[error("winding center lies on the curve (min distance {min_dist:.3e})")]
    CenterOnCurve { min_dist: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },

    #[error("invalid run configuration: {0}")]
    Config(String),
}
