use std::io;

/// Errors produced by graph ingestion, walk counting and the centrality solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("refusing enumeration: {0}")]
    TooLarge(String),

    #[error("alpha = {alpha} outside convergence region ({reason}); alpha* estimate {}", fmt_opt(.alpha_star))]
    OutsideConvergence {
        alpha: f64,
        alpha_star: Option<f64>,
        reason: String,
    },

    #[error("series diverged: {0}")]
    Divergence(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error(
        "power iteration did not converge after {iterations} applies (last estimate {estimate})"
    )]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("closed form does not apply: {0}")]
    Unsupported(String),

    #[error("cannot normalize or rank a zero vector")]
    ZeroVector,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("fixture self-check failed: {0}")]
    Fixture(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn fmt_opt(v: &Option<f64>) -> String {
    match v {
        Some(a) => format!("{a:.6}"),
        None => "unavailable".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
