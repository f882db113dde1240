//! Error type shared by all toolkit modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {n}")]
    GridTooSmall { n: usize, min: usize },

    #[error("grid bounds invalid: x_min = {x_min} must be finite and < x_max = {x_max}")]
    GridBounds { x_min: f64, x_max: f64 },

    #[error("value array length {len} does not match grid size {n}")]
    LengthMismatch { len: usize, n: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("kink pair requires y2 > y1, got ({y1}, {y2})")]
    InvalidPair { y1: f64, y2: f64 },

    #[error("separation {separation} is not above the weak-interaction minimum {min}")]
    SeparationTooSmall { separation: f64, min: f64 },

    #[error("outside lemma domain: need alpha >= beta > 0 and a > 1, got alpha = {alpha}, beta = {beta}, a = {a}")]
    InteractionDomain { alpha: f64, beta: f64, a: f64 },

    #[error("separations must be strictly increasing and each > 1")]
    BadSeparationList,

    #[error(
        "modulation did not converge after {iterations} iterations; \
         last pair ({y1}, {y2}), residuals ({r1:e}, {r2:e})"
    )]
    NoConvergence {
        iterations: usize,
        y1: f64,
        y2: f64,
        r1: f64,
        r2: f64,
    },

    #[error(
        "separation collapsed to {separation} (minimum {min}) after {iterations} iterations; \
         last pair ({y1}, {y2})"
    )]
    SeparationCollapse {
        iterations: usize,
        separation: f64,
        min: f64,
        y1: f64,
        y2: f64,
    },

    #[error("grid [{x_min}, {x_max}] does not cover the pair window [{need_min}, {need_max}]")]
    WindowTooSmall {
        x_min: f64,
        x_max: f64,
        need_min: f64,
        need_max: f64,
    },

    #[error("bordered system is numerically singular (near-degenerate constraints)")]
    SingularSystem,

    #[error("eigenvalue iteration failed to converge after {0} steps")]
    EigenNoConvergence(usize),

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("no converged records with resolvable residual norm")]
    NoValidRecords,

    #[error("csv parse error: {0}")]
    CsvParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
