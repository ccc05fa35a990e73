use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("family mismatch: expected {expected}, found {found}")]
    FamilyMismatch { expected: String, found: String },

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid family identifier: {0}")]
    InvalidFamily(String),

    #[error("dense decomposition did not converge: {0}")]
    SolverFailure(String),

    #[error("near-singular point{}: gap {gap:e} below threshold {gap_min:e}", fmt_t(.t))]
    NearSingularPoint {
        t: Option<f64>,
        gap: f64,
        gap_min: f64,
    },

    #[error("argument is not in the image of ad_x (commutant residual {residual:e})")]
    NotInImage { residual: f64 },

    #[error("elements do not commute (bracket residual {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("vector is not in the closed Weyl chamber")]
    NotInChamber,

    #[error("t = {t} is outside the path domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("rank {rank} exceeds the enumeration limit {max}")]
    TooLarge { rank: usize, max: usize },

    #[error("cluster count changed across the stencil ({left} vs {right})")]
    ClusterMismatch { left: usize, right: usize },

    #[error("path derivative is not available")]
    DerivativeUnavailable,

    #[error("element is not in p: membership residual {residual:e} exceeds {tol:e}")]
    Membership { residual: f64, tol: f64 },

    #[error("invalid path specification: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("sample {index} (t = {t}): {source}")]
    Sample {
        index: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

fn fmt_t(t: &Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn at_sample(self, index: usize, t: f64) -> Error {
        match self {
            e @ Error::Sample { .. } => e,
            e => Error::Sample {
                index,
                t,
                source: Box::new(e),
            },
        }
    }

    /// Strips any per-sample wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } => source.root(),
            e => e,
        }
    }
}
