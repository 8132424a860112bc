use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("packet under-resolved: sigma {sigma} < 2 x spacing {spacing}")]
    UnderResolved { sigma: f64, spacing: f64 },
    #[error("state clipped by the periodic seam: {norm:e} of norm within 4 cells of the boundary")]
    Clipped { norm: f64 },
    #[error("degenerate interval: {0}")]
    Degenerate(String),
    #[error("step-size audit failed: {0}")]
    StepAudit(String),
    #[error("time {t} outside the scripted range [{lo}, {hi}]")]
    OutsideScript { t: f64, lo: f64, hi: f64 },
    #[error("body moved {moved} in one call, more than one cell ({spacing}); subdivide the step")]
    SweepTooFast { moved: f64, spacing: f64 },
    #[error("sink failure: {norm:e} of norm leaked past the absorbing shell of body {body}")]
    InteriorLeak { body: usize, norm: f64 },
    #[error("negative total capture {0:e}: flux sign error")]
    NegativeCapture(f64),
    #[error("norm audit failed: residual {residual:e} exceeds {tolerance:e}")]
    NormAudit { residual: f64, tolerance: f64 },
    #[error("probe signal not decayed: end magnitude ratio {ratio:e}")]
    NotDecayed { ratio: f64 },
    #[error("probe signal too short: {0} samples, need at least 64")]
    TooFewSamples(usize),
    #[error("invalid mode index {0}")]
    InvalidMode(usize),
    #[error("zero mode {0} cannot be occupied or raised")]
    ZeroModeOccupied(usize),
    #[error("unstable lattice: {0}")]
    UnstableLattice(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("state touches the truncation edge: key with {n} quanta, max_total {max_total}")]
    TruncationEdge { n: usize, max_total: usize },
    #[error("non-positive input: {0}")]
    NonPositive(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Errors that come from a failed numerical audit rather than bad input.
    pub fn is_audit_failure(&self) -> bool {
        matches!(
            self,
            Error::StepAudit(_)
                | Error::InteriorLeak { .. }
                | Error::NegativeCapture(_)
                | Error::NormAudit { .. }
                | Error::NotDecayed { .. }
                | Error::UnstableLattice(_)
        )
    }
}
