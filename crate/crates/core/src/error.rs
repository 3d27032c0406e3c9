use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SrError>;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Selection,
    Shift,
    Sampling,
    Solve,
    SolveShifted,
    Matching,
    Dealias,
    Amplitudes,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Selection => "rate selection",
            Stage::Shift => "co-prime shift",
            Stage::Sampling => "sampling",
            Stage::Solve => "decimated solve",
            Stage::SolveShifted => "shifted solve",
            Stage::Matching => "matching",
            Stage::Dealias => "de-aliasing",
            Stage::Amplitudes => "amplitude fit",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum SrError {
    #[error("undefined separation: at least two nodes are required")]
    UndefinedSeparation,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid spike train: {0}")]
    InvalidSpike(String),

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("frequency {omega} is outside the band [-{omega_max}, {omega_max}]")]
    OutOfBand { omega: f64, omega_max: f64 },

    #[error("wrong sample count: expected {expected}, got {got}")]
    SampleCount { expected: usize, got: usize },

    #[error("index error: {0}")]
    Index(String),

    #[error("ratios undefined: V is singular")]
    RatiosUndefined,

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("shift infeasible for rho = {rho}")]
    ShiftInfeasible { rho: u64 },

    #[error("degenerate sample set (condition number {cond:.3e})")]
    DegenerateSampleSet { cond: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("model order unreachable: numerical rank {rank} < {n}")]
    ModelOrderUnreachable { rank: usize, n: usize },

    #[error("insufficient consensus: {found} histogram peaks for {n} nodes")]
    InsufficientConsensus { found: usize, n: usize },

    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("amplitude underflow, de-aliasing unreliable (|a| = {modulus:.3e}, floor {floor:.3e})")]
    AmplitudeUnderflow { modulus: f64, floor: f64 },

    #[error("rho = {rho} and t = {t} are not co-prime")]
    NotCoprime { rho: u64, t: u64 },

    #[error("ambiguous alias: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    AmbiguousAlias { residual: f64, tol: f64 },

    #[error("factors undefined; report raw errors")]
    FactorsUndefined,

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<SrError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SrError {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(SrError) -> SrError {
        move |e| SrError::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// Strip stage tags and return the innermost error.
    pub fn root(&self) -> &SrError {
        match self {
            SrError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
