use thiserror::Error;

/// Failure modes of the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("potential not evaluable: non-finite value at u = {u}")]
    NotEvaluable { u: f64 },
    #[error("profile tail not reached: 1 - |g(t_max)| = {gap:e}")]
    TailNotReached { gap: f64 },
    #[error("profile not monotone at t = {t}")]
    NonMonotone { t: f64 },
    #[error("tail extrapolation unstable: estimates {first} and {second}")]
    ExtrapolationUnstable { first: f64, second: f64 },
    #[error("eps too large for the cutoff construction: eps = {eps}")]
    EpsTooLarge { eps: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("profile range too short: need t_max >= {needed}, have {have}")]
    ProfileRangeTooShort { needed: f64, have: f64 },
    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
    #[error("solution became non-finite before r = {r}")]
    BlowDown { r: f64 },
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("maximum iterations exceeded ({iterations}), residual {residual:e}")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("ordering violated at component {component}")]
    OrderingViolated { component: usize },
    #[error("level set is not a graph: column {column} has {found} crossings, expected {expected}")]
    NonGraphLevelSet { column: usize, found: usize, expected: usize },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("Fermi frame folds over: {0}")]
    FoldOver(String),
    #[error("interfaces too close: separation {separation} < {required}")]
    SeparationTooSmall { separation: f64, required: f64 },
    #[error("test function leaves the frame band: {0}")]
    BandExceeded(String),
    #[error("unknown potential `{0}`")]
    UnknownPotential(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("bad configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
