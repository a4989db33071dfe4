use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("root finder did not converge (worst residual {worst_residual:e})")]
    RootNonConvergence { worst_residual: f64 },

    #[error("denominator is identically zero")]
    ZeroDenominator,

    #[error("evaluation at {s} is too close to a pole (|den| = {den_abs:e})")]
    PoleProximity { s: Complex64, den_abs: f64 },

    #[error("evaluation at {s} overflowed")]
    Overflow { s: Complex64 },

    #[error("evaluation failed at omega = {omega}: {reason}")]
    GridEvaluation { omega: f64, reason: String },

    #[error("spectral factorization obstructed: {0}")]
    SpectralFactorization(String),

    #[error("interpolation point {point} has multiplicity {multiplicity}; only simple points are supported")]
    RepeatedInterpolationPoint { point: Complex64, multiplicity: usize },

    #[error("interpolation system degenerate: {0}")]
    DegenerateInterpolation(String),

    #[error("no optimal level found in bracket [{lo}, {hi}]: {reason}")]
    BracketFailure { lo: f64, hi: f64, reason: String },

    #[error("level {level} does not exceed the optimal level {gamma_opt}")]
    LevelNotAboveOptimal { level: f64, gamma_opt: f64 },

    #[error("free parameter violates the norm bound: {0}")]
    FreeParameterNorm(String),

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("contour passes within tolerance of a zero near {near}; perturb the window")]
    ContourTooClose { near: Complex64 },

    #[error("scan window does not enclose the region where the loop gain exceeds one: {0}")]
    WindowTooSmall(String),

    #[error("infinitely many right half plane zeros (asymptotic loop gain {limit} > 1)")]
    InfinitelyManyZeros { limit: f64 },

    #[error("Pick data invalid: {0}")]
    InvalidPickProblem(String),

    #[error("no integer tuple admits a positive semidefinite Pick matrix within the search range")]
    NoPsdTuple,

    #[error("S_U vanishes at omega = {omega}")]
    SensitivityZero { omega: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search exhausted: {0}")]
    Exhausted(String),

    #[error("certificates disagree: {0}")]
    CertificateContradiction(String),
}
