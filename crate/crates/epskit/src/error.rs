use thiserror::Error;

/// Errors produced by analysis, synthesis, and simulation routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite entry in {context}")]
    NonFinite { context: &'static str },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("F is not Schur stable (spectral radius {rho:.6e} >= 1)")]
    UnstableF { rho: f64 },

    #[error("W is not symmetric (asymmetry {asymmetry:.3e})")]
    NonSymmetricW { asymmetry: f64 },

    #[error("alpha = {alpha} outside admissible interval ({lo}, {hi})")]
    AlphaOutOfRange { alpha: f64, lo: f64, hi: f64 },

    #[error("alpha = {alpha} within guard band of interval boundary ({lo}, {hi})")]
    SingularLimit { alpha: f64, lo: f64, hi: f64 },

    #[error("Riccati iteration found no stabilizing solution: {reason}")]
    NoStabilizingSolution { reason: String },

    #[error("inner matrix is singular or ill-conditioned (cond ~ {cond:.3e})")]
    SingularInnerMatrix { cond: f64 },

    #[error("system is not Schur stable (spectral radius {rho:.6e} >= 1)")]
    UnstableSystem { rho: f64 },

    #[error("system must be strictly proper (D = 0) for this operation")]
    NotStrictlyProper,

    #[error("bad sweep interval: need 0 < lo < hi < 1 and points >= 2, got ({lo}, {hi}), {points}")]
    BadInterval { lo: f64, hi: f64, points: usize },

    #[error("no feasible point found on the alpha grid")]
    AllInfeasible,

    #[error("plant fails structural assumptions: {failed}")]
    StructuralAssumptionViolated { failed: String },

    #[error("separation identity violated: direct norm {direct:.12e} vs trace formula {formula:.12e}")]
    SeparationCheckFailed { direct: f64, formula: f64 },

    #[error("internal cross-check '{what}' failed: {lhs:.12e} vs {rhs:.12e}")]
    ConsistencyCheckFailed { what: &'static str, lhs: f64, rhs: f64 },

    #[error("matrix {what} is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { what: &'static str, min_eig: f64 },

    #[error("{what} did not converge within {limit} iterations")]
    ConvergenceFailure { what: &'static str, limit: usize },

    #[error("state overflow at step {step} (|x| > 1e15, system appears unstable)")]
    Overflow { step: usize },

    #[error("bad disturbance spec: {reason}")]
    BadSpec { reason: String },

    #[error("bad projection plane ({i}, {j}) for state dimension {n}")]
    BadPlane { i: usize, j: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
