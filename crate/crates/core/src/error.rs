use thiserror::Error;

use crate::poly::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("degree overflow: need moments up to degree {required}, have {available}")]
    DegreeOverflow { required: usize, available: usize },

    #[error("moment sequence is missing the entry for {0}")]
    MissingMoment(MultiIndex),

    #[error("moment sequence has an unexpected entry {0}")]
    UnexpectedMoment(MultiIndex),

    #[error("s_0 is not finite")]
    NonFiniteMass,

    #[error("symmetric eigensolver did not converge")]
    EigenFailure,

    #[error("L(1) = 0, so the functional vanishes identically")]
    TrivialFunctional,

    #[error("L(1) = {0} < 0, functional is not positive")]
    NotPositive(f64),

    #[error("sequence is not normalized (s_0 = {0})")]
    NotNormalized(f64),

    #[error("marginal moment m_{index} = {value} is negative")]
    NegativeMoment { index: usize, value: f64 },

    #[error("hypothesis check failed: {0}")]
    HypothesisFailure(String),

    #[error("moment matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("moment matrix has numerical rank 0 although s_0 > 0")]
    RankCollapse,

    #[error(
        "moment data is not flat at level {level}: rank {rank} vs {previous_rank} one level down"
    )]
    NotFlat {
        level: usize,
        rank: usize,
        previous_rank: usize,
    },

    #[error("multiplication matrices do not commute: {norm:e} > {bound:e}")]
    CommutatorTooLarge { norm: f64, bound: f64 },

    #[error("weight system is ill conditioned: {0}")]
    IllConditionedWeights(String),

    #[error("recovered measure misses the moments: residual {residual:e} > {tolerance:e}")]
    ReproductionFailure { residual: f64, tolerance: f64 },

    #[error("no preimage found for atom {atom}")]
    NoPreimage { atom: usize },

    #[error("points outside K(f): {0:?}")]
    MembershipViolation(Vec<usize>),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
