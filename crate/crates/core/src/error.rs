use thiserror::Error;

/// Errors raised while validating [`crate::params::ModelParams`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("span length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("coefficient `{name}` violates its sign constraint: {value}")]
    NegativeCoefficient { name: &'static str, value: f64 },
    #[error("damping location must satisfy 0 < xi < ell (xi = {xi}, ell = {ell})")]
    XiOutOfRange { xi: f64, ell: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] ParamError),

    #[error("mode count must be at least 1")]
    NoModes,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coefficient in modal state")]
    NonFiniteState,

    #[error("shift {re}{im:+}i is numerically singular (sigma_min = {sigma_min:e}, norm = {norm:e})")]
    SingularShift {
        re: f64,
        im: f64,
        sigma_min: f64,
        norm: f64,
    },

    #[error("shifted solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("nonsymmetric eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("damping location is not rational; a search window must be supplied")]
    IrrationalXi,

    #[error("damping location {xi} is not a multiple of the grid spacing {dx}")]
    IncommensurableXi { xi: f64, dx: f64 },

    #[error("characteristics solver handles the decoupled wave only (k = {0})")]
    CoupledRegime(f64),

    #[error("{0} is outside the domain [0, 1]")]
    DomainError(f64),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("one-sided spring is not differentiable at this state")]
    NondifferentiableFamily,

    #[error("fixed-point iteration diverged after {iterations} iterations (contraction estimate {contraction:.3})")]
    FixedPointDivergence { iterations: usize, contraction: f64 },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("record stride is {0}; per-step audits need stride 1")]
    StrideTooCoarse(usize),

    #[error("energy vanishes inside the fit window")]
    ZeroEnergy,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
