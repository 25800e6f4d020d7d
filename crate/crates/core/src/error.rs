use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible Bernoulli correlation: p = {p}, tau = {tau} violates {bound}")]
    InfeasibleCorrelation { p: f64, tau: f64, bound: String },

    #[error("invalid atom covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("perturbation bound violated: {0}")]
    PerturbationBoundViolated(String),

    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },

    #[error("shifted matrix is numerically singular (sigma_min = {sigma_min:e})")]
    SingularShift { sigma_min: f64 },

    #[error("empirical measure needs at least one sample")]
    EmptySample,

    #[error("degenerate elliptic law: |rho| = {rho} must be < 1")]
    DegenerateLaw { rho: f64 },

    #[error("quadrature failed: error estimate {estimate:e} above tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("no fixed point after {iterations} iterations (residual {residual:e})")]
    NoFixedPoint { iterations: usize, residual: f64 },

    #[error("fixed point left the upper half-plane (alpha = {re} + {im}i)")]
    WrongBranch { re: f64, im: f64 },

    #[error("denominator vanished in the self-consistent equation")]
    PoleHit,

    #[error("invalid Stieltjes argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
