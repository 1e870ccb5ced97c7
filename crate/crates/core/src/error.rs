use thiserror::Error;

/// Errors raised by the numerical kernels and the bound engines.
///
/// Certification failures are not errors: they are reported through
/// [`crate::convexity::Verdict::Fail`] on the certificate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("quadrature did not converge (best estimate {best}, error estimate {error_estimate})")]
    Convergence { best: f64, error_estimate: f64 },

    #[error("bracket error: target {target} not within [{f_lo}, {f_hi}]")]
    Bracket { target: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid function parameters: {0}")]
    Construction(String),

    #[error("derivative of order {requested} unavailable (function carries {available})")]
    Order { requested: usize, available: usize },

    #[error("function is not strictly increasing: derivative {derivative} at x = {x}")]
    Monotonicity { x: f64, derivative: f64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("moment of order {order} is infinite or does not converge")]
    MomentInfinite { order: u32 },

    #[error("domain mismatch: random variable support [{support_lo}, {support_hi}] not inside function domain [{domain_lo}, {domain_hi}]")]
    DomainMismatch {
        support_lo: f64,
        support_hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },

    #[error("bound requires a bounded support, got upper end {0}")]
    UnboundedSupport(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("bound requires a passing {expected} certificate: {reason}")]
    CertificateRequired { expected: String, reason: String },

    #[error("invalid likelihood instance: {0}")]
    InvalidInstance(String),

    #[error("empty data set")]
    EmptyData,

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
