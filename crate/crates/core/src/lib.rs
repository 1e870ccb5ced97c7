//! Certification of (p,a,b)-convexity and the tightened Jensen-type bounds
//! built on it: shifted p-norm lower and upper bounds, risk measures,
//! moment generating function and log-likelihood bounds, and
//! Hermite-Hadamard inequalities including the Riemann-Liouville version.

// NaN must fail parameter checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexity;
pub mod digest;
pub mod distributions;
pub mod error;
pub mod functions;
pub mod hermite_hadamard;
pub mod jensen;
pub mod likelihood;
pub mod mgf;
pub mod numerics;
pub mod risk;

pub use convexity::{
    certify_d, certify_i, certify_lp, CertifyConfig, ConvexityCertificate, Verdict,
};
pub use distributions::{DensityFamily, MomentReport, RandomVariable};
pub use error::{Error, Result};
pub use functions::{
    compose_inverse, make_catalog, taylor_remainder, Domain, Family, FunctionSpec, Provenance,
};
pub use hermite_hadamard::{
    derivative_hh_bound, fractional_hh_bounds, gamma_coefficient, hh_bounds, rl_integral,
    taylor_hh, FractionalOrder, HHReport, RlSide,
};
pub use jensen::{
    jensen_lower, jensen_lower_decreasing, jensen_upper, BoundKind, BoundOptions, BoundReport,
};
pub use likelihood::{elbo_classical, elbo_tight, em_demo, loglik_exact, LikelihoodInstance};
pub use mgf::{am_gm_lower, mgf_lower, mgf_upper, MgfBoundReport};
pub use numerics::{QuadraturePlan, ToleranceProfile};
pub use risk::{
    certainty_equivalent, certify_p_more_risk_averse, compare_risk_aversion,
    falsify_p_more_risk_averse, risk_measure, RiskComparison, RiskMeasureReport,
};
