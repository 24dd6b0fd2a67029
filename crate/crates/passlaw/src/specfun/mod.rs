//! Special functions and numerical integration.
//!
//! Everything downstream of this module — closed-form pass@k curves,
//! compound count PMFs, asymptotic tail laws — reduces to three kernels:
//! log-gamma (and log-beta), the terminating Gauss hypergeometric sum
//! 2F1(−m, b; c; z), and adaptive Gauss–Kronrod quadrature with declared
//! endpoint exponents. All three are pure, reentrant, and safe for
//! unrestricted parallel use.

mod gamma;
mod hyp2f1;
mod quad;

pub use gamma::{ln_beta, ln_gamma};
pub use hyp2f1::{gauss_2f1_terminating, ln_gauss_2f1_terminating};
pub use quad::{
    integrate, integrate_with_endpoints, QuadratureConfig, QuadratureResult,
};

pub(crate) use gamma::ln_gamma_delta;
pub(crate) use hyp2f1::ln_binomial;
pub(crate) use quad::fail_integral_near_zero;
