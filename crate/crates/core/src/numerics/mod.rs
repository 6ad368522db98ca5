//! Log-space primitives shared by the rest of the crate.

pub mod extended;
pub mod quadrature;
pub mod signed_log;
pub mod special;

pub use signed_log::{log_add_exp, log_sum_exp, signed_log_sum, CancellationReport, SignedLog, CANCELLATION_GUARD_DIGITS};
pub use special::{
    harmonic, ln_beta, ln_gamma, log_binomial, log_binomial_pmf, log_factorial, log_falling_factorial,
    log_poisson_pmf, log_rising_factorial, log_stirling1_row, log_stirling1_unsigned,
};

use crate::error::{Error, Result};

/// Absolute tolerance used by the Poisson-mixture quadrature.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// P(N = k) where N | X ~ Poisson(-θ ln X) and X ~ Beta(l-1, n-l+1).
///
/// Integrated after the substitution u = -ln x, which turns the mixing
/// density into exp(-(l-1)u)(1-e^{-u})^{n-l} and removes the log singularity.
pub fn beta_mixture_poisson_pmf(l: u32, n: u32, theta: f64, k: u32) -> Result<f64> {
    if l < 2 || l > n {
        return Err(Error::domain(format!("beta mixture needs 2 <= l <= n, got l={l}, n={n}")));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and nonnegative, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let a = (l - 1) as f64;
    let m = (n - l) as f64;
    let kf = k as f64;
    let log_norm = ln_beta(a, m + 1.0) + log_factorial(k as u64);
    let log_theta = theta.ln();
    let integrand = move |u: f64| -> f64 {
        if u <= 0.0 {
            return if k == 0 && n == l { (-log_norm).exp() } else { 0.0 };
        }
        let mut lg = -(a + theta) * u - log_norm;
        if m > 0.0 {
            lg += m * (-(-u).exp()).ln_1p();
        }
        if k > 0 {
            lg += kf * (log_theta + u.ln());
        }
        lg.exp()
    };
    // The integrand peaks near u = k / (l - 1 + θ).
    let scale = ((kf + 1.0) / (a + theta)).max(1e-3);
    let r = quadrature::integrate_to_infinity(integrand, 0.0, scale, QUADRATURE_TOL)?;
    Ok(r.value.clamp(0.0, 1.0))
}
