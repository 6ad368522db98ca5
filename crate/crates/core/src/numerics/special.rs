//! Gamma-family functions, Stirling numbers and discrete log-pmfs.

use super::signed_log::log_add_exp;
use crate::error::{Error, Result};

/// ln Γ(x) for x > 0 (musl-derived, about 1 ulp).
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln n!
pub fn log_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln C(n, k); -inf when k > n.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

// Below this length the product is summed directly.
const DIRECT_PRODUCT_LIMIT: u64 = 64;

/// ln x(x+1)...(x+n-1).
pub fn log_rising_factorial(x: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("rising factorial ({x})_({n}) has a nonpositive factor")));
    }
    if n <= DIRECT_PRODUCT_LIMIT {
        Ok((0..n).map(|j| (x + j as f64).ln()).sum())
    } else {
        Ok(ln_gamma(x + n as f64) - ln_gamma(x))
    }
}

/// ln x(x-1)...(x-n+1).
pub fn log_falling_factorial(x: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let last = x - (n - 1) as f64;
    if !x.is_finite() || last <= 0.0 {
        return Err(Error::domain(format!("falling factorial {x}_[{n}] has a nonpositive factor")));
    }
    log_rising_factorial(last, n)
}

/// Row n of ln|S(n,k)|, k = 0..=n. Entry k = 0 is -inf except for n = 0.
pub fn log_stirling1_row(n: usize) -> Vec<f64> {
    let mut row = vec![f64::NEG_INFINITY; n + 1];
    row[0] = 0.0;
    for m in 1..=n {
        // |S(m,k)| = |S(m-1,k-1)| + (m-1)|S(m-1,k)|, updated in place from the top.
        let lm = ((m - 1) as f64).ln();
        for k in (1..=m).rev() {
            let keep = if k <= m - 1 { row[k] + lm } else { f64::NEG_INFINITY };
            row[k] = log_add_exp(row[k - 1], keep);
        }
        row[0] = f64::NEG_INFINITY;
    }
    row
}

/// ln of the unsigned Stirling number of the first kind |S(n,k)|.
pub fn log_stirling1_unsigned(n: usize, k: usize) -> Result<f64> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::domain(format!("Stirling number |S({n},{k})| outside the triangle")));
    }
    Ok(log_stirling1_row(n)[k])
}

pub fn log_poisson_pmf(lambda: f64, s: u64) -> f64 {
    if lambda == 0.0 {
        return if s == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + s as f64 * lambda.ln() - log_factorial(s)
}

pub fn log_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let b = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    log_binomial(n, k) + a + b
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Harmonic number Σ_{j=1}^{m} 1/j.
pub fn harmonic(m: u64) -> f64 {
    (1..=m).map(|j| 1.0 / j as f64).sum()
}
