//! Summary statistics: Watterson and Ewens estimators of θ, Tajima's D, and
//! the large-θ Poisson approximation to the allele frequency spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{harmonic, ln_gamma, log_add_exp, log_falling_factorial, log_poisson_pmf, log_sum_exp};

pub use crate::sample::FrequencySpectrum;

/// θ_W = s / Σ_{j=1}^{n-1} 1/j.
pub fn watterson_theta(s: u64, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("Watterson's estimator needs n >= 2"));
    }
    Ok(s as f64 / harmonic(n - 1))
}

/// E[K_n] = Σ_{j=0}^{n-1} θ/(θ+j).
pub fn expected_alleles(n: u64, theta: f64) -> f64 {
    (0..n).map(|j| theta / (theta + j as f64)).sum()
}

/// Root of E[K_n](θ) = k by bisection on ln θ.
pub fn ewens_mle_theta(k: u64, n: u64) -> Result<f64> {
    if n < 2 || k == 0 || k > n {
        return Err(Error::domain(format!("need 1 <= k <= n and n >= 2, got k={k}, n={n}")));
    }
    if k == 1 {
        return Err(Error::Boundary("k = 1: the Ewens estimate is 0".into()));
    }
    if k == n {
        return Err(Error::Boundary("k = n: the Ewens estimate is infinite".into()));
    }
    let target = k as f64;
    let f = |lt: f64| expected_alleles(n, lt.exp()) - target;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) > 0.0 {
        lo -= 2.0;
    }
    while f(hi) < 0.0 {
        hi += 2.0;
    }
    let mut f_lo = f(lo);
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        debug_assert!(fm >= f_lo, "E[K] must increase with θ");
        if fm < 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// E[α_1] = nθ/(n+θ-1) under the Ewens sampling formula.
pub fn expected_singletons(n: u64, theta: f64) -> f64 {
    n as f64 * theta / (n as f64 + theta - 1.0)
}

/// Mean pairwise difference from an unfolded site frequency spectrum,
/// `sfs[i-1]` = number of sites with i derived copies, i = 1..n-1.
pub fn pi_from_sfs(sfs: &[u64], n: u64) -> Result<f64> {
    if n < 2 || sfs.len() as u64 > n - 1 {
        return Err(Error::domain("spectrum longer than n - 1 or n < 2"));
    }
    let pairs = (n * (n - 1)) as f64 / 2.0;
    Ok(sfs.iter().enumerate().map(|(i, &x)| {
        let i = i as f64 + 1.0;
        x as f64 * i * (n as f64 - i)
    }).sum::<f64>() / pairs)
}

/// Tajima's D with the usual variance constants:
/// a1 = Σ 1/j, a2 = Σ 1/j², b1 = (n+1)/(3(n-1)), b2 = 2(n²+n+3)/(9n(n-1)),
/// c1 = b1 - 1/a1, c2 = b2 - (n+2)/(a1 n) + a2/a1², e1 = c1/a1, e2 = c2/(a1²+a2),
/// Var(π - θ_W) ≈ e1 s + e2 s(s-1).
pub fn tajimas_d(pi: f64, s: u64, n: u64) -> Result<f64> {
    if n < 4 {
        return Err(Error::domain("Tajima's D needs n >= 4"));
    }
    if s == 0 {
        return Err(Error::domain("Tajima's D is undefined with no segregating sites"));
    }
    let nf = n as f64;
    let a1 = harmonic(n - 1);
    let a2: f64 = (1..n).map(|j| 1.0 / (j as f64 * j as f64)).sum();
    let b1 = (nf + 1.0) / (3.0 * (nf - 1.0));
    let b2 = 2.0 * (nf * nf + nf + 3.0) / (9.0 * nf * (nf - 1.0));
    let c1 = b1 - 1.0 / a1;
    let c2 = b2 - (nf + 2.0) / (a1 * nf) + a2 / (a1 * a1);
    let e1 = c1 / a1;
    let e2 = c2 / (a1 * a1 + a2);
    let sf = s as f64;
    Ok((pi - sf / a1) / (e1 * sf + e2 * sf * (sf - 1.0)).sqrt())
}

/// E Z_j = (θ/j)(n/(n+θ))^j, the Poisson limit for α_j.
pub fn poisson_spectrum_approx(n: u64, theta: f64, j: u64) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("multiplicity index starts at 1"));
    }
    let nf = n as f64;
    Ok(theta / j as f64 * (j as f64 * (nf / (nf + theta)).ln()).exp())
}

/// P(Z ≥ observed) for Z ~ Poisson(mean).
///
/// Above the mean the upper tail is summed directly in log space; below it
/// the complement of the (then small) lower tail is used.
pub fn poisson_tail_test(observed: u64, mean: f64) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be finite and > 0, got {mean}")));
    }
    if observed == 0 {
        return Ok(1.0);
    }
    if observed as f64 > mean {
        let mut acc = f64::NEG_INFINITY;
        let mut z = observed;
        loop {
            let lp = log_poisson_pmf(mean, z);
            acc = log_add_exp(acc, lp);
            if lp < acc - 40.0 {
                break;
            }
            z += 1;
        }
        Ok(acc.exp().min(1.0))
    } else {
        Ok(1.0 - poisson_lower_tail(observed - 1, mean)?)
    }
}

/// P(Z ≤ upto).
pub fn poisson_lower_tail(upto: u64, mean: f64) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be finite and > 0, got {mean}")));
    }
    let terms: Vec<f64> = (0..=upto).map(|z| log_poisson_pmf(mean, z)).collect();
    Ok(log_sum_exp(&terms).exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorialMoment {
    /// E Π_j (α_j)_{[r_j]} under the Ewens sampling formula.
    pub exact: f64,
    /// Π_j (θ/j · n/(n+θ))^{r_j}.
    pub poisson_limit: f64,
}

/// Joint falling factorial moments of α_1..α_b, `r[j-1]` = r_j.
///
/// Exact: 1(m ≤ n) n!/(n-m)! Γ(θ+n-m)/Γ(θ+n) Π (θ/j)^{r_j}, m = Σ j r_j.
pub fn factorial_moment_check(n: u64, theta: f64, r: &[u64]) -> Result<FactorialMoment> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    let nf = n as f64;
    let mut m = 0u64;
    let mut log_prod = 0.0;
    let mut log_limit = 0.0;
    for (idx, &rj) in r.iter().enumerate() {
        let j = idx as u64 + 1;
        m += j * rj;
        log_prod += rj as f64 * (theta / j as f64).ln();
        log_limit += rj as f64 * ((theta / j as f64).ln() + (nf / (nf + theta)).ln());
    }
    let exact = if m > n {
        0.0
    } else {
        let lf = if m == 0 { 0.0 } else { log_falling_factorial(nf, m)? };
        (lf + ln_gamma(theta + nf - m as f64) - ln_gamma(theta + nf) + log_prod).exp()
    };
    Ok(FactorialMoment { exact, poisson_limit: log_limit.exp() })
}
