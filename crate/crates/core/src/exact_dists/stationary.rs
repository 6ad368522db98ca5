//! Stationary laws of S_n (segregating sites) and K_n (alleles), and the ESF.

use super::lineages::Precision;
use crate::error::{Error, Result};
use crate::numerics::extended::{Ext, INITIAL_BITS, MAX_BITS};
use crate::numerics::{
    log_add_exp, log_binomial, log_factorial, log_rising_factorial, log_stirling1_row, signed_log_sum, SignedLog,
    CANCELLATION_GUARD_DIGITS,
};

fn check_theta(theta: f64) -> Result<()> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    Ok(())
}

/// ln P(S_n = s) for s = 0..=s_max.
///
/// Uses (m-1+θ) P(S_m = s) = θ P(S_m = s-1) + (m-1) P(S_{m-1} = s), m = 2..n.
pub fn log_seg_sites_distribution(n: u32, theta: f64, s_max: u32) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    check_theta(theta)?;
    let len = s_max as usize + 1;
    let mut row = vec![f64::NEG_INFINITY; len];
    row[0] = 0.0;
    if theta == 0.0 {
        return Ok(row);
    }
    let lt = theta.ln();
    for m in 2..=n {
        let a = ((m - 1) as f64).ln();
        let d = ((m - 1) as f64 + theta).ln();
        let mut next = vec![f64::NEG_INFINITY; len];
        for s in 0..len {
            let from_mut = if s > 0 { lt + next[s - 1] } else { f64::NEG_INFINITY };
            next[s] = log_add_exp(from_mut, a + row[s]) - d;
        }
        row = next;
    }
    Ok(row)
}

/// P(S_n = s) for s = 0..=s_max.
pub fn seg_sites_distribution(n: u32, theta: f64, s_max: u32) -> Result<Vec<f64>> {
    Ok(log_seg_sites_distribution(n, theta, s_max)?.into_iter().map(f64::exp).collect())
}

pub fn seg_sites_pmf(n: u32, theta: f64, s: u32) -> Result<f64> {
    Ok(seg_sites_distribution(n, theta, s)?[s as usize])
}

/// P(S_n = s) from the alternating sum
/// ((n-1)/θ) Σ_{l=1}^{n-1} (-1)^{l-1} C(n-2, l-1) (θ/(l+θ))^{s+1}.
pub fn seg_sites_pmf_alternating(n: u32, theta: f64, s: u32, precision: Precision) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    check_theta(theta)?;
    if n == 1 || theta == 0.0 {
        return Ok(if s == 0 { 1.0 } else { 0.0 });
    }
    let lt = theta.ln();
    let pre = ((n - 1) as f64).ln() - lt;
    let terms: Vec<SignedLog> = (1..n)
        .map(|l| {
            let mag = pre + log_binomial((n - 2) as u64, (l - 1) as u64) + (s as f64 + 1.0) * (lt - (l as f64 + theta).ln());
            SignedLog::new(if l % 2 == 1 { 1 } else { -1 }, mag)
        })
        .collect();
    let rep = signed_log_sum(&terms);
    match precision {
        Precision::Double => Ok(rep.check(CANCELLATION_GUARD_DIGITS, "segregating sites alternating sum")?.to_f64()),
        Precision::Adaptive => {
            if rep.cancellation_digits <= 2.0 {
                Ok(rep.value().max(0.0))
            } else {
                seg_sites_alternating_extended(n, theta, s)
            }
        }
    }
}

fn seg_sites_alternating_extended(n: u32, theta: f64, s: u32) -> Result<f64> {
    let mut bits = INITIAL_BITS;
    while bits <= MAX_BITS {
        let th = Ext::from_f64(theta, bits);
        let mut acc = Ext::zero(bits);
        let mut binom = Ext::one(bits);
        let mut max_log = f64::NEG_INFINITY;
        for l in 1..n {
            if l > 1 {
                // C(n-2, l-1) = C(n-2, l-2) (n-l)/(l-1)
                binom = &(&binom * &Ext::from_u64((n - l) as u64, bits)) / &Ext::from_u64((l - 1) as u64, bits);
            }
            let ratio = &th / &(&th + &Ext::from_u64(l as u64, bits));
            let term = &binom * &ratio.powu(s as u64 + 1);
            max_log = max_log.max(term.ln_abs_f64());
            acc = if l % 2 == 1 { &acc + &term } else { &acc - &term };
        }
        let err_log = max_log + (n as f64).ln() - (bits as f64 - 8.0) * std::f64::consts::LN_2;
        if err_log < acc.ln_abs_f64() + (1e-16f64).ln() || err_log < -745.0 {
            let v = &acc * &(&Ext::from_u64((n - 1) as u64, bits) / &th);
            return Ok(v.to_f64().max(0.0));
        }
        let lost = (max_log - acc.ln_abs_f64().max(-800.0)) / std::f64::consts::LN_2;
        bits = (lost.ceil() as usize + 96).max(bits * 2);
    }
    Err(Error::PrecisionLoss {
        digits: f64::INFINITY,
        guard: MAX_BITS as f64 * std::f64::consts::LOG10_2,
        context: "segregating sites alternating sum (extended precision exhausted)".into(),
    })
}

/// Coefficients of H_n(z) = Π_{j=1}^{n-1} (1 + θ(1-z)/j)^{-1} up to z^{s_max},
/// by repeated division of power series.
pub fn seg_sites_pgf_coefficients(n: u32, theta: f64, s_max: u32) -> Result<Vec<f64>> {
    check_theta(theta)?;
    let len = s_max as usize + 1;
    let mut c = vec![0.0; len];
    c[0] = 1.0;
    for j in 1..n {
        // multiply by (1 + θ/j - (θ/j) z)^{-1} = (1/(1+u)) Σ (u/(1+u))^m z^m, u = θ/j.
        let u = theta / j as f64;
        let a = 1.0 / (1.0 + u);
        let b = u / (1.0 + u);
        let mut next = vec![0.0; len];
        for s in 0..len {
            next[s] = a * c[s] + if s > 0 { b * next[s - 1] } else { 0.0 };
        }
        c = next;
    }
    Ok(c)
}

/// ln P(K_n = k) for k = 0..=n (entry 0 is -inf for n >= 1).
pub fn log_num_alleles_distribution(n: u32, theta: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    let row = log_stirling1_row(n as usize);
    let denom = log_rising_factorial(theta, n as u64)?;
    let lt = theta.ln();
    Ok(row.iter().enumerate().map(|(k, ls)| k as f64 * lt + ls - denom).collect())
}

pub fn num_alleles_pmf(n: u32, theta: f64, k: u32) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::domain(format!("allele count must be in 1..={n}, got {k}")));
    }
    Ok(log_num_alleles_distribution(n, theta)?[k as usize].exp())
}

/// ln of the Ewens sampling formula probability of an unordered configuration
/// with multiplicity spectrum alpha (alpha[j] = number of types seen j times).
pub fn esf_log_probability(alpha: &[(u32, u32)], theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    let n: u64 = alpha.iter().map(|&(j, a)| j as u64 * a as u64).sum();
    if n == 0 {
        return Err(Error::domain("empty configuration"));
    }
    let mut lp = log_factorial(n) - log_rising_factorial(theta, n)?;
    for &(j, a) in alpha {
        if a == 0 {
            continue;
        }
        lp += a as f64 * (theta.ln() - (j as f64).ln()) - log_factorial(a as u64);
    }
    Ok(lp)
}
