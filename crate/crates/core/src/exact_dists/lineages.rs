//! Law of the number of non-mutant ancestral lines A_n^θ(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::extended::{Ext, INITIAL_BITS, MAX_BITS};
use crate::numerics::{log_factorial, log_falling_factorial, log_rising_factorial, signed_log_sum, SignedLog};

/// Sample size, possibly the whole (infinite) population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSize {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineageLawParams {
    pub n: SampleSize,
    pub theta: f64,
    pub t: f64,
}

/// How alternating sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// f64 only; fail when more than the guard number of digits cancel.
    Double,
    /// f64 when well conditioned, otherwise extended precision.
    #[default]
    Adaptive,
}

/// f64 results are kept only when at most this many digits cancel.
const ADAPTIVE_F64_DIGITS: f64 = 2.0;
/// Relative size below which trailing terms of an infinite series are dropped.
const SERIES_TAIL_LOG: f64 = -60.0;

impl LineageLawParams {
    pub fn new(n: u32, theta: f64, t: f64) -> Result<Self> {
        let p = LineageLawParams { n: SampleSize::Finite(n), theta, t };
        p.validate()?;
        Ok(p)
    }

    pub fn infinite(theta: f64, t: f64) -> Result<Self> {
        let p = LineageLawParams { n: SampleSize::Infinite, theta, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::domain(format!("theta must be finite and >= 0, got {}", self.theta)));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::domain(format!("t must be finite and >= 0, got {}", self.t)));
        }
        match self.n {
            SampleSize::Finite(0) => Err(Error::domain("sample size must be >= 1")),
            SampleSize::Infinite if self.t == 0.0 => Err(Error::domain("infinite sample requires t > 0")),
            _ => Ok(()),
        }
    }

    fn finite_n(&self) -> Option<u32> {
        match self.n {
            SampleSize::Finite(n) => Some(n),
            SampleSize::Infinite => None,
        }
    }

    /// ln ρ_j = -j(j+θ-1)t/2.
    fn log_rho(&self, j: u32) -> f64 {
        let j = j as f64;
        -0.5 * j * (j + self.theta - 1.0) * self.t
    }

    /// ln n_[j] - ln (n+θ)_(j); zero for the infinite population.
    fn log_sample_ratio(&self, j: u32) -> f64 {
        match self.n {
            SampleSize::Infinite => 0.0,
            SampleSize::Finite(n) => {
                if j > n {
                    return f64::NEG_INFINITY;
                }
                let nf = n as f64;
                log_falling_factorial(nf, j as u64).expect("j <= n")
                    - log_rising_factorial(nf + self.theta, j as u64).expect("positive")
            }
        }
    }
}

/// ln|term_j| of the series for P(A = k), without the sign (-1)^{j-k}.
fn log_term(p: &LineageLawParams, k: u32, j: u32) -> f64 {
    if j == 0 {
        // k = 0: (θ-1)(θ)_(-1) = 1.
        return 0.0;
    }
    let theta = p.theta;
    let rf = if k == 0 {
        // (θ)_(j-1), θ > 0 here.
        log_rising_factorial(theta, (j - 1) as u64).expect("theta > 0")
    } else {
        log_rising_factorial(k as f64 + theta, (j - 1) as u64).expect("positive")
    };
    p.log_rho(j) + (2.0 * j as f64 + theta - 1.0).ln() + rf - log_factorial(k as u64) - log_factorial((j - k) as u64)
        + p.log_sample_ratio(j)
}

/// Upper summation index: n, or where the infinite-population series has decayed.
fn last_index(p: &LineageLawParams, k: u32) -> u32 {
    if let Some(n) = p.finite_n() {
        return n;
    }
    let mut best = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut j = k.max(1);
    loop {
        let lt = log_term(p, k, j);
        best = best.max(lt);
        if lt < prev && lt < best + SERIES_TAIL_LOG {
            return j;
        }
        prev = lt;
        j += 1;
        if j > 1_000_000 {
            return j;
        }
    }
}

fn degenerate(p: &LineageLawParams, k: u32) -> Option<f64> {
    if let Some(n) = p.finite_n() {
        if k > n {
            return Some(0.0);
        }
        if p.t == 0.0 {
            return Some(if k == n { 1.0 } else { 0.0 });
        }
    }
    if k == 0 && p.theta == 0.0 {
        return Some(0.0);
    }
    None
}

/// Alternating sum in f64 log space with its cancellation report.
pub fn ancestors_pmf_report(p: &LineageLawParams, k: u32) -> Result<crate::numerics::CancellationReport> {
    p.validate()?;
    let hi = last_index(p, k);
    let terms: Vec<SignedLog> = (k..=hi)
        .map(|j| SignedLog::new(if (j - k) % 2 == 0 { 1 } else { -1 }, log_term(p, k, j)))
        .collect();
    Ok(signed_log_sum(&terms))
}

/// Per-(n,θ,t) quantities shared by all k in extended precision.
struct ExtTables {
    bits: usize,
    theta: Ext,
    // ρ_j · n_[j]/(n+θ)_(j) · (2j+θ-1), j = 0..=hi; entry 0 unused.
    weight: Vec<Ext>,
}

impl ExtTables {
    fn new(p: &LineageLawParams, hi: u32, bits: usize) -> Self {
        let theta = Ext::from_f64(p.theta, bits);
        let half_t = Ext::from_f64(p.t, bits) / Ext::from_u64(2, bits);
        let one = Ext::one(bits);
        let mut weight = Vec::with_capacity(hi as usize + 1);
        let mut ratio = one.clone();
        weight.push(one.clone());
        for j in 1..=hi {
            let jx = Ext::from_u64(j as u64, bits);
            if let Some(n) = p.finite_n() {
                let nx = Ext::from_u64(n as u64, bits);
                let num = &nx - &Ext::from_u64((j - 1) as u64, bits);
                let den = &(&nx + &theta) + &Ext::from_u64((j - 1) as u64, bits);
                ratio = &(&ratio * &num) / &den;
            }
            // -j(j+θ-1)t/2
            let expo = -(&(&jx * &(&(&jx + &theta) - &one)) * &half_t);
            let rho = expo.exp();
            let coef = &(&(&jx + &jx) + &theta) - &one;
            weight.push(&(&rho * &ratio) * &coef);
        }
        ExtTables { bits, theta, weight }
    }

    /// Returns (sum, ln max |term|, number of terms).
    fn sum(&self, k: u32, hi: u32) -> (Ext, f64, usize) {
        let bits = self.bits;
        let one = Ext::one(bits);
        let mut acc = Ext::zero(bits);
        let mut max_log = f64::NEG_INFINITY;
        let mut count = 0;
        let kx = &Ext::from_u64(k as u64, bits) + &self.theta;
        // (k+θ)_(j-1) for j = k; k! ; (j-k)! = 1.
        let mut rising = one.clone();
        if k >= 1 {
            for i in 0..k.saturating_sub(1) {
                rising = &rising * &(&kx + &Ext::from_u64(i as u64, bits));
            }
        }
        let mut kfact = one.clone();
        for i in 2..=k {
            kfact = &kfact * &Ext::from_u64(i as u64, bits);
        }
        let mut jk_fact = one.clone();
        for j in k..=hi {
            if j > k {
                jk_fact = &jk_fact * &Ext::from_u64((j - k) as u64, bits);
                if j >= 2 {
                    // (k+θ)_(j-1) = (k+θ)_(j-2) · (k+θ+j-2); at k = 0, j = 1 this is empty.
                    if !(k == 0 && j == 1) {
                        rising = &rising * &(&kx + &Ext::from_u64((j - 2) as u64, bits));
                    }
                }
            }
            let term = if j == 0 {
                one.clone()
            } else {
                &(&self.weight[j as usize] * &rising) / &(&kfact * &jk_fact)
            };
            max_log = max_log.max(term.ln_abs_f64());
            count += 1;
            if (j - k) % 2 == 0 {
                acc = &acc + &term;
            } else {
                acc = &acc - &term;
            }
        }
        (acc, max_log, count)
    }
}

fn accept_ext(value: &Ext, max_log: f64, count: usize, bits: usize) -> bool {
    let err_log = max_log + ((count + 1) as f64).ln() - (bits as f64 - 8.0) * std::f64::consts::LN_2;
    err_log < value.ln_abs_f64() + (1e-16f64).ln() || err_log < -745.0
}

fn pmf_extended(p: &LineageLawParams, ks: &[u32]) -> Result<Vec<f64>> {
    let hi = ks.iter().map(|&k| last_index(p, k)).max().unwrap_or(0);
    let mut bits = INITIAL_BITS;
    let mut out = vec![f64::NAN; ks.len()];
    let mut pending: Vec<usize> = (0..ks.len()).collect();
    while !pending.is_empty() {
        if bits > MAX_BITS {
            return Err(Error::PrecisionLoss {
                digits: f64::INFINITY,
                guard: (MAX_BITS as f64) * std::f64::consts::LOG10_2,
                context: "ancestral line distribution (extended precision exhausted)".into(),
            });
        }
        let tables = ExtTables::new(p, hi, bits);
        let mut still = Vec::new();
        let mut need = bits * 2;
        for &i in &pending {
            let k = ks[i];
            let (v, max_log, count) = tables.sum(k, last_index(p, k));
            if accept_ext(&v, max_log, count, bits) {
                out[i] = v.to_f64().clamp(0.0, 1.0);
            } else {
                let lost = (max_log - v.ln_abs_f64().max(-800.0)) / std::f64::consts::LN_2;
                need = need.max(lost.ceil() as usize + 96);
                still.push(i);
            }
        }
        pending = still;
        bits = need;
    }
    Ok(out)
}

/// P(A_n^θ(t) = k) with the requested evaluation policy.
pub fn ancestors_pmf_with(p: &LineageLawParams, k: u32, precision: Precision) -> Result<f64> {
    p.validate()?;
    if let Some(v) = degenerate(p, k) {
        return Ok(v);
    }
    let rep = ancestors_pmf_report(p, k)?;
    match precision {
        Precision::Double => {
            let r = rep.check(crate::numerics::CANCELLATION_GUARD_DIGITS, "ancestral line distribution")?;
            Ok(r.to_f64().clamp(0.0, 1.0))
        }
        Precision::Adaptive => {
            if rep.cancellation_digits <= ADAPTIVE_F64_DIGITS {
                Ok(rep.value().clamp(0.0, 1.0))
            } else {
                Ok(pmf_extended(p, &[k])?[0])
            }
        }
    }
}

/// P(A_n^θ(t) = k). Falls back to extended precision when the series cancels.
pub fn ancestors_pmf(p: &LineageLawParams, k: u32) -> Result<f64> {
    ancestors_pmf_with(p, k, Precision::Adaptive)
}

/// The whole law P(A = k), k = 0..=n, for a finite sample.
pub fn ancestors_distribution(p: &LineageLawParams) -> Result<Vec<f64>> {
    p.validate()?;
    let n = p.finite_n().ok_or_else(|| Error::domain("ancestors_distribution needs a finite sample"))?;
    let mut out = vec![0.0; n as usize + 1];
    let mut hard = Vec::new();
    for k in 0..=n {
        if let Some(v) = degenerate(p, k) {
            out[k as usize] = v;
            continue;
        }
        let rep = ancestors_pmf_report(p, k)?;
        if rep.cancellation_digits <= ADAPTIVE_F64_DIGITS {
            out[k as usize] = rep.value().clamp(0.0, 1.0);
        } else {
            hard.push(k);
        }
    }
    if !hard.is_empty() {
        let vals = pmf_extended(p, &hard)?;
        for (k, v) in hard.iter().zip(vals) {
            out[*k as usize] = v;
        }
    }
    Ok(out)
}

/// E[A_n^θ(t)_[r]], the r-th falling factorial moment.
pub fn ancestors_falling_moment(p: &LineageLawParams, r: u32) -> Result<f64> {
    p.validate()?;
    if r == 0 {
        return Err(Error::domain("moment order r must be >= 1"));
    }
    if let Some(n) = p.finite_n() {
        if p.t == 0.0 {
            return Ok(if r > n { 0.0 } else { log_falling_factorial(n as f64, r as u64)?.exp() });
        }
    }
    let theta = p.theta;
    let mut total = 0.0f64;
    let mut k = r;
    loop {
        if let Some(n) = p.finite_n() {
            if k > n {
                break;
            }
        }
        let lt = p.log_rho(k)
            + (2.0 * k as f64 + theta - 1.0).ln()
            + crate::numerics::log_binomial((k - 1) as u64, (r - 1) as u64)
            + log_rising_factorial(theta + k as f64, (r - 1) as u64)?
            + p.log_sample_ratio(k);
        let term = lt.exp();
        total += term;
        if p.finite_n().is_none() && k > r + 2 && term < 1e-16 * total {
            break;
        }
        if p.finite_n().is_none() && k > 10_000_000 {
            return Err(Error::domain("falling moment series did not converge"));
        }
        k += 1;
    }
    Ok(total)
}

/// Density of T_n^θ + ... + T_l^θ at t: 2/(l(l+θ-1)) P(A_n^θ(t) = l).
pub fn event_time_density(p: &LineageLawParams, l: u32) -> Result<f64> {
    p.validate()?;
    if l < 2 {
        return Err(Error::domain("event_time_density needs l >= 2"));
    }
    if let Some(n) = p.finite_n() {
        if l > n {
            return Err(Error::domain("event_time_density needs l <= n"));
        }
    }
    let lf = l as f64;
    Ok(2.0 / (lf * (lf + p.theta - 1.0)) * ancestors_pmf(p, l)?)
}
