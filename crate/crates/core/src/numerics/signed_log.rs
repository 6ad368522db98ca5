//! Signed values stored as (sign, ln|x|) and cancellation-aware summation.

use crate::error::{Error, Result};

/// Default number of decimal digits that may cancel before a sum is rejected.
pub const CANCELLATION_GUARD_DIGITS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// -1, 0 or +1.
    pub sign: i8,
    pub log_magnitude: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, log_magnitude: f64::NEG_INFINITY };
    pub const ONE: SignedLog = SignedLog { sign: 1, log_magnitude: 0.0 };

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: sign.signum(), log_magnitude }
        }
    }

    pub fn positive(log_magnitude: f64) -> Self {
        Self::new(1, log_magnitude)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_magnitude.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn neg(self) -> Self {
        SignedLog { sign: -self.sign, log_magnitude: self.log_magnitude }
    }

    pub fn mul(self, other: SignedLog) -> Self {
        Self::new(self.sign * other.sign, self.log_magnitude + other.log_magnitude)
    }

    pub fn scale_log(self, log_factor: f64) -> Self {
        Self::new(self.sign, self.log_magnitude + log_factor)
    }
}

/// Result of [`signed_log_sum`] with a measure of how much cancelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationReport {
    pub result: SignedLog,
    /// ln of the largest |term|.
    pub max_term_log: f64,
    /// log10(max|term| / |result|); infinite when the sum is exactly zero.
    pub cancellation_digits: f64,
}

impl CancellationReport {
    pub fn value(&self) -> f64 {
        self.result.to_f64()
    }

    /// Fails with [`Error::PrecisionLoss`] when more than `guard` digits cancelled.
    pub fn check(&self, guard: f64, context: &str) -> Result<SignedLog> {
        if self.cancellation_digits > guard {
            Err(Error::PrecisionLoss {
                digits: self.cancellation_digits,
                guard,
                context: context.to_string(),
            })
        } else {
            Ok(self.result)
        }
    }
}

/// Sums signed terms in log space.
///
/// Terms are rescaled by the largest magnitude and accumulated largest-first
/// with Neumaier compensation.
pub fn signed_log_sum(terms: &[SignedLog]) -> CancellationReport {
    let mut live: Vec<SignedLog> = terms
        .iter()
        .copied()
        .filter(|t| t.sign != 0 && t.log_magnitude > f64::NEG_INFINITY)
        .collect();
    if live.is_empty() {
        return CancellationReport {
            result: SignedLog::ZERO,
            max_term_log: f64::NEG_INFINITY,
            cancellation_digits: 0.0,
        };
    }
    live.sort_by(|a, b| b.log_magnitude.total_cmp(&a.log_magnitude));
    let max_log = live[0].log_magnitude;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in &live {
        let x = f64::from(t.sign) * (t.log_magnitude - max_log).exp();
        let s = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - s) + x;
        } else {
            comp += (x - s) + sum;
        }
        sum = s;
    }
    let total = sum + comp;
    if total == 0.0 {
        return CancellationReport {
            result: SignedLog::ZERO,
            max_term_log: max_log,
            cancellation_digits: f64::INFINITY,
        };
    }
    let res_log = max_log + total.abs().ln();
    CancellationReport {
        result: SignedLog::new(if total > 0.0 { 1 } else { -1 }, res_log),
        max_term_log: max_log,
        cancellation_digits: ((max_log - res_log) / std::f64::consts::LN_10).max(0.0),
    }
}

/// ln(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{x_i}.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}
