//! Thin wrapper over binary arbitrary-precision floats, used when an
//! alternating series cancels too far for f64.

use std::ops::{Add, Div, Mul, Neg, Sub};

// Default rounding (half away from zero), base 2.
type FBig = dashu_float::FBig;

/// Starting working precision in bits.
pub const INITIAL_BITS: usize = 256;
/// Hard upper limit before giving up with a precision-loss error.
pub const MAX_BITS: usize = 16384;

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct Ext(FBig);

impl Ext {
    pub fn from_f64(x: f64, bits: usize) -> Self {
        let v = FBig::try_from(x).expect("finite f64");
        Ext(v.with_precision(bits).value())
    }

    pub fn from_u64(x: u64, bits: usize) -> Self {
        Ext(FBig::from(x).with_precision(bits).value())
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_u64(0, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_u64(1, bits)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == FBig::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0 < FBig::ZERO
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn exp(&self) -> Self {
        Ext(self.0.exp())
    }

    /// Natural log of a positive value.
    pub fn ln(&self) -> Self {
        Ext(self.0.ln())
    }

    /// ln|x| as f64; -inf at zero.
    pub fn ln_abs_f64(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.abs().ln().to_f64()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    pub fn powu(&self, k: u64) -> Self {
        let mut acc = Ext(FBig::ONE.with_precision(self.0.precision()).value());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl<'a> $tr<&'a Ext> for &'a Ext {
            type Output = Ext;
            fn $m(self, rhs: &'a Ext) -> Ext {
                Ext($tr::$m(&self.0, &rhs.0))
            }
        }
        impl $tr<Ext> for Ext {
            type Output = Ext;
            fn $m(self, rhs: Ext) -> Ext {
                Ext($tr::$m(self.0, rhs.0))
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext(-self.0)
    }
}

/// Outcome of an extended-precision alternating sum.
#[derive(Debug, Clone)]
pub struct ExtSum {
    pub value: Ext,
    /// ln of the largest |term|.
    pub max_term_log: f64,
}

impl ExtSum {
    /// True when the rounding error is small relative to the result
    /// (or the result is below what f64 can represent anyway).
    pub fn adequate(&self, bits: usize, n_terms: usize) -> bool {
        let err_log = self.max_term_log + ((n_terms + 1) as f64).ln() - (bits as f64 - 8.0) * std::f64::consts::LN_2;
        let res_log = self.value.ln_abs_f64();
        err_log < res_log + (1e-16f64).ln() || err_log < -745.0
    }
}

/// Sums terms produced at a given precision, doubling the precision until
/// the result is trustworthy. `terms(bits)` must return every term.
pub fn adaptive_sum<F>(mut terms: F) -> Option<(f64, usize)>
where
    F: FnMut(usize) -> Vec<Ext>,
{
    let mut bits = INITIAL_BITS;
    while bits <= MAX_BITS {
        let ts = terms(bits);
        let max_term_log = ts.iter().map(|t| t.ln_abs_f64()).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Ext::zero(bits);
        for t in &ts {
            acc = &acc + t;
        }
        let s = ExtSum { value: acc, max_term_log };
        if s.adequate(bits, ts.len()) {
            return Some((s.value.to_f64(), bits));
        }
        // Aim directly for the precision the observed cancellation suggests.
        let digits_bits = ((s.max_term_log - s.value.ln_abs_f64().max(-800.0)) / std::f64::consts::LN_2).ceil();
        let want = if digits_bits.is_finite() { digits_bits as usize + 80 } else { bits * 2 };
        bits = want.max(bits * 2);
    }
    None
}
