//! E[A_n(t) | S_n = r] by coefficient extraction from the joint pgf.
//!
//! With standing variation included, E[z^{S_n} A_n(t)] equals
//! H_n(z) (E[A^{θ_z}(t)] + P(A^{θ_z}(t) = 0)), θ_z = θ(1-z). Coefficients are
//! carried by the tables a(r,k) = [z^r] H_n(z) n_[k] / (n+θ_z)_(k) (scaled by
//! n_[k] to stay bounded), b and c below.

use crate::error::{Error, Result};
use crate::numerics::extended::{Ext, INITIAL_BITS, MAX_BITS};

/// Arithmetic needed by the table recursions.
trait Field: Clone {
    fn c(x: f64, bits: usize) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn exp(&self) -> Self;
    fn ln_abs(&self) -> f64;
}

impl Field for f64 {
    fn c(x: f64, _: usize) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln_abs(&self) -> f64 {
        self.abs().ln()
    }
}

impl Field for Ext {
    fn c(x: f64, bits: usize) -> Self {
        Ext::from_f64(x, bits)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn exp(&self) -> Self {
        Ext::exp(self)
    }
    fn ln_abs(&self) -> f64 {
        self.ln_abs_f64()
    }
}

/// The a, b, c tables for one (n, θ, t), rows r = 0..=r_max, columns k = 0..=n.
/// All entries carry the extra factor n_[k].
#[derive(Debug, Clone, PartialEq)]
pub struct CondMeanTables {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

struct Tables<F> {
    a: Vec<Vec<F>>,
    b: Vec<Vec<F>>,
    c: Vec<Vec<F>>,
}

fn poisson_series<F: Field>(lambda: &F, len: usize, bits: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(len);
    let zero = F::c(0.0, bits);
    let mut cur = zero.sub(lambda).exp();
    for m in 0..len {
        if m > 0 {
            cur = cur.mul(lambda).div(&F::c(m as f64, bits));
        }
        out.push(cur.clone());
    }
    out
}

fn build<F: Field>(n: u32, theta: f64, t: f64, r_max: usize, bits: usize) -> Tables<F> {
    let nn = n as usize;
    let th = F::c(theta, bits);
    let zero = F::c(0.0, bits);
    let one = F::c(1.0, bits);
    let len = r_max + 1;
    // a(.,0) = P(S_n = .) via the stable recursion in sample size.
    let mut p = vec![zero.clone(); len];
    p[0] = one.clone();
    for m in 2..=n {
        let m1 = F::c((m - 1) as f64, bits);
        let d = m1.add(&th);
        let mut next = vec![zero.clone(); len];
        for s in 0..len {
            let mut v = m1.mul(&p[s]);
            if s > 0 {
                v = v.add(&th.mul(&next[s - 1]));
            }
            next[s] = v.div(&d);
        }
        p = next;
    }
    let mut a = vec![vec![zero.clone(); nn + 1]; len];
    for s in 0..len {
        a[s][0] = p[s].clone();
    }
    for k in 1..=nn {
        let down = F::c((n as usize - k + 1) as f64, bits);
        let d = F::c((n as usize + k - 1) as f64, bits).add(&th);
        for s in 0..len {
            let mut v = down.mul(&a[s][k - 1]);
            if s > 0 {
                v = v.add(&th.mul(&a[s - 1][k]));
            }
            a[s][k] = v.div(&d);
        }
    }
    let mut b = vec![vec![zero.clone(); nn + 1]; len];
    for k in 1..=nn {
        let w = F::c((2 * k - 1) as f64, bits).add(&th);
        for s in 0..len {
            let mut v = w.mul(&a[s][k]);
            if s > 0 {
                v = v.sub(&th.mul(&a[s - 1][k]));
            }
            b[s][k] = v;
        }
    }
    let mut c = vec![vec![zero.clone(); nn + 1]; len];
    for k in 1..=nn {
        let lam = F::c(k as f64 / 2.0, bits).mul(&th).mul(&F::c(t, bits));
        let po = poisson_series(&lam, len, bits);
        for s in 0..len {
            let mut v = zero.clone();
            for m in 0..=s {
                v = v.add(&po[m].mul(&b[s - m][k]));
            }
            c[s][k] = v;
        }
    }
    Tables { a, b, c }
}

/// Coefficients (up to degree `len-1`) of (2j-1+θ-θz) Π_{i=0}^{j-2} (θ+i-θz), j >= 1.
fn p_poly<F: Field>(j: usize, theta: f64, len: usize, bits: usize) -> Vec<F> {
    let zero = F::c(0.0, bits);
    let mut poly = vec![zero.clone(); len];
    poly[0] = F::c(1.0, bits);
    let th = F::c(theta, bits);
    let neg_th = F::c(0.0, bits).sub(&th);
    let mul_lin = |poly: &mut Vec<F>, c0: F| {
        for d in (0..len).rev() {
            let mut v = poly[d].mul(&c0);
            if d > 0 {
                v = v.add(&poly[d - 1].mul(&neg_th));
            }
            poly[d] = v;
        }
    };
    mul_lin(&mut poly, F::c((2 * j - 1) as f64, bits).add(&th));
    for i in 0..j.saturating_sub(1) {
        mul_lin(&mut poly, F::c(i as f64, bits).add(&th));
    }
    poly
}

/// Returns (numerator, ln max |term|, P(S_n = r)).
fn numerator<F: Field>(n: u32, theta: f64, t: f64, r: usize, bits: usize) -> (F, f64, F) {
    let tb = build::<F>(n, theta, t, r, bits);
    let zero = F::c(0.0, bits);
    let mut acc = zero.clone();
    let mut max_log = f64::NEG_INFINITY;
    let mut push = |acc: &mut F, term: F| {
        max_log = max_log.max(term.ln_abs());
        *acc = acc.add(&term);
    };
    let th = F::c(theta, bits);
    let tt = F::c(t, bits);
    let rho = |k: usize| zero.sub(&F::c((k * (k - 1) / 2) as f64, bits).mul(&tt)).exp();
    for k in 1..=n as usize {
        let rk = rho(k);
        let lam = F::c(k as f64 / 2.0, bits).mul(&th).mul(&tt);
        let po = poisson_series(&lam, r + 1, bits);
        for m in 0..=r {
            push(&mut acc, rk.mul(&po[m]).mul(&tb.b[r - m][k]));
        }
    }
    // [z^r] H_n(z) P(A^{θ_z}(t) = 0).
    push(&mut acc, tb.a[r][0].clone());
    if theta > 0.0 {
        let mut jfact = F::c(1.0, bits);
        for j in 1..=n as usize {
            jfact = jfact.mul(&F::c(j as f64, bits));
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let pre = rho(j).div(&jfact).mul(&F::c(sign, bits));
            let po = poisson_series(&F::c(j as f64 / 2.0, bits).mul(&th).mul(&tt), r + 1, bits);
            let pp = p_poly::<F>(j, theta, r + 1, bits);
            for u in 0..=r {
                for v in 0..=(r - u) {
                    let w = r - u - v;
                    push(&mut acc, pre.mul(&po[u]).mul(&pp[v]).mul(&tb.a[w][j]));
                }
            }
        }
    }
    let p_r = tb.a[r][0].clone();
    (acc, max_log, p_r)
}

/// The a, b, c tables (f64) for inspection.
pub fn cond_mean_tables(n: u32, theta: f64, t: f64, r_max: u32) -> Result<CondMeanTables> {
    validate(n, theta, t)?;
    let tb = build::<f64>(n, theta, t, r_max as usize, 0);
    Ok(CondMeanTables { a: tb.a, b: tb.b, c: tb.c })
}

fn validate(n: u32, theta: f64, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn adequate(value: f64, max_log: f64, terms: usize, mantissa_bits: f64) -> bool {
    let err_log = max_log + ((terms + 1) as f64).ln() - (mantissa_bits - 8.0) * std::f64::consts::LN_2;
    value.is_finite() && err_log < value.abs().ln() + (1e-10f64).ln()
}

/// E[A_n(t) | S_n = r].
pub fn cond_mean_ancestors(n: u32, theta: f64, t: f64, r: u32) -> Result<f64> {
    validate(n, theta, t)?;
    if t == 0.0 {
        return Ok(n as f64);
    }
    let r = r as usize;
    let terms = (n as usize + 1) * (r + 1) * (r + 2);
    let (num, max_log, p_r) = numerator::<f64>(n, theta, t, r, 0);
    if p_r < 1e-300 {
        return Err(Error::NegligibleDenominator(format!("P(S_{n} = {r}) = {p_r:e}")));
    }
    let value = if adequate(num, max_log, terms, 53.0) {
        num / p_r
    } else {
        let mut bits = INITIAL_BITS;
        loop {
            if bits > MAX_BITS {
                return Err(Error::PrecisionLoss {
                    digits: f64::INFINITY,
                    guard: MAX_BITS as f64 * std::f64::consts::LOG10_2,
                    context: "conditional mean of ancestral lines".into(),
                });
            }
            let (num, max_log, p_r) = numerator::<Ext>(n, theta, t, r, bits);
            let v = num.to_f64();
            if adequate(v, max_log, terms, bits as f64) {
                break (&num / &p_r).to_f64();
            }
            bits *= 2;
        }
    };
    Ok(value.clamp(1.0, n as f64))
}
