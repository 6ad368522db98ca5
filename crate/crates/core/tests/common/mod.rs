//! Independent reference calculations for the integration and acceptance tests.
//! Nothing here calls into the library's own numerics.
#![allow(dead_code)]

use std::collections::HashMap;

/// All partitions of n as non-increasing count vectors.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(left: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=left.min(max)).rev() {
            cur.push(p);
            rec(left - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Π_j α_j! of a count vector.
pub fn multiplicity_factorials(counts: &[u32]) -> f64 {
    let mut alpha: HashMap<u32, u32> = HashMap::new();
    for &c in counts {
        *alpha.entry(c).or_default() += 1;
    }
    alpha.values().map(|&a| factorial(a)).product()
}

fn canon(mut v: Vec<u32>) -> Vec<u32> {
    v.retain(|&c| c > 0);
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Memoized p(n; s) from the coalescence/mutation recursion, base p((1); 0) = 1.
/// `unordered` divides by Π α_j!.
pub struct RecursionOracle {
    theta: f64,
    memo: HashMap<(Vec<u32>, u32), f64>,
}

impl RecursionOracle {
    pub fn new(theta: f64) -> Self {
        RecursionOracle { theta, memo: HashMap::new() }
    }

    pub fn p(&mut self, counts: &[u32], s: u32) -> f64 {
        let key = (canon(counts.to_vec()), s);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = self.compute(&key.0, s);
        self.memo.insert(key, v);
        v
    }

    fn compute(&mut self, c: &[u32], s: u32) -> f64 {
        let n: u32 = c.iter().sum();
        let k = c.len() as u32;
        if n == 1 {
            return if s == 0 { 1.0 } else { 0.0 };
        }
        if s + 1 < k {
            return 0.0;
        }
        let th = self.theta;
        let nf = n as f64;
        let mut total = 0.0;
        for j in 0..c.len() {
            if c[j] > 1 {
                let mut d = c.to_vec();
                d[j] -= 1;
                total += (c[j] as f64 - 1.0) / (nf + th - 1.0) * self.p(&d, s);
            }
        }
        if s > 0 {
            for i in 0..c.len() {
                if c[i] != 1 {
                    continue;
                }
                for l in 0..c.len() {
                    let mut d = c.to_vec();
                    let coef = if l == i {
                        1.0
                    } else {
                        d[i] -= 1;
                        d[l] += 1;
                        c[l] as f64 + 1.0
                    };
                    total += th / (nf + th - 1.0) * coef / nf * self.p(&d, s - 1);
                }
            }
        }
        total
    }

    pub fn unordered(&mut self, counts: &[u32], s: u32) -> f64 {
        self.p(counts, s) / multiplicity_factorials(counts)
    }
}

/// Ewens sampling formula, straight from n!/Π j^α_j α_j! · θ^k/θ_(n).
pub fn esf(counts: &[u32], theta: f64) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut v = factorial(n) / multiplicity_factorials(counts);
    for &c in counts {
        v *= theta / c as f64;
    }
    for i in 0..n {
        v /= theta + i as f64;
    }
    v
}

/// P(S_n = s) for s = 0..=s_max by convolving the per-level geometric laws:
/// with j lines the number of mutations before the coalescence is
/// Geometric((j-1)/(j-1+θ)) on {0, 1, ...}.
pub fn seg_sites_by_convolution(n: u32, theta: f64, s_max: usize) -> Vec<f64> {
    let mut dist = vec![0.0; s_max + 1];
    dist[0] = 1.0;
    for j in 2..=n {
        let p = (j as f64 - 1.0) / (j as f64 - 1.0 + theta);
        let geom: Vec<f64> = (0..=s_max).map(|m| p * (1.0 - p).powi(m as i32)).collect();
        let mut next = vec![0.0; s_max + 1];
        for a in 0..=s_max {
            if dist[a] == 0.0 {
                continue;
            }
            for b in 0..=s_max - a {
                next[a + b] += dist[a] * geom[b];
            }
        }
        dist = next;
    }
    dist
}

/// P(K_n = k), k = 0..=n, from the sequential-alleles construction: the
/// (i+1)-th gene is a new type with probability θ/(θ+i).
pub fn num_alleles_by_dp(n: u32, theta: f64) -> Vec<f64> {
    let mut d = vec![0.0; n as usize + 1];
    d[0] = 1.0;
    for i in 0..n {
        let pn = theta / (theta + i as f64);
        let mut e = vec![0.0; n as usize + 1];
        for k in 0..=i as usize {
            e[k] += d[k] * (1.0 - pn);
            e[k + 1] += d[k] * pn;
        }
        d = e;
    }
    d
}

/// Law of the number of non-mutant lines at time t, by uniformization of the
/// pure-death chain with rate j(j-1)/2 + jθ/2 from j lines. Index k = 0..=n.
pub fn lines_by_uniformization(n: u32, theta: f64, t: f64) -> Vec<f64> {
    let rate = |j: u32| j as f64 * (j as f64 - 1.0) / 2.0 + j as f64 * theta / 2.0;
    let lambda = rate(n).max(1e-300);
    let mut v = vec![0.0; n as usize + 1];
    v[n as usize] = 1.0;
    let mut out = vec![0.0; n as usize + 1];
    let mean = lambda * t;
    let m_max = (mean + 12.0 * mean.sqrt() + 50.0) as usize;
    let mut log_w = -mean;
    for m in 0..=m_max {
        if m > 0 {
            log_w += mean.ln() - (m as f64).ln();
            let mut next = vec![0.0; n as usize + 1];
            for j in 0..=n as usize {
                if v[j] == 0.0 {
                    continue;
                }
                let r = rate(j as u32);
                next[j] += v[j] * (1.0 - r / lambda);
                if j >= 1 {
                    next[j - 1] += v[j] * r / lambda;
                }
            }
            v = next;
        }
        let w = log_w.exp();
        for j in 0..=n as usize {
            out[j] += w * v[j];
        }
    }
    out
}

/// Binomial standard error of an empirical frequency.
pub fn binomial_se(p: f64, reps: u64) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Mean TMRCA for constant size: 2(1 - 1/n).
pub fn mean_tmrca(n: u32) -> f64 {
    2.0 * (1.0 - 1.0 / n as f64)
}

/// Root of Σ_{j=0}^{n-1} θ/(θ+j) = k by plain bisection on θ.
pub fn ewens_root(k: u64, n: u64) -> f64 {
    let f = |th: f64| (0..n).map(|j| th / (th + j as f64)).sum::<f64>() - k as f64;
    let (mut lo, mut hi) = (1e-9f64, 1e9f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// P(Z ≥ obs) for Z ~ Poisson(mean) by direct summation of the lower tail
/// with a multiplicative recurrence (fine for mean < 700).
pub fn poisson_upper(obs: u64, mean: f64) -> f64 {
    let mut term = (-mean).exp();
    let mut lower = 0.0;
    for z in 0..obs {
        if z > 0 {
            term *= mean / z as f64;
        }
        lower += term;
    }
    // Upper tail summed forward when it is small, to avoid 1 - (1 - ε).
    let mut t2 = (-mean).exp();
    for z in 1..=obs {
        t2 *= mean / z as f64;
    }
    let mut upper = 0.0f64;
    let mut z = obs;
    while t2 > 1e-30 * upper.max(1e-300) || z < obs + 10 {
        upper += t2;
        z += 1;
        t2 *= mean / z as f64;
        if z > obs + 100_000 {
            break;
        }
    }
    if upper < 0.5 {
        upper
    } else {
        1.0 - lower
    }
}
