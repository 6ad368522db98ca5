//! Coalescent times under constant or exponentially growing population size,
//! tree growing (mutation-node trees and age-ordered configurations), and the
//! backward chain of mutations, alleles and mutant/non-mutant lines.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population size model, time measured backward from the present.
///
/// Under exponential growth the relative size at time t is e^{-βt}, so the
/// pairwise coalescence intensity is e^{βt}. Mutation intensity is unscaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModel {
    Constant,
    ExpGrowth { beta: f64 },
}

impl TimeModel {
    pub fn exp_growth(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("growth rate must be finite and >= 0, got {beta}")));
        }
        Ok(TimeModel::ExpGrowth { beta })
    }

    pub fn beta(&self) -> f64 {
        match *self {
            TimeModel::Constant => 0.0,
            TimeModel::ExpGrowth { beta } => beta,
        }
    }

    /// Waiting time from `t0` to the next coalescence among `m` lines, given a
    /// unit exponential `e`: solves ∫_0^u C(m,2) e^{β(t0+s)} ds = e.
    pub fn coalescence_wait(&self, m: u32, t0: f64, e: f64) -> f64 {
        let pairs = m as f64 * (m as f64 - 1.0) / 2.0;
        let beta = self.beta();
        if beta == 0.0 {
            e / pairs
        } else {
            (beta * e * (-beta * t0).exp() / pairs).ln_1p() / beta
        }
    }
}

/// T_n, ..., T_2 with partial sums and total branch length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalescentTimes {
    /// intervals[i] = T_{n-i}: time while n - i lines exist.
    pub intervals: Vec<f64>,
    /// heights[i] = W_{i+1} = T_n + ... + T_{n-i}.
    pub heights: Vec<f64>,
    /// L_n = Σ l T_l.
    pub total_length: f64,
}

impl CoalescentTimes {
    pub fn from_intervals(intervals: Vec<f64>) -> Result<Self> {
        if intervals.is_empty() || intervals.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::domain("coalescent intervals must be positive and finite"));
        }
        let n = intervals.len() as u32 + 1;
        let mut heights = Vec::with_capacity(intervals.len());
        let mut h = 0.0;
        let mut total_length = 0.0;
        for (i, &x) in intervals.iter().enumerate() {
            h += x;
            heights.push(h);
            total_length += (n - i as u32) as f64 * x;
        }
        Ok(CoalescentTimes { intervals, heights, total_length })
    }

    pub fn n(&self) -> u32 {
        self.intervals.len() as u32 + 1
    }

    /// W_{n-1}.
    pub fn tmrca(&self) -> f64 {
        *self.heights.last().expect("n >= 2")
    }

    /// Bin index J with B_1 = (0, W_1], ..., B_n = (W_{n-1}, ∞); t = 0 maps to 1.
    fn bin(&self, t: f64) -> usize {
        self.heights.partition_point(|&w| w < t) + 1
    }
}

pub fn sample_coalescent_times<R: Rng + ?Sized>(n: u32, model: TimeModel, rng: &mut R) -> Result<CoalescentTimes> {
    if n < 2 {
        return Err(Error::domain("coalescent times need n >= 2"));
    }
    let mut intervals = Vec::with_capacity(n as usize - 1);
    let mut t = 0.0;
    for m in (2..=n).rev() {
        let e: f64 = Exp1.sample(rng);
        let u = model.coalescence_wait(m, t, e);
        t += u;
        intervals.push(u);
    }
    CoalescentTimes::from_intervals(intervals)
}

/// A_n(t) = n - J + 1.
pub fn ancestor_count_at(times: &CoalescentTimes, t: f64) -> u32 {
    times.n() - times.bin(t) as u32 + 1
}

/// (L̃_n(t), L_n(t)): branch length below t and above t.
pub fn tree_lengths_at(times: &CoalescentTimes, t: f64) -> (f64, f64) {
    let n = times.n() as usize;
    let j = times.bin(t);
    let recent = if t <= 0.0 {
        0.0
    } else if j == 1 {
        n as f64 * t
    } else if j == n {
        times.total_length
    } else {
        let mut acc = 0.0;
        for i in 0..j - 1 {
            acc += (n - i) as f64 * times.intervals[i];
        }
        acc + (n - j + 1) as f64 * (t - times.heights[j - 2])
    };
    (recent, times.total_length - recent)
}

/// A tree whose internal nodes are mutations, grown forward in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneTree {
    /// parent[v] of mutation node v; the root (node 0) has none.
    pub parent: Vec<Option<usize>>,
    /// Immediate mutation node of each leaf.
    pub leaf_node: Vec<usize>,
}

impl GeneTree {
    pub fn leaves(&self) -> usize {
        self.leaf_node.len()
    }

    pub fn mutation_count(&self) -> u32 {
        self.parent.len() as u32 - 1
    }

    /// Haplotype counts in node creation order (oldest first), empty nodes dropped.
    pub fn config(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.parent.len()];
        for &v in &self.leaf_node {
            counts[v] += 1;
        }
        counts.into_iter().filter(|&c| c > 0).collect()
    }
}

fn check_grow(n: u32, theta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain("tree growing needs n >= 2"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    Ok(())
}

/// Grows a mutation-node tree from two leaves; stops when n + 1 leaves first
/// appear and returns the tree just before that duplication.
pub fn grow_gene_tree<R: Rng + ?Sized>(n: u32, theta: f64, rng: &mut R) -> Result<GeneTree> {
    check_grow(n, theta)?;
    let mut tree = GeneTree { parent: vec![None], leaf_node: vec![0, 0] };
    loop {
        let m = tree.leaves();
        let leaf = rng.random_range(0..m);
        let dup = (m as f64 - 1.0) / (theta + m as f64 - 1.0);
        if rng.random::<f64>() < dup {
            if m == n as usize {
                return Ok(tree);
            }
            let v = tree.leaf_node[leaf];
            tree.leaf_node.push(v);
        } else {
            let v = tree.leaf_node[leaf];
            tree.parent.push(Some(v));
            tree.leaf_node[leaf] = tree.parent.len() - 1;
        }
    }
}

/// Age-ordered haplotype counts with the accumulated mutation count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthConfigState {
    pub counts: Vec<u32>,
    pub s: u32,
}

/// The condensed chain on (m_1, ..., m_k; s), same stopping rule as
/// [`grow_gene_tree`].
pub fn grow_config<R: Rng + ?Sized>(n: u32, theta: f64, rng: &mut R) -> Result<GrowthConfigState> {
    check_grow(n, theta)?;
    let mut counts: Vec<u32> = vec![2];
    let mut s = 0u32;
    let mut m = 2u32;
    loop {
        // Pick a type with probability m_j / m.
        let mut u = rng.random_range(0..m);
        let mut j = 0;
        while u >= counts[j] {
            u -= counts[j];
            j += 1;
        }
        let dup = (m as f64 - 1.0) / (theta + m as f64 - 1.0);
        if rng.random::<f64>() < dup {
            if m == n {
                counts.retain(|&c| c > 0);
                return Ok(GrowthConfigState { counts, s });
            }
            counts[j] += 1;
            m += 1;
        } else {
            counts[j] -= 1;
            counts.push(1);
            s += 1;
        }
        // Empty types are kept until the end so age order is stable.
    }
}

/// (s̃, k̃, b, a^θ): mutations and new alleles arising in (0, t), mutant and
/// non-mutant ancestral lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestralState {
    pub s: u32,
    pub k: u32,
    pub b: u32,
    pub a_theta: u32,
}

impl AncestralState {
    pub fn lines(&self) -> u32 {
        self.b + self.a_theta
    }
}

fn ska_step<R: Rng + ?Sized>(st: &mut AncestralState, theta: f64, rng: &mut R) -> Option<f64> {
    let b = st.b as f64;
    let at = st.a_theta as f64;
    let r_mut_b = theta * b / 2.0;
    let r_mut_a = theta * at / 2.0;
    let r_coal_b = (b * (b - 1.0) + 2.0 * b * at) / 2.0;
    let r_coal_a = at * (at - 1.0) / 2.0;
    let total = r_mut_b + r_mut_a + r_coal_b + r_coal_a;
    if total <= 0.0 {
        return None;
    }
    let e: f64 = Exp1.sample(rng);
    let dt = e / total;
    let u = rng.random::<f64>() * total;
    if u < r_mut_b {
        st.s += 1;
    } else if u < r_mut_b + r_mut_a {
        st.s += 1;
        st.k += 1;
        st.b += 1;
        st.a_theta -= 1;
    } else if u < r_mut_b + r_mut_a + r_coal_b {
        st.b -= 1;
    } else {
        st.a_theta -= 1;
    }
    Some(dt)
}

/// Runs the chain from (0, 0, 0, n) and records (time, state) at every jump
/// up to time t; the first entry is the start.
pub fn simulate_ska_path<R: Rng + ?Sized>(n: u32, theta: f64, t: f64, rng: &mut R) -> Result<Vec<(f64, AncestralState)>> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() || !(t >= 0.0) {
        return Err(Error::domain("need theta > 0 and t >= 0"));
    }
    let mut st = AncestralState { s: 0, k: 0, b: 0, a_theta: n };
    let mut now = 0.0;
    let mut path = vec![(0.0, st)];
    loop {
        let mut next = st;
        match ska_step(&mut next, theta, rng) {
            None => break,
            Some(dt) => {
                if now + dt > t {
                    break;
                }
                now += dt;
                st = next;
                path.push((now, st));
            }
        }
    }
    Ok(path)
}

/// State of the chain at time t.
pub fn simulate_ska<R: Rng + ?Sized>(n: u32, theta: f64, t: f64, rng: &mut R) -> Result<AncestralState> {
    Ok(simulate_ska_path(n, theta, t, rng)?.last().expect("nonempty").1)
}
