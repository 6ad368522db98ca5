//! Joint law of (mutations, alleles) from the (i, j; a^θ, a) recursion.
//!
//! p(i,j; a^θ, a) is the probability that a system of a lines, a^θ of them not
//! yet hit by a mutation, accumulates i further mutations and j alleles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail mass of S_n beyond the table that is tolerated.
pub const TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMutAlleleTable {
    pub n: u32,
    pub theta: f64,
    pub i_max: u32,
    // layers[a-1][a_theta-1] is an (i_max+1) x (a_theta+1) matrix, row-major in i.
    layers: Vec<Vec<Vec<f64>>>,
}

impl JointMutAlleleTable {
    /// p(i, j; a^θ, a); zero outside the stored range.
    pub fn get(&self, i: u32, j: u32, a_theta: u32, a: u32) -> f64 {
        if a == 0 || a > self.n || a_theta == 0 || a_theta > a || i > self.i_max || j == 0 || j > a_theta {
            return 0.0;
        }
        let width = a_theta as usize + 1;
        self.layers[a as usize - 1][a_theta as usize - 1][i as usize * width + j as usize]
    }

    /// P(S_n = i, K_n = j).
    pub fn p(&self, i: u32, j: u32) -> f64 {
        self.get(i, j, self.n, self.n)
    }

    /// Σ_j P(S_n = i, K_n = j)
    pub fn mutation_marginal(&self) -> Vec<f64> {
        (0..=self.i_max).map(|i| (1..=self.n).map(|j| self.p(i, j)).sum()).collect()
    }

    /// Σ_i P(S_n = i, K_n = j), j = 0..=n.
    pub fn allele_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize + 1];
        for j in 1..=self.n {
            out[j as usize] = (0..=self.i_max).map(|i| self.p(i, j)).sum();
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.mutation_marginal().iter().sum()
    }
}

fn fill(n: u32, theta: f64, i_max: u32) -> Vec<Vec<Vec<f64>>> {
    let rows = i_max as usize + 1;
    let mut layers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n as usize);
    for a in 1..=n {
        let mut layer: Vec<Vec<f64>> = Vec::with_capacity(a as usize);
        let af = a as f64;
        for at in 1..=a {
            let width = at as usize + 1;
            let mut m = vec![0.0; rows * width];
            if at == 1 {
                // One unmutated line: a single allele; mutations follow P(S_a = i).
                if a == 1 {
                    m[1] = 1.0;
                } else {
                    let prev = &layers[a as usize - 2][0];
                    for i in 0..rows {
                        let mut v = (af - 1.0) * prev[i * width + 1];
                        if i > 0 {
                            v += theta * m[(i - 1) * width + 1];
                        }
                        m[i * width + 1] = v / (af - 1.0 + theta);
                    }
                }
            } else {
                let atf = at as f64;
                let b = af - atf;
                let denom = af * (af - 1.0 + theta);
                let same_a_prev = &layer[at as usize - 2];
                let pw = at as usize; // width of the (at-1) matrices
                for i in 0..rows {
                    for j in 1..=at as usize {
                        let mut v = 0.0;
                        if b > 0.0 {
                            if i > 0 {
                                v += b * theta * m[(i - 1) * width + j];
                            }
                            let up = &layers[a as usize - 2][at as usize - 1];
                            v += (af + atf - 1.0) * b * up[i * width + j];
                        }
                        if i > 0 && j >= 2 {
                            v += atf * theta * same_a_prev[(i - 1) * pw + (j - 1)];
                        }
                        if j <= at as usize - 1 {
                            let diag = &layers[a as usize - 2][at as usize - 2];
                            v += atf * (atf - 1.0) * diag[i * pw + j];
                        }
                        m[i * width + j] = v / denom;
                    }
                }
            }
            layer.push(m);
        }
        layers.push(layer);
    }
    layers
}

/// Builds the table, doubling i_max until the missing tail of S_n is below
/// [`TAIL_TOLERANCE`]. `i_max` is the starting size.
pub fn joint_mut_allele_table(n: u32, theta: f64, i_max: u32) -> Result<JointMutAlleleTable> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    let mut im = i_max.max(n);
    loop {
        let layers = fill(n, theta, im);
        let table = JointMutAlleleTable { n, theta, i_max: im, layers };
        if 1.0 - table.total_mass() < TAIL_TOLERANCE {
            return Ok(table);
        }
        if im > 1 << 20 {
            return Err(Error::domain("joint table did not capture the mutation tail"));
        }
        im *= 2;
    }
}
