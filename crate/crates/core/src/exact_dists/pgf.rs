//! Joint probability generating functions of mutations and ancestral lines.

use super::lineages::{ancestors_pmf, LineageLawParams, SampleSize};
use crate::error::{Error, Result};

fn finite(params: &LineageLawParams) -> Result<u32> {
    params.validate()?;
    match params.n {
        SampleSize::Finite(n) => Ok(n),
        SampleSize::Infinite => Err(Error::domain("pgf needs a finite sample size")),
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
    }
    Ok(())
}

/// Π_{j=from}^{n-1} (1 + θ_z/j)^{-1}.
pub fn mutation_pgf_product(from: u32, n: u32, theta_z: f64) -> f64 {
    (from.max(1)..n).map(|j| 1.0 / (1.0 + theta_z / j as f64)).product()
}

/// H_n(z), the pgf of S_n.
pub fn seg_sites_pgf(n: u32, theta: f64, z: f64) -> f64 {
    mutation_pgf_product(1, n, theta * (1.0 - z))
}

fn theta_z(params: &LineageLawParams, z: f64) -> LineageLawParams {
    LineageLawParams { theta: params.theta * (1.0 - z), ..*params }
}

/// P(A^{θ_z}(t) = l), merging l = 0 into l = 1.
fn lines_at_most_one_or(params: &LineageLawParams, l: u32) -> Result<f64> {
    if l == 1 {
        Ok(ancestors_pmf(params, 1)? + ancestors_pmf(params, 0)?)
    } else {
        ancestors_pmf(params, l)
    }
}

/// G_l(z;t) = E[z^{S̃_n(t)}; A_n(t) = l].
///
/// For l = 1 the trailing probability is P(A^{θ_z}(t) <= 1).
pub fn mut_anc_joint_pgf(params: &LineageLawParams, l: u32, z: f64) -> Result<f64> {
    let n = finite(params)?;
    check_z(z)?;
    if l == 0 || l > n {
        return Err(Error::domain(format!("line count must lie in 1..={n}, got {l}")));
    }
    let pz = theta_z(params, z);
    Ok(mutation_pgf_product(l, n, pz.theta) * lines_at_most_one_or(&pz, l)?)
}

/// G*_l(z,t) = E[z^{S_n}; A_n(t) = l] with standing variation at t included:
/// H_n(z) · P(A^{θ_z}(t) = l), and P(A^{θ_z}(t) <= 1) at l = 1.
pub fn stationary_joint_pgf_prob(params: &LineageLawParams, l: u32, z: f64) -> Result<f64> {
    let n = finite(params)?;
    check_z(z)?;
    if l == 0 || l > n {
        return Err(Error::domain(format!("line count must lie in 1..={n}, got {l}")));
    }
    let pz = theta_z(params, z);
    Ok(mutation_pgf_product(1, n, pz.theta) * lines_at_most_one_or(&pz, l)?)
}
