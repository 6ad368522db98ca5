//! Rejection sampling of (θ, A_n(t), S_n(t)) given S_n = s.
//!
//! A tree is accepted with probability Po(θL_n/2){s} / Po(s){s}, which is at
//! most 1 because λ = s maximizes Po(λ){s}. Algorithm 4 then splits the s
//! mutations Binomial(s, L_n(t)/L_n) into those older than t.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::accumulator::{WeightedAccumulator, WeightedEstimate};
use crate::error::{Error, Result};
use crate::genealogy::{ancestor_count_at, sample_coalescent_times, tree_lengths_at, TimeModel};
use crate::numerics::log_poisson_pmf;
use crate::parallel::{map_chunks, seed_replicate_rng, CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaPrior {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl ThetaPrior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ThetaPrior::Fixed { value } => value > 0.0 && value.is_finite(),
            ThetaPrior::Uniform { low, high } => low >= 0.0 && high > low && high.is_finite(),
            ThetaPrior::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid prior {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ThetaPrior::Fixed { value } => value,
            ThetaPrior::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ThetaPrior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
        }
    }
}

/// h = Po(θL/2){s} / Po(s){s}.
pub fn accept_probability(theta: f64, total_length: f64, s: u64) -> f64 {
    let lambda = theta * total_length / 2.0;
    (log_poisson_pmf(lambda, s) - log_poisson_pmf(s as f64, s)).exp().min(1.0)
}

/// One accepted tree: θ, TMRCA, and per grid time the ancestor count and (for
/// Algorithm 4) the number of mutations older than t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub theta: f64,
    pub tmrca: f64,
    pub ancestors: Vec<u32>,
    pub standing_sites: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// (θ, A_n(t)).
    Three,
    /// (θ, A_n(t), S_n(t)).
    Four,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionOptions {
    pub n: u32,
    pub s: u32,
    pub prior: ThetaPrior,
    pub model: TimeModel,
    pub time_grid: Vec<f64>,
    /// Accepted draws wanted.
    pub replicates: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub t: f64,
    pub ancestors: WeightedEstimate,
    pub ancestor_distribution: Vec<(u32, WeightedEstimate)>,
    /// Algorithm 4 only.
    pub standing_sites: Option<WeightedEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub accepted: u64,
    /// Proposals up to and including the last accepted one.
    pub proposals: u64,
    pub acceptance_rate: f64,
    pub theta: WeightedEstimate,
    pub tmrca: WeightedEstimate,
    pub grid: Vec<GridSummary>,
    pub draws: Vec<PosteriorDraw>,
}

/// Proposals with no acceptance after which a run is abandoned.
pub const MAX_FRUITLESS_PROPOSALS: u64 = 100_000_000;

fn propose<R: Rng + ?Sized>(o: &RejectionOptions, rng: &mut R) -> Result<Option<PosteriorDraw>> {
    let theta = o.prior.sample(rng);
    let times = sample_coalescent_times(o.n, o.model, rng)?;
    let h = accept_probability(theta, times.total_length, o.s as u64);
    if rng.random::<f64>() >= h {
        return Ok(None);
    }
    let mut ancestors = Vec::with_capacity(o.time_grid.len());
    let mut standing = Vec::new();
    for &t in &o.time_grid {
        ancestors.push(ancestor_count_at(&times, t));
        if o.algorithm == Algorithm::Four {
            let (_, ancient) = tree_lengths_at(&times, t);
            let p = (ancient / times.total_length).clamp(0.0, 1.0);
            let b = Binomial::new(o.s as u64, p).map_err(|e| Error::domain(e.to_string()))?;
            standing.push(b.sample(rng) as u32);
        }
    }
    Ok(Some(PosteriorDraw { theta, tmrca: times.tmrca(), ancestors, standing_sites: standing }))
}

/// Runs whole chunks of `CHUNK` proposals (chunk c on RNG stream c) in waves
/// until enough draws are accepted, then keeps the first `replicates` in
/// proposal order.
pub fn run_rejection(o: &RejectionOptions) -> Result<RejectionReport> {
    o.prior.validate()?;
    if o.n < 2 {
        return Err(Error::domain("rejection sampling needs n >= 2"));
    }
    if o.replicates == 0 {
        return Err(Error::domain("replicates must be >= 1"));
    }
    if o.time_grid.is_empty() || o.time_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain("time grid must be nonempty with finite t >= 0"));
    }
    let wave = (4 * rayon::current_num_threads()) as u64;
    let mut draws: Vec<(u64, PosteriorDraw)> = Vec::new();
    let mut next_chunk = 0u64;
    while (draws.len() as u64) < o.replicates {
        if draws.is_empty() && next_chunk * CHUNK >= MAX_FRUITLESS_PROPOSALS {
            return Err(Error::ZeroAcceptance { proposals: next_chunk * CHUNK });
        }
        let first = next_chunk;
        let results = map_chunks(wave * CHUNK, |c, _, count| -> Result<Vec<(u64, PosteriorDraw)>> {
            let chunk = first + c;
            let mut rng = seed_replicate_rng(o.seed, chunk);
            let mut out = Vec::new();
            for i in 0..count {
                if let Some(d) = propose(o, &mut rng)? {
                    out.push((chunk * CHUNK + i, d));
                }
            }
            Ok(out)
        });
        for r in results {
            draws.extend(r?);
        }
        next_chunk += wave;
    }
    draws.truncate(o.replicates as usize);
    let proposals = draws.last().map_or(0, |d| d.0 + 1);
    let draws: Vec<PosteriorDraw> = draws.into_iter().map(|d| d.1).collect();
    Ok(summarize(o, proposals, draws))
}

fn summarize(o: &RejectionOptions, proposals: u64, draws: Vec<PosteriorDraw>) -> RejectionReport {
    let g = o.time_grid.len();
    let four = o.algorithm == Algorithm::Four;
    let dim = 2 + g * if four { 2 } else { 1 };
    let mut acc = WeightedAccumulator::new(dim, g);
    let mut xs = Vec::with_capacity(dim);
    for d in &draws {
        xs.clear();
        xs.push(d.theta);
        xs.push(d.tmrca);
        xs.extend(d.ancestors.iter().map(|&a| a as f64));
        xs.extend(d.standing_sites.iter().map(|&s| s as f64));
        acc.add(0.0, &xs, &d.ancestors);
    }
    let grid = o
        .time_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| GridSummary {
            t,
            ancestors: acc.estimate(2 + i),
            ancestor_distribution: acc.histogram(i),
            standing_sites: four.then(|| acc.estimate(2 + g + i)),
        })
        .collect();
    let accepted = draws.len() as u64;
    RejectionReport {
        accepted,
        proposals,
        acceptance_rate: accepted as f64 / proposals as f64,
        theta: acc.estimate(0),
        tmrca: acc.estimate(1),
        grid,
        draws,
    }
}

pub fn run_algorithm3(n: u32, s: u32, prior: ThetaPrior, model: TimeModel, time_grid: &[f64], replicates: u64, seed: u64) -> Result<RejectionReport> {
    run_rejection(&RejectionOptions { n, s, prior, model, time_grid: time_grid.to_vec(), replicates, seed, algorithm: Algorithm::Three })
}

pub fn run_algorithm4(n: u32, s: u32, prior: ThetaPrior, model: TimeModel, time_grid: &[f64], replicates: u64, seed: u64) -> Result<RejectionReport> {
    run_rejection(&RejectionOptions { n, s, prior, model, time_grid: time_grid.to_vec(), replicates, seed, algorithm: Algorithm::Four })
}
