//! Observed data: haplotype counts, their multiplicity spectrum, and (n; s).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::log_factorial;

/// Haplotype counts in input order. Position i is the identity label of haplotype i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaplotypeConfig {
    counts: Vec<u32>,
}

impl HaplotypeConfig {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("configuration has no haplotypes"));
        }
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::domain(format!("haplotype {} has count 0", i + 1)));
        }
        Ok(HaplotypeConfig { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Sample size n = Σ n_i.
    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Number of haplotypes k.
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn spectrum(&self) -> FrequencySpectrum {
        FrequencySpectrum::from_counts(&self.counts)
    }

    /// ln Π_j α_j!, the factor between age-labelled and unordered probabilities.
    pub fn log_multiplicity_factorials(&self) -> f64 {
        self.spectrum().alpha.values().map(|&a| log_factorial(a as u64)).sum()
    }
}

/// α_j = number of haplotypes present j times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencySpectrum {
    pub alpha: BTreeMap<u32, u32>,
    pub n: u32,
}

impl FrequencySpectrum {
    pub fn from_counts(counts: &[u32]) -> Self {
        let mut alpha = BTreeMap::new();
        for &c in counts {
            *alpha.entry(c).or_insert(0) += 1;
        }
        FrequencySpectrum { alpha, n: counts.iter().sum() }
    }

    pub fn alpha_j(&self, j: u32) -> u32 {
        self.alpha.get(&j).copied().unwrap_or(0)
    }

    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.alpha.iter().map(|(&j, &a)| (j, a)).collect()
    }
}

/// A haplotype configuration with its number of segregating sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedSample {
    pub config: HaplotypeConfig,
    pub s: u32,
}

impl ObservedSample {
    pub fn new(counts: Vec<u32>, s: u32) -> Result<Self> {
        Ok(ObservedSample { config: HaplotypeConfig::new(counts)?, s })
    }

    /// False when s < k - 1: no infinitely-many-sites history exists.
    pub fn is_compatible(&self) -> bool {
        self.s as usize + 1 >= self.config.k()
    }
}
