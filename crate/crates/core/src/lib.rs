//! Ancestral inference for samples of haplotype counts with segregating
//! sites under the infinitely-many-sites coalescent.

pub mod accumulator;
pub mod cli_io;
pub mod error;
pub mod exact_dists;
pub mod genealogy;
pub mod importance;
pub mod numerics;
pub mod parallel;
pub mod rejection;
pub mod sample;
pub mod stats;

pub use error::{Error, Result};
pub use sample::{FrequencySpectrum, HaplotypeConfig, ObservedSample};
