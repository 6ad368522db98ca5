//! Exact laws: ancestral lines, segregating sites, alleles, joint pgfs,
//! the conditional mean of ancestral lines and the joint (S_n, K_n) table.

pub mod cond_mean;
pub mod joint_table;
pub mod lineages;
pub mod pgf;
pub mod stationary;

pub use cond_mean::{cond_mean_ancestors, cond_mean_tables, CondMeanTables};
pub use joint_table::{joint_mut_allele_table, JointMutAlleleTable};
pub use lineages::{
    ancestors_distribution, ancestors_falling_moment, ancestors_pmf, ancestors_pmf_report, ancestors_pmf_with,
    event_time_density, LineageLawParams, Precision, SampleSize,
};
pub use pgf::{mut_anc_joint_pgf, seg_sites_pgf, stationary_joint_pgf_prob};
pub use stationary::{
    esf_log_probability, log_num_alleles_distribution, log_seg_sites_distribution, num_alleles_pmf,
    seg_sites_distribution, seg_sites_pgf_coefficients, seg_sites_pmf, seg_sites_pmf_alternating,
};
