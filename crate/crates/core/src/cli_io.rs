//! `esf_stl` front end: dataset parsing, run configuration, report bundle and
//! its text / JSON / CSV renderings.
//!
//! JSON keys mirror the Rust field names of [`ReportBundle`]. Only
//! `metadata.wall_time_seconds` differs between repeated runs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_dists::{ancestors_distribution, cond_mean_ancestors, esf_log_probability, num_alleles_pmf, seg_sites_pmf, LineageLawParams};
use crate::genealogy::TimeModel;
use crate::importance::{run_importance, ImportanceOptions, ImportanceReport};
use crate::parallel::with_threads;
use crate::rejection::{run_rejection, Algorithm, RejectionOptions, RejectionReport, ThetaPrior};
use crate::sample::{HaplotypeConfig, ObservedSample};
use crate::stats;

pub use crate::parallel::seed_replicate_rng;

/// Exit status for bad arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when the data disagree with the arguments or fail to parse.
pub const EXIT_DATA: i32 = 3;
/// Exit status when a numerical guard trips.
pub const EXIT_NUMERIC: i32 = 4;

/// Grid used by the rejection modes when no -t is given.
pub const DEFAULT_GRID: [f64; 4] = [0.1, 0.5, 1.0, 1.5];

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::DataMismatch(_) | Error::Io(_) => EXIT_DATA,
        Error::PrecisionLoss { .. }
        | Error::Quadrature { .. }
        | Error::NegligibleDenominator(_)
        | Error::ZeroAcceptance { .. }
        | Error::DeadEnd(_)
        | Error::Boundary(_) => EXIT_NUMERIC,
    }
}

/// Whitespace-separated positive counts; `#` starts a comment to end of line.
pub fn parse_dataset_str(text: &str) -> Result<HaplotypeConfig> {
    let mut counts = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let mut col = 0usize;
        for piece in body.split_inclusive(char::is_whitespace) {
            let tok = piece.trim_end();
            let start = col;
            col += piece.chars().count();
            if tok.is_empty() {
                continue;
            }
            let at = |message: String| Error::Parse { line: ln + 1, column: start + 1, message };
            let v: u64 = tok.parse().map_err(|_| at(format!("expected a positive integer, found {tok:?}")))?;
            if v == 0 {
                return Err(at("haplotype counts must be positive".into()));
            }
            let v = u32::try_from(v).map_err(|_| at(format!("count {v} is too large")))?;
            counts.push(v);
        }
    }
    if counts.is_empty() {
        return Err(Error::Parse { line: 1, column: 1, message: "no haplotype counts found".into() });
    }
    HaplotypeConfig::new(counts)
}

pub fn parse_dataset(path: &Path) -> Result<HaplotypeConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dataset_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Is,
    Reject3,
    Reject4,
    Exact,
    Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// Everything that determines a run's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    pub k: u32,
    pub m: u32,
    pub theta: f64,
    pub replicates: u64,
    pub seed: u64,
    pub growth_beta: Option<f64>,
    pub age_info: bool,
    pub time_points: Vec<f64>,
    pub format: OutputFormat,
    pub mode: Mode,
    pub prior: ThetaPrior,
    pub pi: Option<f64>,
}

impl RunConfig {
    pub fn time_model(&self) -> Result<TimeModel> {
        match self.growth_beta {
            None => Ok(TimeModel::Constant),
            Some(b) => TimeModel::exp_growth(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub counts: Vec<u32>,
    pub n: u32,
    pub wall_time_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSlice {
    pub t: f64,
    /// E[A_n(t) | S_n = s].
    pub cond_mean_ancestors: f64,
    /// P(A_n(t) = a) for the coalescent without mutation, entries above 1e-12.
    pub ancestor_distribution: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    /// Ewens sampling formula, unordered configuration.
    pub log10_esf_probability: f64,
    pub esf_probability: f64,
    /// P(S_n = s).
    pub seg_sites_probability: f64,
    /// P(K_n = k).
    pub num_alleles_probability: f64,
    pub slices: Vec<ExactSlice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub watterson_theta: f64,
    /// None on the boundary (k = 1 or k = n).
    pub ewens_mle_theta: Option<f64>,
    /// nθ/(n+θ-1), exact ESF mean at the run's θ.
    pub expected_singletons_exact: f64,
    /// (θ/j)(n/(n+θ))^j for j = 1, 2 at the run's θ.
    pub poisson_mean_singletons: f64,
    pub poisson_mean_doubletons: f64,
    pub observed_singletons: u32,
    pub observed_doubletons: u32,
    /// P(Z_1 ≥ α_1).
    pub singleton_tail: f64,
    /// P(Z_1 + Z_2 ≥ α_1 + α_2).
    pub singleton_doubleton_tail: f64,
    pub tajimas_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub importance: Option<ImportanceReport>,
    pub rejection: Option<RejectionReport>,
    pub exact: Option<ExactReport>,
    pub stats: Option<StatsReport>,
}

#[derive(Parser, Debug)]
#[command(name = "esf_stl", version, about = "Ancestral inference from haplotype counts and segregating sites")]
struct Cli {
    /// Haplotype count file.
    configfile: String,
    /// Number of haplotypes (must match the file).
    k: u32,
    /// Number of segregating sites.
    m: u32,
    theta: f64,
    replicates: u64,
    seed: u64,
    /// Exponential growth rate.
    #[arg(short = 'g', value_name = "BETA")]
    growth: Option<f64>,
    /// Event times and allele ages.
    #[arg(short = 'a')]
    age_info: bool,
    /// Time points for configurations in the past (comma list, repeatable).
    #[arg(short = 't', long = "times", value_delimiter = ',', allow_negative_numbers = true)]
    times: Vec<f64>,
    #[arg(long, value_enum, default_value = "is")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// File for JSON output, or path prefix for CSV tables.
    #[arg(long)]
    output: Option<String>,
    /// fixed | uniform:LOW:HIGH | gamma:SHAPE:RATE (rejection modes).
    #[arg(long, default_value = "fixed")]
    prior: String,
    /// Worker threads (0 = all cores). Does not change results.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Mean pairwise difference, for Tajima's D in stats mode.
    #[arg(long)]
    pi: Option<f64>,
}

pub fn parse_prior(spec: &str, theta: f64) -> Result<ThetaPrior> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::domain(format!("bad number {s:?} in prior {spec:?}")));
    let prior = match parts.as_slice() {
        ["fixed"] => ThetaPrior::Fixed { value: theta },
        ["fixed", v] => ThetaPrior::Fixed { value: num(v)? },
        ["uniform", lo, hi] => ThetaPrior::Uniform { low: num(lo)?, high: num(hi)? },
        ["gamma", a, b] => ThetaPrior::Gamma { shape: num(a)?, rate: num(b)? },
        _ => return Err(Error::domain(format!("unknown prior {spec:?}"))),
    };
    prior.validate()?;
    Ok(prior)
}

/// Runs one configuration on an already parsed dataset.
pub fn execute(config: &RunConfig, data: &HaplotypeConfig) -> Result<ReportBundle> {
    let start = Instant::now();
    if data.k() != config.k as usize {
        return Err(Error::DataMismatch(format!(
            "declared k = {} but {} has {} haplotypes",
            config.k,
            config.dataset,
            data.k()
        )));
    }
    if !(config.theta > 0.0) || !config.theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {}", config.theta)));
    }
    if config.replicates == 0 {
        return Err(Error::domain("replicates must be >= 1"));
    }
    if config.time_points.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain("time points must be finite and >= 0"));
    }
    let model = config.time_model()?;
    let sample = ObservedSample { config: data.clone(), s: config.m };
    let needs_history = matches!(config.mode, Mode::Is | Mode::Exact);
    if needs_history && !sample.is_compatible() {
        return Err(Error::DataMismatch(format!(
            "{} segregating sites cannot produce {} haplotypes (need s >= k - 1)",
            config.m,
            config.k
        )));
    }
    let n = data.n();
    let mut bundle = ReportBundle {
        metadata: Metadata {
            tool: "esf_stl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            counts: data.counts().to_vec(),
            n,
            wall_time_seconds: None,
        },
        importance: None,
        rejection: None,
        exact: None,
        stats: None,
    };
    match config.mode {
        Mode::Is => {
            let options = ImportanceOptions {
                theta: config.theta,
                model,
                replicates: config.replicates,
                seed: config.seed,
                event_times: config.age_info,
                ages: config.age_info,
                time_grid: config.time_points.clone(),
            };
            bundle.importance = Some(run_importance(&sample, &options)?);
        }
        Mode::Reject3 | Mode::Reject4 => {
            let options = RejectionOptions {
                n,
                s: config.m,
                prior: config.prior,
                model,
                time_grid: config.time_points.clone(),
                replicates: config.replicates,
                seed: config.seed,
                algorithm: if config.mode == Mode::Reject3 { Algorithm::Three } else { Algorithm::Four },
            };
            let mut r = run_rejection(&options)?;
            r.draws.clear();
            bundle.rejection = Some(r);
        }
        Mode::Exact => bundle.exact = Some(exact_report(config, data)?),
        Mode::Stats => bundle.stats = Some(stats_report(config, data)?),
    }
    bundle.metadata.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    Ok(bundle)
}

fn exact_report(config: &RunConfig, data: &HaplotypeConfig) -> Result<ExactReport> {
    let n = data.n();
    let theta = config.theta;
    let lp = esf_log_probability(&data.spectrum().pairs(), theta)?;
    let mut slices = Vec::new();
    for &t in &config.time_points {
        let cm = cond_mean_ancestors(n, theta, t, config.m)?;
        let dist = ancestors_distribution(&LineageLawParams::new(n, 0.0, t)?)?;
        let ancestor_distribution = dist.iter().enumerate().filter(|(_, &p)| p > 1e-12).map(|(a, &p)| (a as u32, p)).collect();
        slices.push(ExactSlice { t, cond_mean_ancestors: cm, ancestor_distribution });
    }
    Ok(ExactReport {
        log10_esf_probability: lp / std::f64::consts::LN_10,
        esf_probability: lp.exp(),
        seg_sites_probability: seg_sites_pmf(n, theta, config.m)?,
        num_alleles_probability: num_alleles_pmf(n, theta, data.k() as u32)?,
        slices,
    })
}

fn stats_report(config: &RunConfig, data: &HaplotypeConfig) -> Result<StatsReport> {
    let n = data.n() as u64;
    let k = data.k() as u64;
    let s = config.m as u64;
    let theta = config.theta;
    let spectrum = data.spectrum();
    let a1 = spectrum.alpha_j(1);
    let a2 = spectrum.alpha_j(2);
    let m1 = stats::poisson_spectrum_approx(n, theta, 1)?;
    let m2 = stats::poisson_spectrum_approx(n, theta, 2)?;
    let ewens = match stats::ewens_mle_theta(k, n) {
        Ok(v) => Some(v),
        Err(Error::Boundary(_)) => None,
        Err(e) => return Err(e),
    };
    let tajimas_d = match config.pi {
        Some(pi) if s > 0 && n >= 4 => Some(stats::tajimas_d(pi, s, n)?),
        _ => None,
    };
    Ok(StatsReport {
        watterson_theta: stats::watterson_theta(s, n)?,
        ewens_mle_theta: ewens,
        expected_singletons_exact: stats::expected_singletons(n, theta),
        poisson_mean_singletons: m1,
        poisson_mean_doubletons: m2,
        observed_singletons: a1,
        observed_doubletons: a2,
        singleton_tail: stats::poisson_tail_test(a1 as u64, m1)?,
        singleton_doubleton_tail: stats::poisson_tail_test((a1 + a2) as u64, m1 + m2)?,
        tajimas_d,
    })
}

fn model_label(c: &RunConfig) -> String {
    match c.growth_beta {
        None => "constant".into(),
        Some(b) => format!("exponential growth beta={b}"),
    }
}

fn est(e: &crate::accumulator::WeightedEstimate) -> String {
    format!("{:.6} (SE {:.6})", e.mean, e.std_error)
}

/// Human-readable report. Depends only on the bundle, so a bundle read back
/// from JSON renders identically.
pub fn render_text(b: &ReportBundle) -> String {
    let c = &b.metadata.config;
    let mut o = String::new();
    let _ = writeln!(o, "esf_stl {}", b.metadata.version);
    let _ = writeln!(o, "mode: {}", serde_json::to_value(c.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
    let _ = writeln!(o, "model: {}", model_label(c));
    let _ = writeln!(o, "theta: {}", c.theta);
    let _ = writeln!(o, "n: {}  k: {}  s: {}", b.metadata.n, c.k, c.m);
    let _ = writeln!(o, "replicates: {}", c.replicates);
    let _ = writeln!(o, "seed: {}", c.seed);
    let _ = writeln!(o, "dataset: {}", c.dataset);
    let _ = writeln!(o, "counts: {}", b.metadata.counts.iter().map(u32::to_string).collect::<Vec<_>>().join(" "));
    if let Some(r) = &b.importance {
        render_importance(&mut o, b, r);
    }
    if let Some(r) = &b.rejection {
        render_rejection(&mut o, r);
    }
    if let Some(r) = &b.exact {
        render_exact(&mut o, r);
    }
    if let Some(r) = &b.stats {
        render_stats(&mut o, r);
    }
    o
}

fn render_importance(o: &mut String, b: &ReportBundle, r: &ImportanceReport) {
    let l = &r.likelihood;
    let _ = writeln!(o, "ESS: {:.2}", l.unordered.effective_sample_size);
    let _ = writeln!(o);
    let _ = writeln!(o, "likelihood p(n;s)/prod alpha_j! (unordered): {:.6e} (SE {:.4e})", l.unordered.mean, l.unordered.std_error);
    let _ = writeln!(o, "likelihood p(n;s) (age-labelled): {:.6e} (SE {:.4e})", l.age_labelled.mean, l.age_labelled.std_error);
    let _ = writeln!(o, "log10 likelihood (unordered): {:.6}", l.log10_unordered);
    if let Some(et) = &r.event_times {
        let _ = writeln!(o);
        let _ = writeln!(o, "TMRCA: {}", est(&et.tmrca));
        let _ = writeln!(o, "mutation times (increasing):");
        for (i, e) in et.mutation.iter().enumerate() {
            let _ = writeln!(o, "  {:>4}  {}", i + 1, est(e));
        }
        let _ = writeln!(o, "haplotype loss times (increasing):");
        for (i, e) in et.loss.iter().enumerate() {
            let _ = writeln!(o, "  {:>4}  {}", i + 1, est(e));
        }
    }
    if let Some(ages) = &r.ages {
        let _ = writeln!(o, "allele ages (input order):");
        for (i, e) in ages.iter().enumerate() {
            let _ = writeln!(o, "  {:>4}  count {:>6}  {}", i + 1, b.metadata.counts[i], est(e));
        }
    }
    for sl in &r.slices {
        let _ = writeln!(o);
        let _ = writeln!(o, "time {}:", sl.t);
        let _ = writeln!(o, "  K_n(t) haplotypes: {}", est(&sl.haplotypes));
        let _ = writeln!(o, "  S_n(t) mutations:  {}", est(&sl.mutations));
        let _ = writeln!(o, "  A_n(t) lines:      {}", est(&sl.lines));
        let _ = writeln!(o, "  mean counts (input order):");
        for (i, e) in sl.counts.iter().enumerate() {
            let _ = writeln!(o, "    {:>4}  {}", i + 1, est(e));
        }
        let _ = writeln!(o, "  line distribution:");
        for (a, e) in &sl.line_distribution {
            let _ = writeln!(o, "    {:>6}  {}", a, est(e));
        }
    }
}

fn render_rejection(o: &mut String, r: &RejectionReport) {
    let _ = writeln!(o);
    let _ = writeln!(o, "accepted: {}  proposals: {}  acceptance rate: {:.6}", r.accepted, r.proposals, r.acceptance_rate);
    let _ = writeln!(o, "theta: {}", est(&r.theta));
    let _ = writeln!(o, "TMRCA: {}", est(&r.tmrca));
    for g in &r.grid {
        let _ = writeln!(o);
        let _ = writeln!(o, "time {}:", g.t);
        let _ = writeln!(o, "  A_n(t): {}", est(&g.ancestors));
        if let Some(s) = &g.standing_sites {
            let _ = writeln!(o, "  S_n(t): {}", est(s));
        }
        let _ = writeln!(o, "  line distribution:");
        for (a, e) in &g.ancestor_distribution {
            let _ = writeln!(o, "    {:>6}  {}", a, est(e));
        }
    }
}

fn render_exact(o: &mut String, r: &ExactReport) {
    let _ = writeln!(o);
    let _ = writeln!(o, "ESF probability (unordered): {:.6e}", r.esf_probability);
    let _ = writeln!(o, "log10 ESF probability: {:.6}", r.log10_esf_probability);
    let _ = writeln!(o, "P(S_n = s): {:.6e}", r.seg_sites_probability);
    let _ = writeln!(o, "P(K_n = k): {:.6e}", r.num_alleles_probability);
    for sl in &r.slices {
        let _ = writeln!(o);
        let _ = writeln!(o, "time {}:", sl.t);
        let _ = writeln!(o, "  E[A_n(t) | S_n = s]: {:.6}", sl.cond_mean_ancestors);
        let _ = writeln!(o, "  P(A_n(t) = a), no mutation:");
        for (a, p) in &sl.ancestor_distribution {
            let _ = writeln!(o, "    {:>6}  {:.6e}", a, p);
        }
    }
}

fn render_stats(o: &mut String, r: &StatsReport) {
    let _ = writeln!(o);
    let _ = writeln!(o, "Watterson theta: {:.4}", r.watterson_theta);
    match r.ewens_mle_theta {
        Some(v) => {
            let _ = writeln!(o, "Ewens MLE theta: {v:.4}");
        }
        None => {
            let _ = writeln!(o, "Ewens MLE theta: on the boundary (k = 1 or k = n)");
        }
    }
    let _ = writeln!(o, "E[alpha_1], exact ESF formula n*theta/(n+theta-1): {:.4}", r.expected_singletons_exact);
    let _ = writeln!(o, "Poisson-limit mean of alpha_1: {:.4}", r.poisson_mean_singletons);
    let _ = writeln!(o, "Poisson-limit mean of alpha_2: {:.4}", r.poisson_mean_doubletons);
    let _ = writeln!(o, "observed alpha_1: {}  alpha_2: {}", r.observed_singletons, r.observed_doubletons);
    let _ = writeln!(o, "P(Z_1 >= alpha_1): {:.4e}", r.singleton_tail);
    let _ = writeln!(o, "P(Z_1 + Z_2 >= alpha_1 + alpha_2): {:.4e}", r.singleton_doubleton_tail);
    if let Some(d) = r.tajimas_d {
        let _ = writeln!(o, "Tajima's D: {d:.4}");
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_table(path: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one CSV file per table as `<prefix>_<table>.csv`; returns the paths.
pub fn write_csv(b: &ReportBundle, prefix: &str) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = format!("{prefix}_{name}.csv");
        write_table(&path, header, &rows)?;
        written.push(path);
        Ok(())
    };
    let e3 = |e: &crate::accumulator::WeightedEstimate| [e.mean.to_string(), e.std_error.to_string(), e.effective_sample_size.to_string()];
    if let Some(r) = &b.importance {
        let l = &r.likelihood;
        let mut rows = vec![
            [vec!["likelihood_unordered".into()], e3(&l.unordered).to_vec()].concat(),
            [vec!["likelihood_age_labelled".into()], e3(&l.age_labelled).to_vec()].concat(),
        ];
        if let Some(et) = &r.event_times {
            rows.push([vec!["tmrca".into()], e3(&et.tmrca).to_vec()].concat());
        }
        emit("summary", &["quantity", "mean", "se", "ess"], rows)?;
        if let Some(et) = &r.event_times {
            let mut rows = Vec::new();
            for (kind, v) in [("coalescence", &et.coalescence), ("mutation", &et.mutation), ("loss", &et.loss)] {
                for (i, e) in v.iter().enumerate() {
                    rows.push([vec![kind.to_string(), (i + 1).to_string()], e3(e).to_vec()].concat());
                }
            }
            emit("times", &["event", "rank", "mean", "se", "ess"], rows)?;
        }
        if let Some(ages) = &r.ages {
            let rows = ages
                .iter()
                .enumerate()
                .map(|(i, e)| [vec![(i + 1).to_string(), b.metadata.counts[i].to_string()], e3(e).to_vec()].concat())
                .collect();
            emit("ages", &["haplotype", "count", "mean", "se", "ess"], rows)?;
        }
        if !r.slices.is_empty() {
            let mut cfg = Vec::new();
            let mut lines = Vec::new();
            for sl in &r.slices {
                let t = sl.t.to_string();
                for (q, e) in [("K", &sl.haplotypes), ("S", &sl.mutations), ("A", &sl.lines)] {
                    cfg.push([vec![t.clone(), q.to_string()], e3(e).to_vec()].concat());
                }
                for (i, e) in sl.counts.iter().enumerate() {
                    cfg.push([vec![t.clone(), format!("count_{}", i + 1)], e3(e).to_vec()].concat());
                }
                for (a, e) in &sl.line_distribution {
                    lines.push([vec![t.clone(), a.to_string()], e3(e).to_vec()].concat());
                }
            }
            emit("slices", &["t", "quantity", "mean", "se", "ess"], cfg)?;
            emit("lines", &["t", "lines", "probability", "se", "ess"], lines)?;
        }
    }
    if let Some(r) = &b.rejection {
        let mut grid = Vec::new();
        let mut lines = Vec::new();
        for g in &r.grid {
            let (sm, ss) = g.standing_sites.map_or((String::new(), String::new()), |s| (s.mean.to_string(), s.std_error.to_string()));
            grid.push(vec![g.t.to_string(), g.ancestors.mean.to_string(), g.ancestors.std_error.to_string(), sm, ss]);
            for (a, e) in &g.ancestor_distribution {
                lines.push(vec![g.t.to_string(), a.to_string(), e.mean.to_string(), e.std_error.to_string()]);
            }
        }
        emit("grid", &["t", "ancestors", "ancestors_se", "standing_sites", "standing_sites_se"], grid)?;
        emit("lines", &["t", "lines", "probability", "se"], lines)?;
    }
    if let Some(r) = &b.exact {
        let rows = vec![
            vec!["esf_probability".into(), r.esf_probability.to_string()],
            vec!["seg_sites_probability".into(), r.seg_sites_probability.to_string()],
            vec!["num_alleles_probability".into(), r.num_alleles_probability.to_string()],
        ];
        emit("summary", &["quantity", "value"], rows)?;
        let mut lines = Vec::new();
        for sl in &r.slices {
            for (a, p) in &sl.ancestor_distribution {
                lines.push(vec![sl.t.to_string(), a.to_string(), p.to_string(), sl.cond_mean_ancestors.to_string()]);
            }
        }
        emit("lines", &["t", "lines", "probability", "cond_mean_given_s"], lines)?;
    }
    if let Some(r) = &b.stats {
        let rows = serde_json::to_value(r)
            .map_err(|e| Error::Io(e.to_string()))?
            .as_object()
            .map(|m| m.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect())
            .unwrap_or_default();
        emit("stats", &["quantity", "value"], rows)?;
    }
    Ok(written)
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut time_points = cli.times.clone();
    if time_points.is_empty() && matches!(cli.mode, Mode::Reject3 | Mode::Reject4) {
        time_points = DEFAULT_GRID.to_vec();
    }
    if cli.format == OutputFormat::Csv && cli.output.is_none() {
        return Err(Error::domain("--format csv needs --output PREFIX"));
    }
    Ok(RunConfig {
        dataset: cli.configfile.clone(),
        k: cli.k,
        m: cli.m,
        theta: cli.theta,
        replicates: cli.replicates,
        seed: cli.seed,
        growth_beta: cli.growth,
        age_info: cli.age_info,
        time_points,
        format: cli.format,
        mode: cli.mode,
        prior: parse_prior(&cli.prior, cli.theta)?,
        pi: cli.pi,
    })
}

/// Parses `args` (program name first), runs, writes reports; returns the exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run_parsed(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "esf_stl: {e}");
            exit_code(&e)
        }
    }
}

fn run_parsed(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = build_config(cli)?;
    let data = parse_dataset(Path::new(&config.dataset))?;
    let bundle = with_threads(cli.threads, || execute(&config, &data))??;
    if let Some(w) = bundle.metadata.wall_time_seconds {
        let _ = writeln!(err, "wall time: {w:.3} s");
    }
    match (config.format, &cli.output) {
        (OutputFormat::Text, _) => out.write_all(render_text(&bundle).as_bytes())?,
        (OutputFormat::Json, None) => {
            let j = serde_json::to_string_pretty(&bundle).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{j}")?;
        }
        (OutputFormat::Json, Some(path)) => {
            let j = serde_json::to_string_pretty(&bundle).map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(path, j + "\n")?;
            out.write_all(render_text(&bundle).as_bytes())?;
        }
        (OutputFormat::Csv, Some(prefix)) => {
            for p in write_csv(&bundle, prefix)? {
                let _ = writeln!(err, "wrote {p}");
            }
            out.write_all(render_text(&bundle).as_bytes())?;
        }
        (OutputFormat::Csv, None) => unreachable!("checked in build_config"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let c = parse_dataset_str("21 23 853 188 75 1 68 31 67 217").unwrap();
        assert_eq!((c.n(), c.k()), (1544, 10));
        let c = parse_dataset_str("2").unwrap();
        assert_eq!((c.n(), c.k()), (2, 1));
        let c = parse_dataset_str("# header\n3 4 # trailing\n\n5\n").unwrap();
        assert_eq!(c.counts(), &[3, 4, 5]);
    }

    #[test]
    fn parse_errors_locate_token() {
        match parse_dataset_str("3 0 2") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("{other:?}"),
        }
        match parse_dataset_str("1 2\n 4 x5") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 4)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_dataset_str("# nothing\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_dataset_str("-3"), Err(Error::Parse { .. })));
    }

    #[test]
    fn priors() {
        assert_eq!(parse_prior("fixed", 2.5).unwrap(), ThetaPrior::Fixed { value: 2.5 });
        assert_eq!(parse_prior("uniform:0:10", 2.5).unwrap(), ThetaPrior::Uniform { low: 0.0, high: 10.0 });
        assert!(parse_prior("gamma:1", 2.5).is_err());
        assert!(parse_prior("beta:1:2", 2.5).is_err());
    }
}
