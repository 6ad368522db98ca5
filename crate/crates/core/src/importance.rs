//! Sequential importance sampling of haplotype-and-mutation histories back in
//! time from an observed (n; s).
//!
//! A lineage is picked uniformly. If its haplotype has more than one copy it
//! coalesces; a singleton either mutates into the type of a second uniformly
//! chosen line (defining mutation, the haplotype is lost) or, when the second
//! line is itself, carries an extra mutation. When s = k - 1 extra mutations
//! are impossible and the second line is chosen among the other n - 1; with
//! two haplotypes and s > 1 a singleton can only carry an extra mutation.
//! Weights are forward one-step probabilities of the recursion
//!
//!   p(n; s) = Σ_{n_j>1} (n_j-1)/(n+θ-1) p(n-e_j; s)
//!           + θ/(n+θ-1) Σ_{i,l: n_i=1} (n_l+1-δ_il)/n p(n-e_i+e_l; s-1),
//!   p((1); 0) = 1,
//!
//! divided by the proposal probability, so the mean weight is p(n; s) and the
//! probability of the unordered configuration is p(n; s)/Π α_j!.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::accumulator::{WeightedAccumulator, WeightedEstimate};
use crate::error::{Error, Result};
use crate::genealogy::TimeModel;
use crate::parallel::{map_chunks, seed_replicate_rng};
use crate::sample::ObservedSample;

/// Backward move. Indices are identity labels (input positions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Coalesce { i: usize },
    Defining { i: usize, l: usize },
    Extra { i: usize },
}

impl Move {
    pub fn is_mutation(&self) -> bool {
        !matches!(self, Move::Coalesce { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ISState {
    /// Current count of each labelled haplotype; 0 once lost.
    pub counts: Vec<u32>,
    pub n: u32,
    pub k: u32,
    pub s_rem: u32,
    pub time: f64,
    pub log_weight: f64,
}

impl ISState {
    pub fn initial(sample: &ObservedSample) -> Self {
        let counts = sample.config.counts().to_vec();
        ISState {
            n: counts.iter().sum(),
            k: counts.len() as u32,
            counts,
            s_rem: sample.s,
            time: 0.0,
            log_weight: 0.0,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.n <= 1
    }

    /// p(n; s) is zero: too few mutations for the haplotypes, or a single
    /// haplotype still carrying mutations.
    pub fn is_impossible(&self) -> bool {
        (self.s_rem as u64 + 1) < self.k as u64 || (self.k == 1 && self.s_rem > 0)
    }

    pub fn apply(&mut self, mv: Move) {
        match mv {
            Move::Coalesce { i } => {
                self.counts[i] -= 1;
                self.n -= 1;
            }
            Move::Defining { i, l } => {
                self.counts[i] = 0;
                self.counts[l] += 1;
                self.k -= 1;
                self.s_rem -= 1;
            }
            Move::Extra { .. } => self.s_rem -= 1,
        }
    }

    /// Label of the `r`-th line (lines grouped by label), skipping label `skip`.
    fn line_label(&self, mut r: u32, skip: Option<usize>) -> usize {
        for (j, &c) in self.counts.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            if r < c {
                return j;
            }
            r -= c;
        }
        unreachable!("line index beyond population")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    /// k ≥ 3 and s - k + 1 > 0.
    Free,
    /// s - k + 1 = 0, k ≥ 2.
    Tight,
    /// k = 2 and s > 1.
    TwoHaplotypes,
    /// k = 1.
    Single,
}

fn regime(st: &ISState) -> Regime {
    if st.k == 1 {
        Regime::Single
    } else if st.s_rem + 1 == st.k {
        Regime::Tight
    } else if st.k == 2 {
        Regime::TwoHaplotypes
    } else {
        Regime::Free
    }
}

/// Every admissible move with its proposal probability.
pub fn admissible_moves(st: &ISState) -> Vec<(Move, f64)> {
    let n = st.n as f64;
    let mut out = Vec::new();
    if st.is_terminal() || st.is_impossible() {
        return out;
    }
    let reg = regime(st);
    for (i, &c) in st.counts.iter().enumerate() {
        if c > 1 {
            out.push((Move::Coalesce { i }, c as f64 / n));
        } else if c == 1 {
            match reg {
                Regime::Single => {}
                Regime::TwoHaplotypes => out.push((Move::Extra { i }, 1.0 / n)),
                Regime::Free => {
                    out.push((Move::Extra { i }, 1.0 / (n * n)));
                    for (l, &cl) in st.counts.iter().enumerate() {
                        if l != i && cl > 0 {
                            out.push((Move::Defining { i, l }, cl as f64 / (n * n)));
                        }
                    }
                }
                Regime::Tight => {
                    for (l, &cl) in st.counts.iter().enumerate() {
                        if l != i && cl > 0 {
                            out.push((Move::Defining { i, l }, cl as f64 / (n * (n - 1.0))));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Draws one backward move; returns it with its log proposal probability.
pub fn propose_step<R: Rng + ?Sized>(st: &ISState, rng: &mut R) -> Result<(Move, f64)> {
    if st.is_terminal() || st.is_impossible() {
        return Err(Error::DeadEnd(format!("no admissible move from n={} k={} s={}", st.n, st.k, st.s_rem)));
    }
    let n = st.n;
    let nf = n as f64;
    let i = st.line_label(rng.random_range(0..n), None);
    let ci = st.counts[i];
    if ci > 1 {
        return Ok((Move::Coalesce { i }, (ci as f64 / nf).ln()));
    }
    match regime(st) {
        Regime::Single => Err(Error::DeadEnd("singleton with one haplotype".into())),
        Regime::TwoHaplotypes => Ok((Move::Extra { i }, -nf.ln())),
        Regime::Free => {
            let l = st.line_label(rng.random_range(0..n), None);
            if l == i {
                Ok((Move::Extra { i }, -2.0 * nf.ln()))
            } else {
                Ok((Move::Defining { i, l }, (st.counts[l] as f64).ln() - 2.0 * nf.ln()))
            }
        }
        Regime::Tight => {
            let l = st.line_label(rng.random_range(0..n - 1), Some(i));
            Ok((Move::Defining { i, l }, (st.counts[l] as f64).ln() - nf.ln() - (nf - 1.0).ln()))
        }
    }
}

/// ln of the forward one-step probability of `mv` from `st`.
pub fn log_forward(st: &ISState, mv: Move, theta: f64) -> f64 {
    let n = st.n as f64;
    let denom = (n + theta - 1.0).ln();
    match mv {
        Move::Coalesce { i } => ((st.counts[i] - 1) as f64).ln() - denom,
        Move::Defining { l, .. } => theta.ln() - denom + ((st.counts[l] + 1) as f64).ln() - n.ln(),
        Move::Extra { .. } => theta.ln() - denom - n.ln(),
    }
}

/// ln(forward / proposal) for one step under the constant-size model.
pub fn step_log_weight(st: &ISState, mv: Move, log_proposal: f64, theta: f64) -> f64 {
    log_forward(st, mv, theta) - log_proposal
}

/// Holding time with `m` lines from `t0`, and the log weight correction for an
/// event of the given type when coalescence intensity varies in time.
fn holding<R: Rng + ?Sized>(model: TimeModel, m: u32, t0: f64, theta: f64, mutation: bool, rng: &mut R) -> (f64, f64) {
    let mf = m as f64;
    let beta = model.beta();
    if beta == 0.0 {
        let e: f64 = Exp1.sample(rng);
        return (e / (mf * (mf - 1.0 + theta) / 2.0), 0.0);
    }
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    let uc = model.coalescence_wait(m, t0, e1);
    let um = e2 / (mf * theta / 2.0);
    let dt = uc.min(um);
    let x = beta * (t0 + dt);
    // P(type | t) / P_const(type) with coalescence weight (m-1)e^{βt} against θ.
    let corr = if mutation {
        (mf - 1.0 + theta).ln() - (x + ((mf - 1.0) + theta * (-x).exp()).ln())
    } else {
        (mf - 1.0 + theta).ln() - ((mf - 1.0) + theta * (-x).exp()).ln()
    };
    (dt, corr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub time: f64,
    pub mv: Move,
}

/// One sampled history, from the sample back to a single line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ISPath {
    pub initial: Vec<u32>,
    pub s: u32,
    pub events: Vec<PathEvent>,
    /// -inf for a sample of probability zero.
    pub log_weight: f64,
}

/// Snapshot of a path at a backward time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub counts: Vec<u32>,
    /// Haplotypes present.
    pub k: u32,
    /// Mutations older than t.
    pub s: u32,
    /// Lines present.
    pub lines: u32,
}

impl ISPath {
    pub fn tmrca(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// State after every event at or before `t`. At or beyond the MRCA there is
    /// one line and no haplotype is counted.
    pub fn snapshot_at(&self, t: f64) -> Snapshot {
        let mut counts = self.initial.clone();
        let mut n: u32 = counts.iter().sum();
        let mut k = counts.len() as u32;
        let mut s = self.s;
        for e in &self.events {
            if e.time > t {
                break;
            }
            match e.mv {
                Move::Coalesce { i } => {
                    counts[i] -= 1;
                    n -= 1;
                }
                Move::Defining { i, l } => {
                    counts[i] = 0;
                    counts[l] += 1;
                    k -= 1;
                    s -= 1;
                }
                Move::Extra { .. } => s -= 1,
            }
        }
        if n <= 1 && !self.events.is_empty() {
            counts.iter_mut().for_each(|c| *c = 0);
            k = 0;
        }
        Snapshot { counts, k, s, lines: n }
    }

    /// Defining-mutation time of each haplotype; the survivor gets the TMRCA.
    pub fn ages(&self) -> Vec<f64> {
        let tmrca = self.tmrca();
        let mut ages = vec![tmrca; self.initial.len()];
        for e in &self.events {
            if let Move::Defining { i, .. } = e.mv {
                ages[i] = e.time;
            }
        }
        ages
    }

    /// Time each haplotype stops being represented among the ancestral lines.
    /// Equal to the age except when the defining mutation joins the last two
    /// single lines: both stay distinct lines until they merge at the TMRCA.
    pub fn loss_times(&self) -> Vec<f64> {
        let tmrca = self.tmrca();
        let mut loss = self.ages();
        let mut n: u32 = self.initial.iter().sum();
        for e in &self.events {
            match e.mv {
                Move::Coalesce { .. } => n -= 1,
                Move::Defining { i, .. } if n == 2 => loss[i] = tmrca,
                _ => {}
            }
        }
        loss
    }
}

/// Fills `path` with a fresh history. Reuses the event buffer.
pub fn simulate_path_into<R: Rng + ?Sized>(
    sample: &ObservedSample,
    theta: f64,
    model: TimeModel,
    rng: &mut R,
    path: &mut ISPath,
) -> Result<()> {
    let mut st = ISState::initial(sample);
    path.initial.clear();
    path.initial.extend_from_slice(sample.config.counts());
    path.s = sample.s;
    path.events.clear();
    if st.is_impossible() {
        path.log_weight = f64::NEG_INFINITY;
        return Ok(());
    }
    while !st.is_terminal() {
        let (mv, lq) = propose_step(&st, rng)?;
        let lw = step_log_weight(&st, mv, lq, theta);
        let (dt, corr) = holding(model, st.n, st.time, theta, mv.is_mutation(), rng);
        st.log_weight += lw + corr;
        st.time += dt;
        st.apply(mv);
        path.events.push(PathEvent { time: st.time, mv });
    }
    path.log_weight = st.log_weight;
    Ok(())
}

pub fn simulate_path<R: Rng + ?Sized>(sample: &ObservedSample, theta: f64, model: TimeModel, rng: &mut R) -> Result<ISPath> {
    let mut path = ISPath::default();
    simulate_path_into(sample, theta, model, rng, &mut path)?;
    Ok(path)
}

/// What to estimate in one importance-sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceOptions {
    pub theta: f64,
    pub model: TimeModel,
    pub replicates: u64,
    pub seed: u64,
    pub event_times: bool,
    pub ages: bool,
    pub time_grid: Vec<f64>,
}

impl ImportanceOptions {
    pub fn new(theta: f64, model: TimeModel, replicates: u64, seed: u64) -> Self {
        ImportanceOptions { theta, model, replicates, seed, event_times: false, ages: false, time_grid: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEstimate {
    /// Mean weight, p(n; s).
    pub age_labelled: WeightedEstimate,
    /// p(n; s) / Π α_j!.
    pub unordered: WeightedEstimate,
    pub log10_unordered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimes {
    /// Coalescence times in increasing order; the last is the TMRCA.
    pub coalescence: Vec<WeightedEstimate>,
    /// Mutation times in increasing order.
    pub mutation: Vec<WeightedEstimate>,
    /// Haplotype loss times in increasing order; the survivor is lost at the TMRCA.
    pub loss: Vec<WeightedEstimate>,
    pub tmrca: WeightedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t: f64,
    /// Mean count of each haplotype, input order.
    pub counts: Vec<WeightedEstimate>,
    pub haplotypes: WeightedEstimate,
    pub mutations: WeightedEstimate,
    pub lines: WeightedEstimate,
    /// P(lines = a).
    pub line_distribution: Vec<(u32, WeightedEstimate)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub likelihood: LikelihoodEstimate,
    pub event_times: Option<EventTimes>,
    /// Mean age of each haplotype, input order.
    pub ages: Option<Vec<WeightedEstimate>>,
    pub slices: Vec<TimeSlice>,
}

struct Layout {
    n: usize,
    s: usize,
    k: usize,
    times: bool,
    ages: bool,
    grid: usize,
}

impl Layout {
    fn times_len(&self) -> usize {
        if self.times {
            (self.n - 1) + self.s + self.k + 1
        } else {
            0
        }
    }
    fn ages_off(&self) -> usize {
        self.times_len()
    }
    fn slice_off(&self) -> usize {
        self.ages_off() + if self.ages { self.k } else { 0 }
    }
    fn slice_len(&self) -> usize {
        self.k + 3
    }
    fn dim(&self) -> usize {
        self.slice_off() + self.grid * self.slice_len()
    }
}

fn fill_values(path: &ISPath, lay: &Layout, grid: &[f64], xs: &mut Vec<f64>, cats: &mut Vec<u32>) {
    xs.clear();
    cats.clear();
    if lay.times {
        let mut muts = Vec::with_capacity(lay.s);
        for e in &path.events {
            if e.mv.is_mutation() {
                muts.push(e.time);
            } else {
                xs.push(e.time);
            }
        }
        xs.extend_from_slice(&muts);
        let mut loss = path.loss_times();
        loss.sort_by(f64::total_cmp);
        xs.extend_from_slice(&loss);
        xs.push(path.tmrca());
    }
    if lay.ages {
        xs.extend(path.ages());
    }
    for &t in grid {
        let snap = path.snapshot_at(t);
        xs.extend(snap.counts.iter().map(|&c| c as f64));
        xs.push(snap.k as f64);
        xs.push(snap.s as f64);
        xs.push(snap.lines as f64);
        cats.push(snap.lines);
    }
}

/// Runs `options.replicates` independent paths in chunks with per-chunk RNG
/// streams and reduces the accumulators in chunk order.
pub fn run_importance(sample: &ObservedSample, options: &ImportanceOptions) -> Result<ImportanceReport> {
    let theta = options.theta;
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite and > 0, got {theta}")));
    }
    if options.replicates == 0 {
        return Err(Error::domain("replicates must be >= 1"));
    }
    if options.time_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain("time points must be finite and >= 0"));
    }
    if let TimeModel::ExpGrowth { beta } = options.model {
        TimeModel::exp_growth(beta)?;
    }
    if sample.config.n() < 2 {
        return Err(Error::domain("importance sampling needs n >= 2"));
    }
    let possible = !ISState::initial(sample).is_impossible();
    if !possible && (options.event_times || options.ages || !options.time_grid.is_empty()) {
        return Err(Error::DataMismatch(format!(
            "s = {} is incompatible with k = {}: conditional summaries are undefined",
            sample.s,
            sample.config.k()
        )));
    }
    let lay = Layout {
        n: sample.config.n() as usize,
        s: sample.s as usize,
        k: sample.config.k(),
        times: options.event_times,
        ages: options.ages,
        grid: options.time_grid.len(),
    };
    let dim = lay.dim();
    let parts: Vec<Result<WeightedAccumulator>> = map_chunks(options.replicates, |c, _first, count| {
        let mut rng = seed_replicate_rng(options.seed, c);
        let mut acc = WeightedAccumulator::new(dim, lay.grid);
        let mut path = ISPath::default();
        let mut xs = Vec::with_capacity(dim);
        let mut cats = Vec::with_capacity(lay.grid);
        for _ in 0..count {
            simulate_path_into(sample, theta, options.model, &mut rng, &mut path)?;
            if path.log_weight.is_nan() {
                return Err(Error::domain("importance weight is NaN"));
            }
            fill_values(&path, &lay, &options.time_grid, &mut xs, &mut cats);
            acc.add(path.log_weight, &xs, &cats);
        }
        Ok(acc)
    });
    let mut total = WeightedAccumulator::new(dim, lay.grid);
    for p in parts {
        total.merge(&p?);
    }
    Ok(build_report(sample, options, &lay, &total))
}

fn build_report(sample: &ObservedSample, options: &ImportanceOptions, lay: &Layout, acc: &WeightedAccumulator) -> ImportanceReport {
    let age_labelled = acc.mean_weight(0.0);
    let lmf = sample.config.log_multiplicity_factorials();
    let unordered = acc.mean_weight(lmf);
    let log10_unordered = (acc.log_mean_weight() - lmf) / std::f64::consts::LN_10;
    let likelihood = LikelihoodEstimate { age_labelled, unordered, log10_unordered };
    let est = |i: usize| acc.estimate(i);
    let event_times = lay.times.then(|| {
        let c0 = 0;
        let m0 = lay.n - 1;
        let l0 = m0 + lay.s;
        let t0 = l0 + lay.k;
        EventTimes {
            coalescence: (c0..m0).map(est).collect(),
            mutation: (m0..l0).map(est).collect(),
            loss: (l0..t0).map(est).collect(),
            tmrca: est(t0),
        }
    });
    let ages = lay.ages.then(|| (lay.ages_off()..lay.ages_off() + lay.k).map(est).collect());
    let slices = options
        .time_grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let off = lay.slice_off() + g * lay.slice_len();
            TimeSlice {
                t,
                counts: (off..off + lay.k).map(est).collect(),
                haplotypes: est(off + lay.k),
                mutations: est(off + lay.k + 1),
                lines: est(off + lay.k + 2),
                line_distribution: acc.histogram(g),
            }
        })
        .collect();
    ImportanceReport { likelihood, event_times, ages, slices }
}

pub fn estimate_likelihood(sample: &ObservedSample, theta: f64, model: TimeModel, replicates: u64, seed: u64) -> Result<LikelihoodEstimate> {
    Ok(run_importance(sample, &ImportanceOptions::new(theta, model, replicates, seed))?.likelihood)
}

pub fn estimate_event_times(sample: &ObservedSample, theta: f64, model: TimeModel, replicates: u64, seed: u64) -> Result<EventTimes> {
    let mut o = ImportanceOptions::new(theta, model, replicates, seed);
    o.event_times = true;
    Ok(run_importance(sample, &o)?.event_times.expect("requested"))
}

pub fn estimate_allele_ages(sample: &ObservedSample, theta: f64, model: TimeModel, replicates: u64, seed: u64) -> Result<Vec<WeightedEstimate>> {
    let mut o = ImportanceOptions::new(theta, model, replicates, seed);
    o.ages = true;
    Ok(run_importance(sample, &o)?.ages.expect("requested"))
}

pub fn estimate_config_at_time(
    sample: &ObservedSample,
    theta: f64,
    model: TimeModel,
    t: f64,
    replicates: u64,
    seed: u64,
) -> Result<TimeSlice> {
    let mut o = ImportanceOptions::new(theta, model, replicates, seed);
    o.time_grid = vec![t];
    Ok(run_importance(sample, &o)?.slices.remove(0))
}
