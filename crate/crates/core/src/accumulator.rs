//! Weighted Monte Carlo sums kept relative to a running maximum log weight,
//! so weights spanning hundreds of orders of magnitude can be merged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A ratio estimate Σwx/Σw with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub effective_sample_size: f64,
    pub replicates: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    swx: f64,
    sw2x: f64,
    sw2x2: f64,
}

/// Sums of w, w², wx, w²x, w²x² for a fixed number of quantities, plus
/// sparse indicator cells for integer-valued histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAccumulator {
    log_ref: f64,
    count: u64,
    sw: f64,
    sw2: f64,
    moments: Vec<Moments>,
    hists: Vec<BTreeMap<u32, (f64, f64)>>,
}

impl WeightedAccumulator {
    pub fn new(dim: usize, hist_count: usize) -> Self {
        WeightedAccumulator {
            log_ref: f64::NEG_INFINITY,
            count: 0,
            sw: 0.0,
            sw2: 0.0,
            moments: vec![Moments::default(); dim],
            hists: vec![BTreeMap::new(); hist_count],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn rescale(&mut self, new_ref: f64) {
        if self.log_ref == f64::NEG_INFINITY {
            self.log_ref = new_ref;
            return;
        }
        let f = (self.log_ref - new_ref).exp();
        let f2 = f * f;
        self.sw *= f;
        self.sw2 *= f2;
        for m in &mut self.moments {
            m.swx *= f;
            m.sw2x *= f2;
            m.sw2x2 *= f2;
        }
        for h in &mut self.hists {
            for cell in h.values_mut() {
                cell.0 *= f;
                cell.1 *= f2;
            }
        }
        self.log_ref = new_ref;
    }

    /// Adds one replicate with log weight `log_w` (may be -inf), quantity
    /// values `xs` and histogram categories `cats`.
    pub fn add(&mut self, log_w: f64, xs: &[f64], cats: &[u32]) {
        debug_assert_eq!(xs.len(), self.moments.len());
        debug_assert_eq!(cats.len(), self.hists.len());
        self.count += 1;
        if log_w == f64::NEG_INFINITY {
            return;
        }
        if log_w > self.log_ref {
            self.rescale(log_w);
        }
        let w = (log_w - self.log_ref).exp();
        let w2 = w * w;
        self.sw += w;
        self.sw2 += w2;
        for (m, &x) in self.moments.iter_mut().zip(xs) {
            m.swx += w * x;
            m.sw2x += w2 * x;
            m.sw2x2 += w2 * x * x;
        }
        for (h, &c) in self.hists.iter_mut().zip(cats) {
            let cell = h.entry(c).or_insert((0.0, 0.0));
            cell.0 += w;
            cell.1 += w2;
        }
    }

    /// Folds `other` into `self`; the result depends on argument order only
    /// through floating-point rounding, so callers merge in a fixed order.
    pub fn merge(&mut self, other: &WeightedAccumulator) {
        assert_eq!(self.moments.len(), other.moments.len());
        self.count += other.count;
        if other.log_ref == f64::NEG_INFINITY {
            return;
        }
        if other.log_ref > self.log_ref {
            self.rescale(other.log_ref);
        }
        let f = (other.log_ref - self.log_ref).exp();
        let f2 = f * f;
        self.sw += other.sw * f;
        self.sw2 += other.sw2 * f2;
        for (m, o) in self.moments.iter_mut().zip(&other.moments) {
            m.swx += o.swx * f;
            m.sw2x += o.sw2x * f2;
            m.sw2x2 += o.sw2x2 * f2;
        }
        for (h, o) in self.hists.iter_mut().zip(&other.hists) {
            for (&c, &(a, b)) in o {
                let cell = h.entry(c).or_insert((0.0, 0.0));
                cell.0 += a * f;
                cell.1 += b * f2;
            }
        }
    }

    pub fn effective_sample_size(&self) -> f64 {
        if self.sw2 == 0.0 {
            0.0
        } else {
            self.sw * self.sw / self.sw2
        }
    }

    /// ln of the plain mean weight Σw / N.
    pub fn log_mean_weight(&self) -> f64 {
        if self.sw == 0.0 || self.count == 0 {
            return f64::NEG_INFINITY;
        }
        self.log_ref + self.sw.ln() - (self.count as f64).ln()
    }

    /// Mean weight and its standard error, both multiplied by e^{-shift}.
    pub fn mean_weight(&self, shift: f64) -> WeightedEstimate {
        let n = self.count as f64;
        let ess = self.effective_sample_size();
        if self.sw == 0.0 {
            return WeightedEstimate { mean: 0.0, std_error: 0.0, effective_sample_size: 0.0, replicates: self.count };
        }
        let scale = (self.log_ref - shift).exp();
        let m = self.sw / n;
        let var = if self.count > 1 { ((self.sw2 / n - m * m) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        WeightedEstimate {
            mean: m * scale,
            std_error: (var / n).sqrt() * scale,
            effective_sample_size: ess,
            replicates: self.count,
        }
    }

    fn ratio(&self, swx: f64, sw2x: f64, sw2x2: f64) -> WeightedEstimate {
        let ess = self.effective_sample_size();
        if self.sw == 0.0 {
            return WeightedEstimate { mean: f64::NAN, std_error: f64::NAN, effective_sample_size: 0.0, replicates: self.count };
        }
        let mean = swx / self.sw;
        let num = sw2x2 - 2.0 * mean * sw2x + mean * mean * self.sw2;
        WeightedEstimate {
            mean,
            std_error: num.max(0.0).sqrt() / self.sw,
            effective_sample_size: ess,
            replicates: self.count,
        }
    }

    /// Weighted mean of quantity `i`.
    pub fn estimate(&self, i: usize) -> WeightedEstimate {
        let m = self.moments[i];
        self.ratio(m.swx, m.sw2x, m.sw2x2)
    }

    /// Weighted probabilities of each category seen in histogram `h`.
    pub fn histogram(&self, h: usize) -> Vec<(u32, WeightedEstimate)> {
        self.hists[h].iter().map(|(&c, &(a, b))| (c, self.ratio(a, b, b))).collect()
    }
}
