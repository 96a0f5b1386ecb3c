//! Radial histograms of zero configurations on equal-area bins.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// mean count per sample in each bin
    PerSample,
    /// mean count per sample per unit area
    PerArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Σ over samples of the squared per-sample counts, for error bars.
    pub sum_sq: Vec<f64>,
    pub samples: u64,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySummary {
    /// index of the bin containing the boundary radius
    pub boundary_bin: usize,
    pub boundary_mass: f64,
    /// largest per-sample mass over the bins entirely inside the window given
    pub neighbour_mass: f64,
    /// per-area density of zeros in the window, per sample
    pub window_density: f64,
}

impl RadialHistogram {
    /// Empty histogram with `bins` equal-area bins on `lo ≤ |z| < hi`.
    pub fn new(bins: usize, lo: f64, hi: f64, normalization: Normalization) -> Result<Self> {
        if bins == 0 || !(hi > lo && lo >= 0.0) {
            return arg_err(format!("histogram needs bins > 0 and 0 <= lo < hi, got {bins}, [{lo}, {hi})"));
        }
        let bin_edges = (0..=bins).map(|i| (lo * lo + (hi * hi - lo * lo) * i as f64 / bins as f64).sqrt()).collect();
        Ok(RadialHistogram { bin_edges, counts: vec![0; bins], sum_sq: vec![0.0; bins], samples: 0, normalization })
    }

    /// Explicit bin edges.
    pub fn with_edges(bin_edges: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) || bin_edges[0] < 0.0 {
            return arg_err("bin edges must be nonnegative and strictly increasing");
        }
        let b = bin_edges.len() - 1;
        Ok(RadialHistogram { bin_edges, counts: vec![0; b], sum_sq: vec![0.0; b], samples: 0, normalization })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    fn bin_of(&self, s: f64) -> Option<usize> {
        let e = &self.bin_edges;
        if s < e[0] || s >= e[e.len() - 1] {
            return None;
        }
        Some(e.partition_point(|x| *x <= s) - 1)
    }

    pub fn add(&mut self, zeros: &[Complex64]) {
        let mut local = vec![0u64; self.bins()];
        for z in zeros {
            if let Some(b) = self.bin_of(z.norm()) {
                local[b] += 1;
            }
        }
        for (i, c) in local.into_iter().enumerate() {
            self.counts[i] += c;
            self.sum_sq[i] += (c * c) as f64;
        }
        self.samples += 1;
    }

    /// Associative merge of two histograms on the same bins.
    pub fn merge(&mut self, other: &RadialHistogram) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return arg_err("cannot merge histograms with different bins");
        }
        for i in 0..self.bins() {
            self.counts[i] += other.counts[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn area(&self, i: usize) -> f64 {
        std::f64::consts::PI * (self.bin_edges[i + 1].powi(2) - self.bin_edges[i].powi(2))
    }

    fn norm(&self, i: usize) -> f64 {
        match self.normalization {
            Normalization::PerSample => 1.0,
            Normalization::PerArea => self.area(i),
        }
    }

    /// Normalized density per bin.
    pub fn density(&self) -> Vec<f64> {
        let n = self.samples.max(1) as f64;
        (0..self.bins()).map(|i| self.counts[i] as f64 / n / self.norm(i)).collect()
    }

    /// Standard error of each density value, treating samples as independent.
    pub fn stderr(&self) -> Vec<f64> {
        let n = self.samples.max(1) as f64;
        (0..self.bins())
            .map(|i| {
                let m = self.counts[i] as f64 / n;
                let var = (self.sum_sq[i] / n - m * m).max(0.0);
                (var / n).sqrt() / self.norm(i)
            })
            .collect()
    }

    /// Mean number of zeros per sample inside the window.
    pub fn mean_count(&self) -> f64 {
        self.counts.iter().sum::<u64>() as f64 / self.samples.max(1) as f64
    }

    /// Mass (per sample) of the bin holding `boundary`, the largest bin mass
    /// over bins inside `(lo, hi)`, and the per-area density on `(lo, hi)`.
    pub fn boundary_summary(&self, boundary: f64, lo: f64, hi: f64) -> Option<BoundarySummary> {
        let b = self.bin_of(boundary)?;
        let n = self.samples.max(1) as f64;
        let inside: Vec<usize> =
            (0..self.bins()).filter(|i| self.bin_edges[*i] >= lo && self.bin_edges[i + 1] <= hi).collect();
        let neighbour_mass = inside.iter().map(|i| self.counts[*i] as f64 / n).fold(0.0, f64::max);
        let area: f64 = inside.iter().map(|i| self.area(*i)).sum();
        let count: f64 = inside.iter().map(|i| self.counts[*i] as f64 / n).sum();
        Some(BoundarySummary {
            boundary_bin: b,
            boundary_mass: self.counts[b] as f64 / n,
            neighbour_mass,
            window_density: if area > 0.0 { count / area } else { 0.0 },
        })
    }
}

/// Histogram of a batch of zero sets.
pub fn radial_histogram<'a, I>(samples: I, bins: usize, window: (f64, f64), normalization: Normalization) -> Result<RadialHistogram>
where
    I: IntoIterator<Item = &'a [Complex64]>,
{
    let mut h = RadialHistogram::new(bins, window.0, window.1, normalization)?;
    let mut any = false;
    for z in samples {
        h.add(z);
        any = true;
    }
    if !any {
        return arg_err("radial histogram needs at least one sample");
    }
    Ok(h)
}
