use alloc::vec;
use alloc::vec::Vec;

use crate::model::{DataGraph, EnergyBinning};
use crate::{Error, Result};

/// Sample count with the first two moments of `d = E - center(bin)`.
///
/// The moments let reweighting apply the within-bin Boltzmann factor
/// `exp(-d/T)` to second order, which matters only for continuous spectra;
/// on integer spectra `d` is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub count: u64,
    pub d1: f64,
    pub d2: f64,
}

impl Tally {
    #[inline]
    pub fn add(&mut self, d: f64) {
        self.count += 1;
        self.d1 += d;
        self.d2 += d * d;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.count += other.count;
        self.d1 += other.d1;
        self.d2 += other.d2;
    }

    /// `sum over samples of (1 - d/T + d^2/(2T^2))`, positive whenever
    /// `count > 0`.
    #[inline]
    pub fn mass(&self, t: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let m = self.count as f64 - self.d1 / t + self.d2 / (2.0 * t * t);
        m.max(0.0)
    }
}

/// Statistics of all samples that fell into one energy bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub samples: Tally,
    /// `node[i * q + k]`: samples with point `i` in state `k`.
    pub node: Vec<Tally>,
    /// Samples whose edge endpoints agree, per graph edge.
    pub edge_agree: Vec<Tally>,
}

impl BinStats {
    fn new(n_points: usize, q: usize, n_edges: usize) -> Self {
        BinStats {
            samples: Tally::default(),
            node: vec![Tally::default(); n_points * q],
            edge_agree: vec![Tally::default(); n_edges],
        }
    }

    fn merge(&mut self, other: &BinStats) {
        self.samples.merge(&other.samples);
        for (a, b) in self.node.iter_mut().zip(&other.node) {
            a.merge(b);
        }
        for (a, b) in self.edge_agree.iter_mut().zip(&other.edge_agree) {
            a.merge(b);
        }
    }
}

/// Per-energy-bin sufficient statistics for reweighting to any temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalAccumulator {
    binning: EnergyBinning,
    n_points: usize,
    q: usize,
    n_edges: usize,
    bins: Vec<Option<BinStats>>,
}

impl MarginalAccumulator {
    pub fn new(binning: EnergyBinning, n_points: usize, q: usize, n_edges: usize) -> Self {
        MarginalAccumulator { binning, n_points, q, n_edges, bins: vec![None; binning.n_bins()] }
    }

    pub fn for_graph(graph: &DataGraph, binning: EnergyBinning) -> Self {
        Self::new(binning, graph.n_points(), graph.q(), graph.edges().len())
    }

    pub fn binning(&self) -> &EnergyBinning {
        &self.binning
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn bin(&self, bin: usize) -> Option<&BinStats> {
        self.bins.get(bin).and_then(|b| b.as_ref())
    }

    /// Bins holding at least one sample, ascending.
    pub fn occupied_bins(&self) -> impl Iterator<Item = (usize, &BinStats)> + '_ {
        self.bins.iter().enumerate().filter_map(|(b, s)| s.as_ref().map(|s| (b, s)))
    }

    pub fn samples_in(&self, bin: usize) -> u64 {
        self.bin(bin).map_or(0, |s| s.samples.count)
    }

    pub fn total_samples(&self) -> u64 {
        self.occupied_bins().map(|(_, s)| s.samples.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_samples() == 0
    }

    /// Adds one configuration. Energies outside the binning are ignored.
    pub fn record(&mut self, graph: &DataGraph, states: &[usize], energy: f64) {
        let Some(b) = self.binning.bin(energy) else { return };
        let d = energy - self.binning.center(b);
        let (n, q, m) = (self.n_points, self.q, self.n_edges);
        let stats = self.bins[b].get_or_insert_with(|| BinStats::new(n, q, m));
        stats.samples.add(d);
        for (p, &s) in states.iter().enumerate() {
            stats.node[p * q + s].add(d);
        }
        for (slot, e) in stats.edge_agree.iter_mut().zip(graph.edges()) {
            if states[e.i] == states[e.j] {
                slot.add(d);
            }
        }
    }

    /// Inserts a whole bin, replacing what was there. Used by checkpoint
    /// readers.
    pub fn insert_bin(&mut self, bin: usize, stats: BinStats) -> Result<()> {
        if bin >= self.bins.len()
            || stats.node.len() != self.n_points * self.q
            || stats.edge_agree.len() != self.n_edges
        {
            return Err(Error::BinningMismatch);
        }
        self.bins[bin] = Some(stats);
        Ok(())
    }

    /// Componentwise sum of two accumulators over the same graph and binning.
    pub fn merge(&self, other: &MarginalAccumulator) -> Result<MarginalAccumulator> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &MarginalAccumulator) -> Result<()> {
        if self.binning != other.binning
            || self.n_points != other.n_points
            || self.q != other.q
            || self.n_edges != other.n_edges
        {
            return Err(Error::BinningMismatch);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            match (a.as_mut(), b) {
                (_, None) => {}
                (Some(a), Some(b)) => a.merge(b),
                (None, Some(b)) => *a = Some(b.clone()),
            }
        }
        Ok(())
    }
}
