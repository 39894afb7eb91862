use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::sampler::{DensityOfStates, MarginalAccumulator};
use crate::{Error, Result};

/// Share of the total weight above which one bin "dominates" a reweighting.
pub const GROUND_DOMINANCE: f64 = 1.0 - 1e-12;

/// Single-point marginals and same-state probabilities at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    /// `0.0` for the ground-state table.
    pub temperature: f64,
    /// `probs[i][k]` = P(s_i = k).
    pub probs: Vec<Vec<f64>>,
    /// P(s_i = s_j) per graph edge, which is the pairwise correlation `C_ij`.
    pub edge_same: Vec<f64>,
    /// Set when a single energy bin carries essentially all of the weight.
    pub ground_dominated: bool,
}

impl MarginalTable {
    pub fn new(temperature: f64, probs: Vec<Vec<f64>>, edge_same: Vec<f64>) -> Self {
        MarginalTable { temperature, probs, edge_same, ground_dominated: false }
    }

    pub fn n_points(&self) -> usize {
        self.probs.len()
    }

    pub fn q(&self) -> usize {
        self.probs.first().map_or(0, |r| r.len())
    }

    /// Most probable class with the first and second highest probabilities.
    /// Ties resolve to the lower class index, and then `p1 == p2`.
    pub fn top_two(&self, point: usize) -> (usize, f64, f64) {
        let row = &self.probs[point];
        let mut best = 0;
        for (k, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = k;
            }
        }
        let second = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != best)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        (best, row[best], second)
    }
}

/// How per-bin statistics are weighted when moving to a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReweightMode {
    /// Microcanonical bin averages weighted by `D(E) exp(-E/T)`.
    #[default]
    Density,
    /// Importance weights `D(E) exp(-E/T)` applied to every sample, so the
    /// realised histogram corrects residual errors in `D`.
    SampleCorrected,
}

/// Boltzmann marginals at `t` recovered from flat-histogram statistics.
pub fn reweight(dos: &DensityOfStates, acc: &MarginalAccumulator, t: f64) -> Result<MarginalTable> {
    reweight_with(dos, acc, t, ReweightMode::Density)
}

pub fn reweight_with(
    dos: &DensityOfStates,
    acc: &MarginalAccumulator,
    t: f64,
    mode: ReweightMode,
) -> Result<MarginalTable> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("temperature must be positive, got {t}")));
    }
    if dos.binning() != acc.binning() {
        return Err(Error::BinningMismatch);
    }
    let binning = acc.binning();
    // log of the per-sample factor shared by every statistic in the bin
    let bins: Vec<(usize, f64, f64)> = acc
        .occupied_bins()
        .filter_map(|(b, s)| {
            let ln_d = dos.ln_density(b)?;
            let mut base = ln_d - binning.center(b) / t;
            if mode == ReweightMode::Density {
                base -= math::ln(s.samples.count as f64);
            }
            let mass = s.samples.mass(t);
            (mass > 0.0).then(|| (b, base, mass))
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::EmptyAccumulator);
    }
    let shift = bins.iter().map(|&(_, base, mass)| base + math::ln(mass)).fold(f64::NEG_INFINITY, f64::max);
    let scales: Vec<f64> = bins.iter().map(|&(_, base, _)| math::exp(base - shift)).collect();
    let z: f64 = bins.iter().zip(&scales).map(|(&(_, _, mass), s)| s * mass).sum();
    let dominant = bins.iter().zip(&scales).map(|(&(_, _, mass), s)| s * mass / z).fold(0.0, f64::max);

    let (n, q) = (acc.n_points(), acc.q());
    let mut node = vec![0.0; n * q];
    let mut agree = vec![0.0; acc.n_edges()];
    for (&(b, _, _), &scale) in bins.iter().zip(&scales) {
        let stats = acc.bin(b).expect("occupied bin");
        for (slot, tally) in node.iter_mut().zip(&stats.node) {
            *slot += scale * tally.mass(t);
        }
        for (slot, tally) in agree.iter_mut().zip(&stats.edge_agree) {
            *slot += scale * tally.mass(t);
        }
    }
    let probs = (0..n)
        .map(|p| {
            let row = &node[p * q..(p + 1) * q];
            let total: f64 = row.iter().sum();
            row.iter().map(|v| v / total).collect()
        })
        .collect();
    let edge_same = agree.iter().map(|a| (a / z).clamp(0.0, 1.0)).collect();
    let mut table = MarginalTable::new(t, probs, edge_same);
    table.ground_dominated = dominant > GROUND_DOMINANCE;
    Ok(table)
}

/// Empirical marginals of the lowest occupied energy bin: the `T -> 0`
/// limit of the reweighted distribution.
pub fn t_zero_table(dos: &DensityOfStates, acc: &MarginalAccumulator) -> Result<MarginalTable> {
    if dos.binning() != acc.binning() {
        return Err(Error::BinningMismatch);
    }
    let (_, stats) = acc
        .occupied_bins()
        .find(|(b, _)| dos.is_visited(*b))
        .ok_or(Error::EmptyAccumulator)?;
    let total = stats.samples.count as f64;
    let (n, q) = (acc.n_points(), acc.q());
    let probs = (0..n).map(|p| (0..q).map(|k| stats.node[p * q + k].count as f64 / total).collect()).collect();
    let edge_same = stats.edge_agree.iter().map(|t| t.count as f64 / total).collect();
    let mut table = MarginalTable::new(0.0, probs, edge_same);
    table.ground_dominated = true;
    Ok(table)
}

/// Lowest occupied bin energy (its centre), if any.
pub fn lowest_sampled_energy(dos: &DensityOfStates, acc: &MarginalAccumulator) -> Option<f64> {
    acc.occupied_bins().map(|(b, _)| b).find(|&b| dos.is_visited(b)).map(|b| acc.binning().center(b))
}
