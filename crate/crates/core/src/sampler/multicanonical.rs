use crate::math;
use crate::model::DataGraph;
use crate::{Error, Result};

use super::{DensityOfStates, MarginalAccumulator, Walker};

/// Production run settings for the flat-histogram walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingParams {
    pub n_samples: u64,
    /// Sweeps between recorded samples.
    pub thinning: u64,
    /// Sweeps discarded before the first sample.
    pub burn_in: u64,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { n_samples: 100_000, thinning: 1, burn_in: 1_000, seed: 0 }
    }
}

/// Samples configurations with probability proportional to `1/D(E)` using a
/// frozen density of states and records them into a fresh accumulator.
///
/// Moves into bins the density never visited are rejected, so the walk stays
/// on the estimated support.
pub fn multicanonical_sample(
    graph: &DataGraph,
    dos: &DensityOfStates,
    params: &SamplingParams,
) -> Result<MarginalAccumulator> {
    if !dos.is_valid() {
        return Err(Error::InvalidArgument("density of states is flagged invalid".into()));
    }
    if dos.free_spins() != graph.free_points().len() || dos.q() != graph.q() {
        return Err(Error::InvalidArgument("density of states belongs to a different graph".into()));
    }
    if params.thinning == 0 {
        return Err(Error::InvalidArgument("thinning must be at least one sweep".into()));
    }
    let binning = *dos.binning();
    let log_density = dos.log_density();
    let mut acc = MarginalAccumulator::for_graph(graph, binning);
    if graph.free_points().is_empty() {
        return Err(Error::NoFreeSpins);
    }

    let mut walker = Walker::new(graph, params.seed);
    let lowest = dos.lowest_visited_bin().map(|b| binning.center(b)).unwrap_or(0.0);
    let top = dos.visited_bins().last().map(|b| binning.lower_edge(b + 1)).unwrap_or(f64::INFINITY);
    if walker.energy >= top {
        walker.descend_below(top.max(lowest), params.burn_in.max(1_000));
    }
    let mut current = binning.bin(walker.energy).filter(|&b| log_density[b].is_finite());

    let sweep = |walker: &mut Walker, current: &mut Option<usize>| {
        for _ in 0..walker.sweep_len() {
            let mv = walker.propose();
            let Some(nb) = binning.bin(walker.energy + mv.delta) else { continue };
            let target = log_density[nb];
            if !target.is_finite() {
                continue;
            }
            let accept = match *current {
                None => true,
                Some(cb) => {
                    let log_ratio = log_density[cb] - target;
                    log_ratio >= 0.0 || walker.uniform() < math::exp(log_ratio)
                }
            };
            if accept {
                walker.apply(mv);
                *current = Some(nb);
            }
        }
        walker.end_sweep();
    };

    for _ in 0..params.burn_in {
        sweep(&mut walker, &mut current);
    }
    for _ in 0..params.n_samples {
        for _ in 0..params.thinning {
            sweep(&mut walker, &mut current);
        }
        acc.record(graph, &walker.states, walker.energy);
    }
    Ok(acc)
}
