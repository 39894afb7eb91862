use alloc::vec;

use crate::classify::MarginalTable;
use crate::math;
use crate::model::DataGraph;
use crate::{Error, Result};

use super::Walker;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisParams {
    pub temperature: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl MetropolisParams {
    pub fn new(temperature: f64, seed: u64) -> Self {
        MetropolisParams { temperature, sweeps: 100_000, burn_in: 1_000, seed }
    }
}

/// Fixed-temperature Metropolis estimate of the marginal table, averaged over
/// every sweep after burn-in.
pub fn metropolis_marginals(graph: &DataGraph, params: &MetropolisParams) -> Result<MarginalTable> {
    let t = params.temperature;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("temperature must be positive, got {t}")));
    }
    if params.sweeps == 0 {
        return Err(Error::InvalidArgument("need at least one sweep".into()));
    }
    let q = graph.q();
    let n = graph.n_points();
    let mut node = vec![0u64; n * q];
    let mut agree = vec![0u64; graph.edges().len()];
    let mut walker = Walker::new(graph, params.seed);
    let frozen = graph.free_points().is_empty();

    for sweep in 0..params.burn_in + params.sweeps {
        if !frozen {
            for _ in 0..walker.sweep_len() {
                let mv = walker.propose();
                if mv.delta <= 0.0 || walker.uniform() < math::exp(-mv.delta / t) {
                    walker.apply(mv);
                }
            }
            walker.end_sweep();
        }
        if sweep >= params.burn_in {
            for (p, &s) in walker.states.iter().enumerate() {
                node[p * q + s] += 1;
            }
            for (slot, e) in agree.iter_mut().zip(graph.edges()) {
                if walker.states[e.i] == walker.states[e.j] {
                    *slot += 1;
                }
            }
        }
    }
    let total = params.sweeps as f64;
    let probs = (0..n).map(|p| (0..q).map(|k| node[p * q + k] as f64 / total).collect()).collect();
    let edge_same = agree.iter().map(|&a| a as f64 / total).collect();
    Ok(MarginalTable::new(t, probs, edge_same))
}
