//! Markov chain samplers over clamped configurations.
//!
//! All chains use the same symmetric single-spin proposal: a uniformly chosen
//! free point moves to a uniformly chosen *different* state. Only the
//! acceptance rule differs between the Wang-Landau walk, the frozen
//! flat-histogram walk and plain Metropolis.

mod accumulator;
mod metropolis;
mod multicanonical;
mod wang_landau;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{DataGraph, SpinConfiguration};

pub use accumulator::{BinStats, MarginalAccumulator, Tally};
pub use metropolis::{metropolis_marginals, MetropolisParams};
pub use multicanonical::{multicanonical_sample, SamplingParams};
pub use wang_landau::{estimate_dos, DensityOfStates, WangLandauParams};

/// Sweeps between full energy recomputations.
pub const RESYNC_SWEEPS: u64 = 10_000;

/// Seed of walker `index` derived from a base seed (splitmix64 finalizer).
pub fn walker_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Move {
    pub point: usize,
    pub state: usize,
    pub delta: f64,
}

pub(crate) struct Walker<'g> {
    graph: &'g DataGraph,
    pub states: Vec<usize>,
    pub energy: f64,
    rng: ChaCha8Rng,
    drift_tolerance: f64,
    pub drift_alarms: u64,
    sweeps: u64,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g DataGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = SpinConfiguration::random_with(graph, &mut rng).into_states();
        let energy = graph.energy_of(&states);
        Walker {
            graph,
            states,
            energy,
            rng,
            drift_tolerance: 1e-6 * graph.total_weight().max(1.0),
            drift_alarms: 0,
            sweeps: 0,
        }
    }

    /// Proposals per sweep.
    pub fn sweep_len(&self) -> usize {
        self.graph.free_points().len()
    }

    #[inline]
    pub fn propose(&mut self) -> Move {
        let free = self.graph.free_points();
        let point = free[self.rng.random_range(0..free.len())];
        let current = self.states[point];
        let mut state = self.rng.random_range(0..self.graph.q() - 1);
        if state >= current {
            state += 1;
        }
        let delta = self.graph.delta_of(&self.states, point, state);
        Move { point, state, delta }
    }

    #[inline]
    pub fn apply(&mut self, mv: Move) {
        self.states[mv.point] = mv.state;
        self.energy += mv.delta;
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Bookkeeping at the end of every sweep: clamp check in debug builds and
    /// periodic energy resynchronisation.
    pub fn end_sweep(&mut self) {
        debug_assert!(
            self.graph.label_pairs().iter().all(|&(p, c)| self.states[p] == c),
            "sampler altered a clamped spin"
        );
        self.sweeps += 1;
        if self.sweeps % RESYNC_SWEEPS == 0 {
            let exact = self.graph.energy_of(&self.states);
            if (exact - self.energy).abs() > self.drift_tolerance {
                self.drift_alarms += 1;
            }
            self.energy = exact;
        }
    }

    /// Greedy descent until the energy is at most `ceiling`, bounded by
    /// `max_sweeps`. Returns whether the ceiling was reached.
    pub fn descend_below(&mut self, ceiling: f64, max_sweeps: u64) -> bool {
        let mut sweeps = 0;
        while self.energy > ceiling {
            if sweeps >= max_sweeps {
                return false;
            }
            for _ in 0..self.sweep_len() {
                let mv = self.propose();
                if mv.delta <= 0.0 {
                    self.apply(mv);
                }
            }
            self.end_sweep();
            sweeps += 1;
        }
        true
    }
}
