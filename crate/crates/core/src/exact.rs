//! Brute-force enumeration of every clamped configuration.
//!
//! Used as the reference for the samplers on small graphs. Sums run in log
//! space: a first pass finds the ground energy `E0`, the second accumulates
//! `exp(-(E - E0)/T) <= 1`, so nothing overflows even at tiny `T`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{DataGraph, SpinConfiguration};
use crate::{Error, Result};

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_MAX_STATES: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit {
    pub max_states: u64,
}

impl Default for EnumerationLimit {
    fn default() -> Self {
        EnumerationLimit { max_states: DEFAULT_MAX_STATES }
    }
}

impl EnumerationLimit {
    /// Number of configurations of `graph`, or a refusal naming it.
    pub fn check(&self, graph: &DataGraph) -> Result<u64> {
        let states = (graph.q() as u128).checked_pow(graph.free_points().len() as u32).unwrap_or(u128::MAX);
        if states > self.max_states as u128 {
            return Err(Error::EnumerationCap { states, limit: self.max_states });
        }
        Ok(states as u64)
    }
}

/// Exact Boltzmann statistics at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub temperature: f64,
    pub log_partition: f64,
    /// `marginals[i][k]` = P(s_i = k).
    pub marginals: Vec<Vec<f64>>,
    /// P(s_i = s_j) per graph edge, in edge order.
    pub edge_agreement: Vec<f64>,
    /// Exact density of states, ascending energy.
    pub dos: Vec<(f64, u64)>,
    pub ground_energy: f64,
    pub ground_count: u64,
}

/// Energies closer than this are treated as one level.
fn level_tolerance(graph: &DataGraph) -> f64 {
    1e-9 * graph.total_weight().max(1.0)
}

fn level_key(energy: f64, tol: f64) -> i64 {
    math::floor(energy / tol + 0.5) as i64
}

/// Visits every clamped configuration with its energy. Energies are updated
/// incrementally and recomputed from scratch every 2^16 steps.
fn for_each_configuration<F>(graph: &DataGraph, limit: EnumerationLimit, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize], f64),
{
    limit.check(graph)?;
    let q = graph.q();
    let free = graph.free_points();
    let mut states: Vec<usize> = (0..graph.n_points()).map(|p| graph.label(p).unwrap_or(0)).collect();
    let mut energy = graph.energy_of(&states);
    let mut step: u64 = 0;
    loop {
        visit(&states, energy);
        step += 1;
        if step & 0xffff == 0 {
            energy = graph.energy_of(&states);
        }
        let mut digit = 0;
        loop {
            if digit == free.len() {
                return Ok(());
            }
            let p = free[digit];
            let next = states[p] + 1;
            if next < q {
                energy += graph.delta_of(&states, p, next);
                states[p] = next;
                break;
            }
            energy += graph.delta_of(&states, p, 0);
            states[p] = 0;
            digit += 1;
        }
    }
}

/// Exact marginals, edge agreements, partition function and density of
/// states at temperature `t`.
pub fn enumerate(graph: &DataGraph, t: f64, limit: EnumerationLimit) -> Result<ExactSummary> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("temperature must be positive, got {t}")));
    }
    let dos = exact_dos(graph, limit)?;
    let (ground_energy, ground_count) = dos[0];
    let q = graph.q();
    let n = graph.n_points();
    let mut z = 0.0;
    let mut node = vec![0.0; n * q];
    let mut agree = vec![0.0; graph.edges().len()];
    for_each_configuration(graph, limit, |states, energy| {
        let w = math::exp(-(energy - ground_energy) / t);
        z += w;
        for (p, &s) in states.iter().enumerate() {
            node[p * q + s] += w;
        }
        for (slot, e) in agree.iter_mut().zip(graph.edges()) {
            if states[e.i] == states[e.j] {
                *slot += w;
            }
        }
    })?;
    let marginals = (0..n).map(|p| node[p * q..(p + 1) * q].iter().map(|w| w / z).collect()).collect();
    Ok(ExactSummary {
        temperature: t,
        log_partition: -ground_energy / t + math::ln(z),
        marginals,
        edge_agreement: agree.iter().map(|w| w / z).collect(),
        dos,
        ground_energy,
        ground_count,
    })
}

/// Number of configurations at each distinct energy, ascending.
pub fn exact_dos(graph: &DataGraph, limit: EnumerationLimit) -> Result<Vec<(f64, u64)>> {
    let tol = level_tolerance(graph);
    let mut levels: BTreeMap<i64, (f64, u64)> = BTreeMap::new();
    for_each_configuration(graph, limit, |_, energy| {
        levels.entry(level_key(energy, tol)).or_insert((energy, 0)).1 += 1;
    })?;
    Ok(levels.into_values().collect())
}

/// Minimum energy and every configuration attaining it, in enumeration order.
pub fn ground_states(graph: &DataGraph, limit: EnumerationLimit) -> Result<(f64, Vec<SpinConfiguration>)> {
    let tol = level_tolerance(graph);
    let mut best = f64::INFINITY;
    let mut found: Vec<SpinConfiguration> = Vec::new();
    for_each_configuration(graph, limit, |states, energy| {
        if energy < best - tol {
            best = energy;
            found.clear();
        }
        if (energy - best).abs() <= tol {
            found.push(SpinConfiguration::from_states_unchecked(states.to_vec()));
        }
    })?;
    let energy = found.first().map(|c| graph.energy_of(c.states())).unwrap_or(best);
    Ok((energy, found))
}

/// Per-energy-level sums: configuration count, node-state counts and
/// edge-agreement counts. Reweighting these to a temperature is an
/// independent route to the marginals of [`enumerate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLevels {
    q: usize,
    n_points: usize,
    levels: Vec<ExactLevel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactLevel {
    pub energy: f64,
    pub count: u64,
    /// `node_counts[i * q + k]`
    pub node_counts: Vec<u64>,
    pub edge_agree: Vec<u64>,
}

impl ExactLevels {
    pub fn collect(graph: &DataGraph, limit: EnumerationLimit) -> Result<Self> {
        let tol = level_tolerance(graph);
        let q = graph.q();
        let n = graph.n_points();
        let m = graph.edges().len();
        let mut levels: BTreeMap<i64, ExactLevel> = BTreeMap::new();
        for_each_configuration(graph, limit, |states, energy| {
            let level = levels.entry(level_key(energy, tol)).or_insert_with(|| ExactLevel {
                energy,
                count: 0,
                node_counts: vec![0; n * q],
                edge_agree: vec![0; m],
            });
            level.count += 1;
            for (p, &s) in states.iter().enumerate() {
                level.node_counts[p * q + s] += 1;
            }
            for (slot, e) in level.edge_agree.iter_mut().zip(graph.edges()) {
                if states[e.i] == states[e.j] {
                    *slot += 1;
                }
            }
        })?;
        Ok(ExactLevels { q, n_points: n, levels: levels.into_values().collect() })
    }

    pub fn levels(&self) -> &[ExactLevel] {
        &self.levels
    }

    /// Marginal table and edge agreements at `t` via log-sum-exp over levels.
    pub fn marginals_at(&self, t: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let log_w: Vec<f64> = self.levels.iter().map(|l| -l.energy / t).collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|lw| math::exp(lw - max)).collect();
        let z: f64 = self.levels.iter().zip(&w).map(|(l, w)| w * l.count as f64).sum();
        let q = self.q;
        let marginals = (0..self.n_points)
            .map(|p| {
                (0..q)
                    .map(|k| {
                        self.levels.iter().zip(&w).map(|(l, w)| w * l.node_counts[p * q + k] as f64).sum::<f64>() / z
                    })
                    .collect()
            })
            .collect();
        let n_edges = self.levels.first().map_or(0, |l| l.edge_agree.len());
        let agree = (0..n_edges)
            .map(|e| self.levels.iter().zip(&w).map(|(l, w)| w * l.edge_agree[e] as f64).sum::<f64>() / z)
            .collect();
        (marginals, agree)
    }
}
