use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{DataGraph, EnergyBinning};
use crate::{Error, Result};

use super::Walker;

/// Wang-Landau schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WangLandauParams {
    pub initial_ln_f: f64,
    /// A stage ends when every visited bin holds at least this fraction of the
    /// mean stage histogram.
    pub flatness: f64,
    pub final_ln_f: f64,
    pub sweeps_per_check: u64,
    /// Non-termination guard; the result is flagged invalid when hit.
    pub max_sweeps: u64,
    pub seed: u64,
    /// Moves above this energy are rejected. The walk then only covers the
    /// low part of the spectrum and the normalization counts only that part.
    pub energy_ceiling: Option<f64>,
}

impl Default for WangLandauParams {
    fn default() -> Self {
        WangLandauParams {
            initial_ln_f: 1.0,
            flatness: 0.8,
            final_ln_f: 1e-8,
            sweeps_per_check: 100,
            max_sweeps: 10_000_000,
            seed: 0,
            energy_ceiling: None,
        }
    }
}

impl WangLandauParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.final_ln_f > 0.0
            && self.final_ln_f < self.initial_ln_f
            && self.initial_ln_f.is_finite()
            && self.flatness > 0.0
            && self.flatness < 1.0
            && self.sweeps_per_check > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(alloc::format!("invalid Wang-Landau parameters {self:?}")))
        }
    }
}

/// Binned `ln D(E)` normalized so that the visited bins hold `q^free` states.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOfStates {
    binning: EnergyBinning,
    log_density: Vec<f64>,
    histogram: Vec<u64>,
    free_spins: usize,
    q: usize,
    valid: bool,
    sweeps: u64,
}

impl DensityOfStates {
    /// Reassembles a density from stored parts; bins with a non-finite
    /// density count as unvisited. The density is renormalized.
    pub fn from_parts(
        binning: EnergyBinning,
        log_density: Vec<f64>,
        histogram: Vec<u64>,
        free_spins: usize,
        q: usize,
        valid: bool,
    ) -> Result<Self> {
        if log_density.len() != binning.n_bins() || histogram.len() != binning.n_bins() {
            return Err(Error::BinningMismatch);
        }
        let mut dos = DensityOfStates { binning, log_density, histogram, free_spins, q, valid, sweeps: 0 };
        dos.normalize();
        Ok(dos)
    }

    fn normalize(&mut self) {
        for v in &mut self.log_density {
            if !v.is_finite() {
                *v = f64::NEG_INFINITY;
            }
        }
        let total = math::log_sum_exp(self.log_density.iter().copied());
        let target = self.log_total_states();
        // already normalized densities are left bit-identical
        if total.is_finite() && (total - target).abs() > 1e-12 * target.abs().max(1.0) {
            for v in self.log_density.iter_mut().filter(|v| v.is_finite()) {
                *v += target - total;
            }
        }
    }

    pub fn binning(&self) -> &EnergyBinning {
        &self.binning
    }

    /// `ln D` per bin, `-inf` on unvisited bins.
    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn ln_density(&self, bin: usize) -> Option<f64> {
        self.log_density.get(bin).copied().filter(|v| v.is_finite())
    }

    pub fn is_visited(&self, bin: usize) -> bool {
        self.ln_density(bin).is_some()
    }

    pub fn visited_bins(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.log_density.len()).filter(|&b| self.is_visited(b))
    }

    /// Total Wang-Landau visits per bin over all stages.
    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    pub fn free_spins(&self) -> usize {
        self.free_spins
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// `ln(q^free)`.
    pub fn log_total_states(&self) -> f64 {
        self.free_spins as f64 * math::ln(self.q as f64)
    }

    /// False when the schedule hit the sweep guard before reaching the final
    /// modification factor.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Records the sweep count of the run that produced a stored density.
    pub fn with_sweeps(mut self, sweeps: u64) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn lowest_visited_bin(&self) -> Option<usize> {
        self.visited_bins().next()
    }
}

/// Estimates `ln D(E)` with the Wang-Landau recursion.
///
/// Every proposal is accepted with `min(1, D(E_old)/D(E_new))`, then the
/// current bin gets `ln f` added to its density and one histogram count. When
/// the stage histogram is flat `ln f` halves; the walk ends below
/// `final_ln_f`.
pub fn estimate_dos(graph: &DataGraph, binning: EnergyBinning, params: &WangLandauParams) -> Result<DensityOfStates> {
    params.validate()?;
    if graph.free_points().is_empty() {
        return Err(Error::NoFreeSpins);
    }
    let n_bins = binning.n_bins();
    let mut log_density = vec![0.0; n_bins];
    let mut visited = vec![false; n_bins];
    let mut total_hist = vec![0u64; n_bins];
    let mut stage_hist = vec![0u64; n_bins];

    let mut walker = Walker::new(graph, params.seed);
    let ceiling = params.energy_ceiling.unwrap_or(f64::INFINITY);
    let mut valid = walker.descend_below(ceiling, params.max_sweeps);
    let mut current = binning.bin(walker.energy);
    let mut ln_f = params.initial_ln_f;
    let mut sweeps = 0u64;

    while valid && ln_f >= params.final_ln_f {
        for _ in 0..params.sweeps_per_check {
            for _ in 0..walker.sweep_len() {
                let mv = walker.propose();
                let new_energy = walker.energy + mv.delta;
                let target = if new_energy <= ceiling { binning.bin(new_energy) } else { None };
                if let Some(nb) = target {
                    let accept = match current {
                        None => true,
                        Some(cb) => {
                            let log_ratio = log_density[cb] - log_density[nb];
                            log_ratio >= 0.0 || walker.uniform() < math::exp(log_ratio)
                        }
                    };
                    if accept {
                        walker.apply(mv);
                        current = Some(nb);
                    }
                }
                if let Some(cb) = current {
                    log_density[cb] += ln_f;
                    stage_hist[cb] += 1;
                    total_hist[cb] += 1;
                    visited[cb] = true;
                }
            }
            walker.end_sweep();
            // resynchronisation may move the energy by rounding noise
            current = binning.bin(walker.energy).or(current);
        }
        sweeps += params.sweeps_per_check;
        if is_flat(&stage_hist, &visited, params.flatness) {
            ln_f *= 0.5;
            stage_hist.iter_mut().for_each(|h| *h = 0);
        }
        if sweeps >= params.max_sweeps {
            valid = false;
        }
    }

    for (v, seen) in log_density.iter_mut().zip(&visited) {
        if !seen {
            *v = f64::NEG_INFINITY;
        }
    }
    let mut dos = DensityOfStates {
        binning,
        log_density,
        histogram: total_hist,
        free_spins: graph.free_points().len(),
        q: graph.q(),
        valid,
        sweeps,
    };
    dos.normalize();
    Ok(dos)
}

fn is_flat(hist: &[u64], visited: &[bool], flatness: f64) -> bool {
    let mut min = u64::MAX;
    let mut sum = 0u64;
    let mut count = 0u64;
    for (&h, &v) in hist.iter().zip(visited) {
        if v {
            min = min.min(h);
            sum += h;
            count += 1;
        }
    }
    count > 0 && min as f64 >= flatness * (sum as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_dos, ground_states, EnumerationLimit};
    use crate::sampler::test_graphs::*;

    fn dos_by_energy(dos: &DensityOfStates) -> Vec<(f64, f64)> {
        dos.visited_bins()
            .map(|b| (dos.binning().center(b), math::exp(dos.ln_density(b).unwrap())))
            .collect()
    }

    #[test]
    fn cycle_density_within_tolerance() {
        let g = cycle4();
        let dos = estimate_dos(&g, EnergyBinning::for_graph(&g), &WangLandauParams { seed: 3, ..Default::default() }).unwrap();
        assert!(dos.is_valid());
        let exact = exact_dos(&g, EnumerationLimit::default()).unwrap();
        let est = dos_by_energy(&dos);
        assert_eq!(est.len(), exact.len());
        for ((e, d), (ee, c)) in est.iter().zip(&exact) {
            assert_eq!(e, ee);
            assert!((d / *c as f64 - 1.0).abs() < 0.15, "E={e}: {d} vs {c}");
        }
        let total: f64 = est.iter().map(|(_, d)| d).sum();
        assert!((total / 16.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_level_system() {
        let g = chain3();
        let dos = estimate_dos(&g, EnergyBinning::for_graph(&g), &WangLandauParams::default()).unwrap();
        let est = dos_by_energy(&dos);
        assert_eq!(est.len(), 1);
        assert_eq!(est[0].0, 1.0);
        assert!((est[0].1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn walk_reaches_ground_energy() {
        let g = unit(
            10,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (0, 5), (2, 7), (4, 9)],
            3,
            &[(0, 0), (9, 2), (5, 1)],
        );
        let (ground, _) = ground_states(&g, EnumerationLimit::default()).unwrap();
        let dos = estimate_dos(&g, EnergyBinning::for_graph(&g), &WangLandauParams { seed: 11, ..Default::default() }).unwrap();
        let lowest = dos.binning().center(dos.lowest_visited_bin().unwrap());
        assert_eq!(lowest, ground);
    }

    #[test]
    fn sweep_guard_flags_invalid() {
        let g = cycle4();
        let params = WangLandauParams { max_sweeps: 100, ..Default::default() };
        let dos = estimate_dos(&g, EnergyBinning::for_graph(&g), &params).unwrap();
        assert!(!dos.is_valid());
    }

    #[test]
    fn rejects_bad_schedule_and_frozen_graphs() {
        let g = cycle4();
        let params = WangLandauParams { final_ln_f: 2.0, ..Default::default() };
        assert!(estimate_dos(&g, EnergyBinning::for_graph(&g), &params).is_err());
        let frozen = unit(2, &[(0, 1)], 2, &[(0, 0), (1, 0)]);
        assert_eq!(
            estimate_dos(&frozen, EnergyBinning::for_graph(&frozen), &WangLandauParams::default()),
            Err(Error::NoFreeSpins)
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let g = cycle4();
        let p = WangLandauParams { seed: 5, final_ln_f: 1e-4, ..Default::default() };
        let a = estimate_dos(&g, EnergyBinning::for_graph(&g), &p).unwrap();
        let b = estimate_dos(&g, EnergyBinning::for_graph(&g), &p).unwrap();
        assert_eq!(a, b);
    }
}
