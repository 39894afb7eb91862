use alloc::vec;
use alloc::vec::Vec;

use crate::model::DataGraph;
use crate::sampler::{DensityOfStates, MarginalAccumulator};
use crate::{Error, Result};

use super::{classify, reweight_with, Classification, MarginalTable, Outcome, ReweightMode};

/// `count` evenly spaced temperatures from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || count == 0 || (count == 1 && max != min) {
        return Err(Error::InvalidArgument(alloc::format!("bad temperature grid {min}..{max} x{count}")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { max } else { min + step * i as f64 }).collect())
}

/// Classification of every point over an ascending temperature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureProfile {
    temperatures: Vec<f64>,
    columns: Vec<Classification>,
    /// `runs[t][p]`: first and last grid index of the maximal run around `t`
    /// in which point `p` keeps the same outcome.
    runs: Vec<Vec<(usize, usize)>>,
}

impl TemperatureProfile {
    /// Assembles a profile from classifications ordered by temperature.
    pub fn from_columns(columns: Vec<Classification>) -> Result<Self> {
        let temperatures: Vec<f64> = columns.iter().map(|c| c.temperature).collect();
        if temperatures.windows(2).any(|w| !(w[0] < w[1])) || temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidArgument("temperature grid must be positive and ascending".into()));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument("profile columns disagree on point count".into()));
        }
        let len = columns.len();
        let mut runs = vec![vec![(0usize, 0usize); n]; len];
        for p in 0..n {
            let mut start = 0;
            while start < len {
                let mut end = start;
                while end + 1 < len && columns[end + 1].outcomes[p].same_as(&columns[start].outcomes[p]) {
                    end += 1;
                }
                for run in runs.iter_mut().take(end + 1).skip(start) {
                    run[p] = (start, end);
                }
                start = end + 1;
            }
        }
        Ok(TemperatureProfile { temperatures, columns, runs })
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn columns(&self) -> &[Classification] {
        &self.columns
    }

    pub fn column(&self, t: usize) -> &Classification {
        &self.columns[t]
    }

    pub fn n_points(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    /// Half-widths of the grid cell around index `t`. Interior cells reach
    /// halfway to each neighbor; end cells mirror their inner half.
    fn cell(&self, t: usize) -> (f64, f64) {
        let ts = &self.temperatures;
        if ts.len() < 2 {
            return (0.0, 0.0);
        }
        let right = if t + 1 < ts.len() { 0.5 * (ts[t + 1] - ts[t]) } else { 0.5 * (ts[t] - ts[t - 1]) };
        let left = if t > 0 { 0.5 * (ts[t] - ts[t - 1]) } else { right };
        (left, right)
    }

    /// Temperature span of the run containing grid index `t` for `point`.
    pub fn stability_interval(&self, t: usize, point: usize) -> (f64, f64) {
        let (a, b) = self.runs[t][point];
        (self.temperatures[a] - self.cell(a).0, self.temperatures[b] + self.cell(b).1)
    }

    /// Total width of the grid cells in that run.
    pub fn stability_width(&self, t: usize, point: usize) -> f64 {
        let (lo, hi) = self.stability_interval(t, point);
        hi - lo
    }

    pub fn run(&self, t: usize, point: usize) -> (usize, usize) {
        self.runs[t][point]
    }

    /// Distinct consecutive outcomes of `point` over the grid.
    pub fn distinct_runs(&self, point: usize) -> usize {
        let mut count = 0;
        let mut t = 0;
        while t < self.temperatures.len() {
            count += 1;
            t = self.runs[t][point].1 + 1;
        }
        count
    }
}

/// Classifies at every temperature of `grid` from reweighted statistics.
pub fn build_profile(
    dos: &DensityOfStates,
    acc: &MarginalAccumulator,
    graph: &DataGraph,
    grid: &[f64],
    tau: f64,
    mode: ReweightMode,
) -> Result<TemperatureProfile> {
    let columns = grid
        .iter()
        .map(|&t| reweight_with(dos, acc, t, mode).map(|table| classify(&table, graph, tau)))
        .collect::<Result<Vec<_>>>()?;
    TemperatureProfile::from_columns(columns)
}

/// Profile from precomputed tables, e.g. exact ones.
pub fn profile_from_tables(tables: &[MarginalTable], graph: &DataGraph, tau: f64) -> Result<TemperatureProfile> {
    TemperatureProfile::from_columns(tables.iter().map(|t| classify(t, graph, tau)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Minimum score; below it the ground-state classification is kept.
    pub eta_0: f64,
    /// New-class components smaller than this do not count as definite
    /// classifications.
    pub min_new_class_size: usize,
}

impl SelectionParams {
    /// `eta_0 = 0.01 * N * span(grid)`; new classes need at least
    /// `max(2, ceil(N/20))` members.
    pub fn defaults_for(n_points: usize, grid: &[f64]) -> Self {
        let span = match (grid.first(), grid.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        SelectionParams { eta_0: 0.01 * n_points as f64 * span, min_new_class_size: n_points.div_ceil(20).max(2) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSelection {
    /// Selected temperature, `0.0` when falling back to the ground state.
    pub t_star: f64,
    /// Grid index of `t_star`, `None` for the fallback.
    pub index: Option<usize>,
    pub eta: Vec<f64>,
    /// Size of `c(T)` per grid point.
    pub changed: Vec<usize>,
}

/// Points counted at grid index `t`: definite (not confused, and not a new
/// class smaller than the size floor) and different from the ground-state
/// outcome.
pub fn changed_points(
    profile: &TemperatureProfile,
    t: usize,
    t_zero: &Classification,
    params: &SelectionParams,
) -> Vec<usize> {
    let column = profile.column(t);
    (0..column.len())
        .filter(|&p| {
            let o = &column.outcomes[p];
            let definite = match o {
                Outcome::Assigned { .. } => true,
                Outcome::Confused { .. } => false,
                Outcome::NewClass { size, .. } => *size >= params.min_new_class_size,
            };
            definite && !o.same_as(&t_zero.outcomes[p])
        })
        .collect()
}

/// Stability score `eta(T) = |c(T)| * s(T)`, where `c(T)` are the changed
/// points and `s(T)` their mean stability width, and its argmax (ties go to
/// the lower temperature).
pub fn select_temperature(
    profile: &TemperatureProfile,
    t_zero: &Classification,
    params: &SelectionParams,
) -> Result<TemperatureSelection> {
    if t_zero.len() != profile.n_points() {
        return Err(Error::InvalidArgument("ground-state outcomes cover a different point set".into()));
    }
    let mut eta = Vec::with_capacity(profile.temperatures().len());
    let mut changed = Vec::with_capacity(profile.temperatures().len());
    for t in 0..profile.temperatures().len() {
        let points = changed_points(profile, t, t_zero, params);
        let total: f64 = points.iter().map(|&p| profile.stability_width(t, p)).sum();
        // |c| * mean width
        eta.push(if points.is_empty() { 0.0 } else { total });
        changed.push(points.len());
    }
    let mut best: Option<usize> = None;
    for (t, &v) in eta.iter().enumerate() {
        if best.map_or(true, |b| v > eta[b]) {
            best = Some(t);
        }
    }
    let index = best.filter(|&b| eta[b] >= params.eta_0 && eta[b] > 0.0);
    Ok(TemperatureSelection {
        t_star: index.map_or(0.0, |b| profile.temperatures()[b]),
        index,
        eta,
        changed,
    })
}
