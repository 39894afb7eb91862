//! Estimation followed by classification, artifact writing and randomized
//! label batches.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mcssl_core::build::{sample_labels, GroundTruth, LabelDraw};
use mcssl_core::classify::{
    classify, linear_grid, reweight_with, select_temperature, t_zero_table, Classification,
    Outcome, ReweightMode, SelectionParams, TemperatureProfile, TemperatureSelection, DEFAULT_TAU,
};
use mcssl_core::mincut::{alpha_expansion, error_count, mincut_q2, nearest_label_init, outcome_errors, Scoring};
use mcssl_core::sampler::{
    estimate_dos, multicanonical_sample, walker_seed, DensityOfStates, MarginalAccumulator, SamplingParams,
    WangLandauParams,
};
use mcssl_core::{DataGraph, EnergyBinning};

use crate::artifacts::{
    emit_checkpoint, emit_dos, emit_json, emit_profile, rows_for, EtaPoint, ProfileRow, RunSummary,
};
use crate::error::{AppError, AppResult};
use crate::format::round6;
use crate::io::{emit_graph, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReweightChoice {
    #[default]
    Density,
    SampleCorrected,
}

impl From<ReweightChoice> for ReweightMode {
    fn from(c: ReweightChoice) -> Self {
        match c {
            ReweightChoice::Density => ReweightMode::Density,
            ReweightChoice::SampleCorrected => ReweightMode::SampleCorrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WangLandauConfig {
    pub initial_ln_f: f64,
    pub flatness: f64,
    pub final_ln_f: f64,
    pub sweeps_per_check: u64,
    pub max_sweeps: u64,
}

impl Default for WangLandauConfig {
    fn default() -> Self {
        let p = WangLandauParams::default();
        WangLandauConfig {
            initial_ln_f: p.initial_ln_f,
            flatness: p.flatness,
            final_ln_f: p.final_ln_f,
            sweeps_per_check: p.sweeps_per_check,
            max_sweeps: p.max_sweeps,
        }
    }
}

/// Everything a run depends on. Equal configs give identical artifacts;
/// `workers` only changes how the work is spread over threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tau: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    /// Energy bin width; the graph default when unset.
    pub bin_width: Option<f64>,
    /// Rescale weights to mean 1 before sampling.
    pub normalize: bool,
    /// Energies above this (after normalization) are never visited. The
    /// density is then normalized over the states below it only.
    pub energy_ceiling: Option<f64>,
    /// Derive the ceiling from the top grid temperature when no explicit
    /// one is given.
    pub auto_ceiling: bool,
    pub wang_landau: WangLandauConfig,
    pub samples: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub walkers: usize,
    pub reweight: ReweightChoice,
    pub eta_0: Option<f64>,
    pub min_new_class_size: Option<usize>,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            tau: DEFAULT_TAU,
            grid_min: 0.05,
            grid_max: 2.0,
            grid_count: 40,
            bin_width: None,
            normalize: true,
            energy_ceiling: None,
            auto_ceiling: false,
            wang_landau: WangLandauConfig::default(),
            samples: 200_000,
            burn_in: 1_000,
            thinning: 1,
            walkers: 4,
            reweight: ReweightChoice::Density,
            eta_0: None,
            min_new_class_size: None,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: &str| Err(AppError::Usage(m.into()));
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return bad("tau must be in [0, 1)");
        }
        if self.walkers == 0 || self.samples < self.walkers as u64 {
            return bad("need at least one walker and one sample per walker");
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1");
        }
        if self.bin_width.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
            return bad("bin width must be positive");
        }
        if self.energy_ceiling.is_some_and(|c| !(c >= 0.0)) {
            return bad("energy ceiling must be non-negative");
        }
        if self.eta_0.is_some_and(|e| !(e >= 0.0)) {
            return bad("eta_0 must be non-negative");
        }
        self.wl_params(0).validate()?;
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> AppResult<Vec<f64>> {
        Ok(linear_grid(self.grid_min, self.grid_max, self.grid_count)?)
    }

    /// Energy ceiling for sampling `graph` (already prepared).
    pub fn ceiling_for(&self, graph: &DataGraph) -> Option<f64> {
        match self.energy_ceiling {
            Some(c) => Some(c),
            None if self.auto_ceiling => Some(paramagnetic_ceiling(graph, self.grid_max, CEILING_SIGMAS)),
            None => None,
        }
    }

    fn wl_params(&self, seed: u64) -> WangLandauParams {
        let w = &self.wang_landau;
        WangLandauParams {
            initial_ln_f: w.initial_ln_f,
            flatness: w.flatness,
            final_ln_f: w.final_ln_f,
            sweeps_per_check: w.sweeps_per_check,
            max_sweeps: w.max_sweeps,
            seed,
            energy_ceiling: self.energy_ceiling,
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn meta(&self) -> Vec<(&'static str, String)> {
        vec![("config", self.json()), ("seed", self.seed.to_string())]
    }
}

/// Sampled statistics of one graph.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// The graph as sampled, after optional normalization.
    pub graph: DataGraph,
    pub dos: DensityOfStates,
    pub acc: MarginalAccumulator,
}

/// Runs `jobs` over at most `workers` threads; results come back in job
/// order.
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(jobs: usize, workers: usize, f: F) -> Vec<T> {
    let workers = workers.clamp(1, jobs.max(1));
    if workers == 1 {
        return (0..jobs).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..jobs).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || (w..jobs).step_by(workers).map(|j| (j, f(j))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (j, v) in h.join().expect("worker panicked") {
                slots[j] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every job ran")).collect()
}

pub fn prepare_graph(graph: &DataGraph, config: &RunConfig) -> AppResult<DataGraph> {
    Ok(if config.normalize { graph.mean_normalized()? } else { graph.clone() })
}

pub fn binning_for(graph: &DataGraph, config: &RunConfig) -> AppResult<EnergyBinning> {
    Ok(match config.bin_width {
        Some(w) => EnergyBinning::new(w, -0.5 * w, graph.total_weight())?,
        None => EnergyBinning::for_graph(graph),
    })
}

/// Standard deviations above the independent-edge energy kept by the
/// automatic ceiling.
pub const CEILING_SIGMAS: f64 = 6.0;

/// Ceiling that keeps every configuration relevant up to temperature
/// `t_max`: the energy of independent edges at `t_max` plus `sigmas`
/// standard deviations, capped at the total weight.
pub fn paramagnetic_ceiling(graph: &DataGraph, t_max: f64, sigmas: f64) -> f64 {
    let q1 = (graph.q() - 1) as f64;
    let (mut mean, mut var) = (0.0, 0.0);
    for e in graph.edges() {
        let p = q1 / ((e.weight / t_max).exp() + q1);
        mean += e.weight * p;
        var += e.weight * e.weight * p * (1.0 - p);
    }
    (mean + sigmas * var.sqrt()).min(graph.total_weight())
}

/// Wang-Landau density estimate on an already prepared graph.
pub fn estimate_density(graph: &DataGraph, config: &RunConfig) -> AppResult<DensityOfStates> {
    let binning = binning_for(graph, config)?;
    let params = WangLandauParams { energy_ceiling: config.ceiling_for(graph), ..config.wl_params(walker_seed(config.seed, 0)) };
    Ok(estimate_dos(graph, binning, &params)?)
}

/// Multicanonical production from `config.walkers` independent walkers,
/// merged in walker order.
pub fn sample_marginals(graph: &DataGraph, dos: &DensityOfStates, config: &RunConfig) -> AppResult<MarginalAccumulator> {
    if !dos.is_valid() {
        return Err(AppError::NonConvergence(format!(
            "Wang-Landau stopped at the sweep guard after {} sweeps",
            dos.sweeps()
        )));
    }
    let walkers = config.walkers;
    let per = config.samples / walkers as u64;
    let extra = config.samples % walkers as u64;
    let parts = parallel_map(walkers, config.workers, |w| {
        let params = SamplingParams {
            n_samples: per + u64::from((w as u64) < extra),
            thinning: config.thinning,
            burn_in: config.burn_in,
            seed: walker_seed(config.seed, 1 + w as u64),
        };
        multicanonical_sample(graph, dos, &params)
    });
    let mut acc = MarginalAccumulator::for_graph(graph, *dos.binning());
    for part in parts {
        acc.merge_from(&part?)?;
    }
    Ok(acc)
}

pub fn estimate(graph: &DataGraph, config: &RunConfig) -> AppResult<Estimate> {
    config.validate()?;
    let graph = prepare_graph(graph, config)?;
    let dos = estimate_density(&graph, config)?;
    let acc = sample_marginals(&graph, &dos, config)?;
    Ok(Estimate { graph, dos, acc })
}

/// Classification results of an estimate.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub profile: TemperatureProfile,
    pub t_zero: Classification,
    pub selection: TemperatureSelection,
    pub params: SelectionParams,
    /// Outcomes at the selected temperature (the ground-state ones when the
    /// selection falls back).
    pub chosen: Classification,
}

pub fn selection_params(config: &RunConfig, n_points: usize, grid: &[f64]) -> SelectionParams {
    let mut p = SelectionParams::defaults_for(n_points, grid);
    if let Some(e) = config.eta_0 {
        p.eta_0 = e;
    }
    if let Some(m) = config.min_new_class_size {
        p.min_new_class_size = m;
    }
    p
}

pub fn analyze(est: &Estimate, config: &RunConfig) -> AppResult<Analysis> {
    let grid = config.grid()?;
    let mode = config.reweight.into();
    let columns = parallel_map(grid.len(), config.workers, |i| {
        reweight_with(&est.dos, &est.acc, grid[i], mode).map(|t| classify(&t, &est.graph, config.tau))
    });
    let profile = TemperatureProfile::from_columns(columns.into_iter().collect::<Result<_, _>>()?)?;
    let t_zero = classify(&t_zero_table(&est.dos, &est.acc)?, &est.graph, config.tau);
    let params = selection_params(config, est.graph.n_points(), &grid);
    let selection = select_temperature(&profile, &t_zero, &params)?;
    let chosen = match selection.index {
        Some(i) => profile.column(i).clone(),
        None => t_zero.clone(),
    };
    Ok(Analysis { profile, t_zero, selection, params, chosen })
}

pub fn profile_rows(profile: &TemperatureProfile) -> Vec<ProfileRow> {
    profile.columns().iter().flat_map(rows_for).collect()
}

pub fn summarize(est: &Estimate, analysis: &Analysis, config: &RunConfig) -> RunSummary {
    let sel = &analysis.selection;
    let q = est.graph.q();
    let counts = analysis.chosen.class_counts(q);
    RunSummary {
        config: serde_json::to_value(config).expect("config serializes"),
        seed: config.seed,
        n_points: est.graph.n_points(),
        q,
        n_labelled: est.graph.n_labelled(),
        dos_valid: est.dos.is_valid(),
        wang_landau_sweeps: est.dos.sweeps(),
        samples: est.acc.total_samples(),
        eta_0: round6(analysis.params.eta_0),
        min_new_class_size: analysis.params.min_new_class_size,
        eta: analysis
            .profile
            .temperatures()
            .iter()
            .zip(&sel.eta)
            .zip(&sel.changed)
            .map(|((&t, &eta), &changed)| EtaPoint { temperature: round6(t), eta: round6(eta), changed })
            .collect(),
        t_star: round6(sel.t_star),
        class_counts: (0..q).map(|k| ((k + 1).to_string(), counts[k])).collect::<BTreeMap<_, _>>(),
        confused: analysis.chosen.outcomes.iter().filter(|o| matches!(o, Outcome::Confused { .. })).count(),
        new_classes: analysis.chosen.new_class_members(),
    }
}

/// File names written by [`run_pipeline`].
pub const GRAPH_FILE: &str = "graph.txt";
pub const DOS_FILE: &str = "dos.csv";
pub const CHECKPOINT_FILE: &str = "accumulator.json";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CLASSIFICATION_FILE: &str = "classification.csv";

/// Writes the sampled graph, density and checkpoint.
pub fn write_estimate(dir: &Path, graph: &DataGraph, dos: &DensityOfStates, acc: Option<&MarginalAccumulator>, config: &RunConfig) -> AppResult<()> {
    let meta = config.meta();
    write_text(&dir.join(GRAPH_FILE), &emit_graph(graph, &meta))?;
    write_text(&dir.join(DOS_FILE), &emit_dos(dos, &meta))?;
    if let Some(acc) = acc {
        write_text(&dir.join(CHECKPOINT_FILE), &emit_checkpoint(acc, &meta))?;
    }
    Ok(())
}

pub fn write_analysis(dir: &Path, est: &Estimate, analysis: &Analysis, config: &RunConfig) -> AppResult<RunSummary> {
    let meta = config.meta();
    write_text(&dir.join(PROFILE_FILE), &emit_profile(&profile_rows(&analysis.profile), &meta))?;
    let mut chosen_meta = meta.clone();
    chosen_meta.push(("t_star", crate::format::fmt6(analysis.selection.t_star)));
    write_text(&dir.join(CLASSIFICATION_FILE), &emit_profile(&rows_for(&analysis.chosen), &chosen_meta))?;
    let summary = summarize(est, analysis, config);
    write_text(&dir.join(SUMMARY_FILE), &emit_json(&summary))?;
    Ok(summary)
}

/// Full run: estimation, classification over the grid, temperature
/// selection and every artifact in `dir`. An unconverged density is still
/// written before the error is returned.
pub fn run_pipeline(graph: &DataGraph, config: &RunConfig, dir: &Path) -> AppResult<RunSummary> {
    config.validate()?;
    let prepared = prepare_graph(graph, config)?;
    let dos = estimate_density(&prepared, config)?;
    if !dos.is_valid() {
        write_estimate(dir, &prepared, &dos, None, config)?;
    }
    let acc = sample_marginals(&prepared, &dos, config)?;
    write_estimate(dir, &prepared, &dos, Some(&acc), config)?;
    let est = Estimate { graph: prepared, dos, acc };
    let analysis = analyze(&est, config)?;
    write_analysis(dir, &est, &analysis, config)
}

/// Randomized-label experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub run: RunConfig,
    pub labels_per_draw: usize,
    pub repeats: usize,
    /// Classes labels are drawn from; all truth classes when empty.
    pub classes: Vec<usize>,
    /// At least one label per drawn class.
    pub stratified: bool,
    pub match_new_classes: bool,
    pub expansion_cycles: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            run: RunConfig::default(),
            labels_per_draw: 4,
            repeats: 100,
            classes: Vec::new(),
            stratified: true,
            match_new_classes: false,
            expansion_cycles: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub realization: usize,
    pub seed: u64,
    pub labels: Vec<(usize, usize)>,
    pub method_errors: Option<usize>,
    pub mincut_errors: Option<usize>,
    pub t_star: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

fn mean_std(values: &[usize]) -> MeanStd {
    let n = values.len();
    if n == 0 {
        return MeanStd { mean: f64::NAN, std: f64::NAN, count: 0 };
    }
    let mean = values.iter().sum::<usize>() as f64 / n as f64;
    let var = if n > 1 {
        values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanStd { mean: round6(mean), std: round6(var.sqrt()), count: n }
}

/// Per-realization errors sorted by method error (then realization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTable {
    pub rows: Vec<BatchRow>,
    pub method: MeanStd,
    pub mincut: MeanStd,
    /// Realizations where the method made no more errors than the min-cut.
    pub method_not_worse: usize,
    pub failures: usize,
}

impl BatchTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,realization,seed,method_errors,mincut_errors,t_star,status\n");
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for (rank, r) in self.rows.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                rank + 1,
                r.realization,
                r.seed,
                opt(r.method_errors),
                opt(r.mincut_errors),
                r.t_star.map(crate::format::fmt6).unwrap_or_default(),
                r.failure.as_deref().map_or("ok".to_string(), |f| format!("\"failed: {}\"", f.replace('"', "'")))
            ));
        }
        out.push_str(&format!("# method mean={} std={}\n", self.method.mean, self.method.std));
        out.push_str(&format!("# mincut mean={} std={}\n", self.mincut.mean, self.mincut.std));
        out
    }
}

/// Zero-temperature baseline: exact min-cut for two classes, otherwise
/// alpha-expansion from the nearest-label start.
pub fn baseline_errors(graph: &DataGraph, truth: &GroundTruth, cycles: usize) -> mcssl_core::Result<usize> {
    let cut = if graph.q() == 2 {
        mincut_q2(graph)?
    } else {
        alpha_expansion(graph, &nearest_label_init(graph), cycles)?
    };
    Ok(error_count(&cut.config, truth)?.total)
}

fn realization(graph: &DataGraph, truth: &GroundTruth, config: &BatchConfig, classes: &[usize], r: usize) -> BatchRow {
    let seed = walker_seed(config.run.seed, r as u64);
    let mut row = BatchRow {
        realization: r,
        seed,
        labels: Vec::new(),
        method_errors: None,
        mincut_errors: None,
        t_star: None,
        failure: None,
    };
    let draw = LabelDraw {
        count: config.labels_per_draw,
        classes,
        region: None,
        stratified: config.stratified,
        seed,
    };
    let labels = match sample_labels(truth, &draw) {
        Ok(l) => l,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    row.labels = labels.clone();
    let labelled = match graph.with_labels(graph.q(), &labels) {
        Ok(g) => g,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    let mut failures = Vec::new();
    match baseline_errors(&labelled, truth, config.expansion_cycles) {
        Ok(e) => row.mincut_errors = Some(e),
        Err(e) => failures.push(format!("baseline: {e}")),
    }
    let run = RunConfig { seed, workers: 1, ..config.run.clone() };
    let scoring = if config.match_new_classes { Scoring::MatchNewClasses } else { Scoring::Strict };
    let method = estimate(&labelled, &run).and_then(|est| {
        let a = analyze(&est, &run)?;
        let errors = outcome_errors(&a.chosen, truth, classes, scoring)?;
        Ok((errors.total, a.selection.t_star))
    });
    match method {
        Ok((e, t)) => {
            row.method_errors = Some(e);
            row.t_star = Some(round6(t));
        }
        Err(e) => failures.push(format!("method: {e}")),
    }
    if !failures.is_empty() {
        row.failure = Some(failures.join("; "));
    }
    row
}

/// Repeated random labelling: for every realization, draw labels, run the
/// method and the zero-temperature baseline, and count errors against the
/// truth. Failed realizations are reported, not fatal.
pub fn run_experiment_batch(graph: &DataGraph, truth: &GroundTruth, config: &BatchConfig) -> AppResult<BatchTable> {
    config.run.validate()?;
    if truth.len() != graph.n_points() {
        return Err(mcssl_core::Error::CoverageMismatch { expected: graph.n_points(), got: truth.len() }.into());
    }
    let classes: Vec<usize> = if config.classes.is_empty() { (0..truth.n_classes()).collect() } else { config.classes.clone() };
    let mut rows = parallel_map(config.repeats, config.run.workers, |r| realization(graph, truth, config, &classes, r));
    rows.sort_by_key(|r| (r.method_errors.unwrap_or(usize::MAX), r.realization));
    let method: Vec<usize> = rows.iter().filter_map(|r| r.method_errors).collect();
    let mincut: Vec<usize> = rows.iter().filter_map(|r| r.mincut_errors).collect();
    let method_not_worse = rows
        .iter()
        .filter(|r| matches!((r.method_errors, r.mincut_errors), (Some(a), Some(b)) if a <= b))
        .count();
    let failures = rows.iter().filter(|r| r.failure.is_some()).count();
    Ok(BatchTable { method: mean_std(&method), mincut: mean_std(&mincut), rows, method_not_worse, failures })
}
