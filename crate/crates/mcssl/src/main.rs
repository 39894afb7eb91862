use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcssl::artifacts::{emit_json, emit_profile, parse_checkpoint, parse_dos, rows_for, ExactRecord};
use mcssl::error::{AppError, AppResult};
use mcssl::format::fmt6;
use mcssl::io::{
    emit_graph, emit_id_class, emit_mask, read_features, read_graph, read_id_class, read_mask, read_text, write_text,
};
use mcssl::pipeline::{
    analyze, estimate_density, run_experiment_batch, run_pipeline, sample_marginals, write_analysis, write_estimate,
    BatchConfig, Estimate, ReweightChoice, RunConfig, WangLandauConfig, DOS_FILE,
};
use mcssl_core::build::{
    filament_toy, grid_graph, knn_similarity_graph, sample_labels, three_class_toy, zscore_normalize, FilamentParams,
    GroundTruth, LabelDraw, ThreeClassParams, ToyInstance,
};
use mcssl_core::classify::{classify, reweight_with};
use mcssl_core::exact::{enumerate, EnumerationLimit, DEFAULT_MAX_STATES};
use mcssl_core::mincut::{alpha_expansion, mincut_q2, nearest_label_init};
use mcssl_core::sampler::walker_seed;
use mcssl_core::DataGraph;

/// Semi-supervised classification with a clamped Potts model sampled by
/// multicanonical Monte Carlo.
#[derive(Parser)]
#[command(name = "mcssl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic grid instance with its ground truth.
    Toygen(ToygenArgs),
    /// Build a graph file from a feature CSV or a mask.
    Graph(GraphArgs),
    /// Exact marginals and density of states by enumeration.
    Exact(ExactArgs),
    /// Estimate the density of states and collect multicanonical samples.
    Sample(SampleArgs),
    /// Classify at one temperature from stored samples.
    Classify(ClassifyArgs),
    /// Classify over a temperature grid and select T*.
    Profile(ProfileArgs),
    /// Zero-temperature baseline by min-cut or alpha-expansion.
    Mincut(MincutArgs),
    /// Repeated random labelling, method against baseline.
    Batch(BatchArgs),
    /// Sample and profile in one go.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ToyKind {
    Filament,
    ThreeClass,
}

#[derive(Args)]
struct ToygenArgs {
    #[arg(value_enum)]
    kind: ToyKind,
    #[arg(long, default_value_t = 10)]
    block_w: usize,
    #[arg(long, default_value_t = 8)]
    block_h: usize,
    /// Bridge length in pixels.
    #[arg(long, default_value_t = 10)]
    length: usize,
    /// Bridge width in pixels.
    #[arg(long, default_value_t = 1)]
    width: usize,
    /// Class types of the emitted graph.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Number of labelled points to draw.
    #[arg(long, default_value_t = 0)]
    labels: usize,
    /// Classes labels are drawn from (1-based, comma separated); all when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    label_classes: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, conflicts_with = "mask", required_unless_present = "mask")]
    features: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Rows with fewer present entries are dropped.
    #[arg(long, default_value_t = 1)]
    min_present: usize,
    #[arg(long)]
    no_zscore: bool,
    /// `id,class` labels; ids are feature row ids or point indices.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SamplingOpts {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    #[arg(long, default_value_t = 1_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 1)]
    thinning: u64,
    #[arg(long, default_value_t = 4)]
    walkers: usize,
    /// Threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Keep the raw weights instead of rescaling to mean 1.
    #[arg(long)]
    no_normalize: bool,
    /// Never visit energies above this (normalized units).
    #[arg(long)]
    energy_ceiling: Option<f64>,
    /// Derive the ceiling from the top grid temperature.
    #[arg(long, conflicts_with = "energy_ceiling")]
    auto_ceiling: bool,
    #[arg(long, default_value_t = 1.0)]
    wl_initial_ln_f: f64,
    #[arg(long, default_value_t = 0.8)]
    wl_flatness: f64,
    #[arg(long, default_value_t = 1e-8)]
    wl_final_ln_f: f64,
    #[arg(long, default_value_t = 100)]
    wl_check_sweeps: u64,
    #[arg(long, default_value_t = 10_000_000)]
    wl_max_sweeps: u64,
}

#[derive(Args, Clone)]
struct ClassifyOpts {
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    grid_min: f64,
    #[arg(long, default_value_t = 2.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 40)]
    grid_count: usize,
    #[arg(long, value_enum, default_value_t = Reweight::Density)]
    reweight: Reweight,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    min_new_class_size: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reweight {
    Density,
    SampleCorrected,
}

impl From<Reweight> for ReweightChoice {
    fn from(r: Reweight) -> Self {
        match r {
            Reweight::Density => ReweightChoice::Density,
            Reweight::SampleCorrected => ReweightChoice::SampleCorrected,
        }
    }
}

fn run_config(s: &SamplingOpts, c: &ClassifyOpts) -> RunConfig {
    RunConfig {
        seed: s.seed,
        tau: c.tau,
        grid_min: c.grid_min,
        grid_max: c.grid_max,
        grid_count: c.grid_count,
        bin_width: s.bin_width,
        normalize: !s.no_normalize,
        energy_ceiling: s.energy_ceiling,
        auto_ceiling: s.auto_ceiling,
        wang_landau: WangLandauConfig {
            initial_ln_f: s.wl_initial_ln_f,
            flatness: s.wl_flatness,
            final_ln_f: s.wl_final_ln_f,
            sweeps_per_check: s.wl_check_sweeps,
            max_sweeps: s.wl_max_sweeps,
        },
        samples: s.samples,
        burn_in: s.burn_in,
        thinning: s.thinning,
        walkers: s.walkers,
        reweight: c.reweight.into(),
        eta_0: c.eta0,
        min_new_class_size: c.min_new_class_size,
        workers: s.workers,
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    sampling: SamplingOpts,
    /// Existing run directory whose density and checkpoint are extended.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StoredArgs {
    /// Graph as sampled (the `graph.txt` of a sample directory).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    dos: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    stored: StoredArgs,
    #[arg(long)]
    temperature: f64,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = Reweight::Density)]
    reweight: Reweight,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    stored: StoredArgs,
    #[command(flatten)]
    classify: ClassifyOpts,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MincutArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Expansion cycles when q > 2.
    #[arg(long, default_value_t = 20)]
    cycles: usize,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 4)]
    labels_per_draw: usize,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// Classes labels are drawn from (1-based); all when omitted.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<usize>,
    #[arg(long)]
    no_stratify: bool,
    /// Score a new class as the unlabelled class most of it belongs to.
    #[arg(long)]
    match_new_classes: bool,
    #[command(flatten)]
    sampling: SamplingOpts,
    #[command(flatten)]
    classify: ClassifyOpts,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    /// `id,class` labels replacing those in the graph file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingOpts,
    #[command(flatten)]
    classify: ClassifyOpts,
    #[arg(long)]
    out_dir: PathBuf,
}

fn log(event: &str, fields: &[(&str, String)]) {
    let mut line = format!("event={event}");
    for (k, v) in fields {
        if v.contains(char::is_whitespace) {
            line.push_str(&format!(" {k}=\"{v}\""));
        } else {
            line.push_str(&format!(" {k}={v}"));
        }
    }
    eprintln!("{line}");
}

fn zero_based(classes: &[usize]) -> AppResult<Vec<usize>> {
    classes
        .iter()
        .map(|&c| c.checked_sub(1).ok_or_else(|| AppError::Usage("classes are 1-based".into())))
        .collect()
}

fn toygen(a: ToygenArgs) -> AppResult<()> {
    let toy: ToyInstance = match a.kind {
        ToyKind::Filament => filament_toy(FilamentParams {
            block_w: a.block_w,
            block_h: a.block_h,
            filament_len: a.length,
            filament_width: a.width,
        })?,
        ToyKind::ThreeClass => three_class_toy(ThreeClassParams {
            block_w: a.block_w,
            block_h: a.block_h,
            bridge_len: a.length,
            bridge_width: a.width,
        })?,
    };
    let q = a.q;
    let mut graph = toy.graph.with_labels(q, &[])?;
    let mut meta = vec![
        ("generator", match a.kind { ToyKind::Filament => "filament", ToyKind::ThreeClass => "three-class" }.to_string()),
        ("block", format!("{}x{}", a.block_w, a.block_h)),
        ("bridge", format!("{}x{}", a.length, a.width)),
    ];
    if a.labels > 0 {
        let seed = a.seed.ok_or_else(|| AppError::Usage("--seed is required when drawing labels".into()))?;
        let classes = if a.label_classes.is_empty() { (0..q).collect() } else { zero_based(&a.label_classes)? };
        let draw = LabelDraw { count: a.labels, classes: &classes, region: None, stratified: true, seed };
        let labels = sample_labels(&toy.truth, &draw)?;
        graph = graph.with_labels(q, &labels)?;
        write_text(&a.out_dir.join("labels.csv"), &emit_id_class(&labels))?;
        meta.push(("seed", seed.to_string()));
    }
    let truth: Vec<(usize, usize)> = toy.truth.classes().iter().copied().enumerate().collect();
    write_text(&a.out_dir.join("graph.txt"), &emit_graph(&graph, &meta))?;
    write_text(&a.out_dir.join("truth.csv"), &emit_id_class(&truth))?;
    let width = toy.pixels.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let height = toy.pixels.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let mut mask = mcssl_core::build::BoolMask::new(width, height, vec![false; width * height])?;
    for &(x, y) in &toy.pixels {
        mask.set(x, y, true);
    }
    write_text(&a.out_dir.join("mask.txt"), &emit_mask(&mask))?;
    log("toygen", &[("points", graph.n_points().to_string()), ("edges", graph.edges().len().to_string())]);
    Ok(())
}

fn graph_cmd(a: GraphArgs) -> AppResult<()> {
    let (graph, ids, meta) = if let Some(path) = &a.features {
        let (ids, m) = read_features(path)?;
        let (m, kept) = m.retain_rows(a.min_present);
        let m = if a.no_zscore { m } else { zscore_normalize(&m)? };
        let knn = knn_similarity_graph(&m, a.k, a.q)?;
        let ids: Vec<String> = kept.iter().map(|&r| ids[r].clone()).collect();
        log("graph", &[("components", knn.components.to_string()), ("kernel_scale", fmt6(knn.kernel_scale))]);
        let meta = vec![("k", a.k.to_string()), ("kernel_scale", format!("{}", knn.kernel_scale))];
        (knn.graph, Some(ids), meta)
    } else {
        let mask = read_mask(a.mask.as_ref().expect("clap requires a source"))?;
        let grid = grid_graph(&mask)?;
        (grid.graph.with_labels(a.q, &[])?, None, vec![])
    };
    let graph = match &a.labels {
        Some(path) => {
            let text = read_text(path)?;
            let resolve = |s: &str| match &ids {
                Some(ids) => ids.iter().position(|i| i == s),
                None => s.parse().ok(),
            };
            let labels = mcssl::io::parse_id_class(path, &text, Some(a.q), &resolve)?;
            graph.with_labels(a.q, &labels)?
        }
        None => graph,
    };
    if let Some(ids) = &ids {
        let rows: String = ids.iter().enumerate().map(|(p, id)| format!("{p},{id}\n")).collect();
        write_text(&a.output.with_extension("ids.csv"), &format!("point,id\n{rows}"))?;
    }
    write_text(&a.output, &emit_graph(&graph, &meta))
}

fn exact_cmd(a: ExactArgs) -> AppResult<()> {
    let graph = read_graph(&a.graph)?;
    let summary = enumerate(&graph, a.temperature, EnumerationLimit { max_states: a.max_states })?;
    let text = emit_json(&ExactRecord::from(&summary));
    match &a.output {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_stored(s: &StoredArgs) -> AppResult<Estimate> {
    let graph = read_graph(&s.graph)?;
    let dos = parse_dos(&s.dos, &read_text(&s.dos)?)?;
    let acc = parse_checkpoint(&s.checkpoint, &read_text(&s.checkpoint)?)?;
    if acc.n_points() != graph.n_points() || acc.n_edges() != graph.edges().len() || acc.binning() != dos.binning() {
        return Err(AppError::Usage("graph, density and checkpoint do not belong together".into()));
    }
    Ok(Estimate { graph, dos, acc })
}

fn sample_cmd(a: SampleArgs) -> AppResult<()> {
    let config = run_config(&a.sampling, &ClassifyOpts::default_values());
    config.validate()?;
    let (graph, dos, mut acc) = match &a.resume {
        Some(dir) => {
            let est = load_stored(&StoredArgs {
                graph: dir.join("graph.txt"),
                dos: dir.join(DOS_FILE),
                checkpoint: dir.join("accumulator.json"),
            })?;
            (est.graph, est.dos, Some(est.acc))
        }
        None => {
            let graph = mcssl::pipeline::prepare_graph(&read_graph(&a.graph)?, &config)?;
            let dos = estimate_density(&graph, &config)?;
            log("wang_landau", &[("sweeps", dos.sweeps().to_string()), ("valid", dos.is_valid().to_string())]);
            (graph, dos, None)
        }
    };
    if !dos.is_valid() {
        write_estimate(&a.out_dir, &graph, &dos, None, &config)?;
    }
    let mut config = config;
    if let Some(old) = &acc {
        // fresh walker streams, still a function of the seed and the checkpoint
        config.seed = walker_seed(config.seed, old.total_samples());
    }
    let fresh = sample_marginals(&graph, &dos, &config)?;
    let acc = match acc.take() {
        Some(mut old) => {
            old.merge_from(&fresh)?;
            old
        }
        None => fresh,
    };
    log("sample", &[("total_samples", acc.total_samples().to_string())]);
    write_estimate(&a.out_dir, &graph, &dos, Some(&acc), &config)
}

impl ClassifyOpts {
    fn default_values() -> Self {
        ClassifyOpts {
            tau: 0.1,
            grid_min: 0.05,
            grid_max: 2.0,
            grid_count: 40,
            reweight: Reweight::Density,
            eta0: None,
            min_new_class_size: None,
        }
    }
}

fn classify_cmd(a: ClassifyArgs) -> AppResult<()> {
    let est = load_stored(&a.stored)?;
    let table = reweight_with(&est.dos, &est.acc, a.temperature, ReweightChoice::from(a.reweight).into())?;
    let c = classify(&table, &est.graph, a.tau);
    let meta = [("T", fmt6(a.temperature)), ("tau", fmt6(a.tau))];
    write_text(&a.output, &emit_profile(&rows_for(&c), &meta))
}

fn profile_cmd(a: ProfileArgs) -> AppResult<()> {
    let est = load_stored(&a.stored)?;
    let mut config = run_config(&default_sampling(), &a.classify);
    config.normalize = false;
    let analysis = analyze(&est, &config)?;
    let summary = write_analysis(&a.out_dir, &est, &analysis, &config)?;
    log("profile", &[("t_star", fmt6(summary.t_star))]);
    Ok(())
}

fn default_sampling() -> SamplingOpts {
    SamplingOpts {
        seed: 0,
        samples: 200_000,
        burn_in: 1_000,
        thinning: 1,
        walkers: 4,
        workers: 1,
        bin_width: None,
        no_normalize: false,
        energy_ceiling: None,
        auto_ceiling: false,
        wl_initial_ln_f: 1.0,
        wl_flatness: 0.8,
        wl_final_ln_f: 1e-8,
        wl_check_sweeps: 100,
        wl_max_sweeps: 10_000_000,
    }
}

fn mincut_cmd(a: MincutArgs) -> AppResult<()> {
    let graph = read_graph(&a.graph)?;
    let (cut, method) = if graph.q() == 2 {
        (mincut_q2(&graph)?, "mincut")
    } else {
        (alpha_expansion(&graph, &nearest_label_init(&graph), a.cycles)?, "alpha-expansion")
    };
    let rows: Vec<(usize, usize)> = cut.config.states().iter().copied().enumerate().collect();
    write_text(&a.output, &emit_id_class(&rows))?;
    let json = serde_json::json!({ "method": method, "energy": cut.energy, "flow": cut.flow });
    let json_path = a.json.unwrap_or_else(|| a.output.with_extension("json"));
    write_text(&json_path, &emit_json(&json))?;
    log("mincut", &[("method", method.into()), ("energy", fmt6(cut.energy))]);
    Ok(())
}

fn read_truth(path: &Path, n: usize) -> AppResult<GroundTruth> {
    let mut rows = read_id_class(path, None)?;
    rows.sort_unstable();
    if rows.len() != n || rows.iter().enumerate().any(|(i, &(p, _))| p != i) {
        return Err(AppError::parse(path, 1, format!("truth must list every point 0..{n} once")));
    }
    Ok(GroundTruth::new(rows.into_iter().map(|(_, c)| c).collect())?)
}

fn batch_cmd(a: BatchArgs) -> AppResult<()> {
    let graph = read_graph(&a.graph)?;
    let truth = read_truth(&a.truth, graph.n_points())?;
    let graph = graph.with_labels(graph.q(), &[])?;
    let config = BatchConfig {
        run: run_config(&a.sampling, &a.classify),
        labels_per_draw: a.labels_per_draw,
        repeats: a.repeats,
        classes: zero_based(&a.classes)?,
        stratified: !a.no_stratify,
        match_new_classes: a.match_new_classes,
        expansion_cycles: 20,
    };
    let table = run_experiment_batch(&graph, &truth, &config)?;
    let header = format!("# config={}\n", serde_json::to_string(&config).expect("config serializes"));
    write_text(&a.out_dir.join("batch.csv"), &(header + &table.to_csv()))?;
    write_text(&a.out_dir.join("batch.json"), &emit_json(&table))?;
    log(
        "batch",
        &[
            ("repeats", a.repeats.to_string()),
            ("method_not_worse", table.method_not_worse.to_string()),
            ("failures", table.failures.to_string()),
        ],
    );
    Ok(())
}

fn run_cmd(a: RunArgs) -> AppResult<()> {
    let mut graph: DataGraph = read_graph(&a.graph)?;
    if let Some(path) = &a.labels {
        let labels = read_id_class(path, Some(graph.q()))?;
        graph = graph.with_labels(graph.q(), &labels)?;
    }
    let config = run_config(&a.sampling, &a.classify);
    let summary = run_pipeline(&graph, &config, &a.out_dir)?;
    log("run", &[("t_star", fmt6(summary.t_star)), ("out_dir", a.out_dir.display().to_string())]);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Toygen(a) => toygen(a),
        Command::Graph(a) => graph_cmd(a),
        Command::Exact(a) => exact_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Profile(a) => profile_cmd(a),
        Command::Mincut(a) => mincut_cmd(a),
        Command::Batch(a) => batch_cmd(a),
        Command::Run(a) => run_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            log("error", &[("code", code.to_string()), ("message", e.to_string())]);
            ExitCode::from(code as u8)
        }
    }
}
