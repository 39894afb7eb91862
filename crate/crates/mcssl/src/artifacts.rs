//! Pipeline artifacts: density dumps, accumulator checkpoints, exact
//! summaries, temperature profiles and run summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mcssl_core::classify::{Classification, Outcome};
use mcssl_core::exact::ExactSummary;
use mcssl_core::sampler::{BinStats, DensityOfStates, MarginalAccumulator, Tally};
use mcssl_core::EnergyBinning;

use crate::error::{AppError, AppResult};
use crate::format::{fmt6, fmt_full, parse_float, round6};

/// `# key=value` header lines.
pub fn meta_lines(meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn key_values(line: &str) -> BTreeMap<&str, &str> {
    line.split_whitespace().filter_map(|kv| kv.split_once('=')).collect()
}

/// CSV `bin_lower_edge,ln_density,histogram_count` for every bin, preceded by
/// a `# binning ...` line carrying what is needed to reload it.
pub fn emit_dos(dos: &DensityOfStates, meta: &[(&str, String)]) -> String {
    let b = dos.binning();
    let mut out = meta_lines(meta);
    let _ = writeln!(
        out,
        "# binning width={} origin={} n_bins={} free_spins={} q={} valid={} sweeps={}",
        fmt_full(b.width()),
        fmt_full(b.origin()),
        b.n_bins(),
        dos.free_spins(),
        dos.q(),
        dos.is_valid(),
        dos.sweeps()
    );
    out.push_str("bin_lower_edge,ln_density,histogram_count\n");
    for bin in 0..b.n_bins() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_full(b.lower_edge(bin)),
            fmt_full(dos.log_density()[bin]),
            dos.histogram()[bin]
        );
    }
    out
}

pub fn parse_dos(path: &Path, text: &str) -> AppResult<DensityOfStates> {
    let mut header: Option<(usize, BTreeMap<&str, &str>)> = None;
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# binning ") {
            header = Some((line_no, key_values(rest)));
        } else if line.is_empty() || line.starts_with('#') {
            continue;
        } else if !seen_columns {
            if line != "bin_lower_edge,ln_density,histogram_count" {
                return Err(AppError::parse(path, line_no, "expected DOS column header"));
            }
            seen_columns = true;
        } else {
            let cells: Vec<&str> = line.split(',').collect();
            let (Some(ln_d), Some(count)) = (cells.get(1).and_then(|c| parse_float(c)), cells.get(2).and_then(|c| c.parse::<u64>().ok())) else {
                return Err(AppError::parse(path, line_no, "bad DOS row"));
            };
            if cells.len() != 3 {
                return Err(AppError::parse(path, line_no, "bad DOS row"));
            }
            rows.push((ln_d, count));
        }
    }
    let (line, kv) = header.ok_or_else(|| AppError::parse(path, 1, "missing '# binning' line"))?;
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| AppError::parse(path, line, format!("missing {k}")));
    let num = |k: &str| -> AppResult<f64> { parse_float(get(k)?).ok_or_else(|| AppError::parse(path, line, format!("bad {k}"))) };
    let int = |k: &str| -> AppResult<u64> { get(k)?.parse().map_err(|_| AppError::parse(path, line, format!("bad {k}"))) };
    let n_bins = int("n_bins")? as usize;
    if rows.len() != n_bins {
        return Err(AppError::parse(path, line, format!("{} rows for {n_bins} bins", rows.len())));
    }
    let valid = get("valid")? == "true";
    let binning = EnergyBinning::with_bins(num("width")?, num("origin")?, n_bins)?;
    let (log_density, histogram) = rows.into_iter().unzip();
    let dos = DensityOfStates::from_parts(binning, log_density, histogram, int("free_spins")? as usize, int("q")? as usize, valid)?;
    Ok(dos.with_sweeps(int("sweeps")?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BinRecord {
    bin: usize,
    samples: (u64, f64, f64),
    node: Vec<(u64, f64, f64)>,
    edge_agree: Vec<(u64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    meta: BTreeMap<String, String>,
    width: f64,
    origin: f64,
    n_bins: usize,
    n_points: usize,
    q: usize,
    n_edges: usize,
    bins: Vec<BinRecord>,
}

const CHECKPOINT_FORMAT: &str = "mcssl-accumulator";
const CHECKPOINT_VERSION: u32 = 1;

fn tally_tuple(t: &Tally) -> (u64, f64, f64) {
    (t.count, t.d1, t.d2)
}

fn tuple_tally(&(count, d1, d2): &(u64, f64, f64)) -> Tally {
    Tally { count, d1, d2 }
}

/// Versioned JSON checkpoint of an accumulator; reloading and merging new
/// samples resumes a run.
pub fn emit_checkpoint(acc: &MarginalAccumulator, meta: &[(&str, String)]) -> String {
    let b = acc.binning();
    let cp = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        meta: meta.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        width: b.width(),
        origin: b.origin(),
        n_bins: b.n_bins(),
        n_points: acc.n_points(),
        q: acc.q(),
        n_edges: acc.n_edges(),
        bins: acc
            .occupied_bins()
            .map(|(bin, s)| BinRecord {
                bin,
                samples: tally_tuple(&s.samples),
                node: s.node.iter().map(tally_tuple).collect(),
                edge_agree: s.edge_agree.iter().map(tally_tuple).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&cp).expect("checkpoint serializes");
    text.push('\n');
    text
}

pub fn parse_checkpoint(path: &Path, text: &str) -> AppResult<MarginalAccumulator> {
    let cp: Checkpoint = serde_json::from_str(text).map_err(|e| AppError::parse(path, e.line(), e.to_string()))?;
    if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
        return Err(AppError::parse(path, 1, format!("unsupported checkpoint {} v{}", cp.format, cp.version)));
    }
    let binning = EnergyBinning::with_bins(cp.width, cp.origin, cp.n_bins)?;
    let mut acc = MarginalAccumulator::new(binning, cp.n_points, cp.q, cp.n_edges);
    for rec in &cp.bins {
        if rec.node.len() != cp.n_points * cp.q || rec.edge_agree.len() != cp.n_edges {
            return Err(AppError::parse(path, 1, format!("bin {} has the wrong shape", rec.bin)));
        }
        let stats = BinStats {
            samples: tuple_tally(&rec.samples),
            node: rec.node.iter().map(tuple_tally).collect(),
            edge_agree: rec.edge_agree.iter().map(tuple_tally).collect(),
        };
        acc.insert_bin(rec.bin, stats)?;
    }
    Ok(acc)
}

/// JSON form of an exact enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRecord {
    pub temperature: f64,
    pub log_partition: f64,
    pub marginals: Vec<Vec<f64>>,
    pub edge_agreement: Vec<f64>,
    pub dos: Vec<(f64, u64)>,
    pub ground_energy: f64,
    pub ground_count: u64,
}

impl From<&ExactSummary> for ExactRecord {
    fn from(s: &ExactSummary) -> Self {
        ExactRecord {
            temperature: s.temperature,
            log_partition: s.log_partition,
            marginals: s.marginals.clone(),
            edge_agreement: s.edge_agreement.clone(),
            dos: s.dos.clone(),
            ground_energy: s.ground_energy,
            ground_count: s.ground_count,
        }
    }
}

/// One point at one temperature, as written to profile CSVs. Floats are
/// held at output precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub point: usize,
    pub temperature: f64,
    pub kind: String,
    /// 1-based class, `a;b` for confused points, `new<k>` for new classes.
    pub class_or_set: String,
    pub gap: Option<f64>,
}

impl ProfileRow {
    pub fn new(point: usize, temperature: f64, outcome: &Outcome) -> Self {
        let (class_or_set, gap) = match outcome {
            Outcome::Assigned { class, gap } => ((class + 1).to_string(), Some(round6(*gap))),
            Outcome::Confused { classes } => {
                (classes.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(";"), None)
            }
            Outcome::NewClass { id, .. } => (format!("new{}", id + 1), None),
        };
        ProfileRow { point, temperature: round6(temperature), kind: outcome.kind().into(), class_or_set, gap }
    }
}

pub fn rows_for(classification: &Classification) -> Vec<ProfileRow> {
    classification
        .outcomes
        .iter()
        .enumerate()
        .map(|(p, o)| ProfileRow::new(p, classification.temperature, o))
        .collect()
}

const PROFILE_HEADER: &str = "point_id,T,outcome_kind,class_or_set,gap";

pub fn emit_profile(rows: &[ProfileRow], meta: &[(&str, String)]) -> String {
    let mut out = meta_lines(meta);
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for r in rows {
        let gap = r.gap.map(fmt6).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.point, fmt6(r.temperature), r.kind, r.class_or_set, gap);
    }
    out
}

pub fn parse_profile(path: &Path, text: &str) -> AppResult<Vec<ProfileRow>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != PROFILE_HEADER {
                return Err(AppError::parse(path, i + 1, "expected profile header"));
            }
            seen_header = true;
            continue;
        }
        let bad = || AppError::parse(path, i + 1, "bad profile row");
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(bad());
        }
        rows.push(ProfileRow {
            point: cells[0].parse().map_err(|_| bad())?,
            temperature: parse_float(cells[1]).ok_or_else(bad)?,
            kind: cells[2].into(),
            class_or_set: cells[3].into(),
            gap: if cells[4].is_empty() { None } else { Some(parse_float(cells[4]).ok_or_else(bad)?) },
        });
    }
    Ok(rows)
}

/// Score at one grid temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    #[serde(rename = "T")]
    pub temperature: f64,
    pub eta: f64,
    pub changed: usize,
}

/// Summary of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: serde_json::Value,
    pub seed: u64,
    pub n_points: usize,
    pub q: usize,
    pub n_labelled: usize,
    pub dos_valid: bool,
    pub wang_landau_sweeps: u64,
    pub samples: u64,
    pub eta_0: f64,
    pub min_new_class_size: usize,
    pub eta: Vec<EtaPoint>,
    pub t_star: f64,
    /// Assigned points per 1-based class at `t_star`.
    pub class_counts: BTreeMap<String, usize>,
    pub confused: usize,
    /// Members of each new class at `t_star`.
    pub new_classes: Vec<Vec<usize>>,
}

pub fn emit_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    text
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> AppResult<T> {
    serde_json::from_str(text).map_err(|e| AppError::parse(path, e.line(), e.to_string()))
}
