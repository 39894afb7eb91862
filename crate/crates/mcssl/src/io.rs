//! Plain-text inputs: graph files, `id,class` tables, feature CSVs and
//! boolean masks. Classes are 1-based in every file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mcssl_core::build::{BoolMask, FeatureMatrix};
use mcssl_core::{DataGraph, Edge};

use crate::error::{AppError, AppResult};
use crate::format::{fmt_full, parse_float};

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Content lines with their 1-based line numbers; blank lines and `#`
/// comments are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, token: Option<&str>, what: &str) -> AppResult<T> {
    let token = token.ok_or_else(|| AppError::parse(path, line, format!("missing {what}")))?;
    token.parse().map_err(|_| AppError::parse(path, line, format!("bad {what} '{token}'")))
}

/// Graph file: `N q`, then `label k c` and `edge i j J` lines.
pub fn parse_graph(path: &Path, text: &str) -> AppResult<DataGraph> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| AppError::parse(path, 1, "empty graph file"))?;
    let mut tok = header.split_whitespace();
    let n: usize = field(path, line, tok.next(), "point count")?;
    let q: usize = field(path, line, tok.next(), "class count")?;
    if tok.next().is_some() {
        return Err(AppError::parse(path, line, "header must be 'N q'"));
    }
    if q < 2 {
        return Err(AppError::parse(path, line, format!("q must be at least 2, got {q}")));
    }
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut labelled = HashSet::new();
    let mut pairs = HashSet::new();
    let point = |line: usize, token: Option<&str>| -> AppResult<usize> {
        let p: usize = field(path, line, token, "point index")?;
        if p >= n {
            return Err(AppError::parse(path, line, format!("point {p} out of range for N = {n}")));
        }
        Ok(p)
    };
    for (line, l) in lines {
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("label") => {
                let k = point(line, tok.next())?;
                let c: usize = field(path, line, tok.next(), "class")?;
                if c == 0 || c > q {
                    return Err(AppError::parse(path, line, format!("class {c} outside 1..={q}")));
                }
                if !labelled.insert(k) {
                    return Err(AppError::parse(path, line, format!("point {k} labelled twice")));
                }
                labels.push((k, c - 1));
            }
            Some("edge") => {
                let i = point(line, tok.next())?;
                let j = point(line, tok.next())?;
                let w = tok
                    .next()
                    .and_then(parse_float)
                    .ok_or_else(|| AppError::parse(path, line, "missing or bad edge weight"))?;
                if i == j {
                    return Err(AppError::parse(path, line, format!("self edge on {i}")));
                }
                if !(w > 0.0 && w.is_finite()) {
                    return Err(AppError::parse(path, line, format!("edge weight must be positive, got {w}")));
                }
                if !pairs.insert((i.min(j), i.max(j))) {
                    return Err(AppError::parse(path, line, format!("duplicate edge {i}-{j}")));
                }
                edges.push(Edge::new(i, j, w));
            }
            Some(other) => return Err(AppError::parse(path, line, format!("unknown record '{other}'"))),
            None => unreachable!("blank lines are skipped"),
        }
        if tok.next().is_some() {
            return Err(AppError::parse(path, line, "trailing fields"));
        }
    }
    Ok(DataGraph::new(n, q, edges, &labels)?)
}

pub fn read_graph(path: &Path) -> AppResult<DataGraph> {
    parse_graph(path, &read_text(path)?)
}

/// `# key=value` lines followed by the graph; weights are written exactly.
pub fn emit_graph(graph: &DataGraph, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "{} {}", graph.n_points(), graph.q());
    for (k, c) in graph.label_pairs() {
        let _ = writeln!(out, "label {k} {}", c + 1);
    }
    for e in graph.edges() {
        let _ = writeln!(out, "edge {} {} {}", e.i, e.j, fmt_full(e.weight));
    }
    out
}

/// `id,class` rows; `resolve` maps an id to a point index.
pub fn parse_id_class(
    path: &Path,
    text: &str,
    q: Option<usize>,
    resolve: &dyn Fn(&str) -> Option<usize>,
) -> AppResult<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| AppError::parse(path, 1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "class" {
        return Err(AppError::parse(path, 1, "expected header 'id,class'"));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            AppError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = resolve(&record[0]).ok_or_else(|| AppError::parse(path, line, format!("unknown id '{}'", &record[0])))?;
        let class: usize = field(path, line, Some(&record[1]), "class")?;
        if class == 0 || q.is_some_and(|q| class > q) {
            return Err(AppError::parse(path, line, format!("class {class} out of range")));
        }
        out.push((id, class - 1));
    }
    Ok(out)
}

/// `id,class` rows keyed by point index.
pub fn read_id_class(path: &Path, q: Option<usize>) -> AppResult<Vec<(usize, usize)>> {
    parse_id_class(path, &read_text(path)?, q, &|s| s.parse().ok())
}

pub fn emit_id_class(rows: &[(usize, usize)]) -> String {
    let mut out = String::from("id,class\n");
    for (id, c) in rows {
        let _ = writeln!(out, "{id},{}", c + 1);
    }
    out
}

/// Feature CSV: a header, then one row per point: an id followed by numeric
/// or empty (missing) cells.
pub fn parse_features(path: &Path, text: &str) -> AppResult<(Vec<String>, FeatureMatrix)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let width = reader.headers().map_err(|e| AppError::parse(path, 1, e.to_string()))?.len();
    if width < 2 {
        return Err(AppError::parse(path, 1, "need an id column and at least one feature"));
    }
    let mut ids = Vec::new();
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            AppError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        ids.push(record[0].to_string());
        for cell in record.iter().skip(1) {
            if cell.is_empty() {
                cells.push(None);
            } else {
                let v = parse_float(cell)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| AppError::parse(path, line, format!("bad feature value '{cell}'")))?;
                cells.push(Some(v));
            }
        }
    }
    let m = FeatureMatrix::new(ids.len(), width - 1, cells)?;
    Ok((ids, m))
}

pub fn read_features(path: &Path) -> AppResult<(Vec<String>, FeatureMatrix)> {
    parse_features(path, &read_text(path)?)
}

/// Mask text: one row per line, `#`/`1`/`x` set, `.`/`0` unset. Lines
/// starting with `;` are comments.
pub fn parse_mask(path: &Path, text: &str) -> AppResult<BoolMask> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim_end();
        if l.is_empty() || l.starts_with(';') {
            continue;
        }
        let row = l
            .chars()
            .map(|c| match c {
                '#' | '1' | 'x' | 'X' => Ok(true),
                '.' | '0' => Ok(false),
                other => Err(AppError::parse(path, i + 1, format!("bad mask character '{other}'"))),
            })
            .collect::<AppResult<Vec<bool>>>()?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            return Err(AppError::parse(path, i + 1, "mask rows differ in length"));
        }
        rows.push(row);
    }
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    Ok(BoolMask::new(width, height, rows.concat())?)
}

pub fn read_mask(path: &Path) -> AppResult<BoolMask> {
    parse_mask(path, &read_text(path)?)
}

pub fn emit_mask(mask: &BoolMask) -> String {
    let mut out = String::new();
    for y in 0..mask.height {
        out.extend((0..mask.width).map(|x| if mask.get(x, y) { '#' } else { '.' }));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.txt")
    }

    #[test]
    fn graph_round_trip() {
        let g = DataGraph::new(3, 3, vec![Edge::new(0, 1, 0.1), Edge::new(1, 2, 1.0 / 3.0)], &[(2, 2)]).unwrap();
        let text = emit_graph(&g, &[("seed", "7".into())]);
        assert!(text.starts_with("# seed=7\n3 3\nlabel 2 3\n"));
        assert_eq!(parse_graph(p(), &text).unwrap(), g);
    }

    #[test]
    fn graph_diagnostics_name_the_line() {
        let bad = "2 2\nedge 0 1 1\nedge 1 0 2\n";
        let err = parse_graph(p(), bad).unwrap_err().to_string();
        assert!(err.starts_with("test.txt:3:"), "{err}");
        for text in ["", "2\n", "2 2\nlabel 0 3\n", "2 2\nedge 0 2 1\n", "2 2\nedge 0 1 -1\n", "2 2\nnode 1\n"] {
            assert_eq!(parse_graph(p(), text).unwrap_err().exit_code(), 2, "{text:?}");
        }
    }

    #[test]
    fn id_class_round_trip() {
        let rows = vec![(0, 0), (4, 1)];
        let text = emit_id_class(&rows);
        assert_eq!(parse_id_class(p(), &text, Some(2), &|s| s.parse().ok()).unwrap(), rows);
        assert!(parse_id_class(p(), "id,class\n1,0\n", Some(2), &|s| s.parse().ok()).is_err());
        assert!(parse_id_class(p(), "point,label\n", None, &|s| s.parse().ok()).is_err());
    }

    #[test]
    fn features_with_missing_cells() {
        let (ids, m) = parse_features(p(), "gene,a,b\ng1,1.5,\ng2,2,3\n").unwrap();
        assert_eq!(ids, vec!["g1", "g2"]);
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 1), Some(3.0));
        assert!(parse_features(p(), "gene,a\ng1,abc\n").is_err());
    }

    #[test]
    fn mask_round_trip() {
        let m = parse_mask(p(), "##.\n.##\n").unwrap();
        assert_eq!((m.width, m.height), (3, 2));
        assert_eq!(parse_mask(p(), &emit_mask(&m)).unwrap(), m);
        assert!(parse_mask(p(), "##\n#\n").is_err());
    }
}
