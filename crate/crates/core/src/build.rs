//! Graph construction: feature matrices, boolean masks, synthetic toys and
//! random label draws.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::model::{DataGraph, Edge};
use crate::{Error, Result};

/// Real-valued features with a missing-entry mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    present: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, cells: Vec<Option<f64>>) -> Result<Self> {
        if cells.len() != n_rows * n_cols {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} cells for a {n_rows}x{n_cols} matrix",
                cells.len()
            )));
        }
        if cells.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature values must be finite".into()));
        }
        let present = cells.iter().map(Option::is_some).collect();
        let values = cells.into_iter().map(|c| c.unwrap_or(0.0)).collect();
        Ok(FeatureMatrix { n_rows, n_cols, values, present })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_cols + col;
        self.present[i].then(|| self.values[i])
    }

    pub fn present_in_row(&self, row: usize) -> usize {
        self.present[row * self.n_cols..(row + 1) * self.n_cols].iter().filter(|p| **p).count()
    }

    /// Keeps rows with at least `min_present` entries; returns the kept
    /// original row indices alongside.
    pub fn retain_rows(&self, min_present: usize) -> (FeatureMatrix, Vec<usize>) {
        let kept: Vec<usize> = (0..self.n_rows).filter(|&r| self.present_in_row(r) >= min_present).collect();
        let mut cells = Vec::with_capacity(kept.len() * self.n_cols);
        for &r in &kept {
            cells.extend((0..self.n_cols).map(|c| self.get(r, c)));
        }
        (FeatureMatrix::new(kept.len(), self.n_cols, cells).expect("same shape"), kept)
    }
}

/// Each column shifted to mean 0 and scaled to population standard
/// deviation 1 over its present entries.
pub fn zscore_normalize(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    for c in 0..m.n_cols {
        let column: Vec<f64> = (0..m.n_rows).filter_map(|r| m.get(r, c)).collect();
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = math::sqrt(var);
        if column.is_empty() || !(std > 1e-300) {
            return Err(Error::ZeroVariance(c));
        }
        for r in 0..m.n_rows {
            let i = r * m.n_cols + c;
            if m.present[i] {
                out.values[i] = (m.values[i] - mean) / std;
            }
        }
    }
    Ok(out)
}

/// Euclidean distance over the coordinates present in both rows, scaled by
/// `sqrt(d / d_shared)`. `None` when no coordinate is shared.
pub fn masked_distance(m: &FeatureMatrix, a: usize, b: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for c in 0..m.n_cols {
        if let (Some(x), Some(y)) = (m.get(a, c), m.get(b, c)) {
            sum += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| math::sqrt(sum * m.n_cols as f64 / shared as f64))
}

/// k-nearest-neighbor similarity graph and how its kernel was scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub graph: DataGraph,
    /// `a` in `J = exp(-d^2/a^2)`: the mean distance over the kept edges.
    pub kernel_scale: f64,
    pub components: usize,
}

/// Symmetrized (union) k-NN graph with Gaussian similarities
/// `J_ij = exp(-d_ij^2 / a^2)`, `a` the mean kept distance. Ties in
/// distance resolve to the lower point index. The graph has `q` classes and
/// no labels.
pub fn knn_similarity_graph(m: &FeatureMatrix, k: usize, q: usize) -> Result<KnnGraph> {
    let n = m.n_rows;
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(alloc::format!("k-NN needs 1 <= k < N, got k={k}, N={n}")));
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut dist = vec![f64::INFINITY; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            if let Some(d) = masked_distance(m, a, b) {
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }
    }
    for a in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&b| b != a && dist[a * n + b].is_finite()).collect();
        order.sort_by(|&x, &y| dist[a * n + x].total_cmp(&dist[a * n + y]).then(x.cmp(&y)));
        for &b in order.iter().take(k) {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let scale = if pairs.is_empty() {
        0.0
    } else {
        pairs.iter().map(|&(a, b)| dist[a * n + b]).sum::<f64>() / pairs.len() as f64
    };
    let edges = pairs
        .iter()
        .map(|&(a, b)| {
            let d = dist[a * n + b];
            let w = if scale > 0.0 { math::exp(-(d * d) / (scale * scale)) } else { 1.0 };
            // far pairs underflow; keep them as the weakest representable bond
            Edge::new(a, b, w.max(f64::MIN_POSITIVE))
        })
        .collect();
    let graph = DataGraph::new(n, q, edges, &[])?;
    let components = graph.component_count();
    Ok(KnnGraph { graph, kernel_scale: scale, components })
}

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl BoolMask {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::InvalidArgument("mask size does not match its dimensions".into()));
        }
        Ok(BoolMask { width, height, cells })
    }

    pub fn filled(width: usize, height: usize) -> Self {
        BoolMask { width, height, cells: vec![true; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.cells[y * self.width + x] = v;
    }
}

/// Grid graph over the set pixels of a mask, numbered row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    pub graph: DataGraph,
    /// `(x, y)` of each point.
    pub pixels: Vec<(usize, usize)>,
}

/// 4-neighbor adjacency with unit weights among the set pixels.
pub fn grid_graph(mask: &BoolMask) -> Result<GridGraph> {
    if mask.cells.is_empty() {
        return Err(Error::InvalidArgument("empty mask".into()));
    }
    let mut index = vec![usize::MAX; mask.cells.len()];
    let mut pixels = Vec::new();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                index[y * mask.width + x] = pixels.len();
                pixels.push((x, y));
            }
        }
    }
    let mut edges = Vec::new();
    for &(x, y) in &pixels {
        let here = index[y * mask.width + x];
        if x + 1 < mask.width && mask.get(x + 1, y) {
            edges.push(Edge::new(here, index[y * mask.width + x + 1], 1.0));
        }
        if y + 1 < mask.height && mask.get(x, y + 1) {
            edges.push(Edge::new(here, index[(y + 1) * mask.width + x], 1.0));
        }
    }
    Ok(GridGraph { graph: DataGraph::new(pixels.len(), 2, edges, &[])?, pixels })
}

/// True class per point, 0-based and contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    classes: Vec<usize>,
    n_classes: usize,
}

impl GroundTruth {
    pub fn new(classes: Vec<usize>) -> Result<Self> {
        let n_classes = classes.iter().copied().max().map_or(0, |m| m + 1);
        let mut present = vec![false; n_classes];
        for &c in &classes {
            present[c] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::InvalidArgument(alloc::format!(
                "ground-truth classes are not contiguous: {missing} is unused"
            )));
        }
        Ok(GroundTruth { classes, n_classes })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, point: usize) -> usize {
        self.classes[point]
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.classes.len()).filter(|&p| self.classes[p] == class).collect()
    }
}

/// A synthetic instance: graph, truth and pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyInstance {
    pub graph: DataGraph,
    pub truth: GroundTruth,
    pub pixels: Vec<(usize, usize)>,
}

/// Blocks laid out left to right, joined by vertically centred bridges of
/// `bridge_width` rows. Bridge columns belong to the nearer block; the
/// first half (rounded up) to the left one.
fn strip(block_w: usize, block_h: usize, bridge_len: usize, bridge_width: usize, block_class: &[usize], gap_when_empty: bool) -> Result<ToyInstance> {
    if block_w == 0 || block_h == 0 {
        return Err(Error::InvalidArgument("block dimensions must be at least 1".into()));
    }
    if bridge_len > 0 && (bridge_width == 0 || bridge_width > block_h) {
        return Err(Error::InvalidArgument("bridge width must be in 1..=block height".into()));
    }
    let spacing = if bridge_len == 0 && gap_when_empty { 1 } else { bridge_len };
    let n_blocks = block_class.len();
    let width = n_blocks * block_w + (n_blocks - 1) * spacing;
    let mut mask = BoolMask { width, height: block_h, cells: vec![false; width * block_h] };
    let mut column_class = vec![0usize; width];
    let top = (block_h - bridge_width.min(block_h)) / 2;
    let mut x = 0;
    for (b, &class) in block_class.iter().enumerate() {
        for dx in 0..block_w {
            column_class[x + dx] = class;
            for y in 0..block_h {
                mask.set(x + dx, y, true);
            }
        }
        x += block_w;
        if b + 1 < n_blocks {
            for dx in 0..spacing {
                column_class[x + dx] = if dx < bridge_len.div_ceil(2) { class } else { block_class[b + 1] };
                if bridge_len > 0 {
                    for y in top..top + bridge_width {
                        mask.set(x + dx, y, true);
                    }
                }
            }
            x += spacing;
        }
    }
    let grid = grid_graph(&mask)?;
    let truth = GroundTruth::new(grid.pixels.iter().map(|&(x, _)| column_class[x]).collect())?;
    Ok(ToyInstance { graph: grid.graph, truth, pixels: grid.pixels })
}

/// Two unit-weight blocks joined by a filament bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilamentParams {
    pub block_w: usize,
    pub block_h: usize,
    pub filament_len: usize,
    /// Rows in the bridge; 1 is a single-pixel filament.
    pub filament_width: usize,
}

impl FilamentParams {
    pub fn new(block_w: usize, block_h: usize, filament_len: usize) -> Self {
        FilamentParams { block_w, block_h, filament_len, filament_width: 1 }
    }
}

/// Two-block toy: classes 0 (left block) and 1 (right block). With
/// `filament_len = 0` the blocks are separated by an empty column.
pub fn filament_toy(params: FilamentParams) -> Result<ToyInstance> {
    strip(params.block_w, params.block_h, params.filament_len, params.filament_width, &[0, 1], true)
}

/// Three blocks in a row, left (class 0), middle (class 2), right (class 1),
/// joined by bridges; with `bridge_len = 0` neighboring blocks touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreeClassParams {
    pub block_w: usize,
    pub block_h: usize,
    pub bridge_len: usize,
    pub bridge_width: usize,
}

impl Default for ThreeClassParams {
    fn default() -> Self {
        ThreeClassParams { block_w: 6, block_h: 6, bridge_len: 2, bridge_width: 2 }
    }
}

pub fn three_class_toy(params: ThreeClassParams) -> Result<ToyInstance> {
    strip(params.block_w, params.block_h, params.bridge_len, params.bridge_width, &[0, 2, 1], false)
}

/// How labelled points are drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelDraw<'a> {
    pub count: usize,
    /// Classes that may be labelled.
    pub classes: &'a [usize],
    /// Restricts the candidates to these points when set.
    pub region: Option<&'a [usize]>,
    /// Guarantees at least one label per allowed class.
    pub stratified: bool,
    pub seed: u64,
}

/// Uniform draw without replacement; returns `(point, class)` in point
/// order.
pub fn sample_labels(truth: &GroundTruth, draw: &LabelDraw<'_>) -> Result<Vec<(usize, usize)>> {
    let region: Option<BTreeSet<usize>> = draw.region.map(|r| r.iter().copied().collect());
    let mut pool: Vec<usize> = (0..truth.len())
        .filter(|&p| draw.classes.contains(&truth.class(p)))
        .filter(|p| region.as_ref().map_or(true, |r| r.contains(p)))
        .collect();
    if draw.count > pool.len() {
        return Err(Error::PoolTooSmall { requested: draw.count, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(draw.seed);
    let mut chosen = Vec::with_capacity(draw.count);
    if draw.stratified {
        let mut classes: Vec<usize> = draw.classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if draw.count < classes.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "stratified draw of {} cannot cover {} classes",
                draw.count,
                classes.len()
            )));
        }
        for class in classes {
            let members: Vec<usize> = (0..pool.len()).filter(|&i| truth.class(pool[i]) == class).collect();
            if members.is_empty() {
                return Err(Error::PoolTooSmall { requested: 1, available: 0 });
            }
            let at = members[rng.random_range(0..members.len())];
            chosen.push(pool.swap_remove(at));
        }
    }
    while chosen.len() < draw.count {
        let at = rng.random_range(0..pool.len());
        chosen.push(pool.swap_remove(at));
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|p| (p, truth.class(p))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(values.len(), 1, values.iter().map(|&v| Some(v)).collect()).unwrap()
    }

    #[test]
    fn zscore_examples() {
        let z = zscore_normalize(&column(&[1.0, 2.0, 3.0])).unwrap();
        let expected = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (r, e) in expected.iter().enumerate() {
            assert!((z.get(r, 0).unwrap() - e).abs() < 1e-12);
        }
        let again = zscore_normalize(&z).unwrap();
        for r in 0..3 {
            assert!((again.get(r, 0).unwrap() - z.get(r, 0).unwrap()).abs() < 1e-12);
        }
        assert_eq!(zscore_normalize(&column(&[5.0, 5.0, 5.0])), Err(Error::ZeroVariance(0)));
    }

    #[test]
    fn zscore_keeps_missing() {
        let m = FeatureMatrix::new(3, 2, alloc::vec![Some(1.0), None, Some(2.0), Some(4.0), Some(3.0), Some(6.0)]).unwrap();
        let z = zscore_normalize(&m).unwrap();
        assert_eq!(z.get(0, 1), None);
        assert!((z.get(1, 1).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn row_filter() {
        let m = FeatureMatrix::new(2, 3, alloc::vec![Some(1.0), None, None, Some(1.0), Some(2.0), None]).unwrap();
        let (kept, rows) = m.retain_rows(2);
        assert_eq!(rows, alloc::vec![1]);
        assert_eq!(kept.n_rows(), 1);
    }

    #[test]
    fn knn_examples() {
        let dup = column(&[0.5, 0.5]);
        let g = knn_similarity_graph(&dup, 1, 2).unwrap();
        assert_eq!(g.graph.edges(), &[Edge::new(0, 1, 1.0)]);

        let line = column(&[0.0, 1.0, 3.0]);
        let g = knn_similarity_graph(&line, 1, 2).unwrap();
        let pairs: Vec<(usize, usize)> = g.graph.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, alloc::vec![(0, 1), (1, 2)]);
        assert!((g.kernel_scale - 1.5).abs() < 1e-15);
        let j01 = g.graph.edges()[0].weight;
        assert!((j01 - math::exp(-1.0 / 2.25)).abs() < 1e-15);
        assert!((j01 - 0.6412).abs() < 1e-4);
        assert!(g.graph.edges()[1].weight < j01);
        assert_eq!(g.components, 1);
        assert!(knn_similarity_graph(&line, 3, 2).is_err());
    }

    #[test]
    fn missing_entries_rescale_distance() {
        let m = FeatureMatrix::new(2, 2, alloc::vec![Some(0.0), Some(0.0), Some(1.0), None]).unwrap();
        assert!((masked_distance(&m, 0, 1).unwrap() - math::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_counts() {
        assert_eq!(grid_graph(&BoolMask::filled(2, 1)).unwrap().graph.edges().len(), 1);
        assert_eq!(grid_graph(&BoolMask::filled(2, 2)).unwrap().graph.edges().len(), 4);
        assert_eq!(grid_graph(&BoolMask::filled(3, 3)).unwrap().graph.edges().len(), 12);
        for (w, h) in [(1, 1), (5, 2), (4, 7)] {
            let g = grid_graph(&BoolMask::filled(w, h)).unwrap();
            assert_eq!(g.graph.edges().len(), w * (h - 1) + h * (w - 1));
        }
        assert!(grid_graph(&BoolMask { width: 0, height: 0, cells: alloc::vec![] }).is_err());
    }

    #[test]
    fn filament_examples() {
        let t = filament_toy(FilamentParams::new(2, 2, 1)).unwrap();
        assert_eq!(t.graph.n_points(), 9);
        assert_eq!(t.truth.members(0).len(), 5);
        assert_eq!(t.truth.members(1).len(), 4);
        assert_eq!(t.graph.component_count(), 1);

        let apart = filament_toy(FilamentParams::new(3, 2, 0)).unwrap();
        assert_eq!(apart.graph.n_points(), 12);
        assert_eq!(apart.graph.component_count(), 2);

        for (w, h, l) in [(4, 3, 5), (1, 1, 2), (6, 5, 3)] {
            let t = filament_toy(FilamentParams::new(w, h, l)).unwrap();
            assert_eq!(t.graph.n_points(), 2 * w * h + l);
        }
        let wide = filament_toy(FilamentParams { block_w: 5, block_h: 5, filament_len: 4, filament_width: 3 }).unwrap();
        assert_eq!(wide.graph.n_points(), 50 + 12);
    }

    #[test]
    fn three_class_defaults() {
        let t = three_class_toy(ThreeClassParams::default()).unwrap();
        assert_eq!(t.graph.component_count(), 1);
        assert_eq!(t.truth.n_classes(), 3);
        let total: usize = (0..3).map(|c| t.truth.members(c).len()).sum();
        assert_eq!(total, t.graph.n_points());
    }

    #[test]
    fn label_draws() {
        let truth = GroundTruth::new(alloc::vec![0, 0, 0, 1, 1, 1, 1, 2]).unwrap();
        let all = sample_labels(&truth, &LabelDraw { count: 7, classes: &[0, 1], region: None, stratified: false, seed: 1 }).unwrap();
        assert_eq!(all.len(), 7);
        assert!(all.iter().all(|&(_, c)| c < 2));
        for seed in 0..20 {
            let draw = LabelDraw { count: 5, classes: &[0, 1], region: None, stratified: true, seed };
            let s = sample_labels(&truth, &draw).unwrap();
            assert!(s.iter().any(|&(_, c)| c == 0) && s.iter().any(|&(_, c)| c == 1));
            assert_eq!(s, sample_labels(&truth, &draw).unwrap());
        }
        let region = [3, 4];
        let r = sample_labels(&truth, &LabelDraw { count: 2, classes: &[1], region: Some(&region), stratified: false, seed: 4 }).unwrap();
        assert_eq!(r, alloc::vec![(3, 1), (4, 1)]);
        assert!(matches!(
            sample_labels(&truth, &LabelDraw { count: 9, classes: &[0, 1, 2], region: None, stratified: false, seed: 0 }),
            Err(Error::PoolTooSmall { requested: 9, available: 8 })
        ));
    }

    proptest! {
        #[test]
        fn zscore_idempotent(values in proptest::collection::vec(-50.0f64..50.0, 3..20)) {
            let m = column(&values);
            prop_assume!(zscore_normalize(&m).is_ok());
            let once = zscore_normalize(&m).unwrap();
            if let Ok(twice) = zscore_normalize(&once) {
                for r in 0..values.len() {
                    prop_assert!((once.get(r, 0).unwrap() - twice.get(r, 0).unwrap()).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn knn_is_undirected(points in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..15), k in 1usize..4) {
            let n = points.len();
            let cells = points.iter().flat_map(|&(x, y)| [Some(x), Some(y)]).collect();
            let m = FeatureMatrix::new(n, 2, cells).unwrap();
            let g = knn_similarity_graph(&m, k, 2).unwrap();
            for e in g.graph.edges() {
                prop_assert!(e.i < e.j);
                prop_assert!(e.weight > 0.0 && e.weight <= 1.0);
            }
            prop_assert!(g.graph.edges().len() >= n * k / 2);
            for p in 0..n {
                prop_assert!(g.graph.degree(p) >= k);
            }
        }
    }
}
