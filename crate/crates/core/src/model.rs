//! Similarity graph, spin configurations and the clamped Potts energy.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(i: usize, j: usize, weight: f64) -> Self {
        Edge { i, j, weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Neighbor {
    pub point: usize,
    pub weight: f64,
    pub edge: usize,
}

/// Undirected weighted similarity graph with `q` classes and clamped labels.
///
/// Immutable once built; clone-and-modify helpers return new graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGraph {
    n_points: usize,
    q: usize,
    labels: Vec<Option<usize>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
    free: Vec<usize>,
    total_weight: f64,
}

impl DataGraph {
    /// Builds a graph from an edge list and `(point, class)` clamps.
    pub fn new(n_points: usize, q: usize, edges: Vec<Edge>, labels: &[(usize, usize)]) -> Result<Self> {
        if q < 2 {
            return Err(Error::TooFewClasses(q));
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n_points];
        for (idx, e) in edges.iter().enumerate() {
            for &p in &[e.i, e.j] {
                if p >= n_points {
                    return Err(Error::PointOutOfRange { index: p, n_points });
                }
            }
            if e.i == e.j {
                return Err(Error::SelfEdge(e.i));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::BadWeight { i: e.i, j: e.j, weight: e.weight });
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::DuplicateEdge(e.i, e.j));
            }
            adjacency[e.i].push(Neighbor { point: e.j, weight: e.weight, edge: idx });
            adjacency[e.j].push(Neighbor { point: e.i, weight: e.weight, edge: idx });
        }
        let mut clamp = vec![None; n_points];
        for &(point, class) in labels {
            if point >= n_points {
                return Err(Error::PointOutOfRange { index: point, n_points });
            }
            if class >= q {
                return Err(Error::ClassOutOfRange { class, q });
            }
            if clamp[point].replace(class).is_some() {
                return Err(Error::DuplicateLabel(point));
            }
        }
        let free = (0..n_points).filter(|&p| clamp[p].is_none()).collect();
        let total_weight = edges.iter().map(|e| e.weight).sum();
        Ok(DataGraph { n_points, q, labels: clamp, edges, adjacency, free, total_weight })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, point: usize) -> Option<usize> {
        self.labels[point]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Labelled points as `(point, class)` pairs in point order.
    pub fn label_pairs(&self) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(p, c)| c.map(|c| (p, c)))
            .collect()
    }

    pub fn n_labelled(&self) -> usize {
        self.n_points - self.free.len()
    }

    /// Unlabelled points in ascending order.
    pub fn free_points(&self) -> &[usize] {
        &self.free
    }

    /// Sum of all edge weights, the energy of the all-disagree configuration.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn mean_weight(&self) -> f64 {
        if self.edges.is_empty() {
            0.0
        } else {
            self.total_weight / self.edges.len() as f64
        }
    }

    pub fn degree(&self, point: usize) -> usize {
        self.adjacency[point].len()
    }

    pub(crate) fn neighbors(&self, point: usize) -> &[Neighbor] {
        &self.adjacency[point]
    }

    /// Neighbors of `point` as `(neighbor, weight)` pairs.
    pub fn neighbor_weights(&self, point: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency[point].iter().map(|n| (n.point, n.weight))
    }

    pub fn has_integer_weights(&self) -> bool {
        self.edges.iter().all(|e| crate::math::floor(e.weight) == e.weight)
    }

    /// Same edges with a different class count and clamp set.
    pub fn with_labels(&self, q: usize, labels: &[(usize, usize)]) -> Result<Self> {
        DataGraph::new(self.n_points, q, self.edges.clone(), labels)
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self.edges.iter().map(|e| Edge::new(e.i, e.j, e.weight * factor)).collect();
        DataGraph::new(self.n_points, self.q, edges, &self.label_pairs())
    }

    /// Weights rescaled so that the mean edge weight is 1. Graphs without
    /// edges are returned unchanged.
    pub fn mean_normalized(&self) -> Result<Self> {
        let mean = self.mean_weight();
        if mean > 0.0 {
            self.scaled(1.0 / mean)
        } else {
            Ok(self.clone())
        }
    }

    /// Connected component id per point, numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut sets = DisjointSets::new(self.n_points);
        for e in &self.edges {
            sets.union(e.i, e.j);
        }
        sets.dense_labels()
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Potts energy: total weight of edges whose endpoints disagree.
    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        self.check(config)?;
        Ok(self.energy_of(&config.states))
    }

    pub(crate) fn energy_of(&self, states: &[usize]) -> f64 {
        self.edges
            .iter()
            .filter(|e| states[e.i] != states[e.j])
            .map(|e| e.weight)
            .sum()
    }

    /// Energy change when free point `point` moves to `new_state`.
    pub fn delta_energy(&self, config: &SpinConfiguration, point: usize, new_state: usize) -> Result<f64> {
        if point >= self.n_points {
            return Err(Error::PointOutOfRange { index: point, n_points: self.n_points });
        }
        if self.labels[point].is_some() {
            return Err(Error::LabelledFlip(point));
        }
        if new_state >= self.q {
            return Err(Error::ClassOutOfRange { class: new_state, q: self.q });
        }
        if config.states.len() != self.n_points {
            return Err(Error::LengthMismatch { expected: self.n_points, got: config.states.len() });
        }
        Ok(self.delta_of(&config.states, point, new_state))
    }

    #[inline]
    pub(crate) fn delta_of(&self, states: &[usize], point: usize, new_state: usize) -> f64 {
        let old = states[point];
        if old == new_state {
            return 0.0;
        }
        let mut delta = 0.0;
        for n in &self.adjacency[point] {
            let s = states[n.point];
            if s == old {
                delta += n.weight;
            } else if s == new_state {
                delta -= n.weight;
            }
        }
        delta
    }

    fn check(&self, config: &SpinConfiguration) -> Result<()> {
        if config.states.len() != self.n_points {
            return Err(Error::LengthMismatch { expected: self.n_points, got: config.states.len() });
        }
        for (point, &state) in config.states.iter().enumerate() {
            if state >= self.q {
                return Err(Error::ClassOutOfRange { class: state, q: self.q });
            }
            if let Some(clamp) = self.labels[point] {
                if clamp != state {
                    return Err(Error::ClampViolated { point, clamp, state });
                }
            }
        }
        Ok(())
    }
}

/// One classification of every point. Labelled points hold their clamp.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    states: Vec<usize>,
}

impl SpinConfiguration {
    /// Wraps `states` after checking length, range and clamps against `graph`.
    pub fn new(graph: &DataGraph, states: Vec<usize>) -> Result<Self> {
        let config = SpinConfiguration { states };
        graph.check(&config)?;
        Ok(config)
    }

    pub(crate) fn from_states_unchecked(states: Vec<usize>) -> Self {
        SpinConfiguration { states }
    }

    /// Clamped points take their label; free points are uniform over `0..q`.
    pub fn random(graph: &DataGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(graph, &mut rng)
    }

    pub(crate) fn random_with<R: Rng>(graph: &DataGraph, rng: &mut R) -> Self {
        let states = (0..graph.n_points())
            .map(|p| match graph.label(p) {
                Some(c) => c,
                None => rng.random_range(0..graph.q()),
            })
            .collect();
        SpinConfiguration { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn state(&self, point: usize) -> usize {
        self.states[point]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Moves a free point to `new_state`.
    pub fn flip(&mut self, graph: &DataGraph, point: usize, new_state: usize) -> Result<()> {
        graph.delta_energy(self, point, new_state)?;
        self.states[point] = new_state;
        Ok(())
    }

    pub fn into_states(self) -> Vec<usize> {
        self.states
    }
}

/// Uniform energy bins: bin `b` covers `[origin + b*width, origin + (b+1)*width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBinning {
    width: f64,
    origin: f64,
    n_bins: usize,
}

/// Bin count used for graphs with non-integer weights.
pub const CONTINUOUS_BIN_COUNT: f64 = 200.0;

impl EnergyBinning {
    /// Bins covering `[origin, max_energy]`.
    pub fn new(width: f64, origin: f64, max_energy: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || !origin.is_finite() || !(max_energy >= origin) {
            return Err(Error::InvalidArgument(alloc::format!(
                "binning width={width} origin={origin} max={max_energy}"
            )));
        }
        let n_bins = math::floor((max_energy - origin) / width) as usize + 1;
        Ok(EnergyBinning { width, origin, n_bins })
    }

    /// Exactly `n_bins` bins from `origin`.
    pub fn with_bins(width: f64, origin: f64, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidArgument("binning needs at least one bin".into()));
        }
        let mut b = EnergyBinning::new(width, origin, origin)?;
        b.n_bins = n_bins;
        Ok(b)
    }

    /// Width 1 for integer weights, otherwise `total_weight / 200`. Bins are
    /// centred on multiples of the width so integer spectra never straddle an
    /// edge.
    pub fn for_graph(graph: &DataGraph) -> Self {
        let total = graph.total_weight();
        let width = if graph.has_integer_weights() || total == 0.0 {
            1.0
        } else {
            total / CONTINUOUS_BIN_COUNT
        };
        EnergyBinning::new(width, -0.5 * width, total.max(0.0)).expect("valid default binning")
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin of `energy`, `None` below the origin or past the last bin.
    #[inline]
    pub fn bin(&self, energy: f64) -> Option<usize> {
        let x = (energy - self.origin) / self.width;
        if x < 0.0 {
            return None;
        }
        let b = math::floor(x) as usize;
        (b < self.n_bins).then_some(b)
    }

    pub fn lower_edge(&self, bin: usize) -> f64 {
        self.origin + bin as f64 * self.width
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.origin + (bin as f64 + 0.5) * self.width
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Dense component ids in order of each component's smallest member.
    pub fn dense_labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut id_of_root = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for p in 0..n {
            let r = self.find(p);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            out[p] = id_of_root[r];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, pairs: &[(usize, usize)], q: usize, labels: &[(usize, usize)]) -> DataGraph {
        let edges = pairs.iter().map(|&(i, j)| Edge::new(i, j, 1.0)).collect();
        DataGraph::new(n, q, edges, labels).unwrap()
    }

    fn config(g: &DataGraph, states: &[usize]) -> SpinConfiguration {
        SpinConfiguration::new(g, states.to_vec()).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = unit(2, &[(0, 1)], 2, &[]);
        assert_eq!(g.energy(&config(&g, &[0, 0])).unwrap(), 0.0);
        assert_eq!(g.energy(&config(&g, &[0, 1])).unwrap(), 1.0);
        let tri = unit(3, &[(0, 1), (1, 2), (0, 2)], 2, &[]);
        assert_eq!(tri.energy(&config(&tri, &[0, 0, 1])).unwrap(), 2.0);
    }

    #[test]
    fn energy_rejects_clamp_violation() {
        let g = unit(2, &[(0, 1)], 2, &[(0, 1)]);
        let bad = SpinConfiguration::from_states_unchecked(alloc::vec![0, 0]);
        assert!(matches!(g.energy(&bad), Err(Error::ClampViolated { point: 0, .. })));
        assert!(SpinConfiguration::new(&g, alloc::vec![0, 0]).is_err());
    }

    #[test]
    fn delta_energy_examples() {
        let chain = unit(3, &[(0, 1), (1, 2)], 2, &[]);
        assert_eq!(chain.delta_energy(&config(&chain, &[0, 0, 0]), 1, 1).unwrap(), 2.0);
        assert_eq!(chain.delta_energy(&config(&chain, &[0, 1, 0]), 1, 0).unwrap(), -2.0);
        // star: center 0 with leaves in states (1,1,2), center in state 1
        let star = unit(4, &[(0, 1), (0, 2), (0, 3)], 2, &[]);
        let c = config(&star, &[0, 0, 0, 1]);
        let before = star.energy(&c).unwrap();
        let mut after = c.clone();
        after.flip(&star, 0, 1).unwrap();
        let direct = star.energy(&after).unwrap() - before;
        assert_eq!(direct, 1.0);
        assert_eq!(star.delta_energy(&c, 0, 1).unwrap(), direct);
    }

    #[test]
    fn delta_energy_rejects_labelled() {
        let g = unit(2, &[(0, 1)], 2, &[(0, 0)]);
        let c = config(&g, &[0, 1]);
        assert_eq!(g.delta_energy(&c, 0, 1), Err(Error::LabelledFlip(0)));
    }

    #[test]
    fn graph_validation() {
        assert!(matches!(DataGraph::new(2, 1, alloc::vec![], &[]), Err(Error::TooFewClasses(1))));
        assert!(matches!(
            DataGraph::new(2, 2, alloc::vec![Edge::new(0, 0, 1.0)], &[]),
            Err(Error::SelfEdge(0))
        ));
        assert!(matches!(
            DataGraph::new(2, 2, alloc::vec![Edge::new(0, 1, 1.0), Edge::new(1, 0, 2.0)], &[]),
            Err(Error::DuplicateEdge(1, 0))
        ));
        assert!(DataGraph::new(2, 2, alloc::vec![Edge::new(0, 1, 0.0)], &[]).is_err());
        assert!(DataGraph::new(2, 2, alloc::vec![Edge::new(0, 2, 1.0)], &[]).is_err());
        assert!(DataGraph::new(2, 2, alloc::vec![], &[(0, 2)]).is_err());
        assert!(DataGraph::new(2, 2, alloc::vec![], &[(0, 1), (0, 1)]).is_err());
        // fully labelled graphs are allowed
        assert!(DataGraph::new(2, 2, alloc::vec![Edge::new(0, 1, 1.0)], &[(0, 0), (1, 1)]).is_ok());
    }

    #[test]
    fn random_configuration_contract() {
        let all = unit(3, &[(0, 1), (1, 2)], 3, &[(0, 2), (1, 0), (2, 1)]);
        assert_eq!(SpinConfiguration::random(&all, 9).states(), &[2, 0, 1]);

        let big = unit(1000, &[], 2, &[]);
        for seed in 0..5 {
            let c = SpinConfiguration::random(&big, seed);
            let ones = c.states().iter().filter(|&&s| s == 1).count() as f64 / 1000.0;
            assert!((0.44..=0.56).contains(&ones), "seed {seed}: {ones}");
        }
        assert_eq!(SpinConfiguration::random(&big, 3), SpinConfiguration::random(&big, 3));
    }

    #[test]
    fn binning_defaults() {
        let g = unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], 2, &[]);
        let b = EnergyBinning::for_graph(&g);
        assert_eq!(b.width(), 1.0);
        assert_eq!(b.n_bins(), 5);
        assert_eq!(b.bin(0.0), Some(0));
        assert_eq!(b.bin(1.999_999_999), Some(2));
        assert_eq!(b.bin(4.0), Some(4));
        assert_eq!(b.center(2), 2.0);

        let w = DataGraph::new(3, 2, alloc::vec![Edge::new(0, 1, 0.5), Edge::new(1, 2, 1.5)], &[]).unwrap();
        let b = EnergyBinning::for_graph(&w);
        assert!((b.width() - 2.0 / 200.0).abs() < 1e-15);
        assert_eq!(b.bin(2.0), Some(b.n_bins() - 1));
    }

    #[test]
    fn components_and_normalization() {
        let g = DataGraph::new(5, 2, alloc::vec![Edge::new(0, 1, 2.0), Edge::new(3, 4, 4.0)], &[]).unwrap();
        assert_eq!(g.components(), alloc::vec![0, 0, 1, 2, 2]);
        assert_eq!(g.component_count(), 3);
        let n = g.mean_normalized().unwrap();
        assert!((n.mean_weight() - 1.0).abs() < 1e-15);
    }

    fn arb_instance() -> impl Strategy<Value = (DataGraph, Vec<usize>)> {
        (3usize..8, 2usize..4).prop_flat_map(|(n, q)| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let np = pairs.len();
            (
                Just(n),
                Just(q),
                Just(pairs),
                proptest::collection::vec(proptest::option::weighted(0.6, 0.1f64..3.0), np),
                proptest::collection::vec(0..q, n),
                proptest::collection::vec(proptest::bool::weighted(0.3), n),
            )
                .prop_map(|(n, q, pairs, weights, states, clamped)| {
                    let edges = pairs
                        .iter()
                        .zip(&weights)
                        .filter_map(|(&(i, j), w)| w.map(|w| Edge::new(i, j, w)))
                        .collect();
                    let labels: Vec<(usize, usize)> =
                        (0..n).filter(|&p| clamped[p]).map(|p| (p, states[p])).collect();
                    (DataGraph::new(n, q, edges, &labels).unwrap(), states)
                })
        })
    }

    proptest! {
        #[test]
        fn flip_matches_delta((g, states) in arb_instance(), pick in 0usize..64, shift in 1usize..4) {
            let c = SpinConfiguration::new(&g, states).unwrap();
            let e0 = g.energy(&c).unwrap();
            prop_assert!(e0 >= 0.0);
            if let Some(&p) = g.free_points().get(pick % g.free_points().len().max(1)) {
                let s = (c.state(p) + shift) % g.q();
                let d = g.delta_energy(&c, p, s).unwrap();
                let mut after = c.clone();
                after.flip(&g, p, s).unwrap();
                let e1 = g.energy(&after).unwrap();
                prop_assert!((e1 - (e0 + d)).abs() <= 1e-9 * g.total_weight().max(1.0));
            }
        }

        #[test]
        fn energy_invariant_under_state_permutation((g, states) in arb_instance(), rot in 1usize..4) {
            let q = g.q();
            let permuted: Vec<usize> = states.iter().map(|&s| (s + rot) % q).collect();
            let labels: Vec<(usize, usize)> =
                g.label_pairs().into_iter().map(|(p, c)| (p, (c + rot) % q)).collect();
            let g2 = g.with_labels(q, &labels).unwrap();
            let all_agree = g.edges().iter().all(|e| states[e.i] == states[e.j]);
            let e1 = g.energy(&SpinConfiguration::new(&g, states).unwrap()).unwrap();
            let e2 = g2.energy(&SpinConfiguration::new(&g2, permuted).unwrap()).unwrap();
            prop_assert!((e1 - e2).abs() < 1e-12);
            prop_assert_eq!(e1 == 0.0, all_agree);
        }
    }
}
