#![allow(dead_code)]

use mcssl_core::build::{filament_toy, three_class_toy, FilamentParams, ThreeClassParams, ToyInstance};
use mcssl_core::{DataGraph, Edge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected random graph with `free` unclamped points, a few clamps and
/// either unit weights or weights uniform in [0.5, 1.5].
pub fn random_instance(seed: u64, free: usize, q: usize, unit: bool) -> DataGraph {
    random_clamped(seed, free, q, unit, false)
}

/// Like [`random_instance`], with the first `q` clamps covering every class.
pub fn random_covering_instance(seed: u64, free: usize, q: usize, unit: bool) -> DataGraph {
    random_clamped(seed, free, q, unit, true)
}

fn random_clamped(seed: u64, free: usize, q: usize, unit: bool, cover: bool) -> DataGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_labels = rng.random_range(if cover { q } else { 1 }..=3.max(q));
    let n = free + n_labels;
    let weight = |rng: &mut ChaCha8Rng| if unit { 1.0 } else { rng.random_range(0.5..1.5) };
    let mut edges = Vec::new();
    for j in 1..n {
        let i = rng.random_range(0..j);
        edges.push(Edge::new(i, j, weight(&mut rng)));
    }
    for _ in 0..n / 2 {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && !edges.iter().any(|e: &Edge| (e.i.min(e.j), e.i.max(e.j)) == (i.min(j), i.max(j))) {
            edges.push(Edge::new(i, j, weight(&mut rng)));
        }
    }
    let mut points: Vec<usize> = (0..n).collect();
    let mut labels = Vec::new();
    for l in 0..n_labels {
        let p = points.swap_remove(rng.random_range(0..points.len()));
        let class = if cover && l < q { l } else { rng.random_range(0..q) };
        labels.push((p, class));
    }
    DataGraph::new(n, q, edges, &labels).expect("valid random instance")
}

/// Unit-weight `w x h` grid without labels.
pub fn unit_grid(w: usize, h: usize, q: usize) -> DataGraph {
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                edges.push(Edge::new(p, p + 1, 1.0));
            }
            if y + 1 < h {
                edges.push(Edge::new(p, p + w, 1.0));
            }
        }
    }
    DataGraph::new(w * h, q, edges, &[]).expect("valid grid")
}

/// Two unit-weight cliques of `k` points with no edge between them.
pub fn two_cliques(k: usize, q: usize) -> DataGraph {
    let mut edges = Vec::new();
    for base in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push(Edge::new(base + i, base + j, 1.0));
            }
        }
    }
    DataGraph::new(2 * k, q, edges, &[]).expect("valid cliques")
}

pub const FILAMENT: FilamentParams = FilamentParams { block_w: 12, block_h: 10, filament_len: 6, filament_width: 4 };

/// Filament toy used by the qualitative experiments: 12x10 blocks joined by
/// a 6-long, 4-wide bridge (264 points).
pub fn filament() -> ToyInstance {
    filament_toy(FILAMENT).expect("valid toy")
}

/// Two labels per class: interior points of the left block, and two adjacent
/// corner pixels of the right block, which are cheap to cut off.
pub fn filament_corner_labels(toy: &ToyInstance) -> Vec<(usize, usize)> {
    let width = toy.pixels.iter().map(|p| p.0).max().unwrap() + 1;
    let at = |x: usize, y: usize| toy.pixels.iter().position(|&p| p == (x, y)).expect("pixel in mask");
    let (bw, bh) = (FILAMENT.block_w, FILAMENT.block_h);
    let mut labels =
        vec![(at(bw / 3, bh / 3), 0), (at(2 * bw / 3, 2 * bh / 3), 0), (at(width - 2, 0), 1), (at(width - 1, 0), 1)];
    labels.sort_unstable();
    labels
}

/// Three 8x8 blocks joined by 1-pixel bridges of length 3.
pub fn three_clusters() -> ToyInstance {
    three_class_toy(ThreeClassParams { block_w: 8, block_h: 8, bridge_len: 3, bridge_width: 1 }).expect("valid toy")
}
