//! Flat-histogram estimates reweighted to fixed temperatures, checked against
//! exact enumeration.

use mcssl_core::classify::{reweight, reweight_with, t_zero_table, ReweightMode};
use mcssl_core::exact::{enumerate, EnumerationLimit};
use mcssl_core::sampler::{estimate_dos, multicanonical_sample, DensityOfStates, MarginalAccumulator, SamplingParams, WangLandauParams};
use mcssl_core::{DataGraph, Edge, EnergyBinning};

fn unit(n: usize, pairs: &[(usize, usize)], q: usize, labels: &[(usize, usize)]) -> DataGraph {
    let edges = pairs.iter().map(|&(i, j)| Edge::new(i, j, 1.0)).collect();
    DataGraph::new(n, q, edges, labels).unwrap()
}

fn path4() -> DataGraph {
    unit(4, &[(0, 1), (1, 2), (2, 3)], 2, &[(0, 0), (3, 1)])
}

fn chain3() -> DataGraph {
    unit(3, &[(0, 1), (1, 2)], 2, &[(0, 0), (2, 1)])
}

fn sampled(g: &DataGraph, seed: u64, n_samples: u64) -> (DensityOfStates, MarginalAccumulator) {
    let binning = EnergyBinning::for_graph(g);
    let dos = estimate_dos(g, binning, &WangLandauParams { seed, ..WangLandauParams::default() }).unwrap();
    let acc = multicanonical_sample(g, &dos, &SamplingParams { n_samples, seed: seed + 1, ..SamplingParams::default() }).unwrap();
    (dos, acc)
}

#[test]
fn path_of_four_at_unit_temperature() {
    let g = path4();
    let (dos, acc) = sampled(&g, 3, 100_000);
    let expected = 2.0 / (3.0 + (-2.0f64).exp());
    for mode in [ReweightMode::Density, ReweightMode::SampleCorrected] {
        let table = reweight_with(&dos, &acc, 1.0, mode).unwrap();
        assert!((table.probs[1][0] - expected).abs() < 0.03, "{mode:?}: {}", table.probs[1][0]);
    }
    let exact = enumerate(&g, 1.0, EnumerationLimit::default()).unwrap();
    assert!((exact.marginals[1][0] - expected).abs() < 1e-12);
}

#[test]
fn hot_limit_is_uniform() {
    let g = unit(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)], 3, &[(0, 2)]);
    let (dos, acc) = sampled(&g, 5, 100_000);
    let table = reweight(&dos, &acc, 1e6).unwrap();
    for p in 1..5 {
        for k in 0..3 {
            assert!((table.probs[p][k] - 1.0 / 3.0).abs() < 0.03, "p{p} k{k}: {}", table.probs[p][k]);
        }
    }
}

#[test]
fn labelled_points_are_certain() {
    let g = path4();
    let (dos, acc) = sampled(&g, 7, 20_000);
    for t in [0.1, 1.0, 10.0] {
        let table = reweight(&dos, &acc, t).unwrap();
        assert_eq!(table.probs[0], vec![1.0, 0.0]);
        assert_eq!(table.probs[3], vec![0.0, 1.0]);
    }
}

#[test]
fn ground_table_of_degenerate_chain() {
    let g = chain3();
    let (dos, acc) = sampled(&g, 9, 20_000);
    let table = t_zero_table(&dos, &acc).unwrap();
    assert!((table.probs[1][0] - 0.5).abs() < 0.05, "{}", table.probs[1][0]);
    assert!(table.ground_dominated);
}

#[test]
fn unique_ground_state_is_certain() {
    // b is pulled twice as hard towards class 0
    let edges = vec![Edge::new(0, 1, 2.0), Edge::new(1, 2, 1.0)];
    let g = DataGraph::new(3, 2, edges, &[(0, 0), (2, 1)]).unwrap();
    let (dos, acc) = sampled(&g, 11, 20_000);
    let table = t_zero_table(&dos, &acc).unwrap();
    assert_eq!(table.probs[1], vec![1.0, 0.0]);
}

#[test]
fn random_weight_grid_matches_enumeration() {
    // 3x3 grid with one clamp per class and irregular weights
    let mut edges = Vec::new();
    let mut w = 0.55;
    for y in 0..3 {
        for x in 0..3 {
            let p = y * 3 + x;
            if x < 2 {
                edges.push(Edge::new(p, p + 1, w));
                w = 0.5 + (w * 7.3) % 1.0;
            }
            if y < 2 {
                edges.push(Edge::new(p, p + 3, w));
                w = 0.5 + (w * 7.3) % 1.0;
            }
        }
    }
    let g = DataGraph::new(9, 2, edges, &[(0, 0), (8, 1)]).unwrap();
    let (dos, acc) = sampled(&g, 13, 200_000);
    for t in [0.3, 0.7, 1.5] {
        let exact = enumerate(&g, t, EnumerationLimit::default()).unwrap();
        for mode in [ReweightMode::Density, ReweightMode::SampleCorrected] {
            let table = reweight_with(&dos, &acc, t, mode).unwrap();
            for p in 0..9 {
                let d = (table.probs[p][0] - exact.marginals[p][0]).abs();
                assert!(d < 0.03, "T={t} {mode:?} p{p}: {} vs {}", table.probs[p][0], exact.marginals[p][0]);
            }
            for (a, b) in table.edge_same.iter().zip(&exact.edge_agreement) {
                assert!((a - b).abs() < 0.03, "T={t} {mode:?} edge: {a} vs {b}");
            }
        }
    }
}

#[test]
fn reweighting_rejects_foreign_accumulator() {
    let g = path4();
    let (dos, _) = sampled(&g, 15, 1_000);
    let other = MarginalAccumulator::for_graph(&g, EnergyBinning::new(0.5, -0.25, 3.0).unwrap());
    assert!(reweight(&dos, &other, 1.0).is_err());
    let (_, acc) = sampled(&g, 17, 1_000);
    assert!(reweight(&dos, &acc, 0.0).is_err());
}
