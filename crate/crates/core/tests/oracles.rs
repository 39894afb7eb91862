//! Zero-temperature solvers and the classification rules, checked against
//! exhaustive enumeration.

use mcssl_core::classify::{classify, unsupervised_cluster, MarginalTable, Outcome};
use mcssl_core::exact::{enumerate, ground_states, EnumerationLimit};
use mcssl_core::mincut::{alpha_expansion, mincut_q2, nearest_label_init};
use mcssl_core::{DataGraph, Edge};
use proptest::prelude::*;

/// Random connected graphs with labels from every class.
fn arb_graph(q: usize, max_free: usize) -> impl Strategy<Value = DataGraph> {
    (2..=max_free, proptest::collection::vec((0usize..1000, 0usize..1000, 0.25f64..2.0), 24), any::<bool>()).prop_map(
        move |(free, raw, unit)| {
            let n = free + q;
            let mut edges = Vec::new();
            for j in 1..n {
                let (a, _, w) = raw[j % raw.len()];
                edges.push(Edge::new(a % j, j, if unit { 1.0 } else { w }));
            }
            for &(a, b, w) in raw.iter().take(n / 2) {
                let (i, j) = (a % n, b % n);
                if i != j && !edges.iter().any(|e| (e.i.min(e.j), e.i.max(e.j)) == (i.min(j), i.max(j))) {
                    edges.push(Edge::new(i, j, if unit { 1.0 } else { w }));
                }
            }
            let labels: Vec<(usize, usize)> = (0..q).map(|k| (free + k, k)).collect();
            DataGraph::new(n, q, edges, &labels).unwrap()
        },
    )
}

fn table_of(g: &DataGraph, t: f64) -> MarginalTable {
    let exact = enumerate(g, t, EnumerationLimit::default()).unwrap();
    MarginalTable::new(t, exact.marginals, exact.edge_agreement)
}

fn cliques(k: usize, bridge: Option<f64>, labels: &[(usize, usize)]) -> DataGraph {
    let mut edges = Vec::new();
    for base in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push(Edge::new(base + i, base + j, 1.0));
            }
        }
    }
    if let Some(w) = bridge {
        edges.push(Edge::new(k - 1, k, w));
    }
    DataGraph::new(2 * k, 2, edges, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mincut_reaches_ground_energy(g in arb_graph(2, 10)) {
        let cut = mincut_q2(&g).unwrap();
        let (ground, _) = ground_states(&g, EnumerationLimit::default()).unwrap();
        prop_assert!((cut.energy - ground).abs() <= 1e-9 * g.total_weight());
        prop_assert!((g.energy(&cut.config).unwrap() - cut.energy).abs() <= 1e-9 * g.total_weight());
        prop_assert!((cut.flow - cut.energy).abs() <= 1e-9 * g.total_weight());
    }

    #[test]
    fn binary_expansion_is_exact(g in arb_graph(2, 9)) {
        let exp = alpha_expansion(&g, &nearest_label_init(&g), 20).unwrap();
        let cut = mincut_q2(&g).unwrap();
        prop_assert!((exp.energy - cut.energy).abs() <= 1e-9 * g.total_weight());
    }

    #[test]
    fn expansion_stays_within_twice_ground(g in arb_graph(3, 7)) {
        let exp = alpha_expansion(&g, &nearest_label_init(&g), 20).unwrap();
        let (ground, _) = ground_states(&g, EnumerationLimit::default()).unwrap();
        prop_assert!(exp.energy >= ground - 1e-9);
        prop_assert!(exp.energy <= 2.0 * ground + 1e-9);
        prop_assert!((g.energy(&exp.config).unwrap() - exp.energy).abs() <= 1e-9 * g.total_weight().max(1.0));
    }
}

#[test]
fn weakly_tied_clique_becomes_new_class() {
    let g = cliques(4, Some(0.2), &[(0, 0), (1, 0)]);
    let table = table_of(&g, 1.0);
    let intra = table.edge_same[..12].iter().copied().fold(1.0, f64::min);
    assert!(intra > 0.75 && table.edge_same[12] < 0.75, "intra {intra} inter {}", table.edge_same[12]);
    let c = classify(&table, &g, 0.1);
    for p in 4..8 {
        assert!(matches!(c.outcomes[p], Outcome::NewClass { size: 4, anchor: 4, .. }), "{:?}", c.outcomes[p]);
    }
    for p in 0..4 {
        assert_eq!(c.outcomes[p].class(), Some(0));
    }
}

#[test]
fn unsupervised_clusters_follow_correlations() {
    let g = cliques(4, None, &[]);
    for t in [0.5, 1.0] {
        assert_eq!(unsupervised_cluster(&table_of(&g, t), &g).unwrap().new_class_count, 2);
    }
    let hot = unsupervised_cluster(&table_of(&g, 1e6), &g).unwrap();
    assert_eq!(hot.new_class_count, 8);
    let joined = cliques(4, Some(1.0), &[]);
    assert_eq!(unsupervised_cluster(&table_of(&joined, 0.3), &joined).unwrap().new_class_count, 1);
}
