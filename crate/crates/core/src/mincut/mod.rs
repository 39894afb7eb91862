//! Zero-temperature baselines: exact two-class min-cut and alpha-expansion,
//! plus misclassification counting.

mod flow;

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

pub use flow::FlowNetwork;

pub use crate::build::GroundTruth;
use crate::classify::{Classification, Outcome};
use crate::model::{DataGraph, SpinConfiguration};
use crate::{Error, Result};

/// Capacity standing in for an infinite terminal link.
pub fn terminal_capacity(graph: &DataGraph) -> f64 {
    1.0 + graph.total_weight()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutSolution {
    pub config: SpinConfiguration,
    pub energy: f64,
    pub flow: f64,
}

/// Exact minimum-energy configuration for `q = 2`.
///
/// Class-0 labels hang off the source, class-1 labels off the sink; points
/// reachable from the source in the final residual network take class 0.
pub fn mincut_q2(graph: &DataGraph) -> Result<CutSolution> {
    if graph.q() != 2 {
        return Err(Error::InvalidArgument(alloc::format!("two-class min-cut needs q = 2, got {}", graph.q())));
    }
    for class in 0..2 {
        if !graph.labels().iter().any(|l| *l == Some(class)) {
            return Err(Error::MissingClassLabels(class));
        }
    }
    let n = graph.n_points();
    let (s, t) = (n, n + 1);
    let big = terminal_capacity(graph);
    let mut net = FlowNetwork::new(n + 2, big);
    for (p, label) in graph.labels().iter().enumerate() {
        match label {
            Some(0) => net.add_arc(s, p, big),
            Some(_) => net.add_arc(p, t, big),
            None => {}
        }
    }
    for e in graph.edges() {
        net.add_arc(e.i, e.j, e.weight);
        net.add_arc(e.j, e.i, e.weight);
    }
    let flow = net.max_flow(s, t);
    let side = net.source_side(s);
    let states = (0..n).map(|p| if side[p] { 0 } else { 1 }).collect();
    let config = SpinConfiguration::new(graph, states)?;
    let energy = graph.energy(&config)?;
    debug_assert!((flow - energy).abs() <= 1e-9 * graph.total_weight().max(1.0), "flow {flow} != cut {energy}");
    Ok(CutSolution { config, energy, flow })
}

/// Free points take the class of the nearest labelled point in hop
/// distance (breadth-first from all labels in point order). Points with no
/// labelled point in their component take class 0.
pub fn nearest_label_init(graph: &DataGraph) -> SpinConfiguration {
    let n = graph.n_points();
    let mut state: Vec<Option<usize>> = graph.labels().to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&p| state[p].is_some()).collect();
    while let Some(v) = queue.pop_front() {
        for n in graph.neighbors(v) {
            if state[n.point].is_none() {
                state[n.point] = state[v];
                queue.push_back(n.point);
            }
        }
    }
    SpinConfiguration::from_states_unchecked(state.into_iter().map(|s| s.unwrap_or(0)).collect())
}

/// Alpha-expansion with moves in ascending class order. Each move solves a
/// binary keep-or-switch min-cut and is kept only if it lowers the energy;
/// stops after a full cycle without improvement or `max_cycles` cycles.
pub fn alpha_expansion(graph: &DataGraph, init: &SpinConfiguration, max_cycles: usize) -> Result<CutSolution> {
    let mut energy = graph.energy(init)?;
    let mut states = init.states().to_vec();
    let tol = 1e-12 * graph.total_weight().max(1.0);
    for _ in 0..max_cycles {
        let mut improved = false;
        for alpha in 0..graph.q() {
            let candidate = expansion_move(graph, &states, alpha);
            let e = graph.energy_of(&candidate);
            if e < energy - tol {
                states = candidate;
                energy = e;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let config = SpinConfiguration::new(graph, states)?;
    Ok(CutSolution { energy, flow: energy, config })
}

fn expansion_move(graph: &DataGraph, states: &[usize], alpha: usize) -> Vec<usize> {
    let n = graph.n_points();
    let (s, t) = (n, n + 1);
    let big = terminal_capacity(graph);
    // x = 1 (sink side) means "switch to alpha"; unary[p] is the cost of x_p = 1
    let mut unary = vec![0.0; n];
    let mut net = FlowNetwork::new(n + 2, big);
    for (p, label) in graph.labels().iter().enumerate() {
        if matches!(label, Some(c) if *c != alpha) {
            unary[p] += big;
        }
    }
    for e in graph.edges() {
        let (fi, fj, w) = (states[e.i], states[e.j], e.weight);
        let cost = |a: usize, b: usize| if a != b { w } else { 0.0 };
        let a = cost(fi, fj);
        let b = cost(fi, alpha);
        let c = cost(alpha, fj);
        let d = 0.0;
        unary[e.i] += c - a;
        unary[e.j] += d - c;
        let pair = b + c - a - d;
        if pair > 0.0 {
            net.add_arc(e.i, e.j, pair);
        }
    }
    for (p, &u) in unary.iter().enumerate() {
        if u > 0.0 {
            net.add_arc(s, p, u);
        } else if u < 0.0 {
            net.add_arc(p, t, -u);
        }
    }
    net.max_flow(s, t);
    let side = net.source_side(s);
    (0..n).map(|p| if side[p] { states[p] } else { alpha }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorReport {
    pub total: usize,
    /// Errors among points whose true class is `k`.
    pub per_class: Vec<usize>,
}

/// Misclassified points of a configuration.
pub fn error_count(config: &SpinConfiguration, truth: &GroundTruth) -> Result<ErrorReport> {
    if config.len() != truth.len() {
        return Err(Error::CoverageMismatch { expected: config.len(), got: truth.len() });
    }
    let mut per_class = vec![0; truth.n_classes()];
    for (p, &s) in config.states().iter().enumerate() {
        if s != truth.class(p) {
            per_class[truth.class(p)] += 1;
        }
    }
    Ok(ErrorReport { total: per_class.iter().sum(), per_class })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    /// Confused and new-class points are errors.
    #[default]
    Strict,
    /// A new class whose majority true class is absent from the labelled
    /// classes stands for that class.
    MatchNewClasses,
}

/// Misclassified points of an outcome set.
pub fn outcome_errors(
    outcomes: &Classification,
    truth: &GroundTruth,
    labelled_classes: &[usize],
    scoring: Scoring,
) -> Result<ErrorReport> {
    if outcomes.len() != truth.len() {
        return Err(Error::CoverageMismatch { expected: outcomes.len(), got: truth.len() });
    }
    let mut matched: BTreeMap<usize, usize> = BTreeMap::new();
    if scoring == Scoring::MatchNewClasses {
        for (id, members) in outcomes.new_class_members().iter().enumerate() {
            let mut votes = vec![0usize; truth.n_classes()];
            for &p in members {
                votes[truth.class(p)] += 1;
            }
            let best = (0..votes.len()).max_by_key(|&k| (votes[k], core::cmp::Reverse(k)));
            if let Some(best) = best.filter(|b| !labelled_classes.contains(b)) {
                matched.insert(id, best);
            }
        }
    }
    let mut per_class = vec![0; truth.n_classes()];
    for (p, o) in outcomes.outcomes.iter().enumerate() {
        let ok = match o {
            Outcome::Assigned { class, .. } => *class == truth.class(p),
            Outcome::Confused { .. } => false,
            Outcome::NewClass { id, .. } => matched.get(id) == Some(&truth.class(p)),
        };
        if !ok {
            per_class[truth.class(p)] += 1;
        }
    }
    Ok(ErrorReport { total: per_class.iter().sum(), per_class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ground_states, EnumerationLimit};
    use crate::model::Edge;

    fn graph(n: usize, edges: &[(usize, usize, f64)], q: usize, labels: &[(usize, usize)]) -> DataGraph {
        let edges = edges.iter().map(|&(i, j, w)| Edge::new(i, j, w)).collect();
        DataGraph::new(n, q, edges, labels).unwrap()
    }

    #[test]
    fn path_cut_examples() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)], 2, &[(0, 0), (2, 1)]);
        let cut = mincut_q2(&g).unwrap();
        assert_eq!(cut.energy, 1.0);
        assert_eq!(cut.flow, 1.0);
        let (ground, _) = ground_states(&g, EnumerationLimit::default()).unwrap();
        assert_eq!(cut.energy, ground);

        let weighted = graph(3, &[(0, 1, 2.0), (1, 2, 1.0)], 2, &[(0, 0), (2, 1)]);
        let cut = mincut_q2(&weighted).unwrap();
        assert_eq!(cut.config.state(1), 0);
        assert_eq!(cut.energy, 1.0);
    }

    #[test]
    fn uniform_zero_energy_when_unforced() {
        // every edge joins identically labelled points; 4-5 free pair hangs off class 1 only
        let g = graph(6, &[(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)], 2, &[(0, 0), (1, 0), (2, 1), (3, 1)]);
        let cut = mincut_q2(&g).unwrap();
        assert_eq!(cut.energy, 0.0);
        assert_eq!(cut.config.state(4), 1);
        assert_eq!(cut.config.state(5), 1);
    }

    #[test]
    fn mincut_requires_both_classes() {
        let g = graph(2, &[(0, 1, 1.0)], 2, &[(0, 0)]);
        assert_eq!(mincut_q2(&g), Err(Error::MissingClassLabels(1)));
        let g3 = graph(2, &[(0, 1, 1.0)], 3, &[(0, 0)]);
        assert!(mincut_q2(&g3).is_err());
    }

    #[test]
    fn expansion_matches_mincut_for_two_classes() {
        let g = graph(
            6,
            &[(0, 1, 1.0), (1, 2, 0.4), (2, 3, 2.0), (3, 4, 0.3), (4, 5, 1.0), (1, 4, 0.8), (0, 5, 0.2)],
            2,
            &[(0, 0), (5, 1)],
        );
        let init = nearest_label_init(&g);
        let expanded = alpha_expansion(&g, &init, 10).unwrap();
        let cut = mincut_q2(&g).unwrap();
        assert!((expanded.energy - cut.energy).abs() < 1e-12);
        assert!(expanded.energy <= g.energy(&init).unwrap());
    }

    #[test]
    fn three_corner_triangle() {
        // corners 0,1,2 labelled with distinct classes, centre 3 free
        let g = graph(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
            3,
            &[(0, 0), (1, 1), (2, 2)],
        );
        let init = SpinConfiguration::new(&g, alloc::vec![0, 1, 2, 0]).unwrap();
        let sol = alpha_expansion(&g, &init, 10).unwrap();
        let (ground, states) = ground_states(&g, EnumerationLimit::default()).unwrap();
        assert_eq!(ground, 5.0);
        assert_eq!(states.len(), 3);
        assert_eq!(sol.energy, ground);
    }

    #[test]
    fn nearest_label_by_hops() {
        let g = graph(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)], 3, &[(0, 2), (4, 1)]);
        let init = nearest_label_init(&g);
        assert_eq!(init.states(), &[2, 2, 2, 1, 1]);
    }

    #[test]
    fn error_counts() {
        let g = graph(3, &[], 2, &[]);
        let truth = GroundTruth::new(alloc::vec![0, 1, 1]).unwrap();
        let exact = SpinConfiguration::new(&g, alloc::vec![0, 1, 1]).unwrap();
        assert_eq!(error_count(&exact, &truth).unwrap().total, 0);
        let one = SpinConfiguration::new(&g, alloc::vec![0, 0, 1]).unwrap();
        assert_eq!(error_count(&one, &truth).unwrap(), ErrorReport { total: 1, per_class: alloc::vec![0, 1] });
        let short = GroundTruth::new(alloc::vec![0, 1]).unwrap();
        assert!(error_count(&exact, &short).is_err());
        assert!(GroundTruth::new(alloc::vec![0, 2]).is_err());
    }

    #[test]
    fn outcome_scoring() {
        let truth = GroundTruth::new(alloc::vec![0, 0, 1, 2, 2]).unwrap();
        let confused = Classification {
            temperature: 1.0,
            outcomes: alloc::vec![
                Outcome::Assigned { class: 0, gap: 1.0 },
                Outcome::Confused { classes: alloc::vec![0, 1] },
                Outcome::Confused { classes: alloc::vec![0, 1] },
                Outcome::NewClass { id: 0, anchor: 3, size: 2 },
                Outcome::NewClass { id: 0, anchor: 3, size: 2 },
            ],
            confident: alloc::vec![true, false, false, false, false],
            new_class_count: 1,
        };
        assert_eq!(outcome_errors(&confused, &truth, &[0, 1], Scoring::Strict).unwrap().total, 4);
        assert_eq!(outcome_errors(&confused, &truth, &[0, 1], Scoring::MatchNewClasses).unwrap().total, 2);
        // a new class matching a labelled class is not credited
        assert_eq!(outcome_errors(&confused, &truth, &[0, 1, 2], Scoring::MatchNewClasses).unwrap().total, 4);
    }
}
