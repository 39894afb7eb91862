use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{DataGraph, DisjointSets};
use crate::{Error, Result};

use super::MarginalTable;

/// Classification of one point at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Assigned to `class`. `gap` is the point's own `p1 - p2` (1 for labels).
    Assigned { class: usize, gap: f64 },
    /// Its correlation component holds anchors of several classes.
    Confused { classes: Vec<usize> },
    /// Its correlation component holds no anchor. `id` is dense per
    /// classification; `anchor` is the smallest member and `size` the
    /// component size, which together identify the component across
    /// temperatures.
    NewClass { id: usize, anchor: usize, size: usize },
}

impl Outcome {
    /// Same classification, ignoring the confidence gap and the per-table
    /// numbering of new classes.
    pub fn same_as(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Assigned { class: a, .. }, Outcome::Assigned { class: b, .. }) => a == b,
            (Outcome::Confused { classes: a }, Outcome::Confused { classes: b }) => a == b,
            (Outcome::NewClass { anchor: a, size: sa, .. }, Outcome::NewClass { anchor: b, size: sb, .. }) => {
                a == b && sa == sb
            }
            _ => false,
        }
    }

    pub fn class(&self) -> Option<usize> {
        match self {
            Outcome::Assigned { class, .. } => Some(*class),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Assigned { .. } => "assigned",
            Outcome::Confused { .. } => "confused",
            Outcome::NewClass { .. } => "new",
        }
    }
}

/// Outcomes for every point at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub temperature: f64,
    pub outcomes: Vec<Outcome>,
    /// Points classified directly by the confidence gap (labels included).
    pub confident: Vec<bool>,
    pub new_class_count: usize,
}

impl Classification {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Members of each new class, indexed by new-class id.
    pub fn new_class_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.new_class_count];
        for (p, o) in self.outcomes.iter().enumerate() {
            if let Outcome::NewClass { id, .. } = o {
                out[*id].push(p);
            }
        }
        out
    }

    /// Points per assigned class; `q` entries.
    pub fn class_counts(&self, q: usize) -> Vec<usize> {
        let mut counts = vec![0; q];
        for o in &self.outcomes {
            if let Some(c) = o.class() {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Edges whose correlation is below this are cut: halfway between the random
/// level `1/q` and perfect correlation.
pub fn correlation_threshold(q: usize) -> f64 {
    0.5 * (1.0 + 1.0 / q as f64)
}

fn components(table: &MarginalTable, graph: &DataGraph) -> Vec<usize> {
    let threshold = correlation_threshold(graph.q());
    let mut sets = DisjointSets::new(graph.n_points());
    for (e, &c) in graph.edges().iter().zip(&table.edge_same) {
        if c >= threshold {
            sets.union(e.i, e.j);
        }
    }
    sets.dense_labels()
}

/// Two-step classification.
///
/// Points whose top-two probability gap exceeds `tau` (and all labelled
/// points) are assigned directly. Every other point takes the class of the
/// confident points in its correlation component: a single class assigns
/// it, several mark it confused, none mark the whole component as a new
/// class.
pub fn classify(table: &MarginalTable, graph: &DataGraph, tau: f64) -> Classification {
    let n = graph.n_points();
    let mut outcomes: Vec<Option<Outcome>> = vec![None; n];
    let mut confident = vec![false; n];
    for p in 0..n {
        if let Some(c) = graph.label(p) {
            outcomes[p] = Some(Outcome::Assigned { class: c, gap: 1.0 });
            confident[p] = true;
            continue;
        }
        let (class, p1, p2) = table.top_two(p);
        if p1 - p2 > tau {
            outcomes[p] = Some(Outcome::Assigned { class, gap: p1 - p2 });
            confident[p] = true;
        }
    }
    let comp = components(table, graph);
    finish(table, graph, comp, outcomes, confident)
}

/// Correlation clustering without labels: every point is unconfident and
/// each component becomes its own new class.
pub fn unsupervised_cluster(table: &MarginalTable, graph: &DataGraph) -> Result<Classification> {
    if graph.n_labelled() > 0 {
        return Err(Error::InvalidArgument("unsupervised clustering needs a graph without labels".into()));
    }
    let n = graph.n_points();
    let comp = components(table, graph);
    Ok(finish(table, graph, comp, vec![None; n], vec![false; n]))
}

fn finish(
    table: &MarginalTable,
    graph: &DataGraph,
    comp: Vec<usize>,
    mut outcomes: Vec<Option<Outcome>>,
    confident: Vec<bool>,
) -> Classification {
    let n = graph.n_points();
    let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut anchors = vec![BTreeSet::new(); n_comp];
    let mut size = vec![0usize; n_comp];
    let mut smallest = vec![usize::MAX; n_comp];
    for p in 0..n {
        let c = comp[p];
        size[c] += 1;
        smallest[c] = smallest[c].min(p);
        if confident[p] {
            if let Some(class) = outcomes[p].as_ref().and_then(Outcome::class) {
                anchors[c].insert(class);
            }
        }
    }
    let mut new_id = vec![usize::MAX; n_comp];
    let mut new_class_count = 0;
    for p in 0..n {
        if outcomes[p].is_some() {
            continue;
        }
        let c = comp[p];
        let outcome = match anchors[c].len() {
            0 => {
                if new_id[c] == usize::MAX {
                    new_id[c] = new_class_count;
                    new_class_count += 1;
                }
                Outcome::NewClass { id: new_id[c], anchor: smallest[c], size: size[c] }
            }
            1 => {
                let (_, p1, p2) = table.top_two(p);
                Outcome::Assigned { class: *anchors[c].iter().next().unwrap(), gap: p1 - p2 }
            }
            _ => Outcome::Confused { classes: anchors[c].iter().copied().collect() },
        };
        outcomes[p] = Some(outcome);
    }
    Classification {
        temperature: table.temperature,
        outcomes: outcomes.into_iter().map(|o| o.expect("every point classified")).collect(),
        confident,
        new_class_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn graph(n: usize, pairs: &[(usize, usize)], q: usize, labels: &[(usize, usize)]) -> DataGraph {
        let edges = pairs.iter().map(|&(i, j)| Edge::new(i, j, 1.0)).collect();
        DataGraph::new(n, q, edges, labels).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(correlation_threshold(2), 0.75);
        assert!((correlation_threshold(3) - 0.666_666_666_666_666_6).abs() < 1e-15);
    }

    #[test]
    fn gap_rule() {
        let g = graph(1, &[], 2, &[]);
        let t = MarginalTable::new(1.0, alloc::vec![alloc::vec![0.9, 0.1]], alloc::vec![]);
        let c = classify(&t, &g, 0.1);
        match &c.outcomes[0] {
            Outcome::Assigned { class: 0, gap } => assert!((gap - 0.8).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(c.confident[0]);
    }

    #[test]
    fn exact_tie_is_unconfident() {
        let g = graph(1, &[], 2, &[]);
        let t = MarginalTable::new(1.0, alloc::vec![alloc::vec![0.5, 0.5]], alloc::vec![]);
        let c = classify(&t, &g, 0.1);
        assert!(!c.confident[0]);
        assert!(matches!(c.outcomes[0], Outcome::NewClass { id: 0, anchor: 0, size: 1 }));
    }

    #[test]
    fn component_rules() {
        // 0(label a) - 1 - 2 - 3(label b), 4 - 5 isolated pair
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (4, 5)], 2, &[(0, 0), (3, 1)]);
        let u = alloc::vec![0.5, 0.5];
        let t = MarginalTable::new(
            1.0,
            alloc::vec![alloc::vec![1.0, 0.0], u.clone(), u.clone(), alloc::vec![0.0, 1.0], u.clone(), u],
            alloc::vec![0.9, 0.5, 0.9, 0.95],
        );
        let c = classify(&t, &g, 0.1);
        assert!(matches!(c.outcomes[1], Outcome::Assigned { class: 0, .. }));
        assert!(matches!(c.outcomes[2], Outcome::Assigned { class: 1, .. }));
        assert!(matches!(c.outcomes[4], Outcome::NewClass { id: 0, anchor: 4, size: 2 }));
        assert_eq!(c.outcomes[4], c.outcomes[5]);

        let joined = MarginalTable { edge_same: alloc::vec![0.9, 0.9, 0.9, 0.1], ..t };
        let c = classify(&joined, &g, 0.1);
        assert_eq!(c.outcomes[1], Outcome::Confused { classes: alloc::vec![0, 1] });
        assert!(matches!(c.outcomes[4], Outcome::NewClass { size: 1, .. }));
        assert!(matches!(c.outcomes[5], Outcome::NewClass { size: 1, .. }));
        assert_eq!(c.new_class_count, 2);
    }

    #[test]
    fn unsupervised_paths() {
        let g = graph(4, &[(0, 1), (2, 3)], 2, &[]);
        let u = alloc::vec![0.5, 0.5];
        let t = MarginalTable::new(1.0, alloc::vec![u.clone(); 4], alloc::vec![0.99, 0.99]);
        let c = unsupervised_cluster(&t, &g).unwrap();
        assert_eq!(c.new_class_count, 2);
        let hot = MarginalTable { edge_same: alloc::vec![0.5, 0.5], ..t };
        assert_eq!(unsupervised_cluster(&hot, &g).unwrap().new_class_count, 4);
        let labelled = graph(2, &[(0, 1)], 2, &[(0, 0)]);
        assert!(unsupervised_cluster(&MarginalTable::new(1.0, alloc::vec![u.clone(), u], alloc::vec![1.0]), &labelled).is_err());
    }
}
