use rustc_hash::FxHashMap;
use serde::Serialize;

use super::{Rep, TracedStructure};
use crate::equivalence::{equivalent, ClassId, ClassRegistry, EquivError};
use crate::kernelize::{block_width, prefix_marks, TableKey};
use crate::logic::Logic;
use crate::structure::is_embedding;
use crate::trees::{ClosureOp, NodeId, Surgery, Tree};

/// Two trees sharing a composition key but not a class.
#[derive(Debug, Clone, Serialize)]
pub struct Conflict {
    pub key: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GoodReport {
    pub samples: usize,
    pub infeasible: usize,
    pub monotonicity_checked: usize,
    pub monotonicity_failures: Vec<String>,
    pub composition_keys: usize,
    pub conflicts: Vec<Conflict>,
    pub height_checked: usize,
    pub height_failures: Vec<String>,
    pub degree_checked: usize,
    pub degree_failures: Vec<String>,
    /// Comparisons skipped because the oracle ran out of budget.
    pub skipped: usize,
}

impl GoodReport {
    pub fn holds(&self) -> bool {
        self.infeasible == 0
            && self.monotonicity_failures.is_empty()
            && self.conflicts.is_empty()
            && self.height_failures.is_empty()
            && self.degree_failures.is_empty()
    }
}

/// Image of a surgery result embeds in the image of the base tree through
/// node provenance.
fn embeds_by_provenance(rep: &Rep, base: &TracedStructure, s: &Surgery) -> bool {
    let small = rep.str_traced(&s.tree);
    let index = base.index();
    let positions: FxHashMap<_, usize> = small.structure.universe().iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let lift = |e| {
        let trace = &small.trace[*positions.get(&e)?];
        let lifted: Option<Vec<_>> = trace.iter().map(|&(n, slot)| s.base_node(n).map(|b| (b, slot))).collect();
        index.get(&lifted?).copied()
    };
    is_embedding(&small.structure, &base.structure, lift)
}

/// Checks on sample trees: monotonicity under the closure operations,
/// functionality of the composition keys, and class preservation when a
/// subtree is replaced by an equivalent descendant or children are cut
/// between equivalent prefixes.
pub fn check_good(
    rep: &Rep,
    samples: &[Tree],
    m: usize,
    logic: Logic,
    registry: &mut ClassRegistry,
) -> Result<GoodReport, EquivError> {
    let mut report = GoodReport { samples: samples.len(), ..GoodReport::default() };
    let mut seen: FxHashMap<TableKey, (ClassId, Tree)> = FxHashMap::default();
    let alphabet = rep.alphabet().clone();
    for t in samples {
        if !rep.check(t).is_empty() {
            report.infeasible += 1;
            continue;
        }
        let base = rep.str_traced(t);
        for (op, s) in alphabet.closure_variants(t) {
            if !rep.check(&s.tree).is_empty() || matches!(op, ClosureOp::Subtree(0)) {
                continue;
            }
            report.monotonicity_checked += 1;
            if !embeds_by_provenance(rep, &base, &s) {
                report.monotonicity_failures.push(format!("{op:?} on {t}"));
            }
        }

        let mut class = vec![ClassId(0); t.size()];
        for node in (0..t.size()).rev() {
            let sub = t.subtree_at(node).expect("node exists").tree;
            class[node] = registry.class_of(&rep.str_image(&sub), m, logic)?;
            let label = t.label(node).clone();
            let kids: Vec<ClassId> = t.children(node).iter().map(|&c| class[c]).collect();
            let mut observe = |key: TableKey, c: ClassId, tree: &Tree| match seen.get(&key) {
                Some((old, first)) if *old != c => report.conflicts.push(Conflict {
                    key: format!("{key:?}"),
                    first: first.to_string(),
                    second: tree.to_string(),
                }),
                Some(_) => {}
                None => {
                    seen.insert(key, (c, tree.clone()));
                }
            };
            if kids.is_empty() {
                observe(TableKey::Leaf(label), class[node], &sub);
            } else if alphabet.is_ranked(&label) {
                observe(TableKey::Compose(label, kids), class[node], &sub);
            } else {
                let mut previous: Option<(usize, ClassId)> = None;
                let mut chain = Vec::new();
                for k in prefix_marks(kids.len(), block_width(&alphabet, &label)) {
                    let prefix = sub.restrict_children(0, 0..k).expect("k within range").tree;
                    let c = registry.class_of(&rep.str_image(&prefix), m, logic)?;
                    let key = match previous {
                        None => TableKey::Compose(label.clone(), kids[..k].to_vec()),
                        Some((j, prev)) => TableKey::Step(label.clone(), prev, kids[j..k].to_vec()),
                    };
                    observe(key, c, &prefix);
                    previous = Some((k, c));
                    chain.push((k, c));
                }
                check_degree_cuts(rep, t, node, &chain, m, logic, registry, &base, &mut report)?;
            }
        }
        for a in 1..t.size() {
            for b in t.subtree_range(a).skip(1) {
                if class[a] != class[b] {
                    continue;
                }
                let s = t.replace_with_descendant(a, b).expect("proper descendant");
                report.height_checked += 1;
                match equivalent(registry, &base.structure, &rep.str_image(&s.tree), m, logic) {
                    Ok(true) => {}
                    Ok(false) => report.height_failures.push(format!("replace {a} by {b} in {t}")),
                    Err(EquivError::BudgetExceeded { .. }) => report.skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    report.composition_keys = seen.len();
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn check_degree_cuts(
    rep: &Rep,
    t: &Tree,
    node: NodeId,
    chain: &[(usize, ClassId)],
    m: usize,
    logic: Logic,
    registry: &mut ClassRegistry,
    base: &TracedStructure,
    report: &mut GoodReport,
) -> Result<(), EquivError> {
    let alphabet = rep.alphabet();
    for (i, &(kp, cp)) in chain.iter().enumerate() {
        for &(kq, cq) in &chain[i + 1..] {
            if cp != cq {
                continue;
            }
            let mut editor = crate::trees::TreeEditor::new(t, alphabet);
            if editor.remove_children(node, kp, kq).is_err() {
                continue;
            }
            let cut = editor.finish().tree;
            report.degree_checked += 1;
            match equivalent(registry, &base.structure, &rep.str_image(&cut), m, logic) {
                Ok(true) => {}
                Ok(false) => report.degree_failures.push(format!("cut {kp}..{kq} at {node} in {t}")),
                Err(EquivError::BudgetExceeded { .. }) => report.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::{rep_by_name, Representation};
    use crate::structure::Vocabulary;
    use crate::trees::{parse_tree, TreeAlphabet};
    use std::sync::Arc;

    fn corpus() -> Vec<Tree> {
        [
            "(leaf a)",
            "(node ∘ (leaf a) (leaf b))",
            "(node ∘ (leaf a) (leaf a) (leaf a) (leaf b))",
            "(node f (node ∘ (leaf a) (leaf a)) (leaf b))",
            "(node ∘ (node f (leaf b) (leaf a)) (leaf a) (leaf a))",
        ]
        .iter()
        .map(|s| parse_tree(s).unwrap())
        .collect()
    }

    #[test]
    fn ordered_trees_are_good() {
        let rep = rep_by_name("ranked-trees", None).unwrap();
        let mut reg = ClassRegistry::new();
        let report = check_good(&rep, &corpus(), 3, Logic::Fo, &mut reg).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.monotonicity_checked > 0 && report.composition_keys > 0);
    }

    #[test]
    fn unordered_trees_are_monotone() {
        let rep = rep_by_name("unordered-trees", None).unwrap();
        let mut reg = ClassRegistry::new();
        let report = check_good(&rep, &corpus(), 2, Logic::Fo, &mut reg).unwrap();
        assert!(report.monotonicity_failures.is_empty());
    }

    /// Drops every child subtree of the root with three or more nodes.
    #[derive(Debug)]
    struct DropsBigChildren(Rep);

    impl Representation for DropsBigChildren {
        fn name(&self) -> &str {
            "drops-big-children"
        }
        fn alphabet(&self) -> &TreeAlphabet {
            self.0.alphabet()
        }
        fn vocabulary(&self) -> &Arc<Vocabulary> {
            self.0.vocabulary()
        }
        fn m0(&self) -> usize {
            1
        }
        fn str_traced(&self, t: &Tree) -> TracedStructure {
            let full = self.0.str_traced(t);
            let dropped: Vec<NodeId> =
                t.children(0).iter().filter(|&&c| t.subtree_size(c) >= 3).flat_map(|&c| t.subtree_range(c)).collect();
            let keep: Vec<u32> =
                (0..full.trace.len() as u32).filter(|&e| !dropped.contains(&full.trace[e as usize][0].0)).collect();
            let part = full.structure.induced_substructure(keep.iter().copied()).unwrap();
            let structure = part.relabel(|e| keep.binary_search(&e).unwrap() as u32);
            let trace = keep.iter().map(|&e| full.trace[e as usize].clone()).collect();
            TracedStructure { structure, trace }
        }
    }

    #[test]
    fn a_reading_that_drops_children_is_not_functional() {
        let rep: Rep = Arc::new(DropsBigChildren(rep_by_name("ranked-trees", None).unwrap()));
        let samples: Vec<Tree> =
            ["(node f (node ∘ (leaf a)) (leaf b))", "(node f (node ∘ (leaf a) (leaf a)) (leaf b))"]
                .iter()
                .map(|s| parse_tree(s).unwrap())
                .collect();
        let mut reg = ClassRegistry::new();
        let report = check_good(&rep, &samples, 1, Logic::Fo, &mut reg).unwrap();
        assert!(!report.conflicts.is_empty(), "{report:?}");
        assert!(!report.holds());
    }
}
