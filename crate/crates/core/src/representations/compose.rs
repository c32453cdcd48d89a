use std::sync::Arc;

use super::{Rep, ReprError, Representation, TracedStructure};
use crate::structure::Vocabulary;
use crate::transducers::OperationDef;
use crate::trees::{Label, LabelSet, Tree, TreeAlphabet, TreeViolation, ViolationKind};

/// Trees of one representation, plus trees whose root is a new ranked label
/// `O` with one child per argument of a sum-like operation; such a tree reads
/// as the operation applied to the images of its child subtrees.
#[derive(Debug, Clone)]
pub struct ComposedRep {
    name: String,
    op: OperationDef,
    inner: Rep,
    root: Label,
    alphabet: TreeAlphabet,
}

/// Composes `op` with `reps`, one per argument. The arguments must all be the
/// same representation over the operation's base vocabulary.
pub fn compose_representations(op: OperationDef, reps: &[Rep]) -> Result<ComposedRep, ReprError> {
    if reps.len() != op.arity {
        return Err(ReprError::Invalid(format!("{} takes {} representations, got {}", op.name, op.arity, reps.len())));
    }
    if !op.sum_like() {
        return Err(ReprError::Invalid(format!("{} is product-like; only sum-like operations compose", op.name)));
    }
    let inner = reps[0].clone();
    if reps.iter().any(|r| r.name() != inner.name() || r.vocabulary() != inner.vocabulary()) {
        return Err(ReprError::Invalid("composed representations must coincide".into()));
    }
    if **inner.vocabulary() != *op.base || **op.scheme.target() != *op.base {
        return Err(ReprError::Invalid(format!("{} does not map {} images to themselves", op.name, inner.name())));
    }
    let root = Label::new(&format!("@{}", op.name));
    if inner.alphabet().all_labels().contains(&root) {
        return Err(ReprError::Invalid(format!("label {root} is already in use")));
    }
    let top =
        TreeAlphabet::new(LabelSet::of([root.as_str()]), LabelSet::of([])).with_ranked(root.as_str(), op.arity)?;
    let alphabet = inner.alphabet().union(&top)?;
    Ok(ComposedRep { name: format!("{}({})", op.name, inner.name()), op, inner, root, alphabet })
}

impl ComposedRep {
    pub fn root_label(&self) -> &Label {
        &self.root
    }

    pub fn operation(&self) -> &OperationDef {
        &self.op
    }

    /// The `O`-rooted tree over the given argument trees.
    pub fn combine(&self, parts: impl IntoIterator<Item = Tree>) -> Tree {
        Tree::node(self.root.clone(), parts)
    }

    fn is_composed(&self, t: &Tree) -> bool {
        *t.label(t.root()) == self.root
    }
}

impl Representation for ComposedRep {
    fn name(&self) -> &str {
        &self.name
    }

    fn alphabet(&self) -> &TreeAlphabet {
        &self.alphabet
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        self.inner.vocabulary()
    }

    fn m0(&self) -> usize {
        self.inner.m0()
    }

    fn check(&self, t: &Tree) -> Vec<TreeViolation> {
        let mut out: Vec<TreeViolation> = (0..t.size())
            .filter(|&n| n != t.root() && *t.label(n) == self.root)
            .map(|node| TreeViolation { node, kind: ViolationKind::InternalLabel(self.root.clone()) })
            .collect();
        if !self.is_composed(t) {
            out.extend(self.inner.check(t));
            return out;
        }
        out.extend(self.alphabet.check(t).into_iter().filter(|v| v.node == t.root()));
        for &c in t.children(t.root()) {
            let sub = t.subtree_at(c).expect("child exists").tree;
            out.extend(self.inner.check(&sub).into_iter().map(|v| TreeViolation { node: v.node + c, kind: v.kind }));
        }
        out.sort_by_key(|v| v.node);
        out
    }

    fn str_traced(&self, t: &Tree) -> TracedStructure {
        if !self.is_composed(t) {
            return self.inner.str_traced(t);
        }
        let kids = t.children(t.root());
        let parts: Vec<TracedStructure> =
            kids.iter().map(|&c| self.inner.str_traced(&t.subtree_at(c).expect("child exists").tree)).collect();
        let refs: Vec<_> = parts.iter().map(|p| &p.structure).collect();
        let (image, origin) = self.op.apply_traced(&refs).expect("sum-like operations have nonempty images");
        let trace = origin
            .iter()
            .map(|sources| {
                let (arg, e) = sources[0];
                let offset = kids[arg];
                let local = parts[arg].structure.index_of(e).expect("element of its argument");
                parts[arg].trace[local].iter().map(|&(n, slot)| (n + offset, slot)).collect()
            })
            .collect();
        TracedStructure { structure: image.structure, trace }
    }

    fn elements_per_node(&self) -> usize {
        self.inner.elements_per_node()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::{rep_words, word_structure};
    use crate::structure::isomorphic;
    use crate::transducers::builtin;
    use crate::trees::parse_tree;

    fn words() -> Rep {
        rep_words(&["a", "b"])
    }

    #[test]
    fn union_of_two_words() {
        let w = words();
        let op = builtin("disjoint-union", Some(w.vocabulary())).unwrap();
        let rep = compose_representations(op, &[w.clone(), w.clone()]).unwrap();
        let t = rep.combine([parse_tree("(node ∘ (leaf a) (leaf b))").unwrap(), parse_tree("(leaf b)").unwrap()]);
        let dyn_rep: Rep = Arc::new(rep.clone());
        assert!(dyn_rep.check(&t).is_empty());
        let image = dyn_rep.str_traced(&t);
        assert_eq!(image.structure.size(), 3);
        assert_eq!(image.trace, vec![vec![(2, 0)], vec![(3, 0)], vec![(4, 0)]]);
        let plain = parse_tree("(node ∘ (leaf b) (leaf a))").unwrap();
        assert_eq!(dyn_rep.str_image(&plain), w.str_image(&plain));
    }

    #[test]
    fn ordered_sum_of_words_is_concatenation() {
        let w = words();
        let op = builtin("ordered-sum", Some(w.vocabulary())).unwrap();
        let rep: Rep = Arc::new(compose_representations(op, &[w.clone(), w.clone()]).unwrap());
        let t = parse_tree("(node @ordered-sum (node ∘ (leaf a) (leaf b)) (leaf b))").unwrap();
        let abb: Vec<Label> = ["a", "b", "b"].into_iter().map(Label::new).collect();
        assert!(isomorphic(&rep.str_image(&t), &word_structure(&abb, w.vocabulary()), 100).unwrap());
    }

    #[test]
    fn arity_and_placement_are_checked() {
        let w = words();
        let op = builtin("disjoint-union", Some(w.vocabulary())).unwrap();
        let rep = compose_representations(op.clone(), &[w.clone(), w.clone()]).unwrap();
        let short = parse_tree("(node @disjoint-union (leaf a))").unwrap();
        assert!(!rep.check(&short).is_empty());
        let nested = parse_tree("(node ∘ (leaf a) (node @disjoint-union (leaf a) (leaf b)))").unwrap();
        assert!(!rep.check(&nested).is_empty());
        assert!(compose_representations(op, &[w]).is_err());
        let graphs = builtin("join", None).unwrap();
        assert!(compose_representations(graphs, &[words(), words()]).is_err());
    }
}
