use std::sync::Arc;

use super::{Representation, TracedStructure};
use crate::structure::{Elem, Structure, Vocabulary};
use crate::trees::{Label, LabelFamily, LabelSet, NodeId, Tree, TreeAlphabet};

/// Relation name of the edge relation.
pub const EDGE: &str = "E";

/// n-partite cographs: vertices are the leaves, colour `i` (or `i:σ` with a
/// vertex label), and two leaves are adjacent iff the edge function at their
/// lca maps their colours to 1.
#[derive(Debug, Clone)]
pub struct NPartiteRep {
    name: String,
    parts: usize,
    alphabet: TreeAlphabet,
    letters: Vec<Label>,
    vocab: Arc<Vocabulary>,
    m0: usize,
}

/// Value of the edge function `label` at colours `(i, j)` (1-based).
/// `union` and `join` are the constant functions 0 and 1.
pub fn edge_bit(label: &Label, parts: usize, i: usize, j: usize) -> bool {
    match label.as_str() {
        "union" => false,
        "join" => true,
        text => text.as_bytes()[1 + (i - 1) * parts + (j - 1)] == b'1',
    }
}

impl NPartiteRep {
    pub fn new(parts: usize, labels: Option<&[&str]>) -> Self {
        let letters: Option<_> = labels.map(|ls| LabelSet::of(ls.iter().copied()).explicit);
        let leaf = LabelSet::default().with_family(LabelFamily::Colours { parts, letters: letters.clone() });
        let internal = LabelSet::default().with_family(LabelFamily::EdgeFunctions { parts });
        Self::build(
            format!("npartite:{parts}"),
            parts,
            TreeAlphabet::new(internal, leaf),
            letters.into_iter().flatten().collect(),
        )
    }

    /// Cographs: one colour, internal labels `union` and `join`.
    pub fn cographs() -> Self {
        let leaf = LabelSet::default().with_family(LabelFamily::Colours { parts: 1, letters: None });
        Self::build("cograph".into(), 1, TreeAlphabet::new(LabelSet::of(["union", "join"]), leaf), Vec::new())
    }

    fn build(name: String, parts: usize, alphabet: TreeAlphabet, letters: Vec<Label>) -> Self {
        let mut rels = vec![(EDGE.to_string(), 2)];
        rels.extend((1..=parts).map(|i| (format!("P_{i}"), 1)));
        rels.extend(letters.iter().map(|l| (format!("L_{l}"), 1)));
        let vocab = Arc::new(Vocabulary::new(rels).expect("distinct names"));
        NPartiteRep { name, parts, alphabet, letters, vocab, m0: 3 }
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    fn colour(label: &Label) -> (usize, Option<&str>) {
        match label.split_pair() {
            Some((c, l)) => (c.parse().expect("feasible colour"), Some(l)),
            None => (label.as_str().parse().expect("feasible colour"), None),
        }
    }
}

impl Representation for NPartiteRep {
    fn name(&self) -> &str {
        &self.name
    }
    fn alphabet(&self) -> &TreeAlphabet {
        &self.alphabet
    }
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }
    fn m0(&self) -> usize {
        self.m0
    }
    fn str_traced(&self, t: &Tree) -> TracedStructure {
        let leaves: Vec<NodeId> = t.leaves().collect();
        let colours: Vec<(usize, Option<&str>)> = leaves.iter().map(|&n| Self::colour(t.label(n))).collect();
        let mut edges = Vec::new();
        for (x, &a) in leaves.iter().enumerate() {
            for (y, &b) in leaves.iter().enumerate().skip(x + 1) {
                let c = t.lca(a, b);
                if edge_bit(t.label(c), self.parts, colours[x].0, colours[y].0) {
                    edges.push(vec![x as Elem, y as Elem]);
                    edges.push(vec![y as Elem, x as Elem]);
                }
            }
        }
        let mut tables = vec![(EDGE.to_string(), edges)];
        for i in 1..=self.parts {
            let members = colours.iter().enumerate().filter(|(_, c)| c.0 == i).map(|(x, _)| vec![x as Elem]);
            tables.push((format!("P_{i}"), members.collect()));
        }
        for l in &self.letters {
            let members =
                colours.iter().enumerate().filter(|(_, c)| c.1 == Some(l.as_str())).map(|(x, _)| vec![x as Elem]);
            tables.push((format!("L_{l}"), members.collect()));
        }
        TracedStructure {
            structure: Structure::new(self.vocab.clone(), 0..leaves.len() as Elem, tables).expect("well formed"),
            trace: leaves.iter().map(|&n| vec![(n, 0)]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    fn edges(rep: &NPartiteRep, text: &str) -> usize {
        let t = parse_tree(text).unwrap();
        assert!((rep as &dyn Representation).check(&t).is_empty(), "{text}");
        rep.str_traced(&t).structure.table_by_name(EDGE).unwrap().len() / 2
    }

    #[test]
    fn edge_function_at_the_lca() {
        let rep = NPartiteRep::new(2, None);
        assert_eq!(edges(&rep, "(node f0110 (leaf 1) (leaf 2))"), 1);
        assert_eq!(edges(&rep, "(node f0110 (leaf 1) (leaf 1))"), 0);
        assert_eq!(edges(&rep, "(leaf 2)"), 0);
        assert_eq!(edges(&rep, "(node f0100 (leaf 2) (leaf 1))"), 0);
        assert_eq!(edges(&rep, "(node f0100 (leaf 1) (leaf 2))"), 1);
    }

    #[test]
    fn cographs() {
        let rep = NPartiteRep::cographs();
        assert_eq!(edges(&rep, "(node join (leaf 1) (leaf 1))"), 1);
        assert_eq!(edges(&rep, "(node union (leaf 1) (leaf 1))"), 0);
        assert_eq!(edges(&rep, "(node join (node union (leaf 1) (leaf 1)) (leaf 1))"), 2);
    }

    #[test]
    fn labeled_variant() {
        let rep = NPartiteRep::new(1, Some(&["x", "y"]));
        let t = parse_tree("(node f1 (leaf 1:x) (leaf 1:y))").unwrap();
        let img = rep.str_traced(&t).structure;
        assert_eq!(img.table_by_name("L_y").unwrap().len(), 1);
        assert!(!(&rep as &dyn Representation).check(&parse_tree("(node f1 (leaf 1) (leaf 1:y))").unwrap()).is_empty());
    }
}
