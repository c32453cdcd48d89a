use super::{Builder, NodeId, Source, Surgery, Tree, TreeAlphabet, TreeError};

/// In-place view of a tree for a sequence of removals and replacements.
///
/// Node ids stay those of the base tree; [`TreeEditor::finish`] renumbers in
/// preorder and records base provenance.
pub struct TreeEditor<'a> {
    base: &'a Tree,
    alphabet: &'a TreeAlphabet,
    children: Vec<Vec<NodeId>>,
    parent: Vec<Option<NodeId>>,
    live: usize,
}

impl<'a> TreeEditor<'a> {
    pub fn new(base: &'a Tree, alphabet: &'a TreeAlphabet) -> Self {
        TreeEditor { base, alphabet, children: base.children.clone(), parent: base.parent.clone(), live: base.size() }
    }

    pub fn base(&self) -> &Tree {
        self.base
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n]
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n]
    }

    /// Number of nodes still reachable from the root.
    pub fn size(&self) -> usize {
        self.live
    }

    fn count(&self, n: NodeId) -> usize {
        1 + self.children[n].iter().map(|&c| self.count(c)).sum::<usize>()
    }

    /// Removes the children at positions `start..end` of `node`.
    pub fn remove_children(&mut self, node: NodeId, start: usize, end: usize) -> Result<usize, TreeError> {
        let kids = &self.children[node];
        if start >= end || end > kids.len() {
            return Err(TreeError::BadRange { node, start, end });
        }
        let label = self.base.label(node);
        if self.alphabet.is_ranked(label) {
            return Err(TreeError::RankedParent { node, label: label.clone() });
        }
        if end - start == kids.len() && !self.alphabet.leaf.contains(label) {
            return Err(TreeError::LeafLabel { node, label: label.clone() });
        }
        let removed: usize = kids[start..end].iter().map(|&c| self.count(c)).sum();
        self.children[node].drain(start..end);
        self.live -= removed;
        Ok(removed)
    }

    /// Puts the subtree at `b` in the place of `a`, a proper descendant.
    pub fn replace_with_descendant(&mut self, a: NodeId, b: NodeId) -> Result<usize, TreeError> {
        let p = self.parent[a].ok_or(TreeError::Root("replacement"))?;
        let mut x = b;
        loop {
            match self.parent[x] {
                Some(up) if up == a => break,
                Some(up) => x = up,
                None => return Err(TreeError::NotDescendant { ancestor: a, descendant: b }),
            }
        }
        let removed = self.count(a) - self.count(b);
        let slot = self.children[p].iter().position(|&c| c == a).expect("child of its parent");
        self.children[p][slot] = b;
        self.parent[b] = Some(p);
        self.parent[a] = None;
        self.live -= removed;
        Ok(removed)
    }

    /// Nodes reachable from the root, in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.live);
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n].iter().rev());
        }
        out
    }

    pub fn finish(&self) -> Surgery {
        let mut b = Builder::default();
        let mut stack: Vec<(NodeId, Option<NodeId>)> = vec![(0, None)];
        while let Some((n, parent)) = stack.pop() {
            let id = b.push(self.base.label(n).clone(), parent, Source::Base(n));
            stack.extend(self.children[n].iter().rev().map(|&c| (c, Some(id))));
        }
        b.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{parse_tree, LabelSet};

    #[test]
    fn edits_compose() {
        let alpha =
            TreeAlphabet::new(LabelSet::of(["g", "f"]), LabelSet::of(["a", "b", "c"])).with_ranked("f", 1).unwrap();
        let t = parse_tree("(node g (leaf a) (node g (node f (leaf b))) (leaf c) (leaf a))").unwrap();
        let mut ed = TreeEditor::new(&t, &alpha);
        assert_eq!(ed.remove_children(0, 2, 4).unwrap(), 2);
        assert!(ed.remove_children(3, 0, 1).is_err());
        assert!(ed.replace_with_descendant(2, 1).is_err());
        assert_eq!(ed.replace_with_descendant(2, 4).unwrap(), 2);
        assert_eq!(ed.size(), 3);
        let out = ed.finish();
        assert_eq!(out.tree, parse_tree("(node g (leaf a) (leaf b))").unwrap());
        assert_eq!(out.origin, vec![Source::Base(0), Source::Base(1), Source::Base(4)]);
        assert_eq!(ed.preorder(), vec![0, 1, 4]);
    }
}
