//! Self-similarity at every scale: reductions with a bounded gap, iterated
//! into a chain of equivalent substructures, one per scale.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::equivalence::{equivalent, EquivError};
use crate::kernelize::{lift_elements, KernelError, Kernelizer};
use crate::representations::Rep;
use crate::structure::{is_embedding, Elem, Structure};
use crate::trees::{NodeId, Tree, TreeEditor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("scale plan: {0}")]
    Plan(String),
    #[error("a step from image size {from} to {to} skipped scale {scale}")]
    ScaleSkipped { scale: usize, from: usize, to: usize },
    #[error("scale {scale} is out of reach: reductions stop at image size {smallest}")]
    Unreachable { scale: usize, smallest: usize },
}

/// A strictly increasing scale function `f` given by `f(1)` and the widths
/// `f(n+1) − f(n)`; the last width repeats. Scale `j ≥ 1` is `[f(j), f(j+1))`
/// and sizes below `f(1)` are at scale 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalePlan {
    start: usize,
    widths: Vec<usize>,
}

impl ScalePlan {
    pub fn new(start: usize, widths: Vec<usize>) -> Result<Self, FractalError> {
        if start == 0 {
            return Err(FractalError::Plan("f(1) must be positive".into()));
        }
        if widths.is_empty() || widths.contains(&0) {
            return Err(FractalError::Plan("widths must be positive".into()));
        }
        Ok(ScalePlan { start, widths })
    }

    /// `f(n) = start + (n − 1)·width`.
    pub fn uniform(start: usize, width: usize) -> Result<Self, FractalError> {
        Self::new(start, vec![width])
    }

    fn width(&self, n: usize) -> usize {
        self.widths[(n - 1).min(self.widths.len() - 1)]
    }

    /// `f(n)` for `n ≥ 1`.
    pub fn boundary(&self, n: usize) -> usize {
        let mut f = self.start;
        for k in 1..n {
            f = f.saturating_add(self.width(k));
        }
        f
    }

    pub fn scale_of(&self, size: usize) -> usize {
        let mut j = 0;
        let mut f = self.start;
        while size >= f {
            j += 1;
            f = f.saturating_add(self.width(j));
            if f == usize::MAX {
                break;
            }
        }
        j
    }

    pub fn min_width(&self) -> usize {
        *self.widths.iter().min().expect("nonempty")
    }

    /// The uniform plan whose scale 1 starts just above the image size where
    /// reductions from `t` stop and whose width is the largest image-size drop
    /// of a single reduction, so that [`fractal_chain`] reaches every scale.
    pub fn fitted(k: &mut Kernelizer, t: &Tree) -> Result<Self, FractalError> {
        let rep = k.rep().clone();
        let mut size = rep.str_checked(t).map_err(KernelError::from)?.structure.size();
        let mut current = t.clone();
        let mut widest = 1;
        loop {
            let step = reduce_once_bounded(k, &current)?;
            if step.kind.is_none() {
                break;
            }
            current = step.tree;
            let next = rep.str_image(&current).size();
            widest = widest.max(size.saturating_sub(next));
            size = next;
        }
        Self::uniform(size + 1, widest)
    }
}

/// Observed bound `β` on image-size changes per tree-size change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreatBound {
    /// `β(n)` for `n < beta.len()`.
    pub beta: Vec<usize>,
    /// Largest observed image change per tree node, rounded up; extends `β`.
    pub slope: usize,
    /// Largest image change seen for each tree-size change.
    pub observed: BTreeMap<usize, usize>,
}

impl GreatBound {
    pub fn at(&self, n: usize) -> usize {
        match self.beta.get(n) {
            Some(&b) => b,
            None => {
                let last = self.beta.len() - 1;
                self.beta[last] + (n - last) * self.slope
            }
        }
    }

    /// Every observed pair lies under the bound.
    pub fn covers(&self, tree_delta: usize, image_delta: usize) -> bool {
        image_delta <= self.at(tree_delta)
    }
}

/// Largest image-size change over the feasible closure operations of the
/// samples, made monotone and strictly increasing.
pub fn estimate_great_bound(rep: &Rep, samples: &[Tree]) -> GreatBound {
    let mut observed: BTreeMap<usize, usize> = BTreeMap::new();
    let alphabet = rep.alphabet().clone();
    for t in samples {
        if !rep.check(t).is_empty() {
            continue;
        }
        let size = rep.str_image(t).size();
        for (_, s) in alphabet.closure_variants(t) {
            if !rep.check(&s.tree).is_empty() {
                continue;
            }
            let tree_delta = t.size() - s.tree.size();
            let image_delta = size.abs_diff(rep.str_image(&s.tree).size());
            let slot = observed.entry(tree_delta).or_insert(0);
            *slot = (*slot).max(image_delta);
        }
    }
    let top = observed.keys().next_back().copied().unwrap_or(0);
    let mut beta = vec![0; top + 1];
    for n in 1..=top {
        beta[n] = observed.get(&n).copied().unwrap_or(0).max(beta[n - 1] + 1);
    }
    let slope = observed.iter().filter(|(&d, _)| d > 0).map(|(&d, &i)| i.div_ceil(d)).max().unwrap_or(1).max(1);
    GreatBound { beta, slope, observed }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionKind {
    /// Children `start..end` of `node` were cut.
    Degree { node: NodeId, start: usize, end: usize },
    /// The subtree at `at` was replaced by the one at `by`.
    Height { at: NodeId, by: NodeId },
}

/// One reduction: the smaller tree, its provenance and the removed node count
/// with the bound it was promised.
#[derive(Debug, Clone)]
pub struct ReductionStep {
    pub tree: Tree,
    pub origin: Vec<NodeId>,
    pub gap: usize,
    pub bound: u64,
    pub kind: Option<ReductionKind>,
}

fn pow_bound(degree: usize, height: usize) -> u64 {
    (degree.max(2) as u64).saturating_pow(u32::try_from(height + 1).unwrap_or(u32::MAX))
}

/// Removes one block of children between equal prefix classes, or replaces
/// one subtree by an equally coloured descendant, choosing the smallest
/// removal. Returns the tree unchanged with gap 0 when neither applies.
pub fn reduce_once_bounded(k: &mut Kernelizer, t: &Tree) -> Result<ReductionStep, KernelError> {
    let colouring = k.colour(t)?;
    let n = t.size();
    let mut height = vec![0; n];
    let mut degree = vec![0; n];
    for v in (0..n).rev() {
        degree[v] = t.children(v).len();
        for &c in t.children(v) {
            height[v] = height[v].max(height[c] + 1);
            degree[v] = degree[v].max(degree[c]);
        }
    }
    // (gap, kind, bound); ties go to the first candidate found.
    let mut best: Option<(usize, ReductionKind, u64)> = None;
    let mut offer = |gap: usize, kind: ReductionKind, bound: u64| {
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, kind, bound));
        }
    };
    for node in 0..n {
        let chain = &colouring.prefixes[node];
        for (i, &(kp, cp)) in chain.iter().enumerate() {
            let Some(&(kq, _)) = chain[i + 1..].iter().find(|&&(_, c)| c == cp) else { continue };
            let cut = &t.children(node)[kp..kq];
            let gap = cut.iter().map(|&c| t.subtree_size(c)).sum();
            let d = cut.iter().map(|&c| degree[c]).max().unwrap_or(0);
            let h = cut.iter().map(|&c| height[c]).max().unwrap_or(0);
            let bound = ((kq - kp) as u64).saturating_mul(pow_bound(d, h));
            offer(gap, ReductionKind::Degree { node, start: kp, end: kq }, bound);
        }
    }
    for a in 1..n {
        let by = t
            .subtree_range(a)
            .skip(1)
            .filter(|&b| colouring.colour[b] == colouring.colour[a])
            .min_by_key(|&b| (t.subtree_size(a) - t.subtree_size(b), b));
        if let Some(b) = by {
            offer(
                t.subtree_size(a) - t.subtree_size(b),
                ReductionKind::Height { at: a, by: b },
                pow_bound(degree[a], height[a]),
            );
        }
    }
    let Some((gap, kind, bound)) = best else {
        return Ok(ReductionStep { tree: t.clone(), origin: (0..n).collect(), gap: 0, bound: 0, kind: None });
    };
    let alphabet = k.rep().alphabet().clone();
    let mut editor = TreeEditor::new(t, &alphabet);
    match kind {
        ReductionKind::Degree { node, start, end } => editor.remove_children(node, start, end)?,
        ReductionKind::Height { at, by } => editor.replace_with_descendant(at, by)?,
    };
    let surgery = editor.finish();
    let origin = (0..surgery.tree.size()).map(|v| surgery.base_node(v).expect("edits keep base nodes")).collect();
    Ok(ReductionStep { tree: surgery.tree, origin, gap, bound, kind: Some(kind) })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainElement {
    pub scale: usize,
    pub size: usize,
    pub tree_size: usize,
    /// Elements of the original image kept.
    pub elements: Vec<Elem>,
    #[serde(skip)]
    pub structure: Structure,
    #[serde(skip)]
    pub tree: Tree,
    pub embeds: bool,
    /// Equivalent to the original at the requested rank, when within budget.
    pub equivalent: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepLog {
    pub gap: usize,
    pub bound: u64,
    pub image_size: usize,
    pub kind: Option<ReductionKind>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FractalChain {
    pub input_size: usize,
    pub input_scale: usize,
    pub elements: Vec<ChainElement>,
    pub steps: Vec<StepLog>,
}

impl FractalChain {
    /// Scales `1..input_scale`, each hit once.
    pub fn covers_all_scales(&self) -> bool {
        let scales: Vec<usize> = self.elements.iter().map(|e| e.scale).collect();
        scales == (1..self.input_scale).rev().collect::<Vec<_>>()
    }

    pub fn gaps_within_bounds(&self) -> bool {
        self.steps.iter().all(|s| s.gap as u64 <= s.bound || s.kind.is_none())
    }
}

/// Iterates [`reduce_once_bounded`] from `t`, keeping the first image that
/// lands in each scale below the scale of `Str(t)`. Each kept image is
/// compared with `Str(t)` at the kernelizer's requested rank.
pub fn fractal_chain(
    k: &mut Kernelizer,
    t: &Tree,
    plan: &ScalePlan,
    rank: usize,
) -> Result<FractalChain, FractalError> {
    let rep = k.rep().clone();
    let base = rep.str_checked(t).map_err(KernelError::from)?;
    let input_size = base.structure.size();
    let input_scale = plan.scale_of(input_size);
    let mut chain = FractalChain { input_size, input_scale, elements: Vec::new(), steps: Vec::new() };
    let mut current = t.clone();
    let mut origin: Vec<NodeId> = (0..t.size()).collect();
    let mut size = input_size;
    let mut scale = input_scale;
    while scale > 1 {
        let step = reduce_once_bounded(k, &current)?;
        if step.kind.is_none() {
            return Err(FractalError::Unreachable { scale: scale - 1, smallest: size });
        }
        origin = step.origin.iter().map(|&v| origin[v]).collect();
        current = step.tree;
        let small = rep.str_traced(&current);
        let next = small.structure.size();
        chain.steps.push(StepLog { gap: step.gap, bound: step.bound, image_size: next, kind: step.kind });
        let next_scale = plan.scale_of(next);
        if next_scale + 1 < scale {
            return Err(FractalError::ScaleSkipped { scale: scale - 1, from: size, to: next });
        }
        if next_scale < scale {
            let elements = lift_elements(&base, &small, &origin)?;
            let structure = base.structure.induced_substructure(elements.iter().copied()).map_err(KernelError::from)?;
            let positions: BTreeMap<Elem, usize> =
                small.structure.universe().iter().enumerate().map(|(i, &e)| (e, i)).collect();
            let embeds = is_embedding(&small.structure, &base.structure, |e| positions.get(&e).map(|&i| elements[i]));
            let logic = k.logic();
            let equivalent = match equivalent(k.registry_mut(), &base.structure, &structure, rank, logic) {
                Ok(v) => Some(v),
                Err(EquivError::BudgetExceeded { .. }) | Err(EquivError::SetsTooLarge) => None,
                Err(e) => return Err(e.into()),
            };
            chain.elements.push(ChainElement {
                scale: next_scale,
                size: next,
                tree_size: current.size(),
                elements,
                structure,
                tree: current.clone(),
                embeds,
                equivalent,
            });
        }
        size = next;
        scale = next_scale;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Logic;
    use crate::representations::{rep_by_name, CONCAT};

    fn word_tree(len: usize) -> Tree {
        Tree::node(CONCAT, (0..len).map(|i| Tree::leaf(if i % 3 == 0 { "b" } else { "a" })))
    }

    #[test]
    fn plans_are_strictly_increasing() {
        let plan = ScalePlan::new(4, vec![3, 5]).unwrap();
        assert_eq!((plan.boundary(1), plan.boundary(2), plan.boundary(3), plan.boundary(4)), (4, 7, 12, 17));
        assert_eq!(plan.scale_of(3), 0);
        assert_eq!(plan.scale_of(4), 1);
        assert_eq!(plan.scale_of(11), 2);
        assert_eq!(plan.scale_of(12), 3);
        assert!(ScalePlan::new(0, vec![1]).is_err());
        assert!(ScalePlan::uniform(3, 0).is_err());
    }

    #[test]
    fn small_trees_are_left_alone() {
        let rep = rep_by_name("words", None).unwrap();
        let mut k = Kernelizer::new(rep, 1, Logic::Fo);
        let t = Tree::node(CONCAT, [Tree::leaf("a"), Tree::leaf("b")]);
        let step = reduce_once_bounded(&mut k, &t).unwrap();
        assert_eq!((step.gap, step.tree), (0, t));
    }

    #[test]
    fn a_wide_star_loses_one_block() {
        let rep = rep_by_name("words", None).unwrap();
        let mut k = Kernelizer::new(rep, 1, Logic::Fo);
        let t = Tree::node(CONCAT, (0..12).map(|_| Tree::leaf("a")));
        let step = reduce_once_bounded(&mut k, &t).unwrap();
        assert!(step.gap >= 1 && step.gap as u64 <= step.bound);
        assert_eq!(step.tree.size() + step.gap, t.size());
    }

    #[test]
    fn chain_over_a_long_word() {
        let rep = rep_by_name("words", None).unwrap();
        let mut k = Kernelizer::new(rep.clone(), 1, Logic::Fo);
        let t = word_tree(40);
        let plan = ScalePlan::uniform(24, 4).unwrap();
        let chain = fractal_chain(&mut k, &t, &plan, 1).unwrap();
        assert_eq!(chain.input_scale, plan.scale_of(40));
        assert!(chain.covers_all_scales(), "{chain:?}");
        assert!(chain.gaps_within_bounds());
        assert!(chain.elements.iter().all(|e| e.embeds && e.equivalent == Some(true)));
        let fitted = ScalePlan::fitted(&mut k, &t).unwrap();
        let chain = fractal_chain(&mut k, &t, &fitted, 1).unwrap();
        assert!(chain.covers_all_scales() && chain.elements.len() + 1 == chain.input_scale);
        let single = ScalePlan::uniform(30, 100).unwrap();
        assert!(fractal_chain(&mut k, &t, &single, 1).unwrap().elements.is_empty());
    }

    #[test]
    fn beta_of_the_identity_is_the_identity() {
        let rep = rep_by_name("ranked-trees", None).unwrap();
        let samples = [Tree::node(CONCAT, [Tree::leaf("a"), Tree::node(CONCAT, [Tree::leaf("b"), Tree::leaf("a")])])];
        let beta = estimate_great_bound(&rep, &samples);
        assert_eq!(beta.beta, vec![0, 1, 2, 3, 4]);
        let words = estimate_great_bound(&rep_by_name("words", None).unwrap(), &samples);
        assert!((1..5).all(|n| words.at(n) <= n.max(words.at(n - 1) + 1)));
    }
}
