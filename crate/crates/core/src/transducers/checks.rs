use serde::Serialize;

use super::{SchemeError, TranslationScheme};
use crate::equivalence::{equivalent, ClassRegistry, EquivError};
use crate::kernelize::{ebsp_witness, EbspWitness, KernelError};
use crate::logic::Logic;
use crate::representations::Rep;
use crate::structure::{is_embedding, Structure};
use crate::trees::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransferVerdict {
    /// Inputs agree at rank `t·m` and outputs agree at rank `m`.
    Holds,
    /// Inputs differ at rank `t·m`; nothing to check.
    Vacuous,
    /// Inputs agree but outputs differ.
    Falsified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub input_rank: usize,
    pub output_rank: usize,
    pub inputs_equivalent: bool,
    pub outputs_equivalent: bool,
    pub verdict: TransferVerdict,
}

/// `A ≡_{t·m} B ⇒ Ξ(A) ≡_m Ξ(B)`, with rank `m` on both sides for MSO.
pub fn check_transfer(
    registry: &mut ClassRegistry,
    a: &Structure,
    b: &Structure,
    scheme: &TranslationScheme,
    m: usize,
    logic: Logic,
) -> Result<TransferReport, SchemeError> {
    if logic == Logic::Mso && scheme.dim() > 1 {
        return Err(SchemeError::MsoDimension);
    }
    let input_rank = scheme.dim() * m;
    let inputs_equivalent = equivalent(registry, a, b, input_rank, logic)?;
    let (ia, ib) = (scheme.apply(a)?.structure, scheme.apply(b)?.structure);
    let outputs_equivalent = equivalent(registry, &ia, &ib, m, logic)?;
    let verdict = match (inputs_equivalent, outputs_equivalent) {
        (false, _) => TransferVerdict::Vacuous,
        (true, true) => TransferVerdict::Holds,
        (true, false) => TransferVerdict::Falsified,
    };
    Ok(TransferReport { input_rank, output_rank: m, inputs_equivalent, outputs_equivalent, verdict })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreservationReport {
    pub image_size: usize,
    pub sub_image_size: usize,
    /// `Ξ(B)` sits in `Ξ(A)` as the induced substructure on its tuples.
    pub embeds: bool,
    /// Tuples of `Ξ(A)` over elements of `B` that are missing from `Ξ(B)`.
    pub missing: usize,
}

impl PreservationReport {
    pub fn holds(&self) -> bool {
        self.embeds && self.missing == 0
    }
}

/// For an induced substructure `B ⊆ A`, checks that `Ξ(B)` is the induced
/// substructure of `Ξ(A)` on the tuples over `B`, matched by tuple.
pub fn check_substructure_preservation(
    scheme: &TranslationScheme,
    a: &Structure,
    b: &Structure,
) -> Result<PreservationReport, SchemeError> {
    if a.induced_substructure(b.universe().iter().copied())? != *b {
        return Err(SchemeError::Invalid("second structure is not an induced substructure of the first".into()));
    }
    let ia = scheme.apply(a)?;
    let ib = match scheme.apply(b) {
        Ok(img) => img,
        Err(SchemeError::EmptyImage) => {
            let missing = ia.tuples.iter().filter(|t| t.iter().all(|&e| b.contains(e))).count();
            return Ok(PreservationReport { image_size: ia.tuples.len(), sub_image_size: 0, embeds: true, missing });
        }
        Err(e) => return Err(e),
    };
    let embeds = is_embedding(&ib.structure, &ia.structure, |e| ia.element_of(&ib.tuples[e as usize]));
    let missing = ia.tuples.iter().filter(|t| t.iter().all(|&e| b.contains(e)) && ib.element_of(t).is_none()).count();
    Ok(PreservationReport { image_size: ia.tuples.len(), sub_image_size: ib.tuples.len(), embeds, missing })
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeWitness {
    #[serde(skip)]
    pub image: Structure,
    #[serde(skip)]
    pub witness_image: Structure,
    /// The witness for the source structure at rank `t·m`.
    pub source: EbspWitness,
    pub preservation: PreservationReport,
    /// `|B'| ≤ |B|^t`.
    pub within_size_bound: bool,
    pub equivalent: Option<bool>,
}

impl SchemeWitness {
    pub fn holds(&self) -> bool {
        self.source.in_class && self.preservation.holds() && self.within_size_bound && self.equivalent != Some(false)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeWitnessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Pushes a rank-`t·m` witness for `A` through the scheme to get a rank-`m`
/// witness for `Ξ(A)`.
pub fn ebsp_through_scheme(
    a: &Structure,
    rep: &Rep,
    tree: &Tree,
    scheme: &TranslationScheme,
    m: usize,
    logic: Logic,
    registry: &mut ClassRegistry,
) -> Result<SchemeWitness, SchemeWitnessError> {
    if logic == Logic::Mso && scheme.dim() > 1 {
        return Err(SchemeError::MsoDimension.into());
    }
    let source = ebsp_witness(a, rep, tree, scheme.dim() * m, logic, registry)?;
    let image = scheme.apply(a)?.structure;
    let witness_image = scheme.apply(&source.substructure)?.structure;
    let preservation = check_substructure_preservation(scheme, a, &source.substructure)?;
    let bound = (source.substructure.size() as u128).saturating_pow(scheme.dim() as u32);
    let within_size_bound = witness_image.size() as u128 <= bound;
    let equivalent = match equivalent(registry, &image, &witness_image, m, logic) {
        Ok(v) => Some(v),
        Err(EquivError::BudgetExceeded { .. }) | Err(EquivError::SetsTooLarge) => None,
        Err(e) => return Err(SchemeError::from(e).into()),
    };
    Ok(SchemeWitness { image, witness_image, source, preservation, within_size_bound, equivalent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_structure;
    use crate::transducers::{builtin, parse_scheme};

    fn path(n: u32) -> Structure {
        let edges: Vec<String> = (0..n.saturating_sub(1)).map(|i| format!("({i} {}) ({} {i})", i + 1, i + 1)).collect();
        let universe: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        parse_structure(&format!(
            "(structure (vocab (E 2)) (universe {}) (rel E {}))",
            universe.join(" "),
            edges.join(" ")
        ))
        .unwrap()
    }

    #[test]
    fn complement_of_an_induced_subgraph() {
        let c = builtin("complement", None).unwrap().scheme;
        let a = path(5);
        let b = a.induced_substructure([0, 1, 3]).unwrap();
        let report = check_substructure_preservation(&c, &a, &b).unwrap();
        assert!(report.holds());
        assert_eq!((report.image_size, report.sub_image_size), (5, 3));
        assert!(check_substructure_preservation(&c, &a, &a).unwrap().holds());
        let not_induced = parse_structure("(structure (vocab (E 2)) (universe 0 1))").unwrap();
        assert!(check_substructure_preservation(&c, &a, &not_induced).is_err());
    }

    #[test]
    fn transfer_on_long_paths() {
        let mut reg = ClassRegistry::new();
        let c = builtin("complement", None).unwrap().scheme;
        let r = check_transfer(&mut reg, &path(7), &path(8), &c, 1, Logic::Fo).unwrap();
        assert_eq!(r.verdict, TransferVerdict::Holds);
        let r = check_transfer(&mut reg, &path(1), &path(8), &c, 2, Logic::Fo).unwrap();
        assert_eq!(r.verdict, TransferVerdict::Vacuous);
        let pairs =
            parse_scheme("(scheme (dim 2) (xi (x y) true) (rel E (a b c d) (and (atom E a c) (= b d))))").unwrap();
        let r = check_transfer(&mut reg, &path(9), &path(10), &pairs, 1, Logic::Fo).unwrap();
        assert_eq!(r.input_rank, 2);
        assert_ne!(r.verdict, TransferVerdict::Falsified);
        assert!(check_transfer(&mut reg, &path(2), &path(2), &pairs, 1, Logic::Mso).is_err());
    }

    #[test]
    fn witness_through_ordered_sum_of_words() {
        use crate::representations::rep_by_name;
        use crate::trees::parse_tree;
        let rep = rep_by_name("words", None).unwrap();
        let t = parse_tree("(node ∘ (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf b) (leaf b))").unwrap();
        let a = rep.str_image(&t);
        let flip = parse_scheme(
            "(scheme (dim 1) (xi (x) true) (rel <= (x y) (atom <= y x)) (rel P_a (x) (atom P_b x)) (rel P_b (x) (atom P_a x)))",
        )
        .unwrap();
        let mut reg = ClassRegistry::new();
        let w = ebsp_through_scheme(&a, &rep, &t, &flip, 1, Logic::Fo, &mut reg).unwrap();
        assert!(w.holds(), "{w:?}");
        assert_eq!(w.equivalent, Some(true));
        assert!(w.witness_image.size() <= a.size());
    }
}
