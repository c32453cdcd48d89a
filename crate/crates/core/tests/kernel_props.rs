use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ebsp_core::gen::{random_formula, random_tree};
use ebsp_core::kernelize::Kernelizer;
use ebsp_core::kernelize::{ebsp_witness, evaluate_fpt};
use ebsp_core::logic::{evaluate, Assignment, Logic};
use ebsp_core::representations::{rep_by_name, REPRESENTATION_NAMES};
use ebsp_core::{equivalent, ClassRegistry};

fn rep(which: usize) -> ebsp_core::representations::Rep {
    rep_by_name(&REPRESENTATION_NAMES[which].replace("<n>", "2"), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_are_equivalent_embedded_and_bounded(seed in any::<u64>(), which in 0usize..6, m in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = rep(which);
        let t = random_tree(&mut rng, rep.alphabet(), 24);
        let a = rep.str_image(&t);
        let mut reg = ClassRegistry::new();
        let w = ebsp_witness(&a, &rep, &t, m, Logic::Fo, &mut reg).unwrap();
        prop_assert!(w.in_class && w.induced && w.within_size_bound);
        prop_assert_eq!(w.equivalent, Some(true));
        prop_assert!(w.kernel.report.within_bounds());
        let b = rep.str_image(&w.kernel.tree);
        prop_assert!(equivalent(&mut reg, &a, &b, m, Logic::Fo).unwrap());
    }

    #[test]
    fn kernelization_is_idempotent(seed in any::<u64>(), which in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = rep(which);
        let t = random_tree(&mut rng, rep.alphabet(), 24);
        let mut k = Kernelizer::new(rep, 1, Logic::Fo);
        let once = k.kernelize(&t).unwrap();
        let twice = k.kernelize(&once.tree).unwrap();
        prop_assert_eq!(&twice.tree, &once.tree);
        prop_assert_eq!(twice.report.degree_cuts + twice.report.height_replacements, 0);
        prop_assert!(once.tree.size() <= t.size());
    }

    #[test]
    fn kernel_evaluation_matches_direct_evaluation(seed in any::<u64>(), which in 0usize..6, m in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = rep(which);
        let t = random_tree(&mut rng, rep.alphabet(), 20);
        let a = rep.str_image(&t);
        let phi = random_formula(&mut rng, a.vocab(), m, Logic::Fo, &[]);
        let answer = evaluate_fpt(&t, &rep, &phi).unwrap();
        prop_assert_eq!(answer.value, evaluate(&a, &phi, &Assignment::new()).unwrap(), "{}", phi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mso_kernels_of_small_trees_are_equivalent(seed in any::<u64>(), which in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = rep(which);
        let t = random_tree(&mut rng, rep.alphabet(), 8);
        let a = rep.str_image(&t);
        let mut reg = ClassRegistry::with_budget(ebsp_core::equivalence::Budget { max_work: 2_000_000_000, ..Default::default() });
        let w = ebsp_witness(&a, &rep, &t, 1, Logic::Mso, &mut reg).unwrap();
        prop_assert!(w.holds());
        prop_assert_eq!(w.equivalent, Some(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_respect_wider_composition_degree(seed in any::<u64>(), m in 1usize..3) {
        let alphabet = ebsp_core::trees::parse_alphabet("(alphabet (int ∘ g) (leaf a b) (rho (∘ 3) (g 4)))").unwrap();
        let rep = ebsp_core::representations::rep_partially_ranked(alphabet);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, rep.alphabet(), 30);
        let a = rep.str_image(&t);
        let mut reg = ClassRegistry::new();
        let w = ebsp_witness(&a, &rep, &t, m, Logic::Fo, &mut reg).unwrap();
        prop_assert!(w.holds());
        prop_assert_eq!(w.equivalent, Some(true));
    }
}
