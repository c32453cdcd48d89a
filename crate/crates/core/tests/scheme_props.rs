use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ebsp_core::gen::{random_formula, random_graph, random_scheme};
use ebsp_core::logic::{evaluate, Assignment, Logic};
use ebsp_core::transducers::{
    builtin, check_substructure_preservation, check_transfer, SchemeError, TransferVerdict, BUILTIN_NAMES,
};
use ebsp_core::ClassRegistry;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pulled_back_sentences_hold_exactly_on_the_source(seed in any::<u64>(), dim in 1usize..3, rank in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let a = random_graph(&mut rng, n, 0.5);
        let scheme = random_scheme(&mut rng, a.vocab(), dim, &[("E", 2)]);
        let image = match scheme.apply(&a) {
            Ok(image) => image.structure,
            Err(SchemeError::EmptyImage) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let phi = random_formula(&mut rng, image.vocab(), rank, Logic::Fo, &[]);
        let pulled = scheme.apply_formula(&phi).unwrap();
        let asg = Assignment::new();
        prop_assert_eq!(evaluate(&image, &phi, &asg).unwrap(), evaluate(&a, &pulled, &asg).unwrap());
    }

    #[test]
    fn induced_substructures_map_to_induced_substructures(seed in any::<u64>(), dim in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let a = random_graph(&mut rng, n, 0.5);
        let keep: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        prop_assume!(!keep.is_empty());
        let b = a.induced_substructure(keep).unwrap();
        let scheme = random_scheme(&mut rng, a.vocab(), dim, &[("E", 2)]);
        match check_substructure_preservation(&scheme, &a, &b) {
            Ok(report) => prop_assert!(report.holds()),
            Err(SchemeError::EmptyImage) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn transfer_is_never_falsified(seed in any::<u64>(), dim in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, k) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let a = random_graph(&mut rng, n, 0.5);
        let b = random_graph(&mut rng, k, 0.5);
        let scheme = random_scheme(&mut rng, a.vocab(), dim, &[("E", 2)]);
        let mut reg = ClassRegistry::new();
        match check_transfer(&mut reg, &a, &b, &scheme, 1, Logic::Fo) {
            Ok(report) => prop_assert_ne!(report.verdict, TransferVerdict::Falsified),
            Err(SchemeError::EmptyImage) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn builtins_apply_to_graphs(seed in any::<u64>(), which in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graph(&mut rng, 3, 0.5);
        let b = random_graph(&mut rng, 2, 0.5);
        let name = BUILTIN_NAMES[which];
        if name == "ordered-sum" {
            prop_assert!(builtin(name, Some(a.vocab())).is_err());
            return Ok(());
        }
        let op = builtin(name, Some(a.vocab())).unwrap();
        let parts = if op.arity == 1 { vec![&a] } else { vec![&a, &b] };
        let image = match op.apply(&parts) {
            Ok(image) => image,
            Err(SchemeError::EmptyImage) => {
                prop_assert!(name == "line-graph" && a.tuple_count() == 0);
                return Ok(());
            }
            Err(e) => panic!("{e}"),
        };
        prop_assert!(image.validate().is_empty());
        if op.sum_like() && op.arity == 2 {
            prop_assert_eq!(image.size(), 5);
        }
    }
}
