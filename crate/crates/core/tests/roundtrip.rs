use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ebsp_core::gen::{random_formula, random_scheme, random_structure, random_tree};
use ebsp_core::logic::{format_formula, parse_formula, Logic};
use ebsp_core::representations::{rep_by_name, REPRESENTATION_NAMES};
use ebsp_core::structure::{parse_structure, Vocabulary};
use ebsp_core::transducers::parse_scheme;
use ebsp_core::trees::{parse_alphabet, parse_tree};
use std::sync::Arc;

fn vocab() -> Arc<Vocabulary> {
    Arc::new(Vocabulary::new([("E", 2), ("P", 1), ("R", 3)]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn structures_survive_format_and_parse(seed in any::<u64>(), size in 1u32..7, density in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_structure(&mut rng, &vocab(), size, density);
        prop_assert_eq!(parse_structure(&a.format()).unwrap(), a);
    }

    #[test]
    fn formulas_survive_format_and_parse(seed in any::<u64>(), rank in 0usize..4, mso in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logic = if mso { Logic::Mso } else { Logic::Fo };
        let phi = random_formula(&mut rng, &vocab(), rank, logic, &["y".to_string()]);
        let back = parse_formula(&format_formula(&phi)).unwrap();
        prop_assert_eq!(back.rank(), rank);
        prop_assert_eq!(back, phi);
    }

    #[test]
    fn trees_survive_format_and_parse(seed in any::<u64>(), which in 0usize..6, nodes in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let name = REPRESENTATION_NAMES[which].replace("<n>", "2");
        let rep = rep_by_name(&name, None).unwrap();
        let t = random_tree(&mut rng, rep.alphabet(), nodes);
        prop_assert_eq!(parse_tree(&t.to_string()).unwrap(), t);
        prop_assert_eq!(parse_alphabet(&rep.alphabet().format()).unwrap(), rep.alphabet().clone());
    }

    #[test]
    fn schemes_survive_format_and_parse(seed in any::<u64>(), dim in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scheme(&mut rng, &vocab(), dim, &[("E", 2), ("Q", 1)]);
        prop_assert_eq!(parse_scheme(&s.format()).unwrap(), s);
    }
}
