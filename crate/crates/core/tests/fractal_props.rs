use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ebsp_core::fractal::{fractal_chain, ScalePlan};
use ebsp_core::gen::random_tree_of_size;
use ebsp_core::kernelize::Kernelizer;
use ebsp_core::logic::Logic;
use ebsp_core::representations::rep_by_name;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_plans_give_one_embedded_equivalent_element_per_scale(seed in any::<u64>(), repr in prop::sample::select(vec!["words", "ranked-trees", "cograph"]), size in 8usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = rep_by_name(repr, None).unwrap();
        let t = random_tree_of_size(&mut rng, rep.alphabet(), size);
        let mut k = Kernelizer::new(rep, 1, Logic::Fo);
        let plan = ScalePlan::fitted(&mut k, &t).unwrap();
        let chain = fractal_chain(&mut k, &t, &plan, 1).unwrap();
        prop_assert!(chain.covers_all_scales());
        prop_assert!(chain.gaps_within_bounds());
        let mut last = chain.input_size;
        for e in &chain.elements {
            prop_assert!(e.embeds);
            prop_assert_eq!(e.equivalent, Some(true));
            prop_assert!(e.size < last);
            prop_assert_eq!(plan.scale_of(e.size), e.scale);
            last = e.size;
        }
    }
}
