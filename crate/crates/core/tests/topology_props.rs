use ctp_core::gen::{self, mutate, GenProfile, Mutation, Shape};
use ctp_core::topology::witness_is_valid;
use ctp_core::{classify_system, DelayDomain, Status};
use proptest::prelude::*;

fn profiles() -> impl Strategy<Value = GenProfile> {
    (
        prop_oneof![
            Just(Shape::Polytree),
            Just(Shape::Polyforest),
            Just(Shape::StarIn),
            Just(Shape::StarOut),
            Just(Shape::Free),
        ],
        prop_oneof![Just(DelayDomain::Tick), Just(DelayDomain::Dense)],
        0usize..3,
    )
        .prop_map(|(shape, flavor, testable)| GenProfile {
            flavor,
            testable,
            processes: (1, 4),
            ..GenProfile::tick(shape)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn adding_a_test_never_helps(p in profiles(), seed in 0u64..5000, mseed in 0u64..100) {
        if let Ok(sys) = gen::generate(&p, seed) {
            if let Some(more) = mutate(&sys, Mutation::AddTestable, mseed) {
                prop_assert!(classify_system(&more).status >= classify_system(&sys).status);
            }
        }
    }

    #[test]
    fn removing_a_test_never_hurts(p in profiles(), seed in 0u64..5000, mseed in 0u64..100) {
        if let Ok(sys) = gen::generate(&p, seed) {
            if let Some(fewer) = mutate(&sys, Mutation::RemoveTestable, mseed) {
                prop_assert!(classify_system(&fewer).status <= classify_system(&sys).status);
            }
        }
    }

    #[test]
    fn closing_a_cycle_is_undecidable(p in profiles(), seed in 0u64..5000, mseed in 0u64..100) {
        if let Ok(sys) = gen::generate(&p, seed) {
            if let Some(cyc) = mutate(&sys, Mutation::AddCycleEdge, mseed) {
                prop_assert_eq!(classify_system(&cyc).status, Status::Undecidable);
            }
        }
    }

    #[test]
    fn undecidable_verdicts_carry_valid_witnesses(p in profiles(), seed in 0u64..5000) {
        if let Ok(sys) = gen::generate(&p, seed) {
            let v = classify_system(&sys);
            if v.status == Status::Undecidable {
                prop_assert!(!v.reasons.is_empty());
                for r in &v.reasons {
                    prop_assert!(witness_is_valid(&sys.topology, r), "{r:?}");
                }
            }
        }
    }

    #[test]
    fn generated_polyforests_without_tests_are_decidable(seed in 0u64..5000, dense in any::<bool>()) {
        let p = if dense { GenProfile::dense(Shape::Polyforest) } else { GenProfile::tick(Shape::Polyforest) };
        if let Ok(sys) = gen::generate(&p, seed) {
            prop_assert_eq!(classify_system(&sys).status, Status::Decidable);
        }
    }
}
