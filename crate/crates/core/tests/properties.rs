//! Property-based invariants for the combining algorithms, the text formats
//! and the evaluation pipeline.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xacml_analyzer::eval::combine;
use xacml_analyzer::model::{AttrCategory, CombiningAlgorithm, Decision, Fact, Request};
use xacml_analyzer::parser::{
    parse_domains, parse_policy_file, parse_request, serialize_domains, serialize_request,
    serialize_store,
};
use xacml_analyzer::testgen::{gen_domains, gen_store};

fn decision_strategy() -> impl Strategy<Value = Decision> {
    prop_oneof![
        Just(Decision::Permit),
        Just(Decision::Deny),
        Just(Decision::NotApplicable),
    ]
}

fn flip(d: Decision) -> Decision {
    match d {
        Decision::Permit => Decision::Deny,
        Decision::Deny => Decision::Permit,
        Decision::NotApplicable => Decision::NotApplicable,
    }
}

proptest! {
    #[test]
    fn do_is_the_dual_of_po(values in proptest::collection::vec(decision_strategy(), 1..8)) {
        let flipped: Vec<Decision> = values.iter().map(|&d| flip(d)).collect();
        prop_assert_eq!(
            combine(CombiningAlgorithm::DenyOverrides, &values),
            flip(combine(CombiningAlgorithm::PermitOverrides, &flipped))
        );
    }

    #[test]
    fn po_permits_iff_some_child_permits(values in proptest::collection::vec(decision_strategy(), 1..8)) {
        let result = combine(CombiningAlgorithm::PermitOverrides, &values);
        prop_assert_eq!(result == Decision::Permit, values.contains(&Decision::Permit));
        prop_assert_eq!(result == Decision::NotApplicable,
            values.iter().all(|&d| d == Decision::NotApplicable));
    }

    #[test]
    fn fa_takes_the_first_applicable(values in proptest::collection::vec(decision_strategy(), 1..8)) {
        let expected = values
            .iter()
            .copied()
            .find(|&d| d != Decision::NotApplicable)
            .unwrap_or(Decision::NotApplicable);
        prop_assert_eq!(combine(CombiningAlgorithm::FirstApplicable, &values), expected);
    }

    #[test]
    fn ooa_is_na_unless_exactly_one_applies(values in proptest::collection::vec(decision_strategy(), 1..8)) {
        let applicable = values.iter().filter(|&&d| d != Decision::NotApplicable).count();
        let result = combine(CombiningAlgorithm::OnlyOneApplicable, &values);
        prop_assert_eq!(result != Decision::NotApplicable, applicable == 1);
    }

    #[test]
    fn combining_is_insensitive_to_na_padding(
        values in proptest::collection::vec(decision_strategy(), 1..6),
        alg in prop_oneof![
            Just(CombiningAlgorithm::PermitOverrides),
            Just(CombiningAlgorithm::DenyOverrides),
            Just(CombiningAlgorithm::FirstApplicable),
            Just(CombiningAlgorithm::OnlyOneApplicable),
        ],
    ) {
        let mut padded = values.clone();
        padded.push(Decision::NotApplicable);
        prop_assert_eq!(combine(alg, &values), combine(alg, &padded));
    }

    #[test]
    fn store_text_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = gen_domains(&mut rng);
        let store = gen_store(&mut rng, &dom);
        let text = serialize_store(&store);
        let comps = parse_policy_file(&text, "prop")
            .expect("serialized store parses")
            .into_iter()
            .map(|p| p.component)
            .collect();
        let rebuilt = xacml_analyzer::build_store(comps, &dom).expect("rebuilds");
        prop_assert_eq!(text, serialize_store(&rebuilt));

        let dom_text = serialize_domains(&dom);
        let dom2 = parse_domains(&dom_text, "prop").expect("serialized domains parse");
        prop_assert_eq!(dom_text, serialize_domains(&dom2));
    }

    #[test]
    fn request_text_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = gen_domains(&mut rng);
        let mut q = Request::default();
        for cat in AttrCategory::ALL {
            for v in dom.sorted_values(cat) {
                if rand::Rng::random_bool(&mut rng, 0.4) {
                    q.facts.insert(Fact::Attr(cat, v));
                }
            }
        }
        if q.facts.is_empty() {
            let v = dom.sorted_values(AttrCategory::Subject)[0].clone();
            q.facts.insert(Fact::Attr(AttrCategory::Subject, v));
        }
        let text = serialize_request(&q);
        let q2 = parse_request(&text, "prop", &dom).expect("serialized request parses");
        prop_assert_eq!(text, serialize_request(&q2));
    }

    #[test]
    fn root_decision_agrees_between_engines(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = gen_domains(&mut rng);
        let store = gen_store(&mut rng, &dom);
        // One request per store keeps the property cheap; the acceptance
        // suite sweeps full spaces.
        let space = xacml_analyzer::analyzer::request_space(&dom);
        let q = &space[rand::Rng::random_range(&mut rng, 0..space.len())];
        let native = xacml_analyzer::eval::evaluate(&store, q, &dom);
        let lp = xacml_analyzer::analyzer::lp_evaluate(&store, &dom, q).expect("lp engine");
        prop_assert_eq!(native, lp);
    }
}
