//! Deterministic random generation of domains and policy trees for the
//! randomized test suites.

use rand::Rng;

use crate::model::{
    build_store, AllOf, AnyOf, AttrCategory, AttributeDomains, CombiningAlgorithm, Component,
    CondTerm, ConditionExpr, Effect, MatchExpr, Policy, PolicySet, PolicyStore, Rule, Target,
};

pub fn gen_domains<R: Rng>(rng: &mut R) -> AttributeDomains {
    let mut dom = AttributeDomains::new();
    let prefixes = ["s", "a", "r", "e"];
    for (cat, prefix) in AttrCategory::ALL.into_iter().zip(prefixes) {
        // Environments are sometimes left empty.
        let n = if cat == AttrCategory::Environment && rng.random_bool(0.5) {
            0
        } else {
            rng.random_range(1..=4)
        };
        dom.set_values(cat, (1..=n).map(|i| format!("{prefix}{i}")).collect());
    }
    let consts = ["c1", "c2", "c3"];
    let mut tuples = vec![vec![consts[rng.random_range(0..consts.len())].to_string()]];
    for k in consts {
        if rng.random_bool(0.5) {
            tuples.push(vec![k.to_string()]);
        }
    }
    dom.add_relation("flag", tuples);
    dom
}

fn gen_target<R: Rng>(rng: &mut R, dom: &AttributeDomains) -> Target {
    if rng.random_bool(0.5) {
        return Target::Null;
    }
    let cats: Vec<AttrCategory> = AttrCategory::ALL
        .into_iter()
        .filter(|c| !dom.values(*c).is_empty())
        .collect();
    if cats.is_empty() {
        return Target::Null;
    }
    let pick_match = |rng: &mut R| {
        let cat = cats[rng.random_range(0..cats.len())];
        let values = dom.sorted_values(cat);
        MatchExpr {
            category: cat,
            value: values[rng.random_range(0..values.len())].clone(),
        }
    };
    let anyofs = (0..rng.random_range(1..=2))
        .map(|_| AnyOf {
            allofs: (0..rng.random_range(1..=2))
                .map(|_| AllOf {
                    matches: (0..rng.random_range(1..=2)).map(|_| pick_match(rng)).collect(),
                })
                .collect(),
        })
        .collect();
    Target::AnyOfs(anyofs)
}

fn gen_condition<R: Rng>(rng: &mut R) -> ConditionExpr {
    let x = || CondTerm::Var("X".to_string());
    let kconst = |k: &str| CondTerm::Const(k.to_string());
    let pred = |arg: CondTerm| ConditionExpr::Pred {
        name: "flag".to_string(),
        arg,
    };
    match rng.random_range(0..10) {
        0 => pred(x()),
        1 => ConditionExpr::And(
            Box::new(pred(x())),
            Box::new(ConditionExpr::Ne(x(), kconst("c1"))),
        ),
        2 => ConditionExpr::Not(Box::new(pred(kconst("c2")))),
        3 => ConditionExpr::Or(
            Box::new(pred(kconst("c1"))),
            Box::new(ConditionExpr::And(
                Box::new(pred(x())),
                Box::new(ConditionExpr::Eq(x(), kconst("c3"))),
            )),
        ),
        _ => ConditionExpr::True,
    }
}

fn gen_alg<R: Rng>(rng: &mut R) -> CombiningAlgorithm {
    CombiningAlgorithm::ALL[rng.random_range(0..CombiningAlgorithm::ALL.len())]
}

/// A random well-formed store: a policy-set root, depth at most three and at
/// most ten rules.
pub fn gen_store<R: Rng>(rng: &mut R, dom: &AttributeDomains) -> PolicyStore {
    let mut comps: Vec<Component> = Vec::new();
    let mut rule_n = 0usize;
    let mut policy_n = 0usize;
    let max_rules = rng.random_range(1..=10);

    let mut gen_policy = |rng: &mut R, comps: &mut Vec<Component>, rule_n: &mut usize| {
        policy_n += 1;
        let pid = format!("p{policy_n}");
        let count = rng.random_range(1..=3.min(max_rules));
        let mut children = Vec::new();
        for _ in 0..count {
            if *rule_n >= max_rules && !children.is_empty() {
                break;
            }
            *rule_n += 1;
            let rid = format!("r{rule_n}");
            comps.push(Component::Rule(Rule {
                id: rid.clone(),
                effect: if rng.random_bool(0.5) {
                    Effect::Permit
                } else {
                    Effect::Deny
                },
                target: gen_target(rng, dom),
                condition: gen_condition(rng),
            }));
            children.push(rid);
        }
        comps.push(Component::Policy(Policy {
            id: pid.clone(),
            target: gen_target(rng, dom),
            children,
            comb: gen_alg(rng),
        }));
        pid
    };

    let mut root_children = Vec::new();
    let direct = rng.random_range(1..=2);
    for _ in 0..direct {
        if rule_n >= max_rules && !root_children.is_empty() {
            break;
        }
        if rng.random_bool(0.3) {
            // A nested policy set makes the tree three levels deep.
            let inner = rng.random_range(1..=2);
            let mut nested = Vec::new();
            for _ in 0..inner {
                if rule_n >= max_rules && !nested.is_empty() {
                    break;
                }
                nested.push(gen_policy(rng, &mut comps, &mut rule_n));
            }
            let sid = format!("ps{}", root_children.len() + 2);
            comps.push(Component::PolicySet(PolicySet {
                id: sid.clone(),
                target: gen_target(rng, dom),
                children: nested,
                comb: gen_alg(rng),
            }));
            root_children.push(sid);
        } else {
            root_children.push(gen_policy(rng, &mut comps, &mut rule_n));
        }
    }
    comps.push(Component::PolicySet(PolicySet {
        id: "ps1".to_string(),
        target: gen_target(rng, dom),
        children: root_children,
        comb: gen_alg(rng),
    }));
    build_store(comps, dom).expect("generated store is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generation_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let da = gen_domains(&mut a);
        let db = gen_domains(&mut b);
        assert_eq!(
            crate::parser::serialize_domains(&da),
            crate::parser::serialize_domains(&db)
        );
        let sa = gen_store(&mut a, &da);
        let sb = gen_store(&mut b, &db);
        assert_eq!(
            crate::parser::serialize_store(&sa),
            crate::parser::serialize_store(&sb)
        );
    }

    #[test]
    fn generated_stores_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let dom = gen_domains(&mut rng);
            let store = gen_store(&mut rng, &dom);
            assert!(store.rule_ids().len() <= 10);
        }
    }
}
