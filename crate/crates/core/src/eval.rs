//! Direct bottom-up evaluator for the policy semantics and the four
//! combining algorithms. This is the ground-truth oracle for the
//! logic-program pipeline.

use std::collections::{BTreeMap, BTreeSet};

use crate::ids::ComponentIds;
use crate::model::{
    AttributeDomains, CombiningAlgorithm, Component, CondTerm, CondValue, ConditionExpr, Decision,
    MatchExpr, MatchValue, PolicyStore, Request, Target,
};

pub fn eval_match(m: &MatchExpr, q: &Request) -> MatchValue {
    if q.contains_attr(m.category, &m.value) {
        MatchValue::Match
    } else {
        MatchValue::NoMatch
    }
}

pub fn eval_target(t: &Target, q: &Request) -> MatchValue {
    match t {
        Target::Null => MatchValue::Match,
        Target::AnyOfs(anyofs) => {
            let all_match = anyofs.iter().all(|anyof| {
                anyof.allofs.iter().any(|allof| {
                    allof
                        .matches
                        .iter()
                        .all(|m| eval_match(m, q) == MatchValue::Match)
                })
            });
            if all_match {
                MatchValue::Match
            } else {
                MatchValue::NoMatch
            }
        }
    }
}

/// Existential satisfiability of the condition formula: true iff some
/// assignment of its variables to constants satisfies the formula against
/// the request facts and the domain relations.
///
/// Predicate names must be declared relations (enforced by `build_store`);
/// an unknown name evaluates as an empty relation here.
pub fn eval_condition(c: &ConditionExpr, q: &Request, dom: &AttributeDomains) -> CondValue {
    if *c == ConditionExpr::True {
        return CondValue::True;
    }
    let vars: Vec<String> = c.variables().into_iter().collect();
    let universe = condition_universe(c, q, dom);
    let mut assignment: BTreeMap<&str, &str> = BTreeMap::new();
    if satisfiable(c, q, dom, &vars, &universe, 0, &mut assignment) {
        CondValue::True
    } else {
        CondValue::False
    }
}

/// Constants a condition variable can range over: formula constants,
/// relation tuple constants and request external-state values.
fn condition_universe(c: &ConditionExpr, q: &Request, dom: &AttributeDomains) -> Vec<String> {
    let mut out: BTreeSet<String> = dom.relation_constants();
    collect_formula_consts(c, &mut out);
    for fact in &q.facts {
        if let crate::model::Fact::External(_, args) = fact {
            out.extend(args.iter().cloned());
        }
    }
    out.into_iter().collect()
}

fn collect_formula_consts(c: &ConditionExpr, out: &mut BTreeSet<String>) {
    match c {
        ConditionExpr::True => {}
        ConditionExpr::Pred { arg, .. } => {
            if let CondTerm::Const(k) = arg {
                out.insert(k.clone());
            }
        }
        ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
            collect_formula_consts(a, out);
            collect_formula_consts(b, out);
        }
        ConditionExpr::Not(a) => collect_formula_consts(a, out),
        ConditionExpr::Eq(a, b) | ConditionExpr::Ne(a, b) => {
            for t in [a, b] {
                if let CondTerm::Const(k) = t {
                    out.insert(k.clone());
                }
            }
        }
    }
}

fn satisfiable<'a>(
    c: &ConditionExpr,
    q: &Request,
    dom: &AttributeDomains,
    vars: &'a [String],
    universe: &'a [String],
    depth: usize,
    assignment: &mut BTreeMap<&'a str, &'a str>,
) -> bool {
    if depth == vars.len() {
        return holds(c, q, dom, assignment);
    }
    for value in universe {
        assignment.insert(&vars[depth], value);
        if satisfiable(c, q, dom, vars, universe, depth + 1, assignment) {
            assignment.remove(vars[depth].as_str());
            return true;
        }
    }
    assignment.remove(vars[depth].as_str());
    false
}

fn holds(
    c: &ConditionExpr,
    q: &Request,
    dom: &AttributeDomains,
    assignment: &BTreeMap<&str, &str>,
) -> bool {
    match c {
        ConditionExpr::True => true,
        ConditionExpr::Pred { name, arg } => {
            let v = ground(arg, assignment);
            dom.relation_holds(name, v) || q.external_values(name).any(|x| x == v)
        }
        ConditionExpr::And(a, b) => {
            holds(a, q, dom, assignment) && holds(b, q, dom, assignment)
        }
        ConditionExpr::Or(a, b) => holds(a, q, dom, assignment) || holds(b, q, dom, assignment),
        ConditionExpr::Not(a) => !holds(a, q, dom, assignment),
        ConditionExpr::Eq(a, b) => ground(a, assignment) == ground(b, assignment),
        ConditionExpr::Ne(a, b) => ground(a, assignment) != ground(b, assignment),
    }
}

fn ground<'a>(t: &'a CondTerm, assignment: &BTreeMap<&str, &'a str>) -> &'a str {
    match t {
        CondTerm::Const(k) => k,
        CondTerm::Var(v) => assignment
            .get(v.as_str())
            .expect("variable bound during enumeration"),
    }
}

pub fn eval_rule(r: &crate::model::Rule, q: &Request, dom: &AttributeDomains) -> Decision {
    if eval_target(&r.target, q) == MatchValue::Match
        && eval_condition(&r.condition, q, dom) == CondValue::True
    {
        r.effect.decision()
    } else {
        Decision::NotApplicable
    }
}

/// Collapses an ordered decision list with the given combining algorithm.
pub fn combine(alg: CombiningAlgorithm, values: &[Decision]) -> Decision {
    match alg {
        CombiningAlgorithm::PermitOverrides => {
            if values.contains(&Decision::Permit) {
                Decision::Permit
            } else if values.contains(&Decision::Deny) {
                Decision::Deny
            } else {
                Decision::NotApplicable
            }
        }
        CombiningAlgorithm::DenyOverrides => {
            if values.contains(&Decision::Deny) {
                Decision::Deny
            } else if values.contains(&Decision::Permit) {
                Decision::Permit
            } else {
                Decision::NotApplicable
            }
        }
        CombiningAlgorithm::FirstApplicable => values
            .iter()
            .copied()
            .find(|v| *v != Decision::NotApplicable)
            .unwrap_or(Decision::NotApplicable),
        CombiningAlgorithm::OnlyOneApplicable => {
            let mut applicable = values.iter().copied().filter(|v| *v != Decision::NotApplicable);
            match (applicable.next(), applicable.next()) {
                (Some(v), None) => v,
                _ => Decision::NotApplicable,
            }
        }
    }
}

fn eval_container(
    store: &PolicyStore,
    target: &Target,
    children: &[String],
    comb: CombiningAlgorithm,
    q: &Request,
    dom: &AttributeDomains,
) -> Decision {
    if eval_target(target, q) == MatchValue::NoMatch {
        return Decision::NotApplicable;
    }
    let child_values: Vec<Decision> = children
        .iter()
        .map(|id| eval_component(store, id, q, dom))
        .collect();
    if child_values.iter().all(|v| *v == Decision::NotApplicable) {
        return Decision::NotApplicable;
    }
    combine(comb, &child_values)
}

pub fn eval_policy(
    store: &PolicyStore,
    p: &crate::model::Policy,
    q: &Request,
    dom: &AttributeDomains,
) -> Decision {
    eval_container(store, &p.target, &p.children, p.comb, q, dom)
}

pub fn eval_policyset(
    store: &PolicyStore,
    ps: &crate::model::PolicySet,
    q: &Request,
    dom: &AttributeDomains,
) -> Decision {
    eval_container(store, &ps.target, &ps.children, ps.comb, q, dom)
}

fn eval_component(store: &PolicyStore, id: &str, q: &Request, dom: &AttributeDomains) -> Decision {
    match store.get(id).expect("store invariant") {
        Component::Rule(r) => eval_rule(r, q, dom),
        Component::Policy(p) => eval_policy(store, p, q, dom),
        Component::PolicySet(ps) => eval_policyset(store, ps, q, dom),
    }
}

/// Evaluates the root policy set.
pub fn evaluate(store: &PolicyStore, q: &Request, dom: &AttributeDomains) -> Decision {
    eval_component(store, store.root_id(), q, dom)
}

/// Decision of one named component.
pub fn evaluate_component(
    store: &PolicyStore,
    id: &str,
    q: &Request,
    dom: &AttributeDomains,
) -> Decision {
    eval_component(store, id, q, dom)
}

/// Values of every component and internal sub-component, keyed by the same
/// identifiers the logic-program emitter uses. Covers matches, allofs,
/// anyofs, targets, conditions, rules, policies and policy sets.
pub type Trace = BTreeMap<String, String>;

pub fn evaluate_trace(
    store: &PolicyStore,
    ids: &ComponentIds,
    q: &Request,
    dom: &AttributeDomains,
) -> Trace {
    let mut out = BTreeMap::new();
    for cid in store.preorder_ids() {
        let c = store.get(&cid).expect("store invariant");
        let tids = &ids.targets[&cid];
        if let Target::AnyOfs(anyofs) = c.target() {
            for (anyof, aids) in anyofs.iter().zip(&tids.anyofs) {
                for (allof, lids) in anyof.allofs.iter().zip(&aids.allofs) {
                    for (m, mid) in allof.matches.iter().zip(&lids.matches) {
                        out.insert(mid.clone(), eval_match(m, q).token().to_string());
                    }
                    let v = if allof
                        .matches
                        .iter()
                        .all(|m| eval_match(m, q) == MatchValue::Match)
                    {
                        MatchValue::Match
                    } else {
                        MatchValue::NoMatch
                    };
                    out.insert(lids.id.clone(), v.token().to_string());
                }
                let v = if anyof.allofs.iter().any(|allof| {
                    allof
                        .matches
                        .iter()
                        .all(|m| eval_match(m, q) == MatchValue::Match)
                }) {
                    MatchValue::Match
                } else {
                    MatchValue::NoMatch
                };
                out.insert(aids.id.clone(), v.token().to_string());
            }
        }
        out.insert(
            tids.id.clone(),
            eval_target(c.target(), q).token().to_string(),
        );
        if let Component::Rule(r) = c {
            out.insert(
                ids.condition_id(&cid).to_string(),
                eval_condition(&r.condition, q, dom).token().to_string(),
            );
        }
        out.insert(cid.clone(), eval_component(store, &cid, q, dom).token().to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_store, AllOf, AnyOf, AttrCategory, Component, Effect, Fact, Policy, PolicySet, Rule,
    };
    use Decision::{Deny as D, NotApplicable as Na, Permit as P};

    fn m(cat: AttrCategory, v: &str) -> MatchExpr {
        MatchExpr {
            category: cat,
            value: v.to_string(),
        }
    }

    fn req(pairs: &[(AttrCategory, &str)]) -> Request {
        Request::new(pairs.iter().map(|(c, v)| Fact::Attr(*c, v.to_string())))
    }

    #[test]
    fn match_membership() {
        let q = req(&[(AttrCategory::Subject, "doctor"), (AttrCategory::Action, "read")]);
        assert_eq!(
            eval_match(&m(AttrCategory::Subject, "doctor"), &q),
            MatchValue::Match
        );
        assert_eq!(
            eval_match(&m(AttrCategory::Subject, "nurse"), &q),
            MatchValue::NoMatch
        );
        assert_eq!(
            eval_match(&m(AttrCategory::Subject, "doctor"), &Request::default()),
            MatchValue::NoMatch
        );
    }

    #[test]
    fn target_null_always_matches() {
        assert_eq!(eval_target(&Target::Null, &Request::default()), MatchValue::Match);
    }

    #[test]
    fn target_conjunction_and_disjunction() {
        // subject(doctor) & action(read) vs {subject(doctor)} -> nm
        let conj = Target::AnyOfs(vec![AnyOf {
            allofs: vec![AllOf {
                matches: vec![m(AttrCategory::Subject, "doctor"), m(AttrCategory::Action, "read")],
            }],
        }]);
        assert_eq!(
            eval_target(&conj, &req(&[(AttrCategory::Subject, "doctor")])),
            MatchValue::NoMatch
        );
        // subject(doctor) | subject(nurse) vs {subject(nurse)} -> m
        let disj = Target::AnyOfs(vec![AnyOf {
            allofs: vec![
                AllOf {
                    matches: vec![m(AttrCategory::Subject, "doctor")],
                },
                AllOf {
                    matches: vec![m(AttrCategory::Subject, "nurse")],
                },
            ],
        }]);
        assert_eq!(
            eval_target(&disj, &req(&[(AttrCategory::Subject, "nurse")])),
            MatchValue::Match
        );
    }

    fn relation_dom(record_id: &str) -> AttributeDomains {
        let mut dom = AttributeDomains::new();
        dom.relations.insert(
            "patient_id".to_string(),
            [vec!["id5".to_string()]].into_iter().collect(),
        );
        dom.relations.insert(
            "patient_record_id".to_string(),
            [vec![record_id.to_string()]].into_iter().collect(),
        );
        dom
    }

    fn record_condition() -> ConditionExpr {
        ConditionExpr::And(
            Box::new(ConditionExpr::Pred {
                name: "patient_id".to_string(),
                arg: CondTerm::Var("X".to_string()),
            }),
            Box::new(ConditionExpr::Pred {
                name: "patient_record_id".to_string(),
                arg: CondTerm::Var("X".to_string()),
            }),
        )
    }

    #[test]
    fn condition_record_example() {
        let q = Request::default();
        assert_eq!(
            eval_condition(&record_condition(), &q, &relation_dom("id5")),
            CondValue::True
        );
        // Brute force over X in {id5, id7}: no shared value.
        assert_eq!(
            eval_condition(&record_condition(), &q, &relation_dom("id7")),
            CondValue::False
        );
        assert_eq!(
            eval_condition(&ConditionExpr::True, &q, &AttributeDomains::new()),
            CondValue::True
        );
    }

    #[test]
    fn rule_cases() {
        let dom = relation_dom("id5");
        let permit_all = Rule {
            id: "r".to_string(),
            effect: Effect::Permit,
            target: Target::Null,
            condition: ConditionExpr::True,
        };
        assert_eq!(eval_rule(&permit_all, &Request::default(), &dom), P);

        let deny_doctor = Rule {
            id: "r".to_string(),
            effect: Effect::Deny,
            target: Target::AnyOfs(vec![AnyOf {
                allofs: vec![AllOf {
                    matches: vec![m(AttrCategory::Subject, "doctor")],
                }],
            }]),
            condition: ConditionExpr::True,
        };
        assert_eq!(
            eval_rule(&deny_doctor, &req(&[(AttrCategory::Subject, "nurse")]), &dom),
            Na
        );

        // Matching target but unsatisfiable condition: p(X) and X != X.
        let unsat = Rule {
            id: "r".to_string(),
            effect: Effect::Permit,
            target: Target::Null,
            condition: ConditionExpr::And(
                Box::new(ConditionExpr::Pred {
                    name: "patient_id".to_string(),
                    arg: CondTerm::Var("X".to_string()),
                }),
                Box::new(ConditionExpr::Ne(
                    CondTerm::Var("X".to_string()),
                    CondTerm::Var("X".to_string()),
                )),
            ),
        };
        assert_eq!(eval_rule(&unsat, &Request::default(), &dom), Na);
    }

    #[test]
    fn combine_reference_cases() {
        assert_eq!(combine(CombiningAlgorithm::PermitOverrides, &[D, P, Na]), P);
        assert_eq!(combine(CombiningAlgorithm::DenyOverrides, &[P, D]), D);
        assert_eq!(combine(CombiningAlgorithm::FirstApplicable, &[Na, D, P]), D);
        assert_eq!(combine(CombiningAlgorithm::OnlyOneApplicable, &[P, D]), Na);
        for alg in CombiningAlgorithm::ALL {
            assert_eq!(combine(alg, &[Na, Na, Na]), Na);
        }
    }

    fn two_rule_store(e1: Effect, e2: Effect, comb: CombiningAlgorithm) -> (PolicyStore, AttributeDomains) {
        let mut dom = AttributeDomains::new();
        dom.set_values(AttrCategory::Subject, vec!["doctor".to_string()]);
        let comps = vec![
            Component::Rule(Rule {
                id: "r1".to_string(),
                effect: e1,
                target: Target::Null,
                condition: ConditionExpr::True,
            }),
            Component::Rule(Rule {
                id: "r2".to_string(),
                effect: e2,
                target: Target::Null,
                condition: ConditionExpr::True,
            }),
            Component::Policy(Policy {
                id: "p1".to_string(),
                target: Target::Null,
                children: vec!["r1".to_string(), "r2".to_string()],
                comb,
            }),
            Component::PolicySet(PolicySet {
                id: "ps1".to_string(),
                target: Target::Null,
                children: vec!["p1".to_string()],
                comb: CombiningAlgorithm::PermitOverrides,
            }),
        ];
        (build_store(comps, &dom).unwrap(), dom)
    }

    #[test]
    fn policy_and_policyset_cases() {
        // policy[null, <r1:d, r2:p>, do] -> d, hand evaluation of the
        // otherwise branch feeding the deny-overrides case split.
        let (store, dom) = two_rule_store(Effect::Deny, Effect::Permit, CombiningAlgorithm::DenyOverrides);
        assert_eq!(evaluate(&store, &Request::default(), &dom), D);

        // root[null, <p1:p, p2:d>, ooa] -> na is covered by combine tests;
        // single applicable child under ooa propagates.
        let (store, dom) = two_rule_store(Effect::Permit, Effect::Permit, CombiningAlgorithm::PermitOverrides);
        assert_eq!(evaluate(&store, &Request::default(), &dom), P);
    }

    #[test]
    fn policy_target_nm_is_na_regardless_of_children() {
        let mut dom = AttributeDomains::new();
        dom.set_values(AttrCategory::Subject, vec!["doctor".to_string(), "nurse".to_string()]);
        let comps = vec![
            Component::Rule(Rule {
                id: "r1".to_string(),
                effect: Effect::Permit,
                target: Target::Null,
                condition: ConditionExpr::True,
            }),
            Component::Policy(Policy {
                id: "p1".to_string(),
                target: Target::AnyOfs(vec![AnyOf {
                    allofs: vec![AllOf {
                        matches: vec![m(AttrCategory::Subject, "doctor")],
                    }],
                }]),
                children: vec!["r1".to_string()],
                comb: CombiningAlgorithm::PermitOverrides,
            }),
            Component::PolicySet(PolicySet {
                id: "ps1".to_string(),
                target: Target::Null,
                children: vec!["p1".to_string()],
                comb: CombiningAlgorithm::PermitOverrides,
            }),
        ];
        let store = build_store(comps, &dom).unwrap();
        assert_eq!(
            evaluate(&store, &req(&[(AttrCategory::Subject, "nurse")]), &dom),
            Na
        );
        assert_eq!(
            evaluate(&store, &req(&[(AttrCategory::Subject, "doctor")]), &dom),
            P
        );
    }
}
