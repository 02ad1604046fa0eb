//! Deterministic internal identifiers for target/condition sub-structure.
//!
//! Both the logic-program emitter and the direct evaluator's trace use the
//! same names, assigned by a single pre-order traversal of the store.

use std::collections::BTreeMap;

use crate::model::{Component, ConditionExpr, PolicyStore, Target};

pub const NULL_TARGET_ID: &str = "null";
pub const TRUE_COND_ID: &str = "cond_true";

#[derive(Debug, Clone)]
pub struct AllOfIds {
    pub id: String,
    pub matches: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnyOfIds {
    pub id: String,
    pub allofs: Vec<AllOfIds>,
}

#[derive(Debug, Clone)]
pub struct TargetIds {
    /// "null" for the empty target, otherwise a fresh target_k.
    pub id: String,
    pub anyofs: Vec<AnyOfIds>,
}

/// Internal ids for every component's target and condition.
#[derive(Debug, Clone, Default)]
pub struct ComponentIds {
    pub targets: BTreeMap<String, TargetIds>,
    pub conditions: BTreeMap<String, String>,
}

impl ComponentIds {
    pub fn assign(store: &PolicyStore) -> ComponentIds {
        let mut ids = ComponentIds::default();
        let mut counters = Counters::default();
        for cid in store.preorder_ids() {
            let c = store.get(&cid).expect("store invariant");
            ids.targets
                .insert(cid.clone(), assign_target(c.target(), &mut counters));
            if let Component::Rule(r) = c {
                let cond_id = if r.condition == ConditionExpr::True {
                    TRUE_COND_ID.to_string()
                } else {
                    counters.fresh("cond")
                };
                ids.conditions.insert(cid, cond_id);
            }
        }
        ids
    }

    pub fn target_id(&self, component_id: &str) -> &str {
        &self.targets[component_id].id
    }

    pub fn condition_id(&self, rule_id: &str) -> &str {
        &self.conditions[rule_id]
    }
}

#[derive(Default)]
struct Counters {
    counts: BTreeMap<&'static str, usize>,
}

impl Counters {
    fn fresh(&mut self, prefix: &'static str) -> String {
        let n = self.counts.entry(prefix).or_insert(0);
        *n += 1;
        format!("{prefix}_{n}")
    }
}

fn assign_target(target: &Target, counters: &mut Counters) -> TargetIds {
    match target {
        Target::Null => TargetIds {
            id: NULL_TARGET_ID.to_string(),
            anyofs: Vec::new(),
        },
        Target::AnyOfs(anyofs) => {
            let id = counters.fresh("target");
            let anyofs = anyofs
                .iter()
                .map(|anyof| {
                    let id = counters.fresh("anyof");
                    let allofs = anyof
                        .allofs
                        .iter()
                        .map(|allof| {
                            let id = counters.fresh("allof");
                            let matches = allof
                                .matches
                                .iter()
                                .map(|_| counters.fresh("match"))
                                .collect();
                            AllOfIds { id, matches }
                        })
                        .collect();
                    AnyOfIds { id, allofs }
                })
                .collect();
            TargetIds { id, anyofs }
        }
    }
}
