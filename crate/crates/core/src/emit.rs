//! Compiles a policy store into a logic program: per-component value rules,
//! the combining-algorithm programs, and the generator/property programs for
//! the three analyses.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ids::{ComponentIds, TRUE_COND_ID};
use crate::lp::{Atom, BodyLit, ChoiceRule, CmpOp, LogicProgram, LpRule, Term};
use crate::model::{
    AttrCategory, AttributeDomains, CombiningAlgorithm, Component, CondTerm, ConditionExpr,
    PolicyStore, Target,
};

/// Analysis task selecting the generator and property program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisTask {
    Gap,
    Conflict,
    Reachability,
}

impl AnalysisTask {
    pub fn name(self) -> &'static str {
        match self {
            AnalysisTask::Gap => "gap",
            AnalysisTask::Conflict => "conflict",
            AnalysisTask::Reachability => "reachability",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("cannot generate requests: the {0} domain is empty but the store matches on it")]
    EmptyReferencedDomain(AttrCategory),
}

fn c(s: impl Into<String>) -> Term {
    Term::constant(s)
}

fn v(s: &str) -> Term {
    Term::var(s)
}

fn val(id: Term, value: Term) -> Atom {
    Atom::new("val", vec![id, value])
}

/// Transforms the whole store (P_XACML): component value rules, condition
/// evaluation rules, decision bridges and the combining-algorithm programs
/// for every algorithm in use.
pub fn transform_store(store: &PolicyStore, dom: &AttributeDomains) -> LogicProgram {
    let ids = ComponentIds::assign(store);
    let mut p = LogicProgram::default();

    let preorder = store.preorder_ids();
    let has_null_target = preorder
        .iter()
        .any(|id| matches!(store.get(id).expect("store invariant").target(), Target::Null));
    let has_true_cond = store.rules().any(|r| r.condition == ConditionExpr::True);

    if has_null_target {
        p.push_fact(val(c("null"), c("m")));
    }
    if has_true_cond {
        p.push_fact(val(c(TRUE_COND_ID), c("t")));
    }

    // Domain predicate for the combining programs: variables the algorithm
    // rules bind only under negation range over the container ids.
    for cid in &preorder {
        if !matches!(store.get(cid), Some(Component::Rule(_))) {
            p.push_fact(Atom::new("pol_id", vec![c(cid.clone())]));
        }
    }

    // Relation facts back condition evaluation.
    for (name, tuples) in &dom.relations {
        for tuple in tuples {
            p.push_fact(Atom::new(
                name.clone(),
                tuple.iter().map(|t| c(t.clone())).collect(),
            ));
        }
    }

    // Per-condition constant universes, for disjuncts whose variables no
    // positive literal binds.
    let mut guard_facts: Vec<Atom> = Vec::new();

    let mut body_rules: Vec<LpRule> = Vec::new();
    for cid in &preorder {
        let comp = store.get(cid).expect("store invariant");
        emit_target(&ids, cid, comp.target(), &mut body_rules);
        match comp {
            Component::Rule(r) => {
                emit_condition(&ids, r, dom, &mut body_rules, &mut guard_facts);
                emit_rule(&ids, r, &mut body_rules);
            }
            Component::Policy(_) | Component::PolicySet(_) => {
                emit_container(&ids, cid, comp, &mut body_rules);
            }
        }
    }

    for fact in guard_facts {
        p.push_fact(fact);
    }
    for rule in body_rules {
        p.push_rule(rule);
    }

    // Combining-algorithm programs for the algorithms actually used.
    let used: BTreeSet<CombiningAlgorithm> = store
        .components()
        .iter()
        .filter_map(|comp| match comp {
            Component::Policy(pl) => Some(pl.comb),
            Component::PolicySet(ps) => Some(ps.comb),
            Component::Rule(_) => None,
        })
        .collect();
    for alg in CombiningAlgorithm::ALL {
        if used.contains(&alg) {
            for rule in transform_combining(alg) {
                p.push_rule(rule);
            }
        }
    }

    // Declared universe: attribute values, component and internal ids,
    // value constants. Everything else is collected from the rules.
    for cat in AttrCategory::ALL {
        p.universe.extend(dom.values(cat).iter().cloned());
    }
    p.universe.extend(dom.relation_constants());
    p.close_universe();
    p
}

fn emit_target(ids: &ComponentIds, cid: &str, target: &Target, out: &mut Vec<LpRule>) {
    let Target::AnyOfs(anyofs) = target else {
        return; // the shared val(null, m) fact covers Null
    };
    let tids = &ids.targets[cid];
    for (anyof, aids) in anyofs.iter().zip(&tids.anyofs) {
        for (allof, lids) in anyof.allofs.iter().zip(&aids.allofs) {
            for (m, mid) in allof.matches.iter().zip(&lids.matches) {
                let attr = Atom::new(m.category.keyword(), vec![c(m.value.clone())]);
                out.push(LpRule::rule(
                    val(c(mid.clone()), c("m")),
                    vec![BodyLit::Pos(attr.clone())],
                ));
                out.push(LpRule::rule(
                    val(c(mid.clone()), c("nm")),
                    vec![BodyLit::Neg(attr)],
                ));
            }
            // AllOf: conjunction for m, one rule per member for nm.
            out.push(LpRule::rule(
                val(c(lids.id.clone()), c("m")),
                lids.matches
                    .iter()
                    .map(|mid| BodyLit::Pos(val(c(mid.clone()), c("m"))))
                    .collect(),
            ));
            for mid in &lids.matches {
                out.push(LpRule::rule(
                    val(c(lids.id.clone()), c("nm")),
                    vec![BodyLit::Pos(val(c(mid.clone()), c("nm")))],
                ));
            }
        }
        // AnyOf: one rule per member for m, conjunction for nm.
        for lids in &aids.allofs {
            out.push(LpRule::rule(
                val(c(aids.id.clone()), c("m")),
                vec![BodyLit::Pos(val(c(lids.id.clone()), c("m")))],
            ));
        }
        out.push(LpRule::rule(
            val(c(aids.id.clone()), c("nm")),
            aids.allofs
                .iter()
                .map(|lids| BodyLit::Pos(val(c(lids.id.clone()), c("nm"))))
                .collect(),
        ));
    }
    // Target: conjunction for m, one rule per member for nm.
    out.push(LpRule::rule(
        val(c(tids.id.clone()), c("m")),
        tids.anyofs
            .iter()
            .map(|aids| BodyLit::Pos(val(c(aids.id.clone()), c("m"))))
            .collect(),
    ));
    for aids in &tids.anyofs {
        out.push(LpRule::rule(
            val(c(tids.id.clone()), c("nm")),
            vec![BodyLit::Pos(val(c(aids.id.clone()), c("nm")))],
        ));
    }
}

fn emit_rule(ids: &ComponentIds, r: &crate::model::Rule, out: &mut Vec<LpRule>) {
    let tid = ids.target_id(&r.id).to_string();
    let cid = ids.condition_id(&r.id).to_string();
    out.push(LpRule::rule(
        val(c(r.id.clone()), c(r.effect.decision().token())),
        vec![
            BodyLit::Pos(val(c(tid.clone()), c("m"))),
            BodyLit::Pos(val(c(cid.clone()), c("t"))),
        ],
    ));
    out.push(LpRule::rule(
        val(c(r.id.clone()), c("na")),
        vec![
            BodyLit::Pos(val(c(tid.clone()), c("m"))),
            BodyLit::Pos(val(c(cid), c("f"))),
        ],
    ));
    out.push(LpRule::rule(
        val(c(r.id.clone()), c("na")),
        vec![BodyLit::Pos(val(c(tid), c("nm")))],
    ));
}

fn emit_container(ids: &ComponentIds, cid: &str, comp: &Component, out: &mut Vec<LpRule>) {
    let (children, comb) = match comp {
        Component::Policy(pl) => (&pl.children, pl.comb),
        Component::PolicySet(ps) => (&ps.children, ps.comb),
        Component::Rule(_) => unreachable!("caller dispatches"),
    };
    // dec/3 bridge and the position-indexed dec/4 variant.
    for (i, child) in children.iter().enumerate() {
        out.push(LpRule::rule(
            Atom::new("dec", vec![c(cid), c(child.clone()), v("E")]),
            vec![BodyLit::Pos(val(c(child.clone()), v("E")))],
        ));
        out.push(LpRule::rule(
            Atom::new(
                "dec",
                vec![c(cid), c(child.clone()), v("E"), Term::Int(i as i64 + 1)],
            ),
            vec![BodyLit::Pos(val(c(child.clone()), v("E")))],
        ));
    }
    let tid = ids.target_id(cid).to_string();
    out.push(LpRule::rule(
        val(c(cid), c("na")),
        vec![BodyLit::Pos(val(c(tid.clone()), c("nm")))],
    ));
    out.push(LpRule::rule(
        val(c(cid), c("na")),
        children
            .iter()
            .map(|ch| BodyLit::Pos(val(c(ch.clone()), c("na"))))
            .collect(),
    ));
    out.push(LpRule::rule(
        val(c(cid), v("E")),
        vec![
            BodyLit::Pos(val(c(tid), c("m"))),
            BodyLit::Pos(Atom::new("dec", vec![c(cid), v("R"), v("V")])),
            BodyLit::Cmp(CmpOp::Ne, v("V"), c("na")),
            BodyLit::Pos(Atom::new(
                "algo",
                vec![c(comb.keyword()), c(cid), v("E")],
            )),
        ],
    ));
}

/// The generic program of one combining algorithm over the `dec` bridges.
pub fn transform_combining(alg: CombiningAlgorithm) -> Vec<LpRule> {
    let a = |value: &str| Atom::new("algo", vec![c(alg.keyword()), v("P"), c(value)]);
    match alg {
        CombiningAlgorithm::PermitOverrides | CombiningAlgorithm::DenyOverrides => {
            // Deny-overrides is the exact p/d mirror of permit-overrides.
            let (hi, lo) = match alg {
                CombiningAlgorithm::PermitOverrides => ("p", "d"),
                _ => ("d", "p"),
            };
            vec![
                LpRule::rule(
                    a(hi),
                    vec![BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), c(hi)]))],
                ),
                LpRule::rule(
                    a(lo),
                    vec![
                        BodyLit::Neg(a(hi)),
                        BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), c(lo)])),
                    ],
                ),
                LpRule::rule(
                    a("na"),
                    vec![
                        BodyLit::Pos(Atom::new("pol_id", vec![v("P")])),
                        BodyLit::Neg(a(hi)),
                        BodyLit::Neg(a(lo)),
                    ],
                ),
            ]
        }
        CombiningAlgorithm::FirstApplicable => vec![
            LpRule::rule(
                Atom::new("algo", vec![c("fa"), v("P"), v("E")]),
                vec![
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), v("E"), v("I")])),
                    BodyLit::Cmp(CmpOp::Ne, v("E"), c("na")),
                    BodyLit::Neg(Atom::new("blocked", vec![v("P"), v("I")])),
                ],
            ),
            LpRule::rule(
                Atom::new("blocked", vec![v("P"), v("I")]),
                vec![
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R1"), v("E1"), v("I")])),
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R2"), v("E2"), v("J")])),
                    BodyLit::Cmp(CmpOp::Ne, v("E2"), c("na")),
                    BodyLit::Cmp(CmpOp::Lt, v("J"), v("I")),
                ],
            ),
        ],
        CombiningAlgorithm::OnlyOneApplicable => vec![
            LpRule::rule(
                Atom::new("not_one_applicable", vec![v("P")]),
                vec![
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R1"), v("X")])),
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R2"), v("Y")])),
                    BodyLit::Cmp(CmpOp::Ne, v("R1"), v("R2")),
                    BodyLit::Cmp(CmpOp::Ne, v("X"), c("na")),
                    BodyLit::Cmp(CmpOp::Ne, v("Y"), c("na")),
                ],
            ),
            LpRule::rule(
                Atom::new("algo", vec![c("ooa"), v("P"), v("E")]),
                vec![
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), v("E")])),
                    BodyLit::Cmp(CmpOp::Ne, v("E"), c("na")),
                    BodyLit::Neg(Atom::new("not_one_applicable", vec![v("P")])),
                ],
            ),
            LpRule::rule(
                Atom::new("algo", vec![c("ooa"), v("P"), c("na")]),
                vec![BodyLit::Pos(Atom::new("not_one_applicable", vec![v("P")]))],
            ),
        ],
    }
}

// --- condition compilation -------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum CondLit {
    Pos(String, Term),
    Neg(String, Term),
    Eq(Term, Term),
    Ne(Term, Term),
}

fn cond_term(t: &CondTerm) -> Term {
    match t {
        CondTerm::Var(x) => Term::Var(x.clone()),
        CondTerm::Const(k) => Term::Const(k.clone()),
    }
}

/// Disjunctive normal form with negation pushed to the leaves. An empty
/// disjunct list is falsum; an empty disjunct is verum.
fn dnf(e: &ConditionExpr, polarity: bool) -> Vec<Vec<CondLit>> {
    match (e, polarity) {
        (ConditionExpr::True, true) => vec![vec![]],
        (ConditionExpr::True, false) => vec![],
        (ConditionExpr::Pred { name, arg }, true) => {
            vec![vec![CondLit::Pos(name.clone(), cond_term(arg))]]
        }
        (ConditionExpr::Pred { name, arg }, false) => {
            vec![vec![CondLit::Neg(name.clone(), cond_term(arg))]]
        }
        (ConditionExpr::Eq(x, y), true) | (ConditionExpr::Ne(x, y), false) => {
            vec![vec![CondLit::Eq(cond_term(x), cond_term(y))]]
        }
        (ConditionExpr::Eq(x, y), false) | (ConditionExpr::Ne(x, y), true) => {
            vec![vec![CondLit::Ne(cond_term(x), cond_term(y))]]
        }
        (ConditionExpr::Not(inner), pol) => dnf(inner, !pol),
        (ConditionExpr::And(a, b), true) | (ConditionExpr::Or(a, b), false) => {
            let left = dnf(a, polarity);
            let right = dnf(b, polarity);
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    let mut d = l.clone();
                    d.extend(r.clone());
                    out.push(d);
                }
            }
            out
        }
        (ConditionExpr::And(a, b), false) | (ConditionExpr::Or(a, b), true) => {
            let mut out = dnf(a, polarity);
            out.extend(dnf(b, polarity));
            out
        }
    }
}

/// Eliminates equalities inside one disjunct by unification; returns None
/// for a contradictory disjunct.
fn normalize_disjunct(mut lits: Vec<CondLit>) -> Option<Vec<CondLit>> {
    loop {
        let Some(idx) = lits.iter().position(|l| matches!(l, CondLit::Eq(..))) else {
            break;
        };
        let CondLit::Eq(x, y) = lits.remove(idx) else {
            unreachable!()
        };
        match (&x, &y) {
            (Term::Const(a), Term::Const(b)) => {
                if a != b {
                    return None;
                }
            }
            (Term::Var(var), other) | (other, Term::Var(var)) => {
                let var = var.clone();
                let replacement = other.clone();
                for l in &mut lits {
                    substitute(l, &var, &replacement);
                }
            }
            _ => return None,
        }
    }
    let mut out = Vec::new();
    for l in lits {
        match &l {
            CondLit::Ne(x, y) if x == y => return None,
            CondLit::Ne(Term::Const(a), Term::Const(b)) if a != b => continue, // trivially true
            _ => {}
        }
        if !out.contains(&l) {
            out.push(l);
        }
    }
    Some(out)
}

fn substitute(l: &mut CondLit, var: &str, replacement: &Term) {
    let sub = |t: &mut Term| {
        if matches!(t, Term::Var(v) if v == var) {
            *t = replacement.clone();
        }
    };
    match l {
        CondLit::Pos(_, t) | CondLit::Neg(_, t) => sub(t),
        CondLit::Eq(x, y) | CondLit::Ne(x, y) => {
            sub(x);
            sub(y);
        }
    }
}

fn emit_condition(
    ids: &ComponentIds,
    r: &crate::model::Rule,
    dom: &AttributeDomains,
    out: &mut Vec<LpRule>,
    guard_facts: &mut Vec<Atom>,
) {
    if r.condition == ConditionExpr::True {
        return; // shared val(cond_true, t) fact
    }
    let cond_id = ids.condition_id(&r.id).to_string();
    let eval_atom = |value: Term| Atom::new("eval", vec![c(cond_id.clone()), value]);

    let mut used_guard = false;
    for disjunct in dnf(&r.condition, true) {
        let Some(lits) = normalize_disjunct(disjunct) else {
            continue;
        };
        let mut body: Vec<BodyLit> = Vec::new();
        let mut bound: BTreeSet<String> = BTreeSet::new();
        for l in &lits {
            if let CondLit::Pos(name, t) = l {
                body.push(BodyLit::Pos(Atom::new(name.clone(), vec![t.clone()])));
                if let Term::Var(x) = t {
                    bound.insert(x.clone());
                }
            }
        }
        // Guard every variable no positive literal binds.
        let mut free: Vec<String> = Vec::new();
        for l in &lits {
            let terms: Vec<&Term> = match l {
                CondLit::Neg(_, t) => vec![t],
                CondLit::Ne(x, y) => vec![x, y],
                _ => vec![],
            };
            for t in terms {
                if let Term::Var(x) = t {
                    if !bound.contains(x) && !free.contains(x) {
                        free.push(x.clone());
                    }
                }
            }
        }
        for x in free {
            body.push(BodyLit::Pos(Atom::new(
                "cond_univ",
                vec![c(cond_id.clone()), Term::Var(x.clone())],
            )));
            bound.insert(x);
            used_guard = true;
        }
        for l in &lits {
            match l {
                CondLit::Neg(name, t) => {
                    body.push(BodyLit::Neg(Atom::new(name.clone(), vec![t.clone()])))
                }
                CondLit::Ne(x, y) => body.push(BodyLit::Cmp(CmpOp::Ne, x.clone(), y.clone())),
                _ => {}
            }
        }
        out.push(LpRule::rule(eval_atom(c("t")), body));
    }
    // Complement by negation as failure.
    out.push(LpRule::rule(
        eval_atom(c("f")),
        vec![BodyLit::Neg(eval_atom(c("t")))],
    ));
    out.push(LpRule::rule(
        val(c(cond_id.clone()), v("V")),
        vec![BodyLit::Pos(eval_atom(v("V")))],
    ));

    if used_guard {
        let mut consts: BTreeSet<String> = dom.relation_constants();
        collect_condition_consts(&r.condition, &mut consts);
        for k in consts {
            guard_facts.push(Atom::new("cond_univ", vec![c(cond_id.clone()), c(k)]));
        }
    }
}

fn collect_condition_consts(e: &ConditionExpr, out: &mut BTreeSet<String>) {
    match e {
        ConditionExpr::True => {}
        ConditionExpr::Pred { arg, .. } => {
            if let CondTerm::Const(k) = arg {
                out.insert(k.clone());
            }
        }
        ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
            collect_condition_consts(a, out);
            collect_condition_consts(b, out);
        }
        ConditionExpr::Not(a) => collect_condition_consts(a, out),
        ConditionExpr::Eq(x, y) | ConditionExpr::Ne(x, y) => {
            for t in [x, y] {
                if let CondTerm::Const(k) = t {
                    out.insert(k.clone());
                }
            }
        }
    }
}

// --- analysis programs -----------------------------------------------------

/// Domain database facts (subject_db(v) etc.), in category order with
/// sorted values.
fn domain_facts(dom: &AttributeDomains) -> Vec<Atom> {
    let mut out = Vec::new();
    for cat in AttrCategory::ALL {
        for value in dom.sorted_values(cat) {
            out.push(Atom::new(cat.db_predicate(), vec![c(value)]));
        }
    }
    out
}

/// Categories some match of the store constrains.
fn referenced_categories(store: &PolicyStore) -> BTreeSet<AttrCategory> {
    let mut out = BTreeSet::new();
    for comp in store.components() {
        if let Target::AnyOfs(anyofs) = comp.target() {
            for anyof in anyofs {
                for allof in &anyof.allofs {
                    for m in &allof.matches {
                        out.insert(m.category);
                    }
                }
            }
        }
    }
    out
}

/// Emits the full analysis program: P_XACML plus the task's generator and
/// property rules.
pub fn emit_analysis(
    task: AnalysisTask,
    store: &PolicyStore,
    dom: &AttributeDomains,
) -> Result<LogicProgram, EmitError> {
    let mut p = transform_store(store, dom);
    for fact in domain_facts(dom) {
        p.push_fact(fact);
    }
    match task {
        AnalysisTask::Gap | AnalysisTask::Conflict => {
            for cat in referenced_categories(store) {
                if dom.values(cat).is_empty() {
                    return Err(EmitError::EmptyReferencedDomain(cat));
                }
            }
            // Exactly one value per non-empty category; empty categories
            // contribute no choice rule.
            for cat in AttrCategory::ALL {
                if !dom.values(cat).is_empty() {
                    p.push_choice(ChoiceRule {
                        lower: 1,
                        upper: 1,
                        head: Atom::new(cat.keyword(), vec![v("X")]),
                        generator: Atom::new(cat.db_predicate(), vec![v("X")]),
                    });
                }
            }
            match task {
                AnalysisTask::Gap => {
                    p.push_rule(LpRule::rule(
                        Atom::nullary("gap"),
                        vec![BodyLit::Pos(val(c(store.root_id()), c("na")))],
                    ));
                    p.push_rule(LpRule::constraint(vec![BodyLit::Neg(Atom::nullary("gap"))]));
                }
                AnalysisTask::Conflict => {
                    p.push_rule(LpRule::rule(
                        Atom::nullary("conflict"),
                        vec![
                            BodyLit::Pos(val(v("R"), c("p"))),
                            BodyLit::Pos(val(v("R2"), c("d"))),
                            BodyLit::Cmp(CmpOp::Ne, v("R"), v("R2")),
                        ],
                    ));
                    p.push_rule(LpRule::constraint(vec![BodyLit::Neg(Atom::nullary(
                        "conflict",
                    ))]));
                }
                AnalysisTask::Reachability => unreachable!(),
            }
        }
        AnalysisTask::Reachability => {
            // Assert every domain fact at once.
            for cat in AttrCategory::ALL {
                p.push_rule(LpRule::rule(
                    Atom::new(cat.keyword(), vec![v("X")]),
                    vec![BodyLit::Pos(Atom::new(cat.db_predicate(), vec![v("X")]))],
                ));
            }
            for rid in store.rule_ids() {
                p.push_fact(Atom::new("rule_id", vec![c(rid)]));
            }
            p.push_rule(LpRule::rule(
                Atom::new("reachable", vec![v("R")]),
                vec![
                    BodyLit::Pos(val(v("R"), v("E"))),
                    BodyLit::Cmp(CmpOp::Ne, v("E"), c("na")),
                ],
            ));
            p.push_rule(LpRule::rule(
                Atom::new("not_reachable", vec![v("R")]),
                vec![
                    BodyLit::Pos(Atom::new("rule_id", vec![v("R")])),
                    BodyLit::Neg(Atom::new("reachable", vec![v("R")])),
                ],
            ));
            p.push_rule(LpRule::rule(
                Atom::new("not_reachable", vec![v("R")]),
                vec![
                    BodyLit::Pos(val(v("P"), c("p"))),
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), c("d")])),
                ],
            ));
            p.push_rule(LpRule::rule(
                Atom::new("not_reachable", vec![v("R")]),
                vec![
                    BodyLit::Pos(val(v("P"), c("d"))),
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), c("p")])),
                ],
            ));
            p.push_rule(LpRule::rule(
                Atom::new("not_reachable", vec![v("R")]),
                vec![
                    BodyLit::Pos(val(v("P"), c("na"))),
                    BodyLit::Pos(Atom::new("dec", vec![v("P"), v("R"), v("E")])),
                    BodyLit::Cmp(CmpOp::Ne, v("E"), c("na")),
                ],
            ));
            // First-applicable ordering, per policy that uses fa.
            for comp in store.components() {
                let uses_fa = match comp {
                    Component::Policy(pl) => pl.comb == CombiningAlgorithm::FirstApplicable,
                    Component::PolicySet(ps) => ps.comb == CombiningAlgorithm::FirstApplicable,
                    Component::Rule(_) => false,
                };
                if uses_fa {
                    p.push_rule(LpRule::rule(
                        Atom::new("not_reachable", vec![v("R2")]),
                        vec![
                            BodyLit::Pos(Atom::new(
                                "dec",
                                vec![c(comp.id()), v("R1"), v("E"), v("I")],
                            )),
                            BodyLit::Pos(Atom::new(
                                "dec",
                                vec![c(comp.id()), v("R2"), v("E2"), v("J")],
                            )),
                            BodyLit::Cmp(CmpOp::Ne, v("E"), c("na")),
                            BodyLit::Cmp(CmpOp::Ne, v("E2"), c("na")),
                            BodyLit::Cmp(CmpOp::Lt, v("I"), v("J")),
                        ],
                    ));
                }
            }
            p.push_rule(LpRule::rule(
                Atom::nullary("not_reachable"),
                vec![BodyLit::Pos(Atom::new("not_reachable", vec![v("R")]))],
            ));
            p.push_rule(LpRule::constraint(vec![BodyLit::Neg(Atom::nullary(
                "not_reachable",
            ))]));
        }
    }
    p.close_universe();
    Ok(p)
}
