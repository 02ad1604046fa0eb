//! Gap, conflict and reachability analysis over a policy store, with a
//! native brute-force engine and a logic-program engine that must agree.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::emit::{emit_analysis, transform_store, AnalysisTask, EmitError};
use crate::engine::{enumerate_models, ground, solve_unique, AnswerSet, EngineError};
use crate::eval::{evaluate_trace, Trace};
use crate::ids::ComponentIds;
use crate::lp::{Atom, Term};
use crate::model::{
    AttrCategory, AttributeDomains, CombiningAlgorithm, Component, Decision, Fact, PolicyStore,
    Request,
};
use crate::parser::serialize_store;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Native,
    Lp,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Native => "native",
            Engine::Lp => "lp",
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("request space of {size} requests exceeds the budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("answer set carries no decision for component {0}")]
    MissingDecision(String),
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Witness {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request: Option<BTreeMap<String, String>>,
    pub components: Vec<String>,
    pub decisions: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub task: String,
    pub engine: String,
    pub store_hash: String,
    pub domain_sizes: BTreeMap<String, usize>,
    pub witnesses: Vec<Witness>,
    pub total: usize,
    pub truncated: bool,
    pub elapsed_ms: u64,
    /// Native reachability only: rules no single request lets influence the
    /// root decision, computed by sweeping the request space.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_unreachable: Option<Vec<String>>,
}

/// SHA-256 of the canonical text form of the store.
pub fn store_hash(store: &PolicyStore) -> String {
    let digest = Sha256::digest(serialize_store(store).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn domain_sizes(dom: &AttributeDomains) -> BTreeMap<String, usize> {
    AttrCategory::ALL
        .iter()
        .map(|c| (c.keyword().to_string(), dom.values(*c).len()))
        .collect()
}

/// Number of single-valued requests over the non-empty categories.
pub fn request_space_size(dom: &AttributeDomains) -> usize {
    AttrCategory::ALL
        .iter()
        .map(|c| dom.values(*c).len())
        .filter(|&n| n > 0)
        .product()
}

/// Every request with exactly one value per non-empty category, first
/// category varying slowest, values in sorted order.
pub fn request_space(dom: &AttributeDomains) -> Vec<Request> {
    let axes: Vec<(AttrCategory, Vec<String>)> = AttrCategory::ALL
        .iter()
        .filter(|c| !dom.values(**c).is_empty())
        .map(|c| (*c, dom.sorted_values(*c)))
        .collect();
    let mut out = vec![Request::default()];
    for (cat, values) in &axes {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for q in &out {
            for value in values {
                let mut nq = q.clone();
                nq.facts.insert(Fact::Attr(*cat, value.clone()));
                next.push(nq);
            }
        }
        out = next;
    }
    out
}

fn request_map(q: &Request) -> BTreeMap<String, String> {
    q.facts
        .iter()
        .filter_map(|f| match f {
            Fact::Attr(cat, v) => Some((cat.keyword().to_string(), v.clone())),
            Fact::External(..) => None,
        })
        .collect()
}

fn check_budget(dom: &AttributeDomains, budget: usize) -> Result<(), AnalysisError> {
    let size = request_space_size(dom);
    if size > budget {
        return Err(AnalysisError::BudgetExceeded { size, budget });
    }
    Ok(())
}

// --- logic-program evaluation of one request --------------------------------

/// The val atoms of the unique answer set of the store program joined with
/// the request facts, keyed by component or internal id.
pub fn lp_trace(
    store: &PolicyStore,
    dom: &AttributeDomains,
    q: &Request,
) -> Result<BTreeMap<String, BTreeSet<String>>, AnalysisError> {
    lp_trace_with_base(&transform_store(store, dom), q)
}

/// Same as `lp_trace`, reusing an already compiled store program.
pub fn lp_trace_with_base(
    base: &crate::lp::LogicProgram,
    q: &Request,
) -> Result<BTreeMap<String, BTreeSet<String>>, AnalysisError> {
    let mut p = base.clone();
    for fact in &q.facts {
        match fact {
            Fact::Attr(cat, v) => p.push_fact(Atom::new(
                cat.keyword(),
                vec![Term::constant(v.clone())],
            )),
            Fact::External(name, args) => p.push_fact(Atom::new(
                name.clone(),
                args.iter().map(|a| Term::constant(a.clone())).collect(),
            )),
        }
    }
    p.close_universe();
    let g = ground(&p)?;
    let answer = solve_unique(&g)?;
    Ok(val_map(&answer))
}

fn val_map(answer: &AnswerSet) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for tuple in answer.tuples("val") {
        if let [id, value] = tuple.as_slice() {
            out.entry(id.clone()).or_default().insert(value.clone());
        }
    }
    out
}

/// Root decision of one request through the logic-program engine.
pub fn lp_evaluate(
    store: &PolicyStore,
    dom: &AttributeDomains,
    q: &Request,
) -> Result<Decision, AnalysisError> {
    let vals = lp_trace(store, dom, q)?;
    let root = store.root_id();
    let set = vals
        .get(root)
        .ok_or_else(|| AnalysisError::MissingDecision(root.to_string()))?;
    if set.len() != 1 {
        return Err(AnalysisError::MissingDecision(root.to_string()));
    }
    let token = set.iter().next().expect("checked non-empty");
    Decision::from_token(token).ok_or_else(|| AnalysisError::MissingDecision(root.to_string()))
}

/// One disagreement between the native evaluator and the program engine.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub request: Request,
    pub component: String,
    pub native: String,
    pub lp: Vec<String>,
}

/// Compares the native trace and the program's val atoms on every request of
/// the generated space. Returns the first disagreement, if any.
pub fn differential_check(
    store: &PolicyStore,
    dom: &AttributeDomains,
    budget: usize,
) -> Result<Option<Divergence>, AnalysisError> {
    check_budget(dom, budget)?;
    let ids = ComponentIds::assign(store);
    let base = transform_store(store, dom);
    for q in request_space(dom) {
        let native: Trace = evaluate_trace(store, &ids, &q, dom);
        let lp = lp_trace_with_base(&base, &q)?;
        for (id, value) in &native {
            let got = lp.get(id).cloned().unwrap_or_default();
            if got.len() != 1 || !got.contains(value) {
                return Ok(Some(Divergence {
                    request: q,
                    component: id.clone(),
                    native: value.clone(),
                    lp: got.into_iter().collect(),
                }));
            }
        }
        for (id, values) in &lp {
            if !native.contains_key(id) || values.len() != 1 {
                return Ok(Some(Divergence {
                    request: q,
                    component: id.clone(),
                    native: native.get(id).cloned().unwrap_or_default(),
                    lp: values.iter().cloned().collect(),
                }));
            }
        }
    }
    Ok(None)
}

// --- gap analysis ------------------------------------------------------------

fn finish_report(
    task: AnalysisTask,
    engine: Engine,
    store: &PolicyStore,
    dom: &AttributeDomains,
    mut witnesses: Vec<Witness>,
    max_witnesses: usize,
    started: Instant,
) -> AnalysisReport {
    let total = witnesses.len();
    let truncated = total > max_witnesses;
    witnesses.truncate(max_witnesses);
    AnalysisReport {
        task: task.name().to_string(),
        engine: engine.name().to_string(),
        store_hash: store_hash(store),
        domain_sizes: domain_sizes(dom),
        witnesses,
        total,
        truncated,
        elapsed_ms: started.elapsed().as_millis() as u64,
        sweep_unreachable: None,
    }
}

fn model_request(model: &AnswerSet) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for cat in AttrCategory::ALL {
        for tuple in model.tuples(cat.keyword()) {
            if let [v] = tuple.as_slice() {
                out.insert(cat.keyword().to_string(), v.clone());
            }
        }
    }
    out
}

/// Finds requests the store leaves undecided (root evaluates to na).
pub fn check_completeness(
    store: &PolicyStore,
    dom: &AttributeDomains,
    engine: Engine,
    max_witnesses: usize,
    budget: usize,
) -> Result<AnalysisReport, AnalysisError> {
    let started = Instant::now();
    check_budget(dom, budget)?;
    let root = store.root_id().to_string();
    let witness = |request: BTreeMap<String, String>| Witness {
        kind: "gap".to_string(),
        request: Some(request),
        components: vec![root.clone()],
        decisions: BTreeMap::from([(root.clone(), "na".to_string())]),
    };
    let witnesses: Vec<Witness> = match engine {
        Engine::Native => request_space(dom)
            .into_iter()
            .filter(|q| crate::eval::evaluate(store, q, dom) == Decision::NotApplicable)
            .map(|q| witness(request_map(&q)))
            .collect(),
        Engine::Lp => {
            let p = emit_analysis(AnalysisTask::Gap, store, dom)?;
            let g = ground(&p)?;
            enumerate_models(&g, usize::MAX)?
                .iter()
                .map(|m| witness(model_request(m)))
                .collect()
        }
    };
    Ok(finish_report(
        AnalysisTask::Gap,
        engine,
        store,
        dom,
        witnesses,
        max_witnesses,
        started,
    ))
}

// --- conflict analysis --------------------------------------------------------

fn conflict_pairs(vals: &BTreeMap<String, BTreeSet<String>>, rule_ids: &BTreeSet<String>) -> Vec<(String, String)> {
    let permits: Vec<&String> = rule_ids
        .iter()
        .filter(|r| vals.get(*r).is_some_and(|s| s.contains("p")))
        .collect();
    let denies: Vec<&String> = rule_ids
        .iter()
        .filter(|r| vals.get(*r).is_some_and(|s| s.contains("d")))
        .collect();
    let mut out = Vec::new();
    for p in &permits {
        for d in &denies {
            out.push(((*p).clone(), (*d).clone()));
        }
    }
    out.sort();
    out
}

fn trace_to_sets(trace: &Trace) -> BTreeMap<String, BTreeSet<String>> {
    trace
        .iter()
        .map(|(k, v)| (k.clone(), BTreeSet::from([v.clone()])))
        .collect()
}

/// Finds requests where some rule permits while another denies.
pub fn check_conflicts(
    store: &PolicyStore,
    dom: &AttributeDomains,
    engine: Engine,
    max_witnesses: usize,
    budget: usize,
) -> Result<AnalysisReport, AnalysisError> {
    let started = Instant::now();
    check_budget(dom, budget)?;
    let rule_ids: BTreeSet<String> = store.rule_ids().into_iter().collect();
    let ids = ComponentIds::assign(store);

    let mut witnesses = Vec::new();
    let mut push = |request: BTreeMap<String, String>, pairs: Vec<(String, String)>| {
        for (rp, rd) in pairs {
            witnesses.push(Witness {
                kind: "conflict".to_string(),
                request: Some(request.clone()),
                components: vec![rp.clone(), rd.clone()],
                decisions: BTreeMap::from([
                    (rp, "p".to_string()),
                    (rd, "d".to_string()),
                ]),
            });
        }
    };
    match engine {
        Engine::Native => {
            for q in request_space(dom) {
                let trace = evaluate_trace(store, &ids, &q, dom);
                let pairs = conflict_pairs(&trace_to_sets(&trace), &rule_ids);
                push(request_map(&q), pairs);
            }
        }
        Engine::Lp => {
            let p = emit_analysis(AnalysisTask::Conflict, store, dom)?;
            let g = ground(&p)?;
            for m in enumerate_models(&g, usize::MAX)? {
                let pairs = conflict_pairs(&val_map(&m), &rule_ids);
                push(model_request(&m), pairs);
            }
        }
    }
    Ok(finish_report(
        AnalysisTask::Conflict,
        engine,
        store,
        dom,
        witnesses,
        max_witnesses,
        started,
    ))
}

// --- reachability ---------------------------------------------------------------

/// The request asserting every declared attribute value at once.
pub fn saturated_request(dom: &AttributeDomains) -> Request {
    let mut q = Request::default();
    for cat in AttrCategory::ALL {
        for v in dom.sorted_values(cat) {
            q.facts.insert(Fact::Attr(cat, v));
        }
    }
    q
}

fn container_children(comp: &Component) -> Option<(&Vec<String>, CombiningAlgorithm)> {
    match comp {
        Component::Policy(p) => Some((&p.children, p.comb)),
        Component::PolicySet(ps) => Some((&ps.children, ps.comb)),
        Component::Rule(_) => None,
    }
}

/// Rules flagged by the reachability clauses over one value assignment.
fn flag_unreachable(
    store: &PolicyStore,
    vals: &BTreeMap<String, BTreeSet<String>>,
) -> BTreeSet<String> {
    let rule_ids: BTreeSet<String> = store.rule_ids().into_iter().collect();
    let has = |id: &str, v: &str| vals.get(id).is_some_and(|s| s.contains(v));
    let mut flagged = BTreeSet::new();
    for rid in &rule_ids {
        if !["p", "d"].iter().any(|v| has(rid, v)) {
            flagged.insert(rid.clone());
        }
    }
    for comp in store.components() {
        let Some((children, comb)) = container_children(comp) else {
            continue;
        };
        let pid = comp.id();
        for child in children {
            let shadowed = (has(pid, "p") && has(child, "d"))
                || (has(pid, "d") && has(child, "p"))
                || (has(pid, "na") && ["p", "d"].iter().any(|v| has(child, v)));
            if shadowed && rule_ids.contains(child) {
                flagged.insert(child.clone());
            }
        }
        if comb == CombiningAlgorithm::FirstApplicable {
            for (j, later) in children.iter().enumerate() {
                let blocked = children[..j]
                    .iter()
                    .any(|earlier| ["p", "d"].iter().any(|v| has(earlier, v)));
                if blocked
                    && ["p", "d"].iter().any(|v| has(later, v))
                    && rule_ids.contains(later)
                {
                    flagged.insert(later.clone());
                }
            }
        }
    }
    flagged
}

/// Whether the rule influences the root decision under the request: it is
/// applicable and no clause of the unreachability test shadows it.
fn rule_matters(store: &PolicyStore, rid: &str, trace: &Trace) -> bool {
    let vals = trace_to_sets(trace);
    let applicable = trace.get(rid).is_some_and(|v| v != "na");
    applicable && !flag_unreachable(store, &vals).contains(rid)
}

/// Finds rules that cannot affect the root decision.
pub fn check_reachability(
    store: &PolicyStore,
    dom: &AttributeDomains,
    engine: Engine,
    budget: usize,
) -> Result<AnalysisReport, AnalysisError> {
    let started = Instant::now();
    let ids = ComponentIds::assign(store);
    let unreachable: BTreeSet<String> = match engine {
        Engine::Native => {
            let q = saturated_request(dom);
            let trace = evaluate_trace(store, &ids, &q, dom);
            flag_unreachable(store, &trace_to_sets(&trace))
        }
        Engine::Lp => {
            let p = emit_analysis(AnalysisTask::Reachability, store, dom)?;
            let g = ground(&p)?;
            let models = enumerate_models(&g, 2)?;
            let rule_ids: BTreeSet<String> = store.rule_ids().into_iter().collect();
            models
                .first()
                .map(|m| {
                    m.tuples("not_reachable")
                        .into_iter()
                        .filter_map(|t| match t.as_slice() {
                            [r] if rule_ids.contains(r) => Some(r.clone()),
                            _ => None,
                        })
                        .collect()
                })
                .unwrap_or_default()
        }
    };
    let witnesses: Vec<Witness> = unreachable
        .iter()
        .map(|rid| Witness {
            kind: "unreachable".to_string(),
            request: None,
            components: vec![rid.clone()],
            decisions: BTreeMap::new(),
        })
        .collect();
    let max = witnesses.len();
    let mut report = finish_report(
        AnalysisTask::Reachability,
        engine,
        store,
        dom,
        witnesses,
        max,
        started,
    );
    if engine == Engine::Native {
        check_budget(dom, budget)?;
        let space = request_space(dom);
        let mut sweep = Vec::new();
        for rid in store.rule_ids() {
            let matters = space.iter().any(|q| {
                let trace = evaluate_trace(store, &ids, q, dom);
                rule_matters(store, &rid, &trace)
            });
            if !matters {
                sweep.push(rid);
            }
        }
        report.sweep_unreachable = Some(sweep);
    }
    Ok(report)
}
