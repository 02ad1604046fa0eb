//! A small answer-set engine for the programs the emitter produces:
//! grounding, acyclicity checking via a level mapping, the unique answer set
//! of an acyclic normal program, and model enumeration for programs whose
//! only nondeterminism is 1{..}1 choice over database facts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::lp::{Atom, BodyLit, ChoiceRule, CmpOp, Head, LogicProgram, LpRule, Statement, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("variable {var} in rule `{rule}` ranges over an empty constant universe")]
    EmptyUniverse { var: String, rule: String },
    #[error("program is not acyclic; atoms on a dependency cycle: {0:?}")]
    Cyclic(Vec<String>),
    #[error("solve_unique requires a program without choice rules or constraints")]
    NotPlain,
    #[error("model limit {0} exceeded")]
    TooManyModels(usize),
}

#[derive(Debug, Clone)]
pub struct GroundRule {
    pub head: Option<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ChoiceGroup {
    /// Candidate head atoms, in enumeration order.
    pub candidates: Vec<usize>,
}

/// A fully instantiated program over an interned atom table.
#[derive(Debug, Default)]
pub struct GroundProgram {
    pub atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    pub rules: Vec<GroundRule>,
    pub choices: Vec<ChoiceGroup>,
}

impl GroundProgram {
    fn intern(&mut self, atom: Atom) -> usize {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = self.atoms.len();
        self.atoms.push(atom.clone());
        self.index.insert(atom, id);
        id
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }
}

/// One answer set, as the set of true ground atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub atoms: BTreeSet<Atom>,
}

impl AnswerSet {
    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    /// All argument tuples of the given predicate, as constant strings.
    pub fn tuples(&self, predicate: &str) -> Vec<Vec<String>> {
        self.atoms
            .iter()
            .filter(|a| a.predicate == predicate)
            .map(|a| {
                a.args
                    .iter()
                    .map(|t| match t {
                        Term::Const(k) => k.clone(),
                        Term::Int(i) => i.to_string(),
                        Term::Var(x) => x.clone(),
                    })
                    .collect()
            })
            .collect()
    }
}

type Binding = BTreeMap<String, Term>;

fn apply(term: &Term, b: &Binding) -> Term {
    match term {
        Term::Var(x) => b.get(x).cloned().unwrap_or_else(|| term.clone()),
        _ => term.clone(),
    }
}

fn apply_atom(atom: &Atom, b: &Binding) -> Atom {
    Atom::new(
        atom.predicate.clone(),
        atom.args.iter().map(|t| apply(t, b)).collect(),
    )
}

fn unify(pattern: &Atom, ground: &Atom, b: &Binding) -> Option<Binding> {
    if pattern.predicate != ground.predicate || pattern.args.len() != ground.args.len() {
        return None;
    }
    let mut out = b.clone();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        match p {
            Term::Var(x) => match out.get(x) {
                Some(existing) => {
                    if existing != g {
                        return None;
                    }
                }
                None => {
                    out.insert(x.clone(), g.clone());
                }
            },
            _ => {
                if p != g {
                    return None;
                }
            }
        }
    }
    Some(out)
}

fn cmp_holds(op: CmpOp, x: &Term, y: &Term) -> bool {
    match op {
        CmpOp::Ne => x != y,
        CmpOp::Lt => match (x, y) {
            (Term::Int(a), Term::Int(b)) => a < b,
            (Term::Const(a), Term::Const(b)) => a < b,
            _ => false,
        },
    }
}

struct Grounder {
    universe: Vec<Term>,
    out: GroundProgram,
    by_pred: HashMap<String, Vec<usize>>,
    seen_rules: HashSet<(Option<usize>, Vec<usize>, Vec<usize>)>,
}

impl Grounder {
    fn add_possible(&mut self, atom: Atom) -> (usize, bool) {
        let before = self.out.atoms.len();
        let id = self.out.intern(atom);
        let fresh = self.out.atoms.len() > before;
        if fresh {
            let pred = self.out.atoms[id].predicate.clone();
            self.by_pred.entry(pred).or_default().push(id);
        }
        (id, fresh)
    }

    fn push_ground(&mut self, head: Option<usize>, pos: Vec<usize>, neg: Vec<usize>) {
        let key = (head, pos.clone(), neg.clone());
        if self.seen_rules.insert(key) {
            self.out.rules.push(GroundRule { head, pos, neg });
        }
    }

    /// Instantiates one rule against the current possible-atom set.
    /// Returns true when a new possible atom appeared.
    fn instantiate(&mut self, rule: &LpRule) -> Result<bool, EngineError> {
        let mut grew = false;
        let positives: Vec<&Atom> = rule
            .body
            .iter()
            .filter_map(|l| match l {
                BodyLit::Pos(a) => Some(a),
                _ => None,
            })
            .collect();

        let mut bindings = vec![Binding::new()];
        for pat in &positives {
            let mut next = Vec::new();
            let candidates = self
                .by_pred
                .get(&pat.predicate)
                .cloned()
                .unwrap_or_default();
            for b in &bindings {
                for &cid in &candidates {
                    let ground = self.out.atoms[cid].clone();
                    if let Some(nb) = unify(pat, &ground, b) {
                        next.push(nb);
                    }
                }
            }
            bindings = next;
            if bindings.is_empty() {
                return Ok(false);
            }
        }

        // Any rule variable no positive literal binds ranges over the
        // declared constant universe.
        let mut vars: BTreeSet<String> = BTreeSet::new();
        if let Head::Atom(h) = &rule.head {
            vars.extend(h.variables().map(str::to_string));
        }
        for l in &rule.body {
            match l {
                BodyLit::Neg(a) => vars.extend(a.variables().map(str::to_string)),
                BodyLit::Cmp(_, x, y) => {
                    for t in [x, y] {
                        if let Term::Var(name) = t {
                            vars.insert(name.clone());
                        }
                    }
                }
                BodyLit::Pos(_) => {}
            }
        }
        for var in vars {
            if bindings.iter().all(|b| b.contains_key(&var)) {
                continue;
            }
            if self.universe.is_empty() {
                return Err(EngineError::EmptyUniverse {
                    var,
                    rule: crate::lp::serialize_rule(rule),
                });
            }
            let mut next = Vec::with_capacity(bindings.len() * self.universe.len());
            for b in bindings {
                if b.contains_key(&var) {
                    next.push(b);
                    continue;
                }
                for k in &self.universe {
                    let mut nb = b.clone();
                    nb.insert(var.clone(), k.clone());
                    next.push(nb);
                }
            }
            bindings = next;
        }

        'next_binding: for b in bindings {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for l in &rule.body {
                match l {
                    BodyLit::Pos(a) => pos.push(self.add_possible(apply_atom(a, &b)).0),
                    BodyLit::Neg(a) => neg.push(self.add_possible(apply_atom(a, &b)).0),
                    BodyLit::Cmp(op, x, y) => {
                        if !cmp_holds(*op, &apply(x, &b), &apply(y, &b)) {
                            continue 'next_binding;
                        }
                    }
                }
            }
            let head = match &rule.head {
                Head::Atom(h) => {
                    let (id, fresh) = self.add_possible(apply_atom(h, &b));
                    grew |= fresh;
                    Some(id)
                }
                Head::False => None,
            };
            self.push_ground(head, pos, neg);
        }
        Ok(grew)
    }
}

/// Instantiates every rule of the program, growing the possible-atom set to
/// a fixpoint that ignores negation.
pub fn ground(program: &LogicProgram) -> Result<GroundProgram, EngineError> {
    let mut g = Grounder {
        universe: program
            .universe
            .iter()
            .map(|k| Term::Const(k.clone()))
            .collect(),
        out: GroundProgram::default(),
        by_pred: HashMap::new(),
        seen_rules: HashSet::new(),
    };

    // Choice candidates come from the generator's facts, so seed facts first.
    let mut var_rules: Vec<&LpRule> = Vec::new();
    for st in &program.statements {
        if let Statement::Rule(r) = st {
            if r.is_fact() {
                if let Head::Atom(h) = &r.head {
                    if h.is_ground() {
                        let (id, _) = g.add_possible(h.clone());
                        g.push_ground(Some(id), vec![], vec![]);
                        continue;
                    }
                }
            }
            var_rules.push(r);
        }
    }

    loop {
        let mut grew = false;
        for rule in &var_rules {
            grew |= g.instantiate(rule)?;
        }
        if !grew {
            break;
        }
    }

    for st in &program.statements {
        if let Statement::Choice(ch) = st {
            let group = expand_choice(&mut g, ch);
            g.out.choices.push(group);
        }
    }

    // Final instantiation pass so rules see atoms choice heads introduced.
    loop {
        let mut grew = false;
        for rule in &var_rules {
            grew |= g.instantiate(rule)?;
        }
        if !grew {
            break;
        }
    }

    Ok(g.out)
}

fn expand_choice(g: &mut Grounder, ch: &ChoiceRule) -> ChoiceGroup {
    let gen_ids = g
        .by_pred
        .get(&ch.generator.predicate)
        .cloned()
        .unwrap_or_default();
    let mut heads: Vec<Atom> = Vec::new();
    for gid in gen_ids {
        let ground = g.out.atoms[gid].clone();
        if let Some(b) = unify(&ch.generator, &ground, &Binding::new()) {
            heads.push(apply_atom(&ch.head, &b));
        }
    }
    heads.sort();
    heads.dedup();
    let candidates = heads.into_iter().map(|h| g.add_possible(h).0).collect();
    ChoiceGroup { candidates }
}

/// A level mapping witnessing acyclicity: every rule body atom sits strictly
/// below its head.
#[derive(Debug)]
pub struct LevelMapping {
    levels: Vec<u32>,
}

impl LevelMapping {
    pub fn level(&self, atom: usize) -> u32 {
        self.levels[atom]
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }
}

/// Checks acyclicity of the positive-and-negative dependency graph and
/// returns longest-path levels, or the atoms of a dependency cycle.
pub fn check_acyclic(g: &GroundProgram) -> Result<LevelMapping, Vec<String>> {
    let n = g.atoms.len();
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for r in &g.rules {
        let Some(h) = r.head else { continue };
        for &b in r.pos.iter().chain(&r.neg) {
            succs[b].insert(h);
        }
    }
    let mut indeg = vec![0usize; n];
    for ss in &succs {
        for &s in ss {
            indeg[s] += 1;
        }
    }
    let mut levels = vec![1u32; n];
    let mut queue: Vec<usize> = (0..n).filter(|&a| indeg[a] == 0).collect();
    let mut done = 0usize;
    while let Some(a) = queue.pop() {
        done += 1;
        for &s in &succs[a] {
            levels[s] = levels[s].max(levels[a] + 1);
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push(s);
            }
        }
    }
    if done == n {
        return Ok(LevelMapping { levels });
    }
    // Walk the residual graph to report one actual cycle.
    let residual: Vec<usize> = (0..n).filter(|&a| indeg[a] > 0).collect();
    let start = residual[0];
    let mut path = vec![start];
    let mut on_path: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    loop {
        let cur = *path.last().expect("non-empty");
        let next = succs[cur]
            .iter()
            .copied()
            .find(|s| indeg[*s] > 0)
            .expect("residual node has a residual successor");
        if let Some(&pos) = on_path.get(&next) {
            let cycle: Vec<String> = path[pos..].iter().map(|&a| g.atoms[a].to_string()).collect();
            return Err(cycle);
        }
        on_path.insert(next, path.len());
        path.push(next);
    }
}

fn evaluate(
    g: &GroundProgram,
    order: &[usize],
    rules_by_head: &[Vec<usize>],
    forced: &HashSet<usize>,
) -> Vec<bool> {
    let mut truth = vec![false; g.atoms.len()];
    for &a in order {
        if forced.contains(&a) {
            truth[a] = true;
            continue;
        }
        for &ri in &rules_by_head[a] {
            let r = &g.rules[ri];
            if r.pos.iter().all(|&b| truth[b]) && r.neg.iter().all(|&b| !truth[b]) {
                truth[a] = true;
                break;
            }
        }
    }
    truth
}

fn rules_by_head(g: &GroundProgram) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); g.atoms.len()];
    for (i, r) in g.rules.iter().enumerate() {
        if let Some(h) = r.head {
            out[h].push(i);
        }
    }
    out
}

fn level_order(g: &GroundProgram, levels: &LevelMapping) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.atoms.len()).collect();
    order.sort_by_key(|&a| (levels.level(a), a));
    order
}

fn to_answer_set(g: &GroundProgram, truth: &[bool]) -> AnswerSet {
    AnswerSet {
        atoms: truth
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(a, _)| g.atoms[a].clone())
            .collect(),
    }
}

/// The unique answer set of an acyclic normal program without choice rules
/// or constraints.
pub fn solve_unique(g: &GroundProgram) -> Result<AnswerSet, EngineError> {
    if !g.choices.is_empty() || g.rules.iter().any(|r| r.head.is_none()) {
        return Err(EngineError::NotPlain);
    }
    let levels = check_acyclic(g).map_err(EngineError::Cyclic)?;
    let order = level_order(g, &levels);
    let by_head = rules_by_head(g);
    let truth = evaluate(g, &order, &by_head, &HashSet::new());
    Ok(to_answer_set(g, &truth))
}

/// Enumerates every answer set of a program whose rule part is acyclic and
/// whose nondeterminism is exactly its 1{..}1 choice groups, in the
/// deterministic order of the choice candidates.
pub fn enumerate_models(g: &GroundProgram, limit: usize) -> Result<Vec<AnswerSet>, EngineError> {
    let levels = check_acyclic(g).map_err(EngineError::Cyclic)?;
    let order = level_order(g, &levels);
    let by_head = rules_by_head(g);
    let constraints: Vec<&GroundRule> = g.rules.iter().filter(|r| r.head.is_none()).collect();

    let mut models = Vec::new();
    let mut selection: Vec<usize> = vec![0; g.choices.len()];
    if g.choices.iter().any(|ch| ch.candidates.is_empty()) {
        return Ok(models); // a 1{..}1 group with no candidates has no model
    }
    loop {
        let forced: HashSet<usize> = selection
            .iter()
            .enumerate()
            .map(|(gi, &ci)| g.choices[gi].candidates[ci])
            .collect();
        let truth = evaluate(g, &order, &by_head, &forced);
        let ok = constraints.iter().all(|r| {
            !(r.pos.iter().all(|&b| truth[b]) && r.neg.iter().all(|&b| !truth[b]))
        });
        if ok {
            if models.len() >= limit {
                return Err(EngineError::TooManyModels(limit));
            }
            models.push(to_answer_set(g, &truth));
        }
        // Advance the rightmost position, odometer style.
        let mut gi = selection.len();
        loop {
            if gi == 0 {
                return Ok(models);
            }
            gi -= 1;
            selection[gi] += 1;
            if selection[gi] < g.choices[gi].candidates.len() {
                break;
            }
            selection[gi] = 0;
        }
        if selection.is_empty() {
            return Ok(models);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::parse_program;

    fn atoms(a: &AnswerSet) -> Vec<String> {
        a.atoms.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn simple_stratified_program() {
        let p = parse_program("a.\nb :- a, not c.\nd :- c.\n").unwrap();
        let g = ground(&p).unwrap();
        let m = solve_unique(&g).unwrap();
        assert_eq!(atoms(&m), vec!["a", "b"]);
    }

    #[test]
    fn cycle_detection() {
        let p = parse_program("a :- not b.\nb :- not a.\n").unwrap();
        let g = ground(&p).unwrap();
        let err = check_acyclic(&g).unwrap_err();
        let mut cyc = err.clone();
        cyc.sort();
        assert_eq!(cyc, vec!["a", "b"]);
    }

    #[test]
    fn variable_rule_grounding() {
        let p = parse_program("p(a).\np(b).\nq(X) :- p(X), X != a.\n").unwrap();
        let g = ground(&p).unwrap();
        let m = solve_unique(&g).unwrap();
        assert_eq!(atoms(&m), vec!["p(a)", "p(b)", "q(b)"]);
    }

    #[test]
    fn negative_only_variable_uses_universe() {
        let mut p = parse_program("p(a).\nq :- not p(X), dom(X).\ndom(a).\ndom(b).\n").unwrap();
        p.close_universe();
        let g = ground(&p).unwrap();
        let m = solve_unique(&g).unwrap();
        assert!(m.contains(&Atom::new("q", vec![]))); // X = b
    }

    #[test]
    fn choice_enumeration_order_and_constraints() {
        let p = parse_program(
            "subject_db(alice).\nsubject_db(bob).\n1 { subject(X) : subject_db(X) } 1.\nbad :- subject(alice).\n:- bad.\n",
        )
        .unwrap();
        let g = ground(&p).unwrap();
        let models = enumerate_models(&g, 100).unwrap();
        assert_eq!(models.len(), 1);
        assert!(models[0].contains(&Atom::new("subject", vec![Term::constant("bob")])));
    }

    #[test]
    fn choice_cartesian_product() {
        let p = parse_program(
            "s_db(a).\ns_db(b).\nr_db(x).\nr_db(y).\n1 { s(X) : s_db(X) } 1.\n1 { r(X) : r_db(X) } 1.\n",
        )
        .unwrap();
        let g = ground(&p).unwrap();
        let models = enumerate_models(&g, 100).unwrap();
        assert_eq!(models.len(), 4);
        // First group varies slowest.
        assert!(models[0].contains(&Atom::new("s", vec![Term::constant("a")])));
        assert!(models[0].contains(&Atom::new("r", vec![Term::constant("x")])));
        assert!(models[1].contains(&Atom::new("r", vec![Term::constant("y")])));
        assert!(models[2].contains(&Atom::new("s", vec![Term::constant("b")])));
    }

    #[test]
    fn integer_comparison() {
        let p = parse_program("d(r1, p, 1).\nd(r2, d, 2).\nb(I) :- d(R, E, I), d(R2, E2, J), J < I.\n")
            .unwrap();
        let g = ground(&p).unwrap();
        let m = solve_unique(&g).unwrap();
        assert!(m.contains(&Atom::new("b", vec![Term::Int(2)])));
        assert!(!m.contains(&Atom::new("b", vec![Term::Int(1)])));
    }

    #[test]
    fn empty_universe_error() {
        let p = parse_program("q :- not p(X).\n").unwrap();
        let err = ground(&p).unwrap_err();
        assert!(matches!(err, EngineError::EmptyUniverse { .. }));
    }

    #[test]
    fn facts_level_one() {
        let p = parse_program("a.\nb :- a.\nc :- b.\n").unwrap();
        let g = ground(&p).unwrap();
        let levels = check_acyclic(&g).unwrap();
        let a = g.atom_id(&Atom::nullary("a")).unwrap();
        let c = g.atom_id(&Atom::nullary("c")).unwrap();
        assert_eq!(levels.level(a), 1);
        assert_eq!(levels.level(c), 3);
    }
}
