//! Abstract policy model: the component tree (policy sets, policies, rules),
//! attribute domains, requests and the three value lattices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// The four attribute categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrCategory {
    Subject,
    Action,
    Resource,
    Environment,
}

impl AttrCategory {
    pub const ALL: [AttrCategory; 4] = [
        AttrCategory::Subject,
        AttrCategory::Action,
        AttrCategory::Resource,
        AttrCategory::Environment,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            AttrCategory::Subject => "subject",
            AttrCategory::Action => "action",
            AttrCategory::Resource => "resource",
            AttrCategory::Environment => "environment",
        }
    }

    pub fn from_keyword(s: &str) -> Option<AttrCategory> {
        Self::ALL.into_iter().find(|c| c.keyword() == s)
    }

    /// Section header used in domains files ("subjects", ...).
    pub fn plural(self) -> &'static str {
        match self {
            AttrCategory::Subject => "subjects",
            AttrCategory::Action => "actions",
            AttrCategory::Resource => "resources",
            AttrCategory::Environment => "environments",
        }
    }

    /// Name of the generator database predicate ("subject_db", ...).
    pub fn db_predicate(self) -> String {
        format!("{}_db", self.keyword())
    }
}

impl fmt::Display for AttrCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A single category/value pair matched against a request.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchExpr {
    pub category: AttrCategory,
    pub value: String,
}

/// Conjunction of matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllOf {
    pub matches: Vec<MatchExpr>,
}

/// Disjunction of AllOf alternatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyOf {
    pub allofs: Vec<AllOf>,
}

/// Applicability structure of a component. `Null` is the canonical empty
/// target; a zero-length AnyOf list is not storable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Null,
    AnyOfs(Vec<AnyOf>),
}

impl Target {
    pub fn from_anyofs(anyofs: Vec<AnyOf>) -> Target {
        if anyofs.is_empty() {
            Target::Null
        } else {
            Target::AnyOfs(anyofs)
        }
    }
}

/// Argument of a condition predicate or comparison: a variable (upper-case
/// initial) or a constant token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CondTerm {
    Var(String),
    Const(String),
}

impl fmt::Display for CondTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondTerm::Var(v) => f.write_str(v),
            CondTerm::Const(c) => f.write_str(c),
        }
    }
}

/// Boolean condition formula over unary predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditionExpr {
    True,
    Pred { name: String, arg: CondTerm },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
    Eq(CondTerm, CondTerm),
    Ne(CondTerm, CondTerm),
}

impl ConditionExpr {
    /// Variables occurring anywhere in the formula.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ConditionExpr::True => {}
            ConditionExpr::Pred { arg, .. } => {
                if let CondTerm::Var(v) = arg {
                    out.insert(v.clone());
                }
            }
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ConditionExpr::Not(a) => a.collect_vars(out),
            ConditionExpr::Eq(a, b) | ConditionExpr::Ne(a, b) => {
                for t in [a, b] {
                    if let CondTerm::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
        }
    }

    /// Predicate names occurring anywhere in the formula.
    pub fn predicate_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_preds(&mut out);
        out
    }

    fn collect_preds(&self, out: &mut BTreeSet<String>) {
        match self {
            ConditionExpr::True | ConditionExpr::Eq(..) | ConditionExpr::Ne(..) => {}
            ConditionExpr::Pred { name, .. } => {
                out.insert(name.clone());
            }
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
                a.collect_preds(out);
                b.collect_preds(out);
            }
            ConditionExpr::Not(a) => a.collect_preds(out),
        }
    }

    /// Range restriction: every variable used in an equality or inequality
    /// must also occur in at least one positive predicate leaf.
    pub fn is_range_restricted(&self) -> bool {
        self.range_violations().is_empty()
    }

    /// Compared variables that never occur in a positive predicate leaf.
    pub fn range_violations(&self) -> BTreeSet<String> {
        let mut positive = BTreeSet::new();
        let mut compared = BTreeSet::new();
        self.split_vars(true, &mut positive, &mut compared);
        compared.difference(&positive).cloned().collect()
    }

    fn split_vars(
        &self,
        polarity: bool,
        positive: &mut BTreeSet<String>,
        compared: &mut BTreeSet<String>,
    ) {
        match self {
            ConditionExpr::True => {}
            ConditionExpr::Pred { arg, .. } => {
                if polarity {
                    if let CondTerm::Var(v) = arg {
                        positive.insert(v.clone());
                    }
                }
            }
            ConditionExpr::And(a, b) | ConditionExpr::Or(a, b) => {
                a.split_vars(polarity, positive, compared);
                b.split_vars(polarity, positive, compared);
            }
            ConditionExpr::Not(a) => a.split_vars(!polarity, positive, compared),
            ConditionExpr::Eq(a, b) | ConditionExpr::Ne(a, b) => {
                for t in [a, b] {
                    if let CondTerm::Var(v) = t {
                        compared.insert(v.clone());
                    }
                }
            }
        }
    }
}

/// Rule effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Permit,
    Deny,
}

impl Effect {
    pub fn keyword(self) -> &'static str {
        match self {
            Effect::Permit => "permit",
            Effect::Deny => "deny",
        }
    }

    pub fn decision(self) -> Decision {
        match self {
            Effect::Permit => Decision::Permit,
            Effect::Deny => Decision::Deny,
        }
    }
}

/// The four combining algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CombiningAlgorithm {
    PermitOverrides,
    DenyOverrides,
    FirstApplicable,
    OnlyOneApplicable,
}

impl CombiningAlgorithm {
    pub const ALL: [CombiningAlgorithm; 4] = [
        CombiningAlgorithm::PermitOverrides,
        CombiningAlgorithm::DenyOverrides,
        CombiningAlgorithm::FirstApplicable,
        CombiningAlgorithm::OnlyOneApplicable,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            CombiningAlgorithm::PermitOverrides => "po",
            CombiningAlgorithm::DenyOverrides => "do",
            CombiningAlgorithm::FirstApplicable => "fa",
            CombiningAlgorithm::OnlyOneApplicable => "ooa",
        }
    }

    pub fn from_keyword(s: &str) -> Option<CombiningAlgorithm> {
        Self::ALL.into_iter().find(|c| c.keyword() == s)
    }
}

impl fmt::Display for CombiningAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Match value lattice {m, nm}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchValue {
    Match,
    NoMatch,
}

impl MatchValue {
    pub fn token(self) -> &'static str {
        match self {
            MatchValue::Match => "m",
            MatchValue::NoMatch => "nm",
        }
    }
}

/// Condition value lattice {t, f}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondValue {
    True,
    False,
}

impl CondValue {
    pub fn token(self) -> &'static str {
        match self {
            CondValue::True => "t",
            CondValue::False => "f",
        }
    }
}

/// Decision lattice {p, d, na}. No indeterminate member exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decision {
    Permit,
    Deny,
    NotApplicable,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Permit, Decision::Deny, Decision::NotApplicable];

    pub fn token(self) -> &'static str {
        match self {
            Decision::Permit => "p",
            Decision::Deny => "d",
            Decision::NotApplicable => "na",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Decision::Permit => "permit",
            Decision::Deny => "deny",
            Decision::NotApplicable => "not_applicable",
        }
    }

    pub fn from_token(s: &str) -> Option<Decision> {
        Self::ALL.into_iter().find(|d| d.token() == s)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Atomic permit/deny unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub effect: Effect,
    pub target: Target,
    pub condition: ConditionExpr,
}

/// Container of rules combined with one algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub id: String,
    pub target: Target,
    pub children: Vec<String>,
    pub comb: CombiningAlgorithm,
}

/// Container of policies and/or policy sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySet {
    pub id: String,
    pub target: Target,
    pub children: Vec<String>,
    pub comb: CombiningAlgorithm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Rule(Rule),
    Policy(Policy),
    PolicySet(PolicySet),
}

impl Component {
    pub fn id(&self) -> &str {
        match self {
            Component::Rule(r) => &r.id,
            Component::Policy(p) => &p.id,
            Component::PolicySet(ps) => &ps.id,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Component::Rule(_) => "rule",
            Component::Policy(_) => "policy",
            Component::PolicySet(_) => "policyset",
        }
    }

    pub fn children(&self) -> &[String] {
        match self {
            Component::Rule(_) => &[],
            Component::Policy(p) => &p.children,
            Component::PolicySet(ps) => &ps.children,
        }
    }

    pub fn target(&self) -> &Target {
        match self {
            Component::Rule(r) => &r.target,
            Component::Policy(p) => &p.target,
            Component::PolicySet(ps) => &ps.target,
        }
    }
}

/// One ground fact of a request: an attribute pair or an external-state
/// predicate instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    Attr(AttrCategory, String),
    External(String, Vec<String>),
}

/// A request is a finite set of facts.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Request {
    pub facts: BTreeSet<Fact>,
}

impl Request {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Request {
        Request {
            facts: facts.into_iter().collect(),
        }
    }

    pub fn contains_attr(&self, category: AttrCategory, value: &str) -> bool {
        self.facts
            .contains(&Fact::Attr(category, value.to_string()))
    }

    /// External-state values asserted for a unary predicate.
    pub fn external_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.facts.iter().filter_map(move |f| match f {
            Fact::External(n, args) if n == name && args.len() == 1 => Some(args[0].as_str()),
            _ => None,
        })
    }
}

/// Per-category value universes plus the finite relations backing condition
/// predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeDomains {
    values: BTreeMap<AttrCategory, Vec<String>>,
    pub relations: BTreeMap<String, BTreeSet<Vec<String>>>,
}

impl AttributeDomains {
    pub fn new() -> AttributeDomains {
        AttributeDomains::default()
    }

    pub fn set_values(&mut self, category: AttrCategory, values: Vec<String>) {
        self.values.insert(category, values);
    }

    pub fn values(&self, category: AttrCategory) -> &[String] {
        self.values.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, category: AttrCategory, value: &str) -> bool {
        self.values(category).iter().any(|v| v == value)
    }

    pub fn add_relation(&mut self, name: &str, tuples: Vec<Vec<String>>) {
        self.relations
            .entry(name.to_string())
            .or_default()
            .extend(tuples);
    }

    pub fn has_relation(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn relation_holds(&self, name: &str, arg: &str) -> bool {
        self.relations
            .get(name)
            .map(|tuples| tuples.contains(&vec![arg.to_string()]))
            .unwrap_or(false)
    }

    /// All constants appearing in relation tuples.
    pub fn relation_constants(&self) -> BTreeSet<String> {
        self.relations
            .values()
            .flatten()
            .flatten()
            .cloned()
            .collect()
    }

    /// Sorted values of a category, the enumeration order for analysis.
    pub fn sorted_values(&self, category: AttrCategory) -> Vec<String> {
        let mut vs: Vec<String> = self.values(category).to_vec();
        vs.sort();
        vs
    }

    /// Non-empty categories in fixed order, with sorted values.
    pub fn non_empty_categories(&self) -> Vec<(AttrCategory, Vec<String>)> {
        AttrCategory::ALL
            .into_iter()
            .filter(|c| !self.values(*c).is_empty())
            .map(|c| (c, self.sorted_values(c)))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate identifier '{0}'")]
    DuplicateId(String),
    #[error("component '{parent}' references undefined child '{child}'")]
    DanglingReference { parent: String, child: String },
    #[error("component '{0}' has more than one parent")]
    MultipleParents(String),
    #[error("reference cycle involving '{0}'")]
    ReferenceCycle(String),
    #[error("no root policy set found")]
    NoRoot,
    #[error("multiple roots found: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("root component '{0}' is not a policy set")]
    RootNotPolicySet(String),
    #[error("policy '{parent}' child '{child}' is not a rule")]
    PolicyChildNotRule { parent: String, child: String },
    #[error("policy set '{parent}' child '{child}' is a rule")]
    PolicySetChildIsRule { parent: String, child: String },
    #[error("component '{0}' has an empty children list")]
    EmptyChildren(String),
    #[error("invalid identifier '{0}'")]
    InvalidIdentifier(String),
    #[error("match value '{value}' at {path} is not in the {category} domain")]
    UnknownMatchValue {
        path: String,
        category: AttrCategory,
        value: String,
    },
    #[error("rule '{rule}': condition is not range-restricted (variable {var})")]
    ConditionNotRangeRestricted { rule: String, var: String },
    #[error("rule '{rule}': unknown condition predicate '{name}'")]
    UnknownPredicate { rule: String, name: String },
    #[error("empty match value at {0}")]
    EmptyMatchValue(String),
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_uppercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The identified component tree rooted at one policy set. Immutable after
/// build; safe for concurrent reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyStore {
    components: Vec<Component>,
    index: BTreeMap<String, usize>,
    root: String,
}

impl PolicyStore {
    pub fn root_id(&self) -> &str {
        &self.root
    }

    pub fn get(&self, id: &str) -> Option<&Component> {
        self.index.get(id).map(|&i| &self.components[i])
    }

    /// Components in their original declaration order.
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.components.iter().filter_map(|c| match c {
            Component::Rule(r) => Some(r),
            _ => None,
        })
    }

    pub fn rule_ids(&self) -> Vec<String> {
        self.rules().map(|r| r.id.clone()).collect()
    }

    /// Parent of a component id (the root has none).
    pub fn parent_of(&self, id: &str) -> Option<&Component> {
        self.components
            .iter()
            .find(|c| c.children().iter().any(|ch| ch == id))
    }

    /// Ids in pre-order from the root.
    pub fn preorder_ids(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![self.root.clone()];
        while let Some(id) = stack.pop() {
            let c = self.get(&id).expect("store invariant");
            out.push(id.clone());
            for child in c.children().iter().rev() {
                stack.push(child.clone());
            }
        }
        out
    }

    /// Copy of this store with one rule removed from its parent's children
    /// (used by reachability's removal-invariance check). Returns None if the
    /// removal would leave an empty child list or the id is not a rule.
    pub fn without_rule(&self, rule_id: &str) -> Option<PolicyStore> {
        if !matches!(self.get(rule_id), Some(Component::Rule(_))) {
            return None;
        }
        let mut components: Vec<Component> = Vec::new();
        for c in &self.components {
            match c {
                Component::Rule(r) if r.id == rule_id => continue,
                Component::Policy(p) if p.children.iter().any(|ch| ch == rule_id) => {
                    let children: Vec<String> = p
                        .children
                        .iter()
                        .filter(|ch| ch.as_str() != rule_id)
                        .cloned()
                        .collect();
                    if children.is_empty() {
                        return None;
                    }
                    components.push(Component::Policy(Policy {
                        children,
                        ..p.clone()
                    }));
                }
                other => components.push(other.clone()),
            }
        }
        let index = components
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id().to_string(), i))
            .collect();
        Some(PolicyStore {
            components,
            index,
            root: self.root.clone(),
        })
    }
}

/// Builds and validates a policy store from parsed components.
pub fn build_store(
    components: Vec<Component>,
    domains: &AttributeDomains,
) -> Result<PolicyStore, ModelError> {
    if components.is_empty() {
        return Err(ModelError::NoRoot);
    }
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, c) in components.iter().enumerate() {
        if !valid_identifier(c.id()) {
            return Err(ModelError::InvalidIdentifier(c.id().to_string()));
        }
        if index.insert(c.id().to_string(), i).is_some() {
            return Err(ModelError::DuplicateId(c.id().to_string()));
        }
    }

    // Child references resolve, arity constraints hold, each node has at
    // most one parent.
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    for c in &components {
        match c {
            Component::Rule(_) => {}
            Component::Policy(_) | Component::PolicySet(_) => {
                if c.children().is_empty() {
                    return Err(ModelError::EmptyChildren(c.id().to_string()));
                }
                for child in c.children() {
                    let ci = *index
                        .get(child)
                        .ok_or_else(|| ModelError::DanglingReference {
                            parent: c.id().to_string(),
                            child: child.clone(),
                        })?;
                    match (c, &components[ci]) {
                        (Component::Policy(_), Component::Rule(_)) => {}
                        (Component::Policy(_), _) => {
                            return Err(ModelError::PolicyChildNotRule {
                                parent: c.id().to_string(),
                                child: child.clone(),
                            })
                        }
                        (Component::PolicySet(_), Component::Rule(_)) => {
                            return Err(ModelError::PolicySetChildIsRule {
                                parent: c.id().to_string(),
                                child: child.clone(),
                            })
                        }
                        _ => {}
                    }
                    if parent.insert(child.as_str(), c.id()).is_some() {
                        return Err(ModelError::MultipleParents(child.clone()));
                    }
                }
            }
        }
    }

    // Exactly one parentless policy set, and everything reachable from it.
    let roots: Vec<String> = components
        .iter()
        .filter(|c| !parent.contains_key(c.id()))
        .map(|c| c.id().to_string())
        .collect();
    let root = match roots.as_slice() {
        [] => {
            // Every node has a parent: there must be a cycle.
            return Err(ModelError::ReferenceCycle(
                components[0].id().to_string(),
            ));
        }
        [r] => r.clone(),
        _ => return Err(ModelError::MultipleRoots(roots)),
    };
    if !matches!(components[index[&root]], Component::PolicySet(_)) {
        return Err(ModelError::RootNotPolicySet(root));
    }
    // Reachability walk; a node unreachable from the root while all nodes
    // have parents means a cycle detached from the root.
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut stack = vec![root.as_str()];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            return Err(ModelError::ReferenceCycle(id.to_string()));
        }
        for child in components[index[id]].children() {
            stack.push(child);
        }
    }
    if seen.len() != components.len() {
        let missing = components
            .iter()
            .find(|c| !seen.contains(c.id()))
            .expect("counted");
        return Err(ModelError::ReferenceCycle(missing.id().to_string()));
    }

    // Match values are drawn from the declared domains; conditions are
    // range-restricted over known predicates.
    for c in &components {
        check_target(c.target(), c.id(), domains)?;
        if let Component::Rule(r) = c {
            if let Some(var) = r.condition.range_violations().into_iter().next() {
                return Err(ModelError::ConditionNotRangeRestricted {
                    rule: r.id.clone(),
                    var,
                });
            }
            for name in r.condition.predicate_names() {
                if !domains.has_relation(&name) {
                    return Err(ModelError::UnknownPredicate {
                        rule: r.id.clone(),
                        name,
                    });
                }
            }
        }
    }

    Ok(PolicyStore {
        components,
        index,
        root,
    })
}

fn check_target(
    target: &Target,
    component_id: &str,
    domains: &AttributeDomains,
) -> Result<(), ModelError> {
    let Target::AnyOfs(anyofs) = target else {
        return Ok(());
    };
    for (i, anyof) in anyofs.iter().enumerate() {
        for (j, allof) in anyof.allofs.iter().enumerate() {
            for (k, m) in allof.matches.iter().enumerate() {
                let path = format!("{component_id}/anyof[{i}]/allof[{j}]/match[{k}]");
                if m.value.is_empty() {
                    return Err(ModelError::EmptyMatchValue(path));
                }
                if !domains.contains(m.category, &m.value) {
                    return Err(ModelError::UnknownMatchValue {
                        path,
                        category: m.category,
                        value: m.value.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}
