//! Parsing and serialization of the three text formats: policy files,
//! attribute-domain files and request files.
//!
//! All parsers are total: any input yields either a value or a diagnostic
//! carrying a source span and the expected-token set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{
    AllOf, AnyOf, AttrCategory, AttributeDomains, CombiningAlgorithm, Component, CondTerm,
    ConditionExpr, Effect, Fact, MatchExpr, Policy, PolicySet, PolicyStore, Request, Rule, Target,
};

/// Position of a token in its source file. Lines and columns start at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub col_start: u32,
    pub col_end: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col_start)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

/// A parsed top-level component together with where it was declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedComponent {
    pub component: Component,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Word(String),
    Punct(char),
    EqOp,
    NeOp,
    Eof,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("'{w}'"),
            TokenKind::Punct(c) => format!("'{c}'"),
            TokenKind::EqOp => "'=='".to_string(),
            TokenKind::NeOp => "'!='".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    span: SourceSpan,
}

fn lex(text: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let start_col = col;
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Word(word),
                    span: SourceSpan {
                        file: file.to_string(),
                        line,
                        col_start: start_col,
                        col_end: col,
                    },
                });
            }
            '!' | '=' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    tokens.push(Token {
                        kind: if c == '!' { TokenKind::NeOp } else { TokenKind::EqOp },
                        span: SourceSpan {
                            file: file.to_string(),
                            line,
                            col_start: start_col,
                            col_end: col,
                        },
                    });
                } else if c == '=' {
                    tokens.push(Token {
                        kind: TokenKind::Punct('='),
                        span: SourceSpan {
                            file: file.to_string(),
                            line,
                            col_start: start_col,
                            col_end: col,
                        },
                    });
                } else {
                    return Err(ParseError {
                        span: SourceSpan {
                            file: file.to_string(),
                            line,
                            col_start: start_col,
                            col_end: col,
                        },
                        message: "unexpected character '!'".to_string(),
                        expected: vec!["'!='".to_string()],
                    });
                }
            }
            '[' | ']' | '(' | ')' | ',' | '<' | '>' | '|' | '&' | '{' | '}' | ':' => {
                chars.next();
                col += 1;
                tokens.push(Token {
                    kind: TokenKind::Punct(c),
                    span: SourceSpan {
                        file: file.to_string(),
                        line,
                        col_start: start_col,
                        col_end: col,
                    },
                });
            }
            other => {
                return Err(ParseError {
                    span: SourceSpan {
                        file: file.to_string(),
                        line,
                        col_start: start_col,
                        col_end: col + 1,
                    },
                    message: format!("unexpected character '{other}'"),
                    expected: Vec::new(),
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: SourceSpan {
            file: file.to_string(),
            line,
            col_start: col,
            col_end: col,
        },
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str, file: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            tokens: lex(text, file)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn bump(&mut self) -> TokenKind {
        let t = self.tokens[self.pos].kind.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), TokenKind::Eof)
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            message: format!(
                "unexpected {}, expected {}",
                self.peek().describe(),
                expected.join(" or ")
            ),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn error_msg<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            message: message.into(),
            expected: Vec::new(),
        })
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == &TokenKind::Punct(c) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("'{c}'")])
        }
    }

    fn expect_word(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            TokenKind::Word(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => self.error(&[what]),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            TokenKind::Word(w) if w == kw => {
                self.bump();
                Ok(())
            }
            _ => self.error(&[&format!("'{kw}'")]),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), TokenKind::Word(w) if w == kw) {
            self.bump();
            true
        } else {
            false
        }
    }
}

fn is_variable_token(w: &str) -> bool {
    w.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// Parses a policy file into its component list.
pub fn parse_policy_file(text: &str, file: &str) -> Result<Vec<ParsedComponent>, ParseError> {
    let mut p = Parser::new(text, file)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(parse_component(&mut p)?);
    }
    if out.is_empty() {
        return p.error(&["'policyset'", "'policy'", "'rule'"]);
    }
    Ok(out)
}

fn parse_component(p: &mut Parser) -> Result<ParsedComponent, ParseError> {
    let span = p.span();
    let kw = match p.peek() {
        TokenKind::Word(w) => w.clone(),
        _ => return p.error(&["'policyset'", "'policy'", "'rule'"]),
    };
    let component = match kw.as_str() {
        "rule" => {
            p.bump();
            let id = p.expect_word("rule identifier")?;
            p.expect_punct('=')?;
            p.expect_punct('[')?;
            let effect = parse_effect(p)?;
            p.expect_punct(',')?;
            let target = parse_target(p)?;
            p.expect_punct(',')?;
            let condition = parse_condition(p)?;
            p.expect_punct(']')?;
            Component::Rule(Rule {
                id,
                effect,
                target,
                condition,
            })
        }
        "policy" | "policyset" => {
            p.bump();
            let id = p.expect_word("identifier")?;
            p.expect_punct('=')?;
            p.expect_punct('[')?;
            let target = parse_target(p)?;
            p.expect_punct(',')?;
            p.expect_punct('<')?;
            let mut children = vec![p.expect_word("child identifier")?];
            while p.peek() == &TokenKind::Punct(',') {
                p.bump();
                children.push(p.expect_word("child identifier")?);
            }
            p.expect_punct('>')?;
            p.expect_punct(',')?;
            let comb_word = p.expect_word("combining algorithm")?;
            let comb = match CombiningAlgorithm::from_keyword(&comb_word) {
                Some(c) => c,
                None => {
                    p.pos -= 1;
                    return p.error_msg(format!(
                        "unknown combining algorithm '{comb_word}' (expected po, do, fa or ooa)"
                    ));
                }
            };
            p.expect_punct(']')?;
            if kw == "policy" {
                Component::Policy(Policy {
                    id,
                    target,
                    children,
                    comb,
                })
            } else {
                Component::PolicySet(PolicySet {
                    id,
                    target,
                    children,
                    comb,
                })
            }
        }
        _ => return p.error(&["'policyset'", "'policy'", "'rule'"]),
    };
    Ok(ParsedComponent { component, span })
}

fn parse_effect(p: &mut Parser) -> Result<Effect, ParseError> {
    let w = p.expect_word("effect")?;
    match w.as_str() {
        "permit" => Ok(Effect::Permit),
        "deny" => Ok(Effect::Deny),
        other => {
            p.pos -= 1;
            p.error_msg(format!("unknown effect '{other}' (expected permit or deny)"))
        }
    }
}

fn parse_target(p: &mut Parser) -> Result<Target, ParseError> {
    if p.eat_keyword("null") {
        return Ok(Target::Null);
    }
    p.expect_keyword("target")?;
    p.expect_punct('(')?;
    let mut anyofs = vec![parse_anyof(p)?];
    while p.peek() == &TokenKind::Punct(',') {
        p.bump();
        anyofs.push(parse_anyof(p)?);
    }
    p.expect_punct(')')?;
    Ok(Target::AnyOfs(anyofs))
}

fn parse_anyof(p: &mut Parser) -> Result<AnyOf, ParseError> {
    let mut allofs = vec![parse_allof(p)?];
    while p.peek() == &TokenKind::Punct('|') {
        p.bump();
        allofs.push(parse_allof(p)?);
    }
    Ok(AnyOf { allofs })
}

fn parse_allof(p: &mut Parser) -> Result<AllOf, ParseError> {
    let mut matches = vec![parse_match(p)?];
    while p.peek() == &TokenKind::Punct('&') {
        p.bump();
        matches.push(parse_match(p)?);
    }
    Ok(AllOf { matches })
}

fn parse_match(p: &mut Parser) -> Result<MatchExpr, ParseError> {
    let w = p.expect_word("attribute category")?;
    let category = match AttrCategory::from_keyword(&w) {
        Some(c) => c,
        None => {
            p.pos -= 1;
            return p.error_msg(format!(
                "unknown attribute category '{w}' (expected subject, action, resource or environment)"
            ));
        }
    };
    p.expect_punct('(')?;
    let value = p.expect_word("attribute value")?;
    if is_variable_token(&value) {
        p.pos -= 1;
        return p.error_msg(format!("attribute value '{value}' must not start upper-case"));
    }
    p.expect_punct(')')?;
    Ok(MatchExpr { category, value })
}

fn parse_condition(p: &mut Parser) -> Result<ConditionExpr, ParseError> {
    if p.eat_keyword("true") {
        return Ok(ConditionExpr::True);
    }
    p.expect_keyword("cond")?;
    p.expect_punct('(')?;
    let expr = parse_bool_or(p)?;
    p.expect_punct(')')?;
    Ok(expr)
}

fn parse_bool_or(p: &mut Parser) -> Result<ConditionExpr, ParseError> {
    let mut lhs = parse_bool_and(p)?;
    while p.eat_keyword("or") {
        let rhs = parse_bool_and(p)?;
        lhs = ConditionExpr::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_bool_and(p: &mut Parser) -> Result<ConditionExpr, ParseError> {
    let mut lhs = parse_bool_unary(p)?;
    while p.eat_keyword("and") {
        let rhs = parse_bool_unary(p)?;
        lhs = ConditionExpr::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_bool_unary(p: &mut Parser) -> Result<ConditionExpr, ParseError> {
    if p.eat_keyword("not") {
        let inner = parse_bool_unary(p)?;
        return Ok(ConditionExpr::Not(Box::new(inner)));
    }
    parse_bool_primary(p)
}

fn parse_bool_primary(p: &mut Parser) -> Result<ConditionExpr, ParseError> {
    if p.peek() == &TokenKind::Punct('(') {
        p.bump();
        let inner = parse_bool_or(p)?;
        p.expect_punct(')')?;
        return Ok(inner);
    }
    let word = p.expect_word("condition predicate or term")?;
    match p.peek() {
        TokenKind::Punct('(') => {
            if is_variable_token(&word) {
                p.pos -= 1;
                return p.error_msg(format!("predicate name '{word}' must not start upper-case"));
            }
            p.bump();
            let arg_w = p.expect_word("predicate argument")?;
            let arg = word_to_term(&arg_w);
            p.expect_punct(')')?;
            Ok(ConditionExpr::Pred { name: word, arg })
        }
        TokenKind::EqOp | TokenKind::NeOp => {
            let is_eq = p.peek() == &TokenKind::EqOp;
            p.bump();
            let rhs_w = p.expect_word("comparison term")?;
            let lhs = word_to_term(&word);
            let rhs = word_to_term(&rhs_w);
            Ok(if is_eq {
                ConditionExpr::Eq(lhs, rhs)
            } else {
                ConditionExpr::Ne(lhs, rhs)
            })
        }
        _ => p.error(&["'('", "'=='", "'!='"]),
    }
}

fn word_to_term(w: &str) -> CondTerm {
    if is_variable_token(w) {
        CondTerm::Var(w.to_string())
    } else {
        CondTerm::Const(w.to_string())
    }
}

/// Parses an attribute-domains file.
pub fn parse_domains(text: &str, file: &str) -> Result<AttributeDomains, ParseError> {
    let mut p = Parser::new(text, file)?;
    let mut dom = AttributeDomains::new();
    let mut seen_sections: BTreeSet<AttrCategory> = BTreeSet::new();
    let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    while !p.at_eof() {
        let w = p.expect_word("section header or 'relation'")?;
        if let Some(cat) = AttrCategory::ALL.into_iter().find(|c| c.plural() == w) {
            if !seen_sections.insert(cat) {
                p.pos -= 1;
                return p.error_msg(format!("duplicate section '{w}'"));
            }
            p.expect_punct(':')?;
            let mut values: Vec<String> = Vec::new();
            loop {
                let tok_pos = p.pos;
                let v = p.expect_word("attribute value")?;
                if is_variable_token(&v) {
                    p.pos = tok_pos;
                    return p.error_msg(format!("attribute value '{v}' must not start upper-case"));
                }
                if values.contains(&v) {
                    p.pos = tok_pos;
                    return p.error_msg(format!("duplicate token '{v}' in section '{w}'"));
                }
                values.push(v);
                if p.peek() == &TokenKind::Punct(',') {
                    p.bump();
                } else {
                    break;
                }
            }
            dom.set_values(cat, values);
        } else if w == "relation" {
            let name = p.expect_word("relation name")?;
            if is_variable_token(&name) {
                p.pos -= 1;
                return p.error_msg(format!("relation name '{name}' must not start upper-case"));
            }
            p.expect_punct(':')?;
            let entry = relations.entry(name).or_default();
            loop {
                p.expect_punct('(')?;
                let mut tuple = vec![p.expect_word("constant")?];
                while p.peek() == &TokenKind::Punct(',') {
                    p.bump();
                    tuple.push(p.expect_word("constant")?);
                }
                p.expect_punct(')')?;
                entry.insert(tuple);
                if p.peek() == &TokenKind::Punct(',') {
                    p.bump();
                } else {
                    break;
                }
            }
        } else {
            p.pos -= 1;
            return p.error(&["'subjects:'", "'actions:'", "'resources:'", "'environments:'", "'relation'"]);
        }
    }
    dom.relations = relations;
    Ok(dom)
}

/// Parses a request file. Fact names must be attribute categories or
/// relation names declared in `dom`.
pub fn parse_request(
    text: &str,
    file: &str,
    dom: &AttributeDomains,
) -> Result<Request, ParseError> {
    let mut p = Parser::new(text, file)?;
    p.expect_punct('{')?;
    let mut facts: BTreeSet<Fact> = BTreeSet::new();
    loop {
        let name_pos = p.pos;
        let name = p.expect_word("fact name")?;
        p.expect_punct('(')?;
        let mut args = vec![p.expect_word("value")?];
        while p.peek() == &TokenKind::Punct(',') {
            p.bump();
            args.push(p.expect_word("value")?);
        }
        p.expect_punct(')')?;
        if let Some(cat) = AttrCategory::from_keyword(&name) {
            if args.len() != 1 {
                p.pos = name_pos;
                return p.error_msg(format!(
                    "attribute fact '{name}' takes exactly one value"
                ));
            }
            facts.insert(Fact::Attr(cat, args.pop().expect("one arg")));
        } else if dom.has_relation(&name) {
            facts.insert(Fact::External(name, args));
        } else {
            p.pos = name_pos;
            return p.error_msg(format!(
                "unknown category '{name}' (not an attribute category or declared relation)"
            ));
        }
        if p.peek() == &TokenKind::Punct(',') {
            p.bump();
        } else {
            break;
        }
    }
    p.expect_punct('}')?;
    if !p.at_eof() {
        return p.error(&["end of input"]);
    }
    Ok(Request { facts })
}

// ---------------------------------------------------------------------------
// Serialization. Every writer is the inverse of its parser.

pub fn serialize_store(store: &PolicyStore) -> String {
    let mut out = String::new();
    for c in store.components() {
        match c {
            Component::Rule(r) => {
                out.push_str(&format!(
                    "rule {} = [{}, {}, {}]\n",
                    r.id,
                    r.effect.keyword(),
                    target_text(&r.target),
                    condition_text(&r.condition)
                ));
            }
            Component::Policy(p) => {
                out.push_str(&format!(
                    "policy {} = [{}, <{}>, {}]\n",
                    p.id,
                    target_text(&p.target),
                    p.children.join(", "),
                    p.comb.keyword()
                ));
            }
            Component::PolicySet(ps) => {
                out.push_str(&format!(
                    "policyset {} = [{}, <{}>, {}]\n",
                    ps.id,
                    target_text(&ps.target),
                    ps.children.join(", "),
                    ps.comb.keyword()
                ));
            }
        }
    }
    out
}

fn target_text(t: &Target) -> String {
    match t {
        Target::Null => "null".to_string(),
        Target::AnyOfs(anyofs) => {
            let parts: Vec<String> = anyofs
                .iter()
                .map(|anyof| {
                    anyof
                        .allofs
                        .iter()
                        .map(|allof| {
                            allof
                                .matches
                                .iter()
                                .map(|m| format!("{}({})", m.category.keyword(), m.value))
                                .collect::<Vec<_>>()
                                .join(" & ")
                        })
                        .collect::<Vec<_>>()
                        .join(" | ")
                })
                .collect();
            format!("target({})", parts.join(", "))
        }
    }
}

fn condition_text(c: &ConditionExpr) -> String {
    match c {
        ConditionExpr::True => "true".to_string(),
        _ => format!("cond({})", bool_text(c, 0)),
    }
}

// Precedence levels: 0 = or, 1 = and, 2 = unary/primary.
fn bool_text(c: &ConditionExpr, level: u8) -> String {
    let (text, my_level) = match c {
        ConditionExpr::True => ("true".to_string(), 2),
        ConditionExpr::Pred { name, arg } => (format!("{name}({arg})"), 2),
        ConditionExpr::Eq(a, b) => (format!("{a} == {b}"), 2),
        ConditionExpr::Ne(a, b) => (format!("{a} != {b}"), 2),
        ConditionExpr::Not(inner) => (format!("not {}", bool_text(inner, 2)), 2),
        ConditionExpr::And(a, b) => (
            format!("{} and {}", bool_text(a, 1), bool_text(b, 2)),
            1,
        ),
        ConditionExpr::Or(a, b) => (
            format!("{} or {}", bool_text(a, 0), bool_text(b, 1)),
            0,
        ),
    };
    if my_level < level {
        format!("({text})")
    } else {
        text
    }
}

pub fn serialize_domains(dom: &AttributeDomains) -> String {
    let mut out = String::new();
    for cat in AttrCategory::ALL {
        let values = dom.values(cat);
        if !values.is_empty() {
            out.push_str(&format!("{}: {}\n", cat.plural(), values.join(", ")));
        }
    }
    for (name, tuples) in &dom.relations {
        if tuples.is_empty() {
            continue; // an empty relation has no text form
        }
        let parts: Vec<String> = tuples
            .iter()
            .map(|t| format!("({})", t.join(", ")))
            .collect();
        out.push_str(&format!("relation {name}: {}\n", parts.join(", ")));
    }
    out
}

pub fn serialize_request(q: &Request) -> String {
    let parts: Vec<String> = q
        .facts
        .iter()
        .map(|f| match f {
            Fact::Attr(cat, v) => format!("{}({v})", cat.keyword()),
            Fact::External(name, args) => format!("{name}({})", args.join(", ")),
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_store;

    fn dom() -> AttributeDomains {
        parse_domains(
            "subjects: doctor, nurse\nactions: read\nresources: record\n\
             relation patient_id: (id5)\nrelation patient_record_id: (id5)",
            "dom",
        )
        .unwrap()
    }

    #[test]
    fn parses_reference_rule() {
        let comps = parse_policy_file(
            "rule r1 = [permit, target(subject(doctor)), cond(patient_id(X) and patient_record_id(X))]",
            "t",
        )
        .unwrap();
        assert_eq!(comps.len(), 1);
        let Component::Rule(r) = &comps[0].component else {
            panic!("expected rule");
        };
        assert_eq!(r.id, "r1");
        assert_eq!(r.effect, Effect::Permit);
        assert!(matches!(r.condition, ConditionExpr::And(..)));
    }

    #[test]
    fn parses_null_target_policy() {
        let comps = parse_policy_file("policy p1 = [null, <r1>, po]", "t").unwrap();
        let Component::Policy(p) = &comps[0].component else {
            panic!("expected policy");
        };
        assert_eq!(p.id, "p1");
        assert_eq!(p.target, Target::Null);
        assert_eq!(p.children, vec!["r1"]);
        assert_eq!(p.comb, CombiningAlgorithm::PermitOverrides);
    }

    #[test]
    fn unknown_effect_is_an_error() {
        let err = parse_policy_file("rule r2 = [allow, null, true]", "t").unwrap_err();
        assert!(err.message.contains("unknown effect 'allow'"), "{err}");
    }

    #[test]
    fn unknown_combining_algorithm_is_an_error() {
        let err = parse_policy_file("policy p1 = [null, <r1>, zz]", "t").unwrap_err();
        assert!(err.message.contains("unknown combining algorithm"), "{err}");
    }

    #[test]
    fn unknown_category_is_an_error() {
        let err =
            parse_policy_file("rule r1 = [permit, target(color(red)), true]", "t").unwrap_err();
        assert!(err.message.contains("unknown attribute category"), "{err}");
    }

    #[test]
    fn syntax_error_has_span_and_expected_set() {
        let err = parse_policy_file("rule r1 = [permit target(subject(doctor)), true]", "t")
            .unwrap_err();
        assert_eq!(err.span.line, 1);
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn domains_sections_and_relations() {
        let d = dom();
        assert_eq!(d.values(AttrCategory::Subject), ["doctor", "nurse"]);
        assert!(d.values(AttrCategory::Environment).is_empty());
        assert!(d.relation_holds("patient_id", "id5"));
    }

    #[test]
    fn duplicate_domain_token_is_an_error() {
        let err = parse_domains("subjects: doctor, doctor", "t").unwrap_err();
        assert!(err.message.contains("duplicate token"), "{err}");
    }

    #[test]
    fn empty_section_is_an_error() {
        assert!(parse_domains("subjects:", "t").is_err());
    }

    #[test]
    fn request_collapses_duplicates() {
        let q = parse_request("{subject(doctor), subject(doctor)}", "t", &dom()).unwrap();
        assert_eq!(q.facts.len(), 1);
    }

    #[test]
    fn request_three_facts() {
        let q = parse_request("{subject(doctor), action(read), resource(record)}", "t", &dom())
            .unwrap();
        assert_eq!(q.facts.len(), 3);
    }

    #[test]
    fn request_unknown_category() {
        let err = parse_request("{color(red)}", "t", &dom()).unwrap_err();
        assert!(err.message.contains("unknown category 'color'"), "{err}");
        // But declared relation names are accepted as external state.
        let q = parse_request("{patient_id(id5)}", "t", &dom()).unwrap();
        assert_eq!(q.facts.len(), 1);
    }

    #[test]
    fn store_round_trip() {
        let text = "rule r1 = [permit, target(subject(doctor) & action(read) | subject(nurse), resource(record)), cond(patient_id(X) and X != id5 or not patient_id(id5))]\n\
                    policy p1 = [null, <r1>, fa]\n\
                    policyset ps1 = [target(subject(doctor)), <p1>, ooa]\n";
        let comps = parse_policy_file(text, "t").unwrap();
        let store = build_store(
            comps.into_iter().map(|c| c.component).collect(),
            &dom(),
        )
        .unwrap();
        let serialized = serialize_store(&store);
        let reparsed = parse_policy_file(&serialized, "t").unwrap();
        let store2 = build_store(
            reparsed.into_iter().map(|c| c.component).collect(),
            &dom(),
        )
        .unwrap();
        assert_eq!(store, store2);
    }

    #[test]
    fn domains_round_trip() {
        let d = dom();
        let d2 = parse_domains(&serialize_domains(&d), "t").unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn request_round_trip() {
        let q = parse_request("{subject(doctor), patient_id(id5)}", "t", &dom()).unwrap();
        let q2 = parse_request(&serialize_request(&q), "t", &dom()).unwrap();
        assert_eq!(q, q2);
    }
}
