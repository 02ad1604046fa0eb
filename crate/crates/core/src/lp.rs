//! Logic-program representation: rules with negation as failure,
//! constraints, facts and 1{...}1 choice rules, plus the solver-facing
//! text format and its re-parser.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A term: a constant symbol, an integer or a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Int(i64),
    Var(String),
}

impl Term {
    pub fn constant(s: impl Into<String>) -> Term {
        Term::Const(s.into())
    }

    pub fn var(s: impl Into<String>) -> Term {
        Term::Var(s.into())
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Int(n) => write!(f, "{n}"),
            Term::Var(v) => f.write_str(v),
        }
    }
}

/// A predicate applied to terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn nullary(predicate: impl Into<String>) -> Atom {
        Atom::new(predicate, Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(&self.predicate)
        } else {
            let args: Vec<String> = self.args.iter().map(Term::to_string).collect();
            write!(f, "{}({})", self.predicate, args.join(", "))
        }
    }
}

/// Evaluable comparison between terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    /// Disequality over constants and integers.
    Ne,
    /// Strictly-less over integers.
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
        }
    }
}

/// One body literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyLit {
    Pos(Atom),
    Neg(Atom),
    Cmp(CmpOp, Term, Term),
}

/// Rule head: an atom, or falsum for constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    Atom(Atom),
    False,
}

/// A normal rule. An empty body is the fact form `A <- T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRule {
    pub head: Head,
    pub body: Vec<BodyLit>,
}

impl LpRule {
    pub fn fact(atom: Atom) -> LpRule {
        LpRule {
            head: Head::Atom(atom),
            body: Vec::new(),
        }
    }

    pub fn rule(head: Atom, body: Vec<BodyLit>) -> LpRule {
        LpRule {
            head: Head::Atom(head),
            body,
        }
    }

    pub fn constraint(body: Vec<BodyLit>) -> LpRule {
        LpRule {
            head: Head::False,
            body,
        }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty() && matches!(self.head, Head::Atom(_))
    }
}

/// Cardinality-one choice: `1 { head : generator } 1.` Head and generator
/// share the same single variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceRule {
    pub lower: u32,
    pub upper: u32,
    pub head: Atom,
    pub generator: Atom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Rule(LpRule),
    Choice(ChoiceRule),
}

/// An ordered logic program plus its declared constant universe, used to
/// instantiate variables that no positive body literal restricts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogicProgram {
    pub statements: Vec<Statement>,
    pub universe: BTreeSet<String>,
}

impl LogicProgram {
    pub fn push_rule(&mut self, rule: LpRule) {
        self.statements.push(Statement::Rule(rule));
    }

    pub fn push_fact(&mut self, atom: Atom) {
        self.push_rule(LpRule::fact(atom));
    }

    pub fn push_choice(&mut self, choice: ChoiceRule) {
        self.statements.push(Statement::Choice(choice));
    }

    pub fn extend(&mut self, other: LogicProgram) {
        self.statements.extend(other.statements);
        self.universe.extend(other.universe);
    }

    pub fn rules(&self) -> impl Iterator<Item = &LpRule> {
        self.statements.iter().filter_map(|s| match s {
            Statement::Rule(r) => Some(r),
            Statement::Choice(_) => None,
        })
    }

    /// Adds every constant syntactically present in the program to the
    /// declared universe.
    pub fn close_universe(&mut self) {
        let mut consts: BTreeSet<String> = BTreeSet::new();
        let add_atom = |a: &Atom, consts: &mut BTreeSet<String>| {
            for t in &a.args {
                if let Term::Const(c) = t {
                    consts.insert(c.clone());
                }
            }
        };
        for s in &self.statements {
            match s {
                Statement::Rule(r) => {
                    if let Head::Atom(a) = &r.head {
                        add_atom(a, &mut consts);
                    }
                    for l in &r.body {
                        match l {
                            BodyLit::Pos(a) | BodyLit::Neg(a) => add_atom(a, &mut consts),
                            BodyLit::Cmp(_, x, y) => {
                                for t in [x, y] {
                                    if let Term::Const(c) = t {
                                        consts.insert(c.clone());
                                    }
                                }
                            }
                        }
                    }
                }
                Statement::Choice(c) => {
                    add_atom(&c.head, &mut consts);
                    add_atom(&c.generator, &mut consts);
                }
            }
        }
        self.universe.extend(consts);
    }
}

/// The text form of one rule, without the trailing newline.
pub fn serialize_rule(r: &LpRule) -> String {
    let body: Vec<String> = r
        .body
        .iter()
        .map(|l| match l {
            BodyLit::Pos(a) => a.to_string(),
            BodyLit::Neg(a) => format!("not {a}"),
            BodyLit::Cmp(op, x, y) => format!("{x} {} {y}", op.symbol()),
        })
        .collect();
    match (&r.head, body.is_empty()) {
        (Head::Atom(a), true) => format!("{a}."),
        (Head::Atom(a), false) => format!("{a} :- {}.", body.join(", ")),
        (Head::False, _) => format!(":- {}.", body.join(", ")),
    }
}

/// Serializes the program, one statement per line, in emission order.
pub fn serialize_program(p: &LogicProgram) -> String {
    let mut out = String::new();
    for s in &p.statements {
        match s {
            Statement::Rule(r) => {
                out.push_str(&serialize_rule(r));
                out.push('\n');
            }
            Statement::Choice(c) => {
                out.push_str(&format!(
                    "{} {{ {} : {} }} {}.\n",
                    c.lower, c.head, c.generator, c.upper
                ));
            }
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("program parse error at line {line}: {message}")]
pub struct ProgramParseError {
    pub line: usize,
    pub message: String,
}

/// Parses the text format produced by [`serialize_program`] (and plain
/// ASP-style programs restricted to the same constructs).
pub fn parse_program(text: &str) -> Result<LogicProgram, ProgramParseError> {
    let mut program = LogicProgram::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let stmt = line
            .strip_suffix('.')
            .ok_or_else(|| ProgramParseError {
                line: line_no,
                message: "statement must end with '.'".to_string(),
            })?
            .trim();
        if let Some(rest) = stmt.strip_prefix(":-") {
            let body = parse_body(rest.trim(), line_no)?;
            program.push_rule(LpRule::constraint(body));
        } else if stmt.contains('{') {
            program.push_choice(parse_choice(stmt, line_no)?);
        } else if let Some((head, body)) = split_once_top(stmt, ":-") {
            let head_atom = parse_atom(head.trim(), line_no)?;
            let body = parse_body(body.trim(), line_no)?;
            program.push_rule(LpRule::rule(head_atom, body));
        } else {
            program.push_fact(parse_atom(stmt, line_no)?);
        }
    }
    program.close_universe();
    Ok(program)
}

/// Splits on the first occurrence of `sep` outside parentheses.
fn split_once_top<'a>(s: &'a str, sep: &str) -> Option<(&'a str, &'a str)> {
    let bytes = s.as_bytes();
    let mut depth = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            _ if depth == 0 && s[i..].starts_with(sep) => {
                return Some((&s[..i], &s[i + sep.len()..]));
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Splits a body on top-level commas.
fn split_literals(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn parse_term(s: &str, line: usize) -> Result<Term, ProgramParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ProgramParseError {
            line,
            message: "empty term".to_string(),
        });
    }
    if let Ok(n) = s.parse::<i64>() {
        return Ok(Term::Int(n));
    }
    let first = s.chars().next().expect("non-empty");
    if !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(ProgramParseError {
            line,
            message: format!("malformed term '{s}'"),
        });
    }
    if first.is_ascii_uppercase() {
        Ok(Term::Var(s.to_string()))
    } else {
        Ok(Term::Const(s.to_string()))
    }
}

fn parse_atom(s: &str, line: usize) -> Result<Atom, ProgramParseError> {
    let s = s.trim();
    match s.find('(') {
        None => {
            if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                Err(ProgramParseError {
                    line,
                    message: format!("malformed atom '{s}'"),
                })
            } else {
                Ok(Atom::nullary(s))
            }
        }
        Some(open) => {
            let name = &s[..open];
            let rest = s[open + 1..].strip_suffix(')').ok_or_else(|| ProgramParseError {
                line,
                message: format!("unbalanced parentheses in '{s}'"),
            })?;
            let args = split_literals(rest)
                .into_iter()
                .map(|t| parse_term(t, line))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Atom::new(name, args))
        }
    }
}

fn parse_body(s: &str, line: usize) -> Result<Vec<BodyLit>, ProgramParseError> {
    split_literals(s)
        .into_iter()
        .map(|lit| {
            if let Some(rest) = lit.strip_prefix("not ") {
                Ok(BodyLit::Neg(parse_atom(rest.trim(), line)?))
            } else if let Some((x, y)) = split_once_top(lit, "!=") {
                Ok(BodyLit::Cmp(CmpOp::Ne, parse_term(x, line)?, parse_term(y, line)?))
            } else if let Some((x, y)) = split_once_top(lit, "<") {
                Ok(BodyLit::Cmp(CmpOp::Lt, parse_term(x, line)?, parse_term(y, line)?))
            } else {
                Ok(BodyLit::Pos(parse_atom(lit, line)?))
            }
        })
        .collect()
}

fn parse_choice(s: &str, line: usize) -> Result<ChoiceRule, ProgramParseError> {
    let err = |message: String| ProgramParseError { line, message };
    let open = s.find('{').expect("caller checked");
    let close = s
        .rfind('}')
        .ok_or_else(|| err("choice rule missing '}'".to_string()))?;
    let lower: u32 = s[..open]
        .trim()
        .parse()
        .map_err(|_| err("choice rule missing lower bound".to_string()))?;
    let upper: u32 = s[close + 1..]
        .trim()
        .parse()
        .map_err(|_| err("choice rule missing upper bound".to_string()))?;
    let inner = &s[open + 1..close];
    let (head, generator) = split_once_top(inner, ":")
        .ok_or_else(|| err("choice rule missing ':' separator".to_string()))?;
    Ok(ChoiceRule {
        lower,
        upper,
        head: parse_atom(head.trim(), line)?,
        generator: parse_atom(generator.trim(), line)?,
    })
}
