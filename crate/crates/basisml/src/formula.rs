//! Modal formulae over a basis of Boolean functions.
//!
//! A formula is a variable, a function application resolved against an
//! ambient [`Basis`](crate::boolfn::Basis), or a diamond `dia(...)`. The
//! concrete syntax is `name(arg, ...)` with nullary applications written
//! bare, e.g. `and(p0, dia(not(p0)))`. Variables are `p` with an optional
//! index plus the reserved names `x`, `y`, `z` used by the rewriting
//! machinery.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::boolfn::Basis;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("byte {at}: {msg}")]
    Syntax { at: usize, msg: String },
    #[error("byte {at}: unknown function '{name}'")]
    UnknownFunction { at: usize, name: String },
    #[error("byte {at}: '{name}' takes {want} arguments, got {got}")]
    ArityMismatch {
        at: usize,
        name: String,
        want: usize,
        got: usize,
    },
    #[error("substitution lists differ in length: {vars} variables, {args} arguments")]
    SubstitutionLength { vars: usize, args: usize },
    #[error("substitution variable '{0}' listed twice")]
    SubstitutionDuplicate(String),
    #[error("formula is not over the de Morgan connectives: found '{0}'")]
    NotDeMorgan(String),
}

/// A modal formula. Application arguments are ordered; nullary applications
/// (such as the constants `top` and `bot`) are leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Var(String),
    Apply(String, Vec<Formula>),
    Diamond(Box<Formula>),
}

impl Formula {
    pub fn var(name: &str) -> Formula {
        Formula::Var(name.to_string())
    }

    pub fn apply(name: &str, args: Vec<Formula>) -> Formula {
        Formula::Apply(name.to_string(), args)
    }

    pub fn diamond(inner: Formula) -> Formula {
        Formula::Diamond(Box::new(inner))
    }

    pub fn top() -> Formula {
        Formula::apply("top", vec![])
    }

    pub fn bot() -> Formula {
        Formula::apply("bot", vec![])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Formula {
        Formula::apply("not", vec![inner])
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Formula {
        Formula::apply("and", vec![lhs, rhs])
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula::apply("or", vec![lhs, rhs])
    }

    pub fn iff(lhs: Formula, rhs: Formula) -> Formula {
        Formula::apply("iff", vec![lhs, rhs])
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.metrics().size
    }

    /// Number of leaf occurrences (variables and nullary applications).
    pub fn norm(&self) -> usize {
        self.metrics().norm
    }

    pub fn depth(&self) -> usize {
        self.metrics().depth
    }

    pub fn diamond_count(&self) -> usize {
        self.metrics().diamond_count
    }

    pub fn metrics(&self) -> Metrics {
        match self {
            Formula::Var(_) => Metrics::leaf(),
            Formula::Apply(_, args) if args.is_empty() => Metrics::leaf(),
            Formula::Apply(_, args) => {
                let mut m = Metrics {
                    size: 1,
                    norm: 0,
                    depth: 0,
                    diamond_count: 0,
                };
                for a in args {
                    let am = a.metrics();
                    m.size += am.size;
                    m.norm += am.norm;
                    m.depth = m.depth.max(1 + am.depth);
                    m.diamond_count += am.diamond_count;
                }
                m
            }
            Formula::Diamond(inner) => {
                let im = inner.metrics();
                Metrics {
                    size: 1 + im.size,
                    norm: im.norm,
                    depth: 1 + im.depth,
                    diamond_count: 1 + im.diamond_count,
                }
            }
        }
    }

    /// Variables occurring in the formula, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Apply(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Formula::Diamond(inner) => inner.collect_vars(out),
        }
    }

    /// Function names applied anywhere in the formula.
    pub fn function_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_functions(&mut out);
        out
    }

    fn collect_functions(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Var(_) => {}
            Formula::Apply(name, args) => {
                out.insert(name.clone());
                args.iter().for_each(|a| a.collect_functions(out));
            }
            Formula::Diamond(inner) => inner.collect_functions(out),
        }
    }

    /// Occurrence count of one variable.
    pub fn occurrences(&self, var: &str) -> usize {
        match self {
            Formula::Var(v) => usize::from(v == var),
            Formula::Apply(_, args) => args.iter().map(|a| a.occurrences(var)).sum(),
            Formula::Diamond(inner) => inner.occurrences(var),
        }
    }

    /// Whether any applied function name is in `names`.
    pub fn uses_any(&self, names: &BTreeSet<String>) -> bool {
        match self {
            Formula::Var(_) => false,
            Formula::Apply(name, args) => {
                names.contains(name) || args.iter().any(|a| a.uses_any(names))
            }
            Formula::Diamond(inner) => inner.uses_any(names),
        }
    }

    /// Canonical text form; `parse` inverts it for grammar-valid names.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Formula::Var(v) => out.push_str(v),
            Formula::Apply(name, args) => {
                out.push_str(name);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        a.render_into(out);
                    }
                    out.push(')');
                }
            }
            Formula::Diamond(inner) => {
                out.push_str("dia(");
                inner.render_into(out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Size, leaf count, depth, and diamond count, computed in one traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub size: usize,
    pub norm: usize,
    pub depth: usize,
    pub diamond_count: usize,
}

impl Metrics {
    fn leaf() -> Metrics {
        Metrics {
            size: 1,
            norm: 1,
            depth: 0,
            diamond_count: 0,
        }
    }
}

/// True for names the parser reads as variables: `p` with an optional
/// index, or the reserved rewriting names `x`, `y`, `z`.
pub fn is_variable_name(name: &str) -> bool {
    matches!(name, "x" | "y" | "z")
        || (name.starts_with('p') && name[1..].chars().all(|c| c.is_ascii_digit()))
}

/// Smallest `prefix{i}` (i from 1) not used as a variable in any of `avoid`.
pub fn fresh_var(prefix: &str, avoid: &[&Formula]) -> String {
    let mut used = BTreeSet::new();
    for f in avoid {
        used.extend(f.vars());
    }
    let mut i = 1usize;
    loop {
        let cand = format!("{prefix}{i}");
        if !used.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Simultaneous substitution of `args[i]` for `vars[i]` in `template`.
/// Variables not listed are left alone.
pub fn substitute(
    template: &Formula,
    vars: &[&str],
    args: &[Formula],
) -> Result<Formula, FormulaError> {
    if vars.len() != args.len() {
        return Err(FormulaError::SubstitutionLength {
            vars: vars.len(),
            args: args.len(),
        });
    }
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(FormulaError::SubstitutionDuplicate(v.to_string()));
        }
    }
    Ok(substitute_unchecked(template, vars, args))
}

fn substitute_unchecked(template: &Formula, vars: &[&str], args: &[Formula]) -> Formula {
    match template {
        Formula::Var(v) => match vars.iter().position(|name| name == v) {
            Some(i) => args[i].clone(),
            None => template.clone(),
        },
        Formula::Apply(name, children) => Formula::Apply(
            name.clone(),
            children
                .iter()
                .map(|c| substitute_unchecked(c, vars, args))
                .collect(),
        ),
        Formula::Diamond(inner) => {
            Formula::Diamond(Box::new(substitute_unchecked(inner, vars, args)))
        }
    }
}

/// The E and O sets of a de Morgan formula: the diamond bodies that survive
/// positively (E) and negatively (O) through the connectives.
pub fn eo_sets(psi: &Formula) -> Result<(BTreeSet<Formula>, BTreeSet<Formula>), FormulaError> {
    match psi {
        Formula::Var(_) => Ok((BTreeSet::new(), BTreeSet::new())),
        Formula::Diamond(inner) => {
            let mut e = BTreeSet::new();
            e.insert((**inner).clone());
            Ok((e, BTreeSet::new()))
        }
        Formula::Apply(name, args) => match (name.as_str(), args.len()) {
            ("top", 0) | ("bot", 0) => Ok((BTreeSet::new(), BTreeSet::new())),
            ("not", 1) => {
                let (e, o) = eo_sets(&args[0])?;
                Ok((o, e))
            }
            ("and", 2) | ("or", 2) => {
                let (mut e, mut o) = eo_sets(&args[0])?;
                let (e2, o2) = eo_sets(&args[1])?;
                e.extend(e2);
                o.extend(o2);
                Ok((e, o))
            }
            _ => Err(FormulaError::NotDeMorgan(name.clone())),
        },
    }
}

/// Parses the concrete syntax against an ambient basis. Every function name
/// must resolve in the basis; `dia` is the modal operator.
pub fn parse(text: &str, basis: &Basis) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        basis,
    };
    p.skip_ws();
    let formula = p.formula()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(FormulaError::Syntax {
            at: p.pos,
            msg: "trailing input after formula".to_string(),
        });
    }
    Ok(formula)
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    basis: &'a Basis,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn ident(&mut self) -> Result<(usize, &'a str), FormulaError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {}
            _ => {
                return Err(FormulaError::Syntax {
                    at: start,
                    msg: "expected a name".to_string(),
                })
            }
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((start, &self.text[start..self.pos]))
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let (at, name) = self.ident()?;
        self.skip_ws();
        if name == "dia" {
            let args = self.arguments(at, "dia")?;
            if args.len() != 1 {
                return Err(FormulaError::ArityMismatch {
                    at,
                    name: "dia".to_string(),
                    want: 1,
                    got: args.len(),
                });
            }
            return Ok(Formula::diamond(args.into_iter().next().expect("one arg")));
        }
        if is_variable_name(name) {
            if self.peek() == Some(b'(') {
                return Err(FormulaError::Syntax {
                    at: self.pos,
                    msg: format!("variable '{name}' takes no arguments"),
                });
            }
            return Ok(Formula::var(name));
        }
        let table = self
            .basis
            .get(name)
            .ok_or_else(|| FormulaError::UnknownFunction {
                at,
                name: name.to_string(),
            })?;
        let want = table.arity();
        let args = if self.peek() == Some(b'(') {
            self.arguments(at, name)?
        } else {
            Vec::new()
        };
        if args.len() != want {
            return Err(FormulaError::ArityMismatch {
                at,
                name: name.to_string(),
                want,
                got: args.len(),
            });
        }
        Ok(Formula::apply(name, args))
    }

    fn arguments(&mut self, at: usize, name: &str) -> Result<Vec<Formula>, FormulaError> {
        if self.peek() != Some(b'(') {
            return Err(FormulaError::Syntax {
                at: self.pos,
                msg: format!("expected '(' after '{name}'"),
            });
        }
        self.pos += 1;
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            args.push(self.formula()?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                }
                Some(b')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => {
                    return Err(FormulaError::Syntax {
                        at: self.pos,
                        msg: format!("expected ',' or ')' in arguments of '{name}' (opened at byte {at})"),
                    })
                }
            }
        }
    }
}
