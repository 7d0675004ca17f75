//! Basis-to-basis translation with polynomial size guarantees.
//!
//! The `(F, G)` split views a formula over two function sets at once: the
//! `G` side needs no work, while every `F`-application must eventually be
//! rewritten through a single-occurrence representation. The derivative
//! peels one layer of that structure, the rank counts the layers, and
//! `eliminate` walks them bottom-up, multiplying sizes by at most the
//! largest representation per layer. `translate_pipeline` chains the
//! eliminations needed to land in an arbitrary complete target basis.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolfn::{builtin, Basis, BoolfnError, TruthTable};
use crate::formula::{substitute, Formula, FormulaError, Metrics};
use crate::repr::{
    repr_biimplication, repr_disjunction, repr_dm, repr_extdm, repr_negation, synthesize,
    Representation, ReprError,
};

/// Representations indexed by function name and argument position.
pub type ReprTable = BTreeMap<(String, usize), Representation>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("target basis '{basis}' is not complete")]
    IncompleteBasis { basis: String },
    #[error(
        "'{from}' uses a non-locally-monotone function but every function \
         of '{to}' is locally monotone; no polynomial translation exists"
    )]
    HypothesisViolated { from: String, to: String },
    #[error("no representation for '{function}' at position {position}")]
    IncompleteTable { function: String, position: usize },
    #[error("nullary function '{name}' cannot be eliminated; move it to the target side")]
    NullaryFunction { name: String },
    #[error("formula uses '{name}' which the source basis does not define")]
    UnknownFunction { name: String },
    #[error("the variable '{name}' is reserved for synthesized constants")]
    ReservedVariable { name: String },
    #[error("elimination invariant failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Boolfn(#[from] BoolfnError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Report accompanying every pipeline run. `bound` instantiates the size
/// guarantee `c^(1 + ceil(log2 max(n, 2))) * n` with `c` the largest
/// representation used and `n` the input size; `verified` is filled in by
/// callers that run a semantic equivalence check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub source_basis: String,
    pub target_basis: String,
    pub input: Metrics,
    pub output: Metrics,
    pub rank: usize,
    pub kappa_constant: usize,
    pub bound: u128,
    pub verified: Option<bool>,
    pub frame_class: Option<String>,
    pub introduced_z: bool,
}

fn name_set(basis: &Basis) -> BTreeSet<String> {
    basis
        .functions()
        .iter()
        .map(|f| f.name().to_string())
        .collect()
}

/// True when every application of an `F` function has at most one argument
/// that itself contains an `F` function; such formulae have rank at most 1.
fn rank_at_most_one(formula: &Formula, f_names: &BTreeSet<String>) -> bool {
    match formula {
        Formula::Var(_) => true,
        Formula::Diamond(inner) => rank_at_most_one(inner, f_names),
        Formula::Apply(name, args) => {
            args.iter().all(|a| rank_at_most_one(a, f_names))
                && (!f_names.contains(name)
                    || args.iter().filter(|a| a.uses_any(f_names)).count() <= 1)
        }
    }
}

fn max_q_index(formula: &Formula) -> usize {
    formula
        .vars()
        .iter()
        .filter_map(|v| v.strip_prefix('q').and_then(|d| d.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
}

fn dig(
    formula: &Formula,
    f_names: &BTreeSet<String>,
    next: &mut usize,
    q_names: &mut Vec<String>,
    plugs: &mut Vec<Formula>,
) -> Formula {
    if formula.uses_any(f_names) && rank_at_most_one(formula, f_names) {
        let name = format!("q{next}");
        *next += 1;
        q_names.push(name.clone());
        plugs.push(formula.clone());
        return Formula::var(&name);
    }
    match formula {
        Formula::Var(_) => formula.clone(),
        Formula::Diamond(inner) => {
            Formula::diamond(dig(inner, f_names, next, q_names, plugs))
        }
        Formula::Apply(name, args) => Formula::apply(
            name,
            args.iter()
                .map(|a| dig(a, f_names, next, q_names, plugs))
                .collect(),
        ),
    }
}

fn derivative_with_names(
    formula: &Formula,
    f_names: &BTreeSet<String>,
) -> (Formula, Vec<String>, Vec<Formula>) {
    let mut next = max_q_index(formula) + 1;
    let mut q_names = Vec::new();
    let mut plugs = Vec::new();
    let gamma = dig(formula, f_names, &mut next, &mut q_names, &mut plugs);
    (gamma, q_names, plugs)
}

/// The `F`-derivative: replaces every maximal subformula that contains an
/// `F` function but keeps rank 1 by a fresh variable, left to right.
/// Numbering continues past any `q` variables already present, so iterated
/// derivatives stay collision-free. The `G` side imposes no restriction and
/// the parameter only documents which split the notion is taken over.
pub fn derivative(formula: &Formula, f: &Basis, _g: &Basis) -> (Formula, Vec<Formula>) {
    let (gamma, _, plugs) = derivative_with_names(formula, &name_set(f));
    (gamma, plugs)
}

/// Number of derivative steps until no `F` function remains.
pub fn rank(formula: &Formula, f: &Basis, _g: &Basis) -> usize {
    let f_names = name_set(f);
    let mut current = formula.clone();
    let mut steps = 0;
    while current.uses_any(&f_names) {
        let (gamma, _, _) = derivative_with_names(&current, &f_names);
        current = gamma;
        steps += 1;
    }
    steps
}

fn eliminate_rank_one(
    formula: &Formula,
    f_names: &BTreeSet<String>,
    table: &ReprTable,
) -> Result<Formula, TranslateError> {
    match formula {
        Formula::Var(_) => Ok(formula.clone()),
        Formula::Diamond(inner) => Ok(Formula::diamond(eliminate_rank_one(
            inner, f_names, table,
        )?)),
        Formula::Apply(name, args) if f_names.contains(name) => {
            let carriers: Vec<usize> = args
                .iter()
                .enumerate()
                .filter(|(_, a)| a.uses_any(f_names))
                .map(|(j, _)| j + 1)
                .collect();
            let position = match carriers.as_slice() {
                [] => 1,
                [only] => *only,
                _ => {
                    return Err(TranslateError::Invariant(format!(
                        "'{name}' application has {} nested occurrences",
                        carriers.len()
                    )))
                }
            };
            let rep =
                table
                    .get(&(name.clone(), position))
                    .ok_or_else(|| TranslateError::IncompleteTable {
                        function: name.clone(),
                        position,
                    })?;
            let mut filled: Vec<Formula> = args.to_vec();
            filled[position - 1] = eliminate_rank_one(&args[position - 1], f_names, table)?;
            let vars: Vec<String> = (1..=args.len()).map(|j| format!("p{j}")).collect();
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            Ok(substitute(&rep.formula, &names, &filled)?)
        }
        Formula::Apply(name, args) => Ok(Formula::apply(
            name,
            args.iter()
                .map(|a| eliminate_rank_one(a, f_names, table))
                .collect::<Result<_, _>>()?,
        )),
    }
}

fn eliminate_inner(
    formula: &Formula,
    f_names: &BTreeSet<String>,
    table: &ReprTable,
) -> Result<Formula, TranslateError> {
    if !formula.uses_any(f_names) {
        return Ok(formula.clone());
    }
    if rank_at_most_one(formula, f_names) {
        return eliminate_rank_one(formula, f_names, table);
    }
    let (gamma, q_names, plugs) = derivative_with_names(formula, f_names);
    let eliminated: Vec<Formula> = plugs
        .iter()
        .map(|p| eliminate_rank_one(p, f_names, table))
        .collect::<Result<_, _>>()?;
    let names: Vec<&str> = q_names.iter().map(String::as_str).collect();
    let spliced = substitute(&gamma, &names, &eliminated)?;
    eliminate_inner(&spliced, f_names, table)
}

/// Rewrites every `F` application through the representation table, leaving
/// the `G` side untouched. The result is equivalent over every frame class
/// and its size is at most `c^rank * |formula|` for `c` the largest table
/// entry.
pub fn eliminate(
    formula: &Formula,
    f: &Basis,
    g: &Basis,
    table: &ReprTable,
) -> Result<Formula, TranslateError> {
    if let Some(nullary) = f.functions().iter().find(|t| t.arity() == 0) {
        return Err(TranslateError::NullaryFunction {
            name: nullary.name().to_string(),
        });
    }
    let f_names = name_set(f);
    let result = eliminate_inner(formula, &f_names, table)?;
    debug_assert!(
        {
            let c = table.values().map(|r| r.formula.size()).max().unwrap_or(1) as u128;
            let r = rank(formula, f, g) as u32;
            (result.size() as u128) <= c.saturating_pow(r) * formula.size() as u128
        },
        "elimination exceeded its size bound"
    );
    Ok(result)
}

fn rename_functions(formula: &Formula, map: &BTreeMap<String, String>) -> Formula {
    match formula {
        Formula::Var(_) => formula.clone(),
        Formula::Diamond(inner) => Formula::diamond(rename_functions(inner, map)),
        Formula::Apply(name, args) => {
            let new_name = map.get(name).map(String::as_str).unwrap_or(name);
            Formula::apply(
                new_name,
                args.iter().map(|a| rename_functions(a, map)).collect(),
            )
        }
    }
}

fn replace_nullary(formula: &Formula, name: &str, replacement: &Formula) -> Formula {
    match formula {
        Formula::Var(_) => formula.clone(),
        Formula::Diamond(inner) => {
            Formula::diamond(replace_nullary(inner, name, replacement))
        }
        Formula::Apply(n, args) if n == name && args.is_empty() => replacement.clone(),
        Formula::Apply(n, args) => Formula::apply(
            n,
            args.iter()
                .map(|a| replace_nullary(a, name, replacement))
                .collect(),
        ),
    }
}

const ROUTE_PREFIX: &str = "~";

fn route_name(name: &str) -> String {
    format!("{ROUTE_PREFIX}{name}")
}

/// The intermediate basis the first stage lands in: De Morgan, extended
/// with bi-implication when the source uses a non-locally-monotone
/// function. Members carry reserved names so they can never collide with
/// target basis names.
fn route_basis(extended: bool) -> Basis {
    let mut names = vec!["not", "and", "or", "top", "bot"];
    if extended {
        names.push("iff");
    }
    let functions = names
        .iter()
        .map(|n| builtin(n).expect("builtin").renamed(&route_name(n)))
        .collect();
    Basis::new("route", functions).expect("route names are distinct")
}

fn route_rename_map(extended: bool) -> BTreeMap<String, String> {
    let mut names = vec!["not", "and", "or", "top", "bot"];
    if extended {
        names.push("iff");
    }
    names
        .into_iter()
        .map(|n| (n.to_string(), route_name(n)))
        .collect()
}

fn demorganize(formula: &Formula) -> Formula {
    let not = |f: Formula| Formula::apply(&route_name("not"), vec![f]);
    match formula {
        Formula::Var(_) => formula.clone(),
        Formula::Diamond(inner) => Formula::diamond(demorganize(inner)),
        Formula::Apply(name, args) if name == &route_name("and") && args.len() == 2 => {
            let lhs = demorganize(&args[0]);
            let rhs = demorganize(&args[1]);
            not(Formula::apply(
                &route_name("or"),
                vec![not(lhs), not(rhs)],
            ))
        }
        Formula::Apply(name, args) => Formula::apply(
            name,
            args.iter().map(demorganize).collect(),
        ),
    }
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n - 1).leading_zeros()
}

/// Translates `formula` from `source` into the complete basis `target`.
///
/// Stages: (a) eliminate source functions into an internal De Morgan room,
/// choosing the extended room when the formula uses a non-locally-monotone
/// function (which requires a non-locally-monotone function in `target`);
/// (b) rewrite conjunctions through De Morgan duality if `target` lacks a
/// conjunction; (c) eliminate the remaining negation, disjunction, and
/// bi-implication through their single-occurrence representations over
/// `target` plus constants; (d) replace constants `target` does not define
/// by synthesized constant formulae over the reserved variable `z`.
/// Functions whose truth table already exists in `target` are renamed, not
/// eliminated.
pub fn translate_pipeline(
    formula: &Formula,
    source: &Basis,
    target: &Basis,
) -> Result<(Formula, TranslationReport), TranslateError> {
    if !target.is_complete() {
        return Err(TranslateError::IncompleteBasis {
            basis: target.name().to_string(),
        });
    }
    let mut used: Vec<TruthTable> = Vec::new();
    for name in formula.function_names() {
        match source.get(&name) {
            Some(t) => used.push(t.clone()),
            None => return Err(TranslateError::UnknownFunction { name }),
        }
    }
    let extended = used.iter().any(|t| !t.is_locally_monotone());
    if extended && target.functions().iter().all(TruthTable::is_locally_monotone) {
        return Err(TranslateError::HypothesisViolated {
            from: source.name().to_string(),
            to: target.name().to_string(),
        });
    }
    let route = route_basis(extended);
    let mut kappa = 1usize;

    // (a) Functions already denoting a target or route table are renamed;
    // the residue is eliminated through per-position representations.
    let mut rename = BTreeMap::new();
    let mut residual = Vec::new();
    for t in &used {
        if let Some(m) = target.find_function(t) {
            rename.insert(t.name().to_string(), m.name().to_string());
        } else if let Some(m) = route.find_function(t) {
            rename.insert(t.name().to_string(), m.name().to_string());
        } else {
            residual.push(t.clone());
        }
    }
    let renamed = rename_functions(formula, &rename);
    let f1 = Basis::new("residual", residual)?;
    let rank_value = rank(&renamed, &f1, &route);
    let mut current = if f1.functions().is_empty() {
        renamed.clone()
    } else {
        let internal = route_rename_map(extended);
        let mut table = ReprTable::new();
        for t in f1.functions() {
            for i in 1..=t.arity() {
                let rep = if extended {
                    repr_extdm(t, i)?
                } else {
                    repr_dm(t, i)?
                };
                let formula = rename_functions(&rep.formula, &internal);
                kappa = kappa.max(formula.size());
                table.insert(
                    (t.name().to_string(), i),
                    Representation {
                        function: rep.function,
                        position: rep.position,
                        formula,
                    },
                );
            }
        }
        eliminate(&renamed, &f1, &route, &table)?
    };

    // Route functions whose tables the target defines become target
    // functions; constants always resolve, into the extended target.
    let (gplus, top_name, bot_name) = target.with_constants();
    let mut absorb = BTreeMap::new();
    for t in route.functions() {
        if let Some(m) = gplus.find_function(t) {
            absorb.insert(t.name().to_string(), m.name().to_string());
        }
    }
    current = rename_functions(&current, &absorb);

    // (b) Whatever conjunction is left has no target table; push it through
    // De Morgan duality so stage (c) only sees negation and disjunction.
    if current.function_names().contains(&route_name("and")) {
        current = demorganize(&current);
    }

    // (c) Eliminate the remaining route connectives into the extended
    // target. Representations are built lazily: bi-implication only occurs
    // on the extended route, where the hypothesis guarantees a witness.
    let occurring = current.function_names();
    let mut connective_tables = Vec::new();
    let mut table = ReprTable::new();
    for base in ["not", "or", "iff"] {
        let name = route_name(base);
        if !occurring.contains(&name) {
            continue;
        }
        connective_tables.push(builtin(base).expect("builtin").renamed(&name));
        match base {
            "not" => {
                let rep = repr_negation(&gplus)?;
                kappa = kappa.max(rep.formula.size());
                table.insert((name, 1), rep);
            }
            _ => {
                let rep = if base == "or" {
                    repr_disjunction(&gplus)?
                } else {
                    repr_biimplication(&gplus)?
                };
                let swapped = rep.swap_binary()?;
                kappa = kappa.max(rep.formula.size());
                table.insert((name.clone(), 1), rep);
                table.insert((name, 2), swapped);
            }
        }
    }
    if !connective_tables.is_empty() {
        let f2 = Basis::new("residual-connectives", connective_tables)?;
        current = eliminate(&current, &f2, &gplus, &table)?;
    }

    // (d) Constants the target does not define are synthesized, over the
    // reserved variable z when the synthesis needs an argument.
    let mut introduced_z = false;
    for (member, builtin_name) in [(&top_name, "top"), (&bot_name, "bot")] {
        if target.contains(member) || !current.function_names().contains(member) {
            continue;
        }
        if formula.vars().contains("z") {
            return Err(TranslateError::ReservedVariable {
                name: "z".to_string(),
            });
        }
        let synthesized = synthesize(target, &builtin(builtin_name).expect("builtin"))?;
        let constant = substitute(&synthesized, &["p1"], &[Formula::var("z")])?;
        kappa = kappa.max(constant.size());
        introduced_z |= constant.vars().contains("z");
        current = replace_nullary(&current, member, &constant);
    }

    let n = formula.size();
    let exponent = 1 + ceil_log2(n.max(2));
    let bound = (kappa as u128)
        .saturating_pow(exponent)
        .saturating_mul(n as u128);
    let report = TranslationReport {
        source_basis: source.name().to_string(),
        target_basis: target.name().to_string(),
        input: formula.metrics(),
        output: current.metrics(),
        rank: rank_value,
        kappa_constant: kappa,
        bound,
        verified: None,
        frame_class: None,
        introduced_z,
    };
    debug_assert!(
        current
            .function_names()
            .iter()
            .all(|n| target.contains(n)),
        "pipeline output escaped the target basis"
    );
    Ok((current, report))
}
