//! Representations of Boolean functions over a basis.
//!
//! A representation of `(f, i)` over a basis `G` is a propositional formula
//! over `p1..pk` that denotes `f` and uses `p_i` at most once. Such formulae
//! are what keep translations polynomial: substituting into the
//! single-occurrence position never duplicates the growing subterm.
//!
//! `synthesize` finds a smallest-first basis formula for a target table by
//! uniform-cost closure. The single-occurrence representations are obtained
//! by linearizing a synthesized formula and plugging constants around a
//! switching index (negation), a non-affineness witness (disjunction), or a
//! non-monotone argument of a basis function (bi-implication). Full-basis
//! representations come from DNF splits (`repr_extdm`) and the monotone
//! decomposition (`repr_dm`).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::boolfn::{builtin, Basis, BoolfnError, TruthTable};
use crate::formula::{substitute, Formula, FormulaError};

/// Synthesis explores every truth table over this many variables; beyond it
/// the closure space (2^(2^k) tables) stops being desk-scale.
pub const MAX_SYNTHESIS_ARITY: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReprError {
    #[error("target '{target}' is not expressible over basis '{basis}'")]
    NotExpressible { basis: String, target: String },
    #[error("'{name}' is not monotone in argument {position}")]
    NotLocallyMonotone { name: String, position: usize },
    #[error("basis '{0}' has no non-locally-monotone function")]
    NoNonmonotoneWitness(String),
    #[error("synthesis supports arity up to {MAX_SYNTHESIS_ARITY}, target has {arity}")]
    SynthesisArity { arity: usize },
    #[error("argument position {position} out of range for arity {arity}")]
    Position { position: usize, arity: usize },
    #[error("formula contains a modal operator but a Boolean function was required")]
    NotPropositional,
    #[error("construction invariant failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Boolfn(#[from] BoolfnError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Evaluates a propositional formula under an assignment, resolving function
/// names in `basis`. Unassigned variables read as false.
pub fn eval_formula(
    formula: &Formula,
    basis: &Basis,
    assignment: &BTreeMap<String, bool>,
) -> Result<bool, ReprError> {
    match formula {
        Formula::Var(v) => Ok(assignment.get(v).copied().unwrap_or(false)),
        Formula::Diamond(_) => Err(ReprError::NotPropositional),
        Formula::Apply(name, args) => {
            let table = basis
                .get(name)
                .ok_or_else(|| BoolfnError::UnknownFunction(name.clone()))?;
            let values: Vec<bool> = args
                .iter()
                .map(|a| eval_formula(a, basis, assignment))
                .collect::<Result<_, _>>()?;
            Ok(table.eval(&values)?)
        }
    }
}

/// The truth table of a propositional formula over an explicit variable
/// order (first variable most significant).
pub fn truth_table_of(
    formula: &Formula,
    basis: &Basis,
    vars: &[String],
    name: &str,
) -> Result<TruthTable, ReprError> {
    let k = vars.len();
    let mut bits = String::with_capacity(1 << k);
    for row in 0..1usize << k {
        let assignment: BTreeMap<String, bool> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), row & (1 << (k - 1 - i)) != 0))
            .collect();
        bits.push(if eval_formula(formula, basis, &assignment)? {
            '1'
        } else {
            '0'
        });
    }
    Ok(TruthTable::from_bits(name, k, &bits)?)
}

fn numbered_vars(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// All ways to write `total` as an ordered sum of `parts` positive integers,
/// in lexicographic order.
fn size_splits(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    if total < parts {
        return out;
    }
    for first in 1..=total - (parts - 1) {
        for rest in size_splits(total - first, parts - 1) {
            let mut s = Vec::with_capacity(parts);
            s.push(first);
            s.extend(rest);
            out.push(s);
        }
    }
    out
}

/// Smallest-first formula over `basis` denoting `target`, found by
/// uniform-cost closure over compositions of basis functions applied to
/// previously found formulae and the variables `p1..pk`. Candidates are
/// generated in basis order, so the result is deterministic. A nullary
/// target is realised as a constant formula over the single variable `p1`.
pub fn synthesize(basis: &Basis, target: &TruthTable) -> Result<Formula, ReprError> {
    if target.arity() > MAX_SYNTHESIS_ARITY {
        return Err(ReprError::SynthesisArity {
            arity: target.arity(),
        });
    }
    let k = target.arity().max(1);
    let rows = 1usize << k;
    let goal: u32 = (0..rows).fold(0, |acc, r| {
        let out = if target.arity() == 0 {
            target.eval_row(0)
        } else {
            target.eval_row(r)
        };
        acc | (u32::from(out) << r)
    });

    // best: table bits -> (size, formula). levels[s] lists, in discovery
    // order, the tables whose minimal size is s.
    let mut best: BTreeMap<u32, Formula> = BTreeMap::new();
    let mut levels: Vec<Vec<u32>> = vec![Vec::new(), Vec::new()];

    for (i, var) in numbered_vars("p", k).iter().enumerate() {
        let bits: u32 = (0..rows).fold(0, |acc, r| {
            acc | (u32::from(r & (1 << (k - 1 - i)) != 0) << r)
        });
        best.entry(bits).or_insert_with(|| {
            levels[1].push(bits);
            Formula::var(var)
        });
    }
    for g in basis.functions() {
        if g.arity() == 0 {
            let bits = if g.eval_row(0) { ((1u64 << rows) - 1) as u32 } else { 0 };
            best.entry(bits).or_insert_with(|| {
                levels[1].push(bits);
                Formula::apply(g.name(), vec![])
            });
        }
    }

    let max_arity = basis
        .functions()
        .iter()
        .map(TruthTable::arity)
        .max()
        .unwrap_or(0);
    let mut size = 1;
    loop {
        if let Some(f) = best.get(&goal) {
            return Ok(f.clone());
        }
        // Every minimal representative composes minimal representatives, so
        // once the size passes 1 + max_arity * (largest minimal size found)
        // the closure is saturated.
        let deepest = levels.iter().rposition(|l| !l.is_empty()).unwrap_or(0);
        if size > max_arity * deepest {
            return Err(ReprError::NotExpressible {
                basis: basis.name().to_string(),
                target: target.name().to_string(),
            });
        }
        size += 1;
        while levels.len() <= size {
            levels.push(Vec::new());
        }
        for g in basis.functions() {
            let r = g.arity();
            if r == 0 || size < 1 + r {
                continue;
            }
            for split in size_splits(size - 1, r) {
                // Argument sizes are all below `size`, so the pools are
                // stable while this level fills in.
                let pools: Vec<Vec<u32>> =
                    split.iter().map(|&s| levels[s].clone()).collect();
                if pools.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut idx = vec![0usize; r];
                loop {
                    let arg_bits: Vec<u32> =
                        idx.iter().zip(&pools).map(|(&i, p)| p[i]).collect();
                    let mut bits = 0u32;
                    for row in 0..rows {
                        let values: Vec<bool> =
                            arg_bits.iter().map(|a| a & (1 << row) != 0).collect();
                        if g.eval(&values).expect("arities checked") {
                            bits |= 1 << row;
                        }
                    }
                    if !best.contains_key(&bits) {
                        let args: Vec<Formula> =
                            arg_bits.iter().map(|b| best[b].clone()).collect();
                        best.insert(bits, Formula::apply(g.name(), args));
                        levels[size].push(bits);
                    }
                    let mut pos = r;
                    let exhausted = loop {
                        if pos == 0 {
                            break true;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < pools[pos].len() {
                            break false;
                        }
                        idx[pos] = 0;
                    };
                    if exhausted {
                        break;
                    }
                }
            }
        }
    }
}

/// Full disjunctive normal form of `table` over the variables `vars`:
/// one conjunct per true row, rows ascending, chains associated to the left.
/// No true rows yields bottom; a nullary true table yields top.
pub fn dnf(table: &TruthTable, vars: &[String]) -> Formula {
    let k = table.arity();
    assert_eq!(vars.len(), k, "variable count must match arity");
    let mut minterms = Vec::new();
    for row in 0..1usize << k {
        if !table.eval_row(row) {
            continue;
        }
        let mut literals = (0..k).map(|i| {
            let v = Formula::var(&vars[i]);
            if row & (1 << (k - 1 - i)) != 0 {
                v
            } else {
                Formula::not(v)
            }
        });
        let first = literals.next();
        minterms.push(match first {
            None => Formula::top(),
            Some(head) => literals.fold(head, Formula::and),
        });
    }
    let mut terms = minterms.into_iter();
    match terms.next() {
        None => Formula::bot(),
        Some(head) => terms.fold(head, Formula::or),
    }
}

/// A formula denoting `function` over `p1..pk` in which `p_position` occurs
/// at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    pub function: TruthTable,
    pub position: usize,
    pub formula: Formula,
}

impl Representation {
    /// Checks the two defining properties against `basis`: the formula
    /// denotes `function`, and `p_position` occurs at most once.
    pub fn validate(&self, basis: &Basis) -> Result<(), ReprError> {
        let vars = numbered_vars("p", self.function.arity());
        let table = truth_table_of(&self.formula, basis, &vars, self.function.name())?;
        if !table.same_function(&self.function) {
            return Err(ReprError::Invariant(format!(
                "formula for '{}' denotes {} instead of {}",
                self.function.name(),
                table.bit_string(),
                self.function.bit_string()
            )));
        }
        let occ = self.formula.occurrences(&format!("p{}", self.position));
        if occ > 1 {
            return Err(ReprError::Invariant(format!(
                "p{} occurs {} times in the representation of '{}'",
                self.position,
                occ,
                self.function.name()
            )));
        }
        Ok(())
    }

    /// For a symmetric binary function, the same representation read at the
    /// other position: swaps `p1` and `p2`.
    pub fn swap_binary(&self) -> Result<Representation, ReprError> {
        if self.function.arity() != 2 {
            return Err(ReprError::Position {
                position: 3 - self.position,
                arity: self.function.arity(),
            });
        }
        let formula = substitute(
            &self.formula,
            &["p1", "p2"],
            &[Formula::var("p2"), Formula::var("p1")],
        )?;
        Ok(Representation {
            function: self.function.clone(),
            position: 3 - self.position,
            formula,
        })
    }
}

/// Renames `p1..pk` of a formula built in "argument `i` last" order back to
/// the original argument order.
fn unpermute(formula: &Formula, arity: usize, position: usize) -> Result<Formula, ReprError> {
    let from = numbered_vars("p", arity);
    let names: Vec<&str> = from.iter().map(String::as_str).collect();
    let mut to: Vec<Formula> = Vec::with_capacity(arity);
    for j in 1..arity {
        let original = if j < position { j } else { j + 1 };
        to.push(Formula::var(&format!("p{original}")));
    }
    to.push(Formula::var(&format!("p{position}")));
    Ok(substitute(formula, &names, &to)?)
}

/// The table of `f` with argument `position` moved to the last slot.
fn permute_to_last(f: &TruthTable, position: usize) -> Result<TruthTable, ReprError> {
    let k = f.arity();
    if position == 0 || position > k {
        return Err(ReprError::Position { position, arity: k });
    }
    let mut bits = String::with_capacity(1 << k);
    for row in 0..1usize << k {
        let mut values = Vec::with_capacity(k);
        let last = row & 1 != 0;
        for j in 1..k {
            values.push(row & (1 << (k - 1 - (j - 1))) != 0);
        }
        values.insert(position - 1, last);
        bits.push(if f.eval(&values)? { '1' } else { '0' });
    }
    Ok(TruthTable::from_bits(f.name(), k, &bits)?)
}

/// Restriction of `f` (already permuted, position last) with the last
/// argument fixed to `value`.
fn fix_last(f: &TruthTable, value: bool, name: &str) -> Result<TruthTable, ReprError> {
    let k = f.arity();
    let mut bits = String::with_capacity(1 << (k - 1));
    for row in 0..1usize << (k - 1) {
        bits.push(if f.eval_row((row << 1) | usize::from(value)) {
            '1'
        } else {
            '0'
        });
    }
    Ok(TruthTable::from_bits(name, k - 1, &bits)?)
}

/// Representation of `(f, position)` over the extended De Morgan basis.
/// Splits `f` on its `position`-th argument into the DNFs `alpha` (argument
/// true) and `beta` (argument false) and recombines them around a single
/// bi-implication holding the argument: where the cofactors agree the
/// argument is irrelevant, and where they differ the value is the argument
/// or its negation depending on the direction.
pub fn repr_extdm(f: &TruthTable, position: usize) -> Result<Representation, ReprError> {
    let k = f.arity();
    if k == 0 {
        return Err(ReprError::Position { position, arity: 0 });
    }
    let perm = permute_to_last(f, position)?;
    let rest = numbered_vars("p", k - 1);
    let alpha = dnf(&fix_last(&perm, true, "restrict1")?, &rest);
    let beta = dnf(&fix_last(&perm, false, "restrict0")?, &rest);
    let last = Formula::var(&format!("p{k}"));
    let body = Formula::or(
        Formula::and(alpha.clone(), beta.clone()),
        Formula::and(
            Formula::or(alpha.clone(), beta.clone()),
            Formula::iff(last, Formula::and(alpha, Formula::not(beta))),
        ),
    );
    Ok(Representation {
        function: f.clone(),
        position,
        formula: unpermute(&body, k, position)?,
    })
}

/// Representation of `(f, position)` over the De Morgan basis, available
/// exactly when `f` is monotone in that argument: the cofactor expansion
/// collapses to a single occurrence of the argument.
pub fn repr_dm(f: &TruthTable, position: usize) -> Result<Representation, ReprError> {
    let k = f.arity();
    if position == 0 || position > k {
        return Err(ReprError::Position { position, arity: k });
    }
    if !f.is_monotone_in_arg(position)? {
        return Err(ReprError::NotLocallyMonotone {
            name: f.name().to_string(),
            position,
        });
    }
    let perm = permute_to_last(f, position)?;
    let vars = numbered_vars("p", k);
    let omega = dnf(&perm, &vars);
    let last_name = format!("p{k}");
    let last = [last_name.as_str()];
    let on_true = substitute(&omega, &last, &[Formula::top()])?;
    let on_false = substitute(&omega, &last, &[Formula::bot()])?;
    let pk = Formula::var(&last_name);
    let body = if f.is_increasing_in_arg(position)? {
        Formula::or(Formula::and(on_true, pk), on_false)
    } else {
        Formula::or(Formula::and(on_false, Formula::not(pk)), on_true)
    };
    Ok(Representation {
        function: f.clone(),
        position,
        formula: unpermute(&body, k, position)?,
    })
}

/// Replaces every occurrence of `target` in left-to-right order with the
/// fresh variables `q{start}`, `q{start+1}`, ... and returns the count used.
fn linearize(formula: &Formula, target: &str, counter: &mut usize) -> Formula {
    match formula {
        Formula::Var(v) if v == target => {
            *counter += 1;
            Formula::var(&format!("q{counter}"))
        }
        Formula::Var(_) => formula.clone(),
        Formula::Apply(name, args) => Formula::apply(
            name,
            args.iter().map(|a| linearize(a, target, counter)).collect(),
        ),
        Formula::Diamond(inner) => Formula::diamond(linearize(inner, target, counter)),
    }
}

/// Representation of negation at position 1 over `basis`. Synthesizes a
/// negation formula, linearizes its `p1` occurrences, and walks the chain of
/// prefixes of ones to find the single switching occurrence; the others get
/// the matching constants.
pub fn repr_negation(basis: &Basis) -> Result<Representation, ReprError> {
    let not_table = builtin("not").expect("builtin");
    let alpha = synthesize(basis, &not_table)?;
    let mut count = 0usize;
    let linear = linearize(&alpha, "p1", &mut count);
    if count == 0 {
        return Err(ReprError::Invariant(
            "synthesized negation ignores its argument".to_string(),
        ));
    }
    let qvars = numbered_vars("q", count);
    let table = truth_table_of(&linear, basis, &qvars, "negation-linearized")?;
    // s_j = value on (1^j, 0^(count-j)); s_0 = 1 and s_count = 0, so some
    // step switches.
    let prefix_row = |ones: usize| -> usize {
        let mut row = 0usize;
        for i in 0..ones {
            row |= 1 << (count - 1 - i);
        }
        row
    };
    let mut switch = None;
    for j in 1..=count {
        if table.eval_row(prefix_row(j - 1)) && !table.eval_row(prefix_row(j)) {
            switch = Some(j);
            break;
        }
    }
    let switch = switch.ok_or_else(|| {
        ReprError::Invariant("no switching index in the ones-prefix chain".to_string())
    })?;
    let plugs: Vec<Formula> = (1..=count)
        .map(|j| {
            if j < switch {
                Formula::top()
            } else if j == switch {
                Formula::var("p1")
            } else {
                Formula::bot()
            }
        })
        .collect();
    let names: Vec<&str> = qvars.iter().map(String::as_str).collect();
    Ok(Representation {
        function: not_table,
        position: 1,
        formula: substitute(&linear, &names, &plugs)?,
    })
}

/// A non-affineness witness: an argument index together with one assignment
/// pair where flipping the index leaves the value unchanged and one where it
/// changes it.
fn non_affine_witness(table: &TruthTable) -> Option<(usize, usize, usize)> {
    let k = table.arity();
    for i in 1..=k {
        let bit = 1usize << (k - i);
        let mut same = None;
        let mut diff = None;
        for row in 0..1usize << k {
            if row & bit != 0 {
                continue;
            }
            let flip = table.eval_row(row) != table.eval_row(row | bit);
            if flip {
                diff.get_or_insert(row);
            } else {
                same.get_or_insert(row);
            }
            if let (Some(s), Some(d)) = (same, diff) {
                return Some((i, s, d));
            }
        }
    }
    None
}

/// Plug for a neutralised argument of a witness pair: the argument reads
/// `a` on the unchanged assignment and `b` on the changed one, and the plugs
/// reproduce exactly that as a function of `p2`.
fn witness_plug(a: bool, b: bool, omega_neg: &Formula) -> Result<Formula, ReprError> {
    Ok(match (a, b) {
        (true, true) => Formula::top(),
        (false, false) => Formula::bot(),
        (false, true) => substitute(omega_neg, &["p1"], &[Formula::var("p2")])?,
        (true, false) => Formula::var("p2"),
    })
}

/// Representation of disjunction at position 1 over `basis`. Linearizes a
/// synthesized disjunction, finds a non-affineness witness of the resulting
/// function, and plugs the witness assignments in as functions of `p2`; two
/// final corrections pin the (1,1) and (0,0) rows.
pub fn repr_disjunction(basis: &Basis) -> Result<Representation, ReprError> {
    let or_table = builtin("or").expect("builtin");
    let alpha = synthesize(basis, &or_table)?;
    let omega_neg = repr_negation(basis)?.formula;
    let mut count = 0usize;
    let mut linear = linearize(&alpha, "p1", &mut count);
    linear = linearize(&linear, "p2", &mut count);
    let qvars = numbered_vars("q", count);
    let table = truth_table_of(&linear, basis, &qvars, "disjunction-linearized")?;
    let (index, same_row, diff_row) = non_affine_witness(&table).ok_or_else(|| {
        ReprError::Invariant("linearized disjunction is affine".to_string())
    })?;
    let row_bit = |row: usize, j: usize| row & (1 << (count - j)) != 0;
    let mut plugs = Vec::with_capacity(count);
    for j in 1..=count {
        if j == index {
            plugs.push(Formula::var("p1"));
        } else {
            plugs.push(witness_plug(
                row_bit(same_row, j),
                row_bit(diff_row, j),
                &omega_neg,
            )?);
        }
    }
    let names: Vec<&str> = qvars.iter().map(String::as_str).collect();
    let mut body = substitute(&linear, &names, &plugs)?;
    // The witness fixes |value(0,1) - value(1,1)| = 1 but not the corners.
    let two = numbered_vars("p", 2);
    let corners = truth_table_of(&body, basis, &two, "corners")?;
    if !corners.eval_row(3) {
        body = substitute(&omega_neg, &["p1"], &[body])?;
    }
    let corners = truth_table_of(&body, basis, &two, "corners")?;
    if corners.eval_row(0) {
        body = substitute(&body, &["p1"], std::slice::from_ref(&omega_neg))?;
    }
    let rep = Representation {
        function: or_table,
        position: 1,
        formula: body,
    };
    rep.validate(basis)?;
    Ok(rep)
}

/// Representation of bi-implication at position 1 over `basis`, available
/// exactly when some basis function fails local monotonicity. The first such
/// function (basis order, smallest argument index) supplies an increasing
/// and a decreasing assignment pair; plugging them in as functions of `p2`
/// makes the function agree with `p1` iff `p2` does not flip the pair.
pub fn repr_biimplication(basis: &Basis) -> Result<Representation, ReprError> {
    let iff_table = builtin("iff").expect("builtin");
    for g in basis.functions() {
        let k = g.arity();
        for i in 1..=k {
            if g.is_monotone_in_arg(i)? {
                continue;
            }
            let bit = 1usize << (k - i);
            let mut increasing = None;
            let mut decreasing = None;
            for row in 0..1usize << k {
                if row & bit != 0 {
                    continue;
                }
                let low = g.eval_row(row);
                let high = g.eval_row(row | bit);
                if !low && high {
                    increasing.get_or_insert(row);
                }
                if low && !high {
                    decreasing.get_or_insert(row);
                }
            }
            let (inc, dec) = (
                increasing.ok_or_else(|| {
                    ReprError::Invariant("non-monotone argument never increases".to_string())
                })?,
                decreasing.ok_or_else(|| {
                    ReprError::Invariant("non-monotone argument never decreases".to_string())
                })?,
            );
            let omega_neg = repr_negation(basis)?.formula;
            let row_bit = |row: usize, j: usize| row & (1 << (k - j)) != 0;
            let mut args = Vec::with_capacity(k);
            for j in 1..=k {
                if j == i {
                    args.push(Formula::var("p1"));
                } else {
                    args.push(witness_plug(
                        row_bit(inc, j),
                        row_bit(dec, j),
                        &omega_neg,
                    )?);
                }
            }
            let rep = Representation {
                function: iff_table,
                position: 1,
                formula: Formula::apply(g.name(), args),
            };
            rep.validate(basis)?;
            return Ok(rep);
        }
    }
    Err(ReprError::NoNonmonotoneWitness(basis.name().to_string()))
}
