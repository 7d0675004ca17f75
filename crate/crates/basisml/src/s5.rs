//! Depth reduction over S5: leaf-balanced splitting, modality-prefix
//! reduction, logarithmic-depth balancing, and the bi-implication
//! elimination that collapses every basis into De Morgan form over S5.
//!
//! Everything here exploits the S5 collapse: in a clique model, the truth
//! of a diamond formula does not depend on the evaluation world, so a
//! subformula can be pulled out of its context with a constant-size
//! case split. That is false over K and T, and nothing in this module
//! claims otherwise.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use thiserror::Error;

use crate::boolfn::Basis;
use crate::formula::{fresh_var, substitute, Formula};
use crate::semantics::{Decider, FrameClass, DEFAULT_BUDGET};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum S5Error {
    #[error("a formula with {norm} leaf cannot be split at a binary connective")]
    NoSplit { norm: usize },
}

/// A leaf-balanced decomposition `phi = context[hole -> pivot]`: the
/// context keeps at most `(norm(phi) + 1) / 2` leaves including the hole,
/// and the pivot is a binary application whose arguments each keep at most
/// `norm(phi) / 2` leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub context: Formula,
    pub hole: String,
    pub pivot: Formula,
}

fn subtree_children(f: &Formula) -> &[Formula] {
    match f {
        Formula::Var(_) => &[],
        Formula::Diamond(inner) => std::slice::from_ref(inner),
        Formula::Apply(_, args) => args,
    }
}

fn rebuild_with_hole(f: &Formula, path: &[usize], hole: &str) -> Formula {
    let Some((&step, rest)) = path.split_first() else {
        return Formula::var(hole);
    };
    match f {
        Formula::Var(_) => unreachable!("path leads through a leaf"),
        Formula::Diamond(inner) => Formula::diamond(rebuild_with_hole(inner, rest, hole)),
        Formula::Apply(name, args) => {
            let mut new_args = args.clone();
            new_args[step] = rebuild_with_hole(&args[step], rest, hole);
            Formula::apply(name, new_args)
        }
    }
}

/// Walks from the root towards the child holding more than half the
/// leaves, for as long as such a child exists. The stopping node is the
/// pivot; it is necessarily a binary connective.
pub fn split(phi: &Formula) -> Result<SplitResult, S5Error> {
    let m = phi.norm();
    if m < 2 {
        return Err(S5Error::NoSplit { norm: m });
    }
    let mut path = Vec::new();
    let mut current = phi;
    loop {
        let children = subtree_children(current);
        match children
            .iter()
            .enumerate()
            .find(|(_, c)| 2 * c.norm() > m)
        {
            Some((i, child)) => {
                path.push(i);
                current = child;
            }
            None => break,
        }
    }
    assert!(
        matches!(current, Formula::Apply(name, args)
            if args.len() == 2 && matches!(name.as_str(), "and" | "or" | "iff")),
        "split requires a formula over the extended De Morgan basis"
    );
    let hole = if phi.vars().contains("x") {
        fresh_var("x", &[phi])
    } else {
        "x".to_string()
    };
    let context = rebuild_with_hole(phi, &path, &hole);
    let result = SplitResult {
        context,
        hole,
        pivot: current.clone(),
    };
    debug_assert!(2 * result.context.norm() <= m + 1);
    debug_assert!(subtree_children(&result.pivot)
        .iter()
        .all(|c| 2 * c.norm() <= m));
    Ok(result)
}

/// A modality-prefix step: negation or diamond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PrefixOp {
    Not,
    Dia,
}

fn apply_prefix(prefix: &[PrefixOp], atom: &Formula) -> Formula {
    prefix.iter().rev().fold(atom.clone(), |inner, op| match op {
        PrefixOp::Not => Formula::not(inner),
        PrefixOp::Dia => Formula::diamond(inner),
    })
}

/// Canonical form of every prefix of length at most four, derived once by
/// running the S5 decider over all pairs. Representatives are the first
/// member of each equivalence class in shortest-then-lexicographic order
/// with `Not` before `Dia`, which recovers the six S5 modalities.
static PREFIX_TABLE: LazyLock<BTreeMap<Vec<PrefixOp>, Vec<PrefixOp>>> = LazyLock::new(|| {
    let decider = Decider::new(Basis::de_morgan(), DEFAULT_BUDGET);
    let atom = Formula::var("p");
    let mut prefixes = vec![Vec::new()];
    for length in 1..=4 {
        let mut next = Vec::new();
        for p in prefixes.iter().filter(|p| p.len() == length - 1) {
            for op in [PrefixOp::Not, PrefixOp::Dia] {
                let mut longer = p.clone();
                longer.push(op);
                next.push(longer);
            }
        }
        prefixes.extend(next);
    }
    prefixes.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let mut representatives: Vec<Vec<PrefixOp>> = Vec::new();
    let mut table = BTreeMap::new();
    for prefix in prefixes {
        let formula = apply_prefix(&prefix, &atom);
        let class = representatives.iter().find(|rep| {
            decider
                .equivalent(&formula, &apply_prefix(rep, &atom), FrameClass::S5)
                .expect("prefix formulae are tiny")
        });
        let canonical = match class {
            Some(rep) => rep.clone(),
            None => {
                representatives.push(prefix.clone());
                prefix.clone()
            }
        };
        assert!(canonical.len() <= 3, "S5 admits only six modalities");
        table.insert(prefix, canonical);
    }
    table
});

/// Rewrites a sequence of negations and diamonds applied to `atom` into an
/// equivalent sequence of length at most three, folding one step at a time
/// through the memoized table of short prefixes.
pub fn reduce_prefix(prefix: &[PrefixOp], atom: &Formula) -> Formula {
    let mut canonical: Vec<PrefixOp> = Vec::new();
    for &op in prefix.iter().rev() {
        let mut key = Vec::with_capacity(canonical.len() + 1);
        key.push(op);
        key.extend(canonical.iter().copied());
        canonical = PREFIX_TABLE[&key].clone();
    }
    apply_prefix(&canonical, atom)
}

fn peel(phi: &Formula) -> (Vec<PrefixOp>, Formula) {
    let mut prefix = Vec::new();
    let mut current = phi;
    loop {
        match current {
            Formula::Diamond(inner) => {
                prefix.push(PrefixOp::Dia);
                current = inner;
            }
            Formula::Apply(name, args) if name == "not" && args.len() == 1 => {
                prefix.push(PrefixOp::Not);
                current = &args[0];
            }
            Formula::Var(_) => return (prefix, current.clone()),
            Formula::Apply(_, args) if args.is_empty() => return (prefix, current.clone()),
            _ => panic!("a one-leaf formula over the extended De Morgan basis is a prefix over an atom"),
        }
    }
}

fn hole_under_dia(context: &Formula, hole: &str) -> bool {
    match context {
        Formula::Var(_) => false,
        Formula::Diamond(inner) => inner.occurrences(hole) > 0,
        Formula::Apply(_, args) => args.iter().any(|a| hole_under_dia(a, hole)),
    }
}

/// Replaces the innermost diamond above the hole by `y`, returning the
/// outer context and the diamond's former argument.
fn split_at_last_dia(context: &Formula, hole: &str, y: &str) -> (Formula, Formula) {
    fn walk(f: &Formula, hole: &str, y: &str) -> (Formula, Option<Formula>) {
        match f {
            Formula::Var(_) => (f.clone(), None),
            Formula::Diamond(inner) if inner.occurrences(hole) > 0 => {
                let (rebuilt, found) = walk(inner, hole, y);
                match found {
                    Some(a2) => (Formula::diamond(rebuilt), Some(a2)),
                    None => (Formula::var(y), Some((**inner).clone())),
                }
            }
            Formula::Diamond(inner) => (Formula::diamond((**inner).clone()), None),
            Formula::Apply(name, args) => {
                let mut found = None;
                let new_args = args
                    .iter()
                    .map(|a| {
                        if found.is_none() && a.occurrences(hole) > 0 {
                            let (rebuilt, inner_found) = walk(a, hole, y);
                            found = inner_found;
                            rebuilt
                        } else {
                            a.clone()
                        }
                    })
                    .collect();
                (Formula::apply(name, new_args), found)
            }
        }
    }
    let (alpha1, alpha2) = walk(context, hole, y);
    (alpha1, alpha2.expect("the hole lies under a diamond"))
}

fn plug(context: &Formula, hole: &str, value: Formula) -> Formula {
    substitute(context, &[hole], &[value]).expect("hole substitution cannot fail")
}

fn pull_apart(context: &Formula, hole: &str, pivot: Formula) -> Formula {
    Formula::or(
        Formula::and(
            plug(context, hole, Formula::bot()),
            Formula::not(pivot.clone()),
        ),
        Formula::and(plug(context, hole, Formula::top()), pivot),
    )
}

/// Rewrites `phi` into an S5-equivalent formula of depth at most
/// `8 * (1 + log2 norm(phi))`. One-leaf formulae reduce to a short
/// modality prefix; larger ones are split, and the pivot is pulled out of
/// its context by a case split over its truth value, using the fact that
/// diamond formulae are world-independent over S5 when the hole sits
/// inside a modality.
pub fn balance(phi: &Formula) -> Formula {
    if phi.norm() == 1 {
        let (prefix, atom) = peel(phi);
        return reduce_prefix(&prefix, &atom);
    }
    let SplitResult {
        context,
        hole,
        pivot,
    } = split(phi).expect("formulae with two leaves or more always split");
    let (name, b1, b2) = match &pivot {
        Formula::Apply(name, args) if args.len() == 2 => (name.clone(), &args[0], &args[1]),
        _ => unreachable!("split pivots are binary"),
    };
    let pivot_balanced = Formula::apply(&name, vec![balance(b1), balance(b2)]);
    if context == Formula::var(&hole) {
        return pivot_balanced;
    }
    if !hole_under_dia(&context, &hole) {
        let context_balanced = balance(&context);
        pull_apart(&context_balanced, &hole, pivot_balanced)
    } else {
        let y = if phi.vars().contains("y") {
            fresh_var("y", &[phi])
        } else {
            "y".to_string()
        };
        let (alpha1, alpha2) = split_at_last_dia(&context, &hole, &y);
        let alpha1_balanced = balance(&alpha1);
        let alpha2_balanced = balance(&alpha2);
        let psi = pull_apart(&alpha2_balanced, &hole, pivot_balanced);
        pull_apart(&alpha1_balanced, &y, Formula::diamond(psi))
    }
}

fn replace_iff(f: &Formula) -> Formula {
    match f {
        Formula::Var(_) => f.clone(),
        Formula::Diamond(inner) => Formula::diamond(replace_iff(inner)),
        Formula::Apply(name, args) if name == "iff" && args.len() == 2 => {
            let a = replace_iff(&args[0]);
            let b = replace_iff(&args[1]);
            Formula::or(
                Formula::and(a.clone(), b.clone()),
                Formula::and(Formula::not(a), Formula::not(b)),
            )
        }
        Formula::Apply(name, args) => {
            Formula::apply(name, args.iter().map(replace_iff).collect())
        }
    }
}

/// Balances `phi` and then expands every bi-implication into its De
/// Morgan form, tripling the depth at worst: the result is an
/// S5-equivalent De Morgan formula of depth at most
/// `24 * (1 + log2 norm(phi))`.
pub fn eliminate_iff_balanced(phi: &Formula) -> Formula {
    let balanced = balance(phi);
    let result = replace_iff(&balanced);
    debug_assert!(result.depth() <= 3 * balanced.depth().max(1));
    result
}
