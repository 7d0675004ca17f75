use std::collections::{BTreeMap, BTreeSet};

use basisml::boolfn::{builtin, Basis};
use basisml::formula::Formula;
use basisml::semantics::KripkeModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn nand_basis() -> Basis {
    Basis::new(
        "nand",
        vec![
            builtin("nand").unwrap(),
            builtin("top").unwrap(),
            builtin("bot").unwrap(),
        ],
    )
    .unwrap()
}

pub fn imp_basis() -> Basis {
    Basis::new(
        "imp",
        vec![
            builtin("imp").unwrap(),
            builtin("bot").unwrap(),
            builtin("top").unwrap(),
        ],
    )
    .unwrap()
}

pub fn andxor_basis() -> Basis {
    Basis::new(
        "andxor",
        vec![
            builtin("and").unwrap(),
            builtin("xor").unwrap(),
            builtin("top").unwrap(),
            builtin("bot").unwrap(),
        ],
    )
    .unwrap()
}

pub fn extended_with_majority() -> Basis {
    let maj = Basis::new("maj", vec![builtin("maj").unwrap()]).unwrap();
    Basis::extended_de_morgan()
        .union(&maj, "extdmmaj")
        .unwrap()
}

fn leaf(rng: &mut ChaCha8Rng, vars: &[&str]) -> Formula {
    match rng.random_range(0..vars.len() + 2) {
        0 => Formula::top(),
        1 => Formula::bot(),
        i => Formula::var(vars[i - 2]),
    }
}

/// A formula over the extended De Morgan basis plus majority, of exactly
/// `size` nodes, with diamond nesting at most `modal`.
pub fn sized_formula(rng: &mut ChaCha8Rng, size: usize, modal: usize, vars: &[&str]) -> Formula {
    if size <= 1 {
        return leaf(rng, vars);
    }
    let mut choices = vec![0u8];
    if modal > 0 {
        choices.push(1);
    }
    if size >= 3 {
        choices.extend([2, 3, 4]);
    }
    if size >= 4 {
        choices.push(5);
    }
    match choices[rng.random_range(0..choices.len())] {
        0 => Formula::not(sized_formula(rng, size - 1, modal, vars)),
        1 => Formula::diamond(sized_formula(rng, size - 1, modal - 1, vars)),
        c @ 2..=4 => {
            let left = rng.random_range(1..=size - 2);
            let l = sized_formula(rng, left, modal, vars);
            let r = sized_formula(rng, size - 1 - left, modal, vars);
            match c {
                2 => Formula::and(l, r),
                3 => Formula::or(l, r),
                _ => Formula::iff(l, r),
            }
        }
        _ => {
            let a = rng.random_range(1..=size - 3);
            let b = rng.random_range(1..=size - 2 - a);
            let c = size - 1 - a - b;
            Formula::apply(
                "maj",
                vec![
                    sized_formula(rng, a, modal, vars),
                    sized_formula(rng, b, modal, vars),
                    sized_formula(rng, c, modal, vars),
                ],
            )
        }
    }
}

/// A formula over the extended De Morgan basis with exactly `leaves`
/// leaves, sprinkled with negations and diamonds.
pub fn leaf_formula(rng: &mut ChaCha8Rng, leaves: usize, vars: &[&str]) -> Formula {
    if leaves <= 1 {
        let base = leaf(rng, vars);
        return match rng.random_range(0..4) {
            0 => Formula::not(base),
            1 => Formula::diamond(base),
            _ => base,
        };
    }
    match rng.random_range(0..6) {
        0 => Formula::not(leaf_formula(rng, leaves, vars)),
        1 => Formula::diamond(leaf_formula(rng, leaves, vars)),
        _ => {
            let left = rng.random_range(1..leaves);
            let l = leaf_formula(rng, left, vars);
            let r = leaf_formula(rng, leaves - left, vars);
            match rng.random_range(0..3) {
                0 => Formula::and(l, r),
                1 => Formula::or(l, r),
                _ => Formula::iff(l, r),
            }
        }
    }
}

/// A De Morgan formula (with diamonds) of exactly `size` nodes.
pub fn dm_formula(rng: &mut ChaCha8Rng, size: usize, vars: &[&str]) -> Formula {
    if size <= 1 {
        return leaf(rng, vars);
    }
    let mut choices = vec![0u8, 1];
    if size >= 3 {
        choices.extend([2, 3]);
    }
    match choices[rng.random_range(0..choices.len())] {
        0 => Formula::not(dm_formula(rng, size - 1, vars)),
        1 => Formula::diamond(dm_formula(rng, size - 1, vars)),
        c => {
            let left = rng.random_range(1..=size - 2);
            let l = dm_formula(rng, left, vars);
            let r = dm_formula(rng, size - 1 - left, vars);
            if c == 2 {
                Formula::and(l, r)
            } else {
                Formula::or(l, r)
            }
        }
    }
}

/// A pointed Kripke model with up to `max_worlds` worlds, a random
/// relation, and a random valuation over `vars`.
pub fn random_model(rng: &mut ChaCha8Rng, max_worlds: usize, vars: &[&str]) -> (KripkeModel, usize) {
    let worlds = rng.random_range(1..=max_worlds);
    let mut relation = BTreeSet::new();
    for u in 0..worlds {
        for v in 0..worlds {
            if rng.random_bool(0.4) {
                relation.insert((u, v));
            }
        }
    }
    let mut valuation: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for var in vars {
        let mut holds = BTreeSet::new();
        for w in 0..worlds {
            if rng.random_bool(0.5) {
                holds.insert(w);
            }
        }
        valuation.insert(var.to_string(), holds);
    }
    let point = rng.random_range(0..worlds);
    let model = KripkeModel::new(worlds, relation, valuation, point).expect("indices in range");
    (model, point)
}
