mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use basisml::boolfn::{builtin, Basis, TruthTable};
use basisml::formula::Formula;
use basisml::repr::{
    repr_biimplication, repr_disjunction, repr_dm, repr_extdm, repr_negation,
};
use basisml::s5::{balance, eliminate_iff_balanced, reduce_prefix, PrefixOp};
use basisml::semantics::{
    eo_transfer_check, min_diamond_search, model_check, phi_n, Decider, FrameClass, KripkeModel,
    DEFAULT_BUDGET,
};
use basisml::translate::{rank, translate_pipeline, TranslateError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    andxor_basis, dm_formula, extended_with_majority, imp_basis, leaf_formula, nand_basis,
    random_model, sized_formula,
};

fn criterion(n: usize, limit: Duration, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) if elapsed <= limit => {
            println!("criterion {n}: PASS ({elapsed:.2?})");
        }
        Ok(()) => {
            println!("criterion {n}: FAIL (took {elapsed:.2?}, limit {limit:?})");
            panic!("criterion {n} exceeded its time limit");
        }
        Err(cause) => {
            println!("criterion {n}: FAIL");
            resume_unwind(cause);
        }
    }
}

fn ceil_log2(x: u128) -> u32 {
    128 - (x - 1).leading_zeros()
}

fn size_bound(n: u128, kappa: u128) -> u128 {
    kappa
        .saturating_pow(1 + ceil_log2(n.max(2)))
        .saturating_mul(n)
}

/// The shared random corpus for the translation criteria: formulas over the
/// extended De Morgan basis plus majority, size at most 12, diamond nesting
/// at most 3.
fn corpus() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0404);
    (0..200)
        .map(|_| {
            let size = rng.random_range(1..=12);
            sized_formula(&mut rng, size, 3, &["p0", "p1", "p2"])
        })
        .collect()
}

fn fully_locally_monotone(basis: &Basis) -> bool {
    basis.functions().iter().all(|f| f.is_locally_monotone())
}

#[test]
fn criterion_1_classifications() {
    criterion(1, Duration::from_secs(1), || {
        for name in ["and", "or", "imp", "not", "top", "bot", "maj", "nand"] {
            assert!(builtin(name).unwrap().is_locally_monotone(), "{name}");
        }
        for name in ["iff", "xor"] {
            assert!(!builtin(name).unwrap().is_locally_monotone(), "{name}");
        }
        for name in ["not", "bot", "top", "iff", "xor"] {
            assert!(builtin(name).unwrap().is_affine(), "{name}");
        }
        for name in ["or", "and", "imp", "maj", "nand"] {
            assert!(!builtin(name).unwrap().is_affine(), "{name}");
        }
        assert!(Basis::de_morgan().is_complete());
        assert!(Basis::extended_de_morgan().is_complete());
    });
}

#[test]
fn criterion_2_representation_soundness() {
    criterion(2, Duration::from_secs(10), || {
        let bases = [
            nand_basis(),
            imp_basis(),
            andxor_basis(),
            Basis::de_morgan(),
            Basis::extended_de_morgan(),
        ];
        for basis in &bases {
            repr_negation(basis).unwrap().validate(basis).unwrap();
            repr_disjunction(basis).unwrap().validate(basis).unwrap();
            match repr_biimplication(basis) {
                Ok(rep) => {
                    assert!(!fully_locally_monotone(basis), "{}", basis.name());
                    rep.validate(basis).unwrap();
                }
                Err(_) => assert!(fully_locally_monotone(basis), "{}", basis.name()),
            }
        }
        assert!(repr_biimplication(&Basis::de_morgan()).is_err());
    });
}

#[test]
fn criterion_3_slice_dichotomy() {
    criterion(3, Duration::from_secs(60), || {
        let dm = Basis::de_morgan();
        let extdm = Basis::extended_de_morgan();
        let mut tables = Vec::new();
        for arity in 0..=2usize {
            let width = 1usize << arity;
            for code in 0u32..1 << width {
                let bits: String = (0..width)
                    .map(|j| if code >> j & 1 == 1 { '1' } else { '0' })
                    .collect();
                tables.push(TruthTable::from_bits("f", arity, &bits).unwrap());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x0303);
        let mut codes = BTreeSet::new();
        while codes.len() < 40 {
            codes.insert(rng.random_range(0u32..256));
        }
        for code in codes {
            let bits: String = (0..8)
                .map(|j| if code >> j & 1 == 1 { '1' } else { '0' })
                .collect();
            tables.push(TruthTable::from_bits("f", 3, &bits).unwrap());
        }
        for f in &tables {
            for position in 1..=f.arity() {
                let monotone = f.is_monotone_in_arg(position).unwrap();
                match repr_dm(f, position) {
                    Ok(rep) => {
                        assert!(monotone);
                        rep.validate(&dm).unwrap();
                    }
                    Err(_) => assert!(!monotone),
                }
                repr_extdm(f, position).unwrap().validate(&extdm).unwrap();
            }
        }
    });
}

#[test]
fn criterion_4_translation_soundness_and_bound() {
    criterion(4, Duration::from_secs(600), || {
        let source = extended_with_majority();
        let formulas = corpus();
        for target in [nand_basis(), andxor_basis()] {
            let combined = source.union(&target, "check").unwrap();
            let decider = Decider::new(combined, DEFAULT_BUDGET);
            let target_monotone = fully_locally_monotone(&target);
            for phi in &formulas {
                match translate_pipeline(phi, &source, &target) {
                    Ok((out, report)) => {
                        assert!(
                            decider.equivalent(phi, &out, FrameClass::K).unwrap(),
                            "{} vs {}",
                            phi.render(),
                            out.render()
                        );
                        let n = phi.size() as u128;
                        let bound = size_bound(n, report.kappa_constant as u128);
                        assert_eq!(report.bound, bound);
                        assert!(
                            out.size() as u128 <= bound,
                            "size {} over bound {} for {}",
                            out.size(),
                            bound,
                            phi.render()
                        );
                    }
                    Err(TranslateError::HypothesisViolated { .. }) => {
                        assert!(target_monotone && phi.function_names().contains("iff"));
                    }
                    Err(other) => panic!("unexpected failure: {other}"),
                }
            }
        }
    });
}

#[test]
fn criterion_5_rank_lower_bound() {
    criterion(5, Duration::from_secs(10), || {
        let source = extended_with_majority();
        let dm = Basis::de_morgan();
        for phi in corpus() {
            let r = rank(&phi, &source, &dm);
            assert!(
                phi.size() as u128 >= (1u128 << r) - 1,
                "rank {} too high for {}",
                r,
                phi.render()
            );
        }
        let abstract_basis = Basis::new(
            "abstract",
            vec![
                TruthTable::from_bits("f", 2, "0001").unwrap(),
                TruthTable::from_bits("fp", 2, "0111").unwrap(),
                TruthTable::from_bits("fpp", 2, "0001").unwrap(),
            ],
        )
        .unwrap();
        let p1 = Formula::var("p1");
        let p2 = Formula::var("p2");
        let inner = Formula::apply("fp", vec![p1.clone(), p2.clone()]);
        let left = Formula::apply("f", vec![inner.clone(), inner]);
        let right = Formula::apply(
            "fpp",
            vec![p2, Formula::apply("f", vec![p1.clone(), p1])],
        );
        let fig = Formula::apply("f", vec![left, right]);
        assert_eq!(rank(&fig, &abstract_basis, &dm), 2);
    });
}

#[test]
fn criterion_6_balance_bounds() {
    criterion(6, Duration::from_secs(600), || {
        let decider = Decider::new(Basis::extended_de_morgan(), DEFAULT_BUDGET);
        let dm_names: BTreeSet<String> = ["not", "and", "or", "top", "bot"]
            .into_iter()
            .map(String::from)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0606);
        for _ in 0..300 {
            let leaves = rng.random_range(1..=32);
            let phi = leaf_formula(&mut rng, leaves, &["p0", "p1", "p2"]);
            let m = phi.norm() as f64;
            let balanced = balance(&phi);
            assert!(
                (balanced.depth() as f64) <= 8.0 * (1.0 + m.log2()) + 1e-9,
                "depth {} for norm {} in {}",
                balanced.depth(),
                phi.norm(),
                phi.render()
            );
            assert!(decider.equivalent(&phi, &balanced, FrameClass::S5).unwrap());
            let eliminated = eliminate_iff_balanced(&phi);
            assert!(eliminated.function_names().is_subset(&dm_names));
            assert!(
                (eliminated.depth() as f64) <= 24.0 * (1.0 + m.log2()) + 1e-9,
                "depth {} for norm {} in {}",
                eliminated.depth(),
                phi.norm(),
                phi.render()
            );
            assert!(decider
                .equivalent(&phi, &eliminated, FrameClass::S5)
                .unwrap());
        }
    });
}

#[test]
fn criterion_7_modality_reduction() {
    criterion(7, Duration::from_secs(30), || {
        fn prefix_len(mut f: &Formula) -> usize {
            let mut len = 0;
            loop {
                match f {
                    Formula::Diamond(inner) => {
                        len += 1;
                        f = inner;
                    }
                    Formula::Apply(name, args) if name == "not" && args.len() == 1 => {
                        len += 1;
                        f = &args[0];
                    }
                    _ => return len,
                }
            }
        }
        let decider = Decider::new(Basis::de_morgan(), DEFAULT_BUDGET);
        let atom = Formula::var("p");
        let mut checked = 0usize;
        for len in 1..=6u32 {
            for mask in 0..1u32 << len {
                let prefix: Vec<PrefixOp> = (0..len)
                    .map(|bit| {
                        if mask >> bit & 1 == 1 {
                            PrefixOp::Dia
                        } else {
                            PrefixOp::Not
                        }
                    })
                    .collect();
                let original = prefix.iter().rev().fold(atom.clone(), |acc, op| match op {
                    PrefixOp::Not => Formula::not(acc),
                    PrefixOp::Dia => Formula::diamond(acc),
                });
                let reduced = reduce_prefix(&prefix, &atom);
                assert!(prefix_len(&reduced) <= 3, "{}", reduced.render());
                assert!(decider
                    .equivalent(&original, &reduced, FrameClass::S5)
                    .unwrap());
                checked += 1;
            }
        }
        assert_eq!(checked, 126);
    });
}

#[test]
fn criterion_8_diamond_lower_bounds() {
    criterion(8, Duration::from_secs(1800), || {
        let decider = Decider::new(Basis::extended_de_morgan(), DEFAULT_BUDGET);
        let phi0 = phi_n(0);
        assert!(min_diamond_search(&decider, &phi0, FrameClass::T, 0, 9)
            .unwrap()
            .is_none());
        let witness = min_diamond_search(&decider, &phi0, FrameClass::T, 1, 9)
            .unwrap()
            .expect("phi_0 is expressible with one diamond");
        assert_eq!(witness.diamond_count(), 1);
        let phi1 = phi_n(1);
        assert!(min_diamond_search(&decider, &phi1, FrameClass::T, 1, 9)
            .unwrap()
            .is_none());
    });
}

#[test]
fn criterion_9_transfer_property() {
    criterion(9, Duration::from_secs(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0909);
        for _ in 0..1000 {
            let (s, sw) = random_model(&mut rng, 4, &["p0", "p1"]);
            let (t, tw) = random_model(&mut rng, 4, &["p0", "p1"]);
            let size = rng.random_range(1..=10);
            let psi = dm_formula(&mut rng, size, &["p0", "p1"]);
            assert!(
                eo_transfer_check(&s, sw, &t, tw, &psi).unwrap(),
                "falsified on {}",
                psi.render()
            );
        }
    });
}

#[test]
fn criterion_10_fixture_model() {
    criterion(10, Duration::from_secs(5), || {
        let relation = BTreeSet::from([(0, 0), (0, 1), (1, 1), (2, 2)]);
        let valuation = [("p0".to_string(), BTreeSet::from([0, 2]))]
            .into_iter()
            .collect();
        let model = KripkeModel::new(3, relation, valuation, 2).unwrap();
        let dm = Basis::de_morgan();
        let phi0 = phi_n(0);
        assert!(model_check(&model, 0, &phi0, &dm).unwrap());
        assert!(!model_check(&model, 2, &phi0, &dm).unwrap());
    });
}
