mod common;

use std::collections::BTreeSet;

use moran_core::dimension::solve_skk;
use moran_core::spec_model::{MoranSpec, Ratio};
use moran_core::symbolic::{
    cutset, cutset_identity_residual, dyadic_classes, lower_bound_witness, witness_margin, Word, DEFAULT_BUDGET,
};
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

/// Every extension `v` of the word ending at `base_end` with `c_v ≤ δ < c_{v⁻}`,
/// found by exact rational arithmetic.
fn brute_force(spec: &MoranSpec, base_end: u64, delta: &BigRational) -> BTreeSet<Vec<u32>> {
    fn walk(
        spec: &MoranSpec,
        level: u64,
        c: BigRational,
        word: &mut Vec<u32>,
        delta: &BigRational,
        out: &mut BTreeSet<Vec<u32>>,
    ) {
        if &c <= delta {
            out.insert(word.clone());
            return;
        }
        for (j, r) in spec.schedule.level_at(level).ratios().iter().enumerate() {
            word.push(j as u32 + 1);
            walk(spec, level + 1, &c * r.to_big().unwrap(), word, delta, out);
            word.pop();
        }
    }
    let mut out = BTreeSet::new();
    walk(spec, base_end + 1, BigRational::one(), &mut Vec::new(), delta, &mut out);
    out
}

fn small_delta(spec: &MoranSpec, frac: f64) -> Ratio {
    // δ = c_*^(1 + frac), rounded to a nearby exact fraction below c_*.
    let c = spec.c_star().value();
    let target = c.powf(1.0 + frac);
    let denom = 1_000_000i64;
    Ratio::exact(((target * denom as f64).floor() as i64).max(1), denom)
}

fn base_word(spec: &MoranSpec, start: u64, seed: u64, len: usize) -> Word {
    let letters = (0..len as u64)
        .map(|i| {
            let n = spec.schedule.level_at(start + i + 1).n() as u64;
            ((seed >> (2 * i)) % n) as u32 + 1
        })
        .collect();
    Word::new(&spec.schedule, start, letters).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cutset_equals_exhaustive_enumeration(
        spec in common::moran_spec(),
        start in 0u64..4,
        seed in any::<u64>(),
        len in 0usize..3,
        frac in 0.0f64..1.2,
    ) {
        let delta = small_delta(&spec, frac);
        let u = base_word(&spec, start, seed, len);
        let cut = cutset(&spec, &u, delta, DEFAULT_BUDGET).unwrap();
        let got: BTreeSet<Vec<u32>> = cut.iter().map(|(v, _)| v.to_vec()).collect();
        prop_assert_eq!(got.len(), cut.len());
        prop_assert_eq!(got, brute_force(&spec, u.end(), &delta.to_big().unwrap()));
    }

    #[test]
    fn cutset_measure_identity_holds(
        spec in common::moran_spec(),
        start in 0u64..5,
        seed in any::<u64>(),
        frac in 0.0f64..2.0,
        s in 0.0f64..1.0,
    ) {
        let delta = small_delta(&spec, frac);
        let u = base_word(&spec, start, seed, 2);
        let residual = cutset_identity_residual(&spec, &u, delta, s, DEFAULT_BUDGET).unwrap();
        prop_assert!(residual <= 1e-10, "residual {residual}");
    }

    #[test]
    fn witness_exists_below_window_root(
        spec in common::moran_spec(),
        k_lo in 0u64..4,
        len in 1u64..7,
        below in 0.01f64..0.3,
        eps in 0.01f64..0.5,
    ) {
        let k_hi = k_lo + len;
        let s_window = solve_skk(&spec, k_lo, k_hi, 1e-12).unwrap();
        let s = (s_window - below).max(0.0);
        prop_assume!(s < s_window - 1e-9);
        let w = lower_bound_witness(&spec, k_lo, k_hi, s, eps, 1e-12, DEFAULT_BUDGET).unwrap();
        let w = w.expect("a witness must exist below s_(k,k')");
        prop_assert!(w.margin >= 0.0);
        let direct = 2f64.powf(-eps * w.q as f64) * (1.0 - 2f64.powf(-eps));
        prop_assert!(direct <= w.count as f64 * 2f64.powf(-(w.q as f64) * s) * (1.0 + 1e-12));
    }

    #[test]
    fn dyadic_classes_partition_the_window(spec in common::moran_spec(), k_lo in 0u64..4, len in 1u64..7) {
        let classes = dyadic_classes(&spec, k_lo, k_lo + len, DEFAULT_BUDGET).unwrap();
        let words: u64 = (k_lo + 1..=k_lo + len).map(|k| spec.schedule.level_at(k).n() as u64).product();
        prop_assert_eq!(classes.total, words);
        prop_assert_eq!(classes.classes.values().sum::<u64>(), words);
    }
}

#[test]
fn witness_margin_sign() {
    // q = 0: 1 - 2^{-ε} ≤ count always holds for count ≥ 1.
    assert!(witness_margin(0, 1, 0.5, 0.1) > 0.0);
    // 2^{-10ε}(1 - 2^{-ε}) > 1 · 2^{-10}: fails.
    assert!(witness_margin(10, 1, 1.0, 0.1) < 0.0);
}

#[test]
fn budget_overflow_is_an_error() {
    let spec = MoranSpec::line(common::alternating());
    let err = cutset(&spec, &Word::root(), Ratio::exact(1, 1_000_000_000), 1000).unwrap_err();
    assert!(matches!(
        err,
        moran_core::symbolic::SymbolicError::Budget { budget: 1000 }
    ));
}
