mod common;

use moran_core::dimension::{log_delta, pre_dimensions, solve_skk, theta, uniform_corollary, DimensionOptions, Method};
use moran_core::spec_model::{MarkerRule, MoranSpec, Ratio, RatioSchedule};
use proptest::prelude::*;

/// `Π_{i=k+1}^{k'} Σ_j c_{i,j}^s`, multiplied out directly.
fn delta_direct(spec: &MoranSpec, k: u64, k_prime: u64, s: f64) -> f64 {
    (k + 1..=k_prime)
        .map(|i| {
            spec.schedule
                .level_at(i)
                .ratios()
                .iter()
                .map(|c| c.value().powf(s))
                .sum::<f64>()
        })
        .product()
}

/// Root of `Δ(s) = 1` by a 1e-3 scan followed by a 1e-7 scan of the bracket.
fn grid_root(spec: &MoranSpec, k: u64, k_prime: u64) -> f64 {
    let f = |s: f64| delta_direct(spec, k, k_prime, s) - 1.0;
    let coarse = (0..=1000).map(|i| i as f64 * 1e-3).find(|&s| f(s) <= 0.0).unwrap();
    let lo = (coarse - 1e-3).max(0.0);
    (0..=10_000)
        .map(|i| lo + i as f64 * 1e-7)
        .find(|&s| f(s) <= 0.0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn solver_matches_grid_oracle(spec in common::moran_spec(), k in 0u64..6, len in 1u64..10) {
        let s = solve_skk(&spec, k, k + len, 1e-12).unwrap();
        let oracle = grid_root(&spec, k, k + len);
        prop_assert!((s - oracle).abs() <= 2e-7, "solver {s} vs oracle {oracle}");
    }

    #[test]
    fn log_delta_decreases_and_root_is_tight(spec in common::moran_spec(), k in 0u64..6, len in 1u64..12) {
        let kp = k + len;
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let v = log_delta(&spec, k, kp, i as f64 / 20.0).unwrap();
            prop_assert!(v < prev);
            prev = v;
        }
        let tol = 1e-12;
        let s = solve_skk(&spec, k, kp, tol).unwrap();
        prop_assert!(log_delta(&spec, k, kp, s - tol).unwrap() > 0.0);
        prop_assert!(log_delta(&spec, k, kp, (s + tol).min(1.0)).unwrap() <= 1e-12);
    }

    #[test]
    fn concatenated_window_root_lies_between(spec in common::moran_spec(), k in 0u64..5, a in 1u64..8, b in 1u64..8) {
        let tol = 1e-12;
        let left = solve_skk(&spec, k, k + a, tol).unwrap();
        let right = solve_skk(&spec, k + a, k + a + b, tol).unwrap();
        let whole = solve_skk(&spec, k, k + a + b, tol).unwrap();
        prop_assert!(whole >= left.min(right) - 2.0 * tol && whole <= left.max(right) + 2.0 * tol);
    }

    #[test]
    fn bisection_and_log_ratio_agree(spec in common::uniform_moran_spec()) {
        let pre_b = pre_dimensions(&spec, 200, 1e-12, 0.125, Method::Bisection).unwrap();
        let pre_l = pre_dimensions(&spec, 200, 1e-12, 0.125, Method::LogRatio).unwrap();
        for (b, l) in pre_b.trace.iter().zip(&pre_l.trace) {
            prop_assert!((b.1 - l.1).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_ratio_report_is_ordered(spec in common::uniform_moran_spec()) {
        let opts = DimensionOptions { m_max: 12, k_max: 50, horizon: 400, ..DimensionOptions::default() };
        let r = uniform_corollary(&spec, &opts).unwrap();
        prop_assert!(r.is_ordered(1e-9), "{r:?}");
        for w in r.theta_trace.windows(2) {
            prop_assert!(w[1].running_inf <= w[0].running_inf);
        }
    }
}

#[test]
fn single_level_roots_respect_implied_bounds() {
    let spec = MoranSpec::line(RatioSchedule::three_ratio(MarkerRule::Factorial { shift: 1 }).unwrap());
    let mut rng_state = 0x2545_f491_4f6c_dd1du64;
    for _ in 0..10_000 {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        let k = 1 + rng_state % 400_000;
        let level = spec.schedule.level_at(k);
        let s = solve_skk(&spec, k - 1, k, 1e-12).unwrap();
        let ln_n = (level.n() as f64).ln();
        let lo = ln_n / -level.min_ratio().ln();
        let hi = ln_n / -level.max_ratio().ln();
        assert!(
            s >= lo - 1e-12 && s <= hi + 1e-12,
            "level {k}: {s} outside [{lo}, {hi}]"
        );
    }
}

/// Levels `1..=p_1` and `p_i+1..=p_i+i` carry 1/4; the rest of block `i`
/// carries 1/8 for even `i` and 1/16 for odd `i`.
fn three_ratio_oracle(k: u64) -> Ratio {
    let p = |i: u64| (1..=i + 1).product::<u64>();
    if k <= p(1) {
        return Ratio::exact(1, 4);
    }
    let mut i = 1;
    while p(i + 1) < k {
        i += 1;
    }
    if k <= p(i) + i {
        Ratio::exact(1, 4)
    } else if i % 2 == 0 {
        Ratio::exact(1, 8)
    } else {
        Ratio::exact(1, 16)
    }
}

#[test]
fn three_ratio_partition_matches_oracle() {
    let schedule = RatioSchedule::three_ratio(MarkerRule::Factorial { shift: 1 }).unwrap();
    for k in 1..=50_000u64 {
        assert_eq!(schedule.level_at(k).ratios()[0], three_ratio_oracle(k), "level {k}");
        assert_eq!(schedule.level_at(k).n(), 2);
    }
}

#[test]
fn level_lookup_is_pure() {
    let schedule = RatioSchedule::three_ratio(MarkerRule::Factorial { shift: 1 }).unwrap();
    let sequential: Vec<usize> = schedule.cursor(1).take(6000).collect();
    let mut k: u64 = 1;
    for _ in 0..20_000 {
        k = (k * 7919 + 17) % 6000 + 1;
        assert_eq!(schedule.palette_index(k), sequential[(k - 1) as usize]);
    }
    assert_eq!(schedule.tape(1, 6000), sequential);
}

#[test]
fn alternating_theta_closed_form() {
    let spec = MoranSpec::line(common::alternating());
    for m in 1..=100u64 {
        let t = theta(&spec, m, 10_000, 1e-12).unwrap();
        let expected = m as f64 / (2 * m.div_ceil(2) + 3 * (m / 2)) as f64;
        assert!((t.value - expected).abs() < 1e-9, "m = {m}: {} vs {expected}", t.value);
        assert!(t.exact);
    }
}
