mod common;

use moran_core::dimension::{uniform_corollary, DimensionOptions};
use moran_core::scale::{equivalence_check, psi_ln, scale_from_schedule, sup_psi, RGrid, ScaleFunction, TailRule};
use moran_core::spec_model::MoranSpec;
use proptest::prelude::*;

/// A step function with breakpoints `t_k` increasing from about 0.1 and values in `[0.05, 1]`.
fn step_function() -> BoxedStrategy<ScaleFunction> {
    proptest::collection::vec((0.05f64..2.0, 0.05f64..1.0), 1..=30)
        .prop_map(|pieces| {
            let mut t = 0.0;
            let (mut bp, mut vals) = (Vec::new(), Vec::new());
            for (step, h) in pieces {
                t += step;
                bp.push(t);
                vals.push(h);
            }
            ScaleFunction::from_log_pieces(bp, vals, TailRule::ExtendLast).unwrap()
        })
        .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equivalent_functions_give_close_psi(
        h in step_function(),
        c in 0.0f64..0.5,
        signs in proptest::collection::vec(-1.0f64..1.0, 30),
        lambda in 0.1f64..5.0,
    ) {
        // |g − h| ≤ C/t on each piece, tightest at the right end t_k. The last
        // value extends to every smaller scale, so it is shared.
        let n = h.len();
        let g_vals: Vec<f64> = h
            .breakpoints()
            .iter()
            .zip(h.values())
            .zip(&signs)
            .enumerate()
            .map(|(k, ((&t, &v), &u))| if k + 1 == n { v } else { (v + u * c / t).max(1e-9) })
            .collect();
        let g = ScaleFunction::from_log_pieces(h.breakpoints().to_vec(), g_vals, TailRule::ExtendLast).unwrap();
        prop_assert!(equivalence_check(&h, &g, c, &[0.5, 0.1, 1e-3]).holds);
        let grid = RGrid::Points(vec![1.0, (-h.floor()).exp()]);
        let a = sup_psi(&h, lambda, &grid).unwrap().psi;
        let b = sup_psi(&g, lambda, &grid).unwrap().psi;
        prop_assert!((a - b).abs() <= 2.0 * c / lambda + 1e-12, "{a} vs {b}");
    }

    #[test]
    fn constant_scale_gives_its_value(s in 0.01f64..1.0, r in proptest::collection::vec(1e-6f64..1.0, 1..5), rho in 1e-6f64..0.99) {
        let h = ScaleFunction::constant(s).unwrap();
        let row = sup_psi(&h, -rho.ln(), &RGrid::Points(r)).unwrap();
        prop_assert!((row.psi - s).abs() < 1e-12);
    }

    #[test]
    fn supremum_dominates_a_dense_scan(h in step_function(), lambda in 0.1f64..5.0) {
        prop_assume!(h.floor() > lambda + 0.01);
        let row = sup_psi(&h, lambda, &RGrid::Represented).unwrap();
        let hi = h.floor() - lambda;
        for i in 0..2000 {
            let t = hi * i as f64 / 2000.0;
            prop_assert!(psi_ln(&h, t, lambda).unwrap().psi <= row.psi + 1e-12);
        }
        // The supremum is attained, or approached from the left in `T`.
        let probe = if row.from_above { row.big_t - 1e-10 } else { row.big_t };
        prop_assert!((psi_ln(&h, probe, lambda).unwrap().psi - row.psi).abs() < 1e-8);
    }

    #[test]
    fn sup_over_a_range_is_the_max_over_its_halves(h in step_function(), lambda in 0.1f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut t = [a, b, c].map(|u| u * 6.0);
        t.sort_by(f64::total_cmp);
        let r = t.map(|v| (-v).exp());
        let whole = sup_psi(&h, lambda, &RGrid::Points(vec![r[0], r[2]])).unwrap().psi;
        let left = sup_psi(&h, lambda, &RGrid::Points(vec![r[0], r[1]])).unwrap().psi;
        let right = sup_psi(&h, lambda, &RGrid::Points(vec![r[1], r[2]])).unwrap().psi;
        prop_assert!((whole - left.max(right)).abs() < 1e-12);
    }

    #[test]
    fn tail_extrema_match_pre_dimensions(spec in common::uniform_moran_spec(), depth in 16u64..400) {
        let h = scale_from_schedule(&spec.schedule, depth).unwrap();
        let opts = DimensionOptions { m_max: 4, k_max: 20, horizon: depth, ..DimensionOptions::default() };
        let report = uniform_corollary(&spec, &opts).unwrap();
        let (lo, hi, window) = h.tail_extrema(opts.tail_fraction);
        prop_assert_eq!((window.0 as u64, window.1 as u64), report.tail);
        prop_assert!((lo - report.s_lower).abs() <= 2.0 * opts.tol);
        prop_assert!((hi - report.s_upper).abs() <= 2.0 * opts.tol);
    }
}

#[test]
fn scale_csv_round_trip_is_exact() {
    let h = scale_from_schedule(&common::alternating(), 500).unwrap();
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    assert_eq!(ScaleFunction::read_csv(buf.as_slice()).unwrap(), h);
}

#[test]
fn strict_tail_refuses_deep_scales() {
    let spec = MoranSpec::line(common::alternating());
    let h = scale_from_schedule(&spec.schedule, 10).unwrap();
    let strict =
        ScaleFunction::from_log_pieces(h.breakpoints().to_vec(), h.values().to_vec(), TailRule::Strict).unwrap();
    assert!(strict.eval_ln(h.floor() + 1.0).is_err());
    let extended = h.eval_ln(h.floor() + 1.0).unwrap();
    assert!(extended.in_tail);
    assert_eq!(extended.value, *h.values().last().unwrap());
}
