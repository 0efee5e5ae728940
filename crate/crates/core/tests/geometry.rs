mod common;

use moran_core::geometry::{covering_count, covering_number, covers, CoverQuery, IntervalSet, RealizationMeta};
use moran_core::geometry::{realize_level, Placement, SignRule};
use moran_core::spec_model::{MoranSpec, Ratio, RatioSchedule, SetSpec};
use proptest::prelude::*;

fn set(pieces: Vec<(f64, f64)>) -> IntervalSet {
    IntervalSet::new(pieces, 0, RealizationMeta::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn greedy_matches_exhaustive(pieces in common::interval_pieces(12), x in 0.0f64..1.0, big_r in 0.01f64..0.8, rho in 0.01f64..0.99) {
        let r = rho * big_r;
        let s = set(pieces.clone());
        let got = covering_number(&s, x, big_r, r);
        prop_assert_eq!(got.n, common::exhaustive_cover(&pieces, x - big_r, x + big_r, r));
        prop_assert_eq!(got.n, covering_count(&s, x, big_r, r));
        if got.n > 0 {
            let q = CoverQuery { x, big_r, r };
            prop_assert!(covers(&s, q, &got.witnesses));
            prop_assert_eq!(got.witnesses.len() as u64, got.n);
        }
    }

    #[test]
    fn cover_is_monotone(pieces in common::interval_pieces(10), x in 0.0f64..1.0, big_r in 0.02f64..0.8, a in 0.01f64..0.98, b in 0.01f64..0.98) {
        let s = set(pieces);
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        // Smaller balls need at least as many.
        prop_assert!(covering_count(&s, x, big_r, small * big_r) >= covering_count(&s, x, big_r, large * big_r));
        // A larger window needs at least as many.
        let r = small * big_r;
        prop_assert!(covering_count(&s, x, big_r * (1.0 + large), r) >= covering_count(&s, x, big_r, r));
    }

    #[test]
    fn covers_compose(pieces in common::interval_pieces(10), x in 0.0f64..1.0, r3 in 0.05f64..0.8, a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let s = set(pieces);
        let r2 = a * r3;
        let r1 = b * r2;
        let outer = covering_number(&s, x, r3, r2);
        let split: u64 = outer
            .witnesses
            .iter()
            .map(|&(u, v)| covering_count(&s, (u + v) / 2.0, r2, r1))
            .sum();
        prop_assert!(covering_count(&s, x, r3, r1) <= split);
    }

    #[test]
    fn interval_csv_round_trip(pieces in common::interval_pieces(20), depth in 0u64..30, seed in proptest::option::of(any::<u64>())) {
        let meta = RealizationMeta { spec_hash: "abc123".into(), placement: "left-packed".into(), seed };
        let s = IntervalSet::new(pieces, depth, meta).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        prop_assert_eq!(IntervalSet::read_csv(buf.as_slice()).unwrap(), s);
    }
}

#[test]
fn realized_levels_are_nested() {
    let spec: SetSpec = MoranSpec::line(common::alternating()).into();
    for placement in [
        Placement::LeftPacked,
        Placement::uniform_gap(0.5).unwrap(),
        Placement::default(),
    ] {
        let coarse = realize_level(&spec, placement, 4, SignRule::Alternating, 1 << 16).unwrap();
        let fine = realize_level(&spec, placement, 6, SignRule::Alternating, 1 << 16).unwrap();
        assert_eq!(fine.len(), 4 * coarse.len());
        for (i, chunk) in fine.intervals().chunks(4).enumerate() {
            let (a, b) = coarse.intervals()[i];
            assert!(chunk.iter().all(|&(u, v)| u >= a - 1e-15 && v <= b + 1e-15));
        }
    }
}

#[test]
fn middle_third_cover_counts_are_powers_of_two() {
    let spec: SetSpec = MoranSpec::line(RatioSchedule::uniform(2, Ratio::exact(1, 3))).into();
    let s = realize_level(&spec, Placement::default(), 10, SignRule::Alternating, 1 << 16).unwrap();
    for j in 1..=6 {
        // r = 3^-j / 2 makes each level-j interval exactly one ball.
        let r = 3f64.powi(-j) / 2.0;
        assert_eq!(covering_count(&s, 0.5, 0.5, r), 1 << j, "j = {j}");
    }
}
