#![allow(dead_code)]

use moran_core::spec_model::{Level, MoranSpec, Ratio, RatioSchedule};
use proptest::prelude::*;

/// A level of `n ∈ 2..=4` ratios `1/q` with `q ≥ n`, so `Σ c ≤ 1`.
pub fn level() -> BoxedStrategy<Level> {
    (2usize..=4)
        .prop_flat_map(|n| {
            proptest::collection::vec(n as i64..=3 * n as i64, n)
                .prop_map(|qs| Level::new(qs.into_iter().map(|q| Ratio::exact(1, q)).collect()))
        })
        .boxed()
}

/// A level of `n` copies of one ratio.
pub fn uniform_level() -> BoxedStrategy<Level> {
    (2usize..=4)
        .prop_flat_map(|n| (n as i64..=3 * n as i64).prop_map(move |q| Level::uniform(n, Ratio::exact(1, q))))
        .boxed()
}

pub fn schedule_from(levels: BoxedStrategy<Level>) -> impl Strategy<Value = RatioSchedule> {
    (
        proptest::collection::vec(levels.clone(), 0..=3),
        proptest::collection::vec(levels, 1..=3),
    )
        .prop_map(|(prefix, cycle)| RatioSchedule::eventually_periodic(prefix, cycle).expect("nonempty cycle"))
}

pub fn moran_spec() -> impl Strategy<Value = MoranSpec> {
    schedule_from(level()).prop_map(MoranSpec::line)
}

pub fn uniform_moran_spec() -> impl Strategy<Value = MoranSpec> {
    schedule_from(uniform_level()).prop_map(MoranSpec::line)
}

pub fn alternating() -> RatioSchedule {
    RatioSchedule::alternating(
        Level::uniform(2, Ratio::exact(1, 4)),
        Level::uniform(2, Ratio::exact(1, 8)),
    )
}

/// Minimal `r`-ball cover of `[lo, hi] ∩ ⋃ pieces` by exhaustive search over
/// all splits of the clipped pieces into consecutive groups, each group covered
/// by balls laid end to end across its span.
pub fn exhaustive_cover(pieces: &[(f64, f64)], lo: f64, hi: f64, r: f64) -> u64 {
    let clipped: Vec<(f64, f64)> = pieces
        .iter()
        .filter(|&&(a, b)| b >= lo && a <= hi)
        .map(|&(a, b)| (a.max(lo), b.min(hi)))
        .collect();
    let m = clipped.len();
    if m == 0 {
        return 0;
    }
    let cost = |i: usize, j: usize| {
        let q = (clipped[j].1 - clipped[i].0) / (2.0 * r);
        let nearest = q.round();
        let k = if (q - nearest).abs() <= 1e-9 * q.max(1.0) {
            nearest
        } else {
            q.ceil()
        };
        (k as u64).max(1)
    };
    (0u64..1 << (m - 1))
        .map(|cuts| {
            let mut total = 0;
            let mut start = 0;
            for i in 0..m {
                if i == m - 1 || cuts >> i & 1 == 1 {
                    total += cost(start, i);
                    start = i + 1;
                }
            }
            total
        })
        .min()
        .unwrap()
}

/// Consecutive pairs of the sorted points as closed intervals.
pub fn intervals_from_points(mut points: Vec<f64>) -> Vec<(f64, f64)> {
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.chunks_exact(2).map(|p| (p[0], p[1])).collect()
}

pub fn interval_pieces(max_len: usize) -> BoxedStrategy<Vec<(f64, f64)>> {
    proptest::collection::vec(0.0f64..1.0, 2..=2 * max_len)
        .prop_map(intervals_from_points)
        .prop_filter("at least one interval", |v| !v.is_empty())
        .boxed()
}
