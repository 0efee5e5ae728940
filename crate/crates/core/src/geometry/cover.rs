use super::intervals::IntervalSet;

/// Relative slack when rounding `length / 2r` up to a whole number of balls.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverQuery {
    pub x: f64,
    pub big_r: f64,
    pub r: f64,
}

/// Minimal number of closed `r`-balls covering `B(x, R) ∩ S`, with the balls
/// as `[center - r, center + r]` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverResult {
    pub n: u64,
    pub witnesses: Vec<(f64, f64)>,
}

/// The pieces of `S` inside the closed window `[lo, hi]`.
fn clipped(set: &IntervalSet, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    set.intervals()[set.first_reaching(lo)..]
        .iter()
        .take_while(move |&&(a, _)| a <= hi)
        .map(move |&(a, b)| (a.max(lo), b.min(hi)))
}

fn balls_for(length: f64, width: f64) -> u64 {
    let q = length / width;
    let nearest = q.round();
    if (q - nearest).abs() <= SNAP * q.max(1.0) {
        (nearest as u64).max(1)
    } else {
        (q.ceil() as u64).max(1)
    }
}

/// Greedy sweep: each ball starts at the leftmost uncovered point, which is
/// optimal on the line. Covering balls may be centred anywhere.
fn sweep(set: &IntervalSet, q: CoverQuery, mut emit: impl FnMut(f64, u64)) -> u64 {
    let (lo, hi) = (q.x - q.big_r, q.x + q.big_r);
    let width = 2.0 * q.r;
    let mut end = f64::NEG_INFINITY;
    let mut n = 0;
    for (a, b) in clipped(set, lo, hi) {
        if b <= end + SNAP * width {
            continue;
        }
        let start = a.max(end);
        let k = balls_for(b - start, width);
        emit(start, k);
        n += k;
        end = start + k as f64 * width;
    }
    n
}

/// `N_{r,R}` at `x`: 0 when the ball misses `S`, 1 when `r ≥ R`.
pub fn covering_number(set: &IntervalSet, x: f64, big_r: f64, r: f64) -> CoverResult {
    let q = CoverQuery { x, big_r, r };
    if clipped(set, x - big_r, x + big_r).next().is_none() {
        return CoverResult {
            n: 0,
            witnesses: Vec::new(),
        };
    }
    if r >= big_r {
        return CoverResult {
            n: 1,
            witnesses: vec![(x - r, x + r)],
        };
    }
    let width = 2.0 * r;
    let mut witnesses = Vec::new();
    let n = sweep(set, q, |start, k| {
        witnesses.extend((0..k).map(|i| (start + i as f64 * width, start + (i + 1) as f64 * width)));
    });
    let out = CoverResult { n, witnesses };
    debug_assert!(
        covers(set, q, &out.witnesses),
        "cover witnesses leave part of the ball uncovered"
    );
    out
}

/// [`covering_number`] without materializing witnesses.
pub fn covering_count(set: &IntervalSet, x: f64, big_r: f64, r: f64) -> u64 {
    if clipped(set, x - big_r, x + big_r).next().is_none() {
        return 0;
    }
    if r >= big_r {
        return 1;
    }
    sweep(set, CoverQuery { x, big_r, r }, |_, _| {})
}

/// Whether the union of `balls` covers `B(x, R) ∩ S`, allowing the rounding
/// slack of the sweep.
pub fn covers(set: &IntervalSet, q: CoverQuery, balls: &[(f64, f64)]) -> bool {
    let mut balls = balls.to_vec();
    balls.sort_by(|u, v| u.0.total_cmp(&v.0));
    for (a, b) in clipped(set, q.x - q.big_r, q.x + q.big_r) {
        let eps = 4.0 * SNAP * (2.0 * q.r).max(b - a);
        // Walk the balls, extending coverage from a until b.
        let mut reach = a;
        let mut started = false;
        for &(u, v) in &balls {
            if u <= reach + eps && v >= reach {
                reach = reach.max(v);
                started = true;
                if reach >= b - eps {
                    break;
                }
            }
        }
        if !started || reach < b - eps {
            return false;
        }
    }
    true
}
