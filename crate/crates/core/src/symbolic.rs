//! Finite words, cutsets `A_u(δ)` and dyadic classes of window words.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dimension::{solve_skk, DimensionError};
use crate::numeric::Neumaier;
use crate::spec_model::{MoranSpec, Ratio, RatioSchedule};

pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Relative guard band for log-space comparisons against `ln δ`.
const TIE_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymbolicError {
    #[error("δ = {delta} must lie in (0, c_*) with c_* = {c_star}")]
    DeltaOutOfRange { delta: f64, c_star: f64 },
    #[error("letter {letter} at level {level} exceeds the alphabet size {n}")]
    BadLetter { level: u64, letter: u32, n: usize },
    #[error("enumeration budget of {budget} words exceeded")]
    Budget { budget: usize },
    #[error("need k_lo < k_hi (got {k_lo}, {k_hi})")]
    EmptyWindow { k_lo: u64, k_hi: u64 },
    #[error("precondition s < s_(k_lo,k_hi) violated: s = {s}, s_(k_lo,k_hi) = {s_window}")]
    ExponentTooLarge { s: f64, s_window: f64 },
    #[error("ε = {0} must be positive")]
    BadEpsilon(f64),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

/// A finite word `u = (u_{k+1}, ..., u_{k'})` with 1-based letters.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    start: u64,
    letters: Vec<u32>,
    ln_c: f64,
}

impl Word {
    /// The empty word at the root; `c_∅ = 1`.
    pub fn root() -> Self {
        Self {
            start: 0,
            letters: Vec::new(),
            ln_c: 0.0,
        }
    }

    pub fn new(schedule: &RatioSchedule, start: u64, letters: Vec<u32>) -> Result<Self, SymbolicError> {
        let mut acc = Neumaier::default();
        for (i, &letter) in letters.iter().enumerate() {
            let level_no = start + i as u64 + 1;
            let level = schedule.level_at(level_no);
            if letter == 0 || letter as usize > level.n() {
                return Err(SymbolicError::BadLetter {
                    level: level_no,
                    letter,
                    n: level.n(),
                });
            }
            acc.add(level.ln_ratios()[letter as usize - 1]);
        }
        Ok(Self {
            start,
            letters,
            ln_c: acc.total(),
        })
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Level of the last letter (`start` for the empty word).
    pub fn end(&self) -> u64 {
        self.start + self.letters.len() as u64
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn ln_c(&self) -> f64 {
        self.ln_c
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("∅");
        }
        write_dotted(f, &self.letters)
    }
}

fn write_dotted(out: &mut impl fmt::Write, letters: &[u32]) -> fmt::Result {
    for (i, l) in letters.iter().enumerate() {
        if i > 0 {
            out.write_char('.')?;
        }
        write!(out, "{l}")?;
    }
    Ok(())
}

/// `A_u(δ) = {u∗v : c_v ≤ δ < c_{v⁻}}`, stored flat.
#[derive(Clone, Debug)]
pub struct Cutset {
    base: Word,
    delta: Ratio,
    letters: Vec<u32>,
    offsets: Vec<usize>,
    ln_c: Vec<f64>,
    near_ties: usize,
}

impl Cutset {
    pub fn base(&self) -> &Word {
        &self.base
    }

    pub fn delta(&self) -> Ratio {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.ln_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_c.is_empty()
    }

    /// Suffix `v` of member `i`.
    pub fn suffix(&self, i: usize) -> &[u32] {
        &self.letters[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `ln c_v` of member `i`.
    pub fn ln_c(&self, i: usize) -> f64 {
        self.ln_c[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        (0..self.len()).map(move |i| (self.suffix(i), self.ln_c[i]))
    }

    /// Sandwich comparisons that fell inside the guard band and had no exact
    /// fallback.
    pub fn near_ties(&self) -> usize {
        self.near_ties
    }

    pub fn max_suffix_len(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// `(word, log_c)` rows, the word written as the dotted full address `u∗v`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["word", "log_c"])?;
        let base_ln = self.base.ln_c();
        let mut buf = String::new();
        for (v, ln) in self.iter() {
            buf.clear();
            let full: Vec<u32> = self.base.letters().iter().chain(v).copied().collect();
            write_dotted(&mut buf, &full).expect("string write");
            w.write_record([buf.as_str(), &format!("{:.17e}", base_ln + ln)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn exact_product(schedule: &RatioSchedule, start: u64, letters: &[u32]) -> Option<BigRational> {
    let mut acc = BigRational::one();
    for (i, &l) in letters.iter().enumerate() {
        let level = schedule.level_at(start + i as u64 + 1);
        acc *= level.ratios()[l as usize - 1].to_big()?;
    }
    Some(acc)
}

/// Whether `c_v ≤ δ` for the path `v` below `base`, comparing exactly near ties.
fn at_or_below(
    schedule: &RatioSchedule,
    base_end: u64,
    path: &[u32],
    ln_c: f64,
    ln_delta: f64,
    delta_exact: Option<&BigRational>,
    near_ties: &mut usize,
) -> bool {
    let band = TIE_GUARD * ln_delta.abs().max(1.0);
    if (ln_c - ln_delta).abs() > band {
        return ln_c <= ln_delta;
    }
    match (delta_exact, exact_product(schedule, base_end, path)) {
        (Some(d), Some(c)) => c <= *d,
        _ => {
            *near_ties += 1;
            ln_c <= ln_delta
        }
    }
}

fn check_delta(spec: &MoranSpec, delta: Ratio) -> Result<(), SymbolicError> {
    let cs = spec.c_star();
    let inside = match (delta.as_rational(), cs.as_rational()) {
        (Some(d), Some(c)) => d > num_rational::Rational64::zero() && d < c,
        _ => delta.value() > 0.0 && delta.value() < cs.value(),
    };
    if inside {
        Ok(())
    } else {
        Err(SymbolicError::DeltaOutOfRange {
            delta: delta.value(),
            c_star: cs.value(),
        })
    }
}

/// Depth-first enumeration of `A_u(δ)` for `0 < δ < c_*`.
pub fn cutset(spec: &MoranSpec, u: &Word, delta: Ratio, budget: usize) -> Result<Cutset, SymbolicError> {
    check_delta(spec, delta)?;
    let schedule = &spec.schedule;
    let ln_delta = delta.ln();
    let delta_exact = delta.to_big();
    let base_end = u.end();

    let mut letters = Vec::new();
    let mut offsets = vec![0usize];
    let mut ln_cs = Vec::new();
    let mut near_ties = 0usize;

    // One frame per depth: (next letter to try, ln c of the parent).
    let mut path: Vec<u32> = Vec::new();
    let mut stack: Vec<(u32, f64)> = vec![(1, 0.0)];
    while let Some(&mut (ref mut next, parent_ln)) = stack.last_mut() {
        let depth = path.len();
        let level = schedule.level_at(base_end + depth as u64 + 1);
        if *next as usize > level.n() {
            stack.pop();
            path.pop();
            continue;
        }
        let letter = *next;
        *next += 1;
        let ln = parent_ln + level.ln_ratios()[letter as usize - 1];
        path.push(letter);
        if at_or_below(
            schedule,
            base_end,
            &path,
            ln,
            ln_delta,
            delta_exact.as_ref(),
            &mut near_ties,
        ) {
            if ln_cs.len() == budget {
                return Err(SymbolicError::Budget { budget });
            }
            letters.extend_from_slice(&path);
            offsets.push(letters.len());
            ln_cs.push(ln);
            path.pop();
        } else {
            stack.push((1, ln));
        }
    }
    let out = Cutset {
        base: u.clone(),
        delta,
        letters,
        offsets,
        ln_c: ln_cs,
        near_ties,
    };
    // c_v > c_* δ for every member and Σ c_v^d ≤ 1.
    debug_assert!(
        (out.len() as f64) * delta.value().powi(spec.d as i32)
            <= spec.c_star().value().powi(-(spec.d as i32)) * (1.0 + 1e-9),
        "cutset count exceeds c_*^-d δ^-d"
    );
    Ok(out)
}

/// `|Σ_v exp(s ln c_v - Σ_p ln Σ_q c_{p,q}^s) - 1|` over the members of a cutset,
/// where `p` runs over the levels spanned by `v`.
pub fn identity_residual(spec: &MoranSpec, cut: &Cutset, s: f64) -> f64 {
    let schedule = &spec.schedule;
    let base_end = cut.base().end();
    let depth = cut.max_suffix_len();
    let mut prefix = Vec::with_capacity(depth + 1);
    let mut acc = Neumaier::default();
    prefix.push(0.0);
    let mut cursor = schedule.cursor(base_end + 1);
    for _ in 0..depth {
        let idx = cursor.next().expect("cursor never ends");
        acc.add(schedule.palette()[idx].log_moment(s));
        prefix.push(acc.total());
    }
    let mut sum = Neumaier::default();
    for i in 0..cut.len() {
        let len = cut.suffix(i).len();
        sum.add((s * cut.ln_c(i) - prefix[len]).exp());
    }
    (sum.total() - 1.0).abs()
}

/// [`cutset`] followed by [`identity_residual`].
pub fn cutset_identity_residual(
    spec: &MoranSpec,
    u: &Word,
    delta: Ratio,
    s: f64,
    budget: usize,
) -> Result<f64, SymbolicError> {
    let cut = cutset(spec, u, delta, budget)?;
    Ok(identity_residual(spec, &cut, s))
}

/// Counts `#B_p` of `B_p = {j ∈ D_{k_lo+1, k_hi} : 2^{-p-1} < c_j ≤ 2^{-p}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicClasses {
    pub classes: BTreeMap<u64, u64>,
    pub total: u64,
    /// Classes decided by snapping `-log2 c` to a nearby integer without an
    /// exact check.
    pub snapped: usize,
}

impl DyadicClasses {
    pub fn min_class(&self) -> Option<u64> {
        self.classes.keys().next().copied()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "count"])?;
        for (p, c) in &self.classes {
            w.write_record([p.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn pow2_neg(p: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << p as usize)
}

/// Class index `p` with `2^{-p-1} < c ≤ 2^{-p}`.
fn dyadic_index(ln_c: f64, exact: Option<&BigRational>, snapped: &mut usize) -> u64 {
    let x = -ln_c / std::f64::consts::LN_2;
    let guess = x.floor().max(0.0) as u64;
    match exact {
        Some(c) => {
            let lo = guess.saturating_sub(1);
            (lo..=guess + 1)
                .find(|&p| *c <= pow2_neg(p) && *c > pow2_neg(p + 1))
                .expect("one of three neighbouring classes fits")
        }
        None => {
            let nearest = x.round();
            if (x - nearest).abs() < 1e-9 {
                *snapped += 1;
                nearest.max(0.0) as u64
            } else {
                guess
            }
        }
    }
}

/// Dyadic classes of all words on levels `k_lo+1..=k_hi`.
///
/// Words are grouped by how many times each distinct ratio value occurs, so the
/// work is polynomial in the window length; `budget` bounds the word count
/// `Π n_i` whose classes are claimed.
pub fn dyadic_classes(spec: &MoranSpec, k_lo: u64, k_hi: u64, budget: usize) -> Result<DyadicClasses, SymbolicError> {
    if k_lo >= k_hi {
        return Err(SymbolicError::EmptyWindow { k_lo, k_hi });
    }
    let schedule = &spec.schedule;
    let mut distinct: Vec<Ratio> = Vec::new();
    for level in schedule.palette() {
        for r in level.ratios() {
            if !distinct.contains(r) {
                distinct.push(*r);
            }
        }
    }
    let mut total: u64 = 1;
    let mut states: HashMap<Vec<u32>, u64> = HashMap::new();
    states.insert(vec![0; distinct.len()], 1);
    let mut cursor = schedule.cursor(k_lo + 1);
    for _ in k_lo..k_hi {
        let level = &schedule.palette()[cursor.next().expect("cursor never ends")];
        total = total
            .checked_mul(level.n() as u64)
            .filter(|&t| t <= budget as u64)
            .ok_or(SymbolicError::Budget { budget })?;
        let letters: Vec<usize> = level
            .ratios()
            .iter()
            .map(|r| distinct.iter().position(|d| d == r).expect("interned"))
            .collect();
        let mut next: HashMap<Vec<u32>, u64> = HashMap::with_capacity(states.len() * 2);
        for (key, count) in &states {
            for &li in &letters {
                let mut k = key.clone();
                k[li] += 1;
                *next.entry(k).or_insert(0) += count;
            }
        }
        states = next;
    }
    let ln: Vec<f64> = distinct.iter().map(Ratio::ln).collect();
    let big: Option<Vec<BigRational>> = distinct.iter().map(Ratio::to_big).collect();
    let mut classes = BTreeMap::new();
    let mut snapped = 0;
    for (key, count) in states {
        let mut acc = Neumaier::default();
        for (e, l) in key.iter().zip(&ln) {
            acc.add(*e as f64 * l);
        }
        let exact = big.as_ref().map(|b| {
            key.iter().zip(b).fold(BigRational::one(), |a, (e, r)| {
                a * num_traits::pow(r.clone(), *e as usize)
            })
        });
        let p = dyadic_index(acc.total(), exact.as_ref(), &mut snapped);
        *classes.entry(p).or_insert(0) += count;
    }
    Ok(DyadicClasses {
        classes,
        total,
        snapped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub q: u64,
    pub count: u64,
    /// `ln(#B_q 2^{-qs}) - ln(2^{-εq}(1 - 2^{-ε}))`, nonnegative.
    pub margin: f64,
}

/// Whether `2^{-εq}(1 - 2^{-ε}) ≤ #B_q (2^{-q})^s`, in log space; returns the margin.
pub fn witness_margin(q: u64, count: u64, s: f64, eps: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let lhs = -eps * q as f64 * ln2 + (-(-eps * ln2).exp_m1()).ln();
    let rhs = (count as f64).ln() - q as f64 * s * ln2;
    rhs - lhs
}

/// Smallest nonempty class `q` with `2^{-εq}(1 - 2^{-ε}) ≤ #B_q 2^{-qs}`.
///
/// The precondition `s < s_{k_lo,k_hi}` (checked with tolerance `tol`) makes
/// `Σ_q #B_q 2^{-qs} > 1 = Σ_q 2^{-εq}(1 - 2^{-ε})`, so a witness exists; `None`
/// would contradict it.
pub fn lower_bound_witness(
    spec: &MoranSpec,
    k_lo: u64,
    k_hi: u64,
    s: f64,
    eps: f64,
    tol: f64,
    budget: usize,
) -> Result<Option<Witness>, SymbolicError> {
    if k_lo >= k_hi {
        return Err(SymbolicError::EmptyWindow { k_lo, k_hi });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SymbolicError::BadEpsilon(eps));
    }
    let s_window = solve_skk(spec, k_lo, k_hi, tol)?;
    if !(s < s_window - tol) {
        return Err(SymbolicError::ExponentTooLarge { s, s_window });
    }
    let classes = dyadic_classes(spec, k_lo, k_hi, budget)?;
    Ok(classes.classes.iter().find_map(|(&q, &count)| {
        let margin = witness_margin(q, count, s, eps);
        (margin >= 0.0).then_some(Witness { q, count, margin })
    }))
}
