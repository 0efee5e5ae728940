//! Piecewise-constant scale functions `h(r)`, the quantity
//! `ψ(R, ρ) = |h(R) log R − h(ρR) log(ρR)| / |log ρ|` and the Assouad
//! dimension `lim_{ρ→0} sup_R ψ(R, ρ)`.
//!
//! Scales are handled as `t = −ln r`, so breakpoints `r_k` deep in a schedule
//! never underflow. A function with breakpoints `0 < t_1 < t_2 < … < t_K` takes
//! the value `h_k` for `t ∈ [t_{k−1}, t_k)`, i.e. `r ∈ (r_k, r_{k−1}]`, with
//! `t_0 = 0`. Past `t_K` the [`TailRule`] applies.
//!
//! In these coordinates `Φ(t) = −h(r) ln r = h(e^{−t}) t` is piecewise linear in
//! `t` with jumps at breakpoints, and
//! `ψ = |Φ(T + λ) − Φ(T)| / λ` for `T = −ln R`, `λ = −ln ρ`. The supremum over
//! `T` of a piecewise-linear function is taken at the ends of its linear pieces,
//! so [`assouad_from_scale`] enumerates `T ∈ {t_j, t_j − λ}` exactly, each at
//! its value and its left limit.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::numeric::Neumaier;
use crate::spec_model::{CantorLikeSpec, RatioSchedule};

#[derive(Debug, thiserror::Error)]
pub enum ScaleError {
    #[error("invalid scale function: {0}")]
    BadPieces(String),
    #[error("scale r = e^-{neg_ln_r} lies below the truncation floor r = e^-{floor}")]
    OutOfRange { neg_ln_r: f64, floor: f64 },
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("level {level} has unequal ratios; scale functions need n_k copies of one ratio")]
    NonUniformLevel { level: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// What `h` does below its last breakpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TailRule {
    /// Keep the last value; queries there are flagged.
    #[default]
    ExtendLast,
    /// Queries below the last breakpoint are errors.
    Strict,
}

impl fmt::Display for TailRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailRule::ExtendLast => "extend-last",
            TailRule::Strict => "strict",
        })
    }
}

impl FromStr for TailRule {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "extend-last" => Ok(TailRule::ExtendLast),
            "strict" => Ok(TailRule::Strict),
            other => Err(ScaleError::BadArgument(format!("unknown tail rule {other:?}"))),
        }
    }
}

/// A value of `h` or `Φ` together with whether the tail rule supplied it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub in_tail: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleFunction {
    /// `t_k = −ln r_k`, strictly increasing and positive.
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    tail: TailRule,
}

impl ScaleFunction {
    /// From `t_k = −ln r_k` and the values `h_k` on `t ∈ [t_{k−1}, t_k)`.
    pub fn from_log_pieces(breakpoints: Vec<f64>, values: Vec<f64>, tail: TailRule) -> Result<Self, ScaleError> {
        if breakpoints.is_empty() {
            return Err(ScaleError::BadPieces("needs at least one piece".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(ScaleError::BadPieces(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        let mut prev = 0.0;
        for (k, &t) in breakpoints.iter().enumerate() {
            if !(t.is_finite() && t > prev) {
                return Err(ScaleError::BadPieces(format!(
                    "breakpoint {} has -ln r = {t}, not above the previous {prev}",
                    k + 1
                )));
            }
            prev = t;
        }
        if let Some(k) = values.iter().position(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(ScaleError::BadPieces(format!(
                "value h_{} = {} must be positive and finite",
                k + 1,
                values[k]
            )));
        }
        Ok(Self {
            breakpoints,
            values,
            tail,
        })
    }

    /// From breakpoints `1 > r_1 > r_2 > … > 0` and values `h_k` on `(r_k, r_{k−1}]`.
    pub fn from_pieces(breakpoints: &[f64], values: Vec<f64>, tail: TailRule) -> Result<Self, ScaleError> {
        if let Some(&r) = breakpoints.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(ScaleError::BadPieces(format!("breakpoint r = {r} must lie in (0, 1)")));
        }
        Self::from_log_pieces(breakpoints.iter().map(|r| -r.ln()).collect(), values, tail)
    }

    /// `h ≡ s` at every scale.
    pub fn constant(s: f64) -> Result<Self, ScaleError> {
        Self::from_log_pieces(vec![1.0], vec![s], TailRule::ExtendLast)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `t_k = −ln r_k` for `k = 1..=K`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_rule(&self) -> TailRule {
        self.tail
    }

    /// `−ln` of the smallest breakpoint.
    pub fn floor(&self) -> f64 {
        *self.breakpoints.last().expect("at least one piece")
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the piece holding `t`, or `None` in the tail. With `left`, the
    /// piece is the one `t` is approached from below in.
    fn piece(&self, t: f64, left: bool) -> Option<usize> {
        let k = if left {
            self.breakpoints.partition_point(|&b| b < t)
        } else {
            self.breakpoints.partition_point(|&b| b <= t)
        };
        (k < self.len()).then_some(k)
    }

    fn h_at(&self, t: f64, left: bool) -> Result<Evaluated, ScaleError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(ScaleError::BadArgument(format!("scale r = e^-{t} must lie in (0, 1]")));
        }
        match self.piece(t, left) {
            Some(k) => Ok(Evaluated {
                value: self.values[k],
                in_tail: false,
            }),
            None => match self.tail {
                TailRule::ExtendLast => Ok(Evaluated {
                    value: *self.values.last().expect("at least one piece"),
                    in_tail: true,
                }),
                TailRule::Strict => Err(ScaleError::OutOfRange {
                    neg_ln_r: t,
                    floor: self.floor(),
                }),
            },
        }
    }

    /// `h(r)` at `r = e^{−t}`.
    pub fn eval_ln(&self, t: f64) -> Result<Evaluated, ScaleError> {
        self.h_at(t, false)
    }

    /// `h(r)` for `r ∈ (0, 1]`.
    pub fn eval(&self, r: f64) -> Result<Evaluated, ScaleError> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(ScaleError::BadArgument(format!("scale r = {r} must lie in (0, 1]")));
        }
        self.eval_ln(-r.ln())
    }

    /// `Φ(t) = h(e^{−t}) t`, or its limit from below with `left`.
    fn phi(&self, t: f64, left: bool) -> Result<Evaluated, ScaleError> {
        let h = self.h_at(t, left)?;
        Ok(Evaluated {
            value: h.value * t,
            in_tail: h.in_tail,
        })
    }

    /// Min and max of `h_k` over `k ∈ [⌈f·K⌉, K]`, with that window.
    pub fn tail_extrema(&self, fraction: f64) -> (f64, f64, (usize, usize)) {
        let n = self.len();
        let lo = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        let tail = &self.values[lo - 1..];
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max, (lo, n))
    }

    /// Header comment, then `k,r,neg_ln_r,h` rows. `r` is informational (it
    /// underflows deep in a schedule); reading uses `neg_ln_r`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ScaleError> {
        writeln!(out, "# pieces={} tail={}", self.len(), self.tail)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "r", "neg_ln_r", "h"])?;
        for (k, (t, h)) in self.breakpoints.iter().zip(&self.values).enumerate() {
            w.write_record([
                (k + 1).to_string(),
                (-t).exp().to_string(),
                t.to_string(),
                h.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, ScaleError> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| ScaleError::BadPieces("missing `# pieces=... tail=...` header line".into()))?;
        let mut tail = TailRule::default();
        for field in header.split_whitespace() {
            if let Some(rule) = field.strip_prefix("tail=") {
                tail = rule.parse()?;
            }
        }
        #[derive(serde::Deserialize)]
        struct Row {
            #[allow(dead_code)]
            k: u64,
            #[allow(dead_code)]
            r: f64,
            neg_ln_r: f64,
            h: f64,
        }
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (i, row) in csv::Reader::from_reader(input).deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| ScaleError::BadPieces(format!("row {}: {e}", i + 1)))?;
            breakpoints.push(row.neg_ln_r);
            values.push(row.h);
        }
        Self::from_log_pieces(breakpoints, values, tail)
    }
}

/// `h_k = ln(n_1⋯n_k) / (−ln c_1⋯c_k)` at `r_k = c_1⋯c_k`, for `k = 1..=depth`.
///
/// Sums accumulate level by level in the same order as the pre-dimension
/// trace, so `h_k` equals that trace's `s_{0,k}` bit for bit.
pub fn scale_from_schedule(schedule: &RatioSchedule, depth: u64) -> Result<ScaleFunction, ScaleError> {
    if depth == 0 {
        return Err(ScaleError::BadArgument("depth must be at least 1".into()));
    }
    let palette = schedule.palette();
    if let Some(idx) = palette.iter().position(|l| !l.is_uniform()) {
        let level = schedule.first_occurrence(idx, u64::MAX).unwrap_or(0);
        return Err(ScaleError::NonUniformLevel { level });
    }
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    let mut breakpoints = Vec::with_capacity(depth as usize);
    let mut values = Vec::with_capacity(depth as usize);
    for idx in schedule.cursor(1).take(depth as usize) {
        num.add((palette[idx].n() as f64).ln());
        den.add(-palette[idx].ln_ratios()[0]);
        breakpoints.push(den.total());
        values.push(num.total() / den.total());
    }
    ScaleFunction::from_log_pieces(breakpoints, values, TailRule::ExtendLast)
}

/// The scale function of a Cantor-like set; the perturbation does not enter.
pub fn scale_from_cantor(spec: &CantorLikeSpec, depth: u64) -> Result<ScaleFunction, ScaleError> {
    scale_from_schedule(&spec.schedule, depth)
}

/// `ψ` together with whether the tail rule entered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiValue {
    pub psi: f64,
    pub in_tail: bool,
}

fn psi_at(h: &ScaleFunction, big_t: f64, lambda: f64, left: bool) -> Result<PsiValue, ScaleError> {
    let a = h.phi(big_t, left)?;
    let b = h.phi(big_t + lambda, left)?;
    Ok(PsiValue {
        psi: (b.value - a.value).abs() / lambda,
        in_tail: a.in_tail || b.in_tail,
    })
}

/// `ψ(R, ρ)` with `R = e^{−T}`, `ρ = e^{−λ}`.
pub fn psi_ln(h: &ScaleFunction, big_t: f64, lambda: f64) -> Result<PsiValue, ScaleError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ScaleError::BadArgument(format!("ρ = e^-{lambda} must lie in (0, 1)")));
    }
    psi_at(h, big_t, lambda, false)
}

pub fn psi(h: &ScaleFunction, big_r: f64, rho: f64) -> Result<PsiValue, ScaleError> {
    check_rho(rho)?;
    if !(big_r > 0.0 && big_r <= 1.0) {
        return Err(ScaleError::BadArgument(format!("R = {big_r} must lie in (0, 1]")));
    }
    psi_ln(h, -big_r.ln(), -rho.ln())
}

fn check_rho(rho: f64) -> Result<(), ScaleError> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(ScaleError::BadArgument(format!("ρ = {rho} must lie in (0, 1)")))
    }
}

/// The range of `R` the supremum runs over.
#[derive(Clone, Debug, PartialEq)]
pub enum RGrid {
    /// Every `R ≤ 1` with `ρR` above the last breakpoint.
    Represented,
    /// `[min, max]` of these `R`, with the points themselves as extra candidates.
    Points(Vec<f64>),
}

/// `sup_R ψ(R, ρ)` for one `ρ`, with the `R` attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleRow {
    /// `−ln ρ`.
    pub lambda: f64,
    /// `−ln R` at the supremum; a left limit there when `from_above` is set.
    pub big_t: f64,
    /// The supremum is approached as `R` decreases to `e^{−big_t}`.
    pub from_above: bool,
    pub psi: f64,
    pub in_tail: bool,
}

impl ScaleRow {
    pub fn rho(&self) -> f64 {
        (-self.lambda).exp()
    }

    pub fn big_r(&self) -> f64 {
        (-self.big_t).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleEstimate {
    /// `sup_R ψ` at the smallest `ρ`.
    pub estimate: f64,
    /// One row per `ρ`, in grid order.
    pub rows: Vec<ScaleRow>,
}

impl ScaleEstimate {
    pub fn touched_tail(&self) -> bool {
        self.rows.iter().any(|r| r.in_tail)
    }
}

/// Exact `sup_R ψ(R, e^{−λ})` over the range chosen by `r_grid`.
pub fn sup_psi(h: &ScaleFunction, lambda: f64, r_grid: &RGrid) -> Result<ScaleRow, ScaleError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ScaleError::BadArgument(format!("ρ = e^-{lambda} must lie in (0, 1)")));
    }
    // Half-open [lo, hi) for the represented range, closed [lo, hi] for grids.
    let (lo, hi, closed, extra) = match r_grid {
        RGrid::Represented => {
            let hi = h.floor() - lambda;
            if !(hi > 0.0) {
                return Err(ScaleError::OutOfRange {
                    neg_ln_r: lambda,
                    floor: h.floor(),
                });
            }
            (0.0, hi, false, Vec::new())
        }
        RGrid::Points(points) => {
            if points.is_empty() {
                return Err(ScaleError::BadArgument("R grid is empty".into()));
            }
            if let Some(&r) = points.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
                return Err(ScaleError::BadArgument(format!("R = {r} must lie in (0, 1]")));
            }
            let ts: Vec<f64> = points.iter().map(|r| -r.ln()).collect();
            let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi, true, ts)
        }
    };
    let mut candidates = extra;
    candidates.push(lo);
    candidates.push(hi);
    let bp = h.breakpoints();
    let in_range = |t: f64| t >= lo && t <= hi;
    candidates.extend(bp.iter().copied().filter(|&t| in_range(t)));
    candidates.extend(bp.iter().map(|&t| t - lambda).filter(|&t| in_range(t)));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Between consecutive candidates both pieces are fixed, so ψ is |affine| and
    // peaks at an end. Pieces are read at the midpoint of each gap: recomputing
    // them at an end from T + λ can land an ulp on the wrong side of a breakpoint.
    let mut best: Option<ScaleRow> = None;
    let mut consider = |t: f64, left: bool, v: PsiValue| {
        if best.is_none_or(|b| v.psi > b.psi) {
            best = Some(ScaleRow {
                lambda,
                big_t: t,
                from_above: left,
                psi: v.psi,
                in_tail: v.in_tail,
            });
        }
    };
    for w in candidates.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let a = h.h_at(mid, false)?;
        let b = h.h_at(mid + lambda, false)?;
        let affine = |t: f64| PsiValue {
            psi: (b.value * (t + lambda) - a.value * t).abs() / lambda,
            in_tail: a.in_tail || b.in_tail,
        };
        consider(w[0], false, affine(w[0]));
        consider(w[1], true, affine(w[1]));
    }
    if closed || candidates.len() == 1 {
        consider(hi, false, psi_at(h, hi, lambda, false)?);
    }
    best.ok_or_else(|| ScaleError::BadArgument("empty R range".into()))
}

/// `sup_R ψ(R, ρ)` for every `ρ = e^{−λ}` in `lambdas`; the estimate is the row
/// with the largest `λ`.
pub fn assouad_from_scale_ln(h: &ScaleFunction, lambdas: &[f64], r_grid: &RGrid) -> Result<ScaleEstimate, ScaleError> {
    if lambdas.is_empty() {
        return Err(ScaleError::BadArgument("ρ grid is empty".into()));
    }
    let rows = lambdas
        .par_iter()
        .map(|&l| sup_psi(h, l, r_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let estimate = rows
        .iter()
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .map(|r| r.psi)
        .expect("non-empty");
    Ok(ScaleEstimate { estimate, rows })
}

pub fn assouad_from_scale(h: &ScaleFunction, rho_grid: &[f64], r_grid: &RGrid) -> Result<ScaleEstimate, ScaleError> {
    for &rho in rho_grid {
        check_rho(rho)?;
    }
    let lambdas: Vec<f64> = rho_grid.iter().map(|r| -r.ln()).collect();
    assouad_from_scale_ln(h, &lambdas, r_grid)
}

/// `λ_j = −j ln c_max` for `j = 1..=m_max`: the `ρ` spanning `j` levels of the
/// largest ratio in the schedule.
pub fn matched_lambdas(schedule: &RatioSchedule, m_max: u64) -> Vec<f64> {
    let step = -schedule.max_ratio().ln();
    (1..=m_max).map(|j| j as f64 * step).collect()
}

/// Write `ψ` rows as `rho,R,neg_ln_rho,neg_ln_R,psi,in_tail`.
pub fn write_psi_csv<W: Write>(rows: &[ScaleRow], out: W) -> Result<(), ScaleError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rho", "R", "neg_ln_rho", "neg_ln_R", "psi", "in_tail"])?;
    for r in rows {
        w.write_record([
            r.rho().to_string(),
            r.big_r().to_string(),
            r.lambda.to_string(),
            r.big_t.to_string(),
            r.psi.to_string(),
            r.in_tail.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `ψ` on the product of two grids, one row per pair.
pub fn psi_table(h: &ScaleFunction, rho_grid: &[f64], r_points: &[f64]) -> Result<Vec<ScaleRow>, ScaleError> {
    let mut rows = Vec::with_capacity(rho_grid.len() * r_points.len());
    for &rho in rho_grid {
        for &big_r in r_points {
            let v = psi(h, big_r, rho)?;
            rows.push(ScaleRow {
                lambda: -rho.ln(),
                big_t: -big_r.ln(),
                from_above: false,
                psi: v.psi,
                in_tail: v.in_tail,
            });
        }
    }
    Ok(rows)
}

/// Outcome of testing `|h(r) − g(r)| ≤ C / |log r|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equivalence {
    pub holds: bool,
    /// `max (|h − g| − C/|log r|)` over the checked scales.
    pub max_violation: f64,
    /// `−ln r` where the maximum was found.
    pub worst_t: f64,
    pub checked: usize,
}

/// Whether `|h − g| ≤ C/|log r|` at every grid point and at every breakpoint of
/// either function (value and limit from above) inside the common range. A
/// `Strict` function's range ends at its last breakpoint; `r = 1` is skipped.
pub fn equivalence_check(h: &ScaleFunction, g: &ScaleFunction, c: f64, r_grid: &[f64]) -> Equivalence {
    let limit = |f: &ScaleFunction| match f.tail {
        TailRule::ExtendLast => f64::INFINITY,
        TailRule::Strict => f.floor(),
    };
    let top = limit(h).min(limit(g));
    let mut points: Vec<(f64, bool)> = r_grid
        .iter()
        .filter(|r| **r > 0.0 && **r < 1.0)
        .map(|r| (-r.ln(), false))
        .collect();
    for &t in h.breakpoints().iter().chain(g.breakpoints()) {
        points.push((t, false));
        points.push((t, true));
    }
    let mut out = Equivalence {
        holds: true,
        max_violation: f64::NEG_INFINITY,
        worst_t: f64::NAN,
        checked: 0,
    };
    for (t, left) in points {
        let inside = if left { t <= top } else { t < top };
        if !(t > 0.0) || !inside {
            continue;
        }
        let (Ok(a), Ok(b)) = (h.h_at(t, left), g.h_at(t, left)) else {
            continue;
        };
        let gap = (a.value - b.value).abs();
        let violation = gap - c / t;
        out.checked += 1;
        if violation > out.max_violation {
            out.max_violation = violation;
            out.worst_t = t;
        }
        // Rounding slack on the scaled form |h − g|·t ≤ C.
        if gap * t > c + 1e-12 * (1.0 + c) {
            out.holds = false;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_model::{Level, Ratio};

    fn cantor(schedule: RatioSchedule) -> CantorLikeSpec {
        CantorLikeSpec::new(schedule, crate::spec_model::Perturbation::none())
    }

    fn alternating() -> RatioSchedule {
        RatioSchedule::alternating(
            Level::uniform(2, Ratio::exact(1, 4)),
            Level::uniform(2, Ratio::exact(1, 8)),
        )
    }

    #[test]
    fn middle_third_is_constant() {
        let h = scale_from_cantor(&cantor(RatioSchedule::uniform(2, Ratio::exact(1, 3))), 20).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        assert!(h.values().iter().all(|v| (v - s).abs() < 1e-15));
        for (k, t) in h.breakpoints().iter().enumerate() {
            assert!((t - (k + 1) as f64 * 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_second_value() {
        let h = scale_from_cantor(&cantor(alternating()), 6).unwrap();
        assert!((h.values()[1] - 0.4).abs() < 1e-15);
        assert!((h.values()[0] - 0.5).abs() < 1e-15);
        assert!((h.values()[2] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn pieces_are_right_closed_in_r() {
        let h = ScaleFunction::from_pieces(&[0.5, 0.25], vec![1.0, 0.5], TailRule::Strict).unwrap();
        assert_eq!(h.eval(1.0).unwrap().value, 1.0);
        assert_eq!(h.eval(0.51).unwrap().value, 1.0);
        assert_eq!(h.eval(0.5).unwrap().value, 0.5);
        assert_eq!(h.eval(0.4).unwrap().value, 0.5);
        assert_eq!(h.eval(0.26).unwrap().value, 0.5);
        assert!(matches!(h.eval(0.25), Err(ScaleError::OutOfRange { .. })));
        let extended = ScaleFunction::from_pieces(&[0.5, 0.25], vec![1.0, 0.5], TailRule::ExtendLast).unwrap();
        assert_eq!(
            extended.eval(0.01).unwrap(),
            Evaluated {
                value: 0.5,
                in_tail: true
            }
        );
    }

    #[test]
    fn constant_psi() {
        let h = ScaleFunction::constant(0.63).unwrap();
        for (r, rho) in [(1.0, 0.5), (0.1, 1e-3), (1e-5, 0.9)] {
            assert!((psi(&h, r, rho).unwrap().psi - 0.63).abs() < 1e-12);
        }
        let est = assouad_from_scale(&h, &[0.5, 0.01], &RGrid::Points(vec![1.0, 1e-3])).unwrap();
        assert!((est.estimate - 0.63).abs() < 1e-12);
    }

    #[test]
    fn cancellation_gives_zero() {
        let l2 = 2f64.ln();
        let h = ScaleFunction::from_log_pieces(vec![5.0 * l2, 9.0 * l2], vec![0.5, 0.25], TailRule::Strict).unwrap();
        let v = psi(&h, 2f64.powi(-4), 2f64.powi(-4)).unwrap();
        assert!(v.psi.abs() < 1e-12 && !v.in_tail);
    }

    #[test]
    fn psi_rejects_floor() {
        let h = ScaleFunction::from_pieces(&[0.5], vec![1.0], TailRule::Strict).unwrap();
        assert!(matches!(psi(&h, 0.9, 0.5), Err(ScaleError::OutOfRange { .. })));
        assert!(matches!(psi(&h, 0.9, 1.0), Err(ScaleError::BadArgument(_))));
    }

    #[test]
    fn sup_matches_dense_scan() {
        let h = scale_from_cantor(&cantor(alternating()), 40).unwrap();
        let lambda = 6.0 * 4f64.ln();
        let row = sup_psi(&h, lambda, &RGrid::Represented).unwrap();
        let hi = h.floor() - lambda;
        let scan = (0..200_000)
            .map(|i| psi_ln(&h, hi * i as f64 / 200_000.0, lambda).unwrap().psi)
            .fold(0.0, f64::max);
        assert!(row.psi >= scan - 1e-12);
        assert!(row.psi - scan < 1e-3);
    }

    #[test]
    fn equivalence_examples() {
        let h = scale_from_cantor(&cantor(alternating()), 30).unwrap();
        let grid: Vec<f64> = (1..50).map(|i| 0.9f64.powi(i)).collect();
        assert!(equivalence_check(&h, &h, 0.0, &grid).holds);
        let bumped: Vec<f64> = h
            .values()
            .iter()
            .zip(h.breakpoints())
            .map(|(v, t)| v + 0.5 / t)
            .collect();
        let g = ScaleFunction::from_log_pieces(h.breakpoints().to_vec(), bumped, TailRule::ExtendLast).unwrap();
        assert!(equivalence_check(&h, &g, 0.5, &grid).holds);
        assert!(!equivalence_check(&h, &g, 0.4, &grid).holds);
    }

    #[test]
    fn constant_shift_is_not_equivalent() {
        let c = 1.0f64;
        let h = ScaleFunction::constant(0.5).unwrap();
        let g = ScaleFunction::constant(0.51).unwrap();
        let grid = [(-200.0 * c).exp()];
        let eq = equivalence_check(&h, &g, c, &grid);
        assert!(!eq.holds && eq.max_violation > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let h = scale_from_cantor(&cantor(alternating()), 12).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(ScaleFunction::read_csv(&buf[..]).unwrap(), h);
    }

    #[test]
    fn tail_is_flagged() {
        let h = ScaleFunction::constant(0.3).unwrap();
        let est = assouad_from_scale(&h, &[0.1], &RGrid::Points(vec![0.5])).unwrap();
        assert!(est.touched_tail());
    }
}
