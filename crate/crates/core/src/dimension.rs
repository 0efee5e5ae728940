//! The Moran equation `Δ_{k,k'}(s) = 1` and the dimension estimates built on it.
//!
//! All products run in log space: `ln Δ_{k,k'}(s) = Σ_{i=k+1}^{k'} ln Σ_j c_{i,j}^s`.
//! Because a schedule uses finitely many distinct levels, a window is fully
//! described by how often each palette entry occurs in it, so evaluating
//! `ln Δ` costs one log-moment per palette entry.
//!
//! `s_*` and `s^*` (liminf and limsup of `s_{0,m}`) are estimated by the min and
//! max over a tail window `[⌈f·M⌉, M]`. The Assouad value `s**` is the running
//! infimum of `θ_m = sup_k s_{k,k+m}`, an upper estimate whose slack is reported
//! as `convergence_gap`.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;

use crate::numeric::{bisect_decreasing, Neumaier};
use crate::spec_model::{validate_moran, CantorLikeSpec, MoranSpec, Presentation, RatioSchedule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimensionError {
    #[error("spec is not admissible: {0}")]
    InvalidSpec(String),
    #[error("empty window: need k < k' (got k = {k}, k' = {k_prime})")]
    EmptyWindow { k: u64, k_prime: u64 },
    #[error("no sign change of ln Δ on [0, d] for window ({k}, {k_prime}]")]
    Bracket { k: u64, k_prime: u64 },
    #[error("levels must have equal ratios; level {level} does not")]
    NonUniformLevel { level: u64 },
    #[error("bad option: {0}")]
    BadOption(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionOptions {
    /// Largest window length `m` for `θ_m`.
    pub m_max: u64,
    /// Largest window start scanned when no exact finite criterion exists.
    pub k_max: u64,
    /// Largest `m` for `s_{0,m}`.
    pub horizon: u64,
    /// Bisection tolerance on `s`.
    pub tol: f64,
    /// The tail window for `s_*`, `s^*` starts at `⌈tail_fraction · horizon⌉`.
    pub tail_fraction: f64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self {
            m_max: 64,
            k_max: 10_000,
            horizon: 40_000,
            tol: 1e-12,
            tail_fraction: 0.125,
        }
    }
}

impl DimensionOptions {
    fn check(&self) -> Result<(), DimensionError> {
        if self.m_max == 0 || self.horizon == 0 {
            return Err(DimensionError::BadOption("m_max and horizon must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(DimensionError::BadOption(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(DimensionError::BadOption(format!(
                "tail_fraction = {} must lie in (0, 1]",
                self.tail_fraction
            )));
        }
        Ok(())
    }
}

/// How window roots are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Bisection on `ln Δ(s)`.
    Bisection,
    /// `Σ ln n_i / Σ (-ln c_i)`, valid when every level has equal ratios.
    LogRatio,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bisection => "bisection",
            Method::LogRatio => "log-ratio",
        })
    }
}

/// Counts of each palette entry in a window of levels.
type Composition = Box<[u32]>;

fn check_window(k: u64, k_prime: u64) -> Result<(), DimensionError> {
    if k >= k_prime {
        Err(DimensionError::EmptyWindow { k, k_prime })
    } else {
        Ok(())
    }
}

/// Palette counts of levels `k+1..=k'`.
pub fn window_counts(schedule: &RatioSchedule, k: u64, k_prime: u64) -> Vec<u64> {
    let mut counts = vec![0u64; schedule.palette().len()];
    let mut cursor = schedule.cursor(k + 1);
    let mut left = k_prime.saturating_sub(k);
    while left > 0 {
        let (idx, run) = cursor.peek_run();
        let take = run.min(left);
        counts[idx] += take;
        cursor.advance(take);
        left -= take;
    }
    counts
}

/// Per-palette log moments `ln Σ_j c_j^s`.
fn log_moments(schedule: &RatioSchedule, s: f64) -> Vec<f64> {
    schedule.palette().iter().map(|l| l.log_moment(s)).collect()
}

fn dot<T: Copy + Into<f64>>(counts: &[T], values: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    for (c, v) in counts.iter().zip(values) {
        let c: f64 = (*c).into();
        if c != 0.0 {
            acc.add(c * v);
        }
    }
    acc.total()
}

/// `ln Δ_{k,k'}(s)`.
pub fn log_delta(spec: &MoranSpec, k: u64, k_prime: u64, s: f64) -> Result<f64, DimensionError> {
    check_window(k, k_prime)?;
    let counts = window_counts(&spec.schedule, k, k_prime);
    let counts: Vec<f64> = counts.into_iter().map(|c| c as f64).collect();
    Ok(dot(&counts, &log_moments(&spec.schedule, s)))
}

/// Root of `s ↦ max_w Σ_p w_p L_p(s)` on `[0, d]`; the maximum over windows of
/// their individual roots.
fn solve_max<T: Copy + Into<f64> + Sync>(schedule: &RatioSchedule, d: u32, windows: &[&[T]], tol: f64) -> Option<f64> {
    let f = |s: f64| {
        let moments = log_moments(schedule, s);
        windows
            .iter()
            .map(|w| dot(w, &moments))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let hi = d as f64;
    match bisect_decreasing(f, 0.0, hi, tol) {
        Some(s) => Some(s),
        // Σ c^d = 1 can leave ln Δ(d) a rounding error above zero.
        None if f(0.0) > 0.0 && f(hi) <= 1e-12 * (1.0 + f(0.0)) => Some(hi),
        None => None,
    }
}

/// `s_{k,k'}`, the root of `Δ_{k,k'}(s) = 1`, to within `tol`.
pub fn solve_skk(spec: &MoranSpec, k: u64, k_prime: u64, tol: f64) -> Result<f64, DimensionError> {
    check_window(k, k_prime)?;
    if !(tol > 0.0) {
        return Err(DimensionError::BadOption(format!("tol = {tol} must be positive")));
    }
    let counts = window_counts(&spec.schedule, k, k_prime);
    solve_max(&spec.schedule, spec.d, &[&counts_f64(&counts)], tol).ok_or(DimensionError::Bracket { k, k_prime })
}

fn counts_f64(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64).collect()
}

/// `Σ ln n / Σ (-ln c)` for a window of equal-ratio levels.
fn log_ratio(schedule: &RatioSchedule, counts: &[impl Copy + Into<f64>]) -> f64 {
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for (c, level) in counts.iter().zip(schedule.palette()) {
        let c: f64 = (*c).into();
        if c != 0.0 {
            num.add(c * (level.n() as f64).ln());
            den.add(-c * level.ln_ratios()[0]);
        }
    }
    num.total() / den.total()
}

fn require_uniform_levels(schedule: &RatioSchedule) -> Result<(), DimensionError> {
    for (idx, level) in schedule.palette().iter().enumerate() {
        if !level.is_uniform() {
            let level = schedule.first_occurrence(idx, u64::MAX).unwrap_or(0);
            return Err(DimensionError::NonUniformLevel { level });
        }
    }
    Ok(())
}

/// `s_{0,m}` over `m = 1..=horizon` and its tail extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct PreDimensions {
    pub s_lower: f64,
    pub s_upper: f64,
    /// Inclusive range of `m` the extremes were taken over.
    pub tail: (u64, u64),
    /// `(m, s_{0,m})` for every `m` up to the horizon.
    pub trace: Vec<(u64, f64)>,
    pub method: Method,
}

pub fn tail_start(horizon: u64, fraction: f64) -> u64 {
    ((horizon as f64 * fraction).ceil() as u64).clamp(1, horizon)
}

/// Min and max of `s_{0,m}` over the tail window; each `s_{0,m+1}` extends the
/// running window composition by one level.
pub fn pre_dimensions(
    spec: &MoranSpec,
    horizon: u64,
    tol: f64,
    tail_fraction: f64,
    method: Method,
) -> Result<PreDimensions, DimensionError> {
    let opts = DimensionOptions {
        horizon,
        tol,
        tail_fraction,
        ..DimensionOptions::default()
    };
    opts.check()?;
    if method == Method::LogRatio {
        require_uniform_levels(&spec.schedule)?;
    }
    let schedule = &spec.schedule;
    let palette = schedule.palette();
    let mut counts = vec![0f64; palette.len()];
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    let mut trace = Vec::with_capacity(horizon as usize);
    let mut cursor = schedule.cursor(1);
    for m in 1..=horizon {
        let idx = cursor.next().expect("cursor never ends");
        let s = match method {
            Method::LogRatio => {
                num.add((palette[idx].n() as f64).ln());
                den.add(-palette[idx].ln_ratios()[0]);
                num.total() / den.total()
            }
            Method::Bisection => {
                counts[idx] += 1.0;
                solve_max(schedule, spec.d, &[&counts[..]], tol).ok_or(DimensionError::Bracket { k: 0, k_prime: m })?
            }
        };
        trace.push((m, s));
    }
    let lo = tail_start(horizon, tail_fraction);
    let tail = &trace[(lo - 1) as usize..];
    let s_lower = tail.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let s_upper = tail.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(PreDimensions {
        s_lower,
        s_upper,
        tail: (lo, horizon),
        trace,
        method,
    })
}

/// `θ_m = sup_k s_{k,k+m}` with how the supremum was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub m: u64,
    pub value: f64,
    /// Whether the scanned starts provably attain the supremum over all `k`.
    pub exact: bool,
    /// Window starts scanned: `k = 0..=last_start`.
    pub last_start: u64,
    /// Number of distinct window compositions seen.
    pub distinct_windows: usize,
}

/// Palette indices of levels `1..=len`, shared by all window lengths.
struct Tape {
    ids: Vec<u32>,
}

impl Tape {
    fn new(schedule: &RatioSchedule, len: u64) -> Self {
        Self {
            ids: schedule.cursor(1).take(len as usize).map(|i| i as u32).collect(),
        }
    }
}

/// Range of window starts over which `sup_k` is taken, and whether it is exact.
fn start_range(schedule: &RatioSchedule, k_max: u64) -> (u64, bool) {
    match schedule.exact_start_count() {
        Some(count) => (count.saturating_sub(1), true),
        None => (k_max, false),
    }
}

/// Distinct compositions of the windows `(k, k+m]` for `k = 0..=last_start`.
fn distinct_windows(tape: &Tape, palette_len: usize, m: u64, last_start: u64) -> Vec<Composition> {
    let m = m as usize;
    let mut counts = vec![0u32; palette_len];
    for &id in &tape.ids[..m] {
        counts[id as usize] += 1;
    }
    let mut seen: HashSet<Composition> = HashSet::new();
    seen.insert(counts.clone().into_boxed_slice());
    for k in 1..=last_start as usize {
        let leave = tape.ids[k - 1];
        let enter = tape.ids[k + m - 1];
        if leave != enter {
            counts[leave as usize] -= 1;
            counts[enter as usize] += 1;
            if !seen.contains(counts.as_slice()) {
                seen.insert(counts.clone().into_boxed_slice());
            }
        }
    }
    let mut out: Vec<Composition> = seen.into_iter().collect();
    out.sort();
    out
}

fn theta_on_tape(
    spec: &MoranSpec,
    tape: &Tape,
    m: u64,
    last_start: u64,
    exact: bool,
    tol: f64,
    method: Method,
) -> Result<ThetaValue, DimensionError> {
    let windows = distinct_windows(tape, spec.schedule.palette().len(), m, last_start);
    let value = match method {
        Method::LogRatio => windows
            .iter()
            .map(|w| log_ratio(&spec.schedule, w))
            .fold(f64::NEG_INFINITY, f64::max),
        Method::Bisection => {
            let views: Vec<&[u32]> = windows.iter().map(|w| &w[..]).collect();
            solve_max(&spec.schedule, spec.d, &views, tol).ok_or(DimensionError::Bracket { k: 0, k_prime: m })?
        }
    };
    Ok(ThetaValue {
        m,
        value,
        exact,
        last_start,
        distinct_windows: windows.len(),
    })
}

/// `θ_m = sup_k s_{k,k+m}`.
///
/// Uniform and eventually periodic schedules need only one period of starts
/// beyond the prefix, so the supremum is exact. Other schedules are scanned for
/// `k ∈ [0, k_max]` and the result is flagged as truncated.
pub fn theta(spec: &MoranSpec, m: u64, k_max: u64, tol: f64) -> Result<ThetaValue, DimensionError> {
    if m == 0 {
        return Err(DimensionError::BadOption("window length m must be at least 1".into()));
    }
    let (last_start, exact) = start_range(&spec.schedule, k_max);
    let tape = Tape::new(&spec.schedule, last_start + m);
    theta_on_tape(spec, &tape, m, last_start, exact, tol, Method::Bisection)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRow {
    pub m: u64,
    pub theta: f64,
    pub running_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    /// Tail-window estimate of `s_*` (Hausdorff dimension).
    pub s_lower: f64,
    /// Tail-window estimate of `s^*` (packing dimension).
    pub s_upper: f64,
    /// Running infimum of `θ_m`; an upper estimate of `s**` (Assouad dimension).
    pub s_assouad: f64,
    /// Largest window start scanned for `θ_m`.
    pub horizon_k: u64,
    /// Largest window length used for `θ_m`.
    pub horizon_m: u64,
    /// Horizon of the `s_{0,m}` sequence.
    pub horizon_pre: u64,
    /// `m` range of the tail window for `s_*`, `s^*`.
    pub tail: (u64, u64),
    pub theta_trace: Vec<ThetaRow>,
    /// `max θ_m` over `m ∈ [⌈m_max/2⌉, m_max]` minus the running infimum; at
    /// least `θ_{m_max} - s_assouad`.
    pub convergence_gap: f64,
    /// Whether every `θ_m` was a provably exact supremum over `k`.
    pub theta_exact: bool,
    pub tol: f64,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl DimensionReport {
    /// `s_lower ≤ s_upper ≤ s_assouad + gap`, up to `slack`.
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.s_lower <= self.s_upper + slack && self.s_upper <= self.s_assouad + self.convergence_gap + slack
    }
}

fn assemble(
    spec: &MoranSpec,
    opts: &DimensionOptions,
    method: Method,
    mut warnings: Vec<String>,
) -> Result<DimensionReport, DimensionError> {
    opts.check()?;
    let schedule = &spec.schedule;
    let (last_start, exact) = start_range(schedule, opts.k_max);
    let tape = Tape::new(schedule, last_start + opts.m_max);
    let thetas: Vec<ThetaValue> = (1..=opts.m_max)
        .into_par_iter()
        .map(|m| theta_on_tape(spec, &tape, m, last_start, exact, opts.tol, method))
        .collect::<Result<_, _>>()?;
    let mut running = f64::INFINITY;
    let theta_trace: Vec<ThetaRow> = thetas
        .iter()
        .map(|t| {
            running = running.min(t.value);
            ThetaRow {
                m: t.m,
                theta: t.value,
                running_inf: running,
            }
        })
        .collect();
    let last = theta_trace.last().expect("m_max >= 1");
    let half = opts.m_max.div_ceil(2);
    let tail_max = theta_trace
        .iter()
        .filter(|r| r.m >= half)
        .map(|r| r.theta)
        .fold(f64::NEG_INFINITY, f64::max);
    let pre = pre_dimensions(spec, opts.horizon, opts.tol, opts.tail_fraction, method)?;
    if !exact {
        warnings.push(format!(
            "θ_m is a supremum over window starts k ≤ {last_start} only; the schedule has no finite exact criterion"
        ));
        warnings.extend(structural_warnings(schedule, opts));
    }
    let report = DimensionReport {
        s_lower: pre.s_lower,
        s_upper: pre.s_upper,
        s_assouad: last.running_inf,
        horizon_k: last_start,
        horizon_m: opts.m_max,
        horizon_pre: opts.horizon,
        tail: pre.tail,
        convergence_gap: tail_max - last.running_inf,
        theta_trace,
        theta_exact: exact,
        tol: opts.tol,
        method,
        warnings,
    };
    let mut report = report;
    if !report.is_ordered(2.0 * opts.tol) {
        report.warnings.push(format!(
            "s^* estimate {:.6} exceeds s** + gap = {:.6}; increase m_max",
            report.s_upper,
            report.s_assouad + report.convergence_gap
        ));
    }
    Ok(report)
}

/// For the three-ratio family the supremum sits inside a run of `1/4` levels
/// that starts after `p_m`; warn when the scan stops short of it.
fn structural_warnings(schedule: &RatioSchedule, opts: &DimensionOptions) -> Vec<String> {
    if !matches!(schedule.presentation(), Presentation::ThreeRatio { .. }) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for m in 1..=opts.m_max {
        match schedule.quarter_run_start(m) {
            Some(start) if start <= opts.k_max => {}
            Some(start) => {
                out.push(format!(
                    "k_max = {} is below the start {start} of the first run of {m} levels of ratio 1/4 (ends at {}); θ_m for m ≥ {m} may be underestimated",
                    opts.k_max,
                    start + m
                ));
                break;
            }
            None => {
                out.push(format!(
                    "no run of {m} levels of ratio 1/4 is representable; θ_m for m ≥ {m} is truncated"
                ));
                break;
            }
        }
    }
    out
}

fn admissible(spec: &MoranSpec) -> Result<(), DimensionError> {
    let report = validate_moran(spec);
    if report.is_admissible() {
        Ok(())
    } else {
        let msgs: Vec<String> = report.errors().map(|i| i.to_string()).collect();
        Err(DimensionError::InvalidSpec(msgs.join("; ")))
    }
}

/// `s_*`, `s^*` and `s**` by bisection on the Moran equation.
pub fn assouad_moran(spec: &MoranSpec, opts: &DimensionOptions) -> Result<DimensionReport, DimensionError> {
    admissible(spec)?;
    assemble(spec, opts, Method::Bisection, Vec::new())
}

/// The same estimates for levels with equal ratios, using
/// `s_{k,k+m} = Σ ln n_i / Σ (-ln c_i)` instead of bisection.
pub fn uniform_corollary(spec: &MoranSpec, opts: &DimensionOptions) -> Result<DimensionReport, DimensionError> {
    admissible(spec)?;
    require_uniform_levels(&spec.schedule)?;
    assemble(spec, opts, Method::LogRatio, Vec::new())
}

/// Assouad dimension of a Cantor-like set from `ln(n_{k+1}⋯n_{k+m}) / -ln(c_{k+1}⋯c_{k+m})`.
///
/// The perturbation `a_k` does not enter; windows are the same `m`-level
/// windows used for Moran sets.
pub fn assouad_cantor(spec: &CantorLikeSpec, opts: &DimensionOptions) -> Result<DimensionReport, DimensionError> {
    let report = crate::spec_model::validate_cantor(spec);
    if !report.is_admissible() {
        let msgs: Vec<String> = report.errors().map(|i| i.to_string()).collect();
        return Err(DimensionError::InvalidSpec(msgs.join("; ")));
    }
    let moran = spec.as_moran();
    let warnings = if spec.perturbation.sup() > 0.0 {
        vec!["perturbation a_k does not affect the dimensions and was ignored".to_string()]
    } else {
        Vec::new()
    };
    assemble(&moran, opts, Method::LogRatio, warnings)
}
