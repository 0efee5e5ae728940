use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cover::covering_count;
use super::intervals::{IntervalSet, RealizationMeta};
use super::realize::{layout, random_point, Placement, Realizer, SignRule};
use super::GeometryError;
use crate::numeric::mix64;
use crate::spec_model::{MoranSpec, Ratio, SetSpec};
use crate::symbolic::{cutset, Word};

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalOptions {
    /// Strictly decreasing ratios in `(0, 1)`.
    pub rho_grid: Vec<f64>,
    /// Strictly monotone radii in `(0, 1]`.
    pub r_grid: Vec<f64>,
    pub centers_per_r: usize,
    pub placement: Placement,
    pub signs: SignRule,
    /// Largest number of intervals a realization may hold.
    pub budget: usize,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        Self {
            rho_grid: (2..=6).map(|j| 3f64.powi(-j)).collect(),
            r_grid: (1..=4).map(|j| 3f64.powi(-j)).collect(),
            centers_per_r: 8,
            placement: Placement::default(),
            signs: SignRule::Alternating,
            budget: 1 << 22,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalRow {
    pub rho: f64,
    pub big_r: f64,
    pub x: f64,
    pub n: u64,
    /// `ln N / -ln ρ`
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalEstimate {
    /// `t(ρ)` at the smallest `ρ`.
    pub estimate: f64,
    /// `(ρ, t(ρ))` with `t(ρ) = max` over radii and centres.
    pub per_rho: Vec<(f64, f64)>,
    pub table: Vec<EmpiricalRow>,
    /// Deepest realization level used.
    pub max_depth: u64,
}

impl EmpiricalEstimate {
    /// Largest increase of `t(ρ)` as `ρ` decreases; near zero when the estimates
    /// settle monotonically.
    pub fn max_rise(&self) -> f64 {
        self.per_rho.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max)
    }
}

fn check_grids(rho: &[f64], radii: &[f64]) -> Result<(), GeometryError> {
    if rho.is_empty() || radii.is_empty() {
        return Err(GeometryError::BadGrid("grids must be nonempty".into()));
    }
    if rho.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(GeometryError::BadGrid("every ρ must lie in (0, 1)".into()));
    }
    if !rho.windows(2).all(|w| w[1] < w[0]) {
        return Err(GeometryError::BadGrid("ρ grid must be strictly decreasing".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(GeometryError::BadGrid("every R must lie in (0, 1]".into()));
    }
    let inc = radii.windows(2).all(|w| w[1] > w[0]);
    let dec = radii.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(GeometryError::BadGrid("R grid must be strictly monotone".into()));
    }
    Ok(())
}

/// At most `cap` items spread evenly over `items`.
fn spread<T: Copy>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    (0..cap).map(|i| items[i * items.len() / cap]).collect()
}

fn rows_for(set: &IntervalSet, rho: f64, big_r: f64, centers: &[f64]) -> Vec<EmpiricalRow> {
    centers
        .iter()
        .map(|&x| {
            let n = covering_count(set, x, big_r, rho * big_r);
            EmpiricalRow {
                rho,
                big_r,
                x,
                n,
                t: (n.max(1) as f64).ln() / -rho.ln(),
            }
        })
        .collect()
}

fn summarize(rho_grid: &[f64], table: Vec<EmpiricalRow>, max_depth: u64) -> EmpiricalEstimate {
    let per_rho: Vec<(f64, f64)> = rho_grid
        .iter()
        .map(|&rho| {
            let t = table
                .iter()
                .filter(|row| row.rho == rho)
                .map(|row| row.t)
                .fold(f64::NEG_INFINITY, f64::max);
            (rho, t)
        })
        .collect();
    EmpiricalEstimate {
        estimate: per_rho.last().expect("grid is nonempty").1,
        per_rho,
        table,
        max_depth,
    }
}

/// `t(ρ) = max_{R, x} ln N_{ρR,R}(x) / -ln ρ` on a fixed interval set.
pub fn estimate_on_set(
    set: &IntervalSet,
    rho_grid: &[f64],
    r_grid: &[f64],
    centers: &[f64],
) -> Result<EmpiricalEstimate, GeometryError> {
    check_grids(rho_grid, r_grid)?;
    let table: Vec<EmpiricalRow> = rho_grid
        .iter()
        .flat_map(|&rho| r_grid.iter().map(move |&r| (rho, r)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(rho, r)| rows_for(set, rho, r, centers))
        .collect();
    Ok(summarize(rho_grid, table, set.depth()))
}

/// Empirical Assouad dimension from covering numbers of realized levels.
///
/// For each `(ρ, R)` the realization depth is the first level whose intervals
/// are all at most `ρ R c_*` long. Centres are the left ends of the intervals of
/// the first level no longer than `R`, spread evenly and capped at
/// `centers_per_r`.
pub fn empirical_assouad(spec: &SetSpec, opts: &EmpiricalOptions) -> Result<EmpiricalEstimate, GeometryError> {
    check_grids(&opts.rho_grid, &opts.r_grid)?;
    if opts.centers_per_r == 0 {
        return Err(GeometryError::BadGrid("centers_per_r must be at least 1".into()));
    }
    let c_star = spec.c_star().value();
    let finest = opts
        .rho_grid
        .iter()
        .flat_map(|&rho| opts.r_grid.iter().map(move |&r| rho * r))
        .fold(f64::INFINITY, f64::min)
        * c_star;
    let mut realizer = Realizer::new(spec, opts.placement, opts.signs, opts.budget)?;
    let mut levels = vec![realizer.current()];
    let mut max_len = vec![realizer.max_length()];
    while *max_len.last().expect("root level") > finest {
        realizer.step()?;
        levels.push(realizer.current());
        max_len.push(realizer.max_length());
    }
    let first_below = |threshold: f64| max_len.iter().position(|&l| l <= threshold).expect("deep enough");

    let mut jobs = Vec::new();
    for &rho in &opts.rho_grid {
        for &big_r in &opts.r_grid {
            let starts: Vec<f64> = levels[first_below(big_r)].intervals().iter().map(|iv| iv.0).collect();
            let centers = spread(&starts, opts.centers_per_r);
            let depth = first_below(rho * big_r * c_star);
            jobs.push((rho, big_r, depth, centers));
        }
    }
    let table: Vec<EmpiricalRow> = jobs
        .par_iter()
        .flat_map_iter(|(rho, big_r, depth, centers)| rows_for(&levels[*depth], *rho, *big_r, centers))
        .collect();
    Ok(summarize(&opts.rho_grid, table, (levels.len() - 1) as u64))
}

/// Which centres `overlap_bound` tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CenterSampling {
    /// Both ends of evenly chosen cutset intervals.
    Endpoints,
    /// Seeded random points of the set.
    Random,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    /// `(δ, max count)` per sampled `δ`.
    pub per_delta: Vec<(f64, usize)>,
    pub max: usize,
}

impl OverlapReport {
    /// Whether the count is the same at every `δ`.
    pub fn is_constant(&self) -> bool {
        self.per_delta.windows(2).all(|w| w[0].1 == w[1].1)
    }
}

/// Left-to-right intervals `J_v` of the members of `A(δ)` at the root.
fn cutset_intervals(
    spec: &MoranSpec,
    placement: Placement,
    delta: Ratio,
    budget: usize,
) -> Result<IntervalSet, GeometryError> {
    let cut = cutset(spec, &Word::root(), delta, budget)?;
    let depth = cut.max_suffix_len();
    let mut layouts = Vec::with_capacity(depth);
    let mut cursor = spec.schedule.cursor(1);
    for k in 1..=depth as u64 {
        let level = &spec.schedule.palette()[cursor.next().expect("cursor never ends")];
        let ratios: Vec<f64> = level.ratios().iter().map(|r| r.value()).collect();
        layouts.push(layout(&ratios, placement, k)?);
    }
    let intervals = cut
        .iter()
        .map(|(v, _)| {
            let (mut a, mut len) = (0.0, 1.0);
            for (i, &l) in v.iter().enumerate() {
                let (off, r) = layouts[i][l as usize - 1];
                a += off * len;
                len *= r;
            }
            (a, a + len)
        })
        .collect();
    IntervalSet::new(intervals, depth as u64, RealizationMeta::default())
}

/// Intervals of `set` meeting the closed ball `B(x, δ)`, with a relative
/// tolerance so touching intervals count.
fn meeting(set: &IntervalSet, x: f64, delta: f64) -> usize {
    let tol = 1e-12 * delta;
    let (lo, hi) = (x - delta - tol, x + delta + tol);
    set.intervals()[set.first_reaching(lo)..]
        .iter()
        .take_while(|&&(a, _)| a <= hi)
        .count()
}

/// `max_x #{v ∈ A(δ) : B(x, δ) ∩ J_v ≠ ∅}` over sampled centres, per `δ`.
pub fn overlap_bound(
    spec: &MoranSpec,
    placement: Placement,
    deltas: &[Ratio],
    centers: usize,
    sampling: CenterSampling,
    seed: u64,
    budget: usize,
) -> Result<OverlapReport, GeometryError> {
    if spec.d != 1 {
        return Err(GeometryError::NotOneDimensional(spec.d));
    }
    let mut per_delta = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        let set = cutset_intervals(spec, placement, delta, budget)?;
        let dv = delta.value();
        let mut xs = Vec::new();
        if matches!(sampling, CenterSampling::Endpoints | CenterSampling::Both) {
            for (a, b) in spread(set.intervals(), centers) {
                xs.push(a);
                xs.push(b);
            }
        }
        if matches!(sampling, CenterSampling::Random | CenterSampling::Both) {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(i as u64)));
            for _ in 0..centers {
                xs.push(random_point(spec, placement, &mut rng, dv * 1e-6)?);
            }
        }
        let max = xs.iter().map(|&x| meeting(&set, x, dv)).max().unwrap_or(0);
        per_delta.push((dv, max));
    }
    let max = per_delta.iter().map(|p| p.1).max().unwrap_or(0);
    Ok(OverlapReport { per_delta, max })
}
