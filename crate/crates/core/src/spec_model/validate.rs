use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use super::ratio::Ratio;
use super::schedule::{Presentation, RatioSchedule};
use super::spec::{CantorLikeSpec, MoranSpec, Perturbation, SetSpec};

/// Amplitudes below this are treated as zero when checking realizability.
const PERTURBATION_FLOOR: f64 = 1e-16;
/// Per-level realizability is checked at most this far; later levels are checked per palette entry.
const LEVELWISE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub check: &'static str,
    pub level: Option<u64>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.check)?;
        if let Some(k) = self.level {
            write!(f, " level {k}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, check: &'static str, level: Option<u64>, message: String) {
        self.issues.push(Issue {
            severity,
            check,
            level,
            message,
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    /// True when no error was found; downstream operations require this.
    pub fn is_admissible(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn has_check(&self, check: &str) -> bool {
        self.issues.iter().any(|i| i.check == check)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "ok");
        }
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

pub fn validate(spec: &SetSpec) -> ValidationReport {
    match spec {
        SetSpec::Moran(m) => validate_moran(m),
        SetSpec::CantorLike(c) => validate_cantor(c),
    }
}

/// `c_* = inf c_{k,j}` over the finite presentation.
pub fn c_star(spec: &SetSpec) -> Ratio {
    spec.c_star()
}

pub fn validate_moran(spec: &MoranSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    if spec.d == 0 {
        report.push(
            Severity::Error,
            "dimension",
            None,
            "ambient dimension d must be at least 1".into(),
        );
        return report;
    }
    check_schedule(&spec.schedule, &mut report);
    if !report.is_admissible() {
        return report;
    }
    check_msc(&spec.schedule, spec.d, &mut report);
    check_implied_bounds(&spec.schedule, spec.d, &mut report);
    report
}

pub fn validate_cantor(spec: &CantorLikeSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_schedule(&spec.schedule, &mut report);
    if !report.is_admissible() {
        return report;
    }
    let schedule = &spec.schedule;
    for (idx, level) in schedule.palette().iter().enumerate() {
        if !level.is_uniform() {
            report.push(
                Severity::Error,
                "cantor_level",
                schedule.first_occurrence(idx, u64::MAX),
                format!(
                    "Cantor-like levels need one ratio per level, found {} distinct",
                    level.n()
                ),
            );
        }
    }
    match &spec.perturbation {
        Perturbation::Geometric { amplitude, decay } => {
            if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                report.push(
                    Severity::Error,
                    "perturbation",
                    None,
                    format!("amplitude {amplitude} must be finite and >= 0"),
                );
            }
            if !(*decay > 0.0 && *decay < 1.0) {
                report.push(
                    Severity::Error,
                    "perturbation",
                    None,
                    format!("decay {decay} must lie in (0, 1)"),
                );
            }
        }
        Perturbation::Finite(v) => {
            if let Some(i) = v.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
                report.push(
                    Severity::Error,
                    "perturbation",
                    Some(i as u64 + 1),
                    format!("a_k = {} must be finite and >= 0", v[i]),
                );
            }
        }
    }
    if !report.is_admissible() {
        return report;
    }
    check_cantor_realizability(spec, &mut report);
    report
}

fn check_schedule(schedule: &RatioSchedule, report: &mut ValidationReport) {
    for (idx, level) in schedule.palette().iter().enumerate() {
        let at = schedule.first_occurrence(idx, u64::MAX);
        if level.n() < 2 {
            report.push(Severity::Error, "branching", at, format!("n_k = {} < 2", level.n()));
        }
        for c in level.ratios() {
            if !c.is_proper() {
                report.push(
                    Severity::Error,
                    "ratio_range",
                    at,
                    format!("ratio {c} is not in (0, 1)"),
                );
            }
        }
    }
    let cs = schedule.c_star();
    if !(cs.value() > 0.0) {
        report.push(Severity::Error, "c_star", None, format!("c_* = {cs} must be positive"));
    }
    if let Presentation::ThreeRatio { .. } = schedule.presentation() {
        let markers = schedule.markers().expect("three-ratio schedule has markers");
        for (i, w) in markers.windows(2).enumerate() {
            let i = i as u64 + 1;
            if w[1] == u64::MAX {
                break;
            }
            if w[1] - w[0] <= i {
                report.push(
                    Severity::Error,
                    "markers",
                    Some(w[1]),
                    format!("p_{} - p_{i} = {} must exceed {i}", i + 1, w[1] - w[0]),
                );
            }
        }
        report.push(
            Severity::Info,
            "leading_levels",
            None,
            format!("levels 1..={} carry ratio 1/4 by convention", markers[0]),
        );
    }
}

fn check_msc(schedule: &RatioSchedule, d: u32, report: &mut ValidationReport) {
    for (idx, level) in schedule.palette().iter().enumerate() {
        let at = schedule.first_occurrence(idx, u64::MAX);
        match level.power_sum_exact(d) {
            Some(sum) => {
                if sum > BigRational::one() {
                    report.push(Severity::Error, "msc", at, format!("Σc^d = {sum} > 1 (MSC)"));
                }
            }
            None => {
                let sum = level.power_sum(d);
                if sum > 1.0 + 1e-12 {
                    report.push(Severity::Error, "msc", at, format!("Σc^d = {sum} > 1 (MSC)"));
                } else if sum > 1.0 {
                    report.push(
                        Severity::Warning,
                        "msc",
                        at,
                        format!("Σc^d = {sum} exceeds 1 only by rounding; treated as admissible"),
                    );
                }
            }
        }
    }
}

fn check_implied_bounds(schedule: &RatioSchedule, d: u32, report: &mut ValidationReport) {
    let cs = schedule.c_star().value().powi(d as i32);
    let cmax = (1.0 - cs).powf(1.0 / d as f64);
    let nmax = 1.0 / cs;
    for (idx, level) in schedule.palette().iter().enumerate() {
        let at = schedule.first_occurrence(idx, u64::MAX);
        if level.max_ratio().value() > cmax * (1.0 + 1e-12) {
            report.push(
                Severity::Error,
                "implied_bounds",
                at,
                format!("max ratio {} exceeds (1 - c_*^d)^(1/d) = {cmax}", level.max_ratio()),
            );
        }
        if level.n() as f64 > nmax * (1.0 + 1e-12) {
            report.push(
                Severity::Error,
                "implied_bounds",
                at,
                format!("n_k = {} exceeds c_*^(-d) = {nmax}", level.n()),
            );
        }
    }
}

fn check_cantor_realizability(spec: &CantorLikeSpec, report: &mut ValidationReport) {
    let schedule = &spec.schedule;
    let support = spec.perturbation.effective_support(PERTURBATION_FLOOR);
    if spec.perturbation.sup() >= 1.0 {
        report.push(
            Severity::Error,
            "cantor_band",
            None,
            format!("sup a_k = {} must be < 1 so c_k(1 - a_k) > 0", spec.perturbation.sup()),
        );
    }
    let levelwise = support.min(LEVELWISE_LIMIT);
    if support > LEVELWISE_LIMIT {
        report.push(
            Severity::Warning,
            "cantor_realizability",
            None,
            format!("per-level check stops at level {LEVELWISE_LIMIT}; later levels use sup a_k"),
        );
    }
    let mut cursor = schedule.cursor(1);
    for k in 1..=levelwise {
        let idx = cursor.next().expect("cursor never ends");
        let level = &schedule.palette()[idx];
        let a = spec.perturbation.at(k);
        let c = level.ratios()[0].value();
        let total = level.n() as f64 * c * (1.0 + a);
        if total > 1.0 + 1e-12 {
            report.push(
                Severity::Error,
                "cantor_realizability",
                Some(k),
                format!("n_k c_k (1 + a_k) = {total} > 1"),
            );
            return;
        }
    }
    let tail_a = if support > LEVELWISE_LIMIT {
        spec.perturbation.sup()
    } else {
        0.0
    };
    for (idx, level) in schedule.palette().iter().enumerate() {
        let c = level.ratios()[0];
        let ok = if tail_a == 0.0 {
            match level.power_sum_exact(1) {
                Some(sum) => sum <= BigRational::one(),
                None => level.power_sum(1) <= 1.0 + 1e-12,
            }
        } else {
            level.n() as f64 * c.value() * (1.0 + tail_a) <= 1.0 + 1e-12
        };
        if !ok {
            report.push(
                Severity::Error,
                "cantor_realizability",
                schedule.first_occurrence(idx, u64::MAX),
                format!("n_k c_k = {} * {c} does not fit in the parent", level.n()),
            );
        }
    }
}
