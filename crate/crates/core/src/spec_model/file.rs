//! JSON spec files.
//!
//! ```json
//! { "kind": "moran", "d": 1,
//!   "schedule": { "type": "eventually_periodic",
//!                 "prefix": [ { "n": 2, "c": "1/3" } ],
//!                 "cycle":  [ { "n": 2, "c": "1/4" }, { "ratios": ["1/2", "1/8"] } ] } }
//! ```
//!
//! Schedule types:
//! - `{"type": "uniform", "n": 2, "c": "1/3"}`
//! - `{"type": "eventually_periodic", "prefix": [level...], "cycle": [level...]}`
//! - `{"type": "block_program", "stages": [{"length": {"fixed": 3}, "level": level}, ...]}`
//!   with lengths `{"fixed": v}`, `{"linear": {"base": b, "step": s}}` or
//!   `{"geometric": {"base": b, "factor": f}}`
//! - `{"type": "block_program", "three_ratio": {"factorial_shift": 1}}` or
//!   `{"type": "block_program", "three_ratio": {"markers": [2, 6, 24]}}`
//!
//! A level is `{"n": n, "c": ratio}` or `{"ratios": [ratio, ...]}`. Ratios
//! written as strings (`"1/3"`, `"0.25"`) are exact; JSON numbers are taken
//! as binary floating point.
//!
//! Cantor-like files use `"kind": "cantor_like"`, omit `d`, and may add
//! `"perturbation": {"type": "geometric", "amplitude": 0.1, "decay": 0.5}` or
//! `{"type": "finite", "values": [0.1, 0.05]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ratio::{Level, Ratio};
use super::schedule::{LengthRule, MarkerRule, Presentation, RatioSchedule, Stage};
use super::spec::{CantorLikeSpec, MoranSpec, Perturbation, SetSpec};

#[derive(Debug, thiserror::Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{field}: {message} (line {line}, column {column})")]
    Syntax {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl SpecFileError {
    pub fn field(&self) -> Option<&str> {
        match self {
            SpecFileError::Io { .. } => None,
            SpecFileError::Syntax { field, .. } | SpecFileError::Invalid { field, .. } => Some(field),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
enum RawRatio {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<RawRatio>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratios: Option<Vec<RawRatio>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawLength {
    Fixed(u64),
    Linear { base: u64, step: u64 },
    Geometric { base: u64, factor: u64 },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawStage {
    length: RawLength,
    level: RawLevel,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawThreeRatio {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factorial_shift: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    markers: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawSchedule {
    Uniform {
        n: usize,
        c: RawRatio,
    },
    EventuallyPeriodic {
        #[serde(default)]
        prefix: Vec<RawLevel>,
        cycle: Vec<RawLevel>,
    },
    BlockProgram {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stages: Option<Vec<RawStage>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        three_ratio: Option<RawThreeRatio>,
    },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawPerturbation {
    Geometric { amplitude: f64, decay: f64 },
    Finite { values: Vec<f64> },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Moran,
    CantorLike,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<u32>,
    schedule: RawSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perturbation: Option<RawPerturbation>,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SpecFileError {
    SpecFileError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn ratio_from_raw(raw: &RawRatio, field: &str) -> Result<Ratio, SpecFileError> {
    match raw {
        RawRatio::Number(v) => Ok(Ratio::from_f64(*v)),
        RawRatio::Text(s) => s
            .parse()
            .map_err(|e: super::ratio::RatioParseError| invalid(field, e.to_string())),
    }
}

fn ratio_to_raw(r: &Ratio) -> RawRatio {
    if r.is_exact() {
        RawRatio::Text(r.to_string())
    } else {
        RawRatio::Number(r.value())
    }
}

fn level_from_raw(raw: &RawLevel, field: &str) -> Result<Level, SpecFileError> {
    match (raw.n, &raw.c, &raw.ratios) {
        (Some(n), Some(c), None) => Ok(Level::uniform(n, ratio_from_raw(c, &format!("{field}.c"))?)),
        (None, None, Some(rs)) => {
            let ratios = rs
                .iter()
                .enumerate()
                .map(|(j, r)| ratio_from_raw(r, &format!("{field}.ratios[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Level::new(ratios))
        }
        (Some(n), None, Some(rs)) if n == rs.len() => level_from_raw(
            &RawLevel {
                n: None,
                c: None,
                ratios: raw.ratios.clone(),
            },
            field,
        ),
        (Some(n), None, Some(rs)) => Err(invalid(field, format!("n = {n} but {} ratios given", rs.len()))),
        _ => Err(invalid(field, "a level needs either `n` and `c`, or `ratios`")),
    }
}

fn level_to_raw(level: &Level) -> RawLevel {
    if level.is_uniform() {
        RawLevel {
            n: Some(level.n()),
            c: Some(ratio_to_raw(&level.ratios()[0])),
            ratios: None,
        }
    } else {
        RawLevel {
            n: None,
            c: None,
            ratios: Some(level.ratios().iter().map(ratio_to_raw).collect()),
        }
    }
}

fn levels_from_raw(raw: &[RawLevel], field: &str) -> Result<Vec<Level>, SpecFileError> {
    raw.iter()
        .enumerate()
        .map(|(i, l)| level_from_raw(l, &format!("{field}[{i}]")))
        .collect()
}

fn schedule_from_raw(raw: &RawSchedule) -> Result<RatioSchedule, SpecFileError> {
    match raw {
        RawSchedule::Uniform { n, c } => Ok(RatioSchedule::uniform(*n, ratio_from_raw(c, "schedule.c")?)),
        RawSchedule::EventuallyPeriodic { prefix, cycle } => {
            let prefix = levels_from_raw(prefix, "schedule.prefix")?;
            let cycle = levels_from_raw(cycle, "schedule.cycle")?;
            RatioSchedule::eventually_periodic(prefix, cycle).map_err(|e| invalid("schedule.cycle", e.to_string()))
        }
        RawSchedule::BlockProgram {
            stages: Some(stages),
            three_ratio: None,
        } => {
            let stages = stages
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let length = match s.length {
                        RawLength::Fixed(v) => LengthRule::Fixed(v),
                        RawLength::Linear { base, step } => LengthRule::Linear { base, step },
                        RawLength::Geometric { base, factor } => LengthRule::Geometric { base, factor },
                    };
                    Ok(Stage {
                        length,
                        level: level_from_raw(&s.level, &format!("schedule.stages[{i}].level"))?,
                    })
                })
                .collect::<Result<Vec<_>, SpecFileError>>()?;
            RatioSchedule::block_program(stages).map_err(|e| invalid("schedule.stages", e.to_string()))
        }
        RawSchedule::BlockProgram {
            stages: None,
            three_ratio: Some(t),
        } => {
            let rule = match (t.factorial_shift, &t.markers) {
                (None, None) => MarkerRule::default(),
                (Some(shift), None) => MarkerRule::Factorial { shift },
                (None, Some(m)) => MarkerRule::Explicit(m.clone()),
                (Some(_), Some(_)) => {
                    return Err(invalid(
                        "schedule.three_ratio",
                        "give either `factorial_shift` or `markers`, not both",
                    ))
                }
            };
            RatioSchedule::three_ratio(rule).map_err(|e| invalid("schedule.three_ratio.markers", e.to_string()))
        }
        RawSchedule::BlockProgram { .. } => Err(invalid(
            "schedule",
            "block_program needs exactly one of `stages` or `three_ratio`",
        )),
    }
}

fn schedule_to_raw(s: &RatioSchedule) -> RawSchedule {
    match s.presentation() {
        Presentation::Uniform(level) => RawSchedule::Uniform {
            n: level.n(),
            c: ratio_to_raw(&level.ratios()[0]),
        },
        Presentation::EventuallyPeriodic { prefix, cycle } => RawSchedule::EventuallyPeriodic {
            prefix: prefix.iter().map(level_to_raw).collect(),
            cycle: cycle.iter().map(level_to_raw).collect(),
        },
        Presentation::Stages(stages) => RawSchedule::BlockProgram {
            stages: Some(
                stages
                    .iter()
                    .map(|st| RawStage {
                        length: match st.length {
                            LengthRule::Fixed(v) => RawLength::Fixed(v),
                            LengthRule::Linear { base, step } => RawLength::Linear { base, step },
                            LengthRule::Geometric { base, factor } => RawLength::Geometric { base, factor },
                        },
                        level: level_to_raw(&st.level),
                    })
                    .collect(),
            ),
            three_ratio: None,
        },
        Presentation::ThreeRatio { markers } => RawSchedule::BlockProgram {
            stages: None,
            three_ratio: Some(match markers {
                MarkerRule::Factorial { shift } => RawThreeRatio {
                    factorial_shift: Some(*shift),
                    markers: None,
                },
                MarkerRule::Explicit(m) => RawThreeRatio {
                    factorial_shift: None,
                    markers: Some(m.clone()),
                },
            }),
        },
    }
}

fn spec_from_raw(raw: RawSpec) -> Result<SetSpec, SpecFileError> {
    let schedule = schedule_from_raw(&raw.schedule)?;
    match raw.kind {
        RawKind::Moran => {
            if raw.perturbation.is_some() {
                return Err(invalid("perturbation", "only cantor_like specs take a perturbation"));
            }
            Ok(SetSpec::Moran(MoranSpec::new(schedule, raw.d.unwrap_or(1))))
        }
        RawKind::CantorLike => {
            if let Some(d) = raw.d.filter(|&d| d != 1) {
                return Err(invalid("d", format!("cantor_like specs live on the line, got d = {d}")));
            }
            let perturbation = match raw.perturbation {
                None => Perturbation::none(),
                Some(RawPerturbation::Geometric { amplitude, decay }) => Perturbation::Geometric { amplitude, decay },
                Some(RawPerturbation::Finite { values }) => Perturbation::Finite(values),
            };
            Ok(SetSpec::CantorLike(CantorLikeSpec::new(schedule, perturbation)))
        }
    }
}

fn spec_to_raw(spec: &SetSpec) -> RawSpec {
    match spec {
        SetSpec::Moran(m) => RawSpec {
            kind: RawKind::Moran,
            d: Some(m.d),
            schedule: schedule_to_raw(&m.schedule),
            perturbation: None,
        },
        SetSpec::CantorLike(c) => RawSpec {
            kind: RawKind::CantorLike,
            d: None,
            schedule: schedule_to_raw(&c.schedule),
            perturbation: Some(match &c.perturbation {
                Perturbation::Geometric { amplitude, decay } => RawPerturbation::Geometric {
                    amplitude: *amplitude,
                    decay: *decay,
                },
                Perturbation::Finite(v) => RawPerturbation::Finite { values: v.clone() },
            }),
        },
    }
}

/// Parse a spec document. Errors name the offending field path.
pub fn parse_spec(text: &str) -> Result<SetSpec, SpecFileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => "<document>".to_string(),
            p => p,
        };
        let inner = e.into_inner();
        SpecFileError::Syntax {
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    spec_from_raw(raw)
}

pub fn read_spec(path: &Path) -> Result<SetSpec, SpecFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

/// Canonical compact JSON; parsing it yields an equal spec.
pub fn to_canonical_json(spec: &SetSpec) -> String {
    serde_json::to_string(&spec_to_raw(spec)).expect("spec serializes")
}

pub fn to_pretty_json(spec: &SetSpec) -> String {
    serde_json::to_string_pretty(&spec_to_raw(spec)).expect("spec serializes")
}

/// First 16 hex digits of the SHA-256 of the canonical JSON.
pub fn spec_hash(spec: &SetSpec) -> String {
    let digest = Sha256::digest(to_canonical_json(spec).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
