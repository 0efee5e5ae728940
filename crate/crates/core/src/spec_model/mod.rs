//! Finitely presented Moran and Cantor-like specifications.

mod file;
mod ratio;
mod schedule;
mod spec;
mod validate;

pub use file::{parse_spec, read_spec, spec_hash, to_canonical_json, to_pretty_json, SpecFileError};
pub use ratio::{Level, Ratio, RatioParseError};
pub use schedule::{
    LengthRule, LevelCursor, MarkerRule, Presentation, RatioSchedule, Run, ScheduleError, Stage, EIGHTH, QUARTER,
    SIXTEENTH,
};
pub use spec::{CantorLikeSpec, MoranSpec, Perturbation, SetSpec};
pub use validate::{c_star, validate, validate_cantor, validate_moran, Issue, Severity, ValidationReport};
