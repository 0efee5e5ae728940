use super::ratio::{Level, Ratio};

/// How long a block-program stage lasts in round `j` (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LengthRule {
    Fixed(u64),
    /// `base + step * j`
    Linear {
        base: u64,
        step: u64,
    },
    /// `base * factor^j`
    Geometric {
        base: u64,
        factor: u64,
    },
}

impl LengthRule {
    pub fn length(&self, round: u64) -> u64 {
        match *self {
            LengthRule::Fixed(v) => v,
            LengthRule::Linear { base, step } => base.saturating_add(step.saturating_mul(round)),
            LengthRule::Geometric { base, factor } => {
                let pow = u32::try_from(round)
                    .ok()
                    .and_then(|r| factor.checked_pow(r))
                    .unwrap_or(u64::MAX);
                base.saturating_mul(pow)
            }
        }
    }

    fn is_positive(&self) -> bool {
        match *self {
            LengthRule::Fixed(v) => v >= 1,
            LengthRule::Linear { base, .. } => base >= 1,
            LengthRule::Geometric { base, factor } => base >= 1 && factor >= 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub length: LengthRule,
    pub level: Level,
}

/// Marker sequence `{p_i}` of the three-ratio family with runs of `1/4` levels
/// on `[p_i + 1, p_i + i]` and `1/8` (even `i`) or `1/16` (odd `i`) levels on
/// `[p_i + i + 1, p_{i+1}]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkerRule {
    /// `p_i = (i + shift)!`; `shift = 1` is the default family.
    Factorial { shift: u32 },
    /// A finite marker list; after the last marker the final block's tail
    /// continues forever.
    Explicit(Vec<u64>),
}

impl Default for MarkerRule {
    fn default() -> Self {
        MarkerRule::Factorial { shift: 1 }
    }
}

/// The finite presentation a schedule was built from.
#[derive(Clone, Debug, PartialEq)]
pub enum Presentation {
    Uniform(Level),
    EventuallyPeriodic {
        prefix: Vec<Level>,
        cycle: Vec<Level>,
    },
    /// Stages cycled in rounds; lengths may grow with the round index.
    Stages(Vec<Stage>),
    ThreeRatio {
        markers: MarkerRule,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("eventually periodic schedule needs a nonempty cycle")]
    EmptyCycle,
    #[error("block program needs at least one stage")]
    NoStages,
    #[error("stage {0} has a length rule that yields zero levels")]
    ZeroLengthStage(usize),
    #[error("marker list is empty")]
    NoMarkers,
    #[error("markers must be strictly increasing (p_{index} = {value} does not exceed its predecessor)")]
    MarkersNotIncreasing { index: usize, value: u64 },
}

/// Per-level palette index for the three-ratio family.
pub const QUARTER: usize = 0;
pub const EIGHTH: usize = 1;
pub const SIXTEENTH: usize = 2;

#[derive(Clone, Debug, PartialEq)]
enum Plan {
    Uniform,
    Periodic {
        prefix: Vec<usize>,
        cycle: Vec<usize>,
    },
    Stages {
        stages: Vec<(LengthRule, usize)>,
        fixed_period: Option<u64>,
    },
    ThreeRatio {
        markers: Vec<u64>,
        open_tail: bool,
    },
}

/// A maximal run of consecutive levels sharing one palette entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub palette: usize,
    /// Last level (inclusive) of the run.
    pub last: u64,
}

/// A finitely presented infinite sequence of levels `k = 1, 2, ...`.
///
/// Distinct level values are collected into a palette so numeric kernels can
/// evaluate each distinct level once per exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSchedule {
    presentation: Presentation,
    palette: Vec<Level>,
    plan: Plan,
}

fn intern(palette: &mut Vec<Level>, level: &Level) -> usize {
    match palette.iter().position(|l| l == level) {
        Some(i) => i,
        None => {
            palette.push(level.clone());
            palette.len() - 1
        }
    }
}

impl RatioSchedule {
    pub fn uniform(n: usize, c: Ratio) -> Self {
        let level = Level::uniform(n, c);
        Self {
            presentation: Presentation::Uniform(level.clone()),
            palette: vec![level],
            plan: Plan::Uniform,
        }
    }

    pub fn eventually_periodic(prefix: Vec<Level>, cycle: Vec<Level>) -> Result<Self, ScheduleError> {
        if cycle.is_empty() {
            return Err(ScheduleError::EmptyCycle);
        }
        let mut palette = Vec::new();
        let p: Vec<usize> = prefix.iter().map(|l| intern(&mut palette, l)).collect();
        let c: Vec<usize> = cycle.iter().map(|l| intern(&mut palette, l)).collect();
        Ok(Self {
            presentation: Presentation::EventuallyPeriodic { prefix, cycle },
            palette,
            plan: Plan::Periodic { prefix: p, cycle: c },
        })
    }

    /// Alternating two-level cycle, a common test family.
    pub fn alternating(a: Level, b: Level) -> Self {
        Self::eventually_periodic(Vec::new(), vec![a, b]).expect("cycle is nonempty")
    }

    pub fn block_program(stages: Vec<Stage>) -> Result<Self, ScheduleError> {
        if stages.is_empty() {
            return Err(ScheduleError::NoStages);
        }
        if let Some(i) = stages.iter().position(|s| !s.length.is_positive()) {
            return Err(ScheduleError::ZeroLengthStage(i));
        }
        let mut palette = Vec::new();
        let plan_stages: Vec<(LengthRule, usize)> = stages
            .iter()
            .map(|s| (s.length.clone(), intern(&mut palette, &s.level)))
            .collect();
        let fixed_period = plan_stages
            .iter()
            .map(|(rule, _)| match rule {
                LengthRule::Fixed(v) => Some(*v),
                _ => None,
            })
            .try_fold(0u64, |acc, v| v.and_then(|v| acc.checked_add(v)));
        Ok(Self {
            presentation: Presentation::Stages(stages),
            palette,
            plan: Plan::Stages {
                stages: plan_stages,
                fixed_period,
            },
        })
    }

    /// The three-ratio family (`1/4`, `1/8`, `1/16`, two children each) driven by
    /// a marker sequence. Levels `1..=p_1` are assigned `1/4`.
    pub fn three_ratio(markers: MarkerRule) -> Result<Self, ScheduleError> {
        let (values, open_tail) = match &markers {
            MarkerRule::Factorial { shift } => (factorial_markers(*shift), false),
            MarkerRule::Explicit(v) => {
                if v.is_empty() {
                    return Err(ScheduleError::NoMarkers);
                }
                if let Some(i) = v.windows(2).position(|w| w[1] <= w[0]) {
                    return Err(ScheduleError::MarkersNotIncreasing {
                        index: i + 2,
                        value: v[i + 1],
                    });
                }
                (v.clone(), true)
            }
        };
        let palette = vec![
            Level::uniform(2, Ratio::exact(1, 4)),
            Level::uniform(2, Ratio::exact(1, 8)),
            Level::uniform(2, Ratio::exact(1, 16)),
        ];
        Ok(Self {
            presentation: Presentation::ThreeRatio { markers },
            palette,
            plan: Plan::ThreeRatio {
                markers: values,
                open_tail,
            },
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    /// Distinct level values used by the schedule.
    pub fn palette(&self) -> &[Level] {
        &self.palette
    }

    /// Level `k` (1-based).
    ///
    /// Panics if `k == 0`.
    pub fn level_at(&self, k: u64) -> &Level {
        &self.palette[self.palette_index(k)]
    }

    /// Palette index of level `k` (1-based).
    ///
    /// Panics if `k == 0`.
    pub fn palette_index(&self, k: u64) -> usize {
        self.run_at(k).palette
    }

    /// The run of constant levels containing level `k`.
    ///
    /// Panics if `k == 0`.
    pub fn run_at(&self, k: u64) -> Run {
        assert!(k >= 1, "levels are numbered from 1");
        match &self.plan {
            Plan::Uniform => Run {
                palette: 0,
                last: u64::MAX,
            },
            Plan::Periodic { prefix, cycle } => {
                let plen = prefix.len() as u64;
                if k <= plen {
                    Run {
                        palette: prefix[(k - 1) as usize],
                        last: k,
                    }
                } else {
                    let pos = (k - plen - 1) % cycle.len() as u64;
                    Run {
                        palette: cycle[pos as usize],
                        last: k,
                    }
                }
            }
            Plan::Stages { stages, fixed_period } => stage_run(stages, *fixed_period, k),
            Plan::ThreeRatio { markers, open_tail } => three_ratio_run(markers, *open_tail, k),
        }
    }

    /// Sequential access to palette indices of levels `from, from + 1, ...`.
    pub fn cursor(&self, from: u64) -> LevelCursor<'_> {
        assert!(from >= 1, "levels are numbered from 1");
        LevelCursor {
            schedule: self,
            next: from,
            run: None,
        }
    }

    /// Palette indices of levels `from..=to`.
    pub fn tape(&self, from: u64, to: u64) -> Vec<usize> {
        if to < from {
            return Vec::new();
        }
        self.cursor(from).take((to - from + 1) as usize).collect()
    }

    /// `c_* = inf_{k,j} c_{k,j}`, exact over the finite presentation.
    pub fn c_star(&self) -> Ratio {
        self.palette
            .iter()
            .map(Level::min_ratio)
            .min_by(|a, b| a.value().total_cmp(&b.value()))
            .expect("palette is nonempty")
    }

    /// `sup_{k,j} c_{k,j}`.
    pub fn max_ratio(&self) -> Ratio {
        self.palette
            .iter()
            .map(Level::max_ratio)
            .max_by(|a, b| a.value().total_cmp(&b.value()))
            .expect("palette is nonempty")
    }

    pub fn max_branching(&self) -> usize {
        self.palette.iter().map(Level::n).max().unwrap_or(0)
    }

    /// Whether every level has equal ratios `c_{k,1} = ... = c_{k,n_k}`.
    pub fn has_uniform_levels(&self) -> bool {
        self.palette.iter().all(Level::is_uniform)
    }

    /// Number of window start positions `k = 0, 1, ...` over which a supremum
    /// over `k` is attained exactly, or `None` when no finite criterion exists.
    pub fn exact_start_count(&self) -> Option<u64> {
        match &self.plan {
            Plan::Uniform => Some(1),
            Plan::Periodic { prefix, cycle } => Some((prefix.len() + cycle.len()) as u64),
            Plan::Stages {
                stages,
                fixed_period: Some(period),
            } if stages.len() == 1 => Some(1.min(*period)),
            Plan::Stages {
                fixed_period: Some(period),
                ..
            } => Some(*period),
            _ => None,
        }
    }

    /// First level at which palette entry `idx` occurs, searching at most
    /// `limit` levels.
    pub fn first_occurrence(&self, idx: usize, limit: u64) -> Option<u64> {
        let mut k = 1;
        while k <= limit {
            let run = self.run_at(k);
            if run.palette == idx {
                return Some(k);
            }
            if run.last == u64::MAX {
                return None;
            }
            k = run.last + 1;
        }
        None
    }

    /// Marker values `p_1, p_2, ...` for the three-ratio family.
    pub fn markers(&self) -> Option<&[u64]> {
        match &self.plan {
            Plan::ThreeRatio { markers, .. } => Some(markers),
            _ => None,
        }
    }

    /// For the three-ratio family: the smallest window start `k` such that levels
    /// `k+1..=k+m` all carry the largest ratio `1/4`.
    pub fn quarter_run_start(&self, m: u64) -> Option<u64> {
        let markers = self.markers()?;
        let p1 = *markers.first()?;
        if m <= p1.saturating_add(1) {
            return Some(0);
        }
        // Run i has length i and starts after p_i.
        let i = usize::try_from(m).ok()?;
        markers.get(i - 1).copied().filter(|&p| p != u64::MAX)
    }
}

fn factorial_markers(shift: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let mut fact: u64 = 1;
    for j in 2..=(1 + shift as u64) {
        fact = match fact.checked_mul(j) {
            Some(f) => f,
            None => return vec![u64::MAX],
        };
    }
    // fact = (1 + shift)! = p_1
    let mut i: u64 = 1;
    loop {
        out.push(fact);
        i += 1;
        match fact.checked_mul(i + shift as u64) {
            Some(f) => fact = f,
            None => {
                out.push(u64::MAX);
                return out;
            }
        }
    }
}

fn three_ratio_run(markers: &[u64], open_tail: bool, k: u64) -> Run {
    let p1 = markers[0];
    if k <= p1 {
        let last = match markers.get(1) {
            Some(&p2) => p1.saturating_add(1).min(p2),
            None => p1.saturating_add(1),
        };
        return Run { palette: QUARTER, last };
    }
    // Largest 1-based i with p_i < k.
    let i = markers.partition_point(|&p| p < k);
    let p_i = markers[i - 1];
    let next = markers.get(i).copied();
    let block_end = match next {
        Some(p) => p,
        None if open_tail => u64::MAX,
        None => u64::MAX,
    };
    let run_end = p_i.saturating_add(i as u64).min(block_end);
    if k <= run_end {
        Run {
            palette: QUARTER,
            last: run_end,
        }
    } else {
        Run {
            palette: if i % 2 == 0 { EIGHTH } else { SIXTEENTH },
            last: block_end,
        }
    }
}

fn stage_run(stages: &[(LengthRule, usize)], fixed_period: Option<u64>, k: u64) -> Run {
    // Position of level k within the stage stream, 0-based.
    let mut pos = k - 1;
    let mut base = 0u64;
    if let Some(period) = fixed_period {
        let rounds = pos / period;
        base = rounds * period;
        pos -= base;
    }
    let mut round = 0u64;
    let mut offset = base;
    loop {
        for (rule, idx) in stages {
            let len = rule.length(round);
            if pos < len {
                return Run {
                    palette: *idx,
                    last: offset.saturating_add(len),
                };
            }
            pos -= len;
            offset = offset.saturating_add(len);
        }
        round += 1;
    }
}

/// Iterator over palette indices of consecutive levels; never ends.
#[derive(Clone, Debug)]
pub struct LevelCursor<'a> {
    schedule: &'a RatioSchedule,
    next: u64,
    run: Option<Run>,
}

impl LevelCursor<'_> {
    /// Level number the next call to `next` will report.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Palette index of the next level and how many levels (including it) the
    /// current run still covers. Does not advance.
    pub fn peek_run(&mut self) -> (usize, u64) {
        let run = self.current();
        (run.palette, run.last - self.next + 1)
    }

    /// Skip `count` levels.
    pub fn advance(&mut self, count: u64) {
        self.next += count;
        if let Some(run) = self.run {
            if self.next > run.last {
                self.run = None;
            }
        }
    }

    fn current(&mut self) -> Run {
        match self.run {
            Some(run) if self.next <= run.last => run,
            _ => {
                let run = self.schedule.run_at(self.next);
                self.run = Some(run);
                run
            }
        }
    }
}

impl Iterator for LevelCursor<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let run = self.current();
        self.next += 1;
        Some(run.palette)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> RatioSchedule {
        RatioSchedule::three_ratio(MarkerRule::default()).unwrap()
    }

    /// Hand enumeration of the blocks for p = (2, 6, 24, 120, ...):
    /// i=1: [3,3] quarter, [4,6] sixteenth; i=2: [7,8] quarter, [9,24] eighth;
    /// i=3: [25,27] quarter, [28,120] sixteenth; i=4: [121,124] quarter, ...
    fn brute_three_ratio(k: u64) -> usize {
        let p: Vec<u64> = (1..=8u64).map(|i| (1..=i + 1).product()).collect();
        if k <= p[0] {
            return QUARTER;
        }
        for i in 1..p.len() {
            if p[i - 1] < k && k <= p[i] {
                if k <= p[i - 1] + i as u64 {
                    return QUARTER;
                }
                return if i % 2 == 0 { EIGHTH } else { SIXTEENTH };
            }
        }
        unreachable!()
    }

    #[test]
    fn factorial_markers_start_at_two() {
        let s = example1();
        let m = s.markers().unwrap();
        assert_eq!(&m[..5], &[2, 6, 24, 120, 720]);
        assert_eq!(m[18], 2_432_902_008_176_640_000);
        assert_eq!(*m.last().unwrap(), u64::MAX);
    }

    #[test]
    fn three_ratio_blocks_by_hand() {
        let s = example1();
        let expect: &[(u64, usize)] = &[
            (1, QUARTER),
            (2, QUARTER),
            (3, QUARTER),
            (4, SIXTEENTH),
            (6, SIXTEENTH),
            (7, QUARTER),
            (8, QUARTER),
            (9, EIGHTH),
            (24, EIGHTH),
            (25, QUARTER),
            (27, QUARTER),
            (28, SIXTEENTH),
            (120, SIXTEENTH),
            (121, QUARTER),
            (124, QUARTER),
            (125, EIGHTH),
        ];
        for &(k, idx) in expect {
            assert_eq!(s.palette_index(k), idx, "level {k}");
        }
        assert_eq!(s.level_at(4).ratios()[0], Ratio::exact(1, 16));
        assert_eq!(s.level_at(4).n(), 2);
    }

    #[test]
    fn three_ratio_matches_brute_force_and_cursor() {
        let s = example1();
        let tape = s.tape(1, 40_320);
        for (i, &idx) in tape.iter().enumerate() {
            let k = i as u64 + 1;
            assert_eq!(idx, brute_three_ratio(k), "level {k}");
        }
    }

    #[test]
    fn quarter_runs_sit_after_markers() {
        let s = example1();
        assert_eq!(s.quarter_run_start(3), Some(0));
        assert_eq!(s.quarter_run_start(8), Some(362_880));
        for k in 362_881..=362_888 {
            assert_eq!(s.palette_index(k), QUARTER);
        }
        assert_ne!(s.palette_index(362_889), QUARTER);
        assert_ne!(s.palette_index(362_880), QUARTER);
    }

    #[test]
    fn periodic_indexing() {
        let l1 = Level::uniform(2, Ratio::exact(1, 3));
        let l2 = Level::uniform(2, Ratio::exact(1, 4));
        let l3 = Level::uniform(3, Ratio::exact(1, 5));
        let s = RatioSchedule::eventually_periodic(vec![l1.clone()], vec![l2.clone(), l3.clone()]).unwrap();
        assert_eq!(s.level_at(1), &l1);
        assert_eq!(s.level_at(2), &l2);
        assert_eq!(s.level_at(3), &l3);
        assert_eq!(s.level_at(4), &l2);
        assert_eq!(s.level_at(5), &l3);
        assert_eq!(s.exact_start_count(), Some(3));
    }

    #[test]
    fn uniform_is_constant_far_out() {
        let s = RatioSchedule::uniform(2, Ratio::exact(1, 3));
        assert_eq!(s.level_at(1_000_000).ratios(), &[Ratio::exact(1, 3); 2]);
    }

    #[test]
    fn stage_programs_cycle_with_growing_lengths() {
        let a = Level::uniform(2, Ratio::exact(1, 4));
        let b = Level::uniform(2, Ratio::exact(1, 8));
        let s = RatioSchedule::block_program(vec![
            Stage {
                length: LengthRule::Fixed(1),
                level: a.clone(),
            },
            Stage {
                length: LengthRule::Linear { base: 1, step: 1 },
                level: b.clone(),
            },
        ])
        .unwrap();
        // round 0: a b ; round 1: a b b ; round 2: a b b b
        let expect = [0, 1, 0, 1, 1, 0, 1, 1, 1, 0];
        assert_eq!(s.tape(1, 10), expect);
        for k in 1..=10 {
            assert_eq!(s.palette_index(k), expect[k as usize - 1]);
        }
    }

    #[test]
    fn fixed_stage_programs_use_period_shortcut() {
        let a = Level::uniform(2, Ratio::exact(1, 4));
        let b = Level::uniform(2, Ratio::exact(1, 8));
        let s = RatioSchedule::block_program(vec![
            Stage {
                length: LengthRule::Fixed(2),
                level: a,
            },
            Stage {
                length: LengthRule::Fixed(3),
                level: b,
            },
        ])
        .unwrap();
        assert_eq!(s.palette_index(1_000_000_001), 0);
        assert_eq!(s.palette_index(1_000_000_003), 1);
        assert_eq!(s.exact_start_count(), Some(5));
    }

    #[test]
    fn explicit_markers_extend_last_tail() {
        let s = RatioSchedule::three_ratio(MarkerRule::Explicit(vec![2, 6])).unwrap();
        assert_eq!(s.palette_index(7), QUARTER);
        assert_eq!(s.palette_index(8), QUARTER);
        assert_eq!(s.palette_index(9), EIGHTH);
        assert_eq!(s.palette_index(1 << 40), EIGHTH);
        assert!(RatioSchedule::three_ratio(MarkerRule::Explicit(vec![3, 3])).is_err());
    }

    #[test]
    fn c_star_over_palette() {
        assert_eq!(example1().c_star(), Ratio::exact(1, 16));
        let s = RatioSchedule::alternating(
            Level::uniform(2, Ratio::exact(1, 2)),
            Level::uniform(2, Ratio::exact(1, 5)),
        );
        assert_eq!(s.c_star(), Ratio::exact(1, 5));
    }
}
