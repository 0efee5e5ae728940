use super::ratio::Ratio;
use super::schedule::RatioSchedule;

/// A Moran construction in `R^d` whose initial set has diameter 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MoranSpec {
    pub schedule: RatioSchedule,
    pub d: u32,
}

impl MoranSpec {
    pub fn new(schedule: RatioSchedule, d: u32) -> Self {
        Self { schedule, d }
    }

    /// One-dimensional spec, the common case.
    pub fn line(schedule: RatioSchedule) -> Self {
        Self::new(schedule, 1)
    }

    pub fn c_star(&self) -> Ratio {
        self.schedule.c_star()
    }
}

/// Perturbation amplitudes `a_k`, summable by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    /// `a_k = amplitude * decay^k`
    Geometric { amplitude: f64, decay: f64 },
    /// `a_1, ..., a_n` followed by zeros.
    Finite(Vec<f64>),
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation::Finite(Vec::new())
    }

    /// `a_k` for `k >= 1`.
    pub fn at(&self, k: u64) -> f64 {
        match self {
            Perturbation::Geometric { amplitude, decay } => {
                let k = k.min(i32::MAX as u64) as i32;
                amplitude * decay.powi(k)
            }
            Perturbation::Finite(v) => usize::try_from(k)
                .ok()
                .and_then(|k| k.checked_sub(1))
                .and_then(|i| v.get(i))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// `sup_k a_k`.
    pub fn sup(&self) -> f64 {
        match self {
            Perturbation::Geometric { amplitude, decay } => amplitude * decay,
            Perturbation::Finite(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Last level at which `a_k` can exceed `floor`; beyond it the perturbation is
    /// treated as zero for validation.
    pub fn effective_support(&self, floor: f64) -> u64 {
        match self {
            Perturbation::Geometric { amplitude, decay } => {
                if *amplitude <= floor || *decay <= 0.0 {
                    0
                } else {
                    ((floor / amplitude).ln() / decay.ln()).ceil().max(0.0) as u64
                }
            }
            Perturbation::Finite(v) => v.len() as u64,
        }
    }
}

/// A Cantor-like construction: level `k` has `n_k` children whose length
/// ratios lie in `[c_k(1 - a_k), c_k(1 + a_k)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorLikeSpec {
    pub schedule: RatioSchedule,
    pub perturbation: Perturbation,
}

impl CantorLikeSpec {
    pub fn new(schedule: RatioSchedule, perturbation: Perturbation) -> Self {
        Self { schedule, perturbation }
    }

    /// `(n_k, c_k)`; the first ratio of the level stands for the whole level.
    pub fn level(&self, k: u64) -> (usize, Ratio) {
        let level = self.schedule.level_at(k);
        (level.n(), level.ratios()[0])
    }

    /// Unperturbed ratios viewed as a one-dimensional Moran spec.
    pub fn as_moran(&self) -> MoranSpec {
        MoranSpec::line(self.schedule.clone())
    }
}

/// Either kind of specification, as read from a spec file.
#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    Moran(MoranSpec),
    CantorLike(CantorLikeSpec),
}

impl SetSpec {
    pub fn schedule(&self) -> &RatioSchedule {
        match self {
            SetSpec::Moran(m) => &m.schedule,
            SetSpec::CantorLike(c) => &c.schedule,
        }
    }

    pub fn dimension(&self) -> u32 {
        match self {
            SetSpec::Moran(m) => m.d,
            SetSpec::CantorLike(_) => 1,
        }
    }

    pub fn c_star(&self) -> Ratio {
        self.schedule().c_star()
    }

    /// The Moran view used by the symbolic and dimension kernels.
    pub fn moran(&self) -> MoranSpec {
        match self {
            SetSpec::Moran(m) => m.clone(),
            SetSpec::CantorLike(c) => c.as_moran(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SetSpec::Moran(_) => "moran",
            SetSpec::CantorLike(_) => "cantor_like",
        }
    }
}

impl From<MoranSpec> for SetSpec {
    fn from(m: MoranSpec) -> Self {
        SetSpec::Moran(m)
    }
}

impl From<CantorLikeSpec> for SetSpec {
    fn from(c: CantorLikeSpec) -> Self {
        SetSpec::CantorLike(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_lookup() {
        let p = Perturbation::Geometric {
            amplitude: 0.1,
            decay: 0.5,
        };
        assert!((p.at(1) - 0.05).abs() < 1e-18);
        assert!((p.at(3) - 0.0125).abs() < 1e-18);
        assert!(p.at(u64::MAX) == 0.0);
        let q = Perturbation::Finite(vec![0.2, 0.1]);
        assert_eq!(q.at(2), 0.1);
        assert_eq!(q.at(3), 0.0);
        assert_eq!(q.sup(), 0.2);
        assert_eq!(p.effective_support(1e-16), 50);
    }
}
