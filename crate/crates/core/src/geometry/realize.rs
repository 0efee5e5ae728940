use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::intervals::{IntervalSet, RealizationMeta};
use super::GeometryError;
use crate::numeric::mix64;
use crate::spec_model::{spec_hash, MoranSpec, SetSpec};

/// How children are laid out inside their parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Placement {
    /// A fraction `γ ∈ (0, 1]` of the slack goes into equal gaps between
    /// siblings; the rest is split evenly before the first and after the last child.
    UniformGap { gamma: f64 },
    /// Children flush from the left end, the slack at the right.
    LeftPacked,
}

impl Default for Placement {
    fn default() -> Self {
        Placement::UniformGap { gamma: 1.0 }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::UniformGap { gamma } => write!(f, "uniform-gap({gamma})"),
            Placement::LeftPacked => f.write_str("left-packed"),
        }
    }
}

impl FromStr for Placement {
    type Err = GeometryError;

    /// `left-packed`, `uniform-gap`, `uniform-gap(0.5)` or `uniform-gap:0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "left-packed" {
            return Ok(Placement::LeftPacked);
        }
        let rest = s
            .strip_prefix("uniform-gap")
            .ok_or_else(|| GeometryError::BadPlacement(format!("unknown placement {s:?}")))?;
        let gamma = if rest.is_empty() {
            1.0
        } else {
            let inner = rest
                .strip_prefix(':')
                .or_else(|| rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
                .ok_or_else(|| GeometryError::BadPlacement(format!("cannot read gap fraction in {s:?}")))?;
            inner
                .parse::<f64>()
                .map_err(|_| GeometryError::BadPlacement(format!("gap fraction {inner:?} is not a number")))?
        };
        Placement::uniform_gap(gamma)
    }
}

impl Placement {
    pub fn uniform_gap(gamma: f64) -> Result<Self, GeometryError> {
        if gamma > 0.0 && gamma <= 1.0 {
            Ok(Placement::UniformGap { gamma })
        } else {
            Err(GeometryError::BadPlacement(format!(
                "gap fraction γ = {gamma} must lie in (0, 1]"
            )))
        }
    }
}

/// Signs `σ_j` of the Cantor-like perturbation `c_k (1 + σ_j a_k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignRule {
    /// `-1, +1, -1, ...` across siblings.
    #[default]
    Alternating,
    /// Uniform in `[-1, 1]`, drawn per node from a seed and the node's address.
    Seeded(u64),
}

/// Child `(offset, length)` pairs inside a parent of unit length.
pub(crate) fn layout(ratios: &[f64], placement: Placement, level: u64) -> Result<Vec<(f64, f64)>, GeometryError> {
    let total: f64 = ratios.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(GeometryError::Infeasible { level, total });
    }
    let slack = (1.0 - total).max(0.0);
    let (lead, gap) = match placement {
        Placement::LeftPacked => (0.0, 0.0),
        Placement::UniformGap { gamma } if ratios.len() > 1 => {
            ((1.0 - gamma) * slack / 2.0, gamma * slack / (ratios.len() - 1) as f64)
        }
        Placement::UniformGap { .. } => (slack / 2.0, 0.0),
    };
    let mut x = lead;
    Ok(ratios
        .iter()
        .map(|&r| {
            let child = (x, r);
            x += r + gap;
            child
        })
        .collect())
}

const ROOT_HASH: u64 = 0x0005_eed0_fa11_5e75;

#[derive(Clone, Copy, Debug)]
struct Node {
    a: f64,
    len: f64,
    hash: u64,
}

/// Level-by-level realization of a one-dimensional spec inside `[0, 1]`.
pub struct Realizer<'a> {
    spec: &'a SetSpec,
    placement: Placement,
    signs: SignRule,
    budget: usize,
    depth: u64,
    nodes: Vec<Node>,
}

impl<'a> Realizer<'a> {
    pub fn new(spec: &'a SetSpec, placement: Placement, signs: SignRule, budget: usize) -> Result<Self, GeometryError> {
        if spec.dimension() != 1 {
            return Err(GeometryError::NotOneDimensional(spec.dimension()));
        }
        Ok(Self {
            spec,
            placement,
            signs,
            budget,
            depth: 0,
            nodes: vec![Node {
                a: 0.0,
                len: 1.0,
                hash: ROOT_HASH,
            }],
        })
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn max_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.len).fold(0.0, f64::max)
    }

    /// Child length ratios of a node at level `k`.
    fn child_ratios(&self, k: u64, hash: u64) -> Vec<f64> {
        let level = self.spec.schedule().level_at(k);
        match self.spec {
            SetSpec::Moran(_) => level.ratios().iter().map(|r| r.value()).collect(),
            SetSpec::CantorLike(c) => {
                let a = c.perturbation.at(k);
                let base = level.ratios()[0].value();
                match self.signs {
                    SignRule::Alternating => (0..level.n())
                        .map(|j| base * (1.0 + if j % 2 == 0 { -a } else { a }))
                        .collect(),
                    SignRule::Seeded(seed) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ hash));
                        (0..level.n())
                            .map(|_| base * (1.0 + rng.random_range(-1.0..=1.0) * a))
                            .collect()
                    }
                }
            }
        }
    }

    /// Replace the current level by its children.
    pub fn step(&mut self) -> Result<(), GeometryError> {
        let k = self.depth + 1;
        let n = self.spec.schedule().level_at(k).n();
        let count = self.nodes.len().checked_mul(n).filter(|&c| c <= self.budget);
        let count = count.ok_or(GeometryError::Budget {
            budget: self.budget,
            depth: k,
        })?;
        let uniform_layout = match self.spec {
            SetSpec::Moran(_) => Some(layout(&self.child_ratios(k, 0), self.placement, k)?),
            SetSpec::CantorLike(_) => None,
        };
        let mut next = Vec::with_capacity(count);
        for node in &self.nodes {
            let own;
            let children = match &uniform_layout {
                Some(l) => l,
                None => {
                    own = layout(&self.child_ratios(k, node.hash), self.placement, k)?;
                    &own
                }
            };
            for (j, &(off, r)) in children.iter().enumerate() {
                next.push(Node {
                    a: node.a + off * node.len,
                    len: r * node.len,
                    hash: mix64(node.hash ^ (j as u64 + 1)),
                });
            }
        }
        self.nodes = next;
        self.depth = k;
        Ok(())
    }

    pub fn current(&self) -> IntervalSet {
        let intervals = self.nodes.iter().map(|n| (n.a, n.a + n.len)).collect();
        let meta = RealizationMeta {
            spec_hash: spec_hash(self.spec),
            placement: self.placement.to_string(),
            seed: match (self.spec, self.signs) {
                (SetSpec::CantorLike(_), SignRule::Seeded(s)) => Some(s),
                _ => None,
            },
        };
        IntervalSet::new(intervals, self.depth, meta).expect("layout keeps intervals sorted and disjoint")
    }
}

/// The `n_1⋯n_k` level-`depth` intervals of a one-dimensional spec.
pub fn realize_level(
    spec: &SetSpec,
    placement: Placement,
    depth: u64,
    signs: SignRule,
    budget: usize,
) -> Result<IntervalSet, GeometryError> {
    let mut r = Realizer::new(spec, placement, signs, budget)?;
    while r.depth() < depth {
        r.step()?;
    }
    Ok(r.current())
}

/// `J_w` for the word `w` (1-based letters from the root) of a Moran spec.
pub fn word_interval(spec: &MoranSpec, placement: Placement, letters: &[u32]) -> Result<(f64, f64), GeometryError> {
    let (mut a, mut len) = (0.0, 1.0);
    for (i, &l) in letters.iter().enumerate() {
        let k = i as u64 + 1;
        let ratios: Vec<f64> = spec.schedule.level_at(k).ratios().iter().map(|r| r.value()).collect();
        let (off, r) = layout(&ratios, placement, k)?[l as usize - 1];
        a += off * len;
        len *= r;
    }
    Ok((a, a + len))
}

/// A point of the set: the left end of a random basic interval shorter than `min_len`.
pub fn random_point(
    spec: &MoranSpec,
    placement: Placement,
    rng: &mut impl Rng,
    min_len: f64,
) -> Result<f64, GeometryError> {
    let (mut a, mut len) = (0.0, 1.0);
    let mut k = 0;
    while len >= min_len {
        k += 1;
        let ratios: Vec<f64> = spec.schedule.level_at(k).ratios().iter().map(|r| r.value()).collect();
        let children = layout(&ratios, placement, k)?;
        let (off, r) = children[rng.random_range(0..children.len())];
        a += off * len;
        len *= r;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_model::{CantorLikeSpec, Perturbation, Ratio, RatioSchedule};

    fn middle_third() -> SetSpec {
        MoranSpec::line(RatioSchedule::uniform(2, Ratio::exact(1, 3))).into()
    }

    #[test]
    fn middle_third_layout() {
        let s = realize_level(&middle_third(), Placement::default(), 1, SignRule::Alternating, 100).unwrap();
        let iv = s.intervals();
        assert_eq!(iv.len(), 2);
        assert_eq!(iv[0], (0.0, 1.0 / 3.0));
        assert!((iv[1].0 - 2.0 / 3.0).abs() < 1e-15 && (iv[1].1 - 1.0).abs() < 1e-15);
        let s = realize_level(&middle_third(), Placement::default(), 2, SignRule::Alternating, 100).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.intervals()[0].0, 0.0);
        assert!((s.intervals()[0].1 - 1.0 / 9.0).abs() < 1e-16);
        for (a, b) in s.intervals() {
            assert!(((b - a) - 1.0 / 9.0).abs() < 1e-14 / 9.0);
        }
    }

    #[test]
    fn cantor_alternating_band() {
        let spec: SetSpec = CantorLikeSpec::new(
            RatioSchedule::uniform(2, Ratio::exact(1, 4)),
            Perturbation::Geometric {
                amplitude: 0.1,
                decay: 0.5,
            },
        )
        .into();
        let s = realize_level(&spec, Placement::default(), 1, SignRule::Alternating, 100).unwrap();
        let lens: Vec<f64> = s.intervals().iter().map(|(a, b)| b - a).collect();
        assert!((lens[0] - 0.25 * 0.95).abs() < 1e-15);
        assert!((lens[1] - 0.25 * 1.05).abs() < 1e-15);
    }

    #[test]
    fn seeded_signs_are_reproducible_and_in_band() {
        let spec: SetSpec = CantorLikeSpec::new(
            RatioSchedule::uniform(2, Ratio::exact(1, 4)),
            Perturbation::Geometric {
                amplitude: 0.2,
                decay: 0.5,
            },
        )
        .into();
        let a = realize_level(&spec, Placement::default(), 6, SignRule::Seeded(9), 1000).unwrap();
        let b = realize_level(&spec, Placement::default(), 6, SignRule::Seeded(9), 1000).unwrap();
        let c = realize_level(&spec, Placement::default(), 6, SignRule::Seeded(10), 1000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.meta().seed, Some(9));
    }

    #[test]
    fn left_packed_halves_fill_the_unit_interval() {
        let spec: SetSpec = MoranSpec::line(RatioSchedule::uniform(2, Ratio::exact(1, 2))).into();
        let s = realize_level(&spec, Placement::LeftPacked, 3, SignRule::Alternating, 100).unwrap();
        assert!(s.intervals().windows(2).all(|w| w[0].1 == w[1].0));
        assert_eq!(s.intervals().last().unwrap().1, 1.0);
    }

    #[test]
    fn partial_gap_centres_children() {
        let l = layout(&[0.25, 0.25], Placement::UniformGap { gamma: 0.5 }, 1).unwrap();
        assert_eq!(l, vec![(0.125, 0.25), (0.625, 0.25)]);
    }

    #[test]
    fn budget_and_dimension_guards() {
        let err = realize_level(&middle_third(), Placement::default(), 10, SignRule::Alternating, 100).unwrap_err();
        assert!(matches!(err, GeometryError::Budget { depth: 7, .. }));
        let plane: SetSpec = MoranSpec::new(RatioSchedule::uniform(3, Ratio::exact(1, 2)), 2).into();
        assert!(matches!(
            Realizer::new(&plane, Placement::default(), SignRule::Alternating, 10),
            Err(GeometryError::NotOneDimensional(2))
        ));
    }

    #[test]
    fn placement_parsing() {
        assert_eq!("left-packed".parse::<Placement>().unwrap(), Placement::LeftPacked);
        assert_eq!(
            "uniform-gap".parse::<Placement>().unwrap(),
            Placement::UniformGap { gamma: 1.0 }
        );
        assert_eq!(
            "uniform-gap(0.5)".parse::<Placement>().unwrap(),
            Placement::UniformGap { gamma: 0.5 }
        );
        assert_eq!(
            "uniform-gap:0.25".parse::<Placement>().unwrap(),
            Placement::UniformGap { gamma: 0.25 }
        );
        assert!("uniform-gap(0)".parse::<Placement>().is_err());
        let p = Placement::UniformGap { gamma: 0.5 };
        assert_eq!(p.to_string().parse::<Placement>().unwrap(), p);
    }

    #[test]
    fn word_interval_matches_realization() {
        let spec = MoranSpec::line(RatioSchedule::uniform(2, Ratio::exact(1, 3)));
        let set = realize_level(
            &spec.clone().into(),
            Placement::default(),
            3,
            SignRule::Alternating,
            100,
        )
        .unwrap();
        let (a, b) = word_interval(&spec, Placement::default(), &[2, 1, 2]).unwrap();
        // Address 2.1.2 is index 0b101 = 5 in left-to-right order.
        let (ra, rb) = set.intervals()[5];
        assert!((a - ra).abs() < 1e-15 && (b - rb).abs() < 1e-15);
    }
}
