//! Cantor-type sets built by removing one open middle interval from every
//! interval of the previous level, and their finite endpoint samples.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::Exact;
use super::MetricError;

/// How the removed middle interval is sized at each level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GapRule {
    /// Remove the middle `ratio` fraction of each parent (1/3 gives the middle-third set).
    Ratio { ratio: Exact },
    /// Every gap at level k has diameter 1/(10 k^k).
    FastGap,
    /// Explicit gap diameters; `gaps[k-1][i]` is removed from parent interval `i` at level `k`.
    Custom { gaps: Vec<Vec<Exact>> },
}

impl GapRule {
    pub fn middle_third() -> Self {
        GapRule::Ratio { ratio: Exact::new(1, 3) }
    }

    /// Short name used in provenance strings and CLI flags.
    pub fn label(&self) -> String {
        match self {
            GapRule::Ratio { ratio } if *ratio == Exact::new(1, 3) => "third".to_string(),
            GapRule::Ratio { ratio } => format!("ratio:{ratio}"),
            GapRule::FastGap => "fastgap".to_string(),
            GapRule::Custom { .. } => "custom".to_string(),
        }
    }

    /// Diameter of the gap removed from parent `index` (0-based) at `level` (1-based),
    /// given the parent's width.
    pub fn gap(&self, level: u32, index: usize, parent_width: &BigRational) -> Result<BigRational, MetricError> {
        let g = match self {
            GapRule::Ratio { ratio } => parent_width * &ratio.0,
            GapRule::FastGap => {
                let k = BigInt::from(level);
                let denom = BigInt::from(10) * num_traits::pow(k, level as usize);
                BigRational::new(BigInt::one(), denom)
            }
            GapRule::Custom { gaps } => {
                let row = gaps.get(level as usize - 1).ok_or_else(|| MetricError::InvalidGap {
                    level,
                    index,
                    reason: "no gap row for this level".into(),
                })?;
                let v = if row.len() == 1 { &row[0] } else { row.get(index).ok_or_else(|| MetricError::InvalidGap {
                    level,
                    index,
                    reason: format!("row has {} entries, expected 1 or {}", row.len(), 1usize << (level - 1)),
                })? };
                v.0.clone()
            }
        };
        if !g.is_positive() || &g >= parent_width {
            return Err(MetricError::InvalidGap {
                level,
                index,
                reason: format!("gap {} must lie strictly between 0 and the parent width {}", Exact(g), Exact(parent_width.clone())),
            });
        }
        Ok(g)
    }
}

/// A gap rule together with the number of construction levels to sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub gaps: GapRule,
    pub levels: u32,
}

impl CantorSpec {
    pub fn middle_third(levels: u32) -> Self {
        CantorSpec { gaps: GapRule::middle_third(), levels }
    }

    pub fn fast_gap(levels: u32) -> Self {
        CantorSpec { gaps: GapRule::FastGap, levels }
    }
}

/// A closed interval with exact endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub left: BigRational,
    pub right: BigRational,
}

impl Interval {
    pub fn width(&self) -> BigRational {
        &self.right - &self.left
    }
}

/// All construction intervals up to the sampled level.
#[derive(Clone, Debug)]
pub struct CantorSample {
    pub spec: CantorSpec,
    /// `levels[k]` holds the 2^k intervals of level k, left to right.
    pub levels: Vec<Vec<Interval>>,
}

/// Largest level we are willing to materialize (2^21 intervals at the bottom level).
pub const MAX_CANTOR_LEVELS: u32 = 20;

impl CantorSample {
    pub fn build(spec: &CantorSpec) -> Result<Self, MetricError> {
        if spec.levels > MAX_CANTOR_LEVELS {
            return Err(MetricError::TooLarge { points: 1usize << (spec.levels + 1).min(62), limit: 1usize << (MAX_CANTOR_LEVELS + 1) });
        }
        let mut levels = vec![vec![Interval { left: BigRational::zero(), right: BigRational::one() }]];
        let two = BigRational::from_integer(BigInt::from(2));
        for k in 1..=spec.levels {
            let prev = levels.last().expect("level 0 present");
            let mut next = Vec::with_capacity(prev.len() * 2);
            for (i, parent) in prev.iter().enumerate() {
                let w = parent.width();
                let g = spec.gaps.gap(k, i, &w)?;
                let side = (&w - &g) / &two;
                next.push(Interval { left: parent.left.clone(), right: &parent.left + &side });
                next.push(Interval { left: &parent.right - &side, right: parent.right.clone() });
            }
            levels.push(next);
        }
        Ok(CantorSample { spec: spec.clone(), levels })
    }

    /// Sorted endpoints of the deepest level: 2^(m+1) exact points.
    pub fn endpoints(&self) -> Vec<BigRational> {
        let last = self.levels.last().expect("level 0 present");
        let mut out = Vec::with_capacity(last.len() * 2);
        for iv in last {
            out.push(iv.left.clone());
            out.push(iv.right.clone());
        }
        out
    }

    /// Smallest interval width at `level`.
    pub fn min_width(&self, level: u32) -> BigRational {
        self.levels[level as usize].iter().map(Interval::width).min().expect("nonempty level")
    }

    /// Largest interval width at `level`.
    pub fn max_width(&self, level: u32) -> BigRational {
        self.levels[level as usize].iter().map(Interval::width).max().expect("nonempty level")
    }

    /// Smallest gap between consecutive intervals at `level` (level >= 1).
    pub fn min_gap(&self, level: u32) -> BigRational {
        let ivs = &self.levels[level as usize];
        ivs.windows(2).map(|w| &w[1].left - &w[0].right).min().expect("level >= 1 has two intervals")
    }

    /// Width bound used when the gap at level k is 1/(10 k^k): every level-k width is at least 3^{-k}.
    pub fn widths_dominate_powers_of_three(&self) -> Vec<(u32, bool)> {
        (0..=self.spec.levels)
            .map(|k| {
                let bound = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(3), k as usize));
                (k, self.min_width(k) >= bound)
            })
            .collect()
    }

    /// Index range of deepest-level endpoints lying in interval `i` of level `k`.
    pub fn trace_range(&self, k: u32, i: usize) -> std::ops::Range<usize> {
        let block = 1usize << (self.spec.levels - k + 1);
        i * block..(i + 1) * block
    }

    /// Width of the full set's sampled piece, for sanity: all intervals have nonnegative width.
    pub fn total_length(&self, level: u32) -> BigRational {
        self.levels[level as usize].iter().map(Interval::width).fold(BigRational::zero(), |a, b| a + b)
    }

    /// True when consecutive intervals at every level are disjoint and ordered.
    pub fn is_well_ordered(&self) -> bool {
        self.levels.iter().all(|lvl| lvl.windows(2).all(|w| w[0].right < w[1].left) && lvl.iter().all(|iv| !iv.width().is_negative()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn middle_third_level_one() {
        let s = CantorSample::build(&CantorSpec::middle_third(1)).unwrap();
        assert_eq!(s.endpoints(), vec![r(0, 1), r(1, 3), r(2, 3), r(1, 1)]);
    }

    #[test]
    fn middle_third_widths_are_powers_of_three() {
        let s = CantorSample::build(&CantorSpec::middle_third(6)).unwrap();
        for k in 0..=6u32 {
            assert_eq!(s.min_width(k), r(1, 3i64.pow(k)));
            assert_eq!(s.max_width(k), r(1, 3i64.pow(k)));
        }
        assert_eq!(s.endpoints().len(), 128);
        assert!(s.is_well_ordered());
    }

    #[test]
    fn fast_gap_first_levels() {
        let s = CantorSample::build(&CantorSpec::fast_gap(2)).unwrap();
        // level 1: gap 1/10, each side (1 - 1/10)/2 = 9/20
        assert_eq!(s.levels[1][0].right, r(9, 20));
        assert_eq!(s.levels[1][1].left, r(11, 20));
        // level 2: gap 1/40, side (9/20 - 1/40)/2 = 17/80
        assert_eq!(s.levels[2][0].width(), r(17, 80));
        assert!(s.widths_dominate_powers_of_three().iter().all(|(_, ok)| *ok));
    }

    #[test]
    fn trace_ranges_partition_endpoints() {
        let s = CantorSample::build(&CantorSpec::middle_third(4)).unwrap();
        let pts = s.endpoints();
        for i in 0..4 {
            let iv = &s.levels[2][i];
            for j in s.trace_range(2, i) {
                assert!(pts[j] >= iv.left && pts[j] <= iv.right);
            }
        }
    }

    #[test]
    fn rejects_oversized_custom_gap() {
        let spec = CantorSpec { gaps: GapRule::Custom { gaps: vec![vec![Exact::new(3, 2)]] }, levels: 1 };
        assert!(matches!(CantorSample::build(&spec), Err(MetricError::InvalidGap { level: 1, .. })));
        let zero = CantorSpec { gaps: GapRule::Ratio { ratio: Exact::zero() }, levels: 1 };
        assert!(CantorSample::build(&zero).is_err());
    }

    #[test]
    fn custom_rows_may_vary_per_interval() {
        let spec = CantorSpec {
            gaps: GapRule::Custom { gaps: vec![vec![Exact::new(1, 2)], vec![Exact::new(1, 8), Exact::new(1, 16)]] },
            levels: 2,
        };
        let s = CantorSample::build(&spec).unwrap();
        assert_eq!(s.levels[2][2].width(), r(3, 32));
        assert_eq!(s.levels[2][0].width(), r(1, 16));
    }
}
