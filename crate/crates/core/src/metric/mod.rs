//! Finite metric spaces: construction, normalization, axiom checks and
//! empirical doubling constants.

mod builders;
pub mod cantor;
pub mod rational;
mod space;

pub use builders::{build_cantor, build_cube_grid, build_harmonic, build_line, build_product_grid, build_random};
pub use cantor::{CantorSample, CantorSpec, GapRule, Interval};
pub use rational::Exact;
pub use space::{ExactDump, FiniteMetricSpace, Provenance, RawMetric, SpaceDump, MAX_COORD_POINTS, MAX_MATRIX_POINTS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("invalid gap at level {level}, interval {index}: {reason}")]
    InvalidGap { level: u32, index: usize, reason: String },
    #[error("space of {points} points exceeds the limit of {limit}")]
    TooLarge { points: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("space has zero diameter")]
    DegenerateDiameter,
    #[error("{kind} axiom fails at points {points:?}: {detail}")]
    AxiomViolation { kind: String, points: Vec<usize>, detail: String },
    #[error("malformed space dump: {0}")]
    Parse(String),
}

/// Relative slack allowed in the triangle inequality for floating-point distances.
pub const TRIANGLE_TOLERANCE: f64 = 1e-12;

/// Checks the metric axioms: exhaustively on spaces up to `exhaustive_limit`
/// points, and on `samples` seeded random triples otherwise.
pub fn check_metric_axioms(space: &FiniteMetricSpace, exhaustive_limit: usize, samples: usize, seed: u64) -> Result<(), MetricError> {
    let n = space.len();
    let check = |x: usize, y: usize, z: usize| -> Result<(), MetricError> {
        let (a, b, c) = (space.dist(x, z), space.dist(x, y), space.dist(y, z));
        if a > (b + c) * (1.0 + TRIANGLE_TOLERANCE) {
            return Err(MetricError::AxiomViolation {
                kind: "triangle".into(),
                points: vec![x, y, z],
                detail: format!("d(x,z) = {a} > d(x,y) + d(y,z) = {}", b + c),
            });
        }
        Ok(())
    };
    for x in 0..n {
        for y in 0..x {
            let (a, b) = (space.dist(x, y), space.dist(y, x));
            if a != b {
                return Err(MetricError::AxiomViolation { kind: "symmetry".into(), points: vec![y, x], detail: format!("{a} != {b}") });
            }
            if !(a > 0.0) {
                return Err(MetricError::AxiomViolation { kind: "positivity".into(), points: vec![y, x], detail: format!("distance {a}") });
            }
        }
    }
    if n <= exhaustive_limit {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    check(x, y, z)?;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
        }
    }
    Ok(())
}

/// Empirical doubling constant with the ball that attains it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub n_hat: usize,
    pub center: usize,
    pub radius: f64,
}

/// Number of radius-`r/2` balls a greedy net needs to cover `B(x, r)`.
fn half_ball_cover(space: &FiniteMetricSpace, x: usize, r: f64) -> usize {
    let ball = space.ball(x, r);
    let mut centers: Vec<usize> = Vec::new();
    for &y in &ball {
        if centers.iter().all(|&c| space.dist(c, y) > r / 2.0) {
            centers.push(y);
        }
    }
    centers.len()
}

/// Maximum, over all centers and the given radii, of the greedy half-radius
/// cover size of a ball. Adding radii can only raise the estimate.
pub fn doubling_estimate(space: &FiniteMetricSpace, scales: &[f64]) -> DoublingEstimate {
    let mut best = DoublingEstimate { n_hat: 1, center: 0, radius: 0.0 };
    for &r in scales {
        for x in 0..space.len() {
            let k = half_ball_cover(space, x, r);
            if k > best.n_hat {
                best = DoublingEstimate { n_hat: k, center: x, radius: r };
            }
        }
    }
    best
}

/// Radii `2^-k` for `k = 0..count`.
pub fn dyadic_scales(count: u32) -> Vec<f64> {
    (0..count).map(|k| (-(k as f64)).exp2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axioms_hold_for_builders() {
        let c = build_cantor(&CantorSpec::middle_third(3)).unwrap();
        check_metric_axioms(&c, 64, 0, 1).unwrap();
        let p = build_product_grid(&CantorSpec::middle_third(3), 1, 8).unwrap();
        check_metric_axioms(&p, 16, 20_000, 9).unwrap();
        let h = build_harmonic(20).unwrap();
        check_metric_axioms(&h, 64, 0, 1).unwrap();
    }

    #[test]
    fn broken_matrix_is_rejected() {
        let m = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        let s = FiniteMetricSpace::from_matrix(3, m, Provenance::Explicit { label: "bad".into() }).unwrap();
        let err = check_metric_axioms(&s, 10, 0, 0).unwrap_err();
        assert!(matches!(err, MetricError::AxiomViolation { ref kind, .. } if kind == "triangle"));
        let asym = vec![0.0, 1.0, 2.0, 0.0];
        assert!(FiniteMetricSpace::from_matrix(2, asym, Provenance::Explicit { label: "asym".into() }).is_err());
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = build_random(8, 2, 3).unwrap();
        let t = s.normalize().unwrap();
        assert_eq!(s, t);
        let raw = FiniteMetricSpace::from_matrix(2, vec![0.0, 4.0, 4.0, 0.0], Provenance::Explicit { label: "x".into() }).unwrap();
        let n = raw.normalize().unwrap();
        assert_eq!(n.dist(0, 1), 1.0);
        assert_eq!(n.normalize().unwrap(), n);
    }

    #[test]
    fn single_point_cannot_normalize() {
        let s = FiniteMetricSpace::from_matrix(1, vec![0.0], Provenance::Explicit { label: "pt".into() }).unwrap();
        assert_eq!(s.normalize().unwrap_err(), MetricError::DegenerateDiameter);
    }

    #[test]
    fn doubling_estimate_of_cantor_is_small() {
        let s = build_cantor(&CantorSpec::middle_third(8)).unwrap();
        let est = doubling_estimate(&s, &dyadic_scales(8));
        assert!(est.n_hat <= 4, "estimate {}", est.n_hat);
    }

    #[test]
    fn doubling_estimate_two_points() {
        let s = build_line(vec![0.into(), 1.into()].into_iter().map(num_rational::BigRational::from_integer).collect(), "pair").unwrap();
        assert_eq!(doubling_estimate(&s, &[1.0]).n_hat, 2);
    }

    #[test]
    fn dump_round_trip() {
        for s in [build_cantor(&CantorSpec::fast_gap(3)).unwrap(), build_product_grid(&CantorSpec::middle_third(2), 1, 4).unwrap(), build_harmonic(4).unwrap()] {
            let text = serde_json::to_string(&s.to_dump()).unwrap();
            let back = FiniteMetricSpace::from_dump(serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, s);
        }
        let m = FiniteMetricSpace::from_matrix(2, vec![0.0, 0.5, 0.5, 0.0], Provenance::Explicit { label: "m".into() }).unwrap().normalize().unwrap();
        let back = FiniteMetricSpace::from_dump(m.to_dump()).unwrap();
        assert_eq!(back, m);
    }
}
