use serde::{Deserialize, Serialize};

use super::checks::{finish, over_pairs, Ctx};
use super::report::LemmaReport;
use crate::embedding::SparseVector;
use crate::metric::FiniteMetricSpace;
use crate::schedule::ScheduleMode;

/// Largest space the exhaustive oracle accepts.
pub const ORACLE_MAX_POINTS: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("the oracle is exhaustive and accepts at most {ORACLE_MAX_POINTS} points, got {0}")]
    TooLarge(usize),
    #[error("image distance matrix must be {0} x {0}")]
    Shape(usize),
}

/// One pair with its source distance and the interval of possible image distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePair {
    pub x: usize,
    pub y: usize,
    pub d: f64,
    pub image: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Exhaustive log-log envelope of a map on a small space.
///
/// For a constant λ the tightest exponents are read off pair by pair:
/// d^a/λ <= lo forces a >= (log lo + log λ)/log d and hi <= λ d^b forces
/// b <= (log hi - log λ)/log d, for d < 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    pub points: usize,
    pub pairs: Vec<OraclePair>,
    /// Tightest exponents with λ = 1, clamped to α >= 1 >= β.
    pub alpha: f64,
    pub beta: f64,
    /// Smallest λ >= 1 with d^α/λ <= image <= λ d^β on the point images.
    pub lambda: f64,
    pub injective: bool,
}

impl DistortionProfile {
    /// Tightest (a, b) for the constant λ using the tail intervals; a is +∞ and
    /// b is -∞ when no exponent works.
    pub fn exponents_at(&self, lambda: f64) -> (f64, f64) {
        let ll = lambda.ln();
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
        for p in &self.pairs {
            if p.lo <= 0.0 {
                a = f64::INFINITY;
            }
            let ld = p.d.ln();
            if ld < 0.0 {
                a = a.max((p.lo.ln() + ll) / ld);
                b = b.min((p.hi.ln() - ll) / ld);
            } else {
                // Unit distance: only the constants matter.
                if p.lo.ln() + ll < 0.0 {
                    a = f64::INFINITY;
                }
                if p.hi.ln() - ll > 0.0 {
                    b = f64::NEG_INFINITY;
                }
            }
        }
        (a, b)
    }

    /// Smallest λ >= 1 making every pair satisfy d^a/λ <= lo and hi <= λ d^b.
    pub fn lambda_for(&self, a: f64, b: f64) -> f64 {
        self.pairs.iter().fold(1.0f64, |acc, p| {
            let upper = p.hi / p.d.powf(b);
            let lower = if p.lo > 0.0 { p.d.powf(a) / p.lo } else { f64::INFINITY };
            acc.max(upper).max(lower)
        })
    }

    /// The oracle envelope at constant λ lies inside the one with exponents (a, b).
    pub fn within(&self, lambda: f64, a: f64, b: f64) -> bool {
        let (ra, rb) = self.exponents_at(lambda * (1.0 + 1e-12));
        ra <= a * (1.0 + 1e-12) && rb >= b * (1.0 - 1e-12)
    }
}

/// Pairwise image distances of sparse images.
pub fn image_matrix(images: &[SparseVector]) -> Vec<Vec<f64>> {
    images.iter().map(|a| images.iter().map(|b| a.dist(b)).collect()).collect()
}

/// Builds the envelope from image distances, widened by `tail` on both images.
pub fn brute_force_oracle(space: &FiniteMetricSpace, image: &[Vec<f64>], tail: f64) -> Result<DistortionProfile, OracleError> {
    let n = space.len();
    if n > ORACLE_MAX_POINTS {
        return Err(OracleError::TooLarge(n));
    }
    if image.len() != n || image.iter().any(|r| r.len() != n) {
        return Err(OracleError::Shape(n));
    }
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let im = image[x][y];
            pairs.push(OraclePair { x, y, d: space.dist(x, y), image: im, lo: (im - 2.0 * tail).max(0.0), hi: im + 2.0 * tail });
        }
    }
    let injective = pairs.iter().all(|p| p.image > 0.0);
    let exact = DistortionProfile {
        points: n,
        pairs: pairs.iter().map(|p| OraclePair { lo: p.image, hi: p.image, ..*p }).collect(),
        alpha: 1.0,
        beta: 1.0,
        lambda: 1.0,
        injective,
    };
    let (a, b) = exact.exponents_at(1.0);
    let alpha = a.max(1.0);
    let beta = b.min(1.0);
    let lambda = exact.lambda_for(alpha, beta);
    Ok(DistortionProfile { points: n, pairs, alpha, beta, lambda, injective })
}

/// (1/λ) d^{2Q} <= d(fx, fy) - 2t and d(fx, fy) + 2t <= λ d^{1/(4Q)}, exact mode only.
pub(crate) fn biholder(ctx: &Ctx) -> (LemmaReport, f64) {
    if ctx.mode() == ScheduleMode::Relaxed {
        return (LemmaReport::not_certified("biholder", ctx.mode(), "lambda and Q are exact-mode constants"), 1.0);
    }
    let k = &ctx.c.schedule.constants;
    let (a, b) = k.holder_exponents();
    let log2_lambda = k.lambda_log2;
    let last = ctx.c.last();
    let tail = ctx.c.tail_bound();
    let t = over_pairs(ctx.space.len(), |x, y, t| {
        let d = ctx.space.dist(x, y);
        let dd = last.image_dist(x, y);
        t.ge(0, x, y, dd - 2.0 * tail, (a * d.log2() - log2_lambda).exp2());
        t.le(1, x, y, dd + 2.0 * tail, (b * d.log2() + log2_lambda).exp2());
    });
    let (mut r, m) = finish(t, "biholder", ctx, format!("lambda = 2^{log2_lambda:.6}, lower exponent {a}, upper exponent {b}"));
    r.notes.push("witness stage 0 is the lower bound, 1 the upper".into());
    if ctx.c.stabilized_at.is_none() {
        r.notes.push("construction did not reach a singleton stage".into());
    }
    if ctx.space.len() <= ORACLE_MAX_POINTS {
        if let Ok(p) = brute_force_oracle(ctx.space, &image_matrix(&last.images), tail) {
            let lambda = log2_lambda.exp2();
            let inside = p.within(lambda, a, b);
            r.details = serde_json::json!({ "oracle": { "alpha": p.alpha, "beta": p.beta, "lambda": p.lambda, "exponentsAtCertified": p.exponents_at(lambda), "lambdaForCertified": p.lambda_for(a, b), "withinCertified": inside } });
            if r.pass && !inside {
                r.pass = false;
                r.status = super::Status::Fail;
                r.notes.push("oracle envelope escapes the certified envelope".into());
            }
        }
    }
    (r, m)
}
