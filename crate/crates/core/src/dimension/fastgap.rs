use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::DimensionError;
use crate::metric::rational::ratio_to_f64;
use crate::metric::{CantorSample, CantorSpec};

/// Upper limit on the threshold search.
pub const MAX_K_SEARCH: u64 = 10_000_000;

/// Σ_{k>=1} 2^{k-1}/(10 k^k): the total length removed from [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSum {
    /// Terms k = 1..=through are summed exactly.
    pub through: u32,
    pub partial: f64,
    /// Exact partial sum as "p/q".
    #[serde(rename = "partialExact")]
    pub partial_exact: String,
    /// Σ_{k>K} (1/20)(2/(K+1))^k, using k^k >= (K+1)^k.
    pub tail: f64,
    /// The coarser bound Σ_{k>K} 2^{-k}/20 from 2^k/k^k <= 2^{-k} (K >= 3).
    #[serde(rename = "tailCoarse")]
    pub tail_coarse: f64,
    pub upper: f64,
    #[serde(rename = "belowHalf")]
    pub below_half: bool,
    /// 1 - upper: a lower bound on the length, hence on H¹, of the limit set.
    #[serde(rename = "measureLower")]
    pub measure_lower: f64,
}

/// Smallest k with (k+1)^β >= 3 and ((k+1)^β / 3^α)^k > 2λ²/10^β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub k: u64,
    /// log of ((k+1)^β/3^α)^k and of 2λ²/10^β.
    #[serde(rename = "lhsLn")]
    pub lhs_ln: f64,
    #[serde(rename = "rhsLn")]
    pub rhs_ln: f64,
    /// 1/(2λ 3^{αk}) and its log2.
    #[serde(rename = "imageMeasureLower")]
    pub image_measure_lower: f64,
    #[serde(rename = "imageMeasureLowerLog2")]
    pub image_measure_lower_log2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastGapCertificate {
    pub levels: u32,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(rename = "gapSum")]
    pub gap_sum: GapSum,
    pub threshold: ThresholdSearch,
    /// Per sampled level: every interval width is at least 3^{-level}.
    #[serde(rename = "intervalBound")]
    pub interval_bound: Vec<(u32, bool)>,
    pub holds: bool,
}

fn gap_sum(through: u32) -> GapSum {
    let mut s = BigRational::zero();
    for k in 1..=through {
        let kk = num_traits::pow(BigInt::from(k), k as usize);
        s += BigRational::new(BigInt::one() << (k - 1), BigInt::from(10) * kk);
    }
    let partial = ratio_to_f64(&s);
    let big_k = through as f64;
    let r = 2.0 / (big_k + 1.0);
    let tail = r.powf(big_k + 1.0) / (1.0 - r) / 20.0;
    let tail_coarse = 2f64.powf(-big_k) / 20.0;
    // Round the float sum upward a little so the bound stays an upper bound.
    let upper = (partial + tail) * (1.0 + 1e-15);
    GapSum { through, partial, partial_exact: s.to_string(), tail, tail_coarse, upper, below_half: upper < 0.5, measure_lower: 1.0 - upper }
}

fn threshold(alpha: f64, beta: f64, lambda: f64) -> Result<ThresholdSearch, DimensionError> {
    let ln3 = 3f64.ln();
    let rhs_ln = 2f64.ln() + 2.0 * lambda.ln() - beta * 10f64.ln();
    for k in 1..=MAX_K_SEARCH {
        let a = beta * ((k + 1) as f64).ln();
        if a < ln3 {
            continue;
        }
        let lhs_ln = k as f64 * (a - alpha * ln3);
        if lhs_ln > rhs_ln {
            let log2 = -(1.0 + lambda.log2() + alpha * k as f64 * 3f64.log2());
            return Ok(ThresholdSearch { k, lhs_ln, rhs_ln, image_measure_lower: log2.exp2(), image_measure_lower_log2: log2 });
        }
    }
    Err(DimensionError::InvalidParameter(format!("no threshold k below {MAX_K_SEARCH}")))
}

/// Length and image-measure bounds for the Cantor set with gaps 1/(10 k^k).
pub fn fastgap_certificate(levels: u32, alpha: f64, beta: f64, lambda: f64) -> Result<FastGapCertificate, DimensionError> {
    if !(alpha >= 1.0 && beta > 0.0 && beta <= 1.0 && lambda >= 1.0 && alpha.is_finite() && lambda.is_finite()) {
        return Err(DimensionError::InvalidParameter(format!("need alpha >= 1 >= beta > 0 and lambda >= 1, got ({alpha}, {beta}, {lambda})")));
    }
    if levels < 3 {
        return Err(DimensionError::InvalidParameter("at least 3 levels are needed for the tail comparison".into()));
    }
    let sample = CantorSample::build(&CantorSpec::fast_gap(levels))?;
    let interval_bound = sample.widths_dominate_powers_of_three();
    let gap_sum = gap_sum(levels);
    let threshold = threshold(alpha, beta, lambda)?;
    let holds = gap_sum.below_half && interval_bound.iter().all(|p| p.1);
    Ok(FastGapCertificate { levels, alpha, beta, lambda, gap_sum, threshold, interval_bound, holds })
}
