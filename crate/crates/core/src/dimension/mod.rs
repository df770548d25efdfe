//! Box-counting dimension estimates, snowflake transforms and the
//! counterexample certificates.

mod fastgap;
mod harmonic;
mod hypercurve;

pub use fastgap::{fastgap_certificate, FastGapCertificate, GapSum, ThresholdSearch, MAX_K_SEARCH};
pub use harmonic::{capacity_refuter, CapacityRefutation};
pub use hypercurve::{
    estimate_nu, hypercurve_certificate, hypercurve_sampled_check, identity_candidate, projection_surjectivity_check, HypercurveCertificate, NuEstimate,
    ProjectionReport, SampledMeasureCheck, LOG2_OVER_LOG3,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metric::{FiniteMetricSpace, MetricError, RawMetric};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimensionError {
    #[error("need at least 4 scales, got {0}")]
    TooFewScales(usize),
    #[error("scales must span at least two octaves (ratio {0} < 4)")]
    NarrowRange(f64),
    #[error("scales must be positive and finite")]
    BadScale,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How clusters are formed at a given scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMethod {
    /// Sorted sweep along a line: each cluster is a maximal run within r of its first point.
    LineSweep,
    /// Anchored axis-parallel boxes of side r/√dim in id order.
    AnchoredBoxes,
    /// Balls of radius r/2 around the first uncovered point in id order.
    GreedyBalls,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub method: CoverMethod,
    /// Decreasing radii.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of log N against log(1/r).
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit (natural log units).
    pub residual: f64,
    /// Σ diam(U)^s over the clusters at each scale, when an exponent is requested.
    #[serde(rename = "measureAtScale", default, skip_serializing_if = "Option::is_none")]
    pub measure_at_scale: Option<Vec<f64>>,
    #[serde(rename = "measureExponent", default, skip_serializing_if = "Option::is_none")]
    pub measure_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `steps` radii from `hi` down to `lo`, evenly spaced in log scale.
pub fn geometric_scales(hi: f64, lo: f64, steps: usize) -> Result<Vec<f64>, DimensionError> {
    if !(hi.is_finite() && lo.is_finite() && lo > 0.0 && hi > lo) || steps < 2 {
        return Err(DimensionError::BadScale);
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    Ok((0..steps).map(|k| (lh + (ll - lh) * k as f64 / (steps - 1) as f64).exp()).collect())
}

/// Scales 3^{-k} for k in `ks`.
pub fn triadic_scales(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 3f64.powi(-k)).collect()
}

fn method_for(space: &FiniteMetricSpace) -> CoverMethod {
    match space.raw() {
        RawMetric::Coords { dim: 1, .. } => CoverMethod::LineSweep,
        RawMetric::Coords { .. } if space.power() == 1.0 => CoverMethod::AnchoredBoxes,
        _ => CoverMethod::GreedyBalls,
    }
}

/// Relative slack on cluster radii so that points exactly at distance r are kept.
const RADIUS_SLACK: f64 = 1e-9;

/// Greedy clusters of diameter at most r (up to `RADIUS_SLACK`).
pub fn greedy_clusters(space: &FiniteMetricSpace, r: f64) -> Vec<Vec<usize>> {
    let n = space.len();
    let reach = r * (1.0 + RADIUS_SLACK);
    match method_for(space) {
        CoverMethod::LineSweep => {
            let order = space.sorted_line().expect("line space");
            let mut out = Vec::new();
            let mut k = 0;
            while k < n {
                let start = order[k];
                let mut cluster = vec![start];
                k += 1;
                while k < n && space.dist(start, order[k]) <= reach {
                    cluster.push(order[k]);
                    k += 1;
                }
                out.push(cluster);
            }
            out
        }
        CoverMethod::AnchoredBoxes => {
            let RawMetric::Coords { dim, data } = space.raw() else { unreachable!() };
            let side = reach / space.scale() / (*dim as f64).sqrt();
            let mut covered = vec![false; n];
            let mut out = Vec::new();
            for x in 0..n {
                if covered[x] {
                    continue;
                }
                let a = &data[x * dim..(x + 1) * dim];
                let cluster: Vec<usize> = (x..n)
                    .filter(|&y| !covered[y] && data[y * dim..(y + 1) * dim].iter().zip(a).all(|(v, o)| *v >= *o && *v - *o <= side))
                    .collect();
                for &y in &cluster {
                    covered[y] = true;
                }
                out.push(cluster);
            }
            out
        }
        CoverMethod::GreedyBalls => {
            let mut covered = vec![false; n];
            let mut out = Vec::new();
            for x in 0..n {
                if covered[x] {
                    continue;
                }
                let cluster: Vec<usize> = (x..n).filter(|&y| !covered[y] && space.dist(x, y) <= reach / 2.0).collect();
                for &y in &cluster {
                    covered[y] = true;
                }
                out.push(cluster);
            }
            out
        }
    }
}

/// Diameter of a point set under the space metric.
pub fn cluster_diameter(space: &FiniteMetricSpace, members: &[usize]) -> f64 {
    if space.sorted_line().is_some() {
        // Monotone in the coordinate gap, so the extreme coordinates realize it.
        let key = |&i: &usize| space.raw_coords(i).expect("coords")[0];
        let lo = members.iter().copied().min_by(|a, b| key(a).total_cmp(&key(b)));
        let hi = members.iter().copied().max_by(|a, b| key(a).total_cmp(&key(b)));
        return match (lo, hi) {
            (Some(a), Some(b)) => space.dist(a, b),
            _ => 0.0,
        };
    }
    let mut best = 0.0f64;
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            best = best.max(space.dist(a, b));
        }
    }
    best
}

/// Ordinary least squares y = a x + b; returns (a, b, rms residual).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Covering numbers at each scale and the log-log slope.
pub fn box_dimension(space: &FiniteMetricSpace, scales: &[f64]) -> Result<DimensionReport, DimensionError> {
    box_dimension_with_measure(space, scales, None)
}

/// As [`box_dimension`], also summing diam(U)^s over each scale's clusters.
pub fn box_dimension_with_measure(space: &FiniteMetricSpace, scales: &[f64], exponent: Option<f64>) -> Result<DimensionReport, DimensionError> {
    if scales.len() < 4 {
        return Err(DimensionError::TooFewScales(scales.len()));
    }
    if scales.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(DimensionError::BadScale);
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    let ratio = scales[0] / scales[scales.len() - 1];
    if ratio < 4.0 {
        return Err(DimensionError::NarrowRange(ratio));
    }
    let mut warnings = Vec::new();
    let resolution = space.min_distance();
    let fine = scales.iter().filter(|&&r| r < 2.0 * resolution).count();
    if fine > 0 {
        warnings.push(format!("{fine} scales fall below twice the sample resolution {resolution:.3e}"));
    }
    let per_scale: Vec<(usize, Option<f64>)> = scales
        .par_iter()
        .map(|&r| {
            let clusters = greedy_clusters(space, r);
            let m = exponent.map(|s| clusters.iter().map(|c| cluster_diameter(space, c).powf(s)).sum());
            (clusters.len(), m)
        })
        .collect();
    let counts: Vec<usize> = per_scale.iter().map(|p| p.0).collect();
    if counts.windows(2).any(|w| w[1] < w[0]) {
        warnings.push("covering numbers are not monotone in the scale".into());
    }
    let xs: Vec<f64> = scales.iter().map(|r| -r.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DimensionReport {
        method: method_for(space),
        scales,
        counts,
        slope,
        intercept,
        residual,
        measure_at_scale: exponent.map(|_| per_scale.iter().map(|p| p.1.unwrap_or(0.0)).collect()),
        measure_exponent: exponent,
        warnings,
    })
}

/// The metric d^p for 0 < p <= 1.
pub fn snowflake(space: &FiniteMetricSpace, p: f64) -> Result<FiniteMetricSpace, DimensionError> {
    Ok(space.powered(p)?)
}

#[cfg(test)]
mod tests;
