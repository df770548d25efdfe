use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cluster_diameter, greedy_clusters, DimensionError};
use crate::metric::rational::ratio_to_f64;
use crate::metric::{CantorSample, CantorSpec, FiniteMetricSpace, Provenance};

/// log 2 / log 3, the dimension of the middle-third Cantor set.
pub const LOG2_OVER_LOG3: f64 = std::f64::consts::LN_2 / 1.098_612_288_668_109_8;

/// Constants of the lower bound dim_H > n for bi-Hölder images of C × I^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypercurveCertificate {
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub n: u32,
    pub nu: f64,
    /// H^n(I^n), normalized to 1.
    #[serde(rename = "cubeMeasure")]
    pub cube_measure: f64,
    /// Spread constant 2^s ν λ^{s/α} with s = log2/log3.
    #[serde(rename = "A")]
    pub a: f64,
    /// Bigness constant H^n(I^n)/(λ√n)^n.
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "lowerBound")]
    pub lower_bound: f64,
    #[serde(rename = "BOverA")]
    pub b_over_a: f64,
}

pub fn hypercurve_certificate(lambda: f64, alpha: f64, n: u32, nu: f64) -> Result<HypercurveCertificate, DimensionError> {
    if !(lambda >= 1.0 && alpha >= 1.0 && n >= 1 && nu > 0.0 && lambda.is_finite() && alpha.is_finite() && nu.is_finite()) {
        return Err(DimensionError::InvalidParameter(format!("need lambda >= 1, alpha >= 1, n >= 1, nu > 0; got ({lambda}, {alpha}, {n}, {nu})")));
    }
    let s = LOG2_OVER_LOG3;
    let nf = n as f64;
    let cube_measure = 1.0;
    let b = cube_measure / (lambda * nf.sqrt()).powf(nf);
    let a = 2f64.powf(s) * nu * lambda.powf(s / alpha);
    Ok(HypercurveCertificate { lambda, alpha, beta: None, n, nu, cube_measure, a, b, lower_bound: nf + s / alpha, b_over_a: b / a })
}

/// Sample estimate of the Ahlfors constant of the uniform Cantor measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub levels: u32,
    pub value: f64,
    pub center: f64,
    pub radius: f64,
    pub balls: usize,
}

/// max μ(B)/diam(B)^s over balls of radius 2^{-j}, 3^{-levels}/2 <= 2^{-j} <= 1,
/// centred at level-`levels` endpoints. μ gives mass 2^{-levels} to every
/// level interval meeting the ball, which can only overestimate.
pub fn estimate_nu(levels: u32) -> Result<NuEstimate, DimensionError> {
    let sample = CantorSample::build(&CantorSpec::middle_third(levels))?;
    let ivs: Vec<(f64, f64)> = sample.levels[levels as usize].iter().map(|iv| (ratio_to_f64(&iv.left), ratio_to_f64(&iv.right))).collect();
    let mass = 2f64.powi(-(levels as i32));
    let j_max = (levels as f64 * 3f64.log2()).floor() as i32 + 1;
    let mut best = NuEstimate { levels, value: 0.0, center: 0.0, radius: 1.0, balls: 0 };
    let centers: Vec<f64> = ivs.iter().flat_map(|&(l, r)| [l, r]).collect();
    for j in 0..=j_max {
        let rho = 2f64.powi(-j);
        for &c in &centers {
            // First interval with right end >= c - ρ, last with left end <= c + ρ.
            let lo = ivs.partition_point(|iv| iv.1 < c - rho);
            let hi = ivs.partition_point(|iv| iv.0 <= c + rho);
            let mu = (hi - lo) as f64 * mass;
            let ratio = mu / (2.0 * rho).powf(LOG2_OVER_LOG3);
            best.balls += 1;
            if ratio > best.value {
                best = NuEstimate { value: ratio, center: c, radius: rho, ..best };
            }
        }
    }
    Ok(best)
}

fn product_layout(space: &FiniteMetricSpace) -> Result<(u32, usize), DimensionError> {
    match space.provenance().base() {
        Provenance::Product { n, grid_res, .. } => Ok((*n, *grid_res)),
        _ => Err(DimensionError::InvalidParameter("expected a C x I^n product grid".into())),
    }
}

/// Grid coordinates (in [0, 1]) of the I^n factor of point `id`.
fn grid_coords(id: usize, n: u32, res: usize) -> Vec<f64> {
    let mut g = id % res.pow(n);
    let step = 1.0 / (res - 1) as f64;
    let mut out = vec![0.0; n as usize];
    for c in out.iter_mut().rev() {
        *c = (g % res) as f64 * step;
        g /= res;
    }
    out
}

/// The inclusion C × I^n ⊂ R^{n+1} on unnormalized coordinates.
pub fn identity_candidate(space: &FiniteMetricSpace) -> Result<Vec<Vec<f64>>, DimensionError> {
    product_layout(space)?;
    Ok((0..space.len()).map(|i| space.raw_coords(i).expect("product grids are coordinate backed").to_vec()).collect())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceViolation {
    pub point: usize,
    pub axis: usize,
    /// "A" for the face t_i = 0, "O" for t_i = 1.
    pub face: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub n: u32,
    #[serde(rename = "gridRes")]
    pub grid_res: usize,
    pub lambda: f64,
    #[serde(rename = "facePoints")]
    pub face_points: usize,
    #[serde(rename = "faceViolations")]
    pub face_violations: Vec<FaceViolation>,
    pub pairs: usize,
    /// Largest |ψ_i(γp) - ψ_i(γq)| / |γp - γq| over axes and pairs.
    #[serde(rename = "psiLipschitz")]
    pub psi_lipschitz: f64,
    /// Same for Ψ, against the bound λ√n.
    #[serde(rename = "bigPsiLipschitz")]
    pub big_psi_lipschitz: f64,
    /// Largest sup-distance from a grid point of I^n to the image of F.
    #[serde(rename = "densityGap")]
    pub density_gap: f64,
    #[serde(rename = "densityEps")]
    pub density_eps: f64,
    pub holds: bool,
}

/// Builds ψ_i = min{λ φ_i, 1} with φ_i = dist(·, γ(A_i)) and F = Ψ∘γ on a product grid.
///
/// `max_pairs` caps the Lipschitz pairs; beyond it pairs are drawn with `seed`.
pub fn projection_surjectivity_check(
    space: &FiniteMetricSpace,
    images: &[Vec<f64>],
    lambda: f64,
    density_eps: Option<f64>,
    max_pairs: usize,
    seed: u64,
) -> Result<ProjectionReport, DimensionError> {
    let (n, res) = product_layout(space)?;
    if images.len() != space.len() {
        return Err(DimensionError::InvalidParameter("one image per point is required".into()));
    }
    if !(lambda >= 1.0) {
        return Err(DimensionError::InvalidParameter("lambda must be at least 1".into()));
    }
    let grids: Vec<Vec<f64>> = (0..space.len()).map(|i| grid_coords(i, n, res)).collect();
    let nn = n as usize;
    // psi[p][i]
    let mut psi = vec![vec![0.0; nn]; space.len()];
    for i in 0..nn {
        let face: Vec<usize> = (0..space.len()).filter(|&p| grids[p][i] == 0.0).collect();
        for (p, row) in psi.iter_mut().enumerate() {
            let phi = face.iter().map(|&a| euclid(&images[p], &images[a])).fold(f64::INFINITY, f64::min);
            row[i] = (lambda * phi).min(1.0);
        }
    }
    let mut face_violations = Vec::new();
    let mut face_points = 0;
    for (p, g) in grids.iter().enumerate() {
        for i in 0..nn {
            if g[i] == 0.0 {
                face_points += 1;
                if psi[p][i] != 0.0 {
                    face_violations.push(FaceViolation { point: p, axis: i, face: "A".into(), value: psi[p][i] });
                }
            } else if g[i] == 1.0 {
                face_points += 1;
                if psi[p][i] != 1.0 {
                    face_violations.push(FaceViolation { point: p, axis: i, face: "O".into(), value: psi[p][i] });
                }
            }
        }
    }
    let total = space.len() * (space.len() - 1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= max_pairs {
        (0..space.len()).flat_map(|x| (x + 1..space.len()).map(move |y| (x, y))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..max_pairs)
            .map(|_| loop {
                let (x, y) = (rng.gen_range(0..space.len()), rng.gen_range(0..space.len()));
                if x != y {
                    break (x.min(y), x.max(y));
                }
            })
            .collect()
    };
    let (mut small, mut big) = (0.0f64, 0.0f64);
    for &(x, y) in &pairs {
        let d = euclid(&images[x], &images[y]);
        if d == 0.0 {
            continue;
        }
        let diffs: Vec<f64> = (0..nn).map(|i| (psi[x][i] - psi[y][i]).abs()).collect();
        small = small.max(diffs.iter().copied().fold(0.0, f64::max) / d);
        big = big.max(diffs.iter().map(|v| v * v).sum::<f64>().sqrt() / d);
    }
    let step = 1.0 / (res - 1) as f64;
    let density_eps = density_eps.unwrap_or(step);
    let mut density_gap = 0.0f64;
    for g in 0..res.pow(n) {
        let target = grid_coords(g, n, res);
        let gap = psi.iter().map(|f| f.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(f64::INFINITY, f64::min);
        density_gap = density_gap.max(gap);
    }
    let tol = 1.0 + 1e-9;
    let holds = face_violations.is_empty() && small <= lambda * tol && big <= lambda * (nn as f64).sqrt() * tol && density_gap <= density_eps;
    Ok(ProjectionReport {
        n,
        grid_res: res,
        lambda,
        face_points,
        face_violations,
        pairs: pairs.len(),
        psi_lipschitz: small,
        big_psi_lipschitz: big,
        density_gap,
        density_eps,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleMeasure {
    /// Cluster diameter bound in unnormalized units.
    pub scale: f64,
    pub clusters: usize,
    pub sum: f64,
    /// Σ (diam U + 2h)^s: the h-neighbourhoods of the clusters cover the continuum.
    pub corrected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledMeasureCheck {
    pub exponent: f64,
    /// Every point of C × I^n lies within h of a sample point.
    pub h: f64,
    pub bound: f64,
    pub scales: Vec<ScaleMeasure>,
    pub holds: bool,
}

/// Σ diam(U)^s over greedy covers of the product grid against B/A, in the
/// unnormalized product metric.
pub fn hypercurve_sampled_check(space: &FiniteMetricSpace, cert: &HypercurveCertificate, scales: &[f64]) -> Result<SampledMeasureCheck, DimensionError> {
    let (n, res) = product_layout(space)?;
    let Provenance::Product { cantor, .. } = space.provenance().base() else { unreachable!() };
    let sample = CantorSample::build(cantor)?;
    let widest = ratio_to_f64(&sample.max_width(cantor.levels));
    let h_c = widest / 2.0;
    let h_i = 0.5 / (res - 1) as f64;
    let h = (h_c * h_c + n as f64 * h_i * h_i).sqrt();
    let unit = space.scale();
    let s = cert.lower_bound;
    let mut out = Vec::new();
    for &r in scales {
        let clusters = greedy_clusters(space, r * unit);
        let diams: Vec<f64> = clusters.iter().map(|c| cluster_diameter(space, c) / unit).collect();
        let sum = diams.iter().map(|d| d.powf(s)).sum();
        let corrected = diams.iter().map(|d| (d + 2.0 * h).powf(s)).sum();
        out.push(ScaleMeasure { scale: r, clusters: clusters.len(), sum, corrected });
    }
    let holds = out.iter().all(|m| m.corrected >= cert.b_over_a);
    Ok(SampledMeasureCheck { exponent: s, h, bound: cert.b_over_a, scales: out, holds })
}
