use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cantor::{CantorSample, CantorSpec};
use super::space::{FiniteMetricSpace, Provenance, MAX_COORD_POINTS};
use super::MetricError;

/// Endpoint sample of a Cantor-type set at `spec.levels`: 2^(levels+1) points on [0, 1].
pub fn build_cantor(spec: &CantorSpec) -> Result<FiniteMetricSpace, MetricError> {
    let sample = CantorSample::build(spec)?;
    FiniteMetricSpace::from_exact_line(sample.endpoints(), Provenance::Cantor { cantor: spec.clone() })
}

fn grid_count(n: u32, grid_res: usize) -> Result<usize, MetricError> {
    if grid_res < 2 {
        return Err(MetricError::InvalidParameter("grid resolution must be at least 2".into()));
    }
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(grid_res)).ok_or(MetricError::TooLarge { points: usize::MAX, limit: MAX_COORD_POINTS })
}

fn push_grid_point(out: &mut Vec<f64>, mut idx: usize, n: u32, grid_res: usize) {
    let step = 1.0 / (grid_res - 1) as f64;
    let mut coords = vec![0.0; n as usize];
    for c in coords.iter_mut().rev() {
        *c = (idx % grid_res) as f64 * step;
        idx /= grid_res;
    }
    out.extend_from_slice(&coords);
}

/// `C x I^n` with the Euclidean product metric, normalized to diameter 1.
pub fn build_product_grid(cantor: &CantorSpec, n: u32, grid_res: usize) -> Result<FiniteMetricSpace, MetricError> {
    if n == 0 {
        return build_cantor(cantor).and_then(|s| s.normalize());
    }
    let per_fiber = grid_count(n, grid_res)?;
    let cantor_pts = 1usize << (cantor.levels + 1).min(62);
    let total = cantor_pts.saturating_mul(per_fiber);
    if total > MAX_COORD_POINTS {
        return Err(MetricError::TooLarge { points: total, limit: MAX_COORD_POINTS });
    }
    let sample = CantorSample::build(cantor)?;
    let ends: Vec<f64> = sample.endpoints().iter().map(super::rational::ratio_to_f64).collect();
    let dim = n as usize + 1;
    let mut data = Vec::with_capacity(total * dim);
    for &c in &ends {
        for g in 0..per_fiber {
            data.push(c);
            push_grid_point(&mut data, g, n, grid_res);
        }
    }
    let raw_diam = ((n + 1) as f64).sqrt();
    let provenance = Provenance::Product { cantor: cantor.clone(), n, grid_res };
    FiniteMetricSpace::from_coords(dim, data, provenance, Some(raw_diam))?.normalize()
}

/// Regular grid on the unit cube `I^n`, normalized to diameter 1.
pub fn build_cube_grid(n: u32, grid_res: usize) -> Result<FiniteMetricSpace, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidParameter("cube dimension must be at least 1".into()));
    }
    let total = grid_count(n, grid_res)?;
    if total > MAX_COORD_POINTS {
        return Err(MetricError::TooLarge { points: total, limit: MAX_COORD_POINTS });
    }
    let provenance = Provenance::Cube { n, grid_res };
    if n == 1 {
        let den = BigInt::from(grid_res - 1);
        let pts = (0..grid_res).map(|g| BigRational::new(BigInt::from(g), den.clone())).collect();
        return FiniteMetricSpace::from_exact_line(pts, provenance);
    }
    let mut data = Vec::with_capacity(total * n as usize);
    for g in 0..total {
        push_grid_point(&mut data, g, n, grid_res);
    }
    FiniteMetricSpace::from_coords(n as usize, data, provenance, Some((n as f64).sqrt()))?.normalize()
}

/// `{0} ∪ {1/k : 1 <= k <= m}`; id 0 is the origin and id k is 1/k.
pub fn build_harmonic(m: usize) -> Result<FiniteMetricSpace, MetricError> {
    if m < 3 {
        return Err(MetricError::InvalidParameter(format!("harmonic space needs m >= 3, got {m}")));
    }
    let mut pts = vec![BigRational::from_integer(0.into())];
    pts.extend((1..=m).map(|k| BigRational::new(1.into(), BigInt::from(k))));
    FiniteMetricSpace::from_exact_line(pts, Provenance::Harmonic { m })
}

/// Uniform random points in `[0,1]^dim`, normalized. Deterministic in `seed`.
pub fn build_random(count: usize, dim: usize, seed: u64) -> Result<FiniteMetricSpace, MetricError> {
    if count < 2 || dim == 0 {
        return Err(MetricError::InvalidParameter("random space needs at least 2 points and dim >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..count * dim).map(|_| rng.gen::<f64>()).collect();
    let provenance = Provenance::Random { count, dim, seed };
    let s = FiniteMetricSpace::from_coords(dim, data, provenance, None)?;
    if s.min_distance() == 0.0 {
        return Err(MetricError::AxiomViolation { kind: "positivity".into(), points: vec![], detail: "duplicate random points".into() });
    }
    s.normalize()
}

/// Points on the line given exactly, normalized.
pub fn build_line(points: Vec<BigRational>, label: &str) -> Result<FiniteMetricSpace, MetricError> {
    let mut sorted = points.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(MetricError::AxiomViolation { kind: "positivity".into(), points: vec![], detail: "repeated point".into() });
    }
    FiniteMetricSpace::from_exact_line(points, Provenance::Explicit { label: label.to_string() })?.normalize()
}
