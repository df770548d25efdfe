use serde::{Deserialize, Serialize};

use super::{certify, first_fit_colors, validate_scale, ColoredCover, CoverError, CoverSet};
use crate::metric::rational::ratio_to_f64;
use crate::metric::{CantorSample, FiniteMetricSpace, Provenance};

/// Scale at which a structured cover is requested.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverScale {
    /// Construction level: Cantor interval traces at that level; for cube axes
    /// the per-axis scale is the level-`k` Cantor width, or 2^-k without a Cantor factor.
    Level(u32),
    /// Target mesh in the (normalized) metric of the space.
    Delta(f64),
}

/// Exact covers of the example spaces read off their construction.
pub fn build_structured_cover(space: &FiniteMetricSpace, scale: CoverScale, sigma: f64) -> Result<ColoredCover, CoverError> {
    match space.provenance().clone() {
        Provenance::Cantor { cantor } => {
            let sample = CantorSample::build(&cantor).map_err(|e| CoverError::NoStructure(e.to_string()))?;
            let level = cantor_level(&sample, scale, 1.0)?;
            let delta = target(scale, ratio_to_f64(&sample.max_width(level.min(cantor.levels))));
            validate_scale(delta, sigma)?;
            let sets = cantor_traces(&sample, level);
            Ok(certify(space, sets.into_iter().map(|m| CoverSet::new(m, 0)).collect(), delta, sigma)?)
        }
        Provenance::Cube { n, grid_res } => {
            let axis = match scale {
                CoverScale::Delta(d) => d,
                CoverScale::Level(k) => (-(k as f64)).exp2(),
            };
            let delta = target(scale, axis);
            validate_scale(delta, sigma)?;
            let axis_sets = interval_axis_sets(grid_res, axis);
            let mut sets = product_sets(&[vec![vec![0usize]]], &axis_sets, n, grid_res);
            first_fit_colors(&mut sets);
            certify(space, sets, delta, sigma)
        }
        Provenance::Product { cantor, n, grid_res } => {
            let sample = CantorSample::build(&cantor).map_err(|e| CoverError::NoStructure(e.to_string()))?;
            let level = cantor_level(&sample, scale, 1.0)?;
            let axis = match scale {
                CoverScale::Delta(d) => d,
                CoverScale::Level(_) => ratio_to_f64(&sample.max_width(level.min(cantor.levels))),
            };
            let delta = target(scale, axis);
            validate_scale(delta, sigma)?;
            let traces = cantor_traces(&sample, level);
            let axis_sets = interval_axis_sets(grid_res, axis);
            let mut sets = product_sets(&[traces], &axis_sets, n, grid_res);
            first_fit_colors(&mut sets);
            certify(space, sets, delta, sigma)
        }
        other => Err(CoverError::NoStructure(format!("provenance {:?} has no construction-level cover", kind_name(&other)))),
    }
}

fn kind_name(p: &Provenance) -> &'static str {
    match p {
        Provenance::Cantor { .. } => "cantor",
        Provenance::Product { .. } => "product",
        Provenance::Cube { .. } => "cube",
        Provenance::Harmonic { .. } => "harmonic",
        Provenance::Random { .. } => "random",
        Provenance::Explicit { .. } => "explicit",
        Provenance::Snowflake { .. } => "snowflake",
    }
}

fn target(scale: CoverScale, level_width: f64) -> f64 {
    match scale {
        CoverScale::Delta(d) => d,
        CoverScale::Level(_) => level_width,
    }
}

/// Level whose intervals have width at most the per-factor scale.
fn cantor_level(sample: &CantorSample, scale: CoverScale, factor: f64) -> Result<u32, CoverError> {
    match scale {
        CoverScale::Level(k) => Ok(k),
        CoverScale::Delta(d) => {
            if !(d > 0.0) {
                return Err(CoverError::InvalidParameter(format!("delta = {d} must be positive")));
            }
            let per = d * factor;
            Ok((0..=sample.spec.levels).find(|&k| ratio_to_f64(&sample.max_width(k)) <= per).unwrap_or(sample.spec.levels + 1))
        }
    }
}

/// Index sets of sampled endpoints inside each level-`k` interval. Beyond the
/// sampled depth every trace is a single point.
fn cantor_traces(sample: &CantorSample, k: u32) -> Vec<Vec<usize>> {
    let m = sample.spec.levels;
    if k > m {
        return (0..1usize << (m + 1)).map(|x| vec![x]).collect();
    }
    (0..1usize << k).map(|i| sample.trace_range(k, i).collect()).collect()
}

/// Open balls of radius δ/2 centred at jδ/2 on the grid `g/(res-1)`, dropping empty ones.
fn interval_axis_sets(grid_res: usize, delta: f64) -> Vec<Vec<usize>> {
    let h = (grid_res - 1) as f64;
    let count = (2.0 / delta).ceil() as usize + 1;
    let mut out: Vec<Vec<usize>> = Vec::new();
    for j in 0..=count {
        let c = j as f64 * delta / 2.0;
        let members: Vec<usize> = (0..grid_res).filter(|&g| ((g as f64) - c * h).abs() < delta / 2.0 * h).collect();
        if !members.is_empty() && out.last() != Some(&members) {
            out.push(members);
        }
    }
    out
}

/// Products of a first-factor family (indexing blocks of `res^n` ids) with
/// `n` copies of an axis family on a row-major grid.
fn product_sets(first: &[Vec<Vec<usize>>], axis: &[Vec<usize>], n: u32, grid_res: usize) -> Vec<CoverSet> {
    let per_fiber = grid_res.pow(n);
    let mut grid_cells: Vec<Vec<usize>> = vec![vec![0]];
    for _ in 0..n {
        let mut next = Vec::new();
        for cell in &grid_cells {
            for a in axis {
                let mut ids = Vec::with_capacity(cell.len() * a.len());
                for &base in cell {
                    for &g in a {
                        ids.push(base * grid_res + g);
                    }
                }
                next.push(ids);
            }
        }
        grid_cells = next;
    }
    let mut out = Vec::new();
    for family in first {
        for block in family {
            for cell in &grid_cells {
                let mut members = Vec::with_capacity(block.len() * cell.len());
                for &b in block {
                    for &g in cell {
                        members.push(b * per_fiber + g);
                    }
                }
                out.push(CoverSet::new(members, 0));
            }
        }
    }
    out
}
