//! The iterated barycentric maps f_i into a growing coordinate prefix of ℓ².
//!
//! Stage `i >= 1` uses the cover 𝒰_i at scale δ_i. Its vertices are
//! p_k = f_{i-1}(x_k) + (ε_i/2) e_{m_{i-1}+k} and f_i(x) is the convex
//! combination of the p_k weighted by the distance from x to the complement
//! of U_k.

mod dump;
mod simplex;
mod vector;

pub use dump::{StageDump, StageCerts};
pub use simplex::{enumerate_simplices, SimplexComplex};
pub use vector::SparseVector;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{build_greedy_cover, build_structured_cover, point_weights, singleton_cover, ColoredCover, CoverError, CoverScale};
use crate::metric::FiniteMetricSpace;
use crate::schedule::{ScaleSchedule, ScheduleMode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("stage {stage}: cover construction failed: {source}")]
    Cover { stage: usize, source: CoverError },
    #[error("stage {stage}: cover misses its certificate (mesh {mesh}, Lebesgue {lebesgue}, need mesh <= {delta} and Lebesgue >= {required})")]
    NotCertified { stage: usize, mesh: f64, lebesgue: f64, delta: f64, required: f64 },
    #[error("stage {stage}: point {point} has zero total weight")]
    ZeroDenominator { stage: usize, point: usize },
    #[error("stage {stage}: scale 2^{log2} is not representable in binary floating point")]
    Unrepresentable { stage: usize, log2: f64 },
    #[error("invalid embedding parameter: {0}")]
    InvalidParameter(String),
}

/// One stage of the construction. Stage 0 has no cover and maps every point to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStage {
    pub index: usize,
    pub cover: Option<ColoredCover>,
    /// p_k in cover order.
    pub vertices: Vec<SparseVector>,
    /// m_{i-1}: first coordinate written by this stage.
    pub coord_offset: usize,
    /// m_i = m_{i-1} + |𝒰_i|.
    pub coord_count: usize,
    pub images: Vec<SparseVector>,
    /// Per point, `(vertex index, λ)` with λ > 0 summing to 1.
    pub barycentric: Vec<Vec<(usize, f64)>>,
    pub log2_eps: f64,
    pub log2_delta: f64,
}

impl EmbeddingStage {
    pub fn eps(&self) -> f64 {
        self.log2_eps.exp2()
    }

    pub fn delta(&self) -> f64 {
        self.log2_delta.exp2()
    }

    /// Multiplicity of the stage cover (1 for stage 0).
    pub fn multiplicity(&self) -> usize {
        self.cover.as_ref().map_or(1, |c| c.certs.multiplicity)
    }

    pub fn is_singleton(&self) -> bool {
        self.cover.as_ref().is_some_and(|c| c.sets.iter().all(|s| s.members.len() == 1))
    }

    /// d(f_i(x), f_i(y)).
    pub fn image_dist(&self, x: usize, y: usize) -> f64 {
        self.images[x].dist(&self.images[y])
    }
}

/// f_0 ≡ 0 with m_0 = 0.
pub fn initial_stage(space: &FiniteMetricSpace) -> EmbeddingStage {
    let n = space.len();
    EmbeddingStage {
        index: 0,
        cover: None,
        vertices: Vec::new(),
        coord_offset: 0,
        coord_count: 0,
        images: vec![SparseVector::zero(0); n],
        barycentric: vec![Vec::new(); n],
        log2_eps: 0.0,
        log2_delta: 0.0,
    }
}

/// Builds stage `prev.index + 1` from a cover certified at that stage's scale.
pub fn refine_stage(space: &FiniteMetricSpace, prev: &EmbeddingStage, cover: ColoredCover, schedule: &ScaleSchedule) -> Result<EmbeddingStage, EmbeddingError> {
    let i = prev.index + 1;
    let (log2_eps, log2_delta) = match (schedule.log2_eps.get(i), schedule.log2_delta.get(i)) {
        (Some(&e), Some(&d)) => (e, d),
        _ => return Err(EmbeddingError::InvalidParameter(format!("schedule has no stage {i}"))),
    };
    let eps = representable(i, log2_eps)?;
    let delta = representable(i, log2_delta)?;
    let required = schedule.params.sigma * delta;
    if !cover.is_certified() || cover.target_delta > delta * (1.0 + crate::cover::CERT_TOLERANCE) || cover.certs.lebesgue < required * (1.0 - crate::cover::CERT_TOLERANCE) {
        return Err(EmbeddingError::NotCertified { stage: i, mesh: cover.certs.mesh, lebesgue: cover.certs.lebesgue, delta, required });
    }
    let offset = prev.coord_count;
    let count = offset + cover.len();
    let vertices: Vec<SparseVector> = cover
        .sets
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut v = prev.images[s.anchor].with_added(offset + k, eps / 2.0);
            v.dimension_hint = count;
            v
        })
        .collect();
    let weights = point_weights(space, &cover.sets).map_err(|source| EmbeddingError::Cover { stage: i, source })?;
    let results: Vec<Result<(SparseVector, Vec<(usize, f64)>), EmbeddingError>> = weights
        .par_iter()
        .enumerate()
        .map(|(x, ws)| {
            let total: f64 = ws.iter().map(|p| p.1).sum();
            if !(total > 0.0) {
                return Err(EmbeddingError::ZeroDenominator { stage: i, point: x });
            }
            let bary: Vec<(usize, f64)> = ws.iter().filter(|p| p.1 > 0.0).map(|&(k, w)| (k, w / total)).collect();
            let terms: Vec<(f64, &SparseVector)> = bary.iter().map(|&(k, l)| (l, &vertices[k])).collect();
            Ok((SparseVector::combination(&terms, count), bary))
        })
        .collect();
    let mut images = Vec::with_capacity(space.len());
    let mut barycentric = Vec::with_capacity(space.len());
    for r in results {
        let (v, b) = r?;
        images.push(v);
        barycentric.push(b);
    }
    Ok(EmbeddingStage { index: i, cover: Some(cover), vertices, coord_offset: offset, coord_count: count, images, barycentric, log2_eps, log2_delta })
}

fn representable(stage: usize, log2: f64) -> Result<f64, EmbeddingError> {
    let v = log2.exp2();
    if v.is_normal() && v.is_finite() {
        Ok(v)
    } else {
        Err(EmbeddingError::Unrepresentable { stage, log2 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverSource {
    Structured,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub stages: usize,
    pub source: CoverSource,
    /// Stop after the first stage whose cover is all singletons.
    pub stop_on_stabilization: bool,
    /// Stop before stage i when log2 ε_i < log2 ε_1 - this depth.
    pub guard_depth_log2: f64,
    /// In exact mode, refuse to run when log2 ε_1 is below this.
    pub min_log2_eps1: f64,
}

impl RunConfig {
    pub fn new(stages: usize, source: CoverSource) -> Self {
        RunConfig { stages, source, stop_on_stabilization: false, guard_depth_log2: PRECISION_GUARD_LOG2, min_log2_eps1: MIN_EXACT_LOG2_EPS1 }
    }
}

/// Images more than this many binary orders below ε_1 are lost to rounding
/// when compared against stage-1 coordinates, so later stages are not built.
pub const PRECISION_GUARD_LOG2: f64 = 40.0;
/// Absolute floor for any stage scale.
pub const MIN_LOG2_SCALE: f64 = -1000.0;
pub const MIN_EXACT_LOG2_EPS1: f64 = -60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    Stabilized { stage: usize },
    PrecisionGuard { stage: usize, log2_eps: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Construction {
    pub schedule: ScaleSchedule,
    pub stages: Vec<EmbeddingStage>,
    pub stop: StopReason,
    /// First stage whose cover consists of singletons.
    pub stabilized_at: Option<usize>,
}

impl Construction {
    pub fn last(&self) -> &EmbeddingStage {
        self.stages.last().expect("stage 0 is always present")
    }

    /// Index I of the last built stage.
    pub fn depth(&self) -> usize {
        self.last().index
    }

    /// 2 ε_{I+1}: radius of the interval known to contain f(x) around f_I(x).
    pub fn tail_bound(&self) -> f64 {
        2.0 * self.schedule.log2_eps[self.depth() + 1].exp2()
    }

    pub fn log2_tail_bound(&self) -> f64 {
        1.0 + self.schedule.log2_eps[self.depth() + 1]
    }
}

/// The limit map at x as the last built image plus its tail radius.
pub fn evaluate_limit(c: &Construction, x: usize) -> (SparseVector, f64) {
    (c.last().images[x].clone(), c.tail_bound())
}

fn cover_at(space: &FiniteMetricSpace, delta: f64, sigma: f64, source: CoverSource, min_dist: f64) -> Result<ColoredCover, CoverError> {
    if delta < min_dist {
        return singleton_cover(space, delta, sigma);
    }
    match source {
        CoverSource::Structured => build_structured_cover(space, CoverScale::Delta(delta), sigma),
        CoverSource::Greedy => build_greedy_cover(space, delta, sigma),
    }
}

/// Runs stages 1..=config.stages (fewer when a stop condition triggers).
pub fn run_construction(space: &FiniteMetricSpace, schedule: &ScaleSchedule, config: &RunConfig) -> Result<Construction, EmbeddingError> {
    if config.stages == 0 {
        return Err(EmbeddingError::InvalidParameter("at least one stage is required".into()));
    }
    if space.len() < 2 {
        return Err(EmbeddingError::InvalidParameter("the space needs at least two points".into()));
    }
    let schedule = schedule.extended(config.stages);
    if schedule.mode == ScheduleMode::Exact && schedule.log2_eps[1] < config.min_log2_eps1 {
        return Err(EmbeddingError::InvalidParameter(format!(
            "exact-mode ε_1 = 2^{} is below the supported floor 2^{}",
            schedule.log2_eps[1], config.min_log2_eps1
        )));
    }
    let min_dist = space.min_distance();
    let sigma = schedule.params.sigma;
    let mut stages = vec![initial_stage(space)];
    let mut stabilized_at = None;
    let mut stop = StopReason::Completed;
    for i in 1..=config.stages {
        let le = schedule.log2_eps[i];
        if i >= 2 && (le < schedule.log2_eps[1] - config.guard_depth_log2 || le < MIN_LOG2_SCALE || schedule.log2_delta[i] < MIN_LOG2_SCALE) {
            stop = StopReason::PrecisionGuard { stage: i, log2_eps: le };
            break;
        }
        let delta = representable(i, schedule.log2_delta[i])?;
        let cover = cover_at(space, delta, sigma, config.source, min_dist).map_err(|source| EmbeddingError::Cover { stage: i, source })?;
        let stage = refine_stage(space, stages.last().expect("nonempty"), cover, &schedule)?;
        let singleton = stage.is_singleton();
        stages.push(stage);
        if singleton && stabilized_at.is_none() {
            stabilized_at = Some(i);
            if config.stop_on_stabilization {
                stop = StopReason::Stabilized { stage: i };
                break;
            }
        }
    }
    Ok(Construction { schedule, stages, stop, stabilized_at })
}
