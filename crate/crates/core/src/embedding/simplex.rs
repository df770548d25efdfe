use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EmbeddingStage;
use crate::schedule::{ScaleSchedule, ScheduleMode};

/// Simplices spanned by vertex sets whose cover elements share a sample point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexComplex {
    pub stage: usize,
    /// Distinct membership sets realized by sample points, sorted.
    pub maximal: Vec<Vec<usize>>,
    /// All nonempty faces of the maximal simplices, sorted.
    pub simplices: Vec<Vec<usize>>,
    pub max_vertices: usize,
    /// log2 |𝒰_i|^{n+2}.
    pub cover_bound_log2: f64,
    pub cover_bound_holds: bool,
    /// log2 N^{(n+2) log2(2/σδ_i)}, evaluated in exact mode only.
    pub schedule_bound_log2: Option<f64>,
    pub schedule_bound_holds: Option<bool>,
}

impl SimplexComplex {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }
}

/// Faces are enumerated only up to this many vertices per simplex.
pub const MAX_SIMPLEX_VERTICES: usize = 20;

pub fn enumerate_simplices(stage: &EmbeddingStage, schedule: &ScaleSchedule) -> SimplexComplex {
    let maximal: BTreeSet<Vec<usize>> = stage
        .barycentric
        .iter()
        .map(|b| {
            let mut v: Vec<usize> = b.iter().map(|p| p.0).collect();
            v.sort_unstable();
            v
        })
        .filter(|v| !v.is_empty())
        .collect();
    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for m in &maximal {
        let k = m.len().min(MAX_SIMPLEX_VERTICES);
        for mask in 1u32..(1u32 << k) {
            faces.insert((0..k).filter(|b| mask & (1 << b) != 0).map(|b| m[b]).collect());
        }
    }
    let max_vertices = maximal.iter().map(Vec::len).max().unwrap_or(0);
    let n = schedule.params.n as f64;
    let cover_len = stage.vertices.len().max(1) as f64;
    let cover_bound_log2 = (n + 2.0) * cover_len.log2();
    let count_log2 = (faces.len().max(1) as f64).log2();
    let (schedule_bound_log2, schedule_bound_holds) = if schedule.mode == ScheduleMode::Exact && stage.index >= 1 {
        let log2_n = (schedule.params.big_n as f64).log2();
        let b = (n + 2.0) * log2_n * (1.0 - schedule.params.sigma.log2() - stage.log2_delta);
        (Some(b), Some(count_log2 <= b + 1e-12))
    } else {
        (None, None)
    };
    SimplexComplex {
        stage: stage.index,
        maximal: maximal.into_iter().collect(),
        simplices: faces.into_iter().collect(),
        max_vertices,
        cover_bound_log2,
        cover_bound_holds: count_log2 <= cover_bound_log2 + 1e-12,
        schedule_bound_log2,
        schedule_bound_holds,
    }
}
