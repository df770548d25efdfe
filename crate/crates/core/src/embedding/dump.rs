use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingStage, SparseVector};
use crate::cover::ColoredCover;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCerts {
    pub mesh: f64,
    pub lebesgue: f64,
    pub multiplicity: usize,
    #[serde(rename = "colorCount")]
    pub color_count: usize,
    pub sets: usize,
    pub singleton: bool,
}

/// Serialized stage: sparse vectors are lists of `[coord, value]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDump {
    pub i: usize,
    /// m_i.
    pub m: usize,
    /// m_{i-1}.
    pub offset: usize,
    pub log2_eps: f64,
    pub log2_delta: f64,
    pub vertices: Vec<Vec<(usize, f64)>>,
    pub images: BTreeMap<usize, Vec<(usize, f64)>>,
    pub barycentric: BTreeMap<usize, Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certs: Option<StageCerts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<ColoredCover>,
}

impl EmbeddingStage {
    pub fn to_dump(&self) -> StageDump {
        StageDump {
            i: self.index,
            m: self.coord_count,
            offset: self.coord_offset,
            log2_eps: self.log2_eps,
            log2_delta: self.log2_delta,
            vertices: self.vertices.iter().map(|v| v.entries().to_vec()).collect(),
            images: self.images.iter().enumerate().map(|(x, v)| (x, v.entries().to_vec())).collect(),
            barycentric: self.barycentric.iter().enumerate().map(|(x, b)| (x, b.clone())).collect(),
            certs: self.cover.as_ref().map(|c| StageCerts {
                mesh: c.certs.mesh,
                lebesgue: c.certs.lebesgue,
                multiplicity: c.certs.multiplicity,
                color_count: c.certs.color_count,
                sets: c.len(),
                singleton: self.is_singleton(),
            }),
            cover: self.cover.clone(),
        }
    }

    pub fn from_dump(d: StageDump) -> Result<Self, EmbeddingError> {
        let n = d.images.len();
        if d.images.keys().copied().ne(0..n) || d.barycentric.len() != n {
            return Err(EmbeddingError::InvalidParameter(format!("stage {} dump has non-contiguous point ids", d.i)));
        }
        if d.i > 0 && d.cover.is_none() {
            return Err(EmbeddingError::InvalidParameter(format!("stage {} dump has no cover", d.i)));
        }
        let m = d.m;
        Ok(EmbeddingStage {
            index: d.i,
            vertices: d.vertices.into_iter().map(|v| SparseVector::from_pairs(v, m)).collect(),
            images: d.images.into_values().map(|v| SparseVector::from_pairs(v, m)).collect(),
            barycentric: d.barycentric.into_values().collect(),
            cover: d.cover,
            coord_offset: d.offset,
            coord_count: m,
            log2_eps: d.log2_eps,
            log2_delta: d.log2_delta,
        })
    }
}
