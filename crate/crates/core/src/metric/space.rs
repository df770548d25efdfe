use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::cantor::CantorSpec;
use super::rational::Exact;
use super::MetricError;

/// Where a space came from; structured covers dispatch on this.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Cantor { cantor: CantorSpec },
    /// `C x I^n`, point id = cantor_index * res^n + row-major grid index.
    Product { cantor: CantorSpec, n: u32, grid_res: usize },
    /// `I^n` on a regular grid, row-major ids.
    Cube { n: u32, grid_res: usize },
    /// `{0} ∪ {1/k : 1 <= k <= m}`, point id k holds 1/k and id 0 holds 0.
    Harmonic { m: usize },
    Random { count: usize, dim: usize, seed: u64 },
    Explicit { label: String },
    Snowflake { base: Box<Provenance>, power: f64 },
}

impl Provenance {
    /// The provenance with any snowflake wrappers stripped.
    pub fn base(&self) -> &Provenance {
        match self {
            Provenance::Snowflake { base, .. } => base.base(),
            other => other,
        }
    }
}

/// Raw distance data, before the global scale and power are applied.
#[derive(Clone, Debug, PartialEq)]
pub enum RawMetric {
    /// Euclidean distance between rows of a flat `len x dim` coordinate table.
    Coords { dim: usize, data: Vec<f64> },
    /// Dense symmetric matrix, row-major.
    Matrix(Vec<f64>),
}

/// A finite metric space with distance `scale * raw(x, y)^power`.
///
/// Point identifiers are the indices `0..len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    len: usize,
    raw: RawMetric,
    scale: f64,
    power: f64,
    diameter: f64,
    /// Exact one-dimensional raw coordinates and an exact scale, when available.
    exact: Option<(Vec<BigRational>, BigRational)>,
    provenance: Provenance,
}

/// Above this many points we refuse to build a dense matrix.
pub const MAX_MATRIX_POINTS: usize = 8192;
/// Above this many points coordinate spaces are refused.
pub const MAX_COORD_POINTS: usize = 1 << 21;

impl FiniteMetricSpace {
    /// Builds a space from raw Euclidean coordinates. The diameter is computed unless supplied.
    pub fn from_coords(
        dim: usize,
        data: Vec<f64>,
        provenance: Provenance,
        known_diameter: Option<f64>,
    ) -> Result<Self, MetricError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(MetricError::InvalidParameter(format!("coordinate table of {} values is not a multiple of dim {dim}", data.len())));
        }
        let len = data.len() / dim;
        if len > MAX_COORD_POINTS {
            return Err(MetricError::TooLarge { points: len, limit: MAX_COORD_POINTS });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::InvalidParameter("non-finite coordinate".into()));
        }
        let mut s = FiniteMetricSpace { len, raw: RawMetric::Coords { dim, data }, scale: 1.0, power: 1.0, diameter: 0.0, exact: None, provenance };
        s.diameter = match known_diameter {
            Some(d) => d,
            None => s.compute_diameter(),
        };
        Ok(s)
    }

    /// Builds a one-dimensional space from exact coordinates.
    pub fn from_exact_line(points: Vec<BigRational>, provenance: Provenance) -> Result<Self, MetricError> {
        let data: Vec<f64> = points.iter().map(super::rational::ratio_to_f64).collect();
        let lo = points.iter().min().cloned().unwrap_or_else(BigRational::zero);
        let hi = points.iter().max().cloned().unwrap_or_else(BigRational::zero);
        let mut s = Self::from_coords(1, data, provenance, Some(super::rational::ratio_to_f64(&(&hi - &lo))))?;
        s.exact = Some((points, BigRational::from_integer(1.into())));
        Ok(s)
    }

    /// Builds a space from a full distance matrix, validating shape, symmetry and zero diagonal.
    pub fn from_matrix(len: usize, matrix: Vec<f64>, provenance: Provenance) -> Result<Self, MetricError> {
        if len > MAX_MATRIX_POINTS {
            return Err(MetricError::TooLarge { points: len, limit: MAX_MATRIX_POINTS });
        }
        if matrix.len() != len * len {
            return Err(MetricError::InvalidParameter(format!("matrix has {} entries, expected {}", matrix.len(), len * len)));
        }
        for i in 0..len {
            if matrix[i * len + i] != 0.0 {
                return Err(MetricError::AxiomViolation { kind: "identity".into(), points: vec![i], detail: "nonzero diagonal".into() });
            }
            for j in 0..i {
                let (a, b) = (matrix[i * len + j], matrix[j * len + i]);
                if !a.is_finite() || a <= 0.0 {
                    return Err(MetricError::AxiomViolation { kind: "positivity".into(), points: vec![j, i], detail: format!("distance {a}") });
                }
                if a != b {
                    return Err(MetricError::AxiomViolation { kind: "symmetry".into(), points: vec![j, i], detail: format!("{a} != {b}") });
                }
            }
        }
        let mut s = FiniteMetricSpace { len, raw: RawMetric::Matrix(matrix), scale: 1.0, power: 1.0, diameter: 0.0, exact: None, provenance };
        s.diameter = s.compute_diameter();
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn raw(&self) -> &RawMetric {
        &self.raw
    }

    /// Raw coordinates of point `i`, when the space is coordinate-backed.
    pub fn raw_coords(&self, i: usize) -> Option<&[f64]> {
        match &self.raw {
            RawMetric::Coords { dim, data } => Some(&data[i * dim..(i + 1) * dim]),
            RawMetric::Matrix(_) => None,
        }
    }

    /// Coordinates as an isometric Euclidean embedding (scaled), when the metric is Euclidean.
    pub fn embedding_coords(&self, i: usize) -> Option<Vec<f64>> {
        if self.power != 1.0 {
            return None;
        }
        self.raw_coords(i).map(|c| c.iter().map(|v| v * self.scale).collect())
    }

    #[inline]
    fn raw_dist(&self, i: usize, j: usize) -> f64 {
        match &self.raw {
            RawMetric::Coords { dim, data } => {
                let (a, b) = (&data[i * dim..(i + 1) * dim], &data[j * dim..(j + 1) * dim]);
                if *dim == 1 {
                    (a[0] - b[0]).abs()
                } else {
                    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                }
            }
            RawMetric::Matrix(m) => m[i * self.len + j],
        }
    }

    /// Distance between points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let r = self.raw_dist(i, j);
        if self.power == 1.0 {
            self.scale * r
        } else {
            self.scale * r.powf(self.power)
        }
    }

    /// Exact distance, available for spaces built from exact line coordinates.
    pub fn exact_dist(&self, i: usize, j: usize) -> Option<BigRational> {
        let (pts, scale) = self.exact.as_ref()?;
        Some((&pts[i] - &pts[j]).abs() * scale)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_coords(&self) -> Option<&[BigRational]> {
        self.exact.as_ref().map(|(p, _)| p.as_slice())
    }

    pub fn exact_scale(&self) -> Option<&BigRational> {
        self.exact.as_ref().map(|(_, s)| s)
    }

    fn compute_diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len {
            for j in 0..i {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Smallest positive pairwise distance (infinite for a one-point space).
    pub fn min_distance(&self) -> f64 {
        if let Some(line) = self.sorted_line() {
            return line.windows(2).map(|w| self.dist(w[0], w[1])).fold(f64::INFINITY, f64::min);
        }
        let mut best = f64::INFINITY;
        for i in 0..self.len {
            for j in 0..i {
                best = best.min(self.dist(i, j));
            }
        }
        best
    }

    /// Point ids sorted by coordinate, for one-dimensional coordinate spaces.
    pub fn sorted_line(&self) -> Option<Vec<usize>> {
        match &self.raw {
            RawMetric::Coords { dim: 1, data } => {
                let mut ids: Vec<usize> = (0..self.len).collect();
                ids.sort_by(|&a, &b| data[a].total_cmp(&data[b]).then(a.cmp(&b)));
                Some(ids)
            }
            _ => None,
        }
    }

    /// Rescales so the diameter becomes 1. Idempotent on normalized spaces.
    pub fn normalize(&self) -> Result<Self, MetricError> {
        if self.len < 2 || !(self.diameter > 0.0) {
            return Err(MetricError::DegenerateDiameter);
        }
        let mut s = self.clone();
        if self.diameter == 1.0 {
            return Ok(s);
        }
        let factor = 1.0 / self.diameter;
        s.scale *= factor;
        s.diameter = 1.0;
        if let Some((pts, scale)) = &mut s.exact {
            if pts.len() >= 2 {
                let lo = pts.iter().min().cloned().unwrap_or_else(BigRational::zero);
                let hi = pts.iter().max().cloned().unwrap_or_else(BigRational::zero);
                let raw_diam = hi - lo;
                *scale = BigRational::from_integer(1.into()) / raw_diam;
            }
        }
        Ok(s)
    }

    /// The metric `d^p` for `0 < p <= 1`, keeping the diameter at 1 when it was 1.
    pub fn powered(&self, p: f64) -> Result<Self, MetricError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MetricError::InvalidParameter(format!("snowflake exponent {p} must lie in (0, 1]")));
        }
        let mut s = self.clone();
        s.power = self.power * p;
        s.scale = self.scale.powf(p);
        s.diameter = self.diameter.powf(p);
        if p != 1.0 {
            s.exact = None;
        }
        s.provenance = Provenance::Snowflake { base: Box::new(self.provenance.clone()), power: p };
        Ok(s)
    }

    /// Ids with `d(x, y) <= r`, in id order.
    pub fn ball(&self, x: usize, r: f64) -> Vec<usize> {
        (0..self.len).filter(|&y| self.dist(x, y) <= r).collect()
    }

    /// Serializable dump of the space.
    pub fn to_dump(&self) -> SpaceDump {
        let points: Vec<usize> = (0..self.len).collect();
        let (coords, distances, matrix) = match &self.raw {
            RawMetric::Coords { dim, data } => (Some(data.chunks(*dim).map(|c| c.to_vec()).collect()), "coords".to_string(), None),
            RawMetric::Matrix(m) => (None, "matrix".to_string(), Some(m.chunks(self.len).map(|c| c.to_vec()).collect())),
        };
        SpaceDump {
            points,
            coords,
            distances,
            matrix,
            diameter: self.diameter,
            scale: self.scale,
            power: self.power,
            exact: self.exact.as_ref().map(|(p, s)| ExactDump { coords: p.iter().cloned().map(Exact).collect(), scale: Exact(s.clone()) }),
            provenance: self.provenance.clone(),
        }
    }

    /// Rebuilds a space from its dump, re-validating the metric data.
    pub fn from_dump(d: SpaceDump) -> Result<Self, MetricError> {
        let len = d.points.len();
        if d.points.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(MetricError::Parse("point ids must be 0..len in order".into()));
        }
        let mut s = match d.distances.as_str() {
            "coords" => {
                let rows = d.coords.ok_or_else(|| MetricError::Parse("coords missing".into()))?;
                let dim = rows.first().map(|r| r.len()).unwrap_or(1);
                if rows.len() != len || rows.iter().any(|r| r.len() != dim) {
                    return Err(MetricError::Parse("ragged coordinate table".into()));
                }
                FiniteMetricSpace::from_coords(dim, rows.concat(), d.provenance.clone(), Some(1.0))?
            }
            "matrix" => {
                let rows = d.matrix.ok_or_else(|| MetricError::Parse("matrix missing".into()))?;
                if rows.len() != len || rows.iter().any(|r| r.len() != len) {
                    return Err(MetricError::Parse("matrix shape does not match points".into()));
                }
                FiniteMetricSpace::from_matrix(len, rows.concat(), d.provenance.clone())?
            }
            other => return Err(MetricError::Parse(format!("unknown distance storage {other:?}"))),
        };
        if !(d.scale > 0.0 && d.scale.is_finite() && d.power > 0.0 && d.power <= 1.0) {
            return Err(MetricError::Parse("scale must be positive and power in (0, 1]".into()));
        }
        s.scale = d.scale;
        s.power = d.power;
        s.diameter = d.diameter;
        if let Some(e) = d.exact {
            if e.coords.len() != len {
                return Err(MetricError::Parse("exact coordinate count mismatch".into()));
            }
            s.exact = Some((e.coords.into_iter().map(|c| c.0).collect(), e.scale.0));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDump {
    pub coords: Vec<Exact>,
    pub scale: Exact,
}

/// JSON form of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDump {
    pub points: Vec<usize>,
    pub coords: Option<Vec<Vec<f64>>>,
    pub distances: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub diameter: f64,
    pub scale: f64,
    pub power: f64,
    #[serde(default)]
    pub exact: Option<ExactDump>,
    pub provenance: Provenance,
}
