//! Colored covers with computed certificates: mesh, Lebesgue number,
//! multiplicity and non-redundancy, plus the distance-to-complement weights.

mod greedy;
mod refine;
mod structured;

pub use greedy::build_greedy_cover;
pub use refine::{size_controlled_refine, RefineOutcome};
pub use structured::{build_structured_cover, CoverScale};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metric::FiniteMetricSpace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoverError {
    #[error("invalid cover parameter: {0}")]
    InvalidParameter(String),
    #[error("set {set} is the whole space")]
    FullSpace { set: usize },
    #[error("set {set} is empty")]
    EmptySet { set: usize },
    #[error("point {point} lies in no cover set")]
    Uncovered { point: usize },
    #[error("Lebesgue number {achieved} is below the required {required}")]
    LebesgueShortfall { achieved: f64, required: f64, cover: Box<ColoredCover> },
    #[error("mesh {achieved} exceeds the target {target}")]
    MeshExceeded { achieved: f64, target: f64 },
    #[error("space has no structured cover: {0}")]
    NoStructure(String),
    #[error("no base set contains the ball around net point {center}: best weight {best} < {required}")]
    SnapFailed { center: usize, best: f64, required: f64 },
}

/// One cover element with its anchor (the smallest member id) and color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSet {
    pub members: Vec<usize>,
    pub anchor: usize,
    pub color: u32,
}

impl CoverSet {
    /// Sorts and dedups members; the anchor is the smallest id.
    pub fn new(mut members: Vec<usize>, color: u32) -> Self {
        members.sort_unstable();
        members.dedup();
        let anchor = members.first().copied().unwrap_or(0);
        CoverSet { members, anchor, color }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &CoverSet) -> bool {
        self.members.len() <= other.members.len() && self.members.iter().all(|x| other.contains(*x))
    }

    pub fn intersects(&self, other: &CoverSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certs {
    pub mesh: f64,
    pub lebesgue: f64,
    pub multiplicity: usize,
    #[serde(rename = "colorCount")]
    pub color_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoredCover {
    #[serde(rename = "targetDelta")]
    pub target_delta: f64,
    pub sigma: f64,
    pub sets: Vec<CoverSet>,
    pub certs: Certs,
}

impl ColoredCover {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// True when the computed certificates meet the target scale and coefficient.
    pub fn is_certified(&self) -> bool {
        self.certs.mesh <= self.target_delta * (1.0 + CERT_TOLERANCE) && self.certs.lebesgue >= self.sigma * self.target_delta * (1.0 - CERT_TOLERANCE)
    }

    /// Indices of the sets containing each point.
    pub fn membership(&self, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); len];
        for (k, s) in self.sets.iter().enumerate() {
            for &x in &s.members {
                out[x].push(k);
            }
        }
        out
    }
}

/// Relative slack for comparing computed certificates against targets.
pub const CERT_TOLERANCE: f64 = 1e-9;

/// Sorted order of a one-dimensional space, for fast nearest-outsider searches.
pub(crate) struct LineIndex {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl LineIndex {
    pub(crate) fn of(space: &FiniteMetricSpace) -> Option<Self> {
        let order = space.sorted_line()?;
        let mut rank = vec![0; order.len()];
        for (r, &x) in order.iter().enumerate() {
            rank[x] = r;
        }
        Some(LineIndex { order, rank })
    }
}

/// `d(x, X \ U)`: distance from `x` to the nearest non-member. Zero for non-members.
pub fn weight(space: &FiniteMetricSpace, set: &CoverSet, x: usize) -> Result<f64, CoverError> {
    if set.members.len() >= space.len() {
        return Err(CoverError::FullSpace { set: 0 });
    }
    if !set.contains(x) {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for y in 0..space.len() {
        if !set.contains(y) {
            best = best.min(space.dist(x, y));
        }
    }
    Ok(best)
}

/// Weights of every member of `members`, in member order.
pub(crate) fn member_weights(space: &FiniteMetricSpace, members: &[usize], line: Option<&LineIndex>) -> Vec<f64> {
    let n = space.len();
    let mut inside = vec![false; n];
    for &x in members {
        inside[x] = true;
    }
    match line {
        Some(li) => members
            .iter()
            .map(|&x| {
                let r = li.rank[x];
                let mut best = f64::INFINITY;
                if let Some(l) = (0..r).rev().find(|&s| !inside[li.order[s]]) {
                    best = space.dist(x, li.order[l]);
                }
                if let Some(h) = (r + 1..n).find(|&s| !inside[li.order[s]]) {
                    best = best.min(space.dist(x, li.order[h]));
                }
                best
            })
            .collect(),
        None => {
            let outside: Vec<usize> = (0..n).filter(|&y| !inside[y]).collect();
            members.iter().map(|&x| outside.iter().map(|&y| space.dist(x, y)).fold(f64::INFINITY, f64::min)).collect()
        }
    }
}

/// Diameter of a point subset.
pub(crate) fn set_diameter(space: &FiniteMetricSpace, members: &[usize], line: Option<&LineIndex>) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    if let Some(li) = line {
        let lo = members.iter().min_by_key(|&&x| li.rank[x]).copied().unwrap_or(0);
        let hi = members.iter().max_by_key(|&&x| li.rank[x]).copied().unwrap_or(0);
        return space.dist(lo, hi);
    }
    let mut best = 0.0f64;
    for (a, &x) in members.iter().enumerate() {
        for &y in &members[..a] {
            best = best.max(space.dist(x, y));
        }
    }
    best
}

/// Per-point list of `(set index, weight)` for the sets containing the point.
pub fn point_weights(space: &FiniteMetricSpace, sets: &[CoverSet]) -> Result<Vec<Vec<(usize, f64)>>, CoverError> {
    for (k, s) in sets.iter().enumerate() {
        if s.members.is_empty() {
            return Err(CoverError::EmptySet { set: k });
        }
        if s.members.len() >= space.len() {
            return Err(CoverError::FullSpace { set: k });
        }
    }
    let line = LineIndex::of(space);
    let per_set: Vec<Vec<f64>> = sets.par_iter().map(|s| member_weights(space, &s.members, line.as_ref())).collect();
    let mut out = vec![Vec::new(); space.len()];
    for (k, (s, ws)) in sets.iter().zip(per_set).enumerate() {
        for (&x, w) in s.members.iter().zip(ws) {
            out[x].push((k, w));
        }
    }
    Ok(out)
}

/// First-fit coloring in the given set order: each set takes the smallest
/// color unused by earlier sets it meets.
pub fn first_fit_colors(sets: &mut [CoverSet]) -> usize {
    let mut count = 0usize;
    for k in 0..sets.len() {
        let mut used: Vec<u32> = (0..k).filter(|&j| sets[j].intersects(&sets[k])).map(|j| sets[j].color).collect();
        used.sort_unstable();
        used.dedup();
        let mut c = 0u32;
        for u in used {
            if u == c {
                c += 1;
            } else if u > c {
                break;
            }
        }
        sets[k].color = c;
        count = count.max(c as usize + 1);
    }
    count
}

/// Orders sets by (color, min member id), the vertex order used by the embedding.
pub fn canonical_order(sets: &mut [CoverSet]) {
    sets.sort_by(|a, b| a.color.cmp(&b.color).then(a.anchor.cmp(&b.anchor)).then(a.members.cmp(&b.members)));
}

/// Computes mesh, Lebesgue number, multiplicity and color count from scratch.
pub fn compute_certs(space: &FiniteMetricSpace, sets: &[CoverSet]) -> Result<Certs, CoverError> {
    let weights = point_weights(space, sets)?;
    let mut lebesgue = f64::INFINITY;
    let mut multiplicity = 0usize;
    for (x, ws) in weights.iter().enumerate() {
        if ws.is_empty() {
            return Err(CoverError::Uncovered { point: x });
        }
        multiplicity = multiplicity.max(ws.len());
        lebesgue = lebesgue.min(ws.iter().map(|p| p.1).fold(0.0, f64::max));
    }
    let line = LineIndex::of(space);
    let mesh = sets.par_iter().map(|s| set_diameter(space, &s.members, line.as_ref())).reduce(|| 0.0, f64::max);
    let mut colors: Vec<u32> = sets.iter().map(|s| s.color).collect();
    colors.sort_unstable();
    colors.dedup();
    Ok(Certs { mesh, lebesgue, multiplicity, color_count: colors.len() })
}

/// Wraps sets into a cover with freshly computed certificates.
pub fn certify(space: &FiniteMetricSpace, mut sets: Vec<CoverSet>, target_delta: f64, sigma: f64) -> Result<ColoredCover, CoverError> {
    canonical_order(&mut sets);
    let certs = compute_certs(space, &sets)?;
    Ok(ColoredCover { target_delta, sigma, sets, certs })
}

/// Like [`certify`] but fails when the mesh or Lebesgue targets are missed.
pub fn certify_strict(space: &FiniteMetricSpace, sets: Vec<CoverSet>, target_delta: f64, sigma: f64) -> Result<ColoredCover, CoverError> {
    let cover = certify(space, sets, target_delta, sigma)?;
    if cover.certs.mesh > target_delta * (1.0 + CERT_TOLERANCE) {
        return Err(CoverError::MeshExceeded { achieved: cover.certs.mesh, target: target_delta });
    }
    let required = sigma * target_delta;
    if cover.certs.lebesgue < required * (1.0 - CERT_TOLERANCE) {
        return Err(CoverError::LebesgueShortfall { achieved: cover.certs.lebesgue, required, cover: Box::new(cover) });
    }
    Ok(cover)
}

/// The cover by singletons; certified whenever `delta` is below the minimum distance.
pub fn singleton_cover(space: &FiniteMetricSpace, target_delta: f64, sigma: f64) -> Result<ColoredCover, CoverError> {
    let sets = (0..space.len()).map(|x| CoverSet::new(vec![x], 0)).collect();
    certify(space, sets, target_delta, sigma)
}

pub(crate) fn validate_scale(delta: f64, sigma: f64) -> Result<(), CoverError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CoverError::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(CoverError::InvalidParameter(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    Ok(())
}

/// Removes sets contained in another set, largest candidates first, keeping
/// each removal only if the Lebesgue number stays at least `floor`.
pub fn prune_redundant(space: &FiniteMetricSpace, sets: &mut Vec<CoverSet>, floor: f64) -> Result<usize, CoverError> {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[b].members.len().cmp(&sets[a].members.len()).then(sets[a].anchor.cmp(&sets[b].anchor)));
    let mut alive = vec![true; sets.len()];
    let mut removed = 0;
    for &k in &order {
        let redundant = (0..sets.len()).any(|j| j != k && alive[j] && sets[k].is_subset_of(&sets[j]) && (sets[k].members != sets[j].members || j < k));
        if !redundant {
            continue;
        }
        alive[k] = false;
        let trial: Vec<CoverSet> = sets.iter().zip(&alive).filter(|(_, a)| **a).map(|(s, _)| s.clone()).collect();
        match compute_certs(space, &trial) {
            Ok(c) if c.lebesgue >= floor * (1.0 - CERT_TOLERANCE) => removed += 1,
            _ => alive[k] = true,
        }
    }
    let mut keep = alive.into_iter();
    sets.retain(|_| keep.next().unwrap_or(true));
    Ok(removed)
}

/// Full recomputation of a cover's certificates and structural properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub computed: Option<Certs>,
    pub covering: bool,
    pub full_space_sets: Vec<usize>,
    pub empty_sets: Vec<usize>,
    pub bad_anchors: Vec<usize>,
    pub coloring_conflicts: Vec<(usize, usize)>,
    pub redundant_pairs: Vec<(usize, usize)>,
    pub discrepancies: Vec<String>,
    /// Points whose Lebesgue-number ball escapes every set.
    pub lebesgue_ball_failures: Vec<usize>,
    pub certified: bool,
}

impl CoverReport {
    pub fn is_valid(&self) -> bool {
        self.covering
            && self.full_space_sets.is_empty()
            && self.empty_sets.is_empty()
            && self.bad_anchors.is_empty()
            && self.coloring_conflicts.is_empty()
            && self.redundant_pairs.is_empty()
            && self.discrepancies.is_empty()
            && self.lebesgue_ball_failures.is_empty()
    }
}

fn differs(a: f64, b: f64) -> bool {
    (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Recomputes everything about a cover and compares with its stored certificates.
pub fn verify_cover(space: &FiniteMetricSpace, cover: &ColoredCover) -> CoverReport {
    let n = space.len();
    let sets = &cover.sets;
    let full_space_sets: Vec<usize> = (0..sets.len()).filter(|&k| sets[k].members.len() >= n).collect();
    let empty_sets: Vec<usize> = (0..sets.len()).filter(|&k| sets[k].members.is_empty()).collect();
    let bad_anchors: Vec<usize> = (0..sets.len()).filter(|&k| !sets[k].members.is_empty() && (!sets[k].contains(sets[k].anchor) || sets[k].anchor != sets[k].members[0])).collect();
    let mut covered = vec![false; n];
    for s in sets {
        for &x in &s.members {
            if x < n {
                covered[x] = true;
            }
        }
    }
    let covering = covered.iter().all(|c| *c);
    let mut coloring_conflicts = Vec::new();
    let mut redundant_pairs = Vec::new();
    for a in 0..sets.len() {
        for b in 0..sets.len() {
            if a == b {
                continue;
            }
            if a < b && sets[a].color == sets[b].color && sets[a].intersects(&sets[b]) {
                coloring_conflicts.push((a, b));
            }
            if sets[a].is_subset_of(&sets[b]) && (sets[a].members != sets[b].members || a < b) {
                redundant_pairs.push((a, b));
            }
        }
    }
    let mut discrepancies = Vec::new();
    let mut lebesgue_ball_failures = Vec::new();
    let computed = if full_space_sets.is_empty() && empty_sets.is_empty() && covering {
        match (compute_certs(space, sets), point_weights(space, sets)) {
            (Ok(c), Ok(pw)) => {
                if differs(c.mesh, cover.certs.mesh) {
                    discrepancies.push(format!("mesh: stored {} computed {}", cover.certs.mesh, c.mesh));
                }
                if differs(c.lebesgue, cover.certs.lebesgue) {
                    discrepancies.push(format!("lebesgue: stored {} computed {}", cover.certs.lebesgue, c.lebesgue));
                }
                if c.multiplicity != cover.certs.multiplicity {
                    discrepancies.push(format!("multiplicity: stored {} computed {}", cover.certs.multiplicity, c.multiplicity));
                }
                if c.color_count != cover.certs.color_count {
                    discrepancies.push(format!("colorCount: stored {} computed {}", cover.certs.color_count, c.color_count));
                }
                // Direct ball containment: every y with d(x, y) < cert must share a set with x.
                let cert = cover.certs.lebesgue;
                for x in 0..n {
                    let ball: Vec<usize> = (0..n).filter(|&y| space.dist(x, y) < cert).collect();
                    if !pw[x].iter().any(|&(k, _)| ball.iter().all(|&y| sets[k].contains(y))) {
                        lebesgue_ball_failures.push(x);
                    }
                }
                Some(c)
            }
            _ => None,
        }
    } else {
        None
    };
    let certified = computed.as_ref().is_some_and(|c| {
        c.mesh <= cover.target_delta * (1.0 + CERT_TOLERANCE) && c.lebesgue >= cover.sigma * cover.target_delta * (1.0 - CERT_TOLERANCE)
    });
    CoverReport { computed, covering, full_space_sets, empty_sets, bad_anchors, coloring_conflicts, redundant_pairs, discrepancies, lebesgue_ball_failures, certified }
}

/// Outcome of the weight-sum checks for one cover at scale δ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightLemmaReport {
    /// Sets with a member deeper than 2δ that still meet another set.
    pub isolation_violations: Vec<usize>,
    /// Non-isolated points whose weight sum falls outside [ξ, 2Mδ].
    pub sum_bound_violations: Vec<usize>,
    /// Pairs where the weight sum moves faster than 2M·d.
    pub sum_lipschitz_violations: Vec<(usize, usize)>,
    pub pairs_checked: usize,
}

impl WeightLemmaReport {
    pub fn holds(&self) -> bool {
        self.isolation_violations.is_empty() && self.sum_bound_violations.is_empty() && self.sum_lipschitz_violations.is_empty()
    }
}

/// Checks isolation of deep sets, two-sided bounds on weight sums, and the
/// Lipschitz bound on weight sums, using the cover's own certificates.
pub fn check_weight_lemmas(space: &FiniteMetricSpace, cover: &ColoredCover) -> Result<WeightLemmaReport, CoverError> {
    let pw = point_weights(space, &cover.sets)?;
    let delta = cover.target_delta;
    let m = cover.certs.multiplicity as f64;
    let xi = cover.certs.lebesgue;
    let tol = 1.0 + 1e-12;
    let mut isolation_violations = Vec::new();
    let mut sum_bound_violations = Vec::new();
    let sums: Vec<f64> = pw.iter().map(|ws| ws.iter().map(|p| p.1).sum()).collect();
    for (x, ws) in pw.iter().enumerate() {
        let deep: Vec<usize> = ws.iter().filter(|p| p.1 > 2.0 * delta).map(|p| p.0).collect();
        for &k in &deep {
            if (0..cover.sets.len()).any(|j| j != k && cover.sets[j].intersects(&cover.sets[k])) {
                isolation_violations.push(k);
            }
        }
        if deep.is_empty() && (sums[x] * tol < xi || sums[x] > 2.0 * m * delta * tol) {
            sum_bound_violations.push(x);
        }
    }
    isolation_violations.sort_unstable();
    isolation_violations.dedup();
    let n = space.len();
    let mut sum_lipschitz_violations = Vec::new();
    for x in 0..n {
        for y in 0..x {
            if (sums[x] - sums[y]).abs() > 2.0 * m * space.dist(x, y) * tol {
                sum_lipschitz_violations.push((y, x));
            }
        }
    }
    Ok(WeightLemmaReport { isolation_violations, sum_bound_violations, sum_lipschitz_violations, pairs_checked: n * n.saturating_sub(1) / 2 })
}

#[cfg(test)]
mod tests;
