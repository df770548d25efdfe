use std::collections::BTreeMap;

use serde::Serialize;

use super::checks::{finish, Ctx};
use super::report::{LemmaReport, Tally};
use crate::embedding::{enumerate_simplices, EmbeddingStage, SparseVector};

/// Per-stage measure bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QMeasureStage {
    pub stage: usize,
    pub log2_eta: f64,
    pub simplices: usize,
    /// log2 of the number of covering cubes over all maximal simplices.
    pub cubes_log2: f64,
    /// log2 Σ diam(V')^q over the closed balls of radius 2η.
    pub sum_log2: f64,
    /// log2 4^q.
    pub bound_log2: f64,
    /// log2 (|Δ| (8√n)^n η^{q-n}) for the pre-inflation chain.
    pub chain_log2: f64,
    pub max_rank: usize,
}

/// Orthonormal basis of span{v_j - v_0} over the union support, by modified Gram-Schmidt.
fn affine_basis(vertices: &[&SparseVector]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut coords: Vec<usize> = vertices.iter().flat_map(|v| v.entries().iter().map(|p| p.0)).collect();
    coords.sort_unstable();
    coords.dedup();
    let index: BTreeMap<usize, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let dense = |v: &SparseVector| {
        let mut d = vec![0.0; coords.len()];
        for &(k, x) in v.entries() {
            d[index[&k]] = x;
        }
        d
    };
    let base = dense(vertices[0]);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &vertices[1..] {
        let mut w: Vec<f64> = dense(v).iter().zip(&base).map(|(a, b)| a - b).collect();
        let scale = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for b in &basis {
            let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= dot * bi;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 * scale && norm > 0.0 {
            basis.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    (coords, basis)
}

fn sparse_to_dense(v: &SparseVector, coords: &[usize]) -> Vec<f64> {
    coords.iter().map(|&k| v.get(k)).collect()
}

fn log2_sum_exp2(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp2()).sum::<f64>().log2()
}

/// Cube cover of each maximal simplex, inflated to closed balls of radius 2η.
/// Checks the measure sum against 4^q and that every image point lies within
/// η of its cube centre, so its η-ball sits inside the inflated ball.
pub(crate) fn stage_qmeasure(ctx: &Ctx, st: &EmbeddingStage, t: &mut Tally) -> QMeasureStage {
    let sched = &ctx.c.schedule;
    let i = st.index;
    let n = sched.params.n as usize;
    let q = sched.params.q;
    let log2_eta = sched.log2_eta[i];
    let eta = log2_eta.exp2();
    let eps = st.eps();
    let cx = enumerate_simplices(st, sched);
    let mut per_simplex = Vec::with_capacity(cx.maximal.len());
    let mut max_rank = 0usize;
    let mut bases = BTreeMap::new();
    for simplex in &cx.maximal {
        let verts: Vec<&SparseVector> = simplex.iter().map(|&k| &st.vertices[k]).collect();
        let (coords, basis) = affine_basis(&verts);
        max_rank = max_rank.max(basis.len());
        bases.insert(simplex.clone(), (coords, basis));
    }
    let edge_dim = n.max(max_rank).max(1) as f64;
    let edge = eta / edge_dim.sqrt();
    let subdivisions = (4.0 * eps / edge).ceil().max(1.0);
    for (_, basis) in bases.values() {
        per_simplex.push(basis.len() as f64 * subdivisions.log2());
    }
    for (x, b) in st.barycentric.iter().enumerate() {
        let mut key: Vec<usize> = b.iter().map(|p| p.0).collect();
        key.sort_unstable();
        // The carrier of x is a face; place it in a maximal simplex containing it.
        let Some((owner, (coords, basis))) = bases.iter().find(|(m, _)| key.iter().all(|k| m.binary_search(k).is_ok())) else {
            t.le(i, x, 1, f64::INFINITY, eta);
            continue;
        };
        let v0 = sparse_to_dense(&st.vertices[owner[0]], coords);
        let img = sparse_to_dense(&st.images[x], coords);
        // Image support outside the simplex coordinates means it is off the simplex.
        let off: f64 = st.images[x].entries().iter().filter(|p| coords.binary_search(&p.0).is_err()).map(|p| p.1 * p.1).sum();
        let rel: Vec<f64> = img.iter().zip(&v0).map(|(a, b)| a - b).collect();
        let mut centre = v0.clone();
        let mut inside = true;
        for bvec in basis {
            let c: f64 = rel.iter().zip(bvec).map(|(a, b)| a * b).sum();
            let idx = ((c + 2.0 * eps) / edge).floor();
            if idx < 0.0 || idx >= subdivisions {
                inside = false;
            }
            let cc = -2.0 * eps + (idx.clamp(0.0, subdivisions - 1.0) + 0.5) * edge;
            for (ci, bi) in centre.iter_mut().zip(bvec) {
                *ci += cc * bi;
            }
        }
        let dist = (img.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + off).sqrt();
        t.le(i, x, usize::from(!inside), dist, eta);
    }
    let cubes_log2 = log2_sum_exp2(&per_simplex);
    let sum_log2 = cubes_log2 + q * (2.0 + log2_eta);
    let bound_log2 = 2.0 * q;
    t.le(i, usize::MAX, 0, sum_log2, bound_log2);
    let nf = n as f64;
    let cube_factor = if n == 0 { 0.0 } else { nf * (8.0 * nf.sqrt()).log2() };
    let chain_log2 = (cx.len().max(1) as f64).log2() + cube_factor + (q - nf) * log2_eta;
    QMeasureStage { stage: i, log2_eta, simplices: cx.maximal.len(), cubes_log2, sum_log2, bound_log2, chain_log2, max_rank }
}

pub(crate) fn qmeasure(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    let mut stages = Vec::new();
    for st in ctx.c.stages.iter().skip(1) {
        stages.push(stage_qmeasure(ctx, st, &mut total));
    }
    let (mut r, m) = finish(total, "qmeasure", ctx, "sum over closed 2 eta balls <= 4^q (log2 units); containment within eta".into());
    let over = stages.iter().filter(|s| s.chain_log2 > 1e-12).count();
    if over > 0 {
        r.notes.push(format!("{over} stages exceed the pre-inflation chain bound of 1"));
    }
    r.details = serde_json::to_value(&stages).unwrap_or_default();
    (r, m)
}
