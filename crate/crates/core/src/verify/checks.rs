use std::collections::BTreeSet;

use rayon::prelude::*;

use super::report::{LemmaReport, Tally};
use crate::cover::check_weight_lemmas;
use crate::embedding::{enumerate_simplices, Construction, EmbeddingStage};
use crate::metric::FiniteMetricSpace;
use crate::schedule::ScheduleMode;

pub(crate) struct Ctx<'a> {
    pub space: &'a FiniteMetricSpace,
    pub c: &'a Construction,
}

impl<'a> Ctx<'a> {
    pub fn mode(&self) -> ScheduleMode {
        self.c.schedule.mode
    }

    pub fn sigma(&self) -> f64 {
        self.c.schedule.params.sigma
    }

    pub fn n_plus_one(&self) -> usize {
        self.c.schedule.params.n as usize + 1
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.c.schedule.log2_eps[i].exp2()
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.c.schedule.log2_delta[i].exp2()
    }

    /// Largest multiplicity among stages 1..=i, and at least n+1.
    pub fn multiplicity_through(&self, i: usize) -> usize {
        self.c.stages.iter().take(i + 1).map(EmbeddingStage::multiplicity).max().unwrap_or(1).max(self.n_plus_one())
    }

    /// 128 M² / σ² with M the multiplicity in force through stage i.
    pub fn lipschitz_l(&self, i: usize) -> f64 {
        let m = self.multiplicity_through(i) as f64;
        128.0 * m * m / (self.sigma() * self.sigma())
    }
}

/// Min-reduction over all unordered pairs x < y.
pub(crate) fn over_pairs<F>(n: usize, f: F) -> Tally
where
    F: Fn(usize, usize, &mut Tally) + Sync,
{
    (0..n)
        .into_par_iter()
        .fold(Tally::default, |mut t, x| {
            for y in x + 1..n {
                f(x, y, &mut t);
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

pub(crate) fn finish(t: Tally, lemma: &str, ctx: &Ctx, constant: String) -> (LemmaReport, f64) {
    let m = t.min_abs_relative;
    let mut r = t.into_report(lemma, ctx.mode());
    r.constant = Some(constant);
    (r, m)
}

/// d(x,y) < σδ_i ⟹ d(f_i x, f_i y) <= (L/2)(ε_i/δ_i) d(x,y), every built stage.
pub(crate) fn local_lipschitz(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for st in &ctx.c.stages {
        let i = st.index;
        let (eps, delta) = (ctx.eps(i), ctx.delta(i));
        let k = ctx.lipschitz_l(i) / 2.0 * eps / delta;
        let reach = ctx.sigma() * delta;
        let t = over_pairs(ctx.space.len(), |x, y, t| {
            let d = ctx.space.dist(x, y);
            if d < reach {
                t.le(i, x, y, st.image_dist(x, y), k * d);
            }
        });
        total = total.merge(t);
    }
    finish(total, "local_lipschitz", ctx, "L = 128 M^2 / sigma^2 with M = max(n+1, achieved multiplicity)".into())
}

/// d(x,y) <= δ_{i+1} ⟹ d(f_i x, f_i y) <= ε_{i+1}/2.
pub(crate) fn controlled_stretching(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for st in &ctx.c.stages {
        let i = st.index;
        let (reach, bound) = (ctx.delta(i + 1), ctx.eps(i + 1) / 2.0);
        let t = over_pairs(ctx.space.len(), |x, y, t| {
            if ctx.space.dist(x, y) <= reach {
                t.le(i, x, y, st.image_dist(x, y), bound);
            }
        });
        total = total.merge(t);
    }
    finish(total, "controlled_stretching", ctx, "eps_{i+1} / 2".into())
}

/// d(x,y) > δ_i ⟹ d(f_i x, f_i y) >= ε_i / √(2M_i), stages i >= 1.
pub(crate) fn separation(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    let mut used = Vec::new();
    for st in ctx.c.stages.iter().skip(1) {
        let i = st.index;
        let m = st.multiplicity();
        used.push(m);
        let bound = ctx.eps(i) / (2.0 * m as f64).sqrt();
        let reach = ctx.delta(i);
        let t = over_pairs(ctx.space.len(), |x, y, t| {
            if ctx.space.dist(x, y) > reach {
                t.ge(i, x, y, st.image_dist(x, y), bound);
            }
        });
        total = total.merge(t);
    }
    let (mut r, m) = finish(total, "separation", ctx, format!("eps_i / sqrt(2 M) with achieved M per stage {used:?}"));
    if ctx.mode() == ScheduleMode::Exact && used.iter().any(|&m| m > ctx.n_plus_one()) {
        r.notes.push("multiplicity exceeds n+1: the bound uses the achieved multiplicity instead".into());
    }
    (r, m)
}

/// Intersecting U, V ∈ 𝒰_i ⟹ |p_U - p_V| <= 2ε_i.
pub(crate) fn edge_bound(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for st in ctx.c.stages.iter().skip(1) {
        let i = st.index;
        let bound = 2.0 * ctx.eps(i);
        for (u, v) in intersecting_pairs(st) {
            total.le(i, u, v, st.vertices[u].dist(&st.vertices[v]), bound);
        }
    }
    finish(total, "edge_bound", ctx, "2 eps_i".into())
}

pub(crate) fn intersecting_pairs(st: &EmbeddingStage) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for b in &st.barycentric {
        for (p, &(u, _)) in b.iter().enumerate() {
            for &(v, _) in &b[p + 1..] {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
    }
    pairs
}

/// sup_x d(f_i x, f_{i-1} x) <= ε_i.
pub(crate) fn cauchy(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for w in ctx.c.stages.windows(2) {
        let i = w[1].index;
        let bound = ctx.eps(i);
        for x in 0..ctx.space.len() {
            total.le(i, x, i - 1, w[1].images[x].sub(&w[0].images[x]).norm(), bound);
        }
    }
    finish(total, "cauchy", ctx, "eps_i".into())
}

/// d(f, f_{i-1}) <= 2ε_i with f = f_I ± 2ε_{I+1}, for 1 <= i <= I; plus the
/// geometric tail Σ_{k>=i} ε_k <= 2ε_i over the stored horizon.
pub(crate) fn limit_tail(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    let last = ctx.c.last();
    let tail = ctx.c.tail_bound();
    for i in 1..=last.index {
        let prev = &ctx.c.stages[i - 1];
        let bound = 2.0 * ctx.eps(i);
        for x in 0..ctx.space.len() {
            total.le(i, x, i - 1, last.images[x].sub(&prev.images[x]).norm() + tail, bound);
        }
    }
    let le = &ctx.c.schedule.log2_eps;
    for i in 1..le.len() {
        // Ratios relative to ε_i keep the sum representable at any depth.
        let sum: f64 = le[i..].iter().map(|&e| (e - le[i]).exp2()).sum();
        total.le(i, usize::MAX, i, sum, 2.0);
    }
    finish(total, "limit_tail", ctx, "2 eps_i, tail radius 2 eps_{I+1}".into())
}

fn log2_dist(ctx: &Ctx, x: usize, y: usize) -> f64 {
    ctx.space.dist(x, y).log2()
}

/// d(x,y) <= δ_i ⟹ d(fx, fy) <= (9/2) ε_i, at the finest admissible i <= I+1.
pub(crate) fn limit_upper(ctx: &Ctx) -> (LemmaReport, f64) {
    let last = ctx.c.last();
    let tail = ctx.c.tail_bound();
    let cap = last.index + 1;
    let t = over_pairs(ctx.space.len(), |x, y, t| {
        let i = ctx.c.schedule.scale_index(log2_dist(ctx, x, y)).min(cap);
        t.le(i, x, y, last.image_dist(x, y) + 2.0 * tail, 4.5 * ctx.eps(i));
    });
    finish(t, "limit_upper", ctx, "(9/2) eps_i with i the largest index having d <= delta_i".into())
}

/// δ_{j} < d(x,y) ⟹ d(fx, fy) >= ε_j / (2√(2M_j)), for the coarsest such j <= I.
pub(crate) fn limit_lower(ctx: &Ctx) -> (LemmaReport, f64) {
    let last = ctx.c.last();
    let tail = ctx.c.tail_bound();
    let depth = last.index;
    let unresolved = std::sync::atomic::AtomicUsize::new(0);
    let t = over_pairs(ctx.space.len(), |x, y, t| {
        let j = ctx.c.schedule.scale_index(log2_dist(ctx, x, y)) + 1;
        if j > depth {
            unresolved.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return;
        }
        let m = ctx.c.stages[j].multiplicity() as f64;
        t.ge(j, x, y, last.image_dist(x, y) - 2.0 * tail, ctx.eps(j) / (2.0 * (2.0 * m).sqrt()));
    });
    let (mut r, m) = finish(t, "limit_lower", ctx, "eps_j / (2 sqrt(2 M_j))".into());
    let u = unresolved.into_inner();
    if u > 0 {
        r.notes.push(format!("{u} pairs are closer than delta_I and need stages beyond the built depth"));
    }
    (r, m)
}

/// Vertex prefixes copy the previous image of the anchor and stage i writes only [m_{i-1}, m_i).
pub(crate) fn coordinate_discipline(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for w in ctx.c.stages.windows(2) {
        let (prev, st) = (&w[0], &w[1]);
        let cover = st.cover.as_ref().expect("stages past 0 carry covers");
        let half = ctx.eps(st.index) / 2.0;
        for (k, v) in st.vertices.iter().enumerate() {
            let anchor = cover.sets[k].anchor;
            let prefix_ok = v.truncated(st.coord_offset).entries() == prev.images[anchor].entries();
            let own = v.entries().iter().filter(|p| p.0 >= st.coord_offset).copied().collect::<Vec<_>>();
            let fresh_ok = own == [(st.coord_offset + k, half)];
            total.le(st.index, k, anchor, if prefix_ok && fresh_ok { 0.0 } else { 1.0 }, 0.0);
        }
        for (x, img) in st.images.iter().enumerate() {
            total.le(st.index, x, usize::MAX, img.support_end() as f64, st.coord_count as f64);
        }
        if st.coord_count != st.coord_offset + cover.len() || st.coord_offset != prev.coord_count {
            total.le(st.index, usize::MAX, usize::MAX, 1.0, 0.0);
        }
    }
    finish(total, "coordinate_discipline", ctx, "exact equality".into())
}

/// Barycentric weights are positive, sum to 1 within 1e-12, number at most the
/// multiplicity, and reproduce the stored image.
pub(crate) fn convexity(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for st in ctx.c.stages.iter().skip(1) {
        let m = st.multiplicity();
        for (x, b) in st.barycentric.iter().enumerate() {
            let sum: f64 = b.iter().map(|p| p.1).sum();
            total.le(st.index, x, 0, (sum - 1.0).abs(), 1e-12);
            total.le(st.index, x, 1, b.len() as f64, m as f64);
            let negative = b.iter().filter(|p| !(p.1 > 0.0)).count();
            total.le(st.index, x, 2, negative as f64, 0.0);
            let terms: Vec<(f64, &crate::embedding::SparseVector)> = b.iter().map(|&(k, l)| (l, &st.vertices[k])).collect();
            let rebuilt = crate::embedding::SparseVector::combination(&terms, st.coord_count);
            total.le(st.index, x, 3, rebuilt.dist(&st.images[x]), 1e-12 * st.eps());
        }
    }
    finish(total, "convexity", ctx, "sum 1 within 1e-12".into())
}

/// Weight isolation, sum bounds and sum Lipschitz on every stage cover.
pub(crate) fn weight_lemmas(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    let mut notes = Vec::new();
    for st in ctx.c.stages.iter().skip(1) {
        let cover = st.cover.as_ref().expect("cover");
        match check_weight_lemmas(ctx.space, cover) {
            Ok(rep) => {
                let bad = rep.isolation_violations.len() + rep.sum_bound_violations.len() + rep.sum_lipschitz_violations.len();
                total.le(st.index, bad, rep.pairs_checked, bad as f64, 0.0);
            }
            Err(e) => {
                notes.push(format!("stage {}: {e}", st.index));
                total.le(st.index, usize::MAX, 0, 1.0, 0.0);
            }
        }
    }
    let (mut r, m) = finish(total, "weight_lemmas", ctx, "violation counts".into());
    r.notes.extend(notes);
    (r, m)
}

/// Simplex counts against |𝒰_i|^{n+2} and, in exact mode, against the schedule bound.
pub(crate) fn simplex_count(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for st in ctx.c.stages.iter().skip(1) {
        let cx = enumerate_simplices(st, &ctx.c.schedule);
        let count = (cx.len().max(1) as f64).log2();
        total.le(st.index, cx.len(), 0, count, cx.cover_bound_log2);
        if let Some(b) = cx.schedule_bound_log2 {
            total.le(st.index, cx.len(), 1, count, b);
        }
    }
    finish(total, "simplex_count", ctx, "log2 counts".into())
}

/// min Σλ² over the probability simplex in m variables is 1/m, by exhaustive
/// search over the grid of step 1/(5m) for m <= 6.
pub fn simplex_minimum_grid(max_m: usize) -> Vec<(usize, f64, usize)> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        let k = 5 * m;
        let mut best = f64::INFINITY;
        let mut points = 0usize;
        let mut parts = vec![0usize; m];
        compositions(k, 0, &mut parts, &mut |p| {
            points += 1;
            let v: f64 = p.iter().map(|&a| (a as f64 / k as f64).powi(2)).sum();
            best = best.min(v);
        });
        out.push((m, best, points));
    }
    out
}

fn compositions(rest: usize, idx: usize, parts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if idx + 1 == parts.len() {
        parts[idx] = rest;
        f(parts);
        return;
    }
    for a in 0..=rest {
        parts[idx] = a;
        compositions(rest - a, idx + 1, parts, f);
    }
}

pub(crate) fn simplex_minimum(ctx: &Ctx) -> (LemmaReport, f64) {
    let mut total = Tally::default();
    for (m, best, _) in simplex_minimum_grid(6) {
        let target = 1.0 / m as f64;
        total.ge(0, m, 0, best, target);
        total.le(0, m, 1, best, target);
    }
    // Equality is the expected outcome here, not a rounding hazard.
    let (r, _) = finish(total, "simplex_minimum", ctx, "1/m".into());
    (r, 1.0)
}
