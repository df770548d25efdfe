//! Rational replay of a built construction on exact line spaces.
//!
//! Scales are taken as the exact rationals of their f64 values, weights and
//! images are recomputed in BigRational and every inequality is compared on
//! squared distances, so no square root is evaluated.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::checks::Ctx;
use super::report::{ExactRecheck, RecheckOutcome};

type Q = BigRational;
type QVec = Vec<(usize, Q)>;

/// Largest space the replay accepts.
pub const MAX_EXACT_POINTS: usize = 256;

/// Lemmas the replay can decide.
pub const REPLAY_LEMMAS: [&str; 8] = ["local_lipschitz", "controlled_stretching", "separation", "edge_bound", "cauchy", "limit_tail", "limit_upper", "limit_lower"];

struct ExactStage {
    vertices: Vec<QVec>,
    images: Vec<QVec>,
    eps: Q,
    delta: Q,
}

pub(crate) struct ExactReplay<'a> {
    ctx: &'a Ctx<'a>,
    coords: Vec<Q>,
    stages: Vec<ExactStage>,
    /// ε and δ through stage I+1.
    eps: Vec<Q>,
    delta: Vec<Q>,
    tail: Q,
}

fn q_f64(v: f64) -> Result<Q, String> {
    BigRational::from_float(v).ok_or_else(|| format!("{v} has no exact rational value"))
}

fn q_int(v: usize) -> Q {
    Q::from_integer(BigInt::from(v))
}

fn sq_dist(a: &[(usize, Q)], b: &[(usize, Q)]) -> Q {
    let (mut i, mut j) = (0, 0);
    let mut s = Q::zero();
    while i < a.len() || j < b.len() {
        let d = match (a.get(i), b.get(j)) {
            (Some((ka, va)), Some((kb, vb))) if ka == kb => {
                i += 1;
                j += 1;
                va - vb
            }
            (Some((ka, va)), Some((kb, _))) if ka < kb => {
                i += 1;
                va.clone()
            }
            (Some(_), Some((_, vb))) | (None, Some((_, vb))) => {
                j += 1;
                -vb.clone()
            }
            (Some((_, va)), None) => {
                i += 1;
                va.clone()
            }
            (None, None) => unreachable!(),
        };
        s += &d * &d;
    }
    s
}

/// A rational r with r >= √v, from the f64 root nudged up and then verified.
fn sqrt_upper(v: &Q) -> Q {
    let approx = v.to_f64().unwrap_or(f64::MAX).sqrt();
    let mut r = BigRational::from_float(approx * (1.0 + 1e-15)).unwrap_or_else(|| v + Q::one());
    while &(&r * &r) < v {
        r = &r * Q::new(BigInt::from(1_000_001), BigInt::from(1_000_000));
    }
    r
}

impl<'a> ExactReplay<'a> {
    pub fn new(ctx: &'a Ctx<'a>) -> Result<Self, String> {
        let space = ctx.space;
        if space.len() > MAX_EXACT_POINTS {
            return Err(format!("exact replay is limited to {MAX_EXACT_POINTS} points"));
        }
        let (Some(coords), Some(scale)) = (space.exact_coords(), space.exact_scale()) else {
            return Err("the space has no exact line coordinates".into());
        };
        let coords: Vec<Q> = coords.iter().map(|c| c * scale).collect();
        let depth = ctx.c.depth();
        let sched = &ctx.c.schedule;
        let eps = (0..=depth + 1).map(|i| q_f64(sched.log2_eps[i].exp2())).collect::<Result<Vec<_>, _>>()?;
        let delta = (0..=depth + 1).map(|i| q_f64(sched.log2_delta[i].exp2())).collect::<Result<Vec<_>, _>>()?;
        let tail = q_int(2) * &eps[depth + 1];
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| coords[a].cmp(&coords[b]).then(a.cmp(&b)));
        let mut rank = vec![0usize; order.len()];
        for (p, &x) in order.iter().enumerate() {
            rank[x] = p;
        }
        let mut stages = vec![ExactStage { vertices: Vec::new(), images: vec![Vec::new(); coords.len()], eps: eps[0].clone(), delta: delta[0].clone() }];
        for st in ctx.c.stages.iter().skip(1) {
            let cover = st.cover.as_ref().ok_or("stage without cover")?;
            let i = st.index;
            let prev = stages.last().expect("stage 0");
            let half = &eps[i] / q_int(2);
            let vertices: Vec<QVec> = cover
                .sets
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut v = prev.images[s.anchor].clone();
                    v.push((st.coord_offset + k, half.clone()));
                    v
                })
                .collect();
            let mut weights: Vec<Vec<(usize, Q)>> = vec![Vec::new(); coords.len()];
            let mut member = vec![false; coords.len()];
            for (k, s) in cover.sets.iter().enumerate() {
                for &x in &s.members {
                    member[x] = true;
                }
                for &x in &s.members {
                    let p = rank[x];
                    let left = order[..p].iter().rev().find(|&&z| !member[z]).map(|&z| &coords[x] - &coords[z]);
                    let right = order[p + 1..].iter().find(|&&z| !member[z]).map(|&z| &coords[z] - &coords[x]);
                    let w = match (left, right) {
                        (Some(a), Some(b)) => a.min(b),
                        (Some(a), None) | (None, Some(a)) => a,
                        (None, None) => return Err(format!("stage {i}: set {k} is the whole space")),
                    };
                    if w.is_positive() {
                        weights[x].push((k, w));
                    }
                }
                for &x in &s.members {
                    member[x] = false;
                }
            }
            let mut images = Vec::with_capacity(coords.len());
            for (x, ws) in weights.iter().enumerate() {
                let total: Q = ws.iter().map(|p| p.1.clone()).fold(Q::zero(), |a, b| a + b);
                if total.is_zero() {
                    return Err(format!("stage {i}: point {x} has zero weight"));
                }
                let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
                for (k, w) in ws {
                    let l = w / &total;
                    for (c, v) in &vertices[*k] {
                        *acc.entry(*c).or_insert_with(Q::zero) += &l * v;
                    }
                }
                images.push(acc.into_iter().filter(|p| !p.1.is_zero()).collect());
            }
            stages.push(ExactStage { vertices, images, eps: eps[i].clone(), delta: delta[i].clone() });
        }
        Ok(ExactReplay { ctx, coords, stages, eps, delta, tail })
    }

    fn dist(&self, x: usize, y: usize) -> Q {
        (&self.coords[x] - &self.coords[y]).abs()
    }

    /// Largest i <= cap with d <= δ_i.
    fn scale_index(&self, d: &Q, cap: usize) -> usize {
        (0..=cap.min(self.delta.len() - 1)).filter(|&i| d <= &self.delta[i]).max().unwrap_or(0)
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.coords.len();
        (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
    }

    /// Replays one lemma. `Confirmed` means every checked inequality holds exactly.
    pub fn check(&self, lemma: &str) -> ExactRecheck {
        let mut checks = 0usize;
        let mut failure: Option<String> = None;
        let mut record = |ok: bool, what: &dyn Fn() -> String| {
            checks += 1;
            if !ok && failure.is_none() {
                failure = Some(what());
            }
        };
        let two = q_int(2);
        match lemma {
            "local_lipschitz" => {
                let sigma = q_f64(self.ctx.sigma()).expect("finite sigma");
                for (i, st) in self.stages.iter().enumerate() {
                    let m = q_int(self.ctx.multiplicity_through(i));
                    let l = q_int(128) * &m * &m / (&sigma * &sigma);
                    let k = &l / &two * &st.eps / &st.delta;
                    let reach = &sigma * &st.delta;
                    for (x, y) in self.pairs() {
                        let d = self.dist(x, y);
                        if d < reach {
                            let b = &k * &d;
                            record(sq_dist(&st.images[x], &st.images[y]) <= &b * &b, &|| format!("stage {i} pair ({x}, {y})"));
                        }
                    }
                }
            }
            "controlled_stretching" => {
                for (i, st) in self.stages.iter().enumerate() {
                    let b = &self.eps[i + 1] / &two;
                    for (x, y) in self.pairs() {
                        if self.dist(x, y) <= self.delta[i + 1] {
                            record(sq_dist(&st.images[x], &st.images[y]) <= &b * &b, &|| format!("stage {i} pair ({x}, {y})"));
                        }
                    }
                }
            }
            "separation" => {
                for (i, st) in self.stages.iter().enumerate().skip(1) {
                    let m = q_int(self.ctx.c.stages[i].multiplicity());
                    let b2 = &st.eps * &st.eps / (&two * m);
                    for (x, y) in self.pairs() {
                        if self.dist(x, y) > st.delta {
                            record(sq_dist(&st.images[x], &st.images[y]) >= b2, &|| format!("stage {i} pair ({x}, {y})"));
                        }
                    }
                }
            }
            "edge_bound" => {
                for (i, st) in self.stages.iter().enumerate().skip(1) {
                    let b = &two * &st.eps;
                    for (u, v) in super::checks::intersecting_pairs(&self.ctx.c.stages[i]) {
                        record(sq_dist(&st.vertices[u], &st.vertices[v]) <= &b * &b, &|| format!("stage {i} sets ({u}, {v})"));
                    }
                }
            }
            "cauchy" => {
                for (i, w) in self.stages.windows(2).enumerate() {
                    let b = &w[1].eps;
                    for x in 0..self.coords.len() {
                        record(sq_dist(&w[1].images[x], &w[0].images[x]) <= b * b, &|| format!("stage {} point {x}", i + 1));
                    }
                }
            }
            "limit_tail" => {
                let last = self.stages.last().expect("stage 0");
                for i in 1..self.stages.len() {
                    let b = &two * &self.eps[i] - &self.tail;
                    for x in 0..self.coords.len() {
                        let ok = !b.is_negative() && sq_dist(&last.images[x], &self.stages[i - 1].images[x]) <= &b * &b;
                        record(ok, &|| format!("stage {i} point {x}"));
                    }
                }
            }
            "limit_upper" => {
                let last = self.stages.last().expect("stage 0");
                let cap = self.stages.len();
                let four_half = Q::new(BigInt::from(9), BigInt::from(2));
                for (x, y) in self.pairs() {
                    let i = self.scale_index(&self.dist(x, y), cap);
                    let b = &four_half * &self.eps[i] - &two * &self.tail;
                    let ok = !b.is_negative() && sq_dist(&last.images[x], &last.images[y]) <= &b * &b;
                    record(ok, &|| format!("pair ({x}, {y}) at index {i}"));
                }
            }
            "limit_lower" => {
                let last = self.stages.last().expect("stage 0");
                let depth = self.stages.len() - 1;
                for (x, y) in self.pairs() {
                    let j = self.scale_index(&self.dist(x, y), self.delta.len() - 1) + 1;
                    if j > depth {
                        continue;
                    }
                    let m = q_int(self.ctx.c.stages[j].multiplicity());
                    // ε_j / (2√(2M)) = ε_j √(1/(8M)), bounded above by a rational root.
                    let c = &self.eps[j] * sqrt_upper(&(Q::one() / (q_int(8) * m)));
                    let b = c + &two * &self.tail;
                    record(sq_dist(&last.images[x], &last.images[y]) >= &b * &b, &|| format!("pair ({x}, {y}) at index {j}"));
                }
            }
            other => {
                return ExactRecheck { outcome: RecheckOutcome::Unavailable, checks: 0, detail: format!("no rational replay for {other}") };
            }
        }
        match failure {
            None => ExactRecheck { outcome: RecheckOutcome::Confirmed, checks, detail: "all inequalities hold in exact arithmetic".into() },
            Some(w) => ExactRecheck { outcome: RecheckOutcome::Refuted, checks, detail: format!("exact violation at {w}") },
        }
    }
}
