use serde::{Deserialize, Serialize};

use super::{certify, member_weights, ColoredCover, CoverError, LineIndex, CERT_TOLERANCE};
use crate::metric::FiniteMetricSpace;

/// A refined cover plus the cardinality bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub cover: ColoredCover,
    pub net_size: usize,
    /// ⌈log2(4 diam / σ'δ)⌉, the exponent bounding the net size.
    pub net_exponent: u32,
    pub net_bound_holds: bool,
    /// log2 of N^{log2(2 diam / σδ)} with σ = σ'/2.
    pub bound_log2: f64,
    pub bound_holds: bool,
}

/// Thins a certified cover to at most one element per point of a greedy
/// σ'δ/2-net: each net ball is snapped into a base set containing its σ'δ-ball.
pub fn size_controlled_refine(space: &FiniteMetricSpace, base: &ColoredCover, big_n: u64) -> Result<RefineOutcome, CoverError> {
    if big_n < 2 {
        return Err(CoverError::InvalidParameter(format!("N = {big_n} must be at least 2")));
    }
    let delta = base.target_delta;
    let sigma_base = base.sigma;
    let r = sigma_base * delta / 2.0;
    let n = space.len();
    let mut net: Vec<usize> = Vec::new();
    for x in 0..n {
        if net.iter().all(|&c| space.dist(c, x) >= r) {
            net.push(x);
        }
    }
    let line = LineIndex::of(space);
    let weights: Vec<Vec<f64>> = base.sets.iter().map(|s| member_weights(space, &s.members, line.as_ref())).collect();
    let need = sigma_base * delta * (1.0 - CERT_TOLERANCE);
    let mut chosen: Vec<usize> = Vec::new();
    for &c in &net {
        let mut best = 0.0f64;
        let mut pick = None;
        for (k, s) in base.sets.iter().enumerate() {
            if let Ok(pos) = s.members.binary_search(&c) {
                let w = weights[k][pos];
                if w >= need && pick.is_none() {
                    pick = Some(k);
                }
                best = best.max(w);
            }
        }
        match pick {
            Some(k) => chosen.push(k),
            None => return Err(CoverError::SnapFailed { center: c, best, required: sigma_base * delta }),
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    let sets = chosen.iter().map(|&k| base.sets[k].clone()).collect();
    let cover = certify(space, sets, delta, sigma_base / 2.0)?;
    let diam = space.diameter();
    let log2_n = (big_n as f64).log2();
    let net_exponent = (4.0 * diam / (sigma_base * delta)).log2().ceil().max(0.0) as u32;
    let net_bound_holds = (net.len() as f64).log2() <= net_exponent as f64 * log2_n + 1e-12;
    let bound_log2 = log2_n * (2.0 * diam / (cover.sigma * delta)).log2();
    let bound_holds = (cover.len() as f64).log2() <= bound_log2 + 1e-12;
    Ok(RefineOutcome { cover, net_size: net.len(), net_exponent, net_bound_holds, bound_log2, bound_holds })
}
