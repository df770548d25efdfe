use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::DimensionError;
use crate::metric::rational::ratio_to_f64;
use crate::metric::{build_harmonic, FiniteMetricSpace};

/// Certificate that {0} ∪ {1/k : k <= M} has no multiplicity-1 cover with
/// mesh <= δ and Lebesgue number >= σδ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRefutation {
    pub sigma: f64,
    pub m: usize,
    pub n: u64,
    pub delta: f64,
    #[serde(rename = "sigmaDelta")]
    pub sigma_delta: f64,
    /// Largest step 1/(m(m-1)) over m in [n, M], which is the one at m = n.
    #[serde(rename = "maxStep")]
    pub max_step: f64,
    /// Every consecutive pair 1/m, 1/(m-1) with m >= n, and the pair 0, 1/M, lies within σδ.
    pub closeness: bool,
    /// Exhaustive union of all pairs closer than σδ puts 0 and 1/(n-1) in one class.
    #[serde(rename = "lebesgueForcing")]
    pub lebesgue_forcing: bool,
    /// Points in the class of 0.
    #[serde(rename = "forcedClass")]
    pub forced_class: usize,
    /// Diameter of that class, at least 1/(n-1).
    #[serde(rename = "mergedDiameter")]
    pub merged_diameter: f64,
    /// merged diameter > δ.
    #[serde(rename = "diameterViolation")]
    pub diameter_violation: bool,
    pub holds: bool,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Builds the contradiction chain for the given σ on the space truncated at M.
pub fn capacity_refuter(sigma: f64, m: usize) -> Result<CapacityRefutation, DimensionError> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(DimensionError::InvalidParameter(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    let n = (2.0 / sigma).max(2.0).ceil() as u64 + 1;
    let need = (n * (n - 1)) as usize;
    if m < need {
        return Err(DimensionError::InvalidParameter(format!("truncation M = {m} is below n(n-1) = {need} for n = {n}")));
    }
    let space: FiniteMetricSpace = build_harmonic(m)?;
    let coords = space.exact_coords().expect("harmonic spaces are exact");
    let s = BigRational::from_float(sigma).expect("finite sigma");
    let nn = BigInt::from(n);
    let delta = BigRational::from_integer(2.into()) / (&s * BigRational::from_integer(&nn * (&nn - 1)));
    let sd = &s * &delta;
    let dist = |a: usize, b: usize| {
        let d = &coords[a] - &coords[b];
        if d < BigRational::zero() {
            -d
        } else {
            d
        }
    };
    // Id k holds 1/k and id 0 holds 0.
    let n_us = n as usize;
    let mut closeness = dist(0, m) < sd;
    let mut max_step = BigRational::zero();
    for k in n_us..=m {
        let step = dist(k, k - 1);
        let bound = BigRational::new(BigInt::one(), BigInt::from(k) * BigInt::from(k - 1));
        closeness &= step == bound && step < sd;
        if step > max_step {
            max_step = step;
        }
    }
    let len = space.len();
    let mut parent: Vec<usize> = (0..len).collect();
    for a in 0..len {
        for b in a + 1..len {
            if dist(a, b) < sd {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let root = find(&mut parent, 0);
    let class: Vec<usize> = (0..len).filter(|&x| find(&mut parent, x) == root).collect();
    let lebesgue_forcing = class.contains(&(n_us - 1));
    let merged = class.iter().flat_map(|&a| class.iter().map(move |&b| (a, b))).map(|(a, b)| dist(a, b)).max().unwrap_or_else(BigRational::zero);
    let diameter_violation = merged > delta;
    let floor = BigRational::new(BigInt::one(), BigInt::from(n - 1));
    let holds = closeness && lebesgue_forcing && diameter_violation && merged >= floor;
    Ok(CapacityRefutation {
        sigma,
        m,
        n,
        delta: ratio_to_f64(&delta),
        sigma_delta: ratio_to_f64(&sd),
        max_step: ratio_to_f64(&max_step),
        closeness,
        lebesgue_forcing,
        forced_class: class.len(),
        merged_diameter: ratio_to_f64(&merged),
        diameter_violation,
        holds,
    })
}
