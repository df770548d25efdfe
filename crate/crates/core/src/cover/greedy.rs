use super::{certify_strict, first_fit_colors, prune_redundant, set_diameter, validate_scale, ColoredCover, CoverError, CoverSet, LineIndex};
use crate::metric::FiniteMetricSpace;

/// Greedy cover at scale `delta` aiming for Lebesgue number `sigma * delta`.
///
/// Open balls of radius δ/2 around a greedy δ/2-net are merged pairwise while
/// the union keeps diameter at most δ, then grown to absorb the σδ-balls of
/// points still short of the Lebesgue target. Colors are first-fit in anchor
/// order; subset-redundant sets are pruned before certification.
pub fn build_greedy_cover(space: &FiniteMetricSpace, delta: f64, sigma: f64) -> Result<ColoredCover, CoverError> {
    validate_scale(delta, sigma)?;
    let n = space.len();
    let line = LineIndex::of(space);
    let radius = delta / 2.0;

    let mut centers: Vec<usize> = Vec::new();
    for x in 0..n {
        if centers.iter().all(|&c| space.dist(c, x) >= radius) {
            centers.push(x);
        }
    }
    let mut sets: Vec<Vec<usize>> = centers.iter().map(|&c| (0..n).filter(|&y| space.dist(c, y) < radius).collect()).collect();

    merge_overlapping(space, &mut sets, delta, line.as_ref());
    absorb_deficits(space, &mut sets, delta, sigma * delta, line.as_ref());

    let mut cover_sets: Vec<CoverSet> = sets.into_iter().map(|m| CoverSet::new(m, 0)).collect();
    cover_sets.sort_by(|a, b| a.anchor.cmp(&b.anchor).then(a.members.cmp(&b.members)));
    cover_sets.dedup_by(|a, b| a.members == b.members);
    if let Some(k) = cover_sets.iter().position(|s| s.members.len() >= n) {
        return Err(CoverError::FullSpace { set: k });
    }
    prune_redundant(space, &mut cover_sets, sigma * delta)?;
    first_fit_colors(&mut cover_sets);
    certify_strict(space, cover_sets, delta, sigma)
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

fn meets(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Merges intersecting sets whose union stays within diameter `delta`.
fn merge_overlapping(space: &FiniteMetricSpace, sets: &mut Vec<Vec<usize>>, delta: f64, line: Option<&LineIndex>) {
    let n = space.len();
    let mut i = 0;
    while i < sets.len() {
        let mut merged = false;
        let mut j = i + 1;
        while j < sets.len() {
            if meets(&sets[i], &sets[j]) {
                let u = union_sorted(&sets[i], &sets[j]);
                if u.len() < n && set_diameter(space, &u, line) <= delta * (1.0 + 1e-12) {
                    sets[i] = u;
                    sets.remove(j);
                    merged = true;
                    continue;
                }
            }
            j += 1;
        }
        if !merged {
            i += 1;
        }
    }
}

/// Grows sets so that points whose best weight is below `target` get their
/// whole `target`-ball inside one set, when that keeps the mesh within `delta`.
fn absorb_deficits(space: &FiniteMetricSpace, sets: &mut [Vec<usize>], delta: f64, target: f64, line: Option<&LineIndex>) {
    let n = space.len();
    for _pass in 0..8 {
        let mut changed = false;
        for x in 0..n {
            let ball: Vec<usize> = (0..n).filter(|&y| space.dist(x, y) < target).collect();
            let holding: Vec<usize> = (0..sets.len()).filter(|&k| sets[k].binary_search(&x).is_ok()).collect();
            if holding.iter().any(|&k| ball.iter().all(|y| sets[k].binary_search(y).is_ok())) {
                continue;
            }
            for &k in &holding {
                let u = union_sorted(&sets[k], &ball);
                if u.len() < n && set_diameter(space, &u, line) <= delta * (1.0 + 1e-12) {
                    sets[k] = u;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
}
