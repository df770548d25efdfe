use serde::{Deserialize, Serialize};

/// A finitely supported vector of ℓ², stored as sorted `(coordinate, value)`
/// pairs with no explicit zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    /// One past the largest coordinate the owner may write.
    #[serde(rename = "dimensionHint")]
    pub dimension_hint: usize,
}

impl SparseVector {
    pub fn zero(dimension_hint: usize) -> Self {
        SparseVector { entries: Vec::new(), dimension_hint }
    }

    /// Builds from arbitrary pairs; duplicates are summed in input order and zeros dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>, dimension_hint: usize) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (k, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => entries.push((k, v)),
            }
        }
        entries.retain(|p| p.1 != 0.0);
        let hint = entries.last().map_or(0, |p| p.0 + 1).max(dimension_hint);
        SparseVector { entries, dimension_hint: hint }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, k: usize) -> f64 {
        self.entries.binary_search_by_key(&k, |p| p.0).map_or(0.0, |i| self.entries[i].1)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest coordinate with a nonzero value, if any.
    pub fn support_end(&self) -> usize {
        self.entries.last().map_or(0, |p| p.0 + 1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt()
    }

    /// Copy with `value` added at coordinate `k`.
    pub fn with_added(&self, k: usize, value: f64) -> Self {
        let mut pairs = self.entries.clone();
        pairs.push((k, value));
        SparseVector::from_pairs(pairs, self.dimension_hint.max(k + 1))
    }

    /// Restriction to coordinates `< end`.
    pub fn truncated(&self, end: usize) -> Self {
        SparseVector { entries: self.entries.iter().copied().filter(|p| p.0 < end).collect(), dimension_hint: end }
    }

    /// Σ wᵢ vᵢ, summing each coordinate in term order.
    pub fn combination(terms: &[(f64, &SparseVector)], dimension_hint: usize) -> Self {
        if let [(w, v)] = terms {
            if *w == 1.0 {
                return SparseVector { entries: v.entries.clone(), dimension_hint: dimension_hint.max(v.dimension_hint) };
            }
        }
        let mut pairs = Vec::with_capacity(terms.iter().map(|t| t.1.entries.len()).sum());
        for (w, v) in terms {
            pairs.extend(v.entries.iter().map(|&(k, x)| (k, w * x)));
        }
        SparseVector::from_pairs(pairs, dimension_hint)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        let mut pairs = self.entries.clone();
        pairs.extend(other.entries.iter().map(|&(k, x)| (k, -x)));
        SparseVector::from_pairs(pairs, self.dimension_hint.max(other.dimension_hint))
    }

    /// Euclidean distance via a merge walk (no intermediate allocation).
    pub fn dist(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0f64;
        while i < a.len() || j < b.len() {
            let diff = match (a.get(i), b.get(j)) {
                (Some(&(ka, va)), Some(&(kb, vb))) if ka == kb => {
                    i += 1;
                    j += 1;
                    va - vb
                }
                (Some(&(ka, va)), Some(&(kb, _))) if ka < kb => {
                    i += 1;
                    va
                }
                (Some(_), Some(&(_, vb))) => {
                    j += 1;
                    -vb
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (None, Some(&(_, vb))) => {
                    j += 1;
                    -vb
                }
                (None, None) => unreachable!(),
            };
            acc += diff * diff;
        }
        acc.sqrt()
    }
}
