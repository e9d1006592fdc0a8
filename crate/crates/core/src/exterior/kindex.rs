use crate::{Error, Result};

/// Strictly increasing multi-index `1 ≤ α₁ < … < α_k ≤ n` labelling a
/// component `dx^{α₁} ∧ … ∧ dx^{α_k}` of a k-form in n variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KIndex {
    entries: Vec<usize>,
    n: usize,
}

impl KIndex {
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        if entries.len() > n {
            return Err(Error::DegreeOutOfRange {
                k: entries.len() as isize,
                n,
            });
        }
        for (i, &e) in entries.iter().enumerate() {
            if e < 1 || e > n || (i > 0 && entries[i - 1] >= e) {
                return Err(Error::DimensionMismatch(format!(
                    "k-index {entries:?} is not strictly increasing in 1..={n}"
                )));
            }
        }
        Ok(KIndex { entries, n })
    }

    /// The empty index labelling the single component of a 0-form.
    pub fn empty(n: usize) -> Self {
        KIndex { entries: Vec::new(), n }
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn contains(&self, i: usize) -> bool {
        self.entries.binary_search(&i).is_ok()
    }

    /// Complement index β and the sign of the permutation `(α, β)` of
    /// `(1, …, n)`, so that `⋆ dx^α = sign · dx^β`.
    pub fn complement(&self) -> (KIndex, i32) {
        let beta: Vec<usize> = (1..=self.n).filter(|i| !self.contains(*i)).collect();
        let mut perm: Vec<usize> = self.entries.clone();
        perm.extend_from_slice(&beta);
        let sign = permutation_sign(&perm);
        (KIndex { entries: beta, n: self.n }, sign)
    }

    /// Index with `i` wedged in front and sorted into place:
    /// `dx^i ∧ dx^α = sign · dx^{α ∪ {i}}`. `None` if `i ∈ α`.
    pub fn wedge_insert(&self, i: usize) -> Option<(KIndex, i32)> {
        if self.contains(i) || i < 1 || i > self.n {
            return None;
        }
        let pos = self.entries.partition_point(|&e| e < i);
        let mut entries = self.entries.clone();
        entries.insert(pos, i);
        let sign = if pos % 2 == 0 { 1 } else { -1 };
        Some((KIndex { entries, n: self.n }, sign))
    }

    /// Index with the entry at `pos` removed (used by the Koszul contraction).
    pub fn remove_at(&self, pos: usize) -> KIndex {
        let mut entries = self.entries.clone();
        entries.remove(pos);
        KIndex { entries, n: self.n }
    }
}

/// Sign of a permutation of distinct integers, by inversion count.
pub fn permutation_sign(perm: &[usize]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All k-indices for fixed (k, n) in lexicographic order; `C(n, k)` of them.
pub fn enumerate_k_indices(k: usize, n: usize) -> Result<Vec<KIndex>> {
    if k > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, k: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<KIndex>) {
        if current.len() == k {
            out.push(KIndex {
                entries: current.clone(),
                n,
            });
            return;
        }
        for i in start..=n {
            current.push(i);
            rec(i + 1, k, n, current, out);
            current.pop();
        }
    }
    rec(1, k, n, &mut current, &mut out);
    Ok(out)
}
