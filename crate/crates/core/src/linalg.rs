//! Dense and profile (skyline) linear algebra used by the assembly and
//! solver layers. Everything here is deterministic: sequential loops, no
//! threading, fixed iteration orders.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Symmetric sparse matrix stored as coordinate triplets of the lower
/// triangle (`row ≥ col`).
#[derive(Debug, Clone)]
pub struct SymTriplets {
    pub n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymTriplets {
    pub fn new(n: usize) -> Self {
        SymTriplets {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn max_diag(&self) -> f64 {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            if i == j {
                d[i] += v;
            }
        }
        d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Add `s * I`.
    pub fn shifted(&self, s: f64) -> SymTriplets {
        let mut out = self.clone();
        for i in 0..self.n {
            out.push(i, i, s);
        }
        out
    }
}

/// Skyline (profile) storage of a symmetric matrix and its in-place
/// Cholesky factorization. Row `i` stores the contiguous segment
/// `[first[i], i]` of the lower triangle.
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factor a symmetric positive definite matrix given as triplets.
    pub fn factor(a: &SymTriplets) -> Result<Self> {
        let n = a.n;
        let mut first = (0..n).collect::<Vec<usize>>();
        for &(i, j, _) in a.entries() {
            if j < first[i] {
                first[i] = j;
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for &(i, j, v) in a.entries() {
            data[offset[i] + (j - first[i])] += v;
        }
        // row-oriented skyline Cholesky
        let scale = a.max_diag().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in first[i]..=i {
                let lo = first[i].max(first[j]);
                let mut sum = data[offset[i] + (j - first[i])];
                for k in lo..j {
                    sum -= data[offset[i] + (k - first[i])] * data[offset[j] + (k - first[j])];
                }
                if j < i {
                    data[offset[i] + (j - first[i])] = sum / data[offset[j] + (j - first[j])];
                } else {
                    if sum <= scale * 1e-14 {
                        return Err(Error::SingularSystem(format!(
                            "skyline Cholesky pivot {sum:.3e} at row {i} (scale {scale:.3e})"
                        )));
                    }
                    data[offset[i] + (j - first[i])] = sum.sqrt();
                }
            }
        }
        Ok(SkylineCholesky {
            n,
            first,
            offset,
            data,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..self.n {
            let mut sum = x[i];
            for k in self.first[i]..i {
                sum -= self.data[self.offset[i] + (k - self.first[i])] * x[k];
            }
            x[i] = sum / self.data[self.offset[i] + (i - self.first[i])];
        }
        // backward: Lᵀ x = y
        for i in (0..self.n).rev() {
            x[i] /= self.data[self.offset[i] + (i - self.first[i])];
            let xi = x[i];
            for k in self.first[i]..i {
                x[k] -= self.data[self.offset[i] + (k - self.first[i])] * xi;
            }
        }
        x
    }
}

/// Dense LU solve with a relative residual check.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::SingularSystem("dense LU failed".into()))?;
    let r = (a * &x - b).norm();
    let scale = b.norm().max(1e-300);
    if r / scale > tol {
        return Err(Error::SingularSystem(format!(
            "dense solve residual {:.3e} exceeds {:.3e}",
            r / scale,
            tol
        )));
    }
    Ok(x)
}

/// Null space of a dense matrix via SVD, with threshold `rel_tol · σ_max`.
pub fn nullspace(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    if a.ncols() == 0 {
        return Vec::new();
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let thresh = rel_tol * smax.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= thresh {
            out.push(vt.row(i).transpose());
        }
    }
    // rows of V^T beyond the number of singular values (ncols > nrows)
    for i in svd.singular_values.len()..vt.nrows() {
        out.push(vt.row(i).transpose());
    }
    out
}

/// Numerical rank of a dense matrix at threshold `rel_tol · σ_max`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    svd.singular_values
        .iter()
        .filter(|&&s| s > rel_tol * smax)
        .count()
}

/// Eigenvalues (ascending) and eigenvectors of the symmetric generalized
/// problem `A x = λ M x` with `M` positive definite, via a dense Cholesky
/// transform.
pub fn generalized_sym_eigen(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("mass matrix not positive definite".into()))?;
    let l = chol.l();
    // S = L⁻¹ A L⁻ᵀ
    let mut s = a.clone();
    l.solve_lower_triangular_mut(&mut s);
    s.transpose_mut();
    l.solve_lower_triangular_mut(&mut s);
    // symmetrize against rounding
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vals = Vec::with_capacity(order.len());
    let mut vecs = Vec::with_capacity(order.len());
    for &i in &order {
        vals.push(eig.eigenvalues[i]);
        let y = eig.eigenvectors.column(i).into_owned();
        let x = l.transpose().solve_upper_triangular(&y).ok_or_else(|| {
            Error::SingularSystem("triangular solve failed in generalized eigen".into())
        })?;
        vecs.push(x);
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue estimate of a symmetric positive semidefinite
/// triplet matrix by shifted inverse iteration. Deterministic (fixed seed).
pub fn smallest_eig_spsd(a: &SymTriplets, iterations: usize) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let n = a.n;
    let scale = a.max_diag().max(f64::MIN_POSITIVE);
    let shift = 1e-12 * scale;
    let factor = SkylineCholesky::factor(&a.shifted(shift))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let y = factor.solve(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        let ax = a.matvec(&x);
        lambda = x.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>();
    }
    Ok(lambda.max(0.0))
}

/// Largest eigenvalue estimate of a symmetric triplet matrix by power
/// iteration. Deterministic (fixed seed).
pub fn largest_eig_sym(a: &SymTriplets, iterations: usize) -> f64 {
    use rand::{Rng, SeedableRng};
    let n = a.n;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb16);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let y = a.matvec(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        let ax = a.matvec(&x);
        lambda = x.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>();
    }
    lambda
}

/// Gram–Schmidt orthonormalization in an inner product given by a Gram
/// callback; rejects pivots below `rel_tol` times the leading norm.
pub fn gram_schmidt<T: Clone>(
    items: &[T],
    inner: impl Fn(&T, &T) -> f64,
    combine: impl Fn(&T, f64, &T) -> T,
    scale: impl Fn(&T, f64) -> T,
    rel_tol: f64,
) -> Result<Vec<T>> {
    let mut out: Vec<T> = Vec::new();
    let mut lead: Option<f64> = None;
    for item in items {
        let mut v = item.clone();
        for q in &out {
            let c = inner(&v, q);
            v = combine(&v, -c, q);
        }
        let norm = inner(&v, &v).max(0.0).sqrt();
        let reference = *lead.get_or_insert(norm);
        if norm < rel_tol * reference.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularSystem(format!(
                "Gram–Schmidt pivot {norm:.3e} below {rel_tol:.1e} of leading norm {reference:.3e}"
            )));
        }
        out.push(scale(&v, 1.0 / norm));
    }
    Ok(out)
}
