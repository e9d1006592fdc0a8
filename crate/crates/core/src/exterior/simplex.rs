use super::poly::Poly;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Nondegenerate n-simplex in ℝⁿ given by its n+1 vertices.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    n: usize,
    signed_volume: f64,
    diameter: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(
                "simplex needs n+1 vertices of length n".into(),
            ));
        }
        let signed_volume = signed_volume(&vertices, n);
        if signed_volume == 0.0 || !signed_volume.is_finite() {
            return Err(Error::DegenerateSimplex(signed_volume));
        }
        let mut diameter = 0.0f64;
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                let d: f64 = vertices[i]
                    .iter()
                    .zip(&vertices[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                diameter = diameter.max(d.sqrt());
            }
        }
        Ok(Simplex {
            vertices,
            n,
            signed_volume,
            diameter,
        })
    }

    /// Reference simplex spanned by the origin and the unit vectors.
    pub fn reference(n: usize) -> Simplex {
        let mut vertices = vec![vec![0.0; n]];
        for j in 0..n {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            vertices.push(v);
        }
        Simplex::new(vertices).expect("reference simplex is nondegenerate")
    }

    /// Triangle in the plane from three corner points.
    pub fn triangle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<Simplex> {
        Simplex::new(vec![a.to_vec(), b.to_vec(), c.to_vec()])
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn signed_volume(&self) -> f64 {
        self.signed_volume
    }

    pub fn volume(&self) -> f64 {
        self.signed_volume.abs()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for v in &self.vertices {
            for (cj, vj) in c.iter_mut().zip(v) {
                *cj += vj;
            }
        }
        for cj in &mut c {
            *cj /= (self.n + 1) as f64;
        }
        c
    }

    /// Dilation by `factor` about the centroid; used by the scaling tests.
    pub fn dilated(&self, factor: f64) -> Simplex {
        let c = self.centroid();
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&c)
                    .map(|(vj, cj)| cj + factor * (vj - cj))
                    .collect()
            })
            .collect();
        Simplex::new(vertices).expect("dilation preserves nondegeneracy")
    }

    /// Exact integral of a polynomial over the simplex.
    ///
    /// Each monomial is expanded in barycentric coordinates and integrated
    /// with `∫_T Π λ_i^{a_i} = |T| n! Π a_i! / (|a| + n)!`, exact for any
    /// polynomial degree.
    pub fn integrate(&self, p: &Poly) -> f64 {
        debug_assert_eq!(p.nvars(), self.n);
        let mut acc = 0.0;
        for (exps, coeff) in p.terms() {
            acc += coeff * self.integrate_monomial(exps);
        }
        acc
    }

    fn integrate_monomial(&self, exps: &[u32]) -> f64 {
        // expand Π_j (Σ_i V_i^{(j)} λ_i)^{e_j} as a polynomial in the n+1
        // barycentric variables
        let m = self.n + 1;
        let mut bary: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        bary.insert(vec![0; m], 1.0);
        for (j, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for (mono, c) in &bary {
                    for i in 0..m {
                        let vij = self.vertices[i][j];
                        if vij == 0.0 {
                            continue;
                        }
                        let mut mono2 = mono.clone();
                        mono2[i] += 1;
                        *next.entry(mono2).or_insert(0.0) += c * vij;
                    }
                }
                bary = next;
            }
        }
        let vol = self.volume();
        let nfact = factorial(self.n as u64);
        let mut acc = 0.0;
        for (mono, c) in &bary {
            let total: u32 = mono.iter().sum();
            let mut val = vol * nfact;
            for &a in mono {
                val *= factorial(a as u64);
            }
            val /= factorial(total as u64 + self.n as u64);
            acc += c * val;
        }
        acc
    }
}

fn signed_volume(vertices: &[Vec<f64>], n: usize) -> f64 {
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = vertices[i + 1][j] - vertices[0][j];
        }
    }
    m.determinant() / factorial(n as u64)
}

fn factorial(k: u64) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Cell-centered coordinate frame on a simplex: constants `c_j` with
/// `∫_T (x^j − c_j) = 0` and `c^{(j)}` with `∫_T [(x̃^j)² − c^{(j)}] = 0`.
#[derive(Debug, Clone)]
pub struct CenteredFrame {
    centers: Vec<f64>,
    quad_constants: Vec<f64>,
}

impl CenteredFrame {
    pub fn new(t: &Simplex) -> CenteredFrame {
        let n = t.ambient_dim();
        let centers = t.centroid();
        let vol = t.volume();
        let quad_constants = (0..n)
            .map(|j| {
                let xt = Poly::affine(
                    n,
                    -centers[j],
                    &(0..n)
                        .map(|i| if i == j { 1.0 } else { 0.0 })
                        .collect::<Vec<_>>(),
                );
                t.integrate(&xt.mul(&xt)) / vol
            })
            .collect();
        CenteredFrame {
            centers,
            quad_constants,
        }
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j - 1]
    }

    /// `x̃^j = x^j − c_j` as a polynomial (1-based `j`).
    pub fn centered_coordinate(&self, j: usize) -> Poly {
        let n = self.centers.len();
        let mut coeffs = vec![0.0; n];
        coeffs[j - 1] = 1.0;
        Poly::affine(n, -self.centers[j - 1], &coeffs)
    }

    /// `(x̃^j)² − c^{(j)}`, the mean-zero quadratic in direction `j`.
    pub fn centered_quadratic(&self, j: usize) -> Poly {
        let xt = self.centered_coordinate(j);
        xt.mul(&xt)
            .sub(&Poly::constant(self.centers.len(), self.quad_constants[j - 1]))
    }
}
