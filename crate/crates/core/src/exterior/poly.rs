use std::collections::BTreeMap;

/// Multivariate polynomial with f64 coefficients, stored as a sparse map
/// from exponent tuples to coefficients. Coefficients below 1e-14 in
/// magnitude are pruned on normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

const PRUNE_TOL: f64 = 1e-14;

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(&vec![0; n], c);
        p
    }

    /// The coordinate polynomial `x_j` (1-based `j`).
    pub fn variable(n: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= n, "variable index out of range");
        let mut exps = vec![0u32; n];
        exps[j - 1] = 1;
        let mut p = Poly::zero(n);
        p.add_term(&exps, 1.0);
        p
    }

    pub fn monomial(n: usize, exps: &[u32], c: f64) -> Self {
        assert_eq!(exps.len(), n);
        let mut p = Poly::zero(n);
        p.add_term(exps, c);
        p
    }

    /// Affine polynomial `c0 + Σ_j coeffs[j] x_{j+1}`.
    pub fn affine(n: usize, c0: f64, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), n);
        let mut p = Poly::constant(n, c0);
        for (j, &c) in coeffs.iter().enumerate() {
            let mut exps = vec![0u32; n];
            exps[j] = 1;
            p.add_term(&exps, c);
        }
        p.normalized()
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add_term(&mut self, exps: &[u32], c: f64) {
        debug_assert_eq!(exps.len(), self.n);
        let entry = self.terms.entry(exps.to_vec()).or_insert(0.0);
        *entry += c;
        if entry.abs() <= PRUNE_TOL {
            self.terms.remove(exps);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() > PRUNE_TOL);
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e, *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            out.add_term(e, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.n, other.n);
        let mut out = Poly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(&exps, ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to `x_j` (1-based).
    pub fn partial(&self, j: usize) -> Poly {
        assert!(j >= 1 && j <= self.n);
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            let p = e[j - 1];
            if p > 0 {
                let mut exps = e.clone();
                exps[j - 1] = p - 1;
                out.add_term(&exps, c * p as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (xi, &p) in x.iter().zip(e) {
                for _ in 0..p {
                    m *= xi;
                }
            }
            acc += m;
        }
        acc
    }

    /// Largest coefficient magnitude, used for relative comparisons.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}
