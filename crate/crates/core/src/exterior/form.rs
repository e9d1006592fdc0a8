use super::kindex::{enumerate_k_indices, KIndex};
use super::poly::Poly;
use super::simplex::CenteredFrame;
use std::collections::BTreeMap;

/// Polynomial differential k-form in n variables: a map from k-indices to
/// polynomial coefficients. Absent keys are zero components.
#[derive(Debug, Clone)]
pub struct PolyForm {
    k: usize,
    n: usize,
    components: BTreeMap<KIndex, Poly>,
}

impl PolyForm {
    pub fn zero(k: usize, n: usize) -> Self {
        PolyForm {
            k,
            n,
            components: BTreeMap::new(),
        }
    }

    /// 0-form wrapping a scalar polynomial.
    pub fn scalar(p: Poly) -> Self {
        let n = p.nvars();
        let mut f = PolyForm::zero(0, n);
        f.set_component(KIndex::empty(n), p);
        f
    }

    /// Basis form `dx^α` with unit coefficient.
    pub fn basis(alpha: KIndex) -> Self {
        let n = alpha.ambient_dim();
        let k = alpha.degree();
        let mut f = PolyForm::zero(k, n);
        f.set_component(alpha, Poly::constant(n, 1.0));
        f
    }

    /// The volume form `dx¹∧…∧dxⁿ`.
    pub fn volume(n: usize) -> Self {
        let alpha = KIndex::new((1..=n).collect(), n).expect("volume index");
        PolyForm::basis(alpha)
    }

    /// 1-form `u dx¹ + v dx²` from the 2D vector proxy `(u, v)`.
    pub fn from_vector2(u: Poly, v: Poly) -> Self {
        assert_eq!(u.nvars(), 2);
        assert_eq!(v.nvars(), 2);
        let mut f = PolyForm::zero(1, 2);
        f.set_component(KIndex::new(vec![1], 2).unwrap(), u);
        f.set_component(KIndex::new(vec![2], 2).unwrap(), v);
        f
    }

    /// The 2D vector proxy `(u, v)` of a 1-form.
    pub fn to_vector2(&self) -> (Poly, Poly) {
        assert_eq!((self.k, self.n), (1, 2));
        let u = self
            .component(&KIndex::new(vec![1], 2).unwrap())
            .cloned()
            .unwrap_or_else(|| Poly::zero(2));
        let v = self
            .component(&KIndex::new(vec![2], 2).unwrap())
            .cloned()
            .unwrap_or_else(|| Poly::zero(2));
        (u, v)
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&KIndex, &Poly)> {
        self.components.iter()
    }

    pub fn component(&self, idx: &KIndex) -> Option<&Poly> {
        self.components.get(idx)
    }

    pub fn set_component(&mut self, idx: KIndex, p: Poly) {
        debug_assert_eq!(idx.degree(), self.k);
        debug_assert_eq!(idx.ambient_dim(), self.n);
        if p.is_zero() {
            self.components.remove(&idx);
        } else {
            self.components.insert(idx, p);
        }
    }

    pub fn add_component(&mut self, idx: KIndex, p: &Poly) {
        let cur = self
            .components
            .remove(&idx)
            .unwrap_or_else(|| Poly::zero(self.n));
        self.set_component(idx, cur.add(p));
    }

    pub fn add(&self, other: &PolyForm) -> PolyForm {
        debug_assert_eq!((self.k, self.n), (other.k, other.n));
        let mut out = self.clone();
        for (idx, p) in &other.components {
            out.add_component(idx.clone(), p);
        }
        out
    }

    pub fn sub(&self, other: &PolyForm) -> PolyForm {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> PolyForm {
        let mut out = PolyForm::zero(self.k, self.n);
        for (idx, p) in &self.components {
            out.set_component(idx.clone(), p.scale(s));
        }
        out
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_coeff(&self) -> f64 {
        self.components
            .values()
            .fold(0.0, |m, p| m.max(p.max_coeff()))
    }

    /// Exterior derivative `d^k`. For `k = n` this is the zero (n+1)-form.
    pub fn ext_deriv(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.k + 1, self.n);
        if self.k >= self.n {
            return out;
        }
        for (alpha, p) in &self.components {
            for j in 1..=self.n {
                if alpha.contains(j) {
                    continue;
                }
                let dp = p.partial(j);
                if dp.is_zero() {
                    continue;
                }
                let (idx, sign) = alpha.wedge_insert(j).expect("j not in alpha");
                out.add_component(idx, &dp.scale(sign as f64));
            }
        }
        out
    }

    /// Hodge star: `⋆(f dx^α) = sign(α, β) f dx^β` with β the complement of α.
    pub fn hodge_star(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.n - self.k.min(self.n), self.n);
        for (alpha, p) in &self.components {
            let (beta, sign) = alpha.complement();
            out.add_component(beta, &p.scale(sign as f64));
        }
        out
    }

    /// Codifferential `δ_k = (−1)^{kn} ⋆ d^{n−k} ⋆`, composed exactly from
    /// the star and the exterior derivative. For `k = 0` the zero form is
    /// returned by convention.
    ///
    /// With this sign, `δ` acts as `+div` on 1-forms in two dimensions.
    pub fn codifferential(&self) -> PolyForm {
        if self.k == 0 {
            return PolyForm::zero(0, self.n);
        }
        let sign = if (self.k * self.n) % 2 == 0 { 1.0 } else { -1.0 };
        self.hodge_star().ext_deriv().hodge_star().scale(sign)
    }

    /// Codifferential normalized as the formal adjoint of `d`, so that on a
    /// single cell `⟨dω, η⟩ − ⟨ω, δη⟩` and `⟨δω, τ⟩ − ⟨ω, dτ⟩` are boundary
    /// pairings. Differs from [`PolyForm::codifferential`] by the global
    /// factor `(−1)^{n+1}`; the two coincide in odd dimension.
    pub fn codifferential_adjoint(&self) -> PolyForm {
        let sign = if self.n % 2 == 1 { 1.0 } else { -1.0 };
        self.codifferential().scale(sign)
    }

    /// Koszul contraction with the position field, `κ`, or with the
    /// cell-centered position `κ_T` when a frame is supplied.
    pub fn koszul(&self, frame: Option<&CenteredFrame>) -> PolyForm {
        if self.k == 0 {
            return PolyForm::zero(0, self.n);
        }
        let mut out = PolyForm::zero(self.k - 1, self.n);
        for (alpha, p) in &self.components {
            for (pos, &aj) in alpha.entries().iter().enumerate() {
                let coord = match frame {
                    Some(fr) => fr.centered_coordinate(aj),
                    None => Poly::variable(self.n, aj),
                };
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                out.add_component(alpha.remove_at(pos), &coord.mul(p).scale(sign));
            }
        }
        out
    }

    /// Pointwise evaluation of all components, in the order of
    /// `enumerate_k_indices(k, n)`.
    pub fn eval_components(&self, x: &[f64]) -> Vec<f64> {
        enumerate_k_indices(self.k, self.n)
            .expect("valid degree")
            .into_iter()
            .map(|idx| self.component(&idx).map(|p| p.eval(x)).unwrap_or(0.0))
            .collect()
    }
}
