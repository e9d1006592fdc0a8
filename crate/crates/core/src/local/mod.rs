//! Per-simplex shape spaces of the nonconforming scheme: the minimal space,
//! its bubble enrichments, the test product space, duality pairings, and the
//! small correction / dual-basis solves used by the global construction.

use crate::exterior::{enumerate_k_indices, l2_inner, CenteredFrame, KIndex, Poly, PolyForm, Simplex};
use crate::linalg;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Provenance label of a local basis entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Constant,
    Koszul,
    StarKoszul,
    BubbleDelta,
    BubbleD,
}

/// Selector for the local space families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSpaceKind {
    /// Constants + Koszul + star-Koszul generators.
    Minimal,
    /// Minimal space enriched with the d-closed bubbles.
    MinimalPlusDelta,
    /// Minimal space enriched with the δ-closed bubbles.
    MinimalPlusD,
    /// The d-closed bubbles alone.
    DeltaBubbles,
    /// The δ-closed bubbles alone.
    DBubbles,
    /// Lowest-order trimmed family: constants + Koszul generators.
    WhitneyTrimmed,
    /// Star of the trimmed family: constants + star-Koszul generators.
    WhitneyStarTrimmed,
}

/// Ordered local basis with provenance labels.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub simplex: Simplex,
    pub degree: usize,
    pub forms: Vec<PolyForm>,
    pub labels: Vec<BasisLabel>,
}

/// Basis of the product test space: pairs `(η, τ)` of degrees `(k+1, k−1)`.
#[derive(Debug, Clone)]
pub struct TestPairBasis {
    pub simplex: Simplex,
    pub degree: usize,
    pub pairs: Vec<(PolyForm, PolyForm)>,
}

/// Matrix of duality pairings between a local basis and a test pair basis.
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    pub matrix: DMatrix<f64>,
}

/// The d-closed bubble `Σ_j [(x̃^{α_j})² − c^{α_j}] dx^{α₁}∧…∧dx^{α_k}`.
pub fn bubble_delta(t: &Simplex, alpha: &KIndex) -> PolyForm {
    let frame = CenteredFrame::new(t);
    bubble_delta_with_frame(&frame, alpha, t.ambient_dim())
}

fn bubble_delta_with_frame(frame: &CenteredFrame, alpha: &KIndex, n: usize) -> PolyForm {
    let mut coeff = Poly::zero(n);
    for &aj in alpha.entries() {
        coeff = coeff.add(&frame.centered_quadratic(aj));
    }
    let mut f = PolyForm::zero(alpha.degree(), n);
    f.set_component(alpha.clone(), coeff);
    f
}

/// The δ-closed bubble `Σ_j [(x̃^{β_j})² − c^{β_j}] dx^{α₁}∧…∧dx^{α_k}`,
/// with β the complement of α.
pub fn bubble_d(t: &Simplex, alpha: &KIndex) -> PolyForm {
    let frame = CenteredFrame::new(t);
    bubble_d_with_frame(&frame, alpha, t.ambient_dim())
}

fn bubble_d_with_frame(frame: &CenteredFrame, alpha: &KIndex, n: usize) -> PolyForm {
    let (beta, _) = alpha.complement();
    let mut coeff = Poly::zero(n);
    for &bj in beta.entries() {
        coeff = coeff.add(&frame.centered_quadratic(bj));
    }
    let mut f = PolyForm::zero(alpha.degree(), n);
    f.set_component(alpha.clone(), coeff);
    f
}

/// Build one of the local shape-space families as an ordered, labelled basis.
///
/// Ordering is deterministic: constants in k-index order, then Koszul
/// generators, then star-Koszul generators, then bubbles in k-index order.
pub fn build_local_space(t: &Simplex, k: usize, kind: LocalSpaceKind) -> Result<LocalBasis> {
    let n = t.ambient_dim();
    if k > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    match kind {
        LocalSpaceKind::Minimal | LocalSpaceKind::MinimalPlusDelta | LocalSpaceKind::MinimalPlusD => {
            if k < 1 || k + 1 > n {
                return Err(Error::DegreeOutOfRange { k: k as isize, n });
            }
        }
        LocalSpaceKind::DeltaBubbles => {
            if k < 1 {
                return Err(Error::DegreeOutOfRange { k: k as isize, n });
            }
        }
        LocalSpaceKind::DBubbles => {
            if k + 1 > n {
                return Err(Error::DegreeOutOfRange { k: k as isize, n });
            }
        }
        _ => {}
    }
    let frame = CenteredFrame::new(t);
    let mut forms = Vec::new();
    let mut labels = Vec::new();

    let push_constants = |forms: &mut Vec<PolyForm>, labels: &mut Vec<BasisLabel>| {
        for idx in enumerate_k_indices(k, n).expect("valid k") {
            forms.push(PolyForm::basis(idx));
            labels.push(BasisLabel::Constant);
        }
    };
    let push_koszul = |forms: &mut Vec<PolyForm>, labels: &mut Vec<BasisLabel>| {
        if k + 1 <= n {
            for idx in enumerate_k_indices(k + 1, n).expect("valid k+1") {
                forms.push(PolyForm::basis(idx).koszul(Some(&frame)));
                labels.push(BasisLabel::Koszul);
            }
        }
    };
    let push_star_koszul = |forms: &mut Vec<PolyForm>, labels: &mut Vec<BasisLabel>| {
        if k >= 1 {
            for idx in enumerate_k_indices(k - 1, n).expect("valid k-1") {
                let f = PolyForm::basis(idx)
                    .hodge_star()
                    .koszul(Some(&frame))
                    .hodge_star();
                forms.push(f);
                labels.push(BasisLabel::StarKoszul);
            }
        }
    };
    let push_bubbles_delta = |forms: &mut Vec<PolyForm>, labels: &mut Vec<BasisLabel>| {
        for idx in enumerate_k_indices(k, n).expect("valid k") {
            forms.push(bubble_delta_with_frame(&frame, &idx, n));
            labels.push(BasisLabel::BubbleDelta);
        }
    };
    let push_bubbles_d = |forms: &mut Vec<PolyForm>, labels: &mut Vec<BasisLabel>| {
        for idx in enumerate_k_indices(k, n).expect("valid k") {
            forms.push(bubble_d_with_frame(&frame, &idx, n));
            labels.push(BasisLabel::BubbleD);
        }
    };

    match kind {
        LocalSpaceKind::Minimal => {
            push_constants(&mut forms, &mut labels);
            push_koszul(&mut forms, &mut labels);
            push_star_koszul(&mut forms, &mut labels);
        }
        LocalSpaceKind::MinimalPlusDelta => {
            push_constants(&mut forms, &mut labels);
            push_koszul(&mut forms, &mut labels);
            push_star_koszul(&mut forms, &mut labels);
            push_bubbles_delta(&mut forms, &mut labels);
        }
        LocalSpaceKind::MinimalPlusD => {
            push_constants(&mut forms, &mut labels);
            push_koszul(&mut forms, &mut labels);
            push_star_koszul(&mut forms, &mut labels);
            push_bubbles_d(&mut forms, &mut labels);
        }
        LocalSpaceKind::DeltaBubbles => push_bubbles_delta(&mut forms, &mut labels),
        LocalSpaceKind::DBubbles => push_bubbles_d(&mut forms, &mut labels),
        LocalSpaceKind::WhitneyTrimmed => {
            push_constants(&mut forms, &mut labels);
            push_koszul(&mut forms, &mut labels);
        }
        LocalSpaceKind::WhitneyStarTrimmed => {
            push_constants(&mut forms, &mut labels);
            push_star_koszul(&mut forms, &mut labels);
        }
    }
    Ok(LocalBasis {
        simplex: t.clone(),
        degree: k,
        forms,
        labels,
    })
}

/// The δ-side subspace used by the div-type basis construction:
/// star-Koszul generators plus the d-closed bubbles.
pub fn div_side_space(t: &Simplex, k: usize) -> Result<LocalBasis> {
    let n = t.ambient_dim();
    if k < 1 || k > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    let frame = CenteredFrame::new(t);
    let mut forms = Vec::new();
    let mut labels = Vec::new();
    for idx in enumerate_k_indices(k - 1, n)? {
        let f = PolyForm::basis(idx)
            .hodge_star()
            .koszul(Some(&frame))
            .hodge_star();
        forms.push(f);
        labels.push(BasisLabel::StarKoszul);
    }
    for idx in enumerate_k_indices(k, n)? {
        forms.push(bubble_delta_with_frame(&frame, &idx, n));
        labels.push(BasisLabel::BubbleDelta);
    }
    Ok(LocalBasis {
        simplex: t.clone(),
        degree: k,
        forms,
        labels,
    })
}

/// Product test space `P*⁻₁Λ^{k+1}(T) × P⁻₁Λ^{k−1}(T)` as pairs, the η-side
/// entries first.
pub fn build_test_pair_space(t: &Simplex, k: usize) -> Result<TestPairBasis> {
    let n = t.ambient_dim();
    if k < 1 || k + 1 > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    let etas = build_local_space(t, k + 1, LocalSpaceKind::WhitneyStarTrimmed)?;
    let taus = build_local_space(t, k - 1, LocalSpaceKind::WhitneyTrimmed)?;
    let mut pairs = Vec::new();
    for eta in etas.forms {
        pairs.push((eta, PolyForm::zero(k - 1, n)));
    }
    for tau in taus.forms {
        pairs.push((PolyForm::zero(k + 1, n), tau));
    }
    Ok(TestPairBasis {
        simplex: t.clone(),
        degree: k,
        pairs,
    })
}

/// d-side half of the duality pairing, `⟨d μ, η⟩_T − ⟨μ, δ η⟩_T`, a boundary
/// (tangential-trace) pairing on polynomial data.
pub fn rot_side_pairing(mu: &PolyForm, eta: &PolyForm, t: &Simplex) -> Result<f64> {
    Ok(l2_inner(&mu.ext_deriv(), eta, t)? - l2_inner(mu, &eta.codifferential_adjoint(), t)?)
}

/// δ-side half of the duality pairing, `⟨μ, d τ⟩_T − ⟨δ μ, τ⟩_T`, a boundary
/// (normal-trace) pairing on polynomial data. In two dimensions this is
/// `(div μ, τ)_T + (μ, ∇τ)_T`.
pub fn div_side_pairing(mu: &PolyForm, tau: &PolyForm, t: &Simplex) -> Result<f64> {
    Ok(l2_inner(mu, &tau.ext_deriv(), t)? - l2_inner(&mu.codifferential_adjoint(), tau, t)?)
}

/// The trilinear duality pairing
/// `⟨d μ, η⟩ + ⟨δ μ, τ⟩ − ⟨μ, δ η + d τ⟩` with the adjoint-normalized
/// codifferential, evaluated with exact quadrature.
pub fn duality_pairing(mu: &PolyForm, pair: (&PolyForm, &PolyForm), t: &Simplex) -> Result<f64> {
    let (eta, tau) = pair;
    Ok(rot_side_pairing(mu, eta, t)? - div_side_pairing(mu, tau, t)?)
}

/// Full pairing matrix between the enriched local space and the test pair
/// space; square and nonsingular on every nondegenerate simplex.
pub fn unisolvence_matrix(t: &Simplex, k: usize) -> Result<PairingMatrix> {
    let basis = build_local_space(t, k, LocalSpaceKind::MinimalPlusDelta)?;
    let tests = build_test_pair_space(t, k)?;
    let mut m = DMatrix::zeros(basis.forms.len(), tests.pairs.len());
    for (i, mu) in basis.forms.iter().enumerate() {
        for (j, (eta, tau)) in tests.pairs.iter().enumerate() {
            m[(i, j)] = duality_pairing(mu, (eta, tau), t)?;
        }
    }
    Ok(PairingMatrix { matrix: m })
}

impl PairingMatrix {
    /// |det| after scaling rows and columns to unit Euclidean norm; a
    /// scale-free nonsingularity measure.
    pub fn normalized_abs_det(&self) -> f64 {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            let norm = m.row(i).norm();
            if norm > 0.0 {
                m.row_mut(i).scale_mut(1.0 / norm);
            }
        }
        for j in 0..m.ncols() {
            let norm = m.column(j).norm();
            if norm > 0.0 {
                m.column_mut(j).scale_mut(1.0 / norm);
            }
        }
        m.determinant().abs()
    }
}

/// Relative tolerance for the redundant constraint in the correction solve.
pub const CORRECTION_CONSISTENCY_TOL: f64 = 1e-10;

/// Unique bubble correction: returns `μ′` in the span of the d-closed
/// bubbles such that `μ + μ′` annihilates the δ-side pairing against every
/// test function of the trimmed (k−1)-family.
///
/// The system is overdetermined with one redundant constraint; a residual
/// beyond the relative tolerance signals a sign-convention bug upstream.
pub fn divside_correction(mu: &PolyForm, t: &Simplex) -> Result<PolyForm> {
    let k = mu.degree();
    let n = t.ambient_dim();
    let bubbles = build_local_space(t, k, LocalSpaceKind::DeltaBubbles)?;
    let tests = build_local_space(t, k - 1, LocalSpaceKind::WhitneyTrimmed)?;
    let rows = tests.forms.len();
    let cols = bubbles.forms.len();
    let mut a = DMatrix::zeros(rows, cols);
    let mut b = DVector::zeros(rows);
    for (j, tau) in tests.forms.iter().enumerate() {
        for (i, bubble) in bubbles.forms.iter().enumerate() {
            a[(j, i)] = div_side_pairing(bubble, tau, t)?;
        }
        b[j] = -div_side_pairing(mu, tau, t)?;
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::SingularSystem(format!("correction solve: {e}")))?;
    let residual = (&a * &x - &b).norm();
    let scale = a.norm() * x.norm().max(1.0) + b.norm();
    let tolerance = CORRECTION_CONSISTENCY_TOL * scale.max(f64::MIN_POSITIVE);
    if residual > tolerance {
        return Err(Error::InconsistentConstraints {
            residual,
            tolerance,
        });
    }
    let mut out = PolyForm::zero(k, n);
    for (i, bubble) in bubbles.forms.iter().enumerate() {
        out = out.add(&bubble.scale(x[i]));
    }
    Ok(out)
}

/// Dual basis of the δ-side subspace with respect to the δ-side pairing
/// against the supplied (k−1)-degree test functions:
/// `⟨μᵢ, d ψⱼ⟩ − ⟨δ μᵢ, ψⱼ⟩ = δ_ij`.
pub fn local_dual_div_basis(t: &Simplex, psi: &[PolyForm]) -> Result<Vec<PolyForm>> {
    if psi.is_empty() {
        return Err(Error::DimensionMismatch("empty test family".into()));
    }
    let k = psi[0].degree() + 1;
    let space = div_side_space(t, k)?;
    let dim = space.forms.len();
    if psi.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "dual solve needs {dim} test functions, got {}",
            psi.len()
        )));
    }
    let mut f = DMatrix::zeros(dim, dim);
    for (j, p) in psi.iter().enumerate() {
        for (i, mu) in space.forms.iter().enumerate() {
            f[(j, i)] = div_side_pairing(mu, p, t)?;
        }
    }
    let lu = f.clone().lu();
    let mut duals = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        let x = lu
            .solve(&e)
            .ok_or_else(|| Error::SingularSystem("dual basis system is singular".into()))?;
        let mut form = PolyForm::zero(k, t.ambient_dim());
        for (m, base) in space.forms.iter().enumerate() {
            form = form.add(&base.scale(x[m]));
        }
        duals.push(form);
    }
    // Kronecker property re-check
    for (i, mu) in duals.iter().enumerate() {
        for (j, p) in psi.iter().enumerate() {
            let v = div_side_pairing(mu, p, t)?;
            let want = if i == j { 1.0 } else { 0.0 };
            if (v - want).abs() > 1e-10 {
                return Err(Error::SingularSystem(format!(
                    "dual basis Kronecker defect {:.3e} at ({i},{j})",
                    (v - want).abs()
                )));
            }
        }
    }
    Ok(duals)
}

/// Gram matrix of a list of forms in L²(T).
pub fn gram(forms: &[PolyForm], t: &Simplex) -> Result<DMatrix<f64>> {
    let m = forms.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = l2_inner(&forms[i], &forms[j], t)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Expand each target form in the span of a basis (least squares via the
/// Gram matrix); errors if the residual shows the target leaves the span.
pub fn expand_in_span(
    targets: &[PolyForm],
    span: &[PolyForm],
    t: &Simplex,
) -> Result<DMatrix<f64>> {
    let g = gram(span, t)?;
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("span is linearly dependent".into()))?;
    let mut coeffs = DMatrix::zeros(span.len(), targets.len());
    for (j, target) in targets.iter().enumerate() {
        let mut rhs = DVector::zeros(span.len());
        for (i, s) in span.iter().enumerate() {
            rhs[i] = l2_inner(target, s, t)?;
        }
        let x = chol.solve(&rhs);
        // residual check: ‖target − Σ xᵢ sᵢ‖ must vanish
        let mut recon = PolyForm::zero(target.degree(), target.ambient_dim());
        for (i, s) in span.iter().enumerate() {
            recon = recon.add(&s.scale(x[i]));
        }
        let diff = target.sub(&recon);
        let err = l2_inner(&diff, &diff, t)?.max(0.0).sqrt();
        let scale = l2_inner(target, target, t)?.max(0.0).sqrt();
        if err > 1e-9 * scale.max(1e-30) {
            return Err(Error::SingularSystem(format!(
                "target {j} leaves the span (residual {err:.3e})"
            )));
        }
        coeffs.set_column(j, &x);
    }
    Ok(coeffs)
}

/// Measured constant of the δ-side local Poincaré bound: the largest value
/// of ‖μ‖ / ‖δμ‖ over the star-Koszul + d-closed-bubble space. Scales
/// exactly linearly under dilation.
pub fn delta_poincare_constant(t: &Simplex, k: usize) -> Result<f64> {
    let space = div_side_space(t, k)?;
    let g_l2 = gram(&space.forms, t)?;
    let deltas: Vec<PolyForm> = space.forms.iter().map(|f| f.codifferential()).collect();
    let g_delta = gram(&deltas, t)?;
    let (vals, _) = linalg::generalized_sym_eigen(&g_l2, &g_delta)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Measured constant of the d-side local Poincaré bound, over the Koszul +
/// δ-closed-bubble space.
pub fn d_poincare_constant(t: &Simplex, k: usize) -> Result<f64> {
    let n = t.ambient_dim();
    if k + 1 > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    let frame = CenteredFrame::new(t);
    let mut forms = Vec::new();
    for idx in enumerate_k_indices(k + 1, n)? {
        forms.push(PolyForm::basis(idx).koszul(Some(&frame)));
    }
    for idx in enumerate_k_indices(k, n)? {
        forms.push(bubble_d_with_frame(&frame, &idx, n));
    }
    let g_l2 = gram(&forms, t)?;
    let ds: Vec<PolyForm> = forms.iter().map(|f| f.ext_deriv()).collect();
    let g_d = gram(&ds, t)?;
    let (vals, _) = linalg::generalized_sym_eigen(&g_l2, &g_d)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Measured constant of `‖μ − P₀μ‖ ≤ C (‖δμ‖² + ‖dμ‖²)^{1/2}` over the full
/// enriched local space; equals the supremum over its mean-zero part.
pub fn local_approximation_constant(t: &Simplex, k: usize) -> Result<f64> {
    let n = t.ambient_dim();
    if k < 1 || k + 1 > n {
        return Err(Error::DegreeOutOfRange { k: k as isize, n });
    }
    let frame = CenteredFrame::new(t);
    let mut forms = Vec::new();
    for idx in enumerate_k_indices(k + 1, n)? {
        forms.push(PolyForm::basis(idx).koszul(Some(&frame)));
    }
    for idx in enumerate_k_indices(k - 1, n)? {
        forms.push(
            PolyForm::basis(idx)
                .hodge_star()
                .koszul(Some(&frame))
                .hodge_star(),
        );
    }
    for idx in enumerate_k_indices(k, n)? {
        forms.push(bubble_delta_with_frame(&frame, &idx, n));
        forms.push(bubble_d_with_frame(&frame, &idx, n));
    }
    let g_l2 = gram(&forms, t)?;
    let mut g_der = gram(
        &forms.iter().map(|f| f.ext_deriv()).collect::<Vec<_>>(),
        t,
    )?;
    g_der += gram(
        &forms
            .iter()
            .map(|f| f.codifferential())
            .collect::<Vec<_>>(),
        t,
    )?;
    let (vals, _) = linalg::generalized_sym_eigen(&g_l2, &g_der)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}
