//! Property tests of the exterior-calculus identities on random polynomial
//! forms and random simplices.

use hodgefem::exterior::{l2_inner, CenteredFrame, Poly, PolyForm, Simplex};
use hodgefem::sampling;
use proptest::prelude::*;

fn arb_dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4).prop_flat_map(|n| (0usize..=n).prop_map(move |k| (k, n)))
}

fn form_from_seed(seed: u64, k: usize, n: usize) -> PolyForm {
    let mut rng = sampling::rng(seed);
    sampling::random_form(&mut rng, k, n, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_after_d_vanishes((k, n) in arb_dims(), seed in 0u64..1_000_000) {
        let f = form_from_seed(seed, k, n);
        let ddf = f.ext_deriv().ext_deriv();
        prop_assert!(ddf.max_coeff() <= 1e-12 * (1.0 + f.max_coeff()));
    }

    #[test]
    fn codifferential_squares_to_zero((k, n) in arb_dims(), seed in 0u64..1_000_000) {
        let f = form_from_seed(seed, k, n);
        let ddf = f.codifferential().codifferential();
        prop_assert!(ddf.max_coeff() <= 1e-12 * (1.0 + f.max_coeff()));
    }

    #[test]
    fn star_star_is_sign_flip((k, n) in arb_dims(), seed in 0u64..1_000_000) {
        let f = form_from_seed(seed, k, n);
        let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
        let diff = f.hodge_star().hodge_star().sub(&f.scale(sign));
        prop_assert!(diff.max_coeff() <= 1e-12 * (1.0 + f.max_coeff()));
    }

    #[test]
    fn koszul_squares_to_zero(n in 2usize..=4, seed in 0u64..1_000_000) {
        // κ∘κ = 0 on forms of any degree, here degree 3 where available
        let k = 3usize.min(n);
        let f = form_from_seed(seed, k, n);
        let kkf = f.koszul(None).koszul(None);
        prop_assert!(kkf.max_coeff() <= 1e-12 * (1.0 + f.max_coeff()));
    }

    #[test]
    fn koszul_differential_identities(n in 2usize..=4, seed in 0u64..1_000_000) {
        // d(κ_T Λ) = k Λ for constant k-forms Λ, k ≥ 1
        let mut rng = sampling::rng(seed);
        let t = if n == 2 {
            sampling::shape_regular_triangle(&mut rng)
        } else {
            // stretch a reference simplex deterministically
            Simplex::reference(n).dilated(1.5)
        };
        let frame = CenteredFrame::new(&t);
        for k in 1..=n {
            for alpha in hodgefem::exterior::enumerate_k_indices(k, n).unwrap() {
                let lam = PolyForm::basis(alpha);
                let dk = lam.koszul(Some(&frame)).ext_deriv();
                let diff = dk.sub(&lam.scale(k as f64));
                prop_assert!(diff.max_coeff() <= 1e-12 * k as f64);
            }
        }
    }

    #[test]
    fn positivity_of_the_inner_product(seed in 0u64..1_000_000) {
        let mut rng = sampling::rng(seed);
        let t = sampling::shape_regular_triangle(&mut rng);
        let f = sampling::random_form(&mut rng, 1, 2, 2);
        prop_assume!(f.max_coeff() > 1e-3);
        let norm2 = l2_inner(&f, &f, &t).unwrap();
        prop_assert!(norm2 > 0.0);
        // symmetry and bilinearity spot check
        let g = sampling::random_form(&mut rng, 1, 2, 2);
        let fg = l2_inner(&f, &g, &t).unwrap();
        let gf = l2_inner(&g, &f, &t).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-12 * (1.0 + fg.abs()));
    }

    #[test]
    fn integration_is_affine_invariant(seed in 0u64..1_000_000) {
        // ∫_{A(T)} p∘A⁻¹ = |det A| ∫_T p for random affine maps
        let mut rng = sampling::rng(seed);
        let t = sampling::shape_regular_triangle(&mut rng);
        let p = sampling::random_poly(&mut rng, 2, 3);
        // affine map x ↦ Mx + b with M = [[a,b],[c,d]]
        let (a, b, c, d): (f64, f64, f64, f64) = (
            1.0 + 0.5 * rand::Rng::random_range(&mut rng, -1.0..1.0),
            0.3 * rand::Rng::random_range(&mut rng, -1.0..1.0),
            0.3 * rand::Rng::random_range(&mut rng, -1.0..1.0),
            1.0 + 0.5 * rand::Rng::random_range(&mut rng, -1.0..1.0),
        );
        let det: f64 = a * d - b * c;
        prop_assume!(det.abs() > 0.2);
        let shift = [0.7, -0.4];
        let mapped = Simplex::new(
            t.vertices()
                .iter()
                .map(|v| vec![a * v[0] + b * v[1] + shift[0], c * v[0] + d * v[1] + shift[1]])
                .collect(),
        )
        .unwrap();
        // p∘A⁻¹ built by substituting the inverse map into p
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let xi = Poly::affine(
            2,
            -(inv[0][0] * shift[0] + inv[0][1] * shift[1]),
            &[inv[0][0], inv[0][1]],
        );
        let eta = Poly::affine(
            2,
            -(inv[1][0] * shift[0] + inv[1][1] * shift[1]),
            &[inv[1][0], inv[1][1]],
        );
        let mut composed = Poly::zero(2);
        for (exps, coeff) in p.terms() {
            let mut term = Poly::constant(2, *coeff);
            for _ in 0..exps[0] {
                term = term.mul(&xi);
            }
            for _ in 0..exps[1] {
                term = term.mul(&eta);
            }
            composed = composed.add(&term);
        }
        let lhs = mapped.integrate(&composed);
        let rhs = det.abs() * t.integrate(&p);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}

/// Monte Carlo oracle for the exact barycentric integration formula.
#[test]
fn monte_carlo_cross_check_of_simplex_integration() {
    use rand::Rng;
    let t = Simplex::reference(2);
    // λ1 λ2 = x y on the reference triangle
    let p = Poly::variable(2, 1).mul(&Poly::variable(2, 2));
    let exact = t.integrate(&p);
    assert!((exact - 1.0 / 24.0).abs() < 1e-15);
    let mut rng = sampling::rng(2024);
    let samples = 4_000_000usize;
    let mut acc = 0.0f64;
    let mut hits = 0usize;
    for _ in 0..samples {
        let x: f64 = rng.random_range(0.0..1.0);
        let y: f64 = rng.random_range(0.0..1.0);
        if x + y <= 1.0 {
            acc += x * y;
            hits += 1;
        }
    }
    let estimate = acc / samples as f64; // mean over the unit square ⊃ T
    let _ = hits;
    assert!(
        (estimate - exact).abs() < 1e-4,
        "Monte Carlo {estimate} vs exact {exact}"
    );
}
