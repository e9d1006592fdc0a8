//! Deterministic generators of random shape-regular simplices and random
//! polynomial forms, shared by the property tests and the acceptance suite.

use crate::exterior::{enumerate_k_indices, Poly, PolyForm, Simplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random triangle with all angles at least ~20 degrees (rejection sampled).
pub fn shape_regular_triangle(rng: &mut ChaCha8Rng) -> Simplex {
    loop {
        let pts: Vec<[f64; 2]> = (0..3)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        if let Ok(t) = Simplex::triangle(pts[0], pts[1], pts[2]) {
            if min_angle_deg(&pts) > 20.0 && t.volume() > 0.05 {
                return t;
            }
        }
    }
}

/// Random tetrahedron with bounded shape ratio (rejection sampled).
pub fn shape_regular_tetrahedron(rng: &mut ChaCha8Rng) -> Simplex {
    loop {
        let pts: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        if let Ok(t) = Simplex::new(pts) {
            // volume vs diameter^3 as a crude regularity measure
            if t.volume() > 0.02 * t.diameter().powi(3) {
                return t;
            }
        }
    }
}

/// Random polynomial with the given degree bound in n variables.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_degree: u32) -> Poly {
    let mut p = Poly::zero(n);
    let mut exps = vec![0u32; n];
    fill_terms(rng, &mut p, &mut exps, 0, max_degree);
    p
}

fn fill_terms(rng: &mut ChaCha8Rng, p: &mut Poly, exps: &mut Vec<u32>, j: usize, left: u32) {
    if j == exps.len() {
        p.add_term(exps, rng.random_range(-1.0..1.0));
        return;
    }
    for e in 0..=left {
        exps[j] = e;
        fill_terms(rng, p, exps, j + 1, left - e);
    }
    exps[j] = 0;
}

/// Random polynomial k-form with all components populated.
pub fn random_form(rng: &mut ChaCha8Rng, k: usize, n: usize, max_degree: u32) -> PolyForm {
    let mut f = PolyForm::zero(k, n);
    for idx in enumerate_k_indices(k, n).expect("valid degree") {
        f.set_component(idx, random_poly(rng, n, max_degree));
    }
    f
}

fn min_angle_deg(pts: &[[f64; 2]]) -> f64 {
    let mut best = 180.0f64;
    for i in 0..3 {
        let a = pts[i];
        let b = pts[(i + 1) % 3];
        let c = pts[(i + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let dot = u[0] * v[0] + u[1] * v[1];
        let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
        best = best.min(cos.acos().to_degrees());
    }
    best
}
