//! Quadrature rules on triangles for non-polynomial data.
//!
//! Polynomial integrands are integrated exactly through
//! [`crate::exterior::Simplex::integrate`]; the rules here are used for
//! analytic right-hand sides and error norms. The rules are collapsed
//! tensor-product Gauss–Legendre (Duffy) rules: a rule of requested degree
//! `d` uses `⌈(d+2)/2⌉²` points and is exact for all polynomials of total
//! degree ≤ d.

use crate::{Error, Result};

/// Quadrature rule in barycentric coordinates; weights sum to one.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

const MAX_DEGREE: usize = 40;

/// Gauss–Legendre nodes and weights on [0, 1], by Newton iteration on the
/// Legendre polynomial (deterministic, accurate to machine precision).
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess (Chebyshev-like)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule exact for all polynomials of total degree ≤ `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    // u-integrand carries the Jacobian factor (1−u), raising its degree by 1
    let n = (degree + 3) / 2;
    let (nodes, wts) = gauss_legendre_unit(n.max(1));
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in nodes.iter().zip(&wts) {
        for (v, wv) in nodes.iter().zip(&wts) {
            let l1 = *u;
            let l2 = v * (1.0 - u);
            let l0 = 1.0 - l1 - l2;
            points.push([l0, l1, l2]);
            // weights normalized against the unit-area reference measure
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    Ok(TriangleRule {
        degree,
        points,
        weights,
    })
}

impl TriangleRule {
    /// Integrate `f` (given in Cartesian coordinates) over the triangle with
    /// the stated corners.
    pub fn integrate(&self, corners: &[[f64; 2]; 3], f: impl Fn(f64, f64) -> f64) -> f64 {
        let area = 0.5
            * ((corners[1][0] - corners[0][0]) * (corners[2][1] - corners[0][1])
                - (corners[2][0] - corners[0][0]) * (corners[1][1] - corners[0][1]))
                .abs();
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let x = p[0] * corners[0][0] + p[1] * corners[1][0] + p[2] * corners[2][0];
            let y = p[0] * corners[0][1] + p[1] * corners[1][1] + p[2] * corners[2][1];
            acc += w * f(x, y);
        }
        acc * area
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{Poly, Simplex};

    /// Every rule must reproduce the exact barycentric integral of all
    /// monomials up to its stated degree.
    #[test]
    fn rules_match_exact_monomial_integrals() {
        let corners = [[0.2, 0.1], [1.3, 0.4], [0.5, 1.6]];
        let t = Simplex::triangle(corners[0], corners[1], corners[2]).unwrap();
        for degree in [1usize, 2, 4, 6, 8, 10] {
            let rule = triangle_rule(degree).unwrap();
            for p in 0..=degree as u32 {
                for q in 0..=(degree as u32 - p) {
                    let poly = Poly::monomial(2, &[p, q], 1.0);
                    let exact = t.integrate(&poly);
                    let quad = rule.integrate(&corners, |x, y| poly.eval(&[x, y]));
                    assert!(
                        (exact - quad).abs() < 1e-13 * (1.0 + exact.abs()),
                        "degree {degree} monomial x^{p} y^{q}: {exact} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_two_times_reference_area() {
        let rule = triangle_rule(6).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0 * 0.5 / 0.5 * 0.5).abs() < 1e-14); // = 1
    }

    #[test]
    fn unsupported_degree_is_an_error() {
        assert!(triangle_rule(99).is_err());
    }
}
