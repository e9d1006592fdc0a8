//! Global Whitney-form spaces on a 2D mesh: conforming P1 Lagrange 0-forms,
//! Whitney edge 1-forms, piecewise-constant 2-forms, and the nonconforming
//! Crouzeix–Raviart star-2-form space with vanishing boundary means; plus
//! incidence matrices, mass matrices, and discrete harmonic forms.
//!
//! 2-form spaces are represented through their star scalars; the star is
//! applied where pairings are assembled.

use crate::exterior::{KIndex, Poly, PolyForm};
use crate::linalg::{self, SymTriplets};
use crate::mesh::Mesh2D;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Kinds of global spaces on the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhitneyKind {
    /// Continuous piecewise-linear 0-forms; one dof per vertex.
    LagrangeP1,
    /// Whitney (lowest-order trimmed) 1-forms; one dof per edge, normalized
    /// to unit tangential moment along the edge.
    EdgeWhitney1,
    /// Piecewise-constant 2-forms via their star scalars; one dof per cell.
    PiecewiseP0,
    /// Crouzeix–Raviart star 2-forms with zero boundary midpoint values;
    /// one dof per interior edge.
    CrouzeixRaviart0,
}

/// Local basis of a space on one cell: the forms and their global dofs
/// (`None` marks a constrained-to-zero local function, e.g. CR boundary
/// edges).
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub dofs: Vec<Option<usize>>,
    pub forms: Vec<PolyForm>,
}

/// A global space with per-cell local bases.
#[derive(Debug, Clone)]
pub struct WhitneySpace {
    pub kind: WhitneyKind,
    pub dofs: usize,
    pub cells: Vec<CellBasis>,
    /// For CR0: map edge id → dof id (interior edges only).
    pub edge_dof: Vec<Option<usize>>,
}

/// Barycentric coordinates of a cell as affine polynomials, ordered like the
/// cell's vertices.
pub fn barycentric_polys(mesh: &Mesh2D, t: usize) -> [Poly; 3] {
    let c = mesh.triangle_corners(t);
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let mut out: Vec<Poly> = Vec::with_capacity(3);
    for i in 0..3 {
        let a = c[(i + 1) % 3];
        let b = c[(i + 2) % 3];
        let gx = (a[1] - b[1]) / det;
        let gy = (b[0] - a[0]) / det;
        let c0 = (a[0] * b[1] - b[0] * a[1]) / det;
        out.push(Poly::affine(2, c0, &[gx, gy]));
    }
    [out[0].clone(), out[1].clone(), out[2].clone()]
}

/// Whitney 1-form of the oriented edge `(a, b)` on cell `t`:
/// `λ_a dλ_b − λ_b dλ_a`, with unit tangential moment from `a` to `b`.
fn whitney_edge_form(lam: &[Poly; 3], ia: usize, ib: usize) -> PolyForm {
    let grad = |p: &Poly| (p.partial(1), p.partial(2));
    let (dbx, dby) = grad(&lam[ib]);
    let (dax, day) = grad(&lam[ia]);
    let u = lam[ia].mul(&dbx).sub(&lam[ib].mul(&dax));
    let v = lam[ia].mul(&dby).sub(&lam[ib].mul(&day));
    PolyForm::from_vector2(u, v)
}

/// Build a global space on the mesh.
pub fn build_space(mesh: &Mesh2D, kind: WhitneyKind) -> WhitneySpace {
    let mut cells = Vec::with_capacity(mesh.num_triangles());
    let mut edge_dof = vec![None; mesh.num_edges()];
    let dofs = match kind {
        WhitneyKind::LagrangeP1 => mesh.num_vertices(),
        WhitneyKind::EdgeWhitney1 => mesh.num_edges(),
        WhitneyKind::PiecewiseP0 => mesh.num_triangles(),
        WhitneyKind::CrouzeixRaviart0 => {
            let mut next = 0usize;
            for e in 0..mesh.num_edges() {
                if !mesh.is_boundary_edge(e) {
                    edge_dof[e] = Some(next);
                    next += 1;
                }
            }
            next
        }
    };
    for t in 0..mesh.num_triangles() {
        let lam = barycentric_polys(mesh, t);
        let tri = mesh.triangle(t);
        let basis = match kind {
            WhitneyKind::LagrangeP1 => CellBasis {
                dofs: tri.iter().map(|&v| Some(v)).collect(),
                forms: lam.iter().cloned().map(PolyForm::scalar).collect(),
            },
            WhitneyKind::EdgeWhitney1 => {
                let mut dofs = Vec::with_capacity(3);
                let mut forms = Vec::with_capacity(3);
                for &(e, _sign) in &mesh.triangle_edges(t) {
                    let ia_v = mesh.edge(e)[0];
                    let ib_v = mesh.edge(e)[1];
                    let ia = tri.iter().position(|&v| v == ia_v).unwrap();
                    let ib = tri.iter().position(|&v| v == ib_v).unwrap();
                    dofs.push(Some(e));
                    forms.push(whitney_edge_form(&lam, ia, ib));
                }
                CellBasis { dofs, forms }
            }
            WhitneyKind::PiecewiseP0 => CellBasis {
                dofs: vec![Some(t)],
                forms: vec![PolyForm::scalar(Poly::constant(2, 1.0))],
            },
            WhitneyKind::CrouzeixRaviart0 => {
                let mut dofs = Vec::with_capacity(3);
                let mut forms = Vec::with_capacity(3);
                for (local, &(e, _)) in mesh.triangle_edges(t).iter().enumerate() {
                    // local edge (v_l, v_{l+1}); the opposite vertex is l+2
                    let opp = (local + 2) % 3;
                    let scalar = Poly::constant(2, 1.0).sub(&lam[opp].scale(2.0));
                    dofs.push(edge_dof[e]);
                    forms.push(PolyForm::scalar(scalar));
                }
                CellBasis { dofs, forms }
            }
        };
        cells.push(basis);
    }
    WhitneySpace {
        kind,
        dofs,
        cells,
        edge_dof,
    }
}

/// Signed incidence matrix with integer entries.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, i64)>,
}

impl IncidenceMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v as f64;
        }
        m
    }

    /// Integer product, for exact complex-property checks.
    pub fn compose(&self, other: &IncidenceMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.cols, other.rows);
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut by_row: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for &(i, j, v) in &other.triplets {
            by_row.entry(i).or_default().push((j, v));
        }
        for &(i, k, v) in &self.triplets {
            if let Some(row) = by_row.get(&k) {
                for &(j, w) in row {
                    *acc.entry((i, j)).or_insert(0) += v * w;
                }
            }
        }
        acc.into_iter()
            .filter(|(_, v)| *v != 0)
            .map(|((i, j), v)| (i, j, v))
            .collect()
    }
}

/// Exact signed incidence of consecutive-degree spaces: vertex→edge
/// (gradient) or edge→cell (rot, up to the per-cell area factor).
pub fn differential_matrix(
    mesh: &Mesh2D,
    from: WhitneyKind,
    to: WhitneyKind,
) -> Result<IncidenceMatrix> {
    match (from, to) {
        (WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1) => {
            let mut triplets = Vec::with_capacity(2 * mesh.num_edges());
            for e in 0..mesh.num_edges() {
                let [a, b] = mesh.edge(e);
                triplets.push((e, b, 1));
                triplets.push((e, a, -1));
            }
            Ok(IncidenceMatrix {
                rows: mesh.num_edges(),
                cols: mesh.num_vertices(),
                triplets,
            })
        }
        (WhitneyKind::EdgeWhitney1, WhitneyKind::PiecewiseP0) => {
            let mut triplets = Vec::with_capacity(3 * mesh.num_triangles());
            for t in 0..mesh.num_triangles() {
                for &(e, sign) in &mesh.triangle_edges(t) {
                    triplets.push((t, e, sign as i64));
                }
            }
            Ok(IncidenceMatrix {
                rows: mesh.num_triangles(),
                cols: mesh.num_edges(),
                triplets,
            })
        }
        _ => Err(Error::DimensionMismatch(
            "differential_matrix needs consecutive degrees".into(),
        )),
    }
}

/// Per-cell constants of `rot` of a Whitney edge coefficient vector.
pub fn rot_cell_constants(mesh: &Mesh2D, u: &[f64]) -> Vec<f64> {
    (0..mesh.num_triangles())
        .map(|t| {
            let mut s = 0.0;
            for &(e, sign) in &mesh.triangle_edges(t) {
                s += sign as f64 * u[e];
            }
            s / mesh.area(t)
        })
        .collect()
}

/// Mass matrix triplets of a space, from exact per-cell integration.
pub fn mass_triplets(mesh: &Mesh2D, space: &WhitneySpace) -> SymTriplets {
    let mut m = SymTriplets::new(space.dofs);
    for (t, cell) in space.cells.iter().enumerate() {
        let simplex = cell_simplex(mesh, t);
        for (li, di) in cell.dofs.iter().enumerate() {
            let Some(i) = di else { continue };
            for (lj, dj) in cell.dofs.iter().enumerate().take(li + 1) {
                let Some(j) = dj else { continue };
                let v = crate::exterior::l2_inner(&cell.forms[li], &cell.forms[lj], &simplex)
                    .expect("equal degrees");
                if li == lj {
                    m.push(*i, *j, v);
                } else {
                    m.push(*i, *j, v);
                    if i == j {
                        m.push(*i, *j, v);
                    }
                }
            }
        }
    }
    m
}

/// Dense mass matrix (symmetric positive definite).
pub fn mass_matrix(mesh: &Mesh2D, space: &WhitneySpace) -> DMatrix<f64> {
    mass_triplets(mesh, space).to_dense()
}

pub fn cell_simplex(mesh: &Mesh2D, t: usize) -> crate::exterior::Simplex {
    let c = mesh.triangle_corners(t);
    crate::exterior::Simplex::triangle(c[0], c[1], c[2]).expect("mesh cells are nondegenerate")
}

/// Mass-orthonormal basis of the discrete harmonic 1-forms
/// `{u : rot u = 0, u ⟂ gradients}` inside the Whitney edge space.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub vectors: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    /// The members as per-cell constant vector fields (members are
    /// piecewise constant because their rot vanishes cell-wise).
    pub fn cell_constants(&self, mesh: &Mesh2D) -> Vec<Vec<[f64; 2]>> {
        let space = build_space(mesh, WhitneyKind::EdgeWhitney1);
        self.vectors
            .iter()
            .map(|u| {
                (0..mesh.num_triangles())
                    .map(|t| {
                        let c = mesh.triangle_corners(t);
                        let p = [
                            (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                            (c[0][1] + c[1][1] + c[2][1]) / 3.0,
                        ];
                        let cell = &space.cells[t];
                        let mut val = [0.0, 0.0];
                        for (l, d) in cell.dofs.iter().enumerate() {
                            let coeff = u[d.unwrap()];
                            let (pu, pv) = cell.forms[l].to_vector2();
                            val[0] += coeff * pu.eval(&p);
                            val[1] += coeff * pv.eval(&p);
                        }
                        val
                    })
                    .collect()
            })
            .collect()
    }
}

const NULLSPACE_REL_TOL: f64 = 1e-10;
/// Above this edge count the dense harmonic extraction is replaced by a
/// certified emptiness check (only valid, and only used, when b₁ = 0).
const DENSE_HARMONIC_LIMIT: usize = 2000;

/// Discrete harmonic forms via null-space extraction of the stacked
/// conditions `rot u = 0` and `D₀ᵀ M u = 0`, with singular-value threshold
/// `1e−10 · σ_max`. Large meshes with trivial topology take a cheaper
/// certified path (smallest-eigenvalue estimate of the stacked normal
/// matrix).
pub fn discrete_harmonic_forms(mesh: &Mesh2D) -> Result<HarmonicBasis> {
    let b1 = mesh.betti1()?;
    let ne = mesh.num_edges();
    let space = build_space(mesh, WhitneyKind::EdgeWhitney1);
    let mass = mass_triplets(mesh, &space);
    let d1 = differential_matrix(mesh, WhitneyKind::EdgeWhitney1, WhitneyKind::PiecewiseP0)?;
    let d0 = differential_matrix(mesh, WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1)?;

    if ne > DENSE_HARMONIC_LIMIT && b1 == 0 {
        // normal matrix S = D1ᵀD1 + (M D0)(M D0)ᵀ; emptiness is certified by
        // a strictly positive smallest eigenvalue
        let s = stacked_normal_matrix(mesh, &mass, &d0);
        let lam_max = linalg::largest_eig_sym(&s, 60);
        let lam_min = linalg::smallest_eig_spsd(&s, 80)?;
        if lam_min <= (NULLSPACE_REL_TOL * NULLSPACE_REL_TOL) * lam_max {
            return Err(Error::SingularSystem(format!(
                "harmonic space unexpectedly nontrivial (λ_min {lam_min:.3e})"
            )));
        }
        return Ok(HarmonicBasis { vectors: Vec::new() });
    }

    let md = mass.to_dense();
    let d1d = d1.to_dense();
    let d0d = d0.to_dense();
    let mut stacked = DMatrix::zeros(d1d.nrows() + d0d.ncols(), ne);
    stacked.view_mut((0, 0), (d1d.nrows(), ne)).copy_from(&d1d);
    stacked
        .view_mut((d1d.nrows(), 0), (d0d.ncols(), ne))
        .copy_from(&(d0d.transpose() * &md));
    let ns = linalg::nullspace(&stacked, NULLSPACE_REL_TOL);
    if ns.len() != b1 {
        return Err(Error::SingularSystem(format!(
            "harmonic dimension {} does not match betti1 {b1}",
            ns.len()
        )));
    }
    // mass-orthonormalize
    let items: Vec<Vec<f64>> = ns.iter().map(|v| v.iter().cloned().collect()).collect();
    let vectors = linalg::gram_schmidt(
        &items,
        |a, b| {
            let mb = mass.matvec(b);
            a.iter().zip(&mb).map(|(x, y)| x * y).sum()
        },
        |a, c, b| a.iter().zip(b).map(|(x, y)| x + c * y).collect(),
        |a, c| a.iter().map(|x| x * c).collect(),
        1e-12,
    )?;
    Ok(HarmonicBasis { vectors })
}

fn stacked_normal_matrix(
    mesh: &Mesh2D,
    mass: &SymTriplets,
    d0: &IncidenceMatrix,
) -> SymTriplets {
    let ne = mesh.num_edges();
    let nv = mesh.num_vertices();
    // rows of M D0 per vertex: column j of D0 maps to Σ_e M[:,e] D0[e,j]
    // build sparse column lists
    let mut md0: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut mass_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ne];
    for &(i, j, v) in mass.entries() {
        mass_rows[i].push((j, v));
        if i != j {
            mass_rows[j].push((i, v));
        }
    }
    for &(e, v, s) in &d0.triplets {
        for &(row, mv) in &mass_rows[e] {
            md0[v].push((row, s as f64 * mv));
        }
    }
    let mut s = SymTriplets::new(ne);
    // D1ᵀ D1 contribution: per cell, all sign products
    for t in 0..mesh.num_triangles() {
        let es = mesh.triangle_edges(t);
        for a in 0..3 {
            for b in 0..=a {
                s.push(es[a].0, es[b].0, (es[a].1 * es[b].1) as f64);
            }
        }
    }
    // (M D0)(M D0)ᵀ contribution: per vertex column outer product
    for col in &md0 {
        // combine duplicate row entries first
        let mut combined: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for &(r, v) in col {
            *combined.entry(r).or_insert(0.0) += v;
        }
        let entries: Vec<(usize, f64)> = combined.into_iter().collect();
        for (ai, &(ra, va)) in entries.iter().enumerate() {
            for &(rb, vb) in entries.iter().take(ai + 1) {
                s.push(ra, rb, va * vb);
            }
        }
    }
    s
}

/// Result of the discrete Hodge decomposition verification on the
/// piecewise-constant 1-form space.
#[derive(Debug, Clone)]
pub struct HodgeReport {
    pub rank_gradients: usize,
    pub harmonic_dim: usize,
    pub rank_costar: usize,
    pub p0_dim: usize,
    pub max_cross_orthogonality: f64,
}

impl HodgeReport {
    pub fn rank_sum_matches(&self) -> bool {
        self.rank_gradients + self.harmonic_dim + self.rank_costar == self.p0_dim
    }
}

/// Verify the discrete Hodge decomposition
/// `P₀Λ¹ = grad(P1) ⊕ harmonic ⊕ costar(CR₀)` by ranks and pairwise
/// L²-orthogonality of the three ranges.
pub fn hodge_decomposition_check(mesh: &Mesh2D) -> Result<HodgeReport> {
    let nt = mesh.num_triangles();
    let p0_dim = 2 * nt;
    // fields as per-cell constant vectors, weighted inner product Σ |T| u·v
    let weight: Vec<f64> = (0..nt).map(|t| mesh.area(t)).collect();
    let inner = |a: &Vec<[f64; 2]>, b: &Vec<[f64; 2]>| -> f64 {
        a.iter()
            .zip(b)
            .zip(&weight)
            .map(|((u, v), w)| w * (u[0] * v[0] + u[1] * v[1]))
            .sum()
    };

    // gradients of P1 hats
    let mut grads: Vec<Vec<[f64; 2]>> = Vec::new();
    let p1 = build_space(mesh, WhitneyKind::LagrangeP1);
    for v in 0..mesh.num_vertices() {
        let mut field = vec![[0.0, 0.0]; nt];
        for (t, cell) in p1.cells.iter().enumerate() {
            for (l, d) in cell.dofs.iter().enumerate() {
                if *d == Some(v) {
                    let p = cell.forms[l].component(&KIndex::empty(2)).unwrap();
                    field[t] = [p.partial(1).eval(&[0.0, 0.0]), p.partial(2).eval(&[0.0, 0.0])];
                }
            }
        }
        grads.push(field);
    }
    // costar fields of CR₀: the adjoint codifferential of η vol is the
    // rotated gradient (∂y η, −∂x η), constant per cell
    let cr = build_space(mesh, WhitneyKind::CrouzeixRaviart0);
    let mut costars: Vec<Vec<[f64; 2]>> = vec![vec![[0.0, 0.0]; nt]; cr.dofs];
    for (t, cell) in cr.cells.iter().enumerate() {
        for (l, d) in cell.dofs.iter().enumerate() {
            let Some(dof) = d else { continue };
            let p = cell.forms[l].component(&KIndex::empty(2)).unwrap();
            let gx = p.partial(1).eval(&[0.0, 0.0]);
            let gy = p.partial(2).eval(&[0.0, 0.0]);
            costars[*dof][t] = [gy, -gx];
        }
    }
    let harmonics = discrete_harmonic_forms(mesh)?;
    let harm_fields = harmonics.cell_constants(mesh);

    let rank_of = |fields: &[Vec<[f64; 2]>]| -> usize {
        if fields.is_empty() {
            return 0;
        }
        let mut m = DMatrix::zeros(2 * nt, fields.len());
        for (j, f) in fields.iter().enumerate() {
            for t in 0..nt {
                let w = weight[t].sqrt();
                m[(2 * t, j)] = w * f[t][0];
                m[(2 * t + 1, j)] = w * f[t][1];
            }
        }
        linalg::rank(&m, 1e-10)
    };
    let rank_gradients = rank_of(&grads);
    let rank_costar = rank_of(&costars);

    let mut max_cross: f64 = 0.0;
    let families = [&grads, &harm_fields, &costars];
    for fi in 0..3 {
        for fj in (fi + 1)..3 {
            for a in families[fi] {
                let na = inner(a, a).sqrt();
                if na == 0.0 {
                    continue;
                }
                for b in families[fj] {
                    let nb = inner(b, b).sqrt();
                    if nb == 0.0 {
                        continue;
                    }
                    max_cross = max_cross.max((inner(a, b) / (na * nb)).abs());
                }
            }
        }
    }
    Ok(HodgeReport {
        rank_gradients,
        harmonic_dim: harmonics.count(),
        rank_costar,
        p0_dim,
        max_cross_orthogonality: max_cross,
    })
}

/// Evaluate a P1 coefficient vector as per-cell affine polynomials.
pub fn p1_cell_polys(_mesh: &Mesh2D, space: &WhitneySpace, coeffs: &DVector<f64>) -> Vec<Poly> {
    assert_eq!(space.kind, WhitneyKind::LagrangeP1);
    space
        .cells
        .iter()
        .map(|cell| {
            let mut p = Poly::zero(2);
            for (l, d) in cell.dofs.iter().enumerate() {
                let c = coeffs[d.unwrap()];
                let q = cell.forms[l].component(&KIndex::empty(2)).unwrap();
                p = p.add(&q.scale(c));
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::l2_inner;
    use crate::local;
    use crate::mesh::{generate, Domain};

    #[test]
    fn dof_counts_on_the_coarse_square() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        assert_eq!(build_space(&mesh, WhitneyKind::EdgeWhitney1).dofs, 16);
        assert_eq!(build_space(&mesh, WhitneyKind::LagrangeP1).dofs, 9);
        assert_eq!(build_space(&mesh, WhitneyKind::CrouzeixRaviart0).dofs, 8);
        assert_eq!(build_space(&mesh, WhitneyKind::PiecewiseP0).dofs, 8);
    }

    #[test]
    fn whitney_edge_normalization_and_tangential_continuity() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let space = build_space(&mesh, WhitneyKind::EdgeWhitney1);
        for e in 0..mesh.num_edges() {
            let [a, b] = mesh.edge(e);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let tang = [pb[0] - pa[0], pb[1] - pa[1]];
            let (t0, t1) = mesh.edge_triangles(e);
            let mut moments = Vec::new();
            let mut midvals = Vec::new();
            for t in [Some(t0), t1].into_iter().flatten() {
                let cell = &space.cells[t];
                let l = cell.dofs.iter().position(|d| *d == Some(e)).unwrap();
                let (u, v) = cell.forms[l].to_vector2();
                // 2-point Gauss along the edge integrates the quadratic moment
                let mut m = 0.0;
                for s in [0.5 - 0.5 / 3.0f64.sqrt(), 0.5 + 0.5 / 3.0f64.sqrt()] {
                    let x = pa[0] + tang[0] * s;
                    let y = pa[1] + tang[1] * s;
                    m += 0.5 * (u.eval(&[x, y]) * tang[0] + v.eval(&[x, y]) * tang[1]);
                }
                moments.push(m);
                let mid = [pa[0] + 0.5 * tang[0], pa[1] + 0.5 * tang[1]];
                midvals
                    .push(u.eval(&mid) * tang[0] + v.eval(&mid) * tang[1]);
            }
            for m in &moments {
                assert!((m - 1.0).abs() < 1e-12, "edge moment {m}");
            }
            if midvals.len() == 2 {
                assert!((midvals[0] - midvals[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn incidence_composition_vanishes_exactly() {
        let mesh = generate(Domain::SquareWithHole, 3).unwrap();
        let d0 = differential_matrix(&mesh, WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1)
            .unwrap();
        let d1 = differential_matrix(&mesh, WhitneyKind::EdgeWhitney1, WhitneyKind::PiecewiseP0)
            .unwrap();
        assert!(d1.compose(&d0).is_empty());
    }

    #[test]
    fn gradient_rank_is_vertices_minus_one() {
        let mesh = generate(Domain::UnitSquare, 3).unwrap();
        let d0 = differential_matrix(&mesh, WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1)
            .unwrap();
        assert_eq!(
            linalg::rank(&d0.to_dense(), 1e-12),
            mesh.num_vertices() - 1
        );
    }

    #[test]
    fn p1_mass_matrix_entries() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let p1 = build_space(&mesh, WhitneyKind::LagrangeP1);
        let m = mass_matrix(&mesh, &p1);
        // diagonal entries sum |T|/6 over incident cells
        for v in 0..mesh.num_vertices() {
            let expect: f64 = mesh
                .vertex_patch(v)
                .iter()
                .map(|&t| mesh.area(t) / 6.0)
                .sum();
            assert!((m[(v, v)] - expect).abs() < 1e-13);
        }
        // SPD
        assert!(m.clone().cholesky().is_some());
    }

    #[test]
    fn p0_mass_is_diagonal_of_areas() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let p0 = build_space(&mesh, WhitneyKind::PiecewiseP0);
        let m = mass_matrix(&mesh, &p0);
        for t in 0..mesh.num_triangles() {
            assert!((m[(t, t)] - mesh.area(t)).abs() < 1e-14);
        }
        assert!((m.sum() - mesh.total_area()).abs() < 1e-12);
    }

    #[test]
    fn cr_jumps_have_zero_midpoint_mean() {
        let mesh = generate(Domain::UnitSquare, 3).unwrap();
        let cr = build_space(&mesh, WhitneyKind::CrouzeixRaviart0);
        for e in 0..mesh.num_edges() {
            let (t0, t1) = mesh.edge_triangles(e);
            let [a, b] = mesh.edge(e);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            // the basis function of some interior edge f, seen from both
            // sides of e, is single-valued at the midpoint of e
            for dof in 0..cr.dofs {
                let value_in = |t: usize| -> f64 {
                    let cell = &cr.cells[t];
                    cell.dofs
                        .iter()
                        .enumerate()
                        .filter(|(_, d)| **d == Some(dof))
                        .map(|(l, _)| {
                            cell.forms[l]
                                .component(&KIndex::empty(2))
                                .unwrap()
                                .eval(&mid)
                        })
                        .sum()
                };
                if let Some(t1) = t1 {
                    assert!(
                        (value_in(t0) - value_in(t1)).abs() < 1e-12,
                        "midpoint jump at edge {e}"
                    );
                } else if cr.edge_dof[e] == Some(dof) {
                    // h0 variant: boundary midpoint values vanish — boundary
                    // edges carry no dof at all
                    unreachable!("boundary edge must not carry a CR0 dof");
                }
            }
        }
    }

    #[test]
    fn harmonic_dimension_matches_betti_numbers() {
        for (domain, m, b1) in [
            (Domain::UnitSquare, 2usize, 0usize),
            (Domain::LShape, 4, 0),
            (Domain::SquareWithHole, 3, 1),
            (Domain::SquareWithHole, 6, 1),
        ] {
            let mesh = generate(domain, m).unwrap();
            let h = discrete_harmonic_forms(&mesh).unwrap();
            assert_eq!(h.count(), b1, "domain {domain} m={m}");
        }
    }

    #[test]
    fn harmonic_members_satisfy_their_defining_conditions() {
        let mesh = generate(Domain::SquareWithHole, 6).unwrap();
        let h = discrete_harmonic_forms(&mesh).unwrap();
        assert_eq!(h.count(), 1);
        let u = &h.vectors[0];
        let rots = rot_cell_constants(&mesh, u);
        assert!(rots.iter().all(|r| r.abs() < 1e-10));
        let space = build_space(&mesh, WhitneyKind::EdgeWhitney1);
        let mass = mass_triplets(&mesh, &space);
        let d0 = differential_matrix(&mesh, WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1)
            .unwrap();
        let mu = mass.matvec(u);
        for v in 0..mesh.num_vertices() {
            let mut dot = 0.0;
            for &(e, vv, s) in &d0.triplets {
                if vv == v {
                    dot += s as f64 * mu[e];
                }
            }
            assert!(dot.abs() < 1e-10, "gradient orthogonality at vertex {v}");
        }
        // unit mass norm
        let norm: f64 = u.iter().zip(&mu).map(|(a, b)| a * b).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn harmonic_members_are_piecewise_constant_fields() {
        // the edge-coefficient representation and the per-cell constant
        // representation coincide as fields: the cell-wise linear part of
        // every harmonic member vanishes
        let mesh = generate(Domain::SquareWithHole, 6).unwrap();
        let h = discrete_harmonic_forms(&mesh).unwrap();
        let space = build_space(&mesh, WhitneyKind::EdgeWhitney1);
        let fields = h.cell_constants(&mesh);
        for (u, field) in h.vectors.iter().zip(&fields) {
            for t in 0..mesh.num_triangles() {
                let cell = &space.cells[t];
                let c = mesh.triangle_corners(t);
                for corner in &c {
                    let mut val = [0.0, 0.0];
                    for (l, d) in cell.dofs.iter().enumerate() {
                        let (pu, pv) = cell.forms[l].to_vector2();
                        val[0] += u[d.unwrap()] * pu.eval(corner);
                        val[1] += u[d.unwrap()] * pv.eval(corner);
                    }
                    assert!(
                        (val[0] - field[t][0]).abs() < 1e-10
                            && (val[1] - field[t][1]).abs() < 1e-10,
                        "harmonic member varies inside cell {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn hodge_decomposition_on_coarse_meshes() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let report = hodge_decomposition_check(&mesh).unwrap();
        assert_eq!(report.rank_gradients, 8);
        assert_eq!(report.harmonic_dim, 0);
        assert_eq!(report.rank_costar, 8);
        assert!(report.rank_sum_matches());
        assert!(report.max_cross_orthogonality < 1e-10);

        let mesh = generate(Domain::SquareWithHole, 3).unwrap();
        let report = hodge_decomposition_check(&mesh).unwrap();
        assert_eq!(report.harmonic_dim, 1);
        assert!(report.rank_sum_matches());
        assert!(report.max_cross_orthogonality < 1e-10);
    }

    #[test]
    fn abc_duality_of_whitney_edge_functions() {
        // Σ_T ⟨rot u, η⟩_T − ⟨u, δη⟩_T = 0 for every Whitney edge function u
        // and every CR₀ star-2-form η.
        let mesh = generate(Domain::UnitSquare, 3).unwrap();
        let edge = build_space(&mesh, WhitneyKind::EdgeWhitney1);
        let cr = build_space(&mesh, WhitneyKind::CrouzeixRaviart0);
        for e in 0..mesh.num_edges() {
            for dof in 0..cr.dofs {
                let mut acc = 0.0;
                for t in 0..mesh.num_triangles() {
                    let cell_e = &edge.cells[t];
                    let cell_c = &cr.cells[t];
                    let le = cell_e.dofs.iter().position(|d| *d == Some(e));
                    let lc = cell_c.dofs.iter().position(|d| *d == Some(dof));
                    if let (Some(le), Some(lc)) = (le, lc) {
                        let simplex = cell_simplex(&mesh, t);
                        // star scalar → 2-form
                        let eta = cell_c.forms[lc].hodge_star();
                        acc +=
                            local::rot_side_pairing(&cell_e.forms[le], &eta, &simplex).unwrap();
                    }
                }
                assert!(acc.abs() < 1e-12, "edge {e} against CR dof {dof}: {acc}");
            }
        }
    }

    #[test]
    fn whitney_complex_poincare_proxy_is_stable() {
        // smallest nonzero generalized singular value of rot on the edge
        // space, across three levels
        let mut values = Vec::new();
        for m in [2usize, 4, 8] {
            let mesh = generate(Domain::UnitSquare, m).unwrap();
            let space = build_space(&mesh, WhitneyKind::EdgeWhitney1);
            let mw = mass_matrix(&mesh, &space);
            // rot stiffness: (rot u, rot v) with per-cell constants
            let mut r = DMatrix::zeros(space.dofs, space.dofs);
            for t in 0..mesh.num_triangles() {
                let es = mesh.triangle_edges(t);
                for a in 0..3 {
                    for b in 0..3 {
                        r[(es[a].0, es[b].0)] +=
                            (es[a].1 * es[b].1) as f64 / mesh.area(t);
                    }
                }
            }
            let (vals, _) = linalg::generalized_sym_eigen(&r, &mw).unwrap();
            let lam = vals.iter().find(|v| **v > 1e-10).unwrap();
            values.push(lam.sqrt());
        }
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            max / min < 1.5,
            "Poincaré proxy varies too much: {values:?}"
        );
    }

    #[test]
    fn whitney_mass_agrees_with_exact_inner_products() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let space = build_space(&mesh, WhitneyKind::EdgeWhitney1);
        let m = mass_matrix(&mesh, &space);
        // spot check one entry against direct integration
        let t = 0usize;
        let cell = &space.cells[t];
        let simplex = cell_simplex(&mesh, t);
        let v = l2_inner(&cell.forms[0], &cell.forms[1], &simplex).unwrap();
        let (i, j) = (cell.dofs[0].unwrap(), cell.dofs[1].unwrap());
        // the global entry accumulates contributions from shared cells; the
        // two edges of one cell share at most that cell and one more
        let mut expect = v;
        for t2 in 1..mesh.num_triangles() {
            let c2 = &space.cells[t2];
            let li = c2.dofs.iter().position(|d| *d == Some(i));
            let lj = c2.dofs.iter().position(|d| *d == Some(j));
            if let (Some(li), Some(lj)) = (li, lj) {
                let s2 = cell_simplex(&mesh, t2);
                expect += l2_inner(&c2.forms[li], &c2.forms[lj], &s2).unwrap();
            }
        }
        assert!((m[(i, j)] - expect).abs() < 1e-13);
    }
}
