//! The nonconforming global space for `H(rot) ∩ H0(div)` built from locally
//! supported basis functions: a rot-type function per edge (Whitney edge
//! form plus cell-wise bubble corrections) and `patch − 1` div-type
//! functions per vertex (patch kernel combinations of local dual forms).

use crate::exterior::{l2_inner, PolyForm};
use crate::linalg;
use crate::local;
use crate::mesh::Mesh2D;
use crate::whitney::{self, barycentric_polys, cell_simplex, WhitneyKind};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Family tag of a basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VKind {
    /// Anchored at an edge; bijective with the Whitney edge functions.
    RotType,
    /// Anchored at a vertex; a patch kernel combination of dual forms.
    DivType,
}

/// Locally supported basis function: per-cell polynomial 1-forms on the
/// cells of its support (all other cells are zero).
#[derive(Debug, Clone)]
pub struct VBasisFunction {
    pub id: usize,
    pub kind: VKind,
    /// Edge id for rot-type, vertex id for div-type.
    pub anchor: usize,
    pub support: Vec<(usize, PolyForm)>,
}

/// The assembled global space; rot-type functions first (by edge id), then
/// div-type functions (by vertex id, then patch position).
#[derive(Debug, Clone)]
pub struct VSpace {
    pub functions: Vec<VBasisFunction>,
    pub num_rot_functions: usize,
}

impl VSpace {
    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    /// Per-cell list of (function id, local form) for assembly loops.
    pub fn cell_table(&self, mesh: &Mesh2D) -> Vec<Vec<(usize, PolyForm)>> {
        let mut table: Vec<Vec<(usize, PolyForm)>> = vec![Vec::new(); mesh.num_triangles()];
        for f in &self.functions {
            for (t, form) in &f.support {
                table[*t].push((f.id, form.clone()));
            }
        }
        table
    }
}

/// Expected dimension `#edges + Σ_a (|patch(a)| − 1)`.
pub fn expected_dim(mesh: &Mesh2D) -> usize {
    let patch_sum: usize = (0..mesh.num_vertices())
        .map(|a| mesh.vertex_patch(a).len() - 1)
        .sum();
    mesh.num_edges() + patch_sum
}

/// One rot-type function per edge: the Whitney edge form with the unique
/// cell-wise bubble correction restoring the δ-side dual continuity. The
/// support equals the Whitney function's support.
pub fn build_v_rot(mesh: &Mesh2D) -> Result<Vec<VBasisFunction>> {
    let edge_space = whitney::build_space(mesh, WhitneyKind::EdgeWhitney1);
    let mut out = Vec::with_capacity(mesh.num_edges());
    for e in 0..mesh.num_edges() {
        let (t0, t1) = mesh.edge_triangles(e);
        let mut support = Vec::new();
        for t in [Some(t0), t1].into_iter().flatten() {
            let cell = &edge_space.cells[t];
            let l = cell
                .dofs
                .iter()
                .position(|d| *d == Some(e))
                .expect("edge in its own cell");
            let w = cell.forms[l].clone();
            let simplex = cell_simplex(mesh, t);
            let correction = local::divside_correction(&w, &simplex)?;
            support.push((t, w.add(&correction)));
        }
        out.push(VBasisFunction {
            id: e,
            kind: VKind::RotType,
            anchor: e,
            support,
        });
    }
    Ok(out)
}

/// Per-cell dual forms, one per local vertex, with the Kronecker property
/// against the cell's barycentric coordinates.
fn cell_dual_forms(mesh: &Mesh2D) -> Result<Vec<[PolyForm; 3]>> {
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let simplex = cell_simplex(mesh, t);
        let lam = barycentric_polys(mesh, t);
        let psi: Vec<PolyForm> = lam.iter().cloned().map(PolyForm::scalar).collect();
        let duals = local::local_dual_div_basis(&simplex, &psi)?;
        out.push([duals[0].clone(), duals[1].clone(), duals[2].clone()]);
    }
    Ok(out)
}

/// Div-type functions: for each vertex `a` with an `N`-cell patch, the
/// `N−1`-dimensional kernel of the patch functional, spanned by
/// consecutive-cell differences in counterclockwise patch order and then
/// L²-orthonormalized.
pub fn build_v_div(mesh: &Mesh2D) -> Result<Vec<VBasisFunction>> {
    let duals = cell_dual_forms(mesh)?;
    let mut out = Vec::new();
    for a in 0..mesh.num_vertices() {
        let patch = mesh.vertex_patch(a);
        let n = patch.len();
        if n <= 1 {
            continue;
        }
        // the patch functional evaluates to 1 on each cell's dual form by
        // the Kronecker construction; a vanishing functional would make the
        // kernel full-dimensional and is flagged rather than accepted
        let mut functional = Vec::with_capacity(n);
        for &t in &patch {
            let local_vertex = mesh
                .triangle(t)
                .iter()
                .position(|&v| v == a)
                .expect("patch cell contains its vertex");
            let lam = barycentric_polys(mesh, t);
            let simplex = cell_simplex(mesh, t);
            let value = local::div_side_pairing(
                &duals[t][local_vertex],
                &PolyForm::scalar(lam[local_vertex].clone()),
                &simplex,
            )?;
            functional.push(value);
        }
        if functional.iter().all(|v| v.abs() < 1e-8) {
            return Err(Error::PatchAnomaly(format!(
                "vertex {a}: patch functional vanishes identically"
            )));
        }
        // kernel of Σ c_T · functional_T = 0 via consecutive differences
        type Supported = Vec<(usize, PolyForm)>;
        let mut raw: Vec<Supported> = Vec::with_capacity(n - 1);
        for i in 0..(n - 1) {
            let (ti, tj) = (patch[i], patch[i + 1]);
            let li = mesh.triangle(ti).iter().position(|&v| v == a).unwrap();
            let lj = mesh.triangle(tj).iter().position(|&v| v == a).unwrap();
            // scale so the functional cancels exactly between the two cells
            let fi = functional[i];
            let fj = functional[i + 1];
            raw.push(vec![
                (ti, duals[ti][li].scale(1.0 / fi)),
                (tj, duals[tj][lj].scale(-1.0 / fj)),
            ]);
        }
        let inner = |x: &Supported, y: &Supported| -> f64 {
            let mut acc = 0.0;
            for (t, fx) in x {
                for (s, fy) in y {
                    if t == s {
                        let simplex = cell_simplex(mesh, *t);
                        acc += l2_inner(fx, fy, &simplex).expect("equal degree");
                    }
                }
            }
            acc
        };
        let combine = |x: &Supported, c: f64, y: &Supported| -> Supported {
            let mut acc: BTreeMap<usize, PolyForm> = x.iter().cloned().collect();
            for (t, fy) in y {
                let entry = acc
                    .entry(*t)
                    .or_insert_with(|| PolyForm::zero(1, 2));
                *entry = entry.add(&fy.scale(c));
            }
            acc.into_iter().collect()
        };
        let scale = |x: &Supported, c: f64| -> Supported {
            x.iter().map(|(t, f)| (*t, f.scale(c))).collect()
        };
        let ortho = linalg::gram_schmidt(&raw, inner, combine, scale, 1e-12)?;
        for support in ortho {
            out.push(VBasisFunction {
                id: 0, // assigned by build_v_space
                kind: VKind::DivType,
                anchor: a,
                support,
            });
        }
    }
    Ok(out)
}

/// The full space: rot-type functions first, div-type after, ids assigned
/// in order.
pub fn build_v_space(mesh: &Mesh2D) -> Result<VSpace> {
    let mut functions = build_v_rot(mesh)?;
    let num_rot_functions = functions.len();
    let mut div = build_v_div(mesh)?;
    for (off, f) in div.iter_mut().enumerate() {
        f.id = num_rot_functions + off;
    }
    functions.extend(div);
    Ok(VSpace {
        functions,
        num_rot_functions,
    })
}

/// Residuals of the defining dual-continuity constraints.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    /// Largest δ-side residual against the conforming P1 functions.
    pub max_div_residual: f64,
    /// Largest d-side residual against the CR₀ star-2-forms.
    pub max_rot_residual: f64,
}

/// Check every basis function against all overlapping P1 hats (δ side) and
/// CR₀ star-2-forms (d side).
pub fn verify_membership(mesh: &Mesh2D, space: &VSpace) -> Result<MembershipReport> {
    let p1 = whitney::build_space(mesh, WhitneyKind::LagrangeP1);
    let cr = whitney::build_space(mesh, WhitneyKind::CrouzeixRaviart0);
    let mut max_div = 0.0f64;
    let mut max_rot = 0.0f64;
    for f in &space.functions {
        let mut div_acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut rot_acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (t, form) in &f.support {
            let simplex = cell_simplex(mesh, *t);
            let p1_cell = &p1.cells[*t];
            for (l, d) in p1_cell.dofs.iter().enumerate() {
                let v = local::div_side_pairing(form, &p1_cell.forms[l], &simplex)?;
                *div_acc.entry(d.unwrap()).or_insert(0.0) += v;
            }
            let cr_cell = &cr.cells[*t];
            for (l, d) in cr_cell.dofs.iter().enumerate() {
                let Some(dof) = d else { continue };
                let eta = cr_cell.forms[l].hodge_star();
                let v = local::rot_side_pairing(form, &eta, &simplex)?;
                *rot_acc.entry(*dof).or_insert(0.0) += v;
            }
        }
        for v in div_acc.values() {
            max_div = max_div.max(v.abs());
        }
        for v in rot_acc.values() {
            max_rot = max_rot.max(v.abs());
        }
    }
    Ok(MembershipReport {
        max_div_residual: max_div,
        max_rot_residual: max_rot,
    })
}

/// Result of comparing the stiffness kernel with the harmonic space.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub kernel_dim: usize,
    pub expected_dim: usize,
    /// Largest deviation of a kernel field from a cell-wise constant.
    pub max_nonconstant: f64,
    /// Largest residual of a kernel field after projection onto the
    /// harmonic span.
    pub max_projection_residual: f64,
}

/// Verify that the numerical kernel of the stiffness form equals the
/// discrete harmonic space: dimensions agree, kernel fields are piecewise
/// constant, and they lie in the harmonic span.
pub fn kernel_check(
    mesh: &Mesh2D,
    space: &VSpace,
    harmonic: &whitney::HarmonicBasis,
    stiffness: &DMatrix<f64>,
    mass: &DMatrix<f64>,
) -> Result<KernelReport> {
    let (vals, vecs) = linalg::generalized_sym_eigen(stiffness, mass)?;
    let lam_max = vals.last().copied().unwrap_or(1.0).max(1.0);
    let kernel: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < 1e-10 * lam_max)
        .map(|(i, _)| i)
        .collect();
    let table = space.cell_table(mesh);
    let harm_fields = harmonic.cell_constants(mesh);
    let weight: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.area(t)).collect();
    let field_inner = |a: &Vec<[f64; 2]>, b: &Vec<[f64; 2]>| -> f64 {
        a.iter()
            .zip(b)
            .zip(&weight)
            .map(|((u, v), w)| w * (u[0] * v[0] + u[1] * v[1]))
            .sum()
    };
    let mut max_nonconstant = 0.0f64;
    let mut max_proj = 0.0f64;
    for &ki in &kernel {
        let coeffs = &vecs[ki];
        // reconstruct per-cell polynomials and split off the centroid value
        let mut field = vec![[0.0, 0.0]; mesh.num_triangles()];
        let mut nonconst2 = 0.0f64;
        let mut norm2 = 0.0f64;
        for t in 0..mesh.num_triangles() {
            let mut form = PolyForm::zero(1, 2);
            for (id, f) in &table[t] {
                form = form.add(&f.scale(coeffs[*id]));
            }
            let c = mesh.triangle_corners(t);
            let centroid = [
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            ];
            let (u, v) = form.to_vector2();
            field[t] = [u.eval(&centroid), v.eval(&centroid)];
            let constant = PolyForm::from_vector2(
                crate::exterior::Poly::constant(2, field[t][0]),
                crate::exterior::Poly::constant(2, field[t][1]),
            );
            let diff = form.sub(&constant);
            let simplex = cell_simplex(mesh, t);
            nonconst2 += l2_inner(&diff, &diff, &simplex)?.max(0.0);
            norm2 += l2_inner(&form, &form, &simplex)?.max(0.0);
        }
        let scale = norm2.sqrt().max(1e-30);
        max_nonconstant = max_nonconstant.max(nonconst2.sqrt() / scale);
        // project onto the harmonic span (mass-orthonormal fields)
        let mut residual = field.clone();
        for h in &harm_fields {
            let c = field_inner(&field, h) / field_inner(h, h);
            for (r, hv) in residual.iter_mut().zip(h) {
                r[0] -= c * hv[0];
                r[1] -= c * hv[1];
            }
        }
        max_proj = max_proj.max(field_inner(&residual, &residual).sqrt() / scale);
    }
    Ok(KernelReport {
        kernel_dim: kernel.len(),
        expected_dim: harmonic.count(),
        max_nonconstant,
        max_projection_residual: max_proj,
    })
}

/// Debug dump of the basis: anchor and per-cell polynomial coefficients.
pub fn dump_basis(space: &VSpace) -> String {
    let mut out = String::new();
    for f in &space.functions {
        let kind = match f.kind {
            VKind::RotType => "rot",
            VKind::DivType => "div",
        };
        out.push_str(&format!(
            "function {} kind {kind} anchor {}\n",
            f.id, f.anchor
        ));
        for (t, form) in &f.support {
            out.push_str(&format!("  cell {t}\n"));
            for (idx, poly) in form.components() {
                out.push_str(&format!("    component {:?}:", idx.entries()));
                for (exps, c) in poly.terms() {
                    out.push_str(&format!(" {c}*x^{}y^{}", exps[0], exps[1]));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// L² Gram matrix of the whole basis (nonsingular iff linearly independent).
pub fn gram_matrix(mesh: &Mesh2D, space: &VSpace) -> Result<DMatrix<f64>> {
    let table = space.cell_table(mesh);
    let n = space.dim();
    let mut g = DMatrix::zeros(n, n);
    for t in 0..mesh.num_triangles() {
        let simplex = cell_simplex(mesh, t);
        let entries = &table[t];
        for (i, fi) in entries {
            for (j, fj) in entries {
                if j > i {
                    continue;
                }
                let v = l2_inner(fi, fj, &simplex)?;
                g[(*i, *j)] += v;
                if i != j {
                    g[(*j, *i)] += v;
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain, Mesh2D};

    #[test]
    fn rot_function_count_equals_edges() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let rot = build_v_rot(&mesh).unwrap();
        assert_eq!(rot.len(), mesh.num_edges());
        for f in &rot {
            let (_, t1) = mesh.edge_triangles(f.anchor);
            let expect = 1 + t1.is_some() as usize;
            assert_eq!(f.support.len(), expect);
        }
    }

    #[test]
    fn div_function_counts_match_patch_sizes() {
        let mesh = generate(Domain::UnitSquare, 4).unwrap();
        let div = build_v_div(&mesh).unwrap();
        let mut per_vertex: BTreeMap<usize, usize> = BTreeMap::new();
        for f in &div {
            *per_vertex.entry(f.anchor).or_insert(0) += 1;
        }
        let mut six_cell_seen = false;
        for a in 0..mesh.num_vertices() {
            let n = mesh.vertex_patch(a).len();
            let got = per_vertex.get(&a).copied().unwrap_or(0);
            assert_eq!(got, n - 1, "vertex {a} with patch {n}");
            if !mesh.is_boundary_vertex(a) && n == 6 {
                six_cell_seen = true;
                assert_eq!(got, 5);
            }
        }
        assert!(six_cell_seen, "expected interior vertices with 6-cell patches");
        // supports stay inside the vertex patch; the leading function of
        // each vertex is a two-successive-cell difference, later ones mix
        // in earlier cells through the orthonormalization
        let mut first_of_vertex: BTreeMap<usize, bool> = BTreeMap::new();
        for f in &div {
            let patch = mesh.vertex_patch(f.anchor);
            for (t, _) in &f.support {
                assert!(patch.contains(t), "support leaves the patch");
            }
            if !std::mem::replace(first_of_vertex.entry(f.anchor).or_insert(true), false) {
                continue;
            }
            assert_eq!(f.support.len(), 2, "leading difference spans two cells");
        }
    }

    #[test]
    fn dimension_formula_and_linear_independence() {
        for (domain, m) in [
            (Domain::UnitSquare, 2usize),
            (Domain::LShape, 2),
            (Domain::SquareWithHole, 3),
        ] {
            let mesh = generate(domain, m).unwrap();
            let space = build_v_space(&mesh).unwrap();
            assert_eq!(space.dim(), expected_dim(&mesh), "domain {domain}");
            let g = gram_matrix(&mesh, &space).unwrap();
            assert!(
                g.cholesky().is_some(),
                "Gram matrix singular on {domain}"
            );
        }
    }

    #[test]
    fn membership_residuals_are_tiny() {
        let mesh = generate(Domain::UnitSquare, 4).unwrap();
        let space = build_v_space(&mesh).unwrap();
        let report = verify_membership(&mesh, &space).unwrap();
        assert!(report.max_div_residual < 1e-10, "{report:?}");
        assert!(report.max_rot_residual < 1e-10, "{report:?}");
    }

    #[test]
    fn negative_control_uncorrected_whitney_fails_div_side() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let edge_space = whitney::build_space(&mesh, WhitneyKind::EdgeWhitney1);
        // an interior edge, raw Whitney function without bubble corrections
        let e = (0..mesh.num_edges())
            .find(|&e| !mesh.is_boundary_edge(e))
            .unwrap();
        let (t0, t1) = mesh.edge_triangles(e);
        let mut support = Vec::new();
        for t in [t0, t1.unwrap()] {
            let cell = &edge_space.cells[t];
            let l = cell.dofs.iter().position(|d| *d == Some(e)).unwrap();
            support.push((t, cell.forms[l].clone()));
        }
        let raw = VSpace {
            functions: vec![VBasisFunction {
                id: 0,
                kind: VKind::RotType,
                anchor: e,
                support,
            }],
            num_rot_functions: 1,
        };
        let report = verify_membership(&mesh, &raw).unwrap();
        assert!(
            report.max_div_residual > 1e-3,
            "expected a clear div-side violation, got {report:?}"
        );
    }

    #[test]
    fn negative_control_one_sided_restriction_fails_rot_side() {
        // a Whitney edge function restricted to one side of an interior edge
        // has a tangential jump, which the CR₀ tests detect
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let edge_space = whitney::build_space(&mesh, WhitneyKind::EdgeWhitney1);
        let e = (0..mesh.num_edges())
            .find(|&e| !mesh.is_boundary_edge(e))
            .unwrap();
        let (t0, _) = mesh.edge_triangles(e);
        let cell = &edge_space.cells[t0];
        let l = cell.dofs.iter().position(|d| *d == Some(e)).unwrap();
        let one_sided = VSpace {
            functions: vec![VBasisFunction {
                id: 0,
                kind: VKind::RotType,
                anchor: e,
                support: vec![(t0, cell.forms[l].clone())],
            }],
            num_rot_functions: 1,
        };
        let report = verify_membership(&mesh, &one_sided).unwrap();
        assert!(
            report.max_rot_residual > 1e-3,
            "expected a clear rot-side violation, got {report:?}"
        );
    }

    #[test]
    fn one_cell_patches_carry_no_div_functions() {
        // a single triangle: every vertex has a one-cell patch, N−1 = 0
        let mesh = Mesh2D::from_cells(
            Domain::External,
            0,
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let div = build_v_div(&mesh).unwrap();
        assert!(div.is_empty());
        let space = build_v_space(&mesh).unwrap();
        assert_eq!(space.dim(), 3);
        assert_eq!(space.dim(), expected_dim(&mesh));
    }

    #[test]
    fn basis_dump_lists_every_function() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let space = build_v_space(&mesh).unwrap();
        let dump = dump_basis(&space);
        assert_eq!(
            dump.matches("function ").count(),
            space.dim(),
            "dump must list every basis function"
        );
        assert!(dump.contains("kind rot"));
        assert!(dump.contains("kind div"));
    }

    #[test]
    fn rot_and_div_families_are_jointly_independent() {
        let mesh = generate(Domain::UnitSquare, 2).unwrap();
        let space = build_v_space(&mesh).unwrap();
        let g = gram_matrix(&mesh, &space).unwrap();
        let svd = g.svd(false, false);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(smin > 1e-12, "V_rot ∩ V_div must be trivial");
    }
}
