//! Assembly and solution of the primal nonconforming scheme with harmonic
//! multiplier, the classical mixed scheme used as a cross-validation oracle,
//! the scheme-equivalence checks, broken error norms, and the Poincaré
//! (index-of-closed-range) diagnostics.

mod fields;

pub use fields::{manufactured_solutions, AnalyticField, ExactSolution};

use crate::exterior::{l2_inner, KIndex, Poly, PolyForm};
use crate::fespace::VSpace;
use crate::linalg::{self, SkylineCholesky, SymTriplets};
use crate::mesh::Mesh2D;
use crate::quadrature::triangle_rule;
use crate::whitney::{self, HarmonicBasis, WhitneyKind};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative residual demanded of every direct solve.
pub const SOLVER_TOL: f64 = 1e-10;

/// Assembled primal system: energy and mass forms over the nonconforming
/// space, the harmonic coupling block, and both right-hand sides.
pub struct AssembledSystem {
    pub dofs: usize,
    /// `A_ij = Σ_T ⟨rot μᵢ, rot μⱼ⟩_T + ⟨div μᵢ, div μⱼ⟩_T`.
    pub stiffness: SymTriplets,
    pub mass: SymTriplets,
    /// `H_iℓ = ⟨μᵢ, ς_ℓ⟩` against the harmonic basis.
    pub harmonic_coupling: DMatrix<f64>,
    /// L² Gram of the harmonic basis.
    pub harmonic_gram: DMatrix<f64>,
    /// Coefficients of `P_ℌ f` in the harmonic basis.
    pub f_harmonic: DVector<f64>,
    /// `⟨f, μᵢ⟩`.
    pub rhs_raw: DVector<f64>,
    /// `⟨f − P_ℌ f, μᵢ⟩`.
    pub rhs: DVector<f64>,
    /// Sort keys of the dofs for the profile solver.
    anchors: Vec<[f64; 2]>,
}

/// Primal solution: coefficients over the V-space basis plus the harmonic
/// multiplier.
pub struct Solution {
    pub coefficients: DVector<f64>,
    pub multiplier: DVector<f64>,
    pub residual: f64,
}

/// Mixed-scheme solution `(ϑ̃, σ̃, ω̃)` over harmonic × P1 × Whitney-edge.
pub struct MixedSolution {
    pub theta: DVector<f64>,
    pub sigma: DVector<f64>,
    pub omega: DVector<f64>,
    pub residual: f64,
}

/// Right-hand-side data: an analytic field integrated by quadrature of the
/// stated degree, or a piecewise-constant field integrated exactly.
pub enum RhsData<'a> {
    Analytic(&'a AnalyticField, usize),
    PiecewiseConstant(&'a [[f64; 2]]),
}

fn rot_poly(form: &PolyForm) -> Poly {
    form.ext_deriv()
        .component(&KIndex::new(vec![1, 2], 2).unwrap())
        .cloned()
        .unwrap_or_else(|| Poly::zero(2))
}

fn div_poly(form: &PolyForm) -> Poly {
    form.codifferential()
        .component(&KIndex::empty(2))
        .cloned()
        .unwrap_or_else(|| Poly::zero(2))
}

/// Integrate `f · μ` over a cell by quadrature.
fn rhs_cell_integral(
    mesh: &Mesh2D,
    t: usize,
    form: &PolyForm,
    rhs: &RhsData,
) -> Result<f64> {
    let corners = mesh.triangle_corners(t);
    let (u, v) = form.to_vector2();
    match rhs {
        RhsData::Analytic(field, degree) => {
            let rule = triangle_rule(*degree)?;
            Ok(rule.integrate(&corners, |x, y| {
                let fv = (field.f)([x, y]);
                fv[0] * u.eval(&[x, y]) + fv[1] * v.eval(&[x, y])
            }))
        }
        RhsData::PiecewiseConstant(values) => {
            let simplex = whitney::cell_simplex(mesh, t);
            let f = values[t];
            Ok(f[0] * simplex.integrate(&u) + f[1] * simplex.integrate(&v))
        }
    }
}

/// Assemble the primal system. The stiffness and mass parts are integrated
/// exactly; only the right-hand side uses quadrature.
pub fn assemble_primal(
    mesh: &Mesh2D,
    space: &VSpace,
    harmonic: &HarmonicBasis,
    rhs_data: RhsData,
) -> Result<AssembledSystem> {
    if let RhsData::Analytic(_, degree) = &rhs_data {
        if *degree < 2 {
            return Err(Error::Config(format!(
                "quadrature degree {degree} < 2 for the right-hand side"
            )));
        }
    }
    let n = space.dim();
    let table = space.cell_table(mesh);
    let harm_fields = harmonic.cell_constants(mesh);
    let b1 = harmonic.count();
    let mut stiffness = SymTriplets::new(n);
    let mut mass = SymTriplets::new(n);
    let mut coupling = DMatrix::zeros(n, b1);
    let mut rhs_raw = DVector::zeros(n);
    for t in 0..mesh.num_triangles() {
        let simplex = whitney::cell_simplex(mesh, t);
        let entries = &table[t];
        let rots: Vec<Poly> = entries.iter().map(|(_, f)| rot_poly(f)).collect();
        let divs: Vec<Poly> = entries.iter().map(|(_, f)| div_poly(f)).collect();
        for (a, (i, fi)) in entries.iter().enumerate() {
            for (b, (j, fj)) in entries.iter().enumerate() {
                if j > i {
                    continue;
                }
                let energy = simplex.integrate(&rots[a].mul(&rots[b]))
                    + simplex.integrate(&divs[a].mul(&divs[b]));
                stiffness.push(*i, *j, energy);
                mass.push(*i, *j, l2_inner(fi, fj, &simplex)?);
            }
            rhs_raw[*i] += rhs_cell_integral(mesh, t, fi, &rhs_data)?;
            let (u, v) = fi.to_vector2();
            for (l, h) in harm_fields.iter().enumerate() {
                coupling[(*i, l)] +=
                    h[t][0] * simplex.integrate(&u) + h[t][1] * simplex.integrate(&v);
            }
        }
    }
    // harmonic Gram and the harmonic part of f
    let mut harmonic_gram = DMatrix::zeros(b1, b1);
    let mut f_pair = DVector::zeros(b1);
    for l in 0..b1 {
        for m in 0..=l {
            let mut acc = 0.0;
            for t in 0..mesh.num_triangles() {
                acc += mesh.area(t)
                    * (harm_fields[l][t][0] * harm_fields[m][t][0]
                        + harm_fields[l][t][1] * harm_fields[m][t][1]);
            }
            harmonic_gram[(l, m)] = acc;
            harmonic_gram[(m, l)] = acc;
        }
        for t in 0..mesh.num_triangles() {
            let corners = mesh.triangle_corners(t);
            let h = harm_fields[l][t];
            f_pair[l] += match &rhs_data {
                RhsData::Analytic(field, degree) => {
                    let rule = triangle_rule(*degree)?;
                    rule.integrate(&corners, |x, y| {
                        let fv = (field.f)([x, y]);
                        fv[0] * h[0] + fv[1] * h[1]
                    })
                }
                RhsData::PiecewiseConstant(values) => {
                    mesh.area(t) * (values[t][0] * h[0] + values[t][1] * h[1])
                }
            };
        }
    }
    let f_harmonic = if b1 > 0 {
        harmonic_gram
            .clone()
            .lu()
            .solve(&f_pair)
            .ok_or_else(|| Error::SingularSystem("harmonic Gram matrix".into()))?
    } else {
        DVector::zeros(0)
    };
    let rhs = &rhs_raw - &coupling * &f_harmonic;
    let anchors = dof_anchors(mesh, space);
    Ok(AssembledSystem {
        dofs: n,
        stiffness,
        mass,
        harmonic_coupling: coupling,
        harmonic_gram,
        f_harmonic,
        rhs_raw,
        rhs,
        anchors,
    })
}

fn dof_anchors(mesh: &Mesh2D, space: &VSpace) -> Vec<[f64; 2]> {
    space
        .functions
        .iter()
        .map(|f| match f.kind {
            crate::fespace::VKind::RotType => {
                let [a, b] = mesh.edge(f.anchor);
                let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
                [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
            }
            crate::fespace::VKind::DivType => mesh.vertex(f.anchor),
        })
        .collect()
}

/// Solve the primal saddle system. With trivial topology the stiffness is
/// positive definite and a profile Cholesky factorization is used; with
/// harmonic forms present, the bordered symmetric-indefinite system is
/// solved densely (the meshes exercised there are moderate).
pub fn solve_primal(system: &AssembledSystem) -> Result<Solution> {
    let n = system.dofs;
    let b1 = system.f_harmonic.len();
    let (coefficients, multiplier) = if b1 == 0 {
        // spatial dof ordering keeps the profile narrow
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&i, &j| {
            let (a, b) = (system.anchors[i], system.anchors[j]);
            (a[1], a[0], i).partial_cmp(&(b[1], b[0], j)).unwrap()
        });
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut permuted = SymTriplets::new(n);
        for &(i, j, v) in system.stiffness.entries() {
            permuted.push(inv[i], inv[j], v);
        }
        let chol = SkylineCholesky::factor(&permuted)?;
        let rhs_p: Vec<f64> = perm.iter().map(|&old| system.rhs[old]).collect();
        let x_p = chol.solve(&rhs_p);
        let mut x = DVector::zeros(n);
        for (new, &old) in perm.iter().enumerate() {
            x[old] = x_p[new];
        }
        (x, DVector::zeros(0))
    } else {
        let mut k = DMatrix::zeros(n + b1, n + b1);
        k.view_mut((0, 0), (n, n))
            .copy_from(&system.stiffness.to_dense());
        k.view_mut((0, n), (n, b1))
            .copy_from(&system.harmonic_coupling);
        k.view_mut((n, 0), (b1, n))
            .copy_from(&system.harmonic_coupling.transpose());
        let mut rhs = DVector::zeros(n + b1);
        rhs.rows_mut(0, n).copy_from(&system.rhs_raw);
        let sol = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("bordered saddle system".into()))?;
        (
            sol.rows(0, n).into_owned(),
            sol.rows(n, b1).into_owned(),
        )
    };
    // residual of the optimality system and of the harmonic constraint
    let ax = system.stiffness.matvec(coefficients.as_slice());
    let mut r = DVector::from_vec(ax);
    r += &system.harmonic_coupling * &multiplier;
    let effective_rhs = if b1 == 0 { &system.rhs } else { &system.rhs_raw };
    r -= effective_rhs;
    let scale = effective_rhs.norm().max(1e-300);
    let mut residual = r.norm() / scale;
    if b1 > 0 {
        let constraint = system.harmonic_coupling.transpose() * &coefficients;
        let mx = system.mass.matvec(coefficients.as_slice());
        let omega_norm = coefficients
            .iter()
            .zip(&mx)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt();
        residual = residual.max(constraint.norm() / omega_norm.max(1e-300));
    }
    if residual > SOLVER_TOL {
        let diag = system.stiffness.max_diag();
        return Err(Error::SingularSystem(format!(
            "primal solve residual {residual:.3e} (stiffness diagonal scale {diag:.3e})"
        )));
    }
    Ok(Solution {
        coefficients,
        multiplier,
        residual,
    })
}

/// Assemble and solve the classical mixed scheme. Returns the three fields
/// and the solve residual.
pub fn assemble_and_solve_mixed(
    mesh: &Mesh2D,
    harmonic: &HarmonicBasis,
    rhs_data: RhsData,
) -> Result<MixedSolution> {
    let edge = whitney::build_space(mesh, WhitneyKind::EdgeWhitney1);
    let p1 = whitney::build_space(mesh, WhitneyKind::LagrangeP1);
    let ne = edge.dofs;
    let nv = p1.dofs;
    let b1 = harmonic.count();
    let mw = whitney::mass_matrix(mesh, &edge);
    let mp = whitney::mass_matrix(mesh, &p1);
    let d0 = whitney::differential_matrix(mesh, WhitneyKind::LagrangeP1, WhitneyKind::EdgeWhitney1)?
        .to_dense();
    // rot stiffness on the edge space: per-cell constants
    let mut r = DMatrix::zeros(ne, ne);
    for t in 0..mesh.num_triangles() {
        let es = mesh.triangle_edges(t);
        for a in 0..3 {
            for b in 0..3 {
                r[(es[a].0, es[b].0)] += (es[a].1 * es[b].1) as f64 / mesh.area(t);
            }
        }
    }
    let mut h = DMatrix::zeros(ne, b1);
    for (l, v) in harmonic.vectors.iter().enumerate() {
        let col = DVector::from_vec(v.clone());
        h.set_column(l, &col);
    }
    let mwh = &mw * &h;
    let mwd0 = &mw * &d0;

    let total = ne + nv + b1;
    let mut k = DMatrix::zeros(total, total);
    k.view_mut((0, 0), (ne, ne)).copy_from(&r);
    k.view_mut((0, ne), (ne, nv)).copy_from(&mwd0);
    k.view_mut((ne, 0), (nv, ne)).copy_from(&mwd0.transpose());
    k.view_mut((ne, ne), (nv, nv)).copy_from(&(-&mp));
    if b1 > 0 {
        k.view_mut((0, ne + nv), (ne, b1)).copy_from(&mwh);
        k.view_mut((ne + nv, 0), (b1, ne))
            .copy_from(&mwh.transpose());
    }
    let mut rhs = DVector::zeros(total);
    for e in 0..ne {
        // assemble ⟨f, W_e⟩ over the at most two support cells
        let (t0, t1) = mesh.edge_triangles(e);
        for t in [Some(t0), t1].into_iter().flatten() {
            let cell = &edge.cells[t];
            let l = cell.dofs.iter().position(|d| *d == Some(e)).unwrap();
            rhs[e] += rhs_cell_integral(mesh, t, &cell.forms[l], &rhs_data)?;
        }
    }
    let sol = linalg::dense_solve(&k, &rhs, SOLVER_TOL)?;
    let omega = sol.rows(0, ne).into_owned();
    let sigma = sol.rows(ne, nv).into_owned();
    let theta = sol.rows(ne + nv, b1).into_owned();
    let residual = (&k * &sol - &rhs).norm() / rhs.norm().max(1e-300);
    Ok(MixedSolution {
        theta,
        sigma,
        omega,
        residual,
    })
}

/// Per-cell polynomial forms of a V-space coefficient vector.
pub fn solution_cell_forms(
    mesh: &Mesh2D,
    space: &VSpace,
    coefficients: &DVector<f64>,
) -> Vec<PolyForm> {
    let table = space.cell_table(mesh);
    (0..mesh.num_triangles())
        .map(|t| {
            let mut form = PolyForm::zero(1, 2);
            for (id, f) in &table[t] {
                form = form.add(&f.scale(coefficients[*id]));
            }
            form
        })
        .collect()
}

/// Broken error norms `(e₀, e_rot, e_div)` of a primal solution against an
/// exact solution, by per-cell quadrature of the stated degree.
pub fn error_norms(
    mesh: &Mesh2D,
    cell_forms: &[PolyForm],
    exact: &ExactSolution,
    quad_degree: usize,
) -> Result<(f64, f64, f64)> {
    let rule = triangle_rule(quad_degree)?;
    let mut e0 = 0.0;
    let mut erot = 0.0;
    let mut ediv = 0.0;
    for t in 0..mesh.num_triangles() {
        let corners = mesh.triangle_corners(t);
        let (u, v) = cell_forms[t].to_vector2();
        let rot_h = rot_poly(&cell_forms[t]);
        let div_h = div_poly(&cell_forms[t]);
        e0 += rule.integrate(&corners, |x, y| {
            let w = (exact.omega)([x, y]);
            let du = w[0] - u.eval(&[x, y]);
            let dv = w[1] - v.eval(&[x, y]);
            du * du + dv * dv
        });
        erot += rule.integrate(&corners, |x, y| {
            let d = (exact.rot)([x, y]) - rot_h.eval(&[x, y]);
            d * d
        });
        ediv += rule.integrate(&corners, |x, y| {
            let d = (exact.div)([x, y]) - div_h.eval(&[x, y]);
            d * d
        });
    }
    Ok((e0.max(0.0).sqrt(), erot.max(0.0).sqrt(), ediv.max(0.0).sqrt()))
}

/// Broken error norms of a coarse solution against a reference solution on
/// a nested finer mesh (integration over the fine cells, the coarse
/// polynomial looked up through the structured-grid ancestry).
pub fn error_vs_reference(
    coarse_mesh: &Mesh2D,
    coarse_forms: &[PolyForm],
    fine_mesh: &Mesh2D,
    fine_forms: &[PolyForm],
    quad_degree: usize,
) -> Result<(f64, f64, f64)> {
    let rule = triangle_rule(quad_degree)?;
    let mut e0 = 0.0;
    let mut erot = 0.0;
    let mut ediv = 0.0;
    for tf in 0..fine_mesh.num_triangles() {
        let corners = fine_mesh.triangle_corners(tf);
        let centroid = [
            (corners[0][0] + corners[1][0] + corners[2][0]) / 3.0,
            (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0,
        ];
        let tc = coarse_mesh
            .locate_cell(centroid)
            .ok_or_else(|| Error::InvalidMesh("reference lookup left the coarse mesh".into()))?;
        let (fu, fv) = fine_forms[tf].to_vector2();
        let (cu, cv) = coarse_forms[tc].to_vector2();
        let frot = rot_poly(&fine_forms[tf]);
        let crot = rot_poly(&coarse_forms[tc]);
        let fdiv = div_poly(&fine_forms[tf]);
        let cdiv = div_poly(&coarse_forms[tc]);
        e0 += rule.integrate(&corners, |x, y| {
            let du = fu.eval(&[x, y]) - cu.eval(&[x, y]);
            let dv = fv.eval(&[x, y]) - cv.eval(&[x, y]);
            du * du + dv * dv
        });
        erot += rule.integrate(&corners, |x, y| {
            let d = frot.eval(&[x, y]) - crot.eval(&[x, y]);
            d * d
        });
        ediv += rule.integrate(&corners, |x, y| {
            let d = fdiv.eval(&[x, y]) - cdiv.eval(&[x, y]);
            d * d
        });
    }
    Ok((e0.max(0.0).sqrt(), erot.max(0.0).sqrt(), ediv.max(0.0).sqrt()))
}

/// Residuals of the four scheme-equivalence identities for a
/// piecewise-constant load: multiplier equality, `δω̄ = σ̃`, `rot ω̄ = rot ω̃`,
/// and equality of the cell means.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub theta_residual: f64,
    pub sigma_residual: f64,
    pub rot_residual: f64,
    pub mean_residual: f64,
}

impl EquivalenceReport {
    pub fn max(&self) -> f64 {
        self.theta_residual
            .max(self.sigma_residual)
            .max(self.rot_residual)
            .max(self.mean_residual)
    }
}

/// Project an analytic field to its per-cell means.
pub fn project_p0(mesh: &Mesh2D, field: &AnalyticField, quad_degree: usize) -> Result<Vec<[f64; 2]>> {
    let rule = triangle_rule(quad_degree)?;
    Ok((0..mesh.num_triangles())
        .map(|t| {
            let corners = mesh.triangle_corners(t);
            let ix = rule.integrate(&corners, |x, y| (field.f)([x, y])[0]);
            let iy = rule.integrate(&corners, |x, y| (field.f)([x, y])[1]);
            [ix / mesh.area(t), iy / mesh.area(t)]
        })
        .collect())
}

/// Solve the primal and the mixed scheme for the same piecewise-constant
/// load and compare the four identities.
pub fn equivalence_check(
    mesh: &Mesh2D,
    space: &VSpace,
    harmonic: &HarmonicBasis,
    f0: &[[f64; 2]],
) -> Result<EquivalenceReport> {
    let system = assemble_primal(mesh, space, harmonic, RhsData::PiecewiseConstant(f0))?;
    let primal = solve_primal(&system)?;
    let mixed = assemble_and_solve_mixed(mesh, harmonic, RhsData::PiecewiseConstant(f0))?;

    // multiplier difference in the harmonic L² metric
    let theta_residual = if harmonic.count() > 0 {
        let diff = &primal.multiplier - &mixed.theta;
        (diff.transpose() * &system.harmonic_gram * &diff)[(0, 0)]
            .max(0.0)
            .sqrt()
    } else {
        0.0
    };

    let primal_cells = solution_cell_forms(mesh, space, &primal.coefficients);
    let p1 = whitney::build_space(mesh, WhitneyKind::LagrangeP1);
    let sigma_cells = whitney::p1_cell_polys(mesh, &p1, &mixed.sigma);
    let rot_mixed = whitney::rot_cell_constants(mesh, mixed.omega.as_slice());
    let edge = whitney::build_space(mesh, WhitneyKind::EdgeWhitney1);

    let mut sigma2 = 0.0;
    let mut rot2 = 0.0;
    let mut mean2 = 0.0;
    for t in 0..mesh.num_triangles() {
        let simplex = whitney::cell_simplex(mesh, t);
        // δ (adjoint normalization) of the primal solution vs σ̃
        let delta_primal = primal_cells[t]
            .codifferential_adjoint()
            .component(&KIndex::empty(2))
            .cloned()
            .unwrap_or_else(|| Poly::zero(2));
        let d = delta_primal.sub(&sigma_cells[t]);
        sigma2 += simplex.integrate(&d.mul(&d));
        // rot comparison: both piecewise constant
        let rp = rot_poly(&primal_cells[t]);
        let d = rp.sub(&Poly::constant(2, rot_mixed[t]));
        rot2 += simplex.integrate(&d.mul(&d));
        // cell means
        let (pu, pv) = primal_cells[t].to_vector2();
        let mut wu = Poly::zero(2);
        let mut wv = Poly::zero(2);
        let cell = &edge.cells[t];
        for (l, dref) in cell.dofs.iter().enumerate() {
            let c = mixed.omega[dref.unwrap()];
            let (a, b) = cell.forms[l].to_vector2();
            wu = wu.add(&a.scale(c));
            wv = wv.add(&b.scale(c));
        }
        let area = mesh.area(t);
        let du = (simplex.integrate(&pu) - simplex.integrate(&wu)) / area;
        let dv = (simplex.integrate(&pv) - simplex.integrate(&wv)) / area;
        mean2 += area * (du * du + dv * dv);
    }
    Ok(EquivalenceReport {
        theta_residual,
        sigma_residual: sigma2.max(0.0).sqrt(),
        rot_residual: rot2.max(0.0).sqrt(),
        mean_residual: mean2.max(0.0).sqrt(),
    })
}

/// Index-of-closed-range estimate `1/√λ_min` with `λ_min` the smallest
/// generalized eigenvalue of stiffness vs mass on the orthogonal complement
/// of the stiffness kernel (dense eigensolve).
pub fn poincare_estimate(system: &AssembledSystem) -> Result<f64> {
    let a = system.stiffness.to_dense();
    let m = system.mass.to_dense();
    poincare_from_dense(&a, &m)
}

/// Same estimate from explicit dense matrices (used for single-cell spaces).
pub fn poincare_from_dense(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let (vals, _) = linalg::generalized_sym_eigen(a, m)?;
    let lam_max = vals.last().copied().unwrap_or(1.0).max(1e-300);
    let lam_min = vals
        .iter()
        .find(|v| **v > 1e-10 * lam_max)
        .copied()
        .ok_or_else(|| Error::SingularSystem("stiffness has no positive spectrum".into()))?;
    Ok(1.0 / lam_min.sqrt())
}
