//! The four subcommands: convergence studies, scheme-equivalence checks,
//! space diagnostics, and mesh file utilities.

use crate::config::{RunConfig, Timing};
use hodgefem::fespace::{self, VSpace};
use hodgefem::mesh::{self, resolution_for_level, Domain, Mesh2D};
use hodgefem::report::{fmt_sig12, Table};
use hodgefem::solver::{self, AnalyticField, RhsData};
use hodgefem::whitney::{self, HarmonicBasis};
use hodgefem::{Error, Result};
use std::time::Instant;

fn field_for(domain: Domain) -> Result<AnalyticField> {
    let name = match domain {
        Domain::UnitSquare => "square_eigen",
        Domain::LShape => "lshape_constant",
        Domain::SquareWithHole => "holed_angular",
        Domain::External => return Err(Error::Config("external domains have no study field".into())),
    };
    solver::manufactured_solutions()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::Config("missing manufactured field".into()))
}

struct LevelRun {
    mesh: Mesh2D,
    space: VSpace,
    harmonic: HarmonicBasis,
}

fn build_level(domain: Domain, level: usize) -> Result<LevelRun> {
    let m = resolution_for_level(domain, level)?;
    let mesh = mesh::generate(domain, m)?;
    let space = fespace::build_v_space(&mesh)?;
    let harmonic = whitney::discrete_harmonic_forms(&mesh)?;
    Ok(LevelRun {
        mesh,
        space,
        harmonic,
    })
}

fn seconds_cell(timing: Timing, start: Instant) -> String {
    match timing {
        Timing::None => "0.000".into(),
        Timing::Wall => format!("{:.3}", start.elapsed().as_secs_f64()),
    }
}

fn write_output(out: &Option<std::path::PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Convergence study. Domains with a closed-form solution report errors per
/// level; the others report errors against the finest level as reference.
pub fn cmd_convergence(config: &RunConfig) -> Result<bool> {
    let domain = config.domain.unwrap_or(Domain::UnitSquare);
    let (first, last) = config.levels;
    let field = field_for(domain)?;
    let reference_mode = field.exact.is_none();
    let needed = if reference_mode { 3 } else { 2 };
    if last + 1 - first < needed {
        return Err(Error::Config(format!(
            "convergence on {domain} needs at least {needed} levels, got {first}..{last}"
        )));
    }
    let mut rows: Vec<(usize, f64, usize, f64, f64, f64, String)> = Vec::new();
    let mut solutions = Vec::new();
    let mut meshes = Vec::new();
    for level in first..=last {
        let start = Instant::now();
        let run = build_level(domain, level)?;
        let system = solver::assemble_primal(
            &run.mesh,
            &run.space,
            &run.harmonic,
            RhsData::Analytic(&field, config.quad),
        )?;
        let sol = solver::solve_primal(&system)?;
        let cells = solver::solution_cell_forms(&run.mesh, &run.space, &sol.coefficients);
        if let Some(exact) = &field.exact {
            let (e0, erot, ediv) = solver::error_norms(&run.mesh, &cells, exact, config.quad)?;
            rows.push((
                level,
                run.mesh.mesh_size(),
                run.space.dim(),
                e0,
                erot,
                ediv,
                seconds_cell(config.timing, start),
            ));
        } else {
            rows.push((
                level,
                run.mesh.mesh_size(),
                run.space.dim(),
                0.0,
                0.0,
                0.0,
                seconds_cell(config.timing, start),
            ));
            solutions.push(cells);
            meshes.push(run.mesh);
        }
    }
    if reference_mode {
        let (ref_mesh, ref_cells) = (meshes.last().unwrap(), solutions.last().unwrap());
        for (i, row) in rows.iter_mut().enumerate() {
            if i + 1 == solutions.len() {
                continue; // the reference level itself reports zero error
            }
            let (e0, erot, ediv) = solver::error_vs_reference(
                &meshes[i],
                &solutions[i],
                ref_mesh,
                ref_cells,
                config.quad,
            )?;
            row.3 = e0;
            row.4 = erot;
            row.5 = ediv;
        }
        rows.pop(); // drop the reference row from the report
    }
    let mut table = Table::new(&[
        "level", "h", "dofs", "e0", "erot", "ediv", "rate0", "raterot", "ratediv", "seconds",
    ]);
    for (i, row) in rows.iter().enumerate() {
        let rate = |cur: f64, prev: f64| -> String {
            if i == 0 || cur <= 0.0 || prev <= 0.0 {
                String::new()
            } else {
                fmt_sig12((prev / cur).log2())
            }
        };
        let prev = if i > 0 { Some(&rows[i - 1]) } else { None };
        table.push_row(vec![
            row.0.to_string(),
            fmt_sig12(row.1),
            row.2.to_string(),
            fmt_sig12(row.3),
            fmt_sig12(row.4),
            fmt_sig12(row.5),
            prev.map(|p| rate(row.3, p.3)).unwrap_or_default(),
            prev.map(|p| rate(row.4, p.4)).unwrap_or_default(),
            prev.map(|p| rate(row.5, p.5)).unwrap_or_default(),
            row.6.clone(),
        ]);
    }
    write_output(&config.out, &table.render(config.format))?;
    Ok(true)
}

/// Equivalence of the primal scheme and the mixed scheme for projected
/// piecewise-constant loads. Returns false if any residual exceeds the
/// tolerance (default 1e−8).
pub fn cmd_equivalence(config: &RunConfig) -> Result<bool> {
    let tol = config.tol.unwrap_or(1e-8);
    let domains: Vec<Domain> = match config.domain {
        Some(d) => vec![d],
        None => vec![Domain::UnitSquare, Domain::LShape, Domain::SquareWithHole],
    };
    let (first, last) = config.levels;
    let mut table = Table::new(&[
        "domain", "level", "res_theta", "res_sigma", "res_rot", "res_p0",
    ]);
    let mut pass = true;
    for &domain in &domains {
        let field = field_for(domain)?;
        for level in first..=last {
            let run = build_level(domain, level)?;
            let f0 = solver::project_p0(&run.mesh, &field, config.quad)?;
            let report = solver::equivalence_check(&run.mesh, &run.space, &run.harmonic, &f0)?;
            pass &= report.max() <= tol;
            table.push_row(vec![
                domain.to_string(),
                level.to_string(),
                fmt_sig12(report.theta_residual),
                fmt_sig12(report.sigma_residual),
                fmt_sig12(report.rot_residual),
                fmt_sig12(report.mean_residual),
            ]);
        }
    }
    write_output(&config.out, &table.render(config.format))?;
    Ok(pass)
}

/// Space diagnostics: harmonic dimension against the Betti number, the
/// Hodge decomposition ranks and orthogonality, Poincaré estimates, and the
/// basis-count bookkeeping.
pub fn cmd_diagnose(config: &RunConfig) -> Result<bool> {
    let tol = config.tol.unwrap_or(1e-10);
    let domains: Vec<Domain> = match config.domain {
        Some(d) => vec![d],
        None => vec![Domain::UnitSquare, Domain::LShape, Domain::SquareWithHole],
    };
    let (first, last) = config.levels;
    let mut table = Table::new(&[
        "domain",
        "level",
        "h",
        "edges",
        "patch_sum",
        "dim_v",
        "harmonic_dim",
        "betti1",
        "hodge_rank_sum",
        "hodge_expected",
        "hodge_orthogonality",
        "poincare",
    ]);
    let mut pass = true;
    for &domain in &domains {
        for level in first..=last {
            let run = build_level(domain, level)?;
            let betti = run.mesh.betti1()?;
            let patch_sum: usize = (0..run.mesh.num_vertices())
                .map(|a| run.mesh.vertex_patch(a).len() - 1)
                .sum();
            let expected = run.mesh.num_edges() + patch_sum;
            pass &= run.space.dim() == expected;
            pass &= run.harmonic.count() == betti;
            let hodge = whitney::hodge_decomposition_check(&run.mesh)?;
            pass &= hodge.rank_sum_matches();
            pass &= hodge.max_cross_orthogonality <= tol;
            let zero = AnalyticField {
                name: "zero",
                domain,
                f: Box::new(|_| [0.0, 0.0]),
                exact: None,
            };
            let system = solver::assemble_primal(
                &run.mesh,
                &run.space,
                &run.harmonic,
                RhsData::Analytic(&zero, config.quad.max(2)),
            )?;
            let icr = solver::poincare_estimate(&system)?;
            table.push_row(vec![
                domain.to_string(),
                level.to_string(),
                fmt_sig12(run.mesh.mesh_size()),
                run.mesh.num_edges().to_string(),
                patch_sum.to_string(),
                run.space.dim().to_string(),
                run.harmonic.count().to_string(),
                betti.to_string(),
                (hodge.rank_gradients + hodge.harmonic_dim + hodge.rank_costar).to_string(),
                hodge.p0_dim.to_string(),
                fmt_sig12(hodge.max_cross_orthogonality),
                fmt_sig12(icr),
            ]);
        }
    }
    write_output(&config.out, &table.render(config.format))?;
    Ok(pass)
}

/// Generate and emit a mesh file.
pub fn cmd_mesh_generate(config: &RunConfig, level: usize, m: Option<usize>) -> Result<()> {
    let domain = config.domain.unwrap_or(Domain::UnitSquare);
    let m = match m {
        Some(m) => m,
        None => resolution_for_level(domain, level)?,
    };
    let mesh = mesh::generate(domain, m)?;
    write_output(&config.out, &mesh::write_text(&mesh))
}

/// Validate a mesh file: parse, rebuild connectivity, run the validator.
pub fn cmd_mesh_validate(path: &std::path::Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mesh = mesh::read_text(&text)?;
    mesh.validate()?;
    println!(
        "ok: {} vertices, {} edges, {} triangles, betti1 {}",
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_triangles(),
        mesh.betti1()?
    );
    Ok(())
}
