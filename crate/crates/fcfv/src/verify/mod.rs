//! Verification harness: exact error norms, convergence studies, the
//! stabilisation sweep and the legacy nodal-basis demonstration.
//!
//! Error norms integrate the gap between the discrete fields (linear u,
//! constant flux/gradient, constant pressure) and the manufactured exact
//! fields with a quadrature rule of selectable degree (degree 4 by
//! default, enough that the measured error is dominated by the scheme
//! and not the integration).

pub mod cases;

use crate::basis::{eval_linear, legacy_nodal_matrix, local_matrix, face_basis_integrals};
use crate::error::Result;
use crate::geom::Point;
use crate::linsys::SolveReport;
use crate::mesh::generate::{generate_structured_mesh, MeshFamily};
use crate::mesh::geometry::{compute_geometry, MeshGeometry};
use crate::mesh::{distort::distort_family, stretch::stretch_mesh, BoundaryRule, Mesh};
use crate::poisson::{solve_poisson, PoissonSolution, SolverOptions};
use crate::quadrature::cell_quadrature;
use crate::stokes::{solve_stokes, StokesSolution};
use cases::{PoissonCase, StokesCase};

/// Default quadrature degree for error integration.
pub const ERROR_DEGREE: usize = 4;

/// Cell RMS sqrt(|W|^-1 int f^2) of a pointwise gap.
pub fn cell_rms_scalar(
    nsd: usize,
    cell_type: crate::mesh::CellType,
    pts: &[Point],
    volume: f64,
    f: &dyn Fn(Point) -> f64,
    degree: usize,
) -> f64 {
    let rule = cell_quadrature(cell_type, pts, nsd, degree);
    let mut total = 0.0;
    for (x, w) in rule.pts.iter().zip(&rule.wts) {
        let v = f(*x);
        total += w * v * v;
    }
    (total / volume).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonErrors {
    pub err_u: f64,
    pub err_q: f64,
    pub norm_u: f64,
    pub norm_q: f64,
}

impl PoissonErrors {
    pub fn rel_u(&self) -> f64 {
        if self.norm_u > 0.0 {
            self.err_u / self.norm_u
        } else {
            self.err_u
        }
    }

    pub fn rel_q(&self) -> f64 {
        if self.norm_q > 0.0 {
            self.err_q / self.norm_q
        } else {
            self.err_q
        }
    }
}

pub fn poisson_errors(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    case: &PoissonCase,
    solution: &PoissonSolution,
    degree: usize,
) -> PoissonErrors {
    let nsd = mesh.nsd;
    let flux = case.flux();
    let mut err_u = 0.0;
    let mut err_q = 0.0;
    let mut norm_u = 0.0;
    let mut norm_q = 0.0;
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let rule = cell_quadrature(cell.cell_type, &pts, nsd, degree);
        for (x, w) in rule.pts.iter().zip(&rule.wts) {
            let exact = (case.exact)(*x);
            let uh = eval_linear(nsd, cg.centroid, &solution.coeffs[e], *x);
            err_u += w * (uh - exact) * (uh - exact);
            norm_u += w * exact * exact;
            let q = flux(*x);
            for k in 0..nsd {
                let d = solution.q[e][k] - q[k];
                err_q += w * d * d;
                norm_q += w * q[k] * q[k];
            }
        }
    }
    PoissonErrors {
        err_u: err_u.max(0.0).sqrt(),
        err_q: err_q.max(0.0).sqrt(),
        norm_u: norm_u.max(0.0).sqrt(),
        norm_q: norm_q.max(0.0).sqrt(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StokesErrors {
    pub err_u: f64,
    pub err_p: f64,
    pub err_l: f64,
    pub norm_u: f64,
    pub norm_p: f64,
    pub norm_l: f64,
}

impl StokesErrors {
    pub fn rel_u(&self) -> f64 {
        if self.norm_u > 0.0 {
            self.err_u / self.norm_u
        } else {
            self.err_u
        }
    }

    pub fn rel_p(&self) -> f64 {
        if self.norm_p > 0.0 {
            self.err_p / self.norm_p
        } else {
            self.err_p
        }
    }

    pub fn rel_l(&self) -> f64 {
        if self.norm_l > 0.0 {
            self.err_l / self.norm_l
        } else {
            self.err_l
        }
    }
}

pub fn stokes_errors(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    case: &StokesCase,
    solution: &StokesSolution,
    degree: usize,
) -> StokesErrors {
    let nsd = mesh.nsd;
    let l_exact = case.scaled_gradient();
    // Under the zero-mean gauge the discrete pressure carries no
    // constant mode; compare against the exact pressure shifted to the
    // same volume-weighted mean.
    let shift = if solution.pressure_multiplier.is_some() {
        let mut p_int = 0.0;
        let mut vol = 0.0;
        for (e, cell) in mesh.cells.iter().enumerate() {
            let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
            let rule = cell_quadrature(cell.cell_type, &pts, nsd, degree);
            for (x, w) in rule.pts.iter().zip(&rule.wts) {
                p_int += w * (case.pressure)(*x);
            }
            vol += geometry.cells[e].volume;
        }
        p_int / vol
    } else {
        0.0
    };
    let mut err_u = 0.0;
    let mut err_p = 0.0;
    let mut err_l = 0.0;
    let mut norm_u = 0.0;
    let mut norm_p = 0.0;
    let mut norm_l = 0.0;
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let rule = cell_quadrature(cell.cell_type, &pts, nsd, degree);
        for (x, w) in rule.pts.iter().zip(&rule.wts) {
            let u = (case.velocity)(*x);
            for a in 0..nsd {
                let uh = eval_linear(nsd, cg.centroid, &solution.coeffs[e][a], *x);
                err_u += w * (uh - u[a]) * (uh - u[a]);
                norm_u += w * u[a] * u[a];
            }
            let p = (case.pressure)(*x) - shift;
            let dp = solution.pressure[e] - p;
            err_p += w * dp * dp;
            norm_p += w * p * p;
            let l = l_exact(*x);
            for k in 0..nsd {
                for a in 0..nsd {
                    let d = solution.gradient[e][k][a] - l[k][a];
                    err_l += w * d * d;
                    norm_l += w * l[k][a] * l[k][a];
                }
            }
        }
    }
    StokesErrors {
        err_u: err_u.max(0.0).sqrt(),
        err_p: err_p.max(0.0).sqrt(),
        err_l: err_l.max(0.0).sqrt(),
        norm_u: norm_u.max(0.0).sqrt(),
        norm_p: norm_p.max(0.0).sqrt(),
        norm_l: norm_l.max(0.0).sqrt(),
    }
}

/// Optional mesh perturbations applied between generation and tagging.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeshVariant {
    pub distort_seed: Option<u64>,
    pub stretch: Option<f64>,
}

/// Builds a study mesh: generate, stretch, distort, then tag boundaries.
pub fn study_mesh(
    family: MeshFamily,
    nsd: usize,
    level: usize,
    variant: MeshVariant,
    rule: BoundaryRule,
) -> Result<Mesh> {
    let mut mesh = generate_structured_mesh(family, nsd, level)?;
    if let Some(target) = variant.stretch {
        mesh = stretch_mesh(&mesh, target)?.0;
    }
    if let Some(seed) = variant.distort_seed {
        mesh = distort_family(family, &mesh, seed)?;
    }
    mesh.apply_boundary_rule(rule)?;
    Ok(mesh)
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub n_cells: usize,
    pub n_trace_dof: usize,
    /// Relative L2 error of the primal variable.
    pub err_u: f64,
    /// Relative flux error: q for Poisson, L for Stokes.
    pub err_flux: f64,
    /// Relative pressure error, Stokes only.
    pub err_p: Option<f64>,
    pub t_assemble: f64,
    pub t_solve: f64,
    pub order_u: Option<f64>,
    pub order_flux: Option<f64>,
    pub order_p: Option<f64>,
    /// Relative symmetry defect of the assembled matrix.
    pub symmetry_defect_rel: f64,
    /// Worst per-cell incompressibility defect, Stokes only.
    pub incompressibility: Option<f64>,
    pub report: Option<SolveReport>,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub tau: f64,
    pub source_degree: usize,
    pub error_degree: usize,
    pub variant: MeshVariant,
    pub solver: SolverOptions,
}

impl StudyConfig {
    pub fn with_defaults(nsd: usize) -> StudyConfig {
        StudyConfig {
            tau: default_tau(nsd),
            source_degree: 4,
            error_degree: ERROR_DEGREE,
            variant: MeshVariant::default(),
            solver: SolverOptions::default(),
        }
    }
}

pub fn default_tau(nsd: usize) -> f64 {
    if nsd == 2 {
        1e4
    } else {
        1e2
    }
}

pub fn default_levels(nsd: usize) -> Vec<usize> {
    if nsd == 2 {
        vec![2, 4, 8, 16, 32]
    } else {
        vec![1, 2, 4, 8]
    }
}

fn slope(prev: (f64, f64), next: (f64, f64)) -> Option<f64> {
    let (h0, e0) = prev;
    let (h1, e1) = next;
    if e0 > 0.0 && e1 > 0.0 && h0 > h1 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

fn fill_orders(rows: &mut [ConvergenceRow]) {
    for i in 1..rows.len() {
        let (a, b) = rows.split_at_mut(i);
        let prev = &a[i - 1];
        let row = &mut b[0];
        row.order_u = slope((prev.h, prev.err_u), (row.h, row.err_u));
        row.order_flux = slope((prev.h, prev.err_flux), (row.h, row.err_flux));
        row.order_p = match (prev.err_p, row.err_p) {
            (Some(p0), Some(p1)) => slope((prev.h, p0), (row.h, p1)),
            _ => None,
        };
    }
}

pub fn poisson_convergence(
    case: &PoissonCase,
    family: MeshFamily,
    levels: &[usize],
    cfg: &StudyConfig,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = study_mesh(family, case.nsd, level, cfg.variant, case.boundary_rule())?;
        let geometry = compute_geometry(&mesh)?;
        let problem = case.problem(cfg.tau, cfg.source_degree);
        let solution = solve_poisson(&mesh, &geometry, &problem, &cfg.solver)?;
        let errors = poisson_errors(&mesh, &geometry, case, &solution, cfg.error_degree);
        rows.push(ConvergenceRow {
            level,
            h: geometry.h,
            n_cells: mesh.n_cells(),
            n_trace_dof: solution.n_dof,
            err_u: errors.rel_u(),
            err_flux: errors.rel_q(),
            err_p: None,
            t_assemble: solution.t_assemble,
            t_solve: solution.t_solve,
            order_u: None,
            order_flux: None,
            order_p: None,
            symmetry_defect_rel: solution.symmetry_defect_rel,
            incompressibility: None,
            report: solution.report.clone(),
        });
    }
    fill_orders(&mut rows);
    Ok(rows)
}

pub fn stokes_convergence(
    case: &StokesCase,
    family: MeshFamily,
    levels: &[usize],
    cfg: &StudyConfig,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = study_mesh(family, case.nsd, level, cfg.variant, case.boundary_rule())?;
        let geometry = compute_geometry(&mesh)?;
        let problem = case.problem(cfg.tau, cfg.source_degree);
        let solution = solve_stokes(&mesh, &geometry, &problem, &cfg.solver)?;
        let errors = stokes_errors(&mesh, &geometry, case, &solution, cfg.error_degree);
        let incompressibility =
            crate::stokes::incompressibility_defect(&mesh, &geometry, &solution);
        rows.push(ConvergenceRow {
            level,
            h: geometry.h,
            n_cells: mesh.n_cells(),
            n_trace_dof: solution.n_dof,
            err_u: errors.rel_u(),
            err_flux: errors.rel_l(),
            err_p: Some(errors.rel_p()),
            t_assemble: solution.t_assemble,
            t_solve: solution.t_solve,
            order_u: None,
            order_flux: None,
            order_p: None,
            symmetry_defect_rel: solution.symmetry_defect_rel,
            incompressibility: Some(incompressibility),
            report: Some(solution.report.clone()),
        });
    }
    fill_orders(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct TauSweepRow {
    pub tau: f64,
    pub err_u: f64,
    pub err_flux: f64,
    pub err_p: Option<f64>,
    pub symmetry_defect_rel: f64,
    /// Max per-cell mass defect; None for Poisson.
    pub incompressibility: Option<f64>,
}

pub fn poisson_tau_sweep(
    case: &PoissonCase,
    family: MeshFamily,
    level: usize,
    taus: &[f64],
    cfg: &StudyConfig,
) -> Result<Vec<TauSweepRow>> {
    let mesh = study_mesh(family, case.nsd, level, cfg.variant, case.boundary_rule())?;
    let geometry = compute_geometry(&mesh)?;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let problem = case.problem(tau, cfg.source_degree);
        let solution = solve_poisson(&mesh, &geometry, &problem, &cfg.solver)?;
        let errors = poisson_errors(&mesh, &geometry, case, &solution, cfg.error_degree);
        rows.push(TauSweepRow {
            tau,
            err_u: errors.rel_u(),
            err_flux: errors.rel_q(),
            err_p: None,
            symmetry_defect_rel: solution.symmetry_defect_rel,
            incompressibility: None,
        });
    }
    Ok(rows)
}

pub fn stokes_tau_sweep(
    case: &StokesCase,
    family: MeshFamily,
    level: usize,
    taus: &[f64],
    cfg: &StudyConfig,
) -> Result<Vec<TauSweepRow>> {
    let mesh = study_mesh(family, case.nsd, level, cfg.variant, case.boundary_rule())?;
    let geometry = compute_geometry(&mesh)?;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let problem = case.problem(tau, cfg.source_degree);
        let solution = solve_stokes(&mesh, &geometry, &problem, &cfg.solver)?;
        let errors = stokes_errors(&mesh, &geometry, case, &solution, cfg.error_degree);
        let incompressibility =
            crate::stokes::incompressibility_defect(&mesh, &geometry, &solution);
        rows.push(TauSweepRow {
            tau,
            err_u: errors.rel_u(),
            err_flux: errors.rel_l(),
            err_p: Some(errors.rel_p()),
            symmetry_defect_rel: solution.symmetry_defect_rel,
            incompressibility: Some(incompressibility),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LegacyDemoReport {
    pub tau: f64,
    /// Determinant of the nodal matrix on the unit right triangle.
    pub tri_legacy_det: f64,
    /// Closed form tau^3/16 |G1||G2||G3| for the same triangle.
    pub tri_det_formula: f64,
    /// Determinant of the nodal matrix on the unit square (singular).
    pub qua_legacy_det: f64,
    /// |m v| for the alternating nullvector v = (1,-1,1,-1).
    pub qua_nullvector_residual: f64,
    /// Determinant of the face-centred matrix on the same square.
    pub qua_modern_det: f64,
}

/// Demonstrates why the nodal lowest-order basis degenerates on quads
/// while the centred face basis stays regular.
pub fn legacy_demo(tau: f64) -> Result<LegacyDemoReport> {
    let sqrt2 = 2f64.sqrt();
    let tri_edges = [1.0, sqrt2, 1.0];
    let tri = legacy_nodal_matrix(3, tau, &tri_edges);
    let tri_det_formula = tau.powi(3) / 16.0 * tri_edges.iter().product::<f64>();
    let qua = legacy_nodal_matrix(4, tau, &[1.0, 1.0, 1.0, 1.0]);
    let v = [1.0, -1.0, 1.0, -1.0];
    let mv = qua.matvec(&v);
    let qua_nullvector_residual = mv.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mesh = Mesh::new(
        2,
        vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ],
        vec![crate::mesh::Cell {
            cell_type: crate::mesh::CellType::Qua,
            verts: vec![0, 1, 2, 3],
        }],
    )?;
    let geometry = compute_geometry(&mesh)?;
    let pts: Vec<Point> = mesh.cells[0].verts.iter().map(|&v| mesh.vertices[v]).collect();
    let faces: Vec<_> = mesh.cells[0]
        .cell_type
        .local_faces()
        .iter()
        .enumerate()
        .map(|(j, local)| {
            let fp: Vec<Point> = local.iter().map(|&l| pts[l]).collect();
            face_basis_integrals(2, geometry.cells[0].centroid, &fp, &geometry.faces[0][j])
        })
        .collect();
    let (m, _) = local_matrix(0, 3, tau, &faces)?;

    Ok(LegacyDemoReport {
        tau,
        tri_legacy_det: tri.det(),
        tri_det_formula,
        qua_legacy_det: qua.det(),
        qua_nullvector_residual,
        qua_modern_det: m.det(),
    })
}

/// Standard sweep grid for the stabilisation study.
pub fn tau_sweep_values() -> Vec<f64> {
    (0..=5).map(|k| 10f64.powi(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cases::{poisson_smooth_2d, stokes_vortex_2d};

    #[test]
    fn errors_vanish_for_the_exact_discrete_fields() {
        // Manufactured linear case: the solver reproduces it exactly, so
        // all error norms collapse to round-off.
        let case = PoissonCase {
            name: "linear",
            nsd: 2,
            exact: crate::scalar_field(|x| 1.0 + 2.0 * x[0] - 0.5 * x[1]),
            gradient: crate::vector_field(|_| [2.0, -0.5, 0.0]),
            source: crate::scalar_field(|_| 0.0),
            neumann_axis: Some(1),
        };
        let cfg = StudyConfig {
            tau: 10.0,
            ..StudyConfig::with_defaults(2)
        };
        let rows = poisson_convergence(&case, MeshFamily::Tri, &[2, 4], &cfg).unwrap();
        for row in &rows {
            assert!(row.err_u < 1e-10, "err_u = {}", row.err_u);
            assert!(row.err_flux < 1e-10, "err_q = {}", row.err_flux);
            assert!(row.symmetry_defect_rel < 1e-12);
        }
    }

    #[test]
    fn poisson_orders_approach_two_and_one() {
        let case = poisson_smooth_2d();
        let cfg = StudyConfig::with_defaults(2);
        let rows = poisson_convergence(&case, MeshFamily::Qua, &[4, 8, 16], &cfg).unwrap();
        let last = rows.last().unwrap();
        let order_u = last.order_u.unwrap();
        let order_q = last.order_flux.unwrap();
        assert!(
            (1.6..=2.6).contains(&order_u),
            "order_u = {order_u}, rows: {rows:?}"
        );
        assert!(
            (0.6..=1.6).contains(&order_q),
            "order_q = {order_q}, rows: {rows:?}"
        );
        // Errors decrease monotonically with refinement.
        for pair in rows.windows(2) {
            assert!(pair[1].err_u < pair[0].err_u);
        }
    }

    #[test]
    fn stokes_vortex_converges_on_triangles() {
        let case = stokes_vortex_2d();
        let cfg = StudyConfig::with_defaults(2);
        let rows = stokes_convergence(&case, MeshFamily::Tri, &[4, 8, 16], &cfg).unwrap();
        let last = rows.last().unwrap();
        let order_u = last.order_u.unwrap();
        assert!(
            (1.6..=2.6).contains(&order_u),
            "order_u = {order_u}, rows: {rows:?}"
        );
        for row in &rows {
            assert!(row.incompressibility.unwrap() < 1e-10);
        }
    }

    #[test]
    fn legacy_demo_matches_the_closed_forms() {
        let report = legacy_demo(1.0).unwrap();
        assert!(
            (report.tri_legacy_det - report.tri_det_formula).abs()
                <= 1e-12 * report.tri_det_formula.abs()
        );
        assert!(report.qua_legacy_det.abs() <= 1e-14);
        assert!(report.qua_nullvector_residual <= 1e-14);
        assert!(report.qua_modern_det > 1e-8);
    }

    #[test]
    fn slopes_handle_degenerate_inputs() {
        assert!(slope((0.1, 1.0), (0.1, 0.5)).is_none());
        assert!(slope((0.2, 0.0), (0.1, 0.5)).is_none());
        let s = slope((0.2, 4.0), (0.1, 1.0)).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }
}
