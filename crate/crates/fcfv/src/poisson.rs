//! Face-centred finite volume discretisation of the Poisson problem.
//!
//! Mixed form: q + grad u = 0 in each cell, div q = s, u = u_D on the
//! Dirichlet boundary and n . grad u = t on the Neumann boundary.  The
//! hybrid unknown uhat is constant per face; eliminating the per-cell
//! linear coefficients c and the constant flux q cell by cell leaves a
//! symmetric global system in uhat on non-Dirichlet faces:
//!
//!   K_ij = |G_i| (tau^2 p_i . (m^-1 r_j) - |W|^-1 |G_j| n_i . n_j
//!          - tau delta_ij),
//!   f_i  = |G_i| (|W|^-1 n_i . z - tau p_i . (m^-1 b) - t_i chi_N(i)),
//!
//! with m the local basis matrix, b the source moments plus Dirichlet
//! contributions, and z the Dirichlet flux moment.  Back substitution
//! recovers c (centroid value and gradient), the cell flux q, and the
//! superconvergent piecewise-constant field u* used by the error
//! indicator.

use crate::basis::{
    face_basis_integrals, local_matrix, source_moments, FaceBasisIntegrals, MAX_M,
};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::linsys::{solve_cg, solve_direct, SolveReport, Triplets};
use crate::mesh::geometry::MeshGeometry;
use crate::mesh::{BoundaryTag, Mesh};
use crate::ScalarField;

#[derive(Clone)]
pub struct PoissonProblem {
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    /// Neumann datum t = n . grad u.
    pub neumann: ScalarField,
    /// Face stabilisation parameter, uniform over the mesh.
    pub tau: f64,
    /// Quadrature degree for the source moments.
    pub source_degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    /// Conjugate gradients on the negated (positive definite) system;
    /// Poisson only.
    Cg,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub cg_tol: f64,
    pub dump_matrix: Option<std::path::PathBuf>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: SolveMethod::Direct,
            cg_tol: crate::linsys::DEFAULT_CG_TOL,
            dump_matrix: None,
        }
    }
}

/// Per-cell data surviving local elimination.
pub(crate) struct CellLocal {
    pub faces: Vec<FaceBasisIntegrals>,
    /// m^-1 r_j per local face.
    pub m_inv_r: Vec<[f64; MAX_M]>,
    /// m^-1 b.
    pub m_inv_b: [f64; MAX_M],
    /// z = sum_D |G_j| n_j u_D.
    pub z: Point,
    /// Source value at the cell centroid, for first-order recovery.
    pub source_at_centroid: f64,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    /// Face value per global face; Dirichlet faces carry the boundary datum.
    pub uhat: Vec<f64>,
    /// Global unknown index per face (None on Dirichlet faces).
    pub face_dof: Vec<Option<usize>>,
    /// Linear coefficients per cell: centroid value, then derivatives.
    pub coeffs: Vec<[f64; MAX_M]>,
    /// Constant flux per cell.
    pub q: Vec<Point>,
    /// First-order recovered cell value.
    pub u_star: Vec<f64>,
    pub n_dof: usize,
    /// None when the mesh is fully Dirichlet and no system was solved.
    pub report: Option<SolveReport>,
    /// Relative symmetry defect of the assembled trace matrix.
    pub symmetry_defect_rel: f64,
    pub t_assemble: f64,
    pub t_solve: f64,
}

/// Unknown numbering: consecutive over non-Dirichlet faces in face order.
pub fn trace_dof_map(mesh: &Mesh) -> (Vec<Option<usize>>, usize) {
    let mut map = Vec::with_capacity(mesh.faces.len());
    let mut next = 0;
    for face in &mesh.faces {
        if face.tag == Some(BoundaryTag::Dirichlet) {
            map.push(None);
        } else {
            map.push(Some(next));
            next += 1;
        }
    }
    (map, next)
}

pub(crate) fn build_cell_locals(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    tau: f64,
    source_degree: usize,
    source: &dyn Fn(Point) -> f64,
    dirichlet_moment: &mut dyn FnMut(usize, usize, &FaceBasisIntegrals) -> Option<(f64, Point)>,
) -> Result<Vec<CellLocal>> {
    let nsd = mesh.nsd;
    let m_order = nsd + 1;
    let mut locals = Vec::with_capacity(mesh.n_cells());
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let faces: Vec<FaceBasisIntegrals> = cell
            .cell_type
            .local_faces()
            .iter()
            .enumerate()
            .map(|(j, local)| {
                let fp: Vec<Point> = local.iter().map(|&l| pts[l]).collect();
                face_basis_integrals(nsd, cg.centroid, &fp, &geometry.faces[e][j])
            })
            .collect();
        let (_, m_inv) = local_matrix(e, m_order, tau, &faces)?;
        let mut b = source_moments(nsd, cell.cell_type, &pts, cg.centroid, source, source_degree);
        let mut z = [0.0; 3];
        for (j, fi) in faces.iter().enumerate() {
            if let Some((value, weighted_normal)) = dirichlet_moment(e, j, fi) {
                for i in 0..m_order {
                    b[i] += tau * value * fi.r[i];
                }
                z = geom::add(z, weighted_normal);
            }
        }
        let m_inv_r: Vec<[f64; MAX_M]> = faces.iter().map(|f| m_inv.matvec(&f.r)).collect();
        let m_inv_b = m_inv.matvec(&b);
        locals.push(CellLocal {
            faces,
            m_inv_r,
            m_inv_b,
            z,
            source_at_centroid: source(cg.centroid),
        });
    }
    Ok(locals)
}

pub fn solve_poisson(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    problem: &PoissonProblem,
    options: &SolverOptions,
) -> Result<PoissonSolution> {
    let nsd = mesh.nsd;
    let m_order = nsd + 1;
    let tau = problem.tau;
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }

    let t0 = std::time::Instant::now();
    let (face_dof, n_dof) = trace_dof_map(mesh);

    let source = problem.source.clone();
    let dirichlet = problem.dirichlet.clone();
    let faces_ref = &mesh.faces;
    let cell_faces = &mesh.cell_faces;
    let geom_faces = &geometry.faces;
    let mut dirichlet_moment = |e: usize, j: usize, _fi: &FaceBasisIntegrals| {
        let face = &faces_ref[cell_faces[e][j]];
        if face.tag == Some(BoundaryTag::Dirichlet) {
            let fg = &geom_faces[e][j];
            let value = dirichlet(fg.centroid);
            Some((value, geom::scale(fg.normal, fg.area * value)))
        } else {
            None
        }
    };
    let locals = build_cell_locals(
        mesh,
        geometry,
        tau,
        problem.source_degree,
        source.as_ref(),
        &mut dirichlet_moment,
    )?;

    let mut triplets = Triplets::new(n_dof, n_dof);
    let mut rhs = vec![0.0; n_dof];
    for (e, local) in locals.iter().enumerate() {
        let vol_inv = 1.0 / geometry.cells[e].volume;
        for (i, fi) in local.faces.iter().enumerate() {
            let Some(row) = face_dof[mesh.cell_faces[e][i]] else {
                continue;
            };
            let fg_i = &geometry.faces[e][i];
            let area_i = fg_i.area;

            let mut f_val = vol_inv * geom::dot(fg_i.normal, local.z);
            let mut pmb = 0.0;
            for k in 0..m_order {
                pmb += fi.p[k] * local.m_inv_b[k];
            }
            f_val -= tau * pmb;
            if mesh.faces[mesh.cell_faces[e][i]].tag == Some(BoundaryTag::Neumann) {
                f_val -= (problem.neumann)(fg_i.centroid);
            }
            rhs[row] += area_i * f_val;

            for j in 0..local.faces.len() {
                let Some(col) = face_dof[mesh.cell_faces[e][j]] else {
                    continue;
                };
                let fg_j = &geometry.faces[e][j];
                let mut pmr = 0.0;
                for k in 0..m_order {
                    pmr += fi.p[k] * local.m_inv_r[j][k];
                }
                let mut val = tau * tau * pmr
                    - vol_inv * fg_j.area * geom::dot(fg_i.normal, fg_j.normal);
                if i == j {
                    val -= tau;
                }
                triplets.push(row, col, area_i * val);
            }
        }
    }
    let matrix = triplets.compress();
    let symmetry_defect_rel = matrix.symmetry_defect_rel();
    let t_assemble = t0.elapsed().as_secs_f64();

    if let Some(path) = &options.dump_matrix {
        matrix.write_matrix_market(path)?;
    }

    let t1 = std::time::Instant::now();
    let (trace, report) = if n_dof == 0 {
        (Vec::new(), None)
    } else {
        let (x, report) = match options.method {
            SolveMethod::Direct => solve_direct(&matrix, &rhs)?,
            SolveMethod::Cg => {
                // The assembled system is negative definite; negate for CG.
                let mut neg = matrix.clone();
                for v in neg.vals.iter_mut() {
                    *v = -*v;
                }
                let neg_rhs: Vec<f64> = rhs.iter().map(|v| -v).collect();
                solve_cg(&neg, &neg_rhs, options.cg_tol, 20 * n_dof.max(50))?
            }
        };
        (x, Some(report))
    };
    let t_solve = t1.elapsed().as_secs_f64();

    let mut uhat = vec![0.0; mesh.faces.len()];
    for f in 0..mesh.faces.len() {
        uhat[f] = match face_dof[f] {
            Some(dof) => trace[dof],
            None => {
                let (e, j) = owner_local(mesh, f);
                (problem.dirichlet)(geometry.faces[e][j].centroid)
            }
        };
    }

    let mut coeffs = Vec::with_capacity(mesh.n_cells());
    let mut q = Vec::with_capacity(mesh.n_cells());
    for (e, local) in locals.iter().enumerate() {
        let vol_inv = 1.0 / geometry.cells[e].volume;
        let mut c = local.m_inv_b;
        let mut flux = geom::scale(local.z, -vol_inv);
        for (j, _) in local.faces.iter().enumerate() {
            let f = mesh.cell_faces[e][j];
            if face_dof[f].is_some() {
                let u = uhat[f];
                for k in 0..m_order {
                    c[k] += tau * u * local.m_inv_r[j][k];
                }
                let fg = &geometry.faces[e][j];
                flux = geom::axpy(flux, -vol_inv * fg.area * u, fg.normal);
            }
        }
        coeffs.push(c);
        q.push(flux);
    }

    let u_star = recover_first_order(mesh, geometry, tau, &uhat, &locals)?;

    Ok(PoissonSolution {
        uhat,
        face_dof,
        coeffs,
        q,
        u_star,
        n_dof,
        report,
        symmetry_defect_rel,
        t_assemble,
        t_solve,
    })
}

/// Owning cell and local face index of a boundary face.
fn owner_local(mesh: &Mesh, face: usize) -> (usize, usize) {
    let e = mesh.faces[face].left;
    let j = mesh.cell_faces[e]
        .iter()
        .position(|&f| f == face)
        .expect("face missing from its owner");
    (e, j)
}

/// First-order recovery: u*_e = (sum_A |G| tau)^-1 (|W| s_e
/// + sum_D |G| tau u_D + sum_B |G| tau uhat), with u_D folded into uhat.
fn recover_first_order(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    tau: f64,
    uhat: &[f64],
    locals: &[CellLocal],
) -> Result<Vec<f64>> {
    let mut u_star = Vec::with_capacity(mesh.n_cells());
    for (e, local) in locals.iter().enumerate() {
        let mut alpha = 0.0;
        let mut beta = geometry.cells[e].volume * local.source_at_centroid;
        for (j, _) in local.faces.iter().enumerate() {
            let fg = &geometry.faces[e][j];
            let f = mesh.cell_faces[e][j];
            alpha += fg.area * tau;
            beta += fg.area * tau * uhat[f];
        }
        if alpha <= 0.0 {
            return Err(Error::Solver(format!(
                "cell {e} has non-positive recovery weight"
            )));
        }
        u_star.push(beta / alpha);
    }
    Ok(u_star)
}

/// Worst cell-wise defect of the numerical flux balance
/// sum_j |G_j| (n_j . q + tau (u_e(face centroid) - uhat_j)) = int s,
/// a direct check of local conservation.
pub fn conservation_defect(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    problem: &PoissonProblem,
    solution: &PoissonSolution,
) -> f64 {
    let mut worst = 0.0f64;
    for (e, cell) in mesh.cells.iter().enumerate() {
        let cg = &geometry.cells[e];
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let moments = source_moments(
            mesh.nsd,
            cell.cell_type,
            &pts,
            cg.centroid,
            problem.source.as_ref(),
            problem.source_degree,
        );
        let c = &solution.coeffs[e];
        let mut total = -moments[0];
        for (j, fg) in geometry.faces[e].iter().enumerate() {
            let mut u_face = c[0];
            for k in 0..mesh.nsd {
                u_face += c[k + 1] * (fg.centroid[k] - cg.centroid[k]);
            }
            let uhat = solution.uhat[mesh.cell_faces[e][j]];
            total += fg.area
                * (geom::dot(fg.normal, solution.q[e]) + problem.tau * (u_face - uhat));
        }
        worst = worst.max(total.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{generate_structured_mesh, MeshFamily};
    use crate::mesh::geometry::compute_geometry;
    use crate::mesh::{BoundaryRule, Cell, CellType};
    use crate::scalar_field;

    fn unit_square_mesh() -> Mesh {
        Mesh::new(
            2,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            vec![Cell {
                cell_type: CellType::Qua,
                verts: vec![0, 1, 2, 3],
            }],
        )
        .unwrap()
    }

    fn linear_problem() -> PoissonProblem {
        // u = 2 + 3x - y has q = (-3, 1) and zero source.
        PoissonProblem {
            source: scalar_field(|_| 0.0),
            dirichlet: scalar_field(|x| 2.0 + 3.0 * x[0] - x[1]),
            neumann: scalar_field(|_| 0.0),
            tau: 10.0,
            source_degree: 2,
        }
    }

    #[test]
    fn single_cell_all_dirichlet_flux_example() {
        let mesh = unit_square_mesh();
        let geometry = compute_geometry(&mesh).unwrap();
        let problem = PoissonProblem {
            source: scalar_field(|_| 0.0),
            dirichlet: scalar_field(|x| x[0]),
            neumann: scalar_field(|_| 0.0),
            tau: 1.0,
            source_degree: 2,
        };
        let sol = solve_poisson(&mesh, &geometry, &problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.n_dof, 0);
        assert!((sol.q[0][0] + 1.0).abs() < 1e-14, "q = {:?}", sol.q[0]);
        assert!(sol.q[0][1].abs() < 1e-14);
        // c = m^-1 (b + sum tau r uhat): centroid value 0.5, gradient (1, 0).
        assert!((sol.coeffs[0][0] - 0.5).abs() < 1e-14);
        assert!((sol.coeffs[0][1] - 1.0).abs() < 1e-14);
        assert!(sol.coeffs[0][2].abs() < 1e-14);
    }

    #[test]
    fn linear_solution_is_exact_on_every_family() {
        let exact = |x: Point| 2.0 + 3.0 * x[0] - x[1];
        let cases: &[(MeshFamily, usize, usize)] = &[
            (MeshFamily::Tri, 2, 3),
            (MeshFamily::Qua, 2, 3),
            (MeshFamily::Hybrid, 2, 4),
            (MeshFamily::Tet, 3, 2),
            (MeshFamily::Hex, 3, 2),
            (MeshFamily::Pri, 3, 2),
            (MeshFamily::Pyr, 3, 2),
            (MeshFamily::Hybrid, 3, 2),
        ];
        for &(family, nsd, level) in cases {
            let mut mesh = generate_structured_mesh(family, nsd, level).unwrap();
            mesh.apply_boundary_rule(BoundaryRule::NeumannOnPlane {
                axis: nsd - 1,
                value: 0.0,
            })
            .unwrap();
            let geometry = compute_geometry(&mesh).unwrap();
            let grad = [3.0, -1.0, 0.0];
            let problem = PoissonProblem {
                source: scalar_field(|_| 0.0),
                dirichlet: scalar_field(exact),
                neumann: scalar_field(move |x| {
                    // t = n . grad u with the outward normal of the bottom
                    // plane, -e_{nsd-1}.
                    let _ = x;
                    if nsd == 2 {
                        1.0
                    } else {
                        0.0
                    }
                }),
                tau: 10.0,
                source_degree: 2,
            };
            let sol =
                solve_poisson(&mesh, &geometry, &problem, &SolverOptions::default()).unwrap();
            for (e, c) in sol.coeffs.iter().enumerate() {
                let cen = geometry.cells[e].centroid;
                assert!(
                    (c[0] - exact(cen)).abs() < 1e-10,
                    "{family} cell {e}: centroid value {} vs {}",
                    c[0],
                    exact(cen)
                );
                for k in 0..nsd {
                    assert!(
                        (c[k + 1] - grad[k]).abs() < 1e-10,
                        "{family} cell {e}: derivative {k}"
                    );
                }
                for k in 0..nsd {
                    assert!((sol.q[e][k] + grad[k]).abs() < 1e-10);
                }
            }
            assert!(conservation_defect(&mesh, &geometry, &problem, &sol) < 1e-9);
        }
    }

    #[test]
    fn trace_values_match_exact_solution_on_linears() {
        let mut mesh = generate_structured_mesh(MeshFamily::Tri, 2, 3).unwrap();
        mesh.apply_boundary_rule(BoundaryRule::NeumannOnPlane { axis: 1, value: 0.0 })
            .unwrap();
        let geometry = compute_geometry(&mesh).unwrap();
        let problem = linear_problem();
        let neumann_problem = PoissonProblem {
            neumann: scalar_field(|_| 1.0),
            ..problem
        };
        let sol =
            solve_poisson(&mesh, &geometry, &neumann_problem, &SolverOptions::default()).unwrap();
        for (f, _) in mesh.faces.iter().enumerate() {
            let (e, j) = super::owner_local(&mesh, f);
            let centroid = geometry.faces[e][j].centroid;
            let want = 2.0 + 3.0 * centroid[0] - centroid[1];
            assert!(
                (sol.uhat[f] - want).abs() < 1e-10,
                "face {f}: {} vs {want}",
                sol.uhat[f]
            );
        }
        assert!(conservation_defect(&mesh, &geometry, &neumann_problem, &sol) < 1e-10);
    }

    #[test]
    fn cg_path_matches_direct() {
        let mut mesh = generate_structured_mesh(MeshFamily::Qua, 2, 4).unwrap();
        mesh.apply_boundary_rule(BoundaryRule::AllDirichlet).unwrap();
        let geometry = compute_geometry(&mesh).unwrap();
        let problem = PoissonProblem {
            source: scalar_field(|x| (x[0] * x[1]).sin()),
            dirichlet: scalar_field(|x| x[0] * x[0]),
            neumann: scalar_field(|_| 0.0),
            tau: 10.0,
            source_degree: 2,
        };
        let direct =
            solve_poisson(&mesh, &geometry, &problem, &SolverOptions::default()).unwrap();
        let cg = solve_poisson(
            &mesh,
            &geometry,
            &problem,
            &SolverOptions {
                method: SolveMethod::Cg,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in direct.uhat.iter().zip(&cg.uhat) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(cg.report.as_ref().unwrap().method, "cg-jacobi");
    }

    #[test]
    fn recovery_is_exact_for_constant_solutions() {
        let mut mesh = generate_structured_mesh(MeshFamily::Hybrid, 2, 4).unwrap();
        mesh.apply_boundary_rule(BoundaryRule::AllDirichlet).unwrap();
        let geometry = compute_geometry(&mesh).unwrap();
        let problem = PoissonProblem {
            source: scalar_field(|_| 0.0),
            dirichlet: scalar_field(|_| 3.5),
            neumann: scalar_field(|_| 0.0),
            tau: 5.0,
            source_degree: 2,
        };
        let sol = solve_poisson(&mesh, &geometry, &problem, &SolverOptions::default()).unwrap();
        for u in &sol.u_star {
            assert!((u - 3.5).abs() < 1e-11);
        }
    }

    #[test]
    fn tau_must_be_positive() {
        let mesh = unit_square_mesh();
        let geometry = compute_geometry(&mesh).unwrap();
        let mut problem = linear_problem();
        problem.tau = 0.0;
        assert!(matches!(
            solve_poisson(&mesh, &geometry, &problem, &SolverOptions::default()),
            Err(Error::Config(_))
        ));
    }
}
