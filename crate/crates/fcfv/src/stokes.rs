//! Face-centred finite volume discretisation of the Stokes problem.
//!
//! Mixed form per cell: L + sqrt(nu) grad u = 0, div (sqrt(nu) L) +
//! grad p = -s, div u = 0, with velocity trace uhat constant per face
//! and pressure constant per cell.  Eliminating L, the velocity
//! coefficients and the cell pressure couples uhat and the pressure
//! unknowns rho in a symmetric saddle system:
//!
//!   momentum row (i,a): kernel k_ij x I + |G_i| n_i[a] rho_e,
//!   k_ij = |G_i| (tau^2 p_i . (m^-1 r_j) - nu |W|^-1 |G_j| n_i . n_j
//!          - tau delta_ij),
//!   mass row e: sum_j |G_j| n_j . uhat_j = -sum_D |G_j| u_D . n_j.
//!
//! A fully Dirichlet boundary leaves the pressure defined up to a
//! constant; a symmetric border row/column enforcing the volume-weighted
//! zero mean sum_e |W_e| rho_e = 0 restores a unique solution, and the
//! border multiplier absorbs any compatibility defect of the boundary
//! data.  The Neumann datum is the pseudo-traction t = nu (n . grad) u
//! - p n.

use crate::basis::{face_basis_integrals, local_matrix, source_moments, FaceBasisIntegrals, MAX_M};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::linsys::{solve_direct, SolveReport, Triplets};
use crate::mesh::geometry::MeshGeometry;
use crate::mesh::{BoundaryTag, Mesh};
use crate::poisson::{trace_dof_map, SolveMethod, SolverOptions};
use crate::VectorField;

#[derive(Clone)]
pub struct StokesProblem {
    /// Body force s in -nu lap u + grad p = s.
    pub source: VectorField,
    pub dirichlet: VectorField,
    /// Pseudo-traction t = nu (n . grad) u - p n.
    pub neumann: VectorField,
    pub viscosity: f64,
    pub tau: f64,
    pub source_degree: usize,
}

struct StokesLocal {
    faces: Vec<FaceBasisIntegrals>,
    m_inv_r: Vec<[f64; MAX_M]>,
    /// m^-1 b per velocity component.
    m_inv_b: [[f64; MAX_M]; 3],
    /// Z[k][l] = sum_D |G_j| n_j[k] u_D[l].
    z: [[f64; 3]; 3],
    source_at_centroid: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    /// Velocity trace per face; Dirichlet faces carry the boundary datum.
    pub uhat: Vec<[f64; 3]>,
    pub face_dof: Vec<Option<usize>>,
    /// Linear velocity coefficients per cell and component.
    pub coeffs: Vec<[[f64; MAX_M]; 3]>,
    /// Scaled gradient L[k][l] ~ -sqrt(nu) d_k u_l per cell.
    pub gradient: Vec<[[f64; 3]; 3]>,
    pub pressure: Vec<f64>,
    pub u_star: Vec<[f64; 3]>,
    /// Full system size: velocity trace dofs, cell pressures, gauge row.
    pub n_dof: usize,
    /// Set when the zero-mean pressure gauge was active.
    pub pressure_multiplier: Option<f64>,
    pub report: SolveReport,
    /// Relative symmetry defect of the assembled saddle matrix.
    pub symmetry_defect_rel: f64,
    pub t_assemble: f64,
    pub t_solve: f64,
}

fn build_locals(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    problem: &StokesProblem,
) -> Result<Vec<StokesLocal>> {
    let nsd = mesh.nsd;
    let m_order = nsd + 1;
    let tau = problem.tau;
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
        let source = problem.source.clone();
        let mut b = [[0.0; MAX_M]; 3];
        for (a, b_a) in b.iter_mut().enumerate().take(nsd) {
            let component = {
                let source = source.clone();
                move |x: Point| source(x)[a]
            };
            *b_a = source_moments(
                nsd,
                cell.cell_type,
                &pts,
                cg.centroid,
                &component,
                problem.source_degree,
            );
        }
        let mut z = [[0.0; 3]; 3];
        for (j, fi) in faces.iter().enumerate() {
            let face = &mesh.faces[mesh.cell_faces[e][j]];
            if face.tag == Some(BoundaryTag::Dirichlet) {
                let fg = &geometry.faces[e][j];
                let u_d = (problem.dirichlet)(fg.centroid);
                for a in 0..nsd {
                    for i in 0..m_order {
                        b[a][i] += tau * u_d[a] * fi.r[i];
                    }
                }
                for (k, zk) in z.iter_mut().enumerate().take(nsd) {
                    for (l, zkl) in zk.iter_mut().enumerate().take(nsd) {
                        *zkl += fg.area * fg.normal[k] * u_d[l];
                    }
                }
            }
        }
        let m_inv_r: Vec<[f64; MAX_M]> = faces.iter().map(|f| m_inv.matvec(&f.r)).collect();
        let mut m_inv_b = [[0.0; MAX_M]; 3];
        for a in 0..nsd {
            m_inv_b[a] = m_inv.matvec(&b[a]);
        }
        locals.push(StokesLocal {
            faces,
            m_inv_r,
            m_inv_b,
            z,
            source_at_centroid: (problem.source)(cg.centroid),
        });
    }
    Ok(locals)
}

pub fn solve_stokes(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    problem: &StokesProblem,
    options: &SolverOptions,
) -> Result<StokesSolution> {
    let nsd = mesh.nsd;
    let m_order = nsd + 1;
    let tau = problem.tau;
    let nu = problem.viscosity;
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    if !(nu > 0.0) {
        return Err(Error::Config(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    if options.method == SolveMethod::Cg {
        return Err(Error::Config(
            "the conjugate gradient path applies only to the Poisson system; \
             the Stokes saddle system needs the direct solver"
                .into(),
        ));
    }

    let t0 = std::time::Instant::now();
    let (face_dof, n_free) = trace_dof_map(mesh);
    let has_neumann = mesh
        .faces
        .iter()
        .any(|f| f.tag == Some(BoundaryTag::Neumann));
    let bordered = !has_neumann;
    let n_vel = n_free * nsd;
    let n_cells = mesh.n_cells();
    let n_sys = n_vel + n_cells + usize::from(bordered);

    let locals = build_locals(mesh, geometry, problem)?;

    let mut triplets = Triplets::new(n_sys, n_sys);
    let mut rhs = vec![0.0; n_sys];
    for (e, local) in locals.iter().enumerate() {
        let vol = geometry.cells[e].volume;
        let vol_inv = 1.0 / vol;
        let rho_col = n_vel + e;
        for (i, fi) in local.faces.iter().enumerate() {
            let f_i = mesh.cell_faces[e][i];
            let fg_i = &geometry.faces[e][i];
            let area_i = fg_i.area;
            if let Some(dof_i) = face_dof[f_i] {
                let neumann = if mesh.faces[f_i].tag == Some(BoundaryTag::Neumann) {
                    Some((problem.neumann)(fg_i.centroid))
                } else {
                    None
                };
                for a in 0..nsd {
                    let row = dof_i * nsd + a;
                    let mut nz = 0.0;
                    for k in 0..nsd {
                        nz += fg_i.normal[k] * local.z[k][a];
                    }
                    let mut pmb = 0.0;
                    for k in 0..m_order {
                        pmb += fi.p[k] * local.m_inv_b[a][k];
                    }
                    let mut f_val = nu * vol_inv * nz - tau * pmb;
                    if let Some(t) = neumann {
                        f_val -= t[a];
                    }
                    rhs[row] += area_i * f_val;
                    triplets.push(row, rho_col, area_i * fg_i.normal[a]);
                    triplets.push(rho_col, row, area_i * fg_i.normal[a]);
                }
                for j in 0..local.faces.len() {
                    let Some(dof_j) = face_dof[mesh.cell_faces[e][j]] else {
                        continue;
                    };
                    let fg_j = &geometry.faces[e][j];
                    let mut pmr = 0.0;
                    for k in 0..m_order {
                        pmr += fi.p[k] * local.m_inv_r[j][k];
                    }
                    let mut val = tau * tau * pmr
                        - nu * vol_inv * fg_j.area * geom::dot(fg_i.normal, fg_j.normal);
                    if i == j {
                        val -= tau;
                    }
                    let val = area_i * val;
                    for a in 0..nsd {
                        triplets.push(dof_i * nsd + a, dof_j * nsd + a, val);
                    }
                }
            } else {
                // Dirichlet face: known trace feeds the mass balance rhs.
                let u_d = (problem.dirichlet)(fg_i.centroid);
                let mut flux = 0.0;
                for k in 0..nsd {
                    flux += fg_i.normal[k] * u_d[k];
                }
                rhs[rho_col] -= area_i * flux;
            }
        }
        if bordered {
            triplets.push(rho_col, n_sys - 1, vol);
            triplets.push(n_sys - 1, rho_col, vol);
        }
    }
    let matrix = triplets.compress();
    let symmetry_defect_rel = matrix.symmetry_defect_rel();
    let t_assemble = t0.elapsed().as_secs_f64();

    if let Some(path) = &options.dump_matrix {
        matrix.write_matrix_market(path)?;
    }

    let t1 = std::time::Instant::now();
    let (x, report) = solve_direct(&matrix, &rhs)?;
    let t_solve = t1.elapsed().as_secs_f64();

    let mut uhat = vec![[0.0; 3]; mesh.faces.len()];
    for f in 0..mesh.faces.len() {
        match face_dof[f] {
            Some(dof) => {
                for a in 0..nsd {
                    uhat[f][a] = x[dof * nsd + a];
                }
            }
            None => {
                let (e, j) = owner_local(mesh, f);
                let u_d = (problem.dirichlet)(geometry.faces[e][j].centroid);
                uhat[f][..nsd].copy_from_slice(&u_d[..nsd]);
            }
        }
    }
    let pressure: Vec<f64> = (0..n_cells).map(|e| x[n_vel + e]).collect();
    let pressure_multiplier = bordered.then(|| x[n_sys - 1]);

    let sqrt_nu = nu.sqrt();
    let mut coeffs = Vec::with_capacity(n_cells);
    let mut gradient = Vec::with_capacity(n_cells);
    let mut u_star = Vec::with_capacity(n_cells);
    for (e, local) in locals.iter().enumerate() {
        let vol = geometry.cells[e].volume;
        let mut c = local.m_inv_b;
        let mut grad = local.z;
        let mut alpha = 0.0;
        let mut beta = [0.0; 3];
        for a in 0..nsd {
            beta[a] = vol * local.source_at_centroid[a];
        }
        for (j, _) in local.faces.iter().enumerate() {
            let f = mesh.cell_faces[e][j];
            let fg = &geometry.faces[e][j];
            let u = uhat[f];
            if face_dof[f].is_some() {
                for a in 0..nsd {
                    for k in 0..m_order {
                        c[a][k] += tau * u[a] * local.m_inv_r[j][k];
                    }
                }
                for k in 0..nsd {
                    for l in 0..nsd {
                        grad[k][l] += fg.area * fg.normal[k] * u[l];
                    }
                }
            }
            alpha += fg.area * tau;
            for a in 0..nsd {
                beta[a] += fg.area * tau * u[a];
            }
        }
        for row in grad.iter_mut() {
            for v in row.iter_mut() {
                *v *= -sqrt_nu / vol;
            }
        }
        coeffs.push(c);
        gradient.push(grad);
        let mut us = [0.0; 3];
        for a in 0..nsd {
            us[a] = beta[a] / alpha;
        }
        u_star.push(us);
    }

    Ok(StokesSolution {
        uhat,
        face_dof,
        coeffs,
        gradient,
        pressure,
        u_star,
        n_dof: n_sys,
        pressure_multiplier,
        report,
        symmetry_defect_rel,
        t_assemble,
        t_solve,
    })
}

fn owner_local(mesh: &Mesh, face: usize) -> (usize, usize) {
    let e = mesh.faces[face].left;
    let j = mesh.cell_faces[e]
        .iter()
        .position(|&f| f == face)
        .expect("face missing from its owner");
    (e, j)
}

/// Worst cell-wise defect of the discrete incompressibility balance
/// sum_j |G_j| n_j . uhat_j = 0 (Dirichlet data folded into uhat).
pub fn incompressibility_defect(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    solution: &StokesSolution,
) -> f64 {
    let mut worst = 0.0f64;
    for e in 0..mesh.n_cells() {
        let mut total = 0.0;
        for (j, fg) in geometry.faces[e].iter().enumerate() {
            let u = solution.uhat[mesh.cell_faces[e][j]];
            for k in 0..mesh.nsd {
                total += fg.area * fg.normal[k] * u[k];
            }
        }
        worst = worst.max(total.abs());
    }
    worst
}
