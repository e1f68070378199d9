//! Cheap local error indicator and automatic mesh adaptation.
//!
//! The indicator per cell is the root mean square gap between the linear
//! reconstruction u_h = c . N and the superconvergent constant recovery
//! u*:
//!
//!   E_e^2 = (c_1 - u*)^2 + |W|^-1 c' S c',
//!
//! with S the matrix of second central moments, so E_e equals the cell
//! RMS of u_h - u* exactly (the cross term vanishes because the centred
//! basis has zero mean).  Vector problems take the RMS over components.
//! Cell sizes are driven by the Richardson-style update
//!
//!   h_e* = h_e (eps / E_e)^(1 / (1 + nsd/2)),
//!
//! clamped to [h_e/2, 2 h_e] per step (E_e = 0 requests 2 h_e).  On
//! triangular meshes the loop refines and coarsens in place through
//! newest-vertex bisection; other cell types get a per-vertex size field
//! to regenerate the mesh externally and resume.

pub mod bisect;

use std::collections::HashMap;

use crate::basis::{second_central_moments, MAX_M};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::geometry::{compute_geometry, MeshGeometry};
use crate::mesh::{CellType, Mesh};
use crate::poisson::{solve_poisson, PoissonProblem, PoissonSolution, SolverOptions};
use crate::verify::cell_rms_scalar;
use crate::ScalarField;
use bisect::Forest;

/// RMS indicator per cell for a scalar solution.
pub fn error_indicator(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    coeffs: &[[f64; MAX_M]],
    u_star: &[f64],
) -> Vec<f64> {
    let nsd = mesh.nsd;
    let mut out = Vec::with_capacity(mesh.n_cells());
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let s = second_central_moments(nsd, cell.cell_type, &pts, cg.centroid);
        let c = &coeffs[e];
        let mut quad = 0.0;
        for k in 0..nsd {
            for l in 0..nsd {
                quad += c[k + 1] * s[k][l] * c[l + 1];
            }
        }
        let mean_gap = c[0] - u_star[e];
        out.push((mean_gap * mean_gap + quad / cg.volume).max(0.0).sqrt());
    }
    out
}

/// RMS-over-components indicator per cell for a vector solution.
pub fn error_indicator_vector(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    coeffs: &[[[f64; MAX_M]; 3]],
    u_star: &[[f64; 3]],
) -> Vec<f64> {
    let nsd = mesh.nsd;
    let mut out = Vec::with_capacity(mesh.n_cells());
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let s = second_central_moments(nsd, cell.cell_type, &pts, cg.centroid);
        let mut total = 0.0;
        for a in 0..nsd {
            let c = &coeffs[e][a];
            let mut quad = 0.0;
            for k in 0..nsd {
                for l in 0..nsd {
                    quad += c[k + 1] * s[k][l] * c[l + 1];
                }
            }
            let mean_gap = c[0] - u_star[e][a];
            total += mean_gap * mean_gap + quad / cg.volume;
        }
        out.push((total / nsd as f64).max(0.0).sqrt());
    }
    out
}

/// Richardson size update, clamped to one halving or doubling per step.
pub fn target_size(h: f64, indicator: f64, epsilon: f64, nsd: usize) -> f64 {
    if indicator <= 0.0 {
        return 2.0 * h;
    }
    let exponent = 1.0 / (1.0 + nsd as f64 / 2.0);
    let ratio = (epsilon / indicator).powf(exponent);
    h * ratio.clamp(0.5, 2.0)
}

/// Per-vertex target sizes: inverse-distance weighted average of the
/// incident cell targets, measured to the cell centroids.
pub fn vertex_size_field(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    target_h: &[f64],
) -> Vec<f64> {
    let mut weight = vec![0.0; mesh.vertices.len()];
    let mut accum = vec![0.0; mesh.vertices.len()];
    for (e, cell) in mesh.cells.iter().enumerate() {
        let cen = geometry.cells[e].centroid;
        for &v in &cell.verts {
            let d = geom::dist(mesh.vertices[v], cen).max(1e-30);
            weight[v] += 1.0 / d;
            accum[v] += target_h[e] / d;
        }
    }
    accum
        .iter()
        .zip(&weight)
        .map(|(a, w)| if *w > 0.0 { a / w } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AdaptHistoryRow {
    pub iter: usize,
    pub n_cells: usize,
    pub max_indicator: f64,
    /// Worst cell RMS of u* - u against the exact solution.
    pub max_err_u_star: f64,
    /// Worst cell RMS of the linear reconstruction against the exact
    /// solution.
    pub max_err_u: f64,
    /// max_err_u_star / max_indicator.
    pub efficiency: f64,
}

pub struct AdaptOutcome {
    pub history: Vec<AdaptHistoryRow>,
    pub converged: bool,
    pub mesh: Mesh,
    pub indicator: Vec<f64>,
    pub target_h: Vec<f64>,
    pub solution: PoissonSolution,
}

const MAX_ADAPT_CELLS: usize = 500_000;
/// Quadrature degree for the exact-error columns of the history.
const ERROR_DEGREE: usize = 4;

fn history_row(
    iter: usize,
    mesh: &Mesh,
    geometry: &MeshGeometry,
    solution: &PoissonSolution,
    indicator: &[f64],
    exact: &ScalarField,
) -> AdaptHistoryRow {
    let mut max_err_u_star = 0.0f64;
    let mut max_err_u = 0.0f64;
    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts: Vec<Point> = cell.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let cg = &geometry.cells[e];
        let star = solution.u_star[e];
        let exact = exact.clone();
        let err_star = cell_rms_scalar(
            mesh.nsd,
            cell.cell_type,
            &pts,
            cg.volume,
            &|x| star - exact(x),
            ERROR_DEGREE,
        );
        let c = solution.coeffs[e];
        let cen = cg.centroid;
        let nsd = mesh.nsd;
        let err_lin = cell_rms_scalar(
            mesh.nsd,
            cell.cell_type,
            &pts,
            cg.volume,
            &|x| {
                let mut v = c[0];
                for k in 0..nsd {
                    v += c[k + 1] * (x[k] - cen[k]);
                }
                v - exact(x)
            },
            ERROR_DEGREE,
        );
        max_err_u_star = max_err_u_star.max(err_star);
        max_err_u = max_err_u.max(err_lin);
    }
    let max_indicator = indicator.iter().cloned().fold(0.0f64, f64::max);
    AdaptHistoryRow {
        iter,
        n_cells: mesh.n_cells(),
        max_indicator,
        max_err_u_star,
        max_err_u,
        efficiency: if max_indicator > 0.0 {
            max_err_u_star / max_indicator
        } else {
            f64::NAN
        },
    }
}

/// One solve + indicator pass on a fixed mesh; the building block of the
/// adaptive loop, also used directly for non-triangular meshes.
pub fn indicate(
    mesh: &Mesh,
    problem: &PoissonProblem,
    exact: &ScalarField,
    epsilon: f64,
    options: &SolverOptions,
) -> Result<(MeshGeometry, PoissonSolution, Vec<f64>, Vec<f64>, AdaptHistoryRow)> {
    let geometry = compute_geometry(mesh)?;
    let solution = solve_poisson(mesh, &geometry, problem, options)?;
    let indicator = error_indicator(mesh, &geometry, &solution.coeffs, &solution.u_star);
    let target_h: Vec<f64> = indicator
        .iter()
        .enumerate()
        .map(|(e, &ind)| target_size(geometry.cells[e].diameter, ind, epsilon, mesh.nsd))
        .collect();
    let row = history_row(0, mesh, &geometry, &solution, &indicator, exact);
    Ok((geometry, solution, indicator, target_h, row))
}

/// Bisect every leaf whose diameter exceeds its target size, inheriting
/// targets through bisections (including those forced by conformity),
/// until the whole forest satisfies its size field.
fn refine_to_targets(
    forest: &mut Forest,
    targets: &mut HashMap<usize, f64>,
    epsilon: f64,
) -> Result<()> {
    loop {
        // Push targets down to leaves created since they were assigned.
        let assigned: Vec<usize> = targets.keys().copied().collect();
        for id in assigned {
            let t = targets[&id];
            let mut stack = vec![id];
            while let Some(n) = stack.pop() {
                match forest.children_of(n) {
                    Some([a, b]) => {
                        stack.push(a);
                        stack.push(b);
                    }
                    None => {
                        targets.entry(n).or_insert(t);
                    }
                }
            }
        }
        // Slack covers exact diameter-halving ties.
        let marked: Vec<usize> = forest
            .active()
            .into_iter()
            .filter(|&id| {
                targets
                    .get(&id)
                    .is_some_and(|&t| forest.diameter(id) > t * (1.0 + 1e-12))
            })
            .collect();
        if marked.is_empty() {
            return Ok(());
        }
        forest.refine_nodes(&marked)?;
        if forest.n_active() > MAX_ADAPT_CELLS {
            return Err(Error::Adapt(format!(
                "adaptation exceeded {MAX_ADAPT_CELLS} cells without reaching the \
                 tolerance {epsilon}"
            )));
        }
    }
}

/// Adaptive solve on a triangular mesh: bisect until each cell meets its
/// Richardson target size, coarsen where the target requests growth by
/// two, stop when the worst indicator satisfies the tolerance.
pub fn adapt_poisson(
    mesh: &Mesh,
    problem: &PoissonProblem,
    exact: &ScalarField,
    epsilon: f64,
    max_iters: usize,
    options: &SolverOptions,
) -> Result<AdaptOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "adaptation tolerance must be positive, got {epsilon}"
        )));
    }
    if mesh.nsd != 2 || mesh.cells.iter().any(|c| c.cell_type != CellType::Tri) {
        return Err(Error::Adapt(
            "in-place adaptation needs a 2d TRI mesh; use the size-field export \
             for other cell types"
                .into(),
        ));
    }
    let mut forest = Forest::from_mesh(mesh)?;
    let mut history = Vec::new();
    // Coarsening threshold: the unclamped target reaches 2h when
    // E <= eps / 2^(1 + nsd/2).
    let coarsen_below = epsilon / 2f64.powf(1.0 + mesh.nsd as f64 / 2.0);

    let mut current = forest.to_mesh()?;
    for iter in 0..=max_iters {
        // The active id list and the mesh cells share one ordering, so
        // per-cell indicators map directly onto forest nodes.
        let ids = forest.active();
        let (_, solution, indicator, target_h, mut row) =
            indicate(&current, problem, exact, epsilon, options)?;
        row.iter = iter;
        let max_indicator = row.max_indicator;
        history.push(row);
        if max_indicator <= epsilon || iter == max_iters {
            return Ok(AdaptOutcome {
                history,
                converged: max_indicator <= epsilon,
                mesh: current,
                indicator,
                target_h,
                solution,
            });
        }
        let coarsen_ids: std::collections::HashSet<usize> = ids
            .iter()
            .zip(&indicator)
            .filter(|&(_, &e)| e <= coarsen_below)
            .map(|(&id, _)| id)
            .collect();
        // Coarsening cannot disturb refine candidates: undoing a
        // bisection needs both children marked, and the indicator bands
        // are disjoint.
        forest.coarsen_nodes(&coarsen_ids);
        let still: std::collections::HashSet<usize> = forest.active().into_iter().collect();
        let mut targets: HashMap<usize, f64> = ids
            .iter()
            .zip(&target_h)
            .filter(|(id, _)| still.contains(id))
            .map(|(&id, &t)| (id, t))
            .collect();
        refine_to_targets(&mut forest, &mut targets, epsilon)?;
        current = forest.to_mesh()?;
    }
    unreachable!("loop returns on the final iteration");
}
