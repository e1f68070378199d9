//! Random vertex perturbation that preserves face planarity.
//!
//! Two constructions cover all families.  The generic one displaces each
//! interior vertex by a draw from a ball bounded by a quarter of the
//! smallest mesh edge and of the vertex's smallest sub-simplex height,
//! projected onto the null space of its planarity constraints: for every
//! incident quadrilateral face the vertex must stay in the plane of the
//! face's other three vertices.  On a structured hexahedral grid those
//! constraints span all directions and freeze every vertex, so the hex
//! family instead tilts whole interior gridplanes and places each vertex
//! at the intersection of its three planes; faces stay planar because all
//! four corners share a gridplane.  In both cases the domain boundary and
//! its tags survive exactly.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::generate::MeshFamily;
use crate::mesh::geometry::compute_geometry;
use crate::mesh::Mesh;
use crate::quadrature;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistortStats {
    /// Vertices moved with no planarity constraint.
    pub moved_free: usize,
    /// Vertices moved inside a constrained subspace.
    pub moved_constrained: usize,
    /// Interior vertices frozen because constraints span all directions.
    pub frozen: usize,
}

/// Uniform draw from [-1, 1] built from the top 53 bits of the stream, so
/// the sequence is stable across rand_chacha versions.
fn unit_draw(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

fn draw_in_ball(rng: &mut ChaCha8Rng, nsd: usize, radius: f64) -> Point {
    loop {
        let mut d = [0.0; 3];
        for slot in d.iter_mut().take(nsd) {
            *slot = unit_draw(rng);
        }
        let n2 = geom::dot(d, d);
        if n2 <= 1.0 && n2 > 0.0 {
            return geom::scale(d, radius);
        }
    }
}

pub fn distort_mesh(mesh: &Mesh, seed: u64) -> Result<Mesh> {
    distort_mesh_with_stats(mesh, seed).map(|(m, _)| m)
}

/// Family-aware distortion entry point for generated meshes.
pub fn distort_family(family: MeshFamily, mesh: &Mesh, seed: u64) -> Result<Mesh> {
    if family == MeshFamily::Hex && mesh.nsd == 3 {
        distort_hex_grid(mesh, seed)
    } else {
        distort_mesh(mesh, seed)
    }
}

/// Distinct sorted values of one coordinate across all vertices.
fn axis_breakpoints(mesh: &Mesh, axis: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = mesh.vertices.iter().map(|p| p[axis]).collect();
    vals.sort_by(f64::total_cmp);
    let span = (vals.last().unwrap() - vals.first().unwrap()).max(1.0);
    let tol = 1e-9 * span;
    let mut out: Vec<f64> = Vec::new();
    for v in vals {
        if out.last().map_or(true, |&last| v - last > tol) {
            out.push(v);
        }
    }
    out
}

/// Distorts a structured hexahedral grid (uniform or graded tensor
/// lattice) by tilting and shifting every interior gridplane; vertex
/// (i,j,k) becomes the intersection of its three planes.  Boundary planes
/// stay fixed, so the domain is preserved, and every quad face remains
/// planar since its four corners lie on a common gridplane.  Each plane's
/// parameters are bounded by the smaller of its two neighbouring gaps so
/// no vertex moves farther than a quarter of that gap.
pub fn distort_hex_grid(mesh: &Mesh, seed: u64) -> Result<Mesh> {
    if mesh.nsd != 3 {
        return Err(Error::Mesh("hex grid distortion needs a 3D mesh".into()));
    }
    let grids: Vec<Vec<f64>> = (0..3).map(|axis| axis_breakpoints(mesh, axis)).collect();
    let n_cells_grid: usize = grids.iter().map(|g| g.len() - 1).product();
    let n_verts_grid: usize = grids.iter().map(|g| g.len()).product();
    if grids.iter().any(|g| g.len() < 2)
        || n_cells_grid != mesh.n_cells()
        || n_verts_grid != mesh.vertices.len()
    {
        return Err(Error::Mesh(format!(
            "cell count {} is not a tensor grid",
            mesh.n_cells()
        )));
    }
    let index_of = |axis: usize, x: f64| -> Result<usize> {
        let grid = &grids[axis];
        let m = match grid.binary_search_by(|probe| probe.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => {
                if i > 0 && (x - grid[i - 1]).abs() <= 1e-9 {
                    i - 1
                } else {
                    i
                }
            }
        };
        if m >= grid.len() || (x - grid[m]).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Mesh(
                "vertex off the lattice: not a structured hex grid".into(),
            ));
        }
        Ok(m)
    };

    // Plane a = const at interior index m: x_a + tb (x_b - mid_b) + tc
    // (x_c - mid_c) = c_a[m] + delta.  Draws scaled to keep the worst-case
    // vertex displacement (offset plus both tilt lever arms) strictly
    // under a quarter of the plane's narrower neighbouring gap.
    let mids: Vec<f64> = grids
        .iter()
        .map(|g| 0.5 * (g[0] + g[g.len() - 1]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planes: Vec<Vec<[f64; 3]>> = grids.iter().map(|g| vec![[0.0; 3]; g.len()]).collect();
    for axis in 0..3 {
        let grid = &grids[axis];
        for m in 1..grid.len() - 1 {
            let gap = (grid[m] - grid[m - 1]).min(grid[m + 1] - grid[m]);
            let amp = 0.9 * gap / 8.0;
            let delta = amp * unit_draw(&mut rng);
            let tb = amp * unit_draw(&mut rng);
            let tc = amp * unit_draw(&mut rng);
            planes[axis][m] = [delta, tb, tc];
        }
    }

    let mut vertices = mesh.vertices.clone();
    for v in vertices.iter_mut() {
        let idx = [
            index_of(0, v[0])?,
            index_of(1, v[1])?,
            index_of(2, v[2])?,
        ];
        // Rows of the 3x3 system: boundary planes are exact coordinate
        // planes, interior planes carry their tilt.
        let mut a = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        for axis in 0..3 {
            let m = idx[axis];
            let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
            a[axis][axis] = 1.0;
            if m == 0 || m == grids[axis].len() - 1 {
                rhs[axis] = grids[axis][m];
            } else {
                let [delta, tb, tc] = planes[axis][m];
                a[axis][b] = tb;
                a[axis][c] = tc;
                rhs[axis] = grids[axis][m] + delta + mids[b] * tb + mids[c] * tc;
            }
        }
        *v = solve3(&a, rhs)?;
    }

    let mut out = mesh.clone();
    out.vertices = vertices;
    compute_geometry(&out)?;
    Ok(out)
}

fn solve3(a: &[[f64; 3]; 3], b: [f64; 3]) -> Result<Point> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-12 {
        return Err(Error::Mesh("degenerate gridplane intersection".into()));
    }
    let mut x = [0.0; 3];
    for k in 0..3 {
        let mut m = *a;
        for row in 0..3 {
            m[row][k] = b[row];
        }
        let dk = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        x[k] = dk / det;
    }
    Ok(x)
}

/// Largest displacement of vertex v that keeps every sub-simplex it spans
/// positive: a quarter of its smallest height over incident sub-simplices.
/// Each of the nsd + 1 vertices of a simplex moving by at most 0.9 h_v / 4
/// changes the volume by at most 0.9 (nsd + 1) / 4 < 1 of itself, so the
/// decomposition used by the geometry module survives any combination of
/// draws.  Edge lengths alone are not enough: a flat pyramid has an apex
/// far closer to its base plane than any edge is short.
fn safe_vertex_radii(mesh: &Mesh) -> Vec<f64> {
    let mut safe = vec![f64::INFINITY; mesh.vertices.len()];
    let mut pts: Vec<Point> = Vec::new();
    for cell in &mesh.cells {
        pts.clear();
        pts.extend(cell.verts.iter().map(|&v| mesh.vertices[v]));
        for simplex in quadrature::sub_simplices(cell.cell_type) {
            let sub: Vec<Point> = simplex.iter().map(|&l| pts[l]).collect();
            let volume = quadrature::signed_simplex_measure(mesh.nsd, &sub).abs();
            for (j, &local) in simplex.iter().enumerate() {
                let others: Vec<Point> = (0..sub.len()).filter(|&k| k != j).map(|k| sub[k]).collect();
                let base = if mesh.nsd == 2 {
                    geom::dist(others[0], others[1])
                } else {
                    quadrature::triangle_area3(others[0], others[1], others[2])
                };
                if base > 0.0 {
                    let height = mesh.nsd as f64 * volume / base;
                    let slot = &mut safe[cell.verts[local]];
                    *slot = slot.min(height);
                }
            }
        }
    }
    safe
}

pub fn distort_mesh_with_stats(mesh: &Mesh, seed: u64) -> Result<(Mesh, DistortStats)> {
    let base_geom = compute_geometry(mesh)?;
    let radius = base_geom.h_min_edge / 4.0;
    let safe = safe_vertex_radii(mesh);
    let on_boundary = mesh.boundary_vertices();

    // Planarity constraint normals per vertex: for each incident
    // quadrilateral face, the unit normal of the plane through the other
    // three vertices.
    let mut constraints: Vec<Vec<Point>> = vec![Vec::new(); mesh.vertices.len()];
    if mesh.nsd == 3 {
        for face in &mesh.faces {
            if face.verts.len() != 4 {
                continue;
            }
            for (slot, &v) in face.verts.iter().enumerate() {
                if on_boundary[v] {
                    continue;
                }
                let others: Vec<Point> = face
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != slot)
                    .map(|(_, &w)| mesh.vertices[w])
                    .collect();
                let n = geom::cross(
                    geom::sub(others[1], others[0]),
                    geom::sub(others[2], others[0]),
                );
                if let Some(unit) = geom::normalize(n, 1e-14) {
                    constraints[v].push(unit);
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = DistortStats::default();
    let mut vertices = mesh.vertices.clone();
    for v in 0..vertices.len() {
        if on_boundary[v] {
            continue;
        }
        let mut d = draw_in_ball(&mut rng, mesh.nsd, radius.min(0.9 * safe[v] / 4.0));
        // Orthonormalise the constraint normals and subtract each component.
        let mut basis: Vec<Point> = Vec::new();
        for n in &constraints[v] {
            let mut r = *n;
            for b in &basis {
                r = geom::axpy(r, -geom::dot(r, *b), *b);
            }
            if let Some(unit) = geom::normalize(r, 1e-8) {
                basis.push(unit);
            }
        }
        if basis.len() >= mesh.nsd {
            stats.frozen += 1;
            continue;
        }
        for b in &basis {
            d = geom::axpy(d, -geom::dot(d, *b), *b);
        }
        if basis.is_empty() {
            stats.moved_free += 1;
        } else {
            stats.moved_constrained += 1;
        }
        vertices[v] = geom::add(vertices[v], d);
    }

    let mut out = mesh.clone();
    out.vertices = vertices;
    compute_geometry(&out)?;
    Ok((out, stats))
}
