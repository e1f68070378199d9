//! Exact cell and face geometry: measures, centroids, outward unit normals.
//!
//! All quantities come from the same simplex decompositions as the
//! quadrature module, so volumes, centroids, and moments are mutually
//! consistent and exact for planar-faced cells.  Construction fails on
//! non-positive sub-simplex volumes, non-planar quadrilateral faces, and
//! normals that do not point away from the cell centroid.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::Mesh;
use crate::quadrature::{
    face_sub_triangles, signed_simplex_measure, sub_simplices, triangle_area3,
};

#[derive(Debug, Clone)]
pub struct CellGeom {
    pub volume: f64,
    pub centroid: Point,
    /// Largest inter-vertex distance; the cell size h_e.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct FaceGeom {
    pub area: f64,
    pub centroid: Point,
    /// Unit normal, outward for the owning cell.
    pub normal: Point,
}

#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub cells: Vec<CellGeom>,
    /// Outward face geometry per cell per local face.
    pub faces: Vec<Vec<FaceGeom>>,
    /// Largest cell diameter.
    pub h: f64,
    /// Smallest edge length in the mesh.
    pub h_min_edge: f64,
    /// Largest per-cell max/min edge-length ratio.
    pub max_stretch: f64,
    pub total_volume: f64,
}

/// Planarity tolerance for quadrilateral faces: unit normals of the two
/// sub-triangles may deviate by at most this much.
const PLANARITY_TOL: f64 = 1e-9;

fn face_geometry(cell: usize, nsd: usize, pts: &[Point]) -> Result<FaceGeom> {
    if nsd == 2 {
        let t = geom::sub(pts[1], pts[0]);
        let len = geom::norm(t);
        if len <= 0.0 {
            return Err(Error::DegenerateCell {
                cell,
                reason: "zero-length edge".into(),
            });
        }
        return Ok(FaceGeom {
            area: len,
            centroid: geom::scale(geom::add(pts[0], pts[1]), 0.5),
            normal: [t[1] / len, -t[0] / len, 0.0],
        });
    }
    let tris = face_sub_triangles(pts.len());
    let mut area = 0.0;
    let mut centroid = [0.0; 3];
    let mut weighted_normal = [0.0; 3];
    let mut unit_normals = Vec::with_capacity(tris.len());
    for tri in tris {
        let (a, b, c) = (pts[tri[0]], pts[tri[1]], pts[tri[2]]);
        let cr = geom::cross(geom::sub(b, a), geom::sub(c, a));
        let tri_area = 0.5 * geom::norm(cr);
        if tri_area <= 0.0 {
            return Err(Error::DegenerateCell {
                cell,
                reason: "zero-area face triangle".into(),
            });
        }
        area += tri_area;
        centroid = geom::axpy(centroid, tri_area, geom::mean(&[a, b, c]));
        weighted_normal = geom::axpy(weighted_normal, 0.5, cr);
        unit_normals.push(geom::scale(cr, 0.5 / tri_area));
    }
    for pair in unit_normals.windows(2) {
        if geom::dot(pair[0], pair[1]) < 1.0 - PLANARITY_TOL {
            return Err(Error::DegenerateCell {
                cell,
                reason: "non-planar quadrilateral face".into(),
            });
        }
    }
    let normal = geom::normalize(weighted_normal, 0.0).unwrap();
    Ok(FaceGeom {
        area,
        centroid: geom::scale(centroid, 1.0 / area),
        normal,
    })
}

pub fn compute_geometry(mesh: &Mesh) -> Result<MeshGeometry> {
    let nsd = mesh.nsd;
    let mut cells = Vec::with_capacity(mesh.n_cells());
    let mut faces = Vec::with_capacity(mesh.n_cells());
    let mut h = 0.0f64;
    let mut h_min_edge = f64::INFINITY;
    let mut max_stretch = 0.0f64;
    let mut total_volume = 0.0;

    let mut pts: Vec<Point> = Vec::new();
    for (e, cell) in mesh.cells.iter().enumerate() {
        pts.clear();
        pts.extend(cell.verts.iter().map(|&v| mesh.vertices[v]));

        let mut volume = 0.0;
        let mut centroid = [0.0; 3];
        let mut simplex = [[0.0; 3]; 4];
        for tet in sub_simplices(cell.cell_type) {
            for (slot, &v) in simplex.iter_mut().zip(tet.iter()) {
                *slot = pts[v];
            }
            let v = signed_simplex_measure(nsd, &simplex[..tet.len()]);
            if v <= 0.0 {
                return Err(Error::DegenerateCell {
                    cell: e,
                    reason: format!("non-positive sub-simplex volume {v:e}"),
                });
            }
            volume += v;
            centroid = geom::axpy(centroid, v, geom::mean(&simplex[..tet.len()]));
        }
        centroid = geom::scale(centroid, 1.0 / volume);

        let mut diameter = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                diameter = diameter.max(geom::dist(pts[i], pts[j]));
            }
        }

        let mut cell_face_geoms = Vec::with_capacity(cell.cell_type.n_faces());
        let mut min_edge = f64::INFINITY;
        let mut max_edge = 0.0f64;
        for local in cell.cell_type.local_faces() {
            let face_pts: Vec<Point> = local.iter().map(|&l| pts[l]).collect();
            let fg = face_geometry(e, nsd, &face_pts)?;
            if geom::dot(geom::sub(fg.centroid, centroid), fg.normal) <= 0.0 {
                return Err(Error::DegenerateCell {
                    cell: e,
                    reason: "face normal does not point outward".into(),
                });
            }
            let n_edge_verts = if nsd == 2 { 1 } else { face_pts.len() };
            for k in 0..n_edge_verts {
                let l = geom::dist(face_pts[k], face_pts[(k + 1) % face_pts.len()]);
                min_edge = min_edge.min(l);
                max_edge = max_edge.max(l);
            }
            cell_face_geoms.push(fg);
        }

        h = h.max(diameter);
        h_min_edge = h_min_edge.min(min_edge);
        max_stretch = max_stretch.max(max_edge / min_edge);
        total_volume += volume;
        cells.push(CellGeom {
            volume,
            centroid,
            diameter,
        });
        faces.push(cell_face_geoms);
    }

    Ok(MeshGeometry {
        cells,
        faces,
        h,
        h_min_edge,
        max_stretch,
        total_volume,
    })
}

/// Area of a possibly split face, used by writers that need face measure
/// without the full geometry pass.
pub fn face_area(mesh: &Mesh, face: &crate::mesh::Face) -> f64 {
    let pts: Vec<Point> = face.verts.iter().map(|&v| mesh.vertices[v]).collect();
    if mesh.nsd == 2 {
        geom::dist(pts[0], pts[1])
    } else {
        face_sub_triangles(pts.len())
            .iter()
            .map(|t| triangle_area3(pts[t[0]], pts[t[1]], pts[t[2]]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Cell, CellType};

    #[test]
    fn right_triangle_geometry() {
        let mesh = Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![Cell {
                cell_type: CellType::Tri,
                verts: vec![0, 1, 2],
            }],
        )
        .unwrap();
        let g = compute_geometry(&mesh).unwrap();
        assert!((g.cells[0].volume - 0.5).abs() < 1e-15);
        assert!((g.cells[0].centroid[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.cells[0].centroid[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.cells[0].diameter - 2.0f64.sqrt()).abs() < 1e-15);
        // Bottom edge (0,1) must have outward normal (0,-1).
        let fg = &g.faces[0][0];
        assert!((fg.normal[0]).abs() < 1e-15 && (fg.normal[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_cube_normals_are_axis_aligned() {
        let mesh = Mesh::new(
            3,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 1.0],
            ],
            vec![Cell {
                cell_type: CellType::Hex,
                verts: (0..8).collect(),
            }],
        )
        .unwrap();
        let g = compute_geometry(&mesh).unwrap();
        assert!((g.cells[0].volume - 1.0).abs() < 1e-15);
        assert!((g.cells[0].diameter - 3.0f64.sqrt()).abs() < 1e-15);
        let expected = [
            [0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
        ];
        for (fg, want) in g.faces[0].iter().zip(expected) {
            assert!((fg.area - 1.0).abs() < 1e-15);
            for k in 0..3 {
                assert!((fg.normal[k] - want[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inverted_cell_is_rejected() {
        let mesh = Mesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
            vec![Cell {
                cell_type: CellType::Tri,
                verts: vec![0, 1, 2],
            }],
        )
        .unwrap();
        assert!(matches!(
            compute_geometry(&mesh),
            Err(Error::DegenerateCell { .. })
        ));
    }

    #[test]
    fn warped_quad_face_is_rejected() {
        let mut verts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        verts[6][2] = 1.3;
        let mesh = Mesh::new(
            3,
            verts,
            vec![Cell {
                cell_type: CellType::Hex,
                verts: (0..8).collect(),
            }],
        )
        .unwrap();
        assert!(matches!(
            compute_geometry(&mesh),
            Err(Error::DegenerateCell { .. })
        ));
    }
}
