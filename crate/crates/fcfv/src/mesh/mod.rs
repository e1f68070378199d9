//! Mesh types, canonical face tables, and face-topology extraction.
//!
//! Invariants established by `Mesh::new` and relied on everywhere else:
//! every interior face is shared by exactly two cells, every boundary face
//! belongs to exactly one cell and carries a boundary tag, and `cell_faces`
//! lists global face ids in the local face order of the canonical tables.
//! Local face tables are oriented so the induced normal points out of the
//! cell; 2D polygons are counterclockwise, 3D faces follow the right-hand
//! rule.  Points always carry three components with the third exactly zero
//! in 2D.

pub mod distort;
pub mod generate;
pub mod geometry;
pub mod stretch;
pub mod swimmer;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellType {
    #[serde(rename = "TRI")]
    Tri,
    #[serde(rename = "QUA")]
    Qua,
    #[serde(rename = "TET")]
    Tet,
    #[serde(rename = "HEX")]
    Hex,
    #[serde(rename = "PRI")]
    Pri,
    #[serde(rename = "PYR")]
    Pyr,
}

impl CellType {
    pub fn nsd(self) -> usize {
        match self {
            CellType::Tri | CellType::Qua => 2,
            _ => 3,
        }
    }

    pub fn n_verts(self) -> usize {
        match self {
            CellType::Tri => 3,
            CellType::Qua => 4,
            CellType::Tet => 4,
            CellType::Hex => 8,
            CellType::Pri => 6,
            CellType::Pyr => 5,
        }
    }

    /// Local faces with outward orientation.
    pub fn local_faces(self) -> &'static [&'static [usize]] {
        match self {
            CellType::Tri => &[&[0, 1], &[1, 2], &[2, 0]],
            CellType::Qua => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            CellType::Tet => &[&[0, 2, 1], &[0, 1, 3], &[1, 2, 3], &[0, 3, 2]],
            CellType::Hex => &[
                &[0, 3, 2, 1],
                &[4, 5, 6, 7],
                &[0, 1, 5, 4],
                &[1, 2, 6, 5],
                &[2, 3, 7, 6],
                &[3, 0, 4, 7],
            ],
            CellType::Pri => &[
                &[0, 2, 1],
                &[3, 4, 5],
                &[0, 1, 4, 3],
                &[1, 2, 5, 4],
                &[2, 0, 3, 5],
            ],
            CellType::Pyr => &[
                &[0, 3, 2, 1],
                &[0, 1, 4],
                &[1, 2, 4],
                &[2, 3, 4],
                &[3, 0, 4],
            ],
        }
    }

    pub fn n_faces(self) -> usize {
        self.local_faces().len()
    }

    pub fn vtk_id(self) -> u8 {
        match self {
            CellType::Tri => 5,
            CellType::Qua => 9,
            CellType::Tet => 10,
            CellType::Hex => 12,
            CellType::Pri => 13,
            CellType::Pyr => 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    #[serde(rename = "DIRICHLET")]
    Dirichlet,
    #[serde(rename = "NEUMANN")]
    Neumann,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "type")]
    pub cell_type: CellType,
    pub verts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Vertex ids in the outward orientation of the `left` cell.
    pub verts: Vec<usize>,
    pub left: usize,
    pub right: Option<usize>,
    /// Present exactly on boundary faces.
    pub tag: Option<BoundaryTag>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// How to assign boundary tags to the boundary faces of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryRule {
    AllDirichlet,
    /// Neumann on boundary faces whose vertices all satisfy
    /// `|x[axis] - value| <= 1e-12`, Dirichlet elsewhere.
    NeumannOnPlane { axis: usize, value: f64 },
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nsd: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Global face id per cell per local face, in canonical local order.
    pub cell_faces: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds the face topology; all boundary faces start as Dirichlet.
    pub fn new(nsd: usize, vertices: Vec<Point>, cells: Vec<Cell>) -> Result<Mesh> {
        if nsd != 2 && nsd != 3 {
            return Err(Error::Mesh(format!("nsd must be 2 or 3, got {nsd}")));
        }
        for (e, cell) in cells.iter().enumerate() {
            if cell.cell_type.nsd() != nsd {
                return Err(Error::UnsupportedCellType {
                    cell_type: cell.cell_type,
                    nsd,
                });
            }
            if cell.verts.len() != cell.cell_type.n_verts() {
                return Err(Error::Mesh(format!(
                    "cell {e} has {} vertices, {:?} needs {}",
                    cell.verts.len(),
                    cell.cell_type,
                    cell.cell_type.n_verts()
                )));
            }
            if cell.verts.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("cell {e} references a missing vertex")));
            }
        }
        if nsd == 2 {
            for (v, p) in vertices.iter().enumerate() {
                if p[2] != 0.0 {
                    return Err(Error::Mesh(format!(
                        "vertex {v} has nonzero third component in a 2D mesh"
                    )));
                }
            }
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut cell_faces: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
        for (e, cell) in cells.iter().enumerate() {
            let mut ids = Vec::with_capacity(cell.cell_type.n_faces());
            for local in cell.cell_type.local_faces() {
                let verts: Vec<usize> = local.iter().map(|&l| cell.verts[l]).collect();
                let mut key = verts.clone();
                key.sort_unstable();
                match lookup.get(&key) {
                    None => {
                        let id = faces.len();
                        lookup.insert(key, id);
                        faces.push(Face {
                            verts,
                            left: e,
                            right: None,
                            tag: Some(BoundaryTag::Dirichlet),
                        });
                        ids.push(id);
                    }
                    Some(&id) => {
                        if faces[id].right.is_some() {
                            return Err(Error::Mesh(format!(
                                "face {:?} shared by more than two cells",
                                faces[id].verts
                            )));
                        }
                        faces[id].right = Some(e);
                        faces[id].tag = None;
                        ids.push(id);
                    }
                }
            }
            cell_faces.push(ids);
        }

        Ok(Mesh {
            nsd,
            vertices,
            cells,
            faces,
            cell_faces,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// Retags boundary faces according to `rule`.
    pub fn apply_boundary_rule(&mut self, rule: BoundaryRule) -> Result<()> {
        if let BoundaryRule::NeumannOnPlane { axis, .. } = rule {
            if axis >= self.nsd {
                return Err(Error::Config(format!(
                    "boundary rule axis {axis} out of range for nsd = {}",
                    self.nsd
                )));
            }
        }
        let vertices = &self.vertices;
        for face in self.faces.iter_mut().filter(|f| f.is_boundary()) {
            let tag = match rule {
                BoundaryRule::AllDirichlet => BoundaryTag::Dirichlet,
                BoundaryRule::NeumannOnPlane { axis, value } => {
                    let on_plane = face
                        .verts
                        .iter()
                        .all(|&v| (vertices[v][axis] - value).abs() <= 1e-12);
                    if on_plane {
                        BoundaryTag::Neumann
                    } else {
                        BoundaryTag::Dirichlet
                    }
                }
            };
            face.tag = Some(tag);
        }
        Ok(())
    }

    /// Applies explicit boundary tags keyed by the face vertex set.  Every
    /// entry must name an actual boundary face and every boundary face must
    /// be covered.
    pub fn set_boundary_tags(&mut self, entries: &[(Vec<usize>, BoundaryTag)]) -> Result<()> {
        let mut by_key: HashMap<Vec<usize>, usize> = HashMap::new();
        for (id, face) in self.faces.iter().enumerate() {
            if face.is_boundary() {
                let mut key = face.verts.clone();
                key.sort_unstable();
                by_key.insert(key, id);
            }
        }
        let mut covered = vec![false; self.faces.len()];
        for (verts, tag) in entries {
            let mut key = verts.clone();
            key.sort_unstable();
            let id = *by_key.get(&key).ok_or_else(|| {
                Error::Mesh(format!("boundary entry {verts:?} is not a boundary face"))
            })?;
            if covered[id] {
                return Err(Error::Mesh(format!(
                    "boundary entry {verts:?} listed more than once"
                )));
            }
            covered[id] = true;
            self.faces[id].tag = Some(*tag);
        }
        for (key, id) in &by_key {
            if !covered[*id] {
                return Err(Error::Mesh(format!(
                    "boundary face {key:?} has no tag entry"
                )));
            }
        }
        Ok(())
    }

    /// Vertex ids that lie on the domain boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on_boundary = vec![false; self.vertices.len()];
        for face in self.faces.iter().filter(|f| f.is_boundary()) {
            for &v in &face.verts {
                on_boundary[v] = true;
            }
        }
        on_boundary
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        let cells = vec![
            Cell {
                cell_type: CellType::Tri,
                verts: vec![0, 1, 2],
            },
            Cell {
                cell_type: CellType::Tri,
                verts: vec![0, 2, 3],
            },
        ];
        Mesh::new(2, vertices, cells).unwrap()
    }

    #[test]
    fn interior_face_is_shared_once() {
        let mesh = two_triangles();
        assert_eq!(mesh.faces.len(), 5);
        let interior: Vec<_> = mesh.faces.iter().filter(|f| !f.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].left, 0);
        assert_eq!(interior[0].right, Some(1));
        assert_eq!(mesh.n_boundary_faces(), 4);
    }

    #[test]
    fn neumann_plane_rule_tags_bottom_edge() {
        let mut mesh = two_triangles();
        mesh.apply_boundary_rule(BoundaryRule::NeumannOnPlane { axis: 1, value: 0.0 })
            .unwrap();
        let neumann: Vec<_> = mesh
            .faces
            .iter()
            .filter(|f| f.tag == Some(BoundaryTag::Neumann))
            .collect();
        assert_eq!(neumann.len(), 1);
        let mut verts = neumann[0].verts.clone();
        verts.sort_unstable();
        assert_eq!(verts, vec![0, 1]);
    }

    #[test]
    fn non_manifold_mesh_is_rejected() {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [2.0, 1.0, 0.0],
        ];
        let tri = |a, b, c| Cell {
            cell_type: CellType::Tri,
            verts: vec![a, b, c],
        };
        let err = Mesh::new(2, vertices, vec![tri(0, 1, 2), tri(0, 2, 3), tri(0, 2, 4)])
            .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }

    #[test]
    fn boundary_tag_entries_must_cover_all_faces() {
        let mut mesh = two_triangles();
        let err = mesh
            .set_boundary_tags(&[(vec![0, 1], BoundaryTag::Neumann)])
            .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }
}
