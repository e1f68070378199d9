//! Structured mesh families on the unit square and cube.
//!
//! `level` is the number of subdivisions per axis.  The hybrid families mix
//! types while staying conforming: in 2D the left half of the columns is
//! quadrilaterals and the rest triangles; in 3D the lower half of the domain
//! is hexahedral layers and the upper half is boxes split into six pyramids,
//! with the top pyramid of each uppermost box split into two tetrahedra.
//! All constructions keep quadrilateral faces exactly planar.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{Cell, CellType, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeshFamily {
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
    #[serde(rename = "HYBRID")]
    Hybrid,
}

impl MeshFamily {
    pub fn parse(s: &str) -> Result<MeshFamily> {
        match s.to_ascii_uppercase().as_str() {
            "TRI" => Ok(MeshFamily::Tri),
            "QUA" => Ok(MeshFamily::Qua),
            "TET" => Ok(MeshFamily::Tet),
            "HEX" => Ok(MeshFamily::Hex),
            "PRI" => Ok(MeshFamily::Pri),
            "PYR" => Ok(MeshFamily::Pyr),
            "HYBRID" => Ok(MeshFamily::Hybrid),
            _ => Err(Error::Config(format!("unknown cell family {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Tri => "TRI",
            MeshFamily::Qua => "QUA",
            MeshFamily::Tet => "TET",
            MeshFamily::Hex => "HEX",
            MeshFamily::Pri => "PRI",
            MeshFamily::Pyr => "PYR",
            MeshFamily::Hybrid => "HYBRID",
        }
    }
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid coordinate i/m, exact at both endpoints.
#[inline]
fn coord(i: usize, m: usize) -> f64 {
    i as f64 / m as f64
}

pub fn generate_structured_mesh(family: MeshFamily, nsd: usize, level: usize) -> Result<Mesh> {
    if level == 0 {
        return Err(Error::Config("mesh level must be at least 1".into()));
    }
    match (family, nsd) {
        (MeshFamily::Tri, 2) => generate_2d(level, Layout2d::Tri),
        (MeshFamily::Qua, 2) => generate_2d(level, Layout2d::Qua),
        (MeshFamily::Hybrid, 2) => generate_2d(level, Layout2d::Hybrid),
        (MeshFamily::Tet, 3) => generate_tet(level),
        (MeshFamily::Hex, 3) => generate_hex(level),
        (MeshFamily::Pri, 3) => generate_pri(level),
        (MeshFamily::Pyr, 3) => generate_pyr(level),
        (MeshFamily::Hybrid, 3) => generate_hybrid_3d(level),
        (f, _) => Err(Error::Config(format!(
            "family {f} is not available for nsd = {nsd}"
        ))),
    }
}

enum Layout2d {
    Tri,
    Qua,
    Hybrid,
}

fn generate_2d(n: usize, layout: Layout2d) -> Result<Mesh> {
    let m = n + 1;
    let v = |i: usize, j: usize| j * m + i;
    let mut vertices = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            vertices.push([coord(i, n), coord(j, n), 0.0]);
        }
    }
    // Quads occupy the left ceil(n/2) columns in the hybrid layout.
    let qua_cols = match layout {
        Layout2d::Tri => 0,
        Layout2d::Qua => n,
        Layout2d::Hybrid => n.div_ceil(2),
    };
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            if i < qua_cols {
                cells.push(Cell {
                    cell_type: CellType::Qua,
                    verts: vec![a, b, c, d],
                });
            } else {
                cells.push(Cell {
                    cell_type: CellType::Tri,
                    verts: vec![a, b, c],
                });
                cells.push(Cell {
                    cell_type: CellType::Tri,
                    verts: vec![a, c, d],
                });
            }
        }
    }
    Mesh::new(2, vertices, cells)
}

fn grid_3d(n: usize) -> (Vec<Point>, impl Fn(usize, usize, usize) -> usize) {
    let m = n + 1;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push([coord(i, n), coord(j, n), coord(k, n)]);
            }
        }
    }
    (vertices, move |i, j, k| (k * m + j) * m + i)
}

/// Corners of box (i,j,k) in the canonical hex order: bottom quad
/// counterclockwise seen from above, then the top quad above it.
fn box_corners(
    v: &impl Fn(usize, usize, usize) -> usize,
    i: usize,
    j: usize,
    k: usize,
) -> [usize; 8] {
    [
        v(i, j, k),
        v(i + 1, j, k),
        v(i + 1, j + 1, k),
        v(i, j + 1, k),
        v(i, j, k + 1),
        v(i + 1, j, k + 1),
        v(i + 1, j + 1, k + 1),
        v(i, j + 1, k + 1),
    ]
}

fn generate_hex(n: usize) -> Result<Mesh> {
    let (vertices, v) = grid_3d(n);
    let mut cells = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.push(Cell {
                    cell_type: CellType::Hex,
                    verts: box_corners(&v, i, j, k).to_vec(),
                });
            }
        }
    }
    Mesh::new(3, vertices, cells)
}

/// The six path tetrahedra of the Kuhn split share the main diagonal
/// c000-c111; identical splits in every box give a conforming mesh.  Each
/// axis order is paired with its permutation parity: odd paths come out
/// negatively oriented and need one vertex swap.
const KUHN_AXIS_ORDERS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([0, 2, 1], true),
    ([1, 0, 2], true),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([2, 1, 0], true),
];

fn generate_tet(n: usize) -> Result<Mesh> {
    let (vertices, v) = grid_3d(n);
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for (order, odd) in KUHN_AXIS_ORDERS {
                    let mut steps = [[0usize; 3]; 4];
                    for s in 1..4 {
                        steps[s] = steps[s - 1];
                        steps[s][order[s - 1]] += 1;
                    }
                    let mut verts: Vec<usize> = steps
                        .iter()
                        .map(|d| v(i + d[0], j + d[1], k + d[2]))
                        .collect();
                    if odd {
                        verts.swap(1, 2);
                    }
                    cells.push(Cell {
                        cell_type: CellType::Tet,
                        verts,
                    });
                }
            }
        }
    }
    Mesh::new(3, vertices, cells)
}

fn generate_pri(n: usize) -> Result<Mesh> {
    let (vertices, v) = grid_3d(n);
    let mut cells = Vec::with_capacity(2 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let c = box_corners(&v, i, j, k);
                // Split along the vertical plane through corners 0 and 2.
                cells.push(Cell {
                    cell_type: CellType::Pri,
                    verts: vec![c[0], c[1], c[2], c[4], c[5], c[6]],
                });
                cells.push(Cell {
                    cell_type: CellType::Pri,
                    verts: vec![c[0], c[2], c[3], c[4], c[6], c[7]],
                });
            }
        }
    }
    Mesh::new(3, vertices, cells)
}

/// Base quads of the six pyramids of a box, each ordered counterclockwise
/// as seen from the box centre so the apex closes the cell correctly.
fn pyramid_bases(c: &[usize; 8]) -> [[usize; 4]; 6] {
    [
        [c[0], c[1], c[2], c[3]], // bottom, inward +z
        [c[4], c[7], c[6], c[5]], // top, inward -z
        [c[0], c[4], c[5], c[1]], // y = y0, inward +y
        [c[3], c[2], c[6], c[7]], // y = y1, inward -y
        [c[0], c[3], c[7], c[4]], // x = x0, inward +x
        [c[1], c[5], c[6], c[2]], // x = x1, inward -x
    ]
}

fn generate_pyr(n: usize) -> Result<Mesh> {
    let (mut vertices, v) = grid_3d(n);
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let centre = vertices.len();
                vertices.push([
                    0.5 * (coord(i, n) + coord(i + 1, n)),
                    0.5 * (coord(j, n) + coord(j + 1, n)),
                    0.5 * (coord(k, n) + coord(k + 1, n)),
                ]);
                let c = box_corners(&v, i, j, k);
                for base in pyramid_bases(&c) {
                    cells.push(Cell {
                        cell_type: CellType::Pyr,
                        verts: vec![base[0], base[1], base[2], base[3], centre],
                    });
                }
            }
        }
    }
    Mesh::new(3, vertices, cells)
}

fn generate_hybrid_3d(n: usize) -> Result<Mesh> {
    // Grid of n x n columns and 2n vertical layers; the lower n layers are
    // hexahedra, the upper n layers are pyramid boxes.
    let m = n + 1;
    let mz = 2 * n + 1;
    let mut vertices = Vec::with_capacity(m * m * mz);
    for k in 0..mz {
        for j in 0..m {
            for i in 0..m {
                vertices.push([coord(i, n), coord(j, n), coord(k, 2 * n)]);
            }
        }
    }
    let v = move |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let mut cells = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.push(Cell {
                    cell_type: CellType::Hex,
                    verts: box_corners(&v, i, j, k).to_vec(),
                });
            }
        }
    }
    for k in n..2 * n {
        let top_layer = k == 2 * n - 1;
        for j in 0..n {
            for i in 0..n {
                let centre = vertices.len();
                vertices.push([
                    0.5 * (coord(i, n) + coord(i + 1, n)),
                    0.5 * (coord(j, n) + coord(j + 1, n)),
                    0.5 * (coord(k, 2 * n) + coord(k + 1, 2 * n)),
                ]);
                let c = box_corners(&v, i, j, k);
                let bases = pyramid_bases(&c);
                for (b, base) in bases.iter().enumerate() {
                    if top_layer && b == 1 {
                        // Split the pyramid under the top boundary face
                        // into two tetrahedra along the base diagonal.
                        cells.push(Cell {
                            cell_type: CellType::Tet,
                            verts: vec![base[0], base[1], base[2], centre],
                        });
                        cells.push(Cell {
                            cell_type: CellType::Tet,
                            verts: vec![base[0], base[2], base[3], centre],
                        });
                    } else {
                        cells.push(Cell {
                            cell_type: CellType::Pyr,
                            verts: vec![base[0], base[1], base[2], base[3], centre],
                        });
                    }
                }
            }
        }
    }
    Mesh::new(3, vertices, cells)
}
