//! File formats: mesh JSON, VTK legacy ASCII export, study CSVs, the
//! size-field JSON for external remeshers, and the per-run manifest.
//!
//! Invariants: the mesh JSON schema is strict (unknown keys rejected,
//! version pinned to 1); interior faces are derived on load, never stored;
//! floating-point output uses 17 significant digits so a write/read
//! round-trip is bit-exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapt::AdaptHistoryRow;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{BoundaryTag, Cell, CellType, Mesh};
use crate::verify::{ConvergenceRow, TauSweepRow};

pub const MESH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    version: u32,
    nsd: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<CellDoc>,
    boundary: Vec<BoundaryDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    #[serde(rename = "type")]
    cell_type: CellType,
    verts: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    verts: Vec<usize>,
    tag: BoundaryTag,
}

fn mesh_to_doc(mesh: &Mesh) -> Result<MeshDoc> {
    let mut boundary = Vec::with_capacity(mesh.n_boundary_faces());
    for face in &mesh.faces {
        if face.is_boundary() {
            let tag = face.tag.ok_or_else(|| {
                Error::Mesh("cannot serialise a mesh with untagged boundary faces".into())
            })?;
            boundary.push(BoundaryDoc {
                verts: face.verts.clone(),
                tag,
            });
        }
    }
    Ok(MeshDoc {
        version: MESH_SCHEMA_VERSION,
        nsd: mesh.nsd,
        vertices: mesh
            .vertices
            .iter()
            .map(|v| v[..mesh.nsd].to_vec())
            .collect(),
        cells: mesh
            .cells
            .iter()
            .map(|c| CellDoc {
                cell_type: c.cell_type,
                verts: c.verts.clone(),
            })
            .collect(),
        boundary,
    })
}

/// Serialise a mesh to the version-1 JSON schema.
pub fn mesh_to_json(mesh: &Mesh) -> Result<String> {
    let doc = mesh_to_doc(mesh)?;
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    fs::write(path, mesh_to_json(mesh)?)?;
    Ok(())
}

/// Parse a version-1 mesh JSON document; unknown keys are rejected.
pub fn mesh_from_json(text: &str) -> Result<Mesh> {
    let doc: MeshDoc = serde_json::from_str(text)?;
    if doc.version != MESH_SCHEMA_VERSION {
        return Err(Error::Mesh(format!(
            "unsupported mesh schema version {} (expected {MESH_SCHEMA_VERSION})",
            doc.version
        )));
    }
    if doc.nsd != 2 && doc.nsd != 3 {
        return Err(Error::Mesh(format!("nsd must be 2 or 3, got {}", doc.nsd)));
    }
    let mut vertices = Vec::with_capacity(doc.vertices.len());
    for (i, v) in doc.vertices.iter().enumerate() {
        if v.len() != doc.nsd {
            return Err(Error::Mesh(format!(
                "vertex {i} has {} coordinates, expected {}",
                v.len(),
                doc.nsd
            )));
        }
        let mut p: Point = [0.0; 3];
        p[..doc.nsd].copy_from_slice(v);
        vertices.push(p);
    }
    let cells = doc
        .cells
        .into_iter()
        .map(|c| Cell {
            cell_type: c.cell_type,
            verts: c.verts,
        })
        .collect();
    let mut mesh = Mesh::new(doc.nsd, vertices, cells)?;
    let entries: Vec<(Vec<usize>, BoundaryTag)> = doc
        .boundary
        .into_iter()
        .map(|b| (b.verts, b.tag))
        .collect();
    mesh.set_boundary_tags(&entries)?;
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    mesh_from_json(&fs::read_to_string(path)?)
}

/// SHA-256 of the canonical JSON serialisation; ties size fields to the
/// mesh they were computed on.
pub fn mesh_checksum(mesh: &Mesh) -> Result<String> {
    let text = mesh_to_json(mesh)?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeFieldDoc {
    pub version: u32,
    pub mesh_checksum: String,
    pub iteration: usize,
    /// Per-vertex isotropic target sizes.
    pub sizes: Vec<f64>,
}

pub fn write_size_field(
    path: &Path,
    mesh: &Mesh,
    iteration: usize,
    sizes: &[f64],
) -> Result<()> {
    if sizes.len() != mesh.vertices.len() {
        return Err(Error::Adapt(format!(
            "size field has {} entries for {} vertices",
            sizes.len(),
            mesh.vertices.len()
        )));
    }
    let doc = SizeFieldDoc {
        version: 1,
        mesh_checksum: mesh_checksum(mesh)?,
        iteration,
        sizes: sizes.to_vec(),
    };
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn read_size_field(path: &Path) -> Result<SizeFieldDoc> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Cell-centred scalar and vector fields attached to a VTK export.
#[derive(Default)]
pub struct VtkCellData<'a> {
    pub scalars: Vec<(&'a str, &'a [f64])>,
    pub vectors: Vec<(&'a str, &'a [Point])>,
}

/// Legacy ASCII unstructured-grid export; one value per cell.
pub fn write_vtk(path: &Path, mesh: &Mesh, data: &VtkCellData) -> Result<()> {
    for (name, vals) in &data.scalars {
        if vals.len() != mesh.n_cells() {
            return Err(Error::Mesh(format!(
                "cell data '{name}' has {} values for {} cells",
                vals.len(),
                mesh.n_cells()
            )));
        }
    }
    for (name, vals) in &data.vectors {
        if vals.len() != mesh.n_cells() {
            return Err(Error::Mesh(format!(
                "cell data '{name}' has {} values for {} cells",
                vals.len(),
                mesh.n_cells()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("fcfv export\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {} double\n", mesh.vertices.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]));
    }
    let size: usize = mesh.cells.iter().map(|c| c.verts.len() + 1).sum();
    out.push_str(&format!("CELLS {} {}\n", mesh.n_cells(), size));
    for c in &mesh.cells {
        out.push_str(&c.verts.len().to_string());
        for &v in &c.verts {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out.push_str(&format!("CELL_TYPES {}\n", mesh.n_cells()));
    for c in &mesh.cells {
        out.push_str(&format!("{}\n", c.cell_type.vtk_id()));
    }
    if !data.scalars.is_empty() || !data.vectors.is_empty() {
        out.push_str(&format!("CELL_DATA {}\n", mesh.n_cells()));
        for (name, vals) in &data.scalars {
            out.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
            for v in *vals {
                out.push_str(&format!("{v:.16e}\n"));
            }
        }
        for (name, vals) in &data.vectors {
            out.push_str(&format!("VECTORS {name} double\n"));
            for v in *vals {
                out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Convergence-study CSV. The flux column is q for Poisson and L for
/// Stokes; pressure columns are empty for Poisson.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = String::from(
        "level,h,n_cells,n_trace_dof,err_u,err_flux,err_p,\
         t_assemble_s,t_solve_s,order_u,order_flux,order_p,\
         symmetry_defect_rel,incompressibility\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{},{},{:.16e},{:.16e},{},{:.6},{:.6},{},{},{},{:.3e},{}\n",
            r.level,
            r.h,
            r.n_cells,
            r.n_trace_dof,
            r.err_u,
            r.err_flux,
            csv_opt(r.err_p),
            r.t_assemble,
            r.t_solve,
            csv_opt(r.order_u),
            csv_opt(r.order_flux),
            csv_opt(r.order_p),
            r.symmetry_defect_rel,
            csv_opt(r.incompressibility),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_tau_sweep_csv(path: &Path, rows: &[TauSweepRow]) -> Result<()> {
    let mut out =
        String::from("tau,err_u,err_flux,err_p,symmetry_defect_rel,incompressibility\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{}\n",
            r.tau,
            r.err_u,
            r.err_flux,
            csv_opt(r.err_p),
            r.symmetry_defect_rel,
            csv_opt(r.incompressibility),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_adapt_csv(path: &Path, rows: &[AdaptHistoryRow]) -> Result<()> {
    let mut out = String::from("iter,n_cells,max_E,max_err_u_star,max_err_u,efficiency\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iter, r.n_cells, r.max_indicator, r.max_err_u_star, r.max_err_u, r.efficiency,
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-run manifest: config echo plus timings and produced files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "{}", serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}
