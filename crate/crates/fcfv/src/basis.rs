//! Per-cell linear basis and its exact integrals.
//!
//! The basis on cell e is N_1 = 1 and N_k = x_{k-1} - xbar_{k-1} for
//! k = 2..=nsd+1, with xbar the volumetric centroid, so M = nsd + 1
//! coefficients describe a linear field: c_1 is the centroid value and c_k
//! the derivative along x_{k-1}.  Because xbar is the exact centroid, the
//! cell integrals of every N_k vanish identically.
//!
//! Face integrals r_j = int_face N dGamma obey r_j = |Gamma_j| p_j on
//! planar faces, where p_j has first entry 1 and then the face-centroid
//! offsets; this makes m = sum_j tau_j r_j p_j^T symmetric positive
//! definite for tau > 0 on any non-degenerate cell.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::geometry::FaceGeom;
use crate::mesh::CellType;
use crate::quadrature::cell_quadrature;

/// Maximum number of linear-basis coefficients (nsd + 1 in 3D).
pub const MAX_M: usize = 4;

/// Dense square matrix of order <= 4 with partial-pivot LU helpers.
#[derive(Debug, Clone, Copy)]
pub struct SmallMat {
    pub n: usize,
    pub a: [[f64; MAX_M]; MAX_M],
}

impl SmallMat {
    pub fn zeros(n: usize) -> SmallMat {
        SmallMat {
            n,
            a: [[0.0; MAX_M]; MAX_M],
        }
    }

    pub fn identity(n: usize) -> SmallMat {
        let mut m = SmallMat::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn add_outer(&mut self, scale: f64, left: &[f64], right: &[f64]) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i][j] += scale * left[i] * right[j];
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> [f64; MAX_M] {
        let mut y = [0.0; MAX_M];
        for i in 0..self.n {
            for j in 0..self.n {
                y[i] += self.a[i][j] * x[j];
            }
        }
        y
    }

    pub fn det(&self) -> f64 {
        let mut lu = *self;
        let mut det = 1.0;
        for col in 0..lu.n {
            let pivot = match lu.pivot(col) {
                Some(p) => p,
                None => return 0.0,
            };
            if pivot != col {
                lu.a.swap(pivot, col);
                det = -det;
            }
            det *= lu.a[col][col];
            lu.eliminate(col);
        }
        det
    }

    /// Inverse via column-wise LU solves; fails on numerically singular
    /// matrices.
    pub fn inverse(&self) -> Option<SmallMat> {
        let mut lu = *self;
        let mut perm = [0usize; MAX_M];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for col in 0..lu.n {
            let pivot = lu.pivot(col)?;
            if pivot != col {
                lu.a.swap(pivot, col);
                perm.swap(pivot, col);
            }
            lu.eliminate(col);
        }
        let mut inv = SmallMat::zeros(self.n);
        for rhs_col in 0..self.n {
            let mut b = [0.0; MAX_M];
            for i in 0..self.n {
                b[i] = if perm[i] == rhs_col { 1.0 } else { 0.0 };
            }
            // Forward substitution with unit lower triangle.
            for i in 0..self.n {
                for j in 0..i {
                    b[i] -= lu.a[i][j] * b[j];
                }
            }
            for i in (0..self.n).rev() {
                for j in (i + 1)..self.n {
                    b[i] -= lu.a[i][j] * b[j];
                }
                b[i] /= lu.a[i][i];
            }
            for i in 0..self.n {
                inv.a[i][rhs_col] = b[i];
            }
        }
        Some(inv)
    }

    /// Infinity-norm condition estimate ||A|| * ||A^-1||.
    pub fn cond_inf(&self) -> f64 {
        match self.inverse() {
            None => f64::INFINITY,
            Some(inv) => self.norm_inf() * inv.norm_inf(),
        }
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i][j].abs()).sum())
            .fold(0.0, f64::max)
    }

    fn pivot(&self, col: usize) -> Option<usize> {
        let mut best = col;
        for row in (col + 1)..self.n {
            if self.a[row][col].abs() > self.a[best][col].abs() {
                best = row;
            }
        }
        if self.a[best][col] == 0.0 {
            None
        } else {
            Some(best)
        }
    }

    fn eliminate(&mut self, col: usize) {
        for row in (col + 1)..self.n {
            let factor = self.a[row][col] / self.a[col][col];
            self.a[row][col] = factor;
            for j in (col + 1)..self.n {
                self.a[row][j] -= factor * self.a[col][j];
            }
        }
    }
}

/// Face integrals of the linear basis: r_I = int_face N_I dGamma and the
/// geometric vector p with p_1 = 1, p_k = face centroid offset.
#[derive(Debug, Clone, Copy)]
pub struct FaceBasisIntegrals {
    pub r: [f64; MAX_M],
    pub p: [f64; MAX_M],
}

/// Evaluates the linear basis at a point.
#[inline]
pub fn eval_linear(nsd: usize, centroid: Point, coeffs: &[f64], x: Point) -> f64 {
    let mut u = coeffs[0];
    for k in 0..nsd {
        u += coeffs[k + 1] * (x[k] - centroid[k]);
    }
    u
}

/// Gauss points and weights for the 2x2 tensor rule on [-1, 1]^2.
const GAUSS_2X2: [(f64, f64); 4] = [
    (-0.577_350_269_189_625_7, -0.577_350_269_189_625_7),
    (0.577_350_269_189_625_7, -0.577_350_269_189_625_7),
    (-0.577_350_269_189_625_7, 0.577_350_269_189_625_7),
    (0.577_350_269_189_625_7, 0.577_350_269_189_625_7),
];

/// Computes r and p for one face.  Segments and triangles are integrated
/// analytically through their midpoints; quadrilateral faces use the 2x2
/// tensor Gauss rule on the bilinear map, exact for planar quads, with the
/// area taken from the face geometry.
pub fn face_basis_integrals(
    nsd: usize,
    cell_centroid: Point,
    face_pts: &[Point],
    face_geom: &FaceGeom,
) -> FaceBasisIntegrals {
    let m = nsd + 1;
    let mut r = [0.0; MAX_M];
    let mut p = [0.0; MAX_M];
    p[0] = 1.0;
    r[0] = face_geom.area;
    for k in 0..nsd {
        p[k + 1] = face_geom.centroid[k] - cell_centroid[k];
    }
    match face_pts.len() {
        // Midpoint integration is exact for linear integrands.
        2 | 3 => {
            for k in 1..m {
                r[k] = face_geom.area * p[k];
            }
        }
        4 => {
            for (xi, eta) in GAUSS_2X2 {
                let shapes = [
                    0.25 * (1.0 - xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 + eta),
                    0.25 * (1.0 - xi) * (1.0 + eta),
                ];
                let d_xi = [
                    -0.25 * (1.0 - eta),
                    0.25 * (1.0 - eta),
                    0.25 * (1.0 + eta),
                    -0.25 * (1.0 + eta),
                ];
                let d_eta = [
                    -0.25 * (1.0 - xi),
                    -0.25 * (1.0 + xi),
                    0.25 * (1.0 + xi),
                    0.25 * (1.0 - xi),
                ];
                let mut x = [0.0; 3];
                let mut t_xi = [0.0; 3];
                let mut t_eta = [0.0; 3];
                for (v, pt) in face_pts.iter().enumerate() {
                    x = geom::axpy(x, shapes[v], *pt);
                    t_xi = geom::axpy(t_xi, d_xi[v], *pt);
                    t_eta = geom::axpy(t_eta, d_eta[v], *pt);
                }
                let jac = geom::norm(geom::cross(t_xi, t_eta));
                for k in 0..nsd {
                    r[k + 1] += jac * (x[k] - cell_centroid[k]);
                }
            }
        }
        n => panic!("faces must have 2, 3, or 4 vertices, got {n}"),
    }
    FaceBasisIntegrals { r, p }
}

/// Moments of a source against the basis: f_I = int_cell N_I s dOmega.
pub fn source_moments(
    nsd: usize,
    cell_type: CellType,
    pts: &[Point],
    centroid: Point,
    source: &dyn Fn(Point) -> f64,
    degree: usize,
) -> [f64; MAX_M] {
    let rule = cell_quadrature(cell_type, pts, nsd, degree);
    let mut f = [0.0; MAX_M];
    for (x, w) in rule.pts.iter().zip(&rule.wts) {
        let s = source(*x) * w;
        f[0] += s;
        for k in 0..nsd {
            f[k + 1] += s * (x[k] - centroid[k]);
        }
    }
    f
}

/// Second central moments S_kl = int (x_k - xbar_k)(x_l - xbar_l) dOmega,
/// exact via the degree-2 rule on each sub-simplex.
pub fn second_central_moments(
    nsd: usize,
    cell_type: CellType,
    pts: &[Point],
    centroid: Point,
) -> [[f64; 3]; 3] {
    let rule = cell_quadrature(cell_type, pts, nsd, 2);
    let mut s = [[0.0; 3]; 3];
    for (x, w) in rule.pts.iter().zip(&rule.wts) {
        let d = geom::sub(*x, centroid);
        for k in 0..nsd {
            for l in 0..nsd {
                s[k][l] += w * d[k] * d[l];
            }
        }
    }
    s
}

/// Local mass-like matrix m = sum_j tau |Gamma_j| p_j p_j^T together with
/// its inverse; errors out when the cell is too distorted to invert.
pub fn local_matrix(
    cell: usize,
    m_order: usize,
    tau: f64,
    faces: &[FaceBasisIntegrals],
) -> Result<(SmallMat, SmallMat)> {
    let mut m = SmallMat::zeros(m_order);
    for f in faces {
        m.add_outer(tau, &f.r, &f.p);
    }
    let cond = m.cond_inf();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::DegenerateCell {
            cell,
            reason: format!("local basis matrix condition {cond:.3e}"),
        });
    }
    let inv = m.inverse().unwrap();
    Ok((m, inv))
}

/// Legacy nodal local matrix for a 2D cell: unknowns at the nfn vertices,
/// each face contributing tau/4 |Gamma_j| a_j a_j^T with a_j the incidence
/// vector of the face's two endpoints.
pub fn legacy_nodal_matrix(n_verts: usize, tau: f64, edge_lengths: &[f64]) -> SmallMat {
    assert!(n_verts == 3 || n_verts == 4);
    assert_eq!(edge_lengths.len(), n_verts);
    let mut m = SmallMat::zeros(n_verts);
    for (j, len) in edge_lengths.iter().enumerate() {
        let mut a = [0.0; MAX_M];
        a[j] = 1.0;
        a[(j + 1) % n_verts] = 1.0;
        m.add_outer(tau / 4.0 * len, &a, &a);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::geometry::compute_geometry;
    use crate::mesh::{Cell, Mesh};

    fn unit_square() -> (Mesh, crate::mesh::geometry::MeshGeometry) {
        let mesh = Mesh::new(
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
        .unwrap();
        let g = compute_geometry(&mesh).unwrap();
        (mesh, g)
    }

    fn integrals_for(mesh: &Mesh, g: &crate::mesh::geometry::MeshGeometry) -> Vec<FaceBasisIntegrals> {
        let cell = &mesh.cells[0];
        cell.cell_type
            .local_faces()
            .iter()
            .enumerate()
            .map(|(j, local)| {
                let pts: Vec<Point> = local.iter().map(|&l| mesh.vertices[cell.verts[l]]).collect();
                face_basis_integrals(mesh.nsd, g.cells[0].centroid, &pts, &g.faces[0][j])
            })
            .collect()
    }

    #[test]
    fn unit_square_local_matrix_is_diag_4_half_half() {
        let (mesh, g) = unit_square();
        let faces = integrals_for(&mesh, &g);
        let (m, _) = local_matrix(0, 3, 1.0, &faces).unwrap();
        let want = [[4.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (m.a[i][j] - want[i][j]).abs() < 1e-14,
                    "m[{i}][{j}] = {}",
                    m.a[i][j]
                );
            }
        }
        assert!(m.det() > 1e-8);
    }

    #[test]
    fn face_centroid_identity_r_equals_area_p() {
        let mesh = Mesh::new(
            3,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.2, 0.3, 1.1],
            ],
            vec![Cell {
                cell_type: CellType::Pyr,
                verts: vec![0, 1, 2, 3, 4],
            }],
        )
        .unwrap();
        let g = compute_geometry(&mesh).unwrap();
        let faces = integrals_for(&mesh, &g);
        for f in &faces {
            for k in 0..4 {
                assert!(
                    (f.r[k] - f.r[0] * f.p[k]).abs() < 1e-13,
                    "r = {:?}, p = {:?}",
                    f.r,
                    f.p
                );
            }
        }
    }

    #[test]
    fn unit_square_source_moments_for_linear_source() {
        let (mesh, g) = unit_square();
        let f = source_moments(
            2,
            CellType::Qua,
            &mesh.vertices,
            g.cells[0].centroid,
            &|x| x[0],
            2,
        );
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert!((f[1] - 1.0 / 12.0).abs() < 1e-15);
        assert!(f[2].abs() < 1e-16);
    }

    #[test]
    fn basis_integrals_vanish_on_cells() {
        // int N_k dOmega = 0 because the centroid is volumetric; checked on
        // an irregular pyramid via the quadrature path.
        let pts = vec![
            [0.0, 0.0, 0.0],
            [1.3, 0.0, 0.0],
            [1.3, 0.9, 0.0],
            [0.0, 0.9, 0.0],
            [0.4, 0.5, 0.8],
        ];
        let (vol, cen) = crate::quadrature::cell_measure_centroid(CellType::Pyr, &pts, 3);
        let f = source_moments(3, CellType::Pyr, &pts, cen, &|_| 1.0, 2);
        assert!((f[0] - vol).abs() < 1e-14);
        for k in 1..4 {
            assert!(f[k].abs() < 1e-14, "moment {k} = {}", f[k]);
        }
    }

    #[test]
    fn second_moments_of_unit_square() {
        let (mesh, g) = unit_square();
        let s = second_central_moments(2, CellType::Qua, &mesh.vertices, g.cells[0].centroid);
        assert!((s[0][0] - 1.0 / 12.0).abs() < 1e-15);
        assert!((s[1][1] - 1.0 / 12.0).abs() < 1e-15);
        assert!(s[0][1].abs() < 1e-16);
    }

    #[test]
    fn small_mat_inverse_matches_identity() {
        let mut m = SmallMat::zeros(4);
        let vals = [
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.0, 0.2],
            [0.5, 0.0, 2.0, 0.1],
            [0.0, 0.2, 0.1, 1.5],
        ];
        m.a[..4].copy_from_slice(&vals);
        let inv = m.inverse().unwrap();
        for i in 0..4 {
            let mut e = [0.0; MAX_M];
            e[i] = 1.0;
            let col = inv.matvec(&e);
            let back = m.matvec(&col);
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((back[j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn legacy_triangle_determinant_and_quad_singularity() {
        // Triangle: det m = (tau^3/16) |G1||G2||G3|.
        let tau = 2.0;
        let lens = [0.7, 1.1, 0.9];
        let m = legacy_nodal_matrix(3, tau, &lens);
        let want = tau.powi(3) / 16.0 * lens.iter().product::<f64>();
        assert!((m.det() - want).abs() < 1e-14);

        // Quadrilateral: singular with null vector (1, -1, 1, -1).
        let m = legacy_nodal_matrix(4, tau, &[1.0, 1.0, 1.0, 1.0]);
        assert!(m.det().abs() < 1e-14);
        let null = [1.0, -1.0, 1.0, -1.0];
        let y = m.matvec(&null);
        for v in y.iter().take(4) {
            assert!(v.abs() < 1e-14);
        }
        let m = legacy_nodal_matrix(4, tau, &[1.0, 2.0, 1.0, 2.0]);
        assert!(m.det().abs() < 1e-13);
    }
}
