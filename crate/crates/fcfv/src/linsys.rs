//! Sparse assembly and linear solves.
//!
//! Assembly goes through a triplet list compressed to CSC with a stable
//! sort, so duplicate entries are summed in insertion order and repeated
//! runs produce bit-identical matrices.  The direct path is a sparse LU
//! factorization run sequentially; solutions are checked against a relative
//! residual of 1e-10 with at most one step of iterative refinement.  A
//! Jacobi-preconditioned conjugate-gradient path is available for symmetric
//! positive definite systems.

use std::io::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Residual threshold that triggers one refinement step.
const REFINE_TRIGGER: f64 = 1e-11;
/// Largest acceptable relative residual of a direct solve.
const RESIDUAL_LIMIT: f64 = 1e-10;
/// Default conjugate-gradient convergence tolerance.
pub const DEFAULT_CG_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Triplets {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, val));
    }

    pub fn nnz_entries(&self) -> usize {
        self.entries.len()
    }

    /// Compresses to CSC, summing duplicates in insertion order.
    pub fn compress(&self) -> CscMatrix {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&k| (self.entries[k].1, self.entries[k].0));
        let mut col_ptr = vec![0usize; self.ncols + 1];
        let mut row_idx = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c, v) = self.entries[k];
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                vals.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..self.ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            vals,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for c in 0..self.ncols {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.vals[k] * xc;
            }
        }
        y
    }

    /// Largest absolute difference between A and A^T; zero for exactly
    /// symmetric assembly.
    pub fn symmetry_defect(&self) -> f64 {
        use std::collections::HashMap;
        let mut map: HashMap<(usize, usize), f64> = HashMap::with_capacity(self.nnz());
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                map.insert((self.row_idx[k], c), self.vals[k]);
            }
        }
        let mut defect = 0.0f64;
        for (&(r, c), &v) in &map {
            let vt = map.get(&(c, r)).copied().unwrap_or(0.0);
            defect = defect.max((v - vt).abs());
        }
        defect
    }

    /// Symmetry defect relative to the largest entry magnitude.
    pub fn symmetry_defect_rel(&self) -> f64 {
        let max_abs = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs > 0.0 {
            self.symmetry_defect() / max_abs
        } else {
            0.0
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut triplets = Vec::with_capacity(self.nnz());
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                triplets.push(Triplet::new(self.row_idx[k], c, self.vals[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("sparse matrix creation failed: {e:?}")))
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, path: &std::path::Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for c in 0..self.ncols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                writeln!(out, "{} {} {:.16e}", self.row_idx[k] + 1, c + 1, self.vals[k])?;
            }
        }
        Ok(())
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub n: usize,
    pub nnz: usize,
    pub rel_residual: f64,
    pub refinement_steps: usize,
    pub method: &'static str,
    pub iterations: usize,
}

/// Direct sparse LU solve with residual check and one refinement step.
pub fn solve_direct(a: &CscMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    if a.nrows != a.ncols || a.nrows != b.len() {
        return Err(Error::Solver(format!(
            "system shape mismatch: {}x{} with rhs {}",
            a.nrows,
            a.ncols,
            b.len()
        )));
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let mat = a.to_faer()?;
    let symbolic = SymbolicLu::try_new(mat.symbolic())
        .map_err(|e| Error::Solver(format!("symbolic LU failed: {e:?}")))?;
    // The numeric factorisation panics on structurally singular pivots
    // instead of returning an error, so fence it off.
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        Lu::try_new_with_symbolic(symbolic, mat.as_ref())
    }))
    .map_err(|_| Error::Solver("numeric LU failed: singular matrix".into()))?
    .map_err(|e| Error::Solver(format!("numeric LU failed: {e:?}")))?;

    let b_norm = norm2(b);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut x = b.to_vec();
    lu.solve_in_place(faer::MatMut::from_column_major_slice_mut(
        &mut x,
        b.len(),
        1,
    ));

    let mut residual: Vec<f64> = a
        .matvec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| bi - ax)
        .collect();
    let mut rel = norm2(&residual) / scale;
    let mut refinement_steps = 0;
    if rel > REFINE_TRIGGER {
        lu.solve_in_place(faer::MatMut::from_column_major_slice_mut(
            &mut residual,
            b.len(),
            1,
        ));
        for (xi, di) in x.iter_mut().zip(&residual) {
            *xi += di;
        }
        residual = a
            .matvec(&x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| bi - ax)
            .collect();
        rel = norm2(&residual) / scale;
        refinement_steps = 1;
    }
    if !rel.is_finite() || rel > RESIDUAL_LIMIT {
        return Err(Error::Solver(format!(
            "direct solve residual {rel:.3e} exceeds {RESIDUAL_LIMIT:.1e}"
        )));
    }
    Ok((
        x,
        SolveReport {
            n: a.nrows,
            nnz: a.nnz(),
            rel_residual: rel,
            refinement_steps,
            method: "sparse-lu",
            iterations: 0,
        },
    ))
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.  The positive
/// diagonal is verified up front; breakdown or stagnation is reported as a
/// solver failure suggesting the direct path.
pub fn solve_cg(a: &CscMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    if a.nrows != a.ncols || a.nrows != b.len() {
        return Err(Error::Solver("system shape mismatch".into()));
    }
    let n = a.nrows;
    let mut diag = vec![0.0; n];
    for c in 0..n {
        for k in a.col_ptr[c]..a.col_ptr[c + 1] {
            if a.row_idx[k] == c {
                diag[c] = a.vals[k];
            }
        }
    }
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solver(
            "cg requires a positive diagonal; use the direct solver".into(),
        ));
    }
    let b_norm = norm2(b);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for iter in 0..max_iter {
        if norm2(&r) / scale <= tol {
            return Ok((
                x,
                SolveReport {
                    n,
                    nnz: a.nnz(),
                    rel_residual: norm2(&r) / scale,
                    refinement_steps: 0,
                    method: "cg-jacobi",
                    iterations: iter,
                },
            ));
        }
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver(
                "cg breakdown: matrix is not positive definite; use the direct solver".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "cg failed to converge in {max_iter} iterations; use the direct solver"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draw(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn duplicates_are_summed_in_insertion_order() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 2.0);
        t.push(0, 0, 3.0);
        let a = t.compress();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![4.0, 2.0]);
    }

    #[test]
    fn two_by_two_solve() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 3.0);
        let (x, report) = solve_direct(&t.compress(), &[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
        assert!(report.rel_residual <= 1e-10);
    }

    #[test]
    fn random_system_matches_dense_oracle() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut t = Triplets::new(n, n);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            // Diagonally dominant so the system is comfortably solvable.
            let d = 10.0 + draw(&mut rng).abs();
            t.push(i, i, d);
            dense[(i, i)] += d;
            for _ in 0..4 {
                let j = (rng.next_u64() % n as u64) as usize;
                let v = draw(&mut rng);
                t.push(i, j, v);
                dense[(i, j)] += v;
            }
        }
        let b: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let (x, _) = solve_direct(&t.compress(), &b).unwrap();
        let oracle = dense
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_matches_direct_on_spd_system() {
        let n = 40;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let a = t.compress();
        assert_eq!(a.symmetry_defect(), 0.0);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x_cg, report) = solve_cg(&a, &b, 1e-12, 10 * n).unwrap();
        let (x_lu, _) = solve_direct(&a, &b).unwrap();
        assert!(report.iterations > 0);
        for i in 0..n {
            assert!((x_cg[i] - x_lu[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_rejects_indefinite_diagonal() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, -1.0);
        t.push(1, 1, 1.0);
        assert!(matches!(
            solve_cg(&t.compress(), &[1.0, 1.0], 1e-12, 100),
            Err(Error::Solver(_))
        ));
    }

    #[test]
    fn singular_system_is_reported() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 1.0);
        assert!(solve_direct(&t.compress(), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_market_roundtrip_format() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.5);
        t.push(1, 0, -2.0);
        let a = t.compress();
        let dir = std::env::temp_dir().join("fcfv_mm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.mtx");
        a.write_matrix_market(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        assert!(text.contains("2 2 2"));
        assert!(text.contains("1 1 1.5"));
    }
}
