//! Compressed sparse row matrices whose sparsity comes from the mesh
//! connectivity (diagonal + one entry per internal face on each side).
//!
//! The layout is immutable and shared between the per-component systems of
//! one assembly, so repeated assemblies only rewrite the value arrays.

use crate::error::{Result, VivError};
use crate::mesh::Mesh2D;
use std::sync::Arc;

#[derive(Debug)]
pub struct MatrixLayout {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    /// Position of the diagonal entry of each row in `cols`/values.
    pub diag_pos: Vec<usize>,
    /// For internal face f: value positions of the (owner,neighbour) and
    /// (neighbour,owner) entries.
    pub face_pos: Vec<(usize, usize)>,
}

impl MatrixLayout {
    pub fn from_mesh(mesh: &Mesh2D) -> Arc<Self> {
        let n = mesh.n_cells();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for f in 0..mesh.n_internal() {
            let face = &mesh.faces[f];
            let nb = face.neighbour.unwrap();
            adj[face.owner].push(nb);
            adj[nb].push(face.owner);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let find = |i: usize, j: usize| -> usize {
            let r = &cols[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i] + r.binary_search(&j).expect("entry in layout")
        };
        let diag_pos = (0..n).map(|i| find(i, i)).collect();
        let face_pos = (0..mesh.n_internal())
            .map(|f| {
                let face = &mesh.faces[f];
                let nb = face.neighbour.unwrap();
                (find(face.owner, nb), find(nb, face.owner))
            })
            .collect();
        Arc::new(Self {
            n,
            row_ptr,
            cols,
            diag_pos,
            face_pos,
        })
    }

    /// Layout from an explicit sparsity pattern (used by tests and the
    /// standalone solvers). The diagonal is always included.
    pub fn from_entries(n: usize, entries: &[(usize, usize)]) -> Arc<Self> {
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in entries {
            adj[i].push(j);
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let diag_pos = (0..n)
            .map(|i| {
                let r = &cols[row_ptr[i]..row_ptr[i + 1]];
                row_ptr[i] + r.binary_search(&i).unwrap()
            })
            .collect();
        Arc::new(Self {
            n,
            row_ptr,
            cols,
            diag_pos,
            face_pos: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub layout: Arc<MatrixLayout>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeroed(layout: Arc<MatrixLayout>) -> Self {
        let nnz = layout.cols.len();
        Self {
            layout,
            vals: vec![0.0; nnz],
        }
    }

    /// Build from triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern: Vec<(usize, usize)> = triplets.iter().map(|&(i, j, _)| (i, j)).collect();
        let layout = MatrixLayout::from_entries(n, &pattern);
        let mut m = Self::zeroed(layout);
        for &(i, j, v) in triplets {
            *m.entry_mut(i, j).expect("entry in layout") += v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.layout.row_ptr[i]..self.layout.row_ptr[i + 1];
        (&self.layout.cols[r.clone()], &self.vals[r])
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.vals[self.layout.diag_pos[i]]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut f64> {
        let r = self.layout.row_ptr[i]..self.layout.row_ptr[i + 1];
        let cols = &self.layout.cols[r.clone()];
        cols.binary_search(&j)
            .ok()
            .map(|k| &mut self.vals[r.start + k])
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n() {
            let (cols, vals) = self.row(i);
            out[i] = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.matvec(x, &mut out);
        out
    }

    /// Replace row `i` (and symmetrically column `i`) by the identity,
    /// forcing `x[i] = value`. Used to pin a reference pressure.
    pub fn pin(&mut self, i: usize, rhs: &mut [f64], value: f64) {
        let r = self.layout.row_ptr[i]..self.layout.row_ptr[i + 1];
        let row_cols: Vec<usize> = self.layout.cols[r.clone()].to_vec();
        for (k, &j) in row_cols.iter().enumerate() {
            self.vals[r.start + k] = if j == i { 1.0 } else { 0.0 };
            if j != i {
                // Zero (j, i) to keep the matrix symmetric.
                if let Some(e) = self.entry_mut(j, i) {
                    *e = 0.0;
                }
            }
        }
        rhs[i] = value;
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    /// 2-norm of b - A x.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let mut r = 0.0;
        for i in 0..self.matrix.n() {
            let (cols, vals) = self.matrix.row(i);
            let ax: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            r += (self.rhs[i] - ax) * (self.rhs[i] - ax);
        }
        r.sqrt()
    }

    pub fn check_diagonal(&self) -> Result<()> {
        for i in 0..self.matrix.n() {
            if self.matrix.diag(i) == 0.0 {
                return Err(VivError::Solver(format!(
                    "zero diagonal entry in row {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Diagonal / explicit-remainder decomposition of an assembled system:
/// `a` is the matrix diagonal and `h(u) = rhs - offdiag * u`, so that
/// `a .* u - h(u) = A*u - rhs` reproduces the full operator action on the
/// current iterate.
#[derive(Debug, Clone)]
pub struct AhSplit {
    pub a: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn ah_split(matrix: &SparseMatrix, rhs: &[f64], u: &[f64]) -> AhSplit {
    let n = matrix.n();
    let mut a = vec![0.0; n];
    let mut h = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        let mut off = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                a[i] = v;
            } else {
                off += v * u[j];
            }
        }
        h[i] = rhs[i] - off;
    }
    AhSplit { a, h }
}
