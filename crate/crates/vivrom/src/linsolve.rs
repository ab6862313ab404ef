//! Linear solvers: Gauss-Seidel and conjugate-gradient iterations for the
//! sparse segregated systems, a deterministic Jacobi eigensolver for the
//! snapshot correlation matrices, and a rank-revealing dense solve for the
//! RBF and reduced systems.

use crate::error::{Result, VivError};
use crate::fvops::{SparseMatrix, SparseSystem};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SolverControls {
    pub max_iterations: usize,
    /// Relative residual target ||b - Ax|| / ||b||.
    pub tolerance: f64,
    /// Under-relaxation of the sweep update, in (0, 1].
    pub relaxation: f64,
}

impl SolverControls {
    pub fn new(max_iterations: usize, tolerance: f64) -> Self {
        Self {
            max_iterations,
            tolerance,
            relaxation: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(VivError::Config(format!(
                "solver controls: tolerance {} must be > 0 and max_iterations {} >= 1",
                self.tolerance, self.max_iterations
            )));
        }
        if self.relaxation <= 0.0 || self.relaxation > 1.0 {
            return Err(VivError::Config(format!(
                "solver controls: relaxation {} must be in (0, 1]",
                self.relaxation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_residual: f64,
    /// Achieved relative residual.
    pub final_residual: f64,
    pub converged: bool,
}

fn rhs_norm(rhs: &[f64]) -> f64 {
    let n2: f64 = rhs.iter().map(|b| b * b).sum();
    n2.sqrt()
}

fn residual_norm(m: &SparseMatrix, rhs: &[f64], x: &[f64]) -> f64 {
    let mut r = 0.0;
    for i in 0..m.n() {
        let (cols, vals) = m.row(i);
        let ax: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        r += (rhs[i] - ax) * (rhs[i] - ax);
    }
    r.sqrt()
}

/// Gauss-Seidel sweeps until the relative residual drops below the
/// tolerance or the iteration budget is exhausted.
pub fn gauss_seidel_solve(
    system: &SparseSystem,
    x: &mut [f64],
    controls: &SolverControls,
) -> Result<SolveReport> {
    gauss_seidel(&system.matrix, &system.rhs, x, controls)
}

pub fn gauss_seidel(
    m: &SparseMatrix,
    rhs: &[f64],
    x: &mut [f64],
    controls: &SolverControls,
) -> Result<SolveReport> {
    controls.validate()?;
    let n = m.n();
    for i in 0..n {
        if m.diag(i) == 0.0 {
            return Err(VivError::Solver(format!(
                "gauss-seidel: zero diagonal in row {i}"
            )));
        }
    }
    let bnorm = rhs_norm(rhs).max(f64::MIN_POSITIVE);
    let initial = residual_norm(m, rhs, x) / bnorm;
    let mut res = initial;
    let mut iterations = 0;
    while res > controls.tolerance && iterations < controls.max_iterations {
        for i in 0..n {
            let (cols, vals) = m.row(i);
            let mut sum = rhs[i];
            let mut diag = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    sum -= v * x[j];
                }
            }
            let xi = sum / diag;
            x[i] += controls.relaxation * (xi - x[i]);
        }
        iterations += 1;
        res = residual_norm(m, rhs, x) / bnorm;
    }
    Ok(SolveReport {
        iterations,
        initial_residual: initial,
        final_residual: res,
        converged: res <= controls.tolerance,
    })
}

/// Unpreconditioned conjugate gradients for the symmetric positive
/// (semi-)definite pressure systems.
pub fn conjugate_gradient_solve(
    system: &SparseSystem,
    x: &mut [f64],
    controls: &SolverControls,
) -> Result<SolveReport> {
    conjugate_gradient(&system.matrix, &system.rhs, x, controls)
}

pub fn conjugate_gradient(
    m: &SparseMatrix,
    rhs: &[f64],
    x: &mut [f64],
    controls: &SolverControls,
) -> Result<SolveReport> {
    controls.validate()?;
    let n = m.n();
    let bnorm = rhs_norm(rhs).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    m.matvec(x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let initial = rr.sqrt() / bnorm;
    let mut res = initial;
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while res > controls.tolerance && iterations < controls.max_iterations {
        m.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        iterations += 1;
        res = rr.sqrt() / bnorm;
    }
    Ok(SolveReport {
        iterations,
        initial_residual: initial,
        final_residual: res,
        converged: res <= controls.tolerance,
    })
}

#[derive(Debug, Clone)]
pub struct SymmetricEig {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column i is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

/// Cyclic Jacobi rotations with a fixed sweep order and a fixed off-diagonal
/// threshold, so results are bit-reproducible across runs.
pub fn symmetric_eig(c: &DMatrix<f64>) -> Result<SymmetricEig> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(VivError::Numerics(format!(
            "symmetric_eig: matrix is {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let norm = c.norm();
    if (c - c.transpose()).norm() > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(VivError::Numerics(
            "symmetric_eig: input is not symmetric".into(),
        ));
    }
    let mut a = 0.5 * (c + c.transpose());
    let mut v = DMatrix::<f64>::identity(n, n);

    let off = |a: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[(p, q)] * a[(p, q)];
            }
        }
        (2.0 * s).sqrt()
    };

    let tol = 1e-12 * norm.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cos * vkp - sin * vkq;
                    v[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
    }
    Ok(SymmetricEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Dense solve through a column-pivoted Householder QR, so rank deficiency
/// is detected and reported rather than silently amplified.
pub fn dense_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(VivError::Numerics(format!(
            "dense_solve: shapes {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let rank = (0..n)
        .take_while(|&i| r[(i, i)].abs() > 1e-12 * rmax.max(f64::MIN_POSITIVE))
        .count();
    if rank < n {
        return Err(VivError::Solver(format!(
            "dense_solve: rank-deficient system (estimated rank {rank} of {n})"
        )));
    }
    qr.solve(b).ok_or_else(|| {
        VivError::Solver("dense_solve: QR back-substitution failed".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvops::SparseMatrix;
    use nalgebra::{dmatrix, DVector};

    #[test]
    fn gauss_seidel_identity_single_sweep() {
        let m = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let sys = SparseSystem {
            matrix: m,
            rhs: vec![3.0, -1.0, 2.5],
        };
        let mut x = vec![0.0; 3];
        let rep = gauss_seidel_solve(&sys, &mut x, &SolverControls::new(10, 1e-12)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(x, vec![3.0, -1.0, 2.5]);
    }

    #[test]
    fn gauss_seidel_matches_dense_2x2_oracle() {
        // [[4,1],[1,3]] x = [1,2]; dense oracle x = [1/11, 7/11].
        let m = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        let sys = SparseSystem {
            matrix: m,
            rhs: vec![1.0, 2.0],
        };
        let mut x = vec![0.0; 2];
        let rep = gauss_seidel_solve(&sys, &mut x, &SolverControls::new(200, 1e-13)).unwrap();
        assert!(rep.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_seidel_zero_diagonal_is_reported() {
        let mut m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        m.vals[m.layout.diag_pos[1]] = 0.0;
        let sys = SparseSystem {
            matrix: m,
            rhs: vec![1.0, 1.0],
        };
        let err = gauss_seidel_solve(&sys, &mut [0.0, 0.0], &SolverControls::new(5, 1e-9))
            .unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    fn laplacian_1d(n: usize) -> SparseSystem {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseSystem {
            matrix: SparseMatrix::from_triplets(n, &t),
            rhs: (0..n).map(|i| (i as f64 * 0.37).sin()).collect(),
        }
    }

    #[test]
    fn gauss_seidel_residual_monotone_on_spd() {
        let sys = laplacian_1d(16);
        let bnorm: f64 = sys.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        let mut x = vec![0.0; 16];
        let mut prev = sys.residual_norm(&x) / bnorm;
        for _ in 0..50 {
            gauss_seidel_solve(&sys, &mut x, &SolverControls::new(1, 1e-30)).unwrap();
            let res = sys.residual_norm(&x) / bnorm;
            assert!(
                res <= prev * (1.0 + 1e-12),
                "residual increased: {prev} -> {res}"
            );
            prev = res;
        }
    }

    #[test]
    fn conjugate_gradient_solves_laplacian() {
        let sys = laplacian_1d(64);
        let mut x = vec![0.0; 64];
        let rep = conjugate_gradient_solve(&sys, &mut x, &SolverControls::new(200, 1e-12)).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(sys.residual_norm(&x) < 1e-10);
    }

    #[test]
    fn eig_diagonal_matrix() {
        let c = dmatrix![3.0, 0.0; 0.0, 1.0];
        let e = symmetric_eig(&c).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((e.eigenvectors[(1, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_textbook_2x2() {
        let c = dmatrix![2.0, 1.0; 1.0, 2.0];
        let e = symmetric_eig(&c).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        let v0 = e.eigenvectors.column(0);
        assert!((v0[0].abs() - s).abs() < 1e-12 && (v0[1].abs() - s).abs() < 1e-12);
        assert!((v0[0] - v0[1]).abs() < 1e-12, "(1,1) direction");
        let v1 = e.eigenvectors.column(1);
        assert!((v1[0] + v1[1]).abs() < 1e-12, "(1,-1) direction");
    }

    #[test]
    fn eig_reconstructs_random_spd() {
        // Deterministic pseudo-random SPD matrix.
        let n = 10;
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut s = 1234567u64;
        for v in g.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
        }
        let c = &g * g.transpose();
        let e = symmetric_eig(&c).unwrap();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(e.eigenvalues.clone()));
        let rec = &e.eigenvectors * lam * e.eigenvectors.transpose();
        assert!((rec - &c).norm() < 1e-9 * c.norm());
        // Trace identity and orthonormal eigenvectors.
        let trace: f64 = (0..n).map(|i| c[(i, i)]).sum();
        let sum: f64 = e.eigenvalues.iter().sum();
        assert!((trace - sum).abs() < 1e-9 * trace.abs());
        let gram = e.eigenvectors.transpose() * &e.eigenvectors;
        assert!((gram - DMatrix::identity(n, n)).norm() < 1e-9);
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn eig_rejects_nonsymmetric() {
        let c = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(symmetric_eig(&c).is_err());
    }

    #[test]
    fn dense_solve_identity_and_hilbert() {
        let id = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let x = dense_solve(&id, &b).unwrap();
        assert_eq!(x, b);

        let h = DMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        let ones = DMatrix::from_element(4, 1, 1.0);
        let rhs = &h * &ones;
        let x = dense_solve(&h, &rhs).unwrap();
        assert!((x - ones).norm() < 1e-6);
    }

    #[test]
    fn dense_solve_reports_rank_deficiency() {
        // Rank-1 matrix.
        let u = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let a = &u * u.transpose();
        let b = DMatrix::from_element(3, 1, 1.0);
        let err = dense_solve(&a, &b).unwrap_err();
        assert!(err.to_string().contains("rank 1"), "{err}");
    }
}
