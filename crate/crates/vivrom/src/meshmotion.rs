//! Volume mesh deformation driven by the cylinder displacement, through
//! either global RBF interpolation of the boundary displacements or the
//! linear spring analogy. The same RBF network type also backs the
//! displacement surrogate of the reduced model (1D parameter space).

use crate::error::{Result, VivError};
use crate::linsolve::dense_solve;
use crate::mesh::{Mesh2D, Vec2};
use crate::par::*;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RbfBasis {
    /// `r^2 ln r`, shape-parameter free.
    ThinPlateSpline,
    /// `exp(-(r/eps)^2)`.
    Gaussian { eps: f64 },
    /// `1 / sqrt(1 + (r/eps)^2)`.
    InverseMultiquadric { eps: f64 },
}

impl RbfBasis {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RbfBasis::ThinPlateSpline => {
                if r <= 0.0 {
                    0.0
                } else {
                    r * r * r.ln()
                }
            }
            RbfBasis::Gaussian { eps } => (-(r / eps) * (r / eps)).exp(),
            RbfBasis::InverseMultiquadric { eps } => 1.0 / (1.0 + (r / eps) * (r / eps)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyTail {
    None,
    /// 1, x_1, ..., x_d — reproduces constant and linear data exactly.
    Linear,
}

/// Trained radial basis network with `dim`-dimensional centers and
/// `n_out` output components.
#[derive(Debug, Clone)]
pub struct RbfModel {
    pub basis: RbfBasis,
    pub tail: PolyTail,
    /// n_centers x dim.
    centers: DMatrix<f64>,
    /// (n_centers + tail terms) x n_out: gamma rows then beta rows.
    coeffs: DMatrix<f64>,
}

fn row_dist(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut r2 = 0.0;
    for k in 0..m.ncols() {
        let d = m[(i, k)] - m[(j, k)];
        r2 += d * d;
    }
    r2.sqrt()
}

/// Solve the interpolation system
/// `[Phi Q; Q^T 0] [gamma; beta] = [d; 0]`
/// for possibly several output components at once.
pub fn rbf_train(
    centers: DMatrix<f64>,
    values: &DMatrix<f64>,
    basis: RbfBasis,
    tail: PolyTail,
) -> Result<RbfModel> {
    let n = centers.nrows();
    let dim = centers.ncols();
    if values.nrows() != n {
        return Err(VivError::Config(format!(
            "rbf_train: {} centers but {} value rows",
            n,
            values.nrows()
        )));
    }
    if n == 0 {
        return Err(VivError::Config("rbf_train: no centers".into()));
    }
    // Coincident centers make the system singular; report the pair.
    let diam = {
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max(row_dist(&centers, 0, i));
        }
        d.max(1.0)
    };
    for i in 0..n {
        for j in (i + 1)..n {
            if row_dist(&centers, i, j) < 1e-12 * diam {
                return Err(VivError::Numerics(format!(
                    "rbf_train: centers {i} and {j} coincide"
                )));
            }
        }
    }

    let n_tail = match tail {
        PolyTail::None => 0,
        PolyTail::Linear => 1 + dim,
    };
    let size = n + n_tail;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = basis.eval(row_dist(&centers, i, j));
        }
    }
    if tail == PolyTail::Linear {
        for i in 0..n {
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
            for k in 0..dim {
                a[(i, n + 1 + k)] = centers[(i, k)];
                a[(n + 1 + k, i)] = centers[(i, k)];
            }
        }
    }
    let mut b = DMatrix::<f64>::zeros(size, values.ncols());
    b.view_mut((0, 0), (n, values.ncols())).copy_from(values);

    let coeffs = dense_solve(&a, &b).map_err(|e| {
        VivError::Numerics(format!("rbf_train: interpolation system singular: {e}"))
    })?;
    Ok(RbfModel {
        basis,
        tail,
        centers,
        coeffs,
    })
}

impl RbfModel {
    pub fn n_centers(&self) -> usize {
        self.centers.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// RBF weights (the gamma block of the solved coefficients).
    pub fn weights(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.coeffs.view((0, 0), (self.n_centers(), self.n_outputs()))
    }

    /// Evaluate all output components at one query point.
    pub fn evaluate_one(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_centers();
        let dim = self.dim();
        debug_assert_eq!(x.len(), dim);
        let mut out = vec![0.0; self.n_outputs()];
        for j in 0..n {
            let mut r2 = 0.0;
            for k in 0..dim {
                let d = x[k] - self.centers[(j, k)];
                r2 += d * d;
            }
            let phi = self.basis.eval(r2.sqrt());
            for (c, o) in out.iter_mut().enumerate() {
                *o += phi * self.coeffs[(j, c)];
            }
        }
        if self.tail == PolyTail::Linear {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.coeffs[(n, c)];
                for k in 0..dim {
                    *o += self.coeffs[(n + 1 + k, c)] * x[k];
                }
            }
        }
        out
    }

    /// Evaluate at many query points (rows of `queries`), in parallel.
    pub fn evaluate(&self, queries: &DMatrix<f64>) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = (0..queries.nrows())
            .into_par_iter()
            .map(|i| {
                let row: Vec<f64> = queries.row(i).iter().copied().collect();
                self.evaluate_one(&row)
            })
            .collect();
        let mut out = DMatrix::<f64>::zeros(queries.nrows(), self.n_outputs());
        for (i, r) in rows.into_iter().enumerate() {
            for (c, v) in r.into_iter().enumerate() {
                out[(i, c)] = v;
            }
        }
        out
    }
}

/// Outcome of the spring-analogy fixed-point iteration.
#[derive(Debug, Clone)]
pub struct SpringResult {
    pub displacement: Vec<Vec2>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted-average spring relaxation on the mesh point graph:
/// `delta_i <- sum(alpha_ij delta_j) / sum(alpha_ij)`, edge stiffness
/// inversely proportional to edge length. Points listed in
/// `prescribed` are held fixed at the given value.
pub fn spring_relax(
    mesh: &Mesh2D,
    prescribed: &[Option<Vec2>],
    tolerance: f64,
    max_iterations: usize,
) -> Result<SpringResult> {
    if prescribed.len() != mesh.n_points() {
        return Err(VivError::Config(format!(
            "spring_relax: {} prescriptions for {} points",
            prescribed.len(),
            mesh.n_points()
        )));
    }
    let edges = mesh.point_edges();
    let mut neighbours: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mesh.n_points()];
    for &(i, j) in &edges {
        let len = (mesh.points[i] - mesh.points[j]).norm();
        if len <= 0.0 {
            return Err(VivError::Mesh(format!(
                "spring_relax: zero-length edge between points {i} and {j}"
            )));
        }
        let alpha = 1.0 / len;
        neighbours[i].push((j, alpha));
        neighbours[j].push((i, alpha));
    }

    let mut disp: Vec<Vec2> = prescribed
        .iter()
        .map(|p| p.unwrap_or_else(Vec2::zeros))
        .collect();
    let scale = prescribed
        .iter()
        .flatten()
        .map(|d| d.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let mut max_change = 0.0f64;
        for i in 0..mesh.n_points() {
            if prescribed[i].is_some() {
                continue;
            }
            let mut num = Vec2::zeros();
            let mut den = 0.0;
            for &(j, alpha) in &neighbours[i] {
                num += alpha * disp[j];
                den += alpha;
            }
            if den == 0.0 {
                continue;
            }
            let new = num / den;
            max_change = max_change.max((new - disp[i]).norm());
            disp[i] = new;
        }
        iterations += 1;
        if max_change <= tolerance * scale {
            converged = true;
            break;
        }
    }
    Ok(SpringResult {
        displacement: disp,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionMethod {
    Rbf,
    Spring,
}

/// Propagates the rigid cylinder displacement into the volume mesh starting
/// from a fixed reference configuration, so the resulting displacement field
/// is exactly linear in the driving displacement.
#[derive(Debug, Clone)]
pub struct MotionSolver {
    pub method: MotionMethod,
    reference: Vec<Vec2>,
    cylinder_points: Vec<usize>,
    /// Other boundary points, held fixed.
    fixed_points: Vec<usize>,
    interior_points: Vec<usize>,
    /// Keep every k-th cylinder point as an RBF center (1 = all).
    pub coarsening: usize,
    pub spring_tolerance: f64,
    pub spring_max_iterations: usize,
    /// Largest |y| / D considered safe for the mesh.
    pub max_displacement: f64,
}

impl MotionSolver {
    pub fn new(mesh: &Mesh2D, method: MotionMethod, cylinder_patch: &str) -> Result<Self> {
        let patch = mesh
            .patch(cylinder_patch)
            .ok_or_else(|| VivError::Config(format!("no patch named {cylinder_patch}")))?;
        let cylinder_points = mesh.patch_points(patch);
        let boundary = mesh.boundary_points();
        let fixed_points: Vec<usize> = boundary
            .iter()
            .copied()
            .filter(|p| cylinder_points.binary_search(p).is_err())
            .collect();
        let interior_points: Vec<usize> = (0..mesh.n_points())
            .filter(|p| boundary.binary_search(p).is_err())
            .collect();
        Ok(Self {
            method,
            reference: mesh.points.clone(),
            cylinder_points,
            fixed_points,
            interior_points,
            coarsening: 1,
            spring_tolerance: 1e-10,
            spring_max_iterations: 20_000,
            max_displacement: 0.45,
        })
    }

    pub fn reference_points(&self) -> &[Vec2] {
        &self.reference
    }

    /// Point positions for cylinder displacement `(0, y)` measured from the
    /// reference configuration.
    pub fn positions_for(&self, mesh: &Mesh2D, y: f64, diameter: f64) -> Result<Vec<Vec2>> {
        if y.abs() > self.max_displacement * diameter {
            return Err(VivError::Numerics(format!(
                "mesh motion: displacement {y:.4} exceeds {:.2} D; reduce dt",
                self.max_displacement
            )));
        }
        let field = self.displacement_field(mesh, y)?;
        Ok(self
            .reference
            .iter()
            .zip(&field)
            .map(|(p, d)| p + d)
            .collect())
    }

    /// Displacement of every mesh point from the reference configuration for
    /// cylinder displacement `(0, y)`.
    pub fn displacement_field(&self, mesh: &Mesh2D, y: f64) -> Result<Vec<Vec2>> {
        match self.method {
            MotionMethod::Rbf => self.rbf_field(y),
            MotionMethod::Spring => self.spring_field(mesh, y),
        }
    }

    fn rbf_field(&self, y: f64) -> Result<Vec<Vec2>> {
        let cyl: Vec<usize> = self
            .cylinder_points
            .iter()
            .step_by(self.coarsening.max(1))
            .copied()
            .collect();
        let n_centers = cyl.len() + self.fixed_points.len();
        let mut centers = DMatrix::<f64>::zeros(n_centers, 2);
        let mut values = DMatrix::<f64>::zeros(n_centers, 2);
        for (row, &p) in cyl.iter().chain(&self.fixed_points).enumerate() {
            centers[(row, 0)] = self.reference[p].x;
            centers[(row, 1)] = self.reference[p].y;
            if row < cyl.len() {
                values[(row, 1)] = y;
            }
        }
        let model = rbf_train(centers, &values, RbfBasis::ThinPlateSpline, PolyTail::Linear)?;

        let mut field = vec![Vec2::zeros(); self.reference.len()];
        for &p in &self.cylinder_points {
            field[p] = Vec2::new(0.0, y);
        }
        let mut queries = DMatrix::<f64>::zeros(self.interior_points.len(), 2);
        for (row, &p) in self.interior_points.iter().enumerate() {
            queries[(row, 0)] = self.reference[p].x;
            queries[(row, 1)] = self.reference[p].y;
        }
        let interp = model.evaluate(&queries);
        for (row, &p) in self.interior_points.iter().enumerate() {
            field[p] = Vec2::new(interp[(row, 0)], interp[(row, 1)]);
        }
        Ok(field)
    }

    fn spring_field(&self, mesh: &Mesh2D, y: f64) -> Result<Vec<Vec2>> {
        let mut prescribed: Vec<Option<Vec2>> = vec![None; self.reference.len()];
        for &p in &self.fixed_points {
            prescribed[p] = Some(Vec2::zeros());
        }
        for &p in &self.cylinder_points {
            prescribed[p] = Some(Vec2::new(0.0, y));
        }
        // The stiffnesses must come from the reference configuration for the
        // field to stay linear in y.
        let mut ref_mesh = mesh.clone();
        ref_mesh.points = self.reference.clone();
        let result = spring_relax(
            &ref_mesh,
            &prescribed,
            self.spring_tolerance,
            self.spring_max_iterations,
        )?;
        Ok(result.displacement)
    }
}

#[cfg(test)]
mod tests;
