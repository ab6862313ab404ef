//! Cell-centered fields and per-patch boundary conditions.

use crate::error::{Result, VivError};
use crate::mesh::{Mesh2D, Vec2};

/// Boundary condition of a vector (velocity) field on one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorBc {
    /// Prescribed value, e.g. the inlet velocity.
    FixedValue(Vec2),
    /// Zero normal gradient, e.g. at the outlet.
    ZeroGradient,
    /// No-slip wall moving with the stored velocity. Convective flux through
    /// the face equals the mesh flux, so nothing is advected across it.
    MovingWall(Vec2),
    /// Slip condition on an axis-aligned boundary: the normal component is
    /// zero, the tangential one has zero gradient.
    Symmetry,
}

/// Boundary condition of a scalar (pressure) field on one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBc {
    FixedValue(f64),
    ZeroGradient,
}

/// Per-component boundary treatment resolved for assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentBc {
    Dirichlet(f64),
    Neumann,
}

impl VectorBc {
    /// Resolve this condition for one velocity component (0 = x, 1 = y) on a
    /// face with outward normal `normal`.
    pub fn component(&self, comp: usize, normal: Vec2) -> ComponentBc {
        match self {
            VectorBc::FixedValue(v) | VectorBc::MovingWall(v) => ComponentBc::Dirichlet(v[comp]),
            VectorBc::ZeroGradient => ComponentBc::Neumann,
            VectorBc::Symmetry => {
                // Constrain the component aligned with the dominant normal axis.
                let normal_comp = if normal.x.abs() >= normal.y.abs() { 0 } else { 1 };
                if comp == normal_comp {
                    ComponentBc::Dirichlet(0.0)
                } else {
                    ComponentBc::Neumann
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
    /// One condition per mesh patch, in patch order.
    pub bc: Vec<ScalarBc>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh2D, value: f64, bc: Vec<ScalarBc>) -> Result<Self> {
        if bc.len() != mesh.patches.len() {
            return Err(VivError::Config(format!(
                "scalar field: {} boundary conditions for {} patches",
                bc.len(),
                mesh.patches.len()
            )));
        }
        Ok(Self {
            values: vec![value; mesh.n_cells()],
            bc,
        })
    }

    /// Boundary-face value implied by the condition.
    pub fn boundary_value(&self, mesh: &Mesh2D, face: usize) -> f64 {
        let patch = mesh.face_patch(face).expect("boundary face");
        match self.bc[patch] {
            ScalarBc::FixedValue(v) => v,
            ScalarBc::ZeroGradient => self.values[mesh.faces[face].owner],
        }
    }
}

/// Velocity field stored as separate component arrays, which matches the
/// segregated solves (one scalar system per component).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bc: Vec<VectorBc>,
}

impl VectorField {
    pub fn new(mesh: &Mesh2D, value: Vec2, bc: Vec<VectorBc>) -> Result<Self> {
        if bc.len() != mesh.patches.len() {
            return Err(VivError::Config(format!(
                "vector field: {} boundary conditions for {} patches",
                bc.len(),
                mesh.patches.len()
            )));
        }
        Ok(Self {
            x: vec![value.x; mesh.n_cells()],
            y: vec![value.y; mesh.n_cells()],
            bc,
        })
    }

    #[inline]
    pub fn component(&self, comp: usize) -> &[f64] {
        match comp {
            0 => &self.x,
            _ => &self.y,
        }
    }

    #[inline]
    pub fn component_mut(&mut self, comp: usize) -> &mut [f64] {
        match comp {
            0 => &mut self.x,
            _ => &mut self.y,
        }
    }

    #[inline]
    pub fn at(&self, cell: usize) -> Vec2 {
        Vec2::new(self.x[cell], self.y[cell])
    }

    /// Boundary-face value of one component implied by the condition.
    pub fn boundary_component(
        &self,
        mesh: &Mesh2D,
        face: usize,
        comp: usize,
        normal: Vec2,
    ) -> f64 {
        let patch = mesh.face_patch(face).expect("boundary face");
        match self.bc[patch].component(comp, normal) {
            ComponentBc::Dirichlet(v) => v,
            ComponentBc::Neumann => self.component(comp)[mesh.faces[face].owner],
        }
    }

    /// Boundary-face vector value.
    pub fn boundary_value(&self, mesh: &Mesh2D, face: usize, normal: Vec2) -> Vec2 {
        Vec2::new(
            self.boundary_component(mesh, face, 0, normal),
            self.boundary_component(mesh, face, 1, normal),
        )
    }
}
