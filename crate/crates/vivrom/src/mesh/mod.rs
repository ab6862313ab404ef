//! Unstructured 2D finite-volume mesh: connectivity, metric geometry,
//! point motion with exact swept areas.
//!
//! Faces are straight segments between two points. Every face stores its
//! points in the order that makes `perp(b - a)` point outward from the owner
//! cell; internal faces always have `owner < neighbour`. Boundary faces are
//! grouped into contiguous, named patches and come after all internal faces.
//!
//! Geometry is recomputed from scratch after every point motion. Swept areas
//! are the exact signed areas of the quadrilaterals traced by each face
//! between two point configurations, which makes the discrete geometric
//! conservation identity `V_new - V_old = sum(dA_f)` hold to machine
//! precision.

mod gen;
mod io;

pub use gen::{cartesian, ogrid, two_triangles, CartesianSpec, OgridSpec};
pub use io::{read_mesh, write_mesh};

use crate::error::{Result, VivError};
use crate::par::*;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Rotate by -90 degrees: the outward normal direction of an edge whose
/// endpoints run counter-clockwise around the owner cell.
#[inline]
pub fn edge_normal(a: Vec2, b: Vec2) -> Vec2 {
    Vec2::new(b.y - a.y, -(b.x - a.x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub owner: usize,
    pub neighbour: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Patch {
    pub name: String,
    /// Index of the first face of this patch.
    pub start: usize,
    pub count: usize,
}

impl Patch {
    pub fn faces(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.count
    }
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub points: Vec<Vec2>,
    pub faces: Vec<Face>,
    pub patches: Vec<Patch>,
    n_cells: usize,
    n_internal: usize,
    /// Per cell: (face index, +1 if the cell owns the face, -1 otherwise).
    cell_faces: Vec<Vec<(usize, f64)>>,
}

impl Mesh2D {
    /// Assemble a mesh from raw parts, checking the connectivity invariants.
    pub fn from_parts(points: Vec<Vec2>, faces: Vec<Face>, patches: Vec<Patch>) -> Result<Self> {
        let n_internal = faces.iter().take_while(|f| f.neighbour.is_some()).count();
        if faces[n_internal..].iter().any(|f| f.neighbour.is_some()) {
            return Err(VivError::Mesh(
                "internal faces must precede boundary faces".into(),
            ));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.a >= points.len() || f.b >= points.len() {
                return Err(VivError::Mesh(format!("face {i} references missing point")));
            }
            if let Some(n) = f.neighbour {
                if f.owner >= n {
                    return Err(VivError::Mesh(format!(
                        "face {i}: owner {} must be < neighbour {n}",
                        f.owner
                    )));
                }
            }
        }
        let n_cells = faces
            .iter()
            .flat_map(|f| std::iter::once(f.owner).chain(f.neighbour))
            .max()
            .map_or(0, |m| m + 1);

        let mut covered = vec![false; faces.len() - n_internal];
        for p in &patches {
            for f in p.faces() {
                if f < n_internal || f >= faces.len() {
                    return Err(VivError::Mesh(format!(
                        "patch {} covers non-boundary face {f}",
                        p.name
                    )));
                }
                if std::mem::replace(&mut covered[f - n_internal], true) {
                    return Err(VivError::Mesh(format!(
                        "boundary face {f} belongs to more than one patch"
                    )));
                }
            }
        }
        if let Some(f) = covered.iter().position(|c| !c) {
            return Err(VivError::Mesh(format!(
                "boundary face {} belongs to no patch",
                f + n_internal
            )));
        }

        let mut cell_faces = vec![Vec::new(); n_cells];
        for (i, f) in faces.iter().enumerate() {
            cell_faces[f.owner].push((i, 1.0));
            if let Some(n) = f.neighbour {
                cell_faces[n].push((i, -1.0));
            }
        }

        Ok(Self {
            points,
            faces,
            patches,
            n_cells,
            n_internal,
            cell_faces,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Number of internal faces; faces `[n_internal..]` are boundary faces.
    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn is_internal(&self, face: usize) -> bool {
        face < self.n_internal
    }

    /// Faces of a cell with their orientation sign (+1 outward as stored).
    pub fn cell_faces(&self, cell: usize) -> &[(usize, f64)] {
        &self.cell_faces[cell]
    }

    pub fn patch(&self, name: &str) -> Option<&Patch> {
        self.patches.iter().find(|p| p.name == name)
    }

    /// Patch index a boundary face belongs to.
    pub fn face_patch(&self, face: usize) -> Option<usize> {
        self.patches
            .iter()
            .position(|p| face >= p.start && face < p.start + p.count)
    }

    /// Sorted, deduplicated point indices of a patch.
    pub fn patch_points(&self, patch: &Patch) -> Vec<usize> {
        let mut pts: Vec<usize> = patch
            .faces()
            .flat_map(|f| [self.faces[f].a, self.faces[f].b])
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// All boundary point indices, sorted.
    pub fn boundary_points(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self.faces[self.n_internal..]
            .iter()
            .flat_map(|f| [f.a, f.b])
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Unique point-pair edges (each face contributes one edge).
    pub fn point_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .map(|f| (f.a.min(f.b), f.a.max(f.b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Recompute the metric geometry from the current points.
    pub fn geometry(&self) -> Result<MeshGeometry> {
        MeshGeometry::compute(self)
    }

    /// Displace every point by `displacement` and advance the geometry.
    ///
    /// Returns the new geometry together with the per-face swept areas over
    /// `dt`. If any cell inverts, the points are restored and an error is
    /// returned.
    pub fn move_points(
        &mut self,
        displacement: &[Vec2],
        dt: f64,
    ) -> Result<(MeshGeometry, SweptAreas)> {
        if displacement.len() != self.points.len() {
            return Err(VivError::Mesh(format!(
                "displacement length {} != point count {}",
                displacement.len(),
                self.points.len()
            )));
        }
        if dt <= 0.0 {
            return Err(VivError::Mesh(format!("move_points: dt = {dt} must be > 0")));
        }
        let old = self.points.clone();
        let delta_area: Vec<f64> = self
            .faces
            .par_iter()
            .map(|f| {
                let a = old[f.a];
                let b = old[f.b];
                let a1 = a + displacement[f.a];
                let b1 = b + displacement[f.b];
                quad_area(a, a1, b1, b)
            })
            .collect();
        for (p, d) in self.points.iter_mut().zip(displacement) {
            *p += d;
        }
        match self.geometry() {
            Ok(geom) => Ok((geom, SweptAreas { delta_area, dt })),
            Err(e) => {
                self.points = old;
                Err(VivError::Mesh(format!(
                    "point motion rejected, mesh would be invalid: {e}"
                )))
            }
        }
    }
}

/// Signed area of the quadrilateral `p1 p2 p3 p4` (shoelace formula).
#[inline]
fn quad_area(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> f64 {
    0.5 * ((p1.x * p2.y - p2.x * p1.y)
        + (p2.x * p3.y - p3.x * p2.y)
        + (p3.x * p4.y - p4.x * p3.y)
        + (p4.x * p1.y - p1.x * p4.y))
}

/// Metric quantities derived from points + connectivity.
///
/// Face area vectors point outward from the owner. The face decomposition
/// `S = pi + k` has `pi` parallel to the center-to-center vector `d` and
/// `k` orthogonal to `d`, so the implicit part of a diffusion operator acts
/// along the line connecting the cell centers and `k` carries the
/// non-orthogonal correction.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    /// S_f: outward (from owner) area vector per face, magnitude = edge length.
    pub face_area: Vec<Vec2>,
    pub face_center: Vec<Vec2>,
    pub cell_volume: Vec<f64>,
    pub cell_center: Vec<Vec2>,
    /// Owner center -> neighbour center (boundary: owner center -> face center).
    pub face_delta: Vec<Vec2>,
    /// Component of S_f parallel to `face_delta`.
    pub face_ortho: Vec<Vec2>,
    /// S_f - face_ortho, orthogonal to `face_delta`.
    pub face_nonortho: Vec<Vec2>,
    /// Linear interpolation weight of the owner cell (1.0 on boundary faces).
    pub face_weight: Vec<f64>,
}

impl MeshGeometry {
    fn compute(mesh: &Mesh2D) -> Result<Self> {
        let nf = mesh.n_faces();
        let pts = &mesh.points;

        let mut face_area = vec![Vec2::zeros(); nf];
        let mut face_center = vec![Vec2::zeros(); nf];
        for (i, f) in mesh.faces.iter().enumerate() {
            face_area[i] = edge_normal(pts[f.a], pts[f.b]);
            face_center[i] = 0.5 * (pts[f.a] + pts[f.b]);
        }
        let scale = face_area
            .iter()
            .map(|s| s.norm())
            .fold(0.0f64, f64::max);
        if let Some(i) = face_area.iter().position(|s| s.norm() <= 1e-14 * scale) {
            return Err(VivError::Mesh(format!(
                "degenerate face {i}: zero length (points {} and {})",
                mesh.faces[i].a, mesh.faces[i].b
            )));
        }

        let per_cell: Vec<(f64, Vec2)> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let mut vol = 0.0;
                let mut cx = 0.0;
                let mut cy = 0.0;
                for &(fi, sign) in mesh.cell_faces(c) {
                    let f = &mesh.faces[fi];
                    let s = sign * face_area[fi];
                    let (a, b) = (pts[f.a], pts[f.b]);
                    // V = 1/2 closed-integral of x.n dS, exact for polygons.
                    vol += 0.5 * face_center[fi].dot(&s);
                    cx += s.x * (a.x * a.x + a.x * b.x + b.x * b.x) / 6.0;
                    cy += s.y * (a.y * a.y + a.y * b.y + b.y * b.y) / 6.0;
                }
                (vol, Vec2::new(cx, cy))
            })
            .collect();

        let mut cell_volume = Vec::with_capacity(mesh.n_cells());
        let mut cell_center = Vec::with_capacity(mesh.n_cells());
        for (c, (vol, m)) in per_cell.into_iter().enumerate() {
            if vol <= 0.0 {
                return Err(VivError::Mesh(format!(
                    "inverted cell {c}: volume {vol:.3e} is not positive"
                )));
            }
            cell_volume.push(vol);
            cell_center.push(m / vol);
        }

        let mut face_delta = vec![Vec2::zeros(); nf];
        let mut face_ortho = vec![Vec2::zeros(); nf];
        let mut face_nonortho = vec![Vec2::zeros(); nf];
        let mut face_weight = vec![1.0; nf];
        for (i, f) in mesh.faces.iter().enumerate() {
            let d = match f.neighbour {
                Some(n) => cell_center[n] - cell_center[f.owner],
                None => face_center[i] - cell_center[f.owner],
            };
            let s = face_area[i];
            let pi = (s.dot(&d) / d.norm_squared()) * d;
            face_delta[i] = d;
            face_ortho[i] = pi;
            face_nonortho[i] = s - pi;
            if let Some(n) = f.neighbour {
                let do_ = (face_center[i] - cell_center[f.owner]).norm();
                let dn = (face_center[i] - cell_center[n]).norm();
                face_weight[i] = dn / (do_ + dn);
            }
        }

        Ok(Self {
            face_area,
            face_center,
            cell_volume,
            cell_center,
            face_delta,
            face_ortho,
            face_nonortho,
            face_weight,
        })
    }

    /// Angle in degrees between the center-to-center vector and the face
    /// normal of an internal face; 0 on a perfectly orthogonal mesh.
    pub fn non_orthogonality_angle(&self, face: usize) -> f64 {
        let d = self.face_delta[face];
        let s = self.face_area[face];
        let c = (d.dot(&s) / (d.norm() * s.norm())).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    }

    /// Maximum non-orthogonality angle over internal faces.
    pub fn max_non_orthogonality(&self, mesh: &Mesh2D) -> f64 {
        (0..mesh.n_internal())
            .map(|f| self.non_orthogonality_angle(f))
            .fold(0.0f64, f64::max)
    }

    /// Distance from the owner-cell center to the face, along the face normal.
    pub fn wall_distance(&self, face: usize) -> f64 {
        let n = self.face_area[face].normalize();
        self.face_delta[face].dot(&n).abs()
    }
}

/// Signed areas swept by each face between two point configurations.
///
/// Positive when the face sweeps outward from its owner cell, so that for
/// every cell `sum(sign * dA_f) = V_new - V_old` exactly.
#[derive(Debug, Clone)]
pub struct SweptAreas {
    pub delta_area: Vec<f64>,
    pub dt: f64,
}

impl SweptAreas {
    /// A stationary-mesh placeholder: all swept areas zero.
    pub fn stationary(n_faces: usize, dt: f64) -> Self {
        Self {
            delta_area: vec![0.0; n_faces],
            dt,
        }
    }

    /// Mesh flux `dA_f / dt` through a face (outward from owner).
    #[inline]
    pub fn mesh_flux(&self, face: usize) -> f64 {
        self.delta_area[face] / self.dt
    }
}

#[cfg(test)]
mod tests;
