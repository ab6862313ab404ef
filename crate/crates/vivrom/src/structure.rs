//! One-degree-of-freedom cylinder dynamics: the mass-spring-damper
//! oscillator, the fluid force integral over the cylinder patch, and a
//! second-order symplectic integrator.

use crate::error::{Result, VivError};
use crate::fields::{ScalarField, VectorField};
use crate::mesh::{Mesh2D, MeshGeometry, Patch, Vec2};

/// Elastically mounted rigid cylinder, transverse motion only.
///
/// `y'' + 2 zeta omega_n y' + omega_n^2 y = f_y / m`
#[derive(Debug, Clone, Copy)]
pub struct Oscillator {
    pub mass: f64,
    pub stiffness: f64,
    pub damping_ratio: f64,
    pub y: f64,
    pub y_dot: f64,
}

impl Oscillator {
    pub fn new(mass: f64, stiffness: f64, damping_ratio: f64) -> Result<Self> {
        if mass <= 0.0 || stiffness <= 0.0 || damping_ratio < 0.0 {
            return Err(VivError::Config(format!(
                "oscillator: mass {mass} and stiffness {stiffness} must be > 0, \
                 damping ratio {damping_ratio} >= 0"
            )));
        }
        Ok(Self {
            mass,
            stiffness,
            damping_ratio,
            y: 0.0,
            y_dot: 0.0,
        })
    }

    /// Natural angular frequency `sqrt(k/m)`.
    pub fn omega_n(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// Natural frequency `omega_n / 2 pi`.
    pub fn f_n(&self) -> f64 {
        self.omega_n() / std::f64::consts::TAU
    }

    /// Damping constant `c = 2 m zeta omega_n`.
    pub fn damping(&self) -> f64 {
        2.0 * self.mass * self.damping_ratio * self.omega_n()
    }

    /// Mechanical energy of the undamped oscillator, per unit mass:
    /// `(y_dot^2 + omega_n^2 y^2) / 2`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.y_dot * self.y_dot + self.omega_n().powi(2) * self.y * self.y)
    }
}

/// Derived structural quantities for a given free stream.
#[derive(Debug, Clone, Copy)]
pub struct NaturalQuantities {
    pub omega_n: f64,
    pub f_n: f64,
    /// Reduced velocity `U_inf / (f_n D)`.
    pub u_star: f64,
}

pub fn natural_quantities(
    mass: f64,
    stiffness: f64,
    u_inf: f64,
    diameter: f64,
) -> Result<NaturalQuantities> {
    if mass <= 0.0 || stiffness <= 0.0 {
        return Err(VivError::Config(
            "natural_quantities: mass and stiffness must be > 0".into(),
        ));
    }
    let omega_n = (stiffness / mass).sqrt();
    let f_n = omega_n / std::f64::consts::TAU;
    Ok(NaturalQuantities {
        omega_n,
        f_n,
        u_star: u_inf / (f_n * diameter),
    })
}

/// Integrated fluid load on a wall patch, per unit depth.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForceResult {
    pub fx: f64,
    pub fy: f64,
    pub cl: f64,
    pub cd: f64,
}

/// Integrate `-p I + mu (grad u + grad u^T)` over a boundary patch.
///
/// The patch face normals point out of the fluid, so the sum is the force
/// exerted by the fluid on the body. The pressure is kinematic; `rho`
/// converts to newtons. Wall velocity gradients use a one-sided difference
/// along the face normal.
pub fn integrate_fluid_forces(
    mesh: &Mesh2D,
    geom: &MeshGeometry,
    u: &VectorField,
    p: &ScalarField,
    patch: &Patch,
    mu: f64,
    rho: f64,
    u_inf: f64,
    diameter: f64,
) -> Result<ForceResult> {
    if patch.count == 0 {
        return Err(VivError::Config(format!("patch {} is empty", patch.name)));
    }
    let mut f = Vec2::zeros();
    for face in patch.faces() {
        let s = geom.face_area[face];
        let own = mesh.faces[face].owner;
        let p_f = p.boundary_value(mesh, face);
        f -= p_f * s;

        let n = s.normalize();
        let dn = geom.wall_distance(face);
        let u_wall = u.boundary_value(mesh, face, s);
        let du = (u_wall - u.at(own)) / dn;
        // grad[a][b] = d u_a / d x_b ~ du_a * n_b.
        let tx = mu * (2.0 * du.x * n.x * s.x + (du.x * n.y + du.y * n.x) * s.y);
        let ty = mu * ((du.y * n.x + du.x * n.y) * s.x + 2.0 * du.y * n.y * s.y);
        f += Vec2::new(tx, ty);
    }
    let dynamic_head = 0.5 * rho * u_inf * u_inf * diameter;
    let (fx, fy) = (rho * f.x, rho * f.y);
    Ok(ForceResult {
        fx,
        fy,
        cl: fy / dynamic_head,
        cd: fx / dynamic_head,
    })
}

/// One velocity-Verlet step of the forced, damped oscillator.
///
/// The damping term makes the second half-kick implicit in the velocity;
/// being linear it is solved in closed form, which keeps the scheme explicit
/// and second order. The force is held constant over the step (staggered
/// coupling with the flow solver).
pub fn symplectic_step(osc: &Oscillator, f_y: f64, dt: f64) -> Oscillator {
    let w2 = osc.omega_n().powi(2);
    let two_zw = 2.0 * osc.damping_ratio * osc.omega_n();
    let acc = f_y / osc.mass - w2 * osc.y - two_zw * osc.y_dot;
    let v_half = osc.y_dot + 0.5 * dt * acc;
    let y_new = osc.y + dt * v_half;
    let v_new = (v_half + 0.5 * dt * (f_y / osc.mass - w2 * y_new)) / (1.0 + 0.5 * dt * two_zw);
    Oscillator {
        y: y_new,
        y_dot: v_new,
        ..*osc
    }
}
