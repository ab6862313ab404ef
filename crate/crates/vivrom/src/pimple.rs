//! Segregated transient solver with dynamic mesh: per time step the
//! structural state advances on the previous step's force, the mesh follows,
//! and then outer momentum/pressure iterations with inner correctors drive
//! the fields to the new time level.
//!
//! The same stepping machinery serves both the full-order solver (sparse
//! iterative solves) and the reduced solver, which swaps the two linear
//! solves for Galerkin-projected dense ones through the [`StageSolvers`]
//! trait.

use crate::case::{CaseConfig, CylinderBc, CylinderMotion, PressureSolverKind};
use crate::error::{Result, VivError};
use crate::fields::{ScalarBc, ScalarField, VectorBc, VectorField};
use crate::fvops::{
    ah_split, assemble_momentum, assemble_pressure_poisson, correct_fluxes, grad_scalar,
    init_flux, pressure_nonorth_term, pressure_rhs_with_nonorth, relax_momentum,
    update_boundary_fluxes, MatrixLayout, MomentumCtx, MomentumSystem, SparseMatrix,
};
use crate::io::{CasePaths, SnapshotRecord};
use crate::linsolve::{conjugate_gradient, gauss_seidel, SolveReport, SolverControls};
use crate::mesh::{Mesh2D, MeshGeometry, SweptAreas, Vec2};
use crate::meshmotion::{MotionMethod, MotionSolver};
use crate::structure::{integrate_fluid_forces, symplectic_step, ForceResult, Oscillator};
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct PimpleControls {
    pub n_outer: usize,
    /// Pressure corrections per outer iteration (>= 1; extra ones are the
    /// PISO inner correctors).
    pub n_inner: usize,
    pub n_nonorth: usize,
    pub alpha_u: f64,
    pub alpha_p: f64,
    pub tol_u: f64,
    pub tol_p: f64,
    pub max_iter_u: usize,
    pub max_iter_p: usize,
    pub pressure_solver: PressureSolverKind,
    /// Drop relaxation on the final outer iteration (standard PIMPLE
    /// practice, keeps the step time-accurate).
    pub final_relax_one: bool,
    pub max_cfl: f64,
    pub adaptive_dt: bool,
}

impl PimpleControls {
    pub fn from_config(cfg: &CaseConfig) -> Self {
        Self {
            n_outer: cfg.n_outer,
            n_inner: cfg.n_inner.max(1),
            n_nonorth: cfg.n_nonorth,
            alpha_u: cfg.alpha_u,
            alpha_p: cfg.alpha_p,
            tol_u: cfg.tol_u,
            tol_p: cfg.tol_p,
            max_iter_u: cfg.max_iter_u,
            max_iter_p: cfg.max_iter_p,
            pressure_solver: cfg.pressure_solver,
            final_relax_one: true,
            max_cfl: cfg.max_cfl,
            adaptive_dt: cfg.adaptive_dt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: VectorField,
    pub p: ScalarField,
    /// Absolute volumetric flux per face.
    pub flux: Vec<f64>,
}

impl FlowState {
    pub fn uniform(
        mesh: &Mesh2D,
        geom: &MeshGeometry,
        velocity: Vec2,
        u_bc: Vec<VectorBc>,
        p_bc: Vec<ScalarBc>,
    ) -> Result<Self> {
        let u = VectorField::new(mesh, velocity, u_bc)?;
        let p = ScalarField::new(mesh, 0.0, p_bc)?;
        let flux = init_flux(mesh, geom, &u);
        Ok(Self { u, p, flux })
    }
}

/// Geometry bundle of the current time step.
pub struct StepContext<'a> {
    pub mesh: &'a Mesh2D,
    pub geom: &'a MeshGeometry,
    pub layout: &'a Arc<MatrixLayout>,
    /// Cell volumes at the previous time level.
    pub vol_old: &'a [f64],
    pub swept: &'a SweptAreas,
    pub dt: f64,
    pub nu: f64,
}

/// The two linear solves of the segregated loop, plus a hook applied after
/// every correction; the reduced solver uses the hook to keep the state on
/// its modal subspace.
pub trait StageSolvers {
    fn solve_momentum(&mut self, sys: &MomentumSystem, u: &mut VectorField) -> Result<()>;
    fn solve_pressure(
        &mut self,
        matrix: &SparseMatrix,
        rhs: &[f64],
        p_prime: &mut [f64],
    ) -> Result<SolveReport>;
    fn end_correction(&mut self, _u: &mut VectorField, _p: &mut ScalarField) -> Result<()> {
        Ok(())
    }
}

/// Full-order backend: Gauss-Seidel momentum solves, conjugate-gradient (or
/// Gauss-Seidel) pressure solves.
pub struct FomSolvers {
    pub momentum: SolverControls,
    pub pressure: SolverControls,
    pub pressure_kind: PressureSolverKind,
}

impl FomSolvers {
    pub fn from_controls(c: &PimpleControls) -> Self {
        Self {
            momentum: SolverControls::new(c.max_iter_u, c.tol_u),
            pressure: SolverControls::new(c.max_iter_p, c.tol_p),
            pressure_kind: c.pressure_solver,
        }
    }
}

impl StageSolvers for FomSolvers {
    fn solve_momentum(&mut self, sys: &MomentumSystem, u: &mut VectorField) -> Result<()> {
        for c in 0..2 {
            gauss_seidel(
                &sys.comp[c].matrix,
                &sys.comp[c].rhs,
                u.component_mut(c),
                &self.momentum,
            )?;
        }
        Ok(())
    }

    fn solve_pressure(
        &mut self,
        matrix: &SparseMatrix,
        rhs: &[f64],
        p_prime: &mut [f64],
    ) -> Result<SolveReport> {
        match self.pressure_kind {
            PressureSolverKind::ConjugateGradient => {
                conjugate_gradient(matrix, rhs, p_prime, &self.pressure)
            }
            PressureSolverKind::GaussSeidel => {
                gauss_seidel(matrix, rhs, p_prime, &self.pressure)
            }
        }
    }
}

/// Optional capture of every intermediate field the step produces
/// (predictor velocities and corrected states), used to build bases whose
/// span contains the whole solve sequence.
#[derive(Debug, Default)]
pub struct IntermediateLog {
    pub u: Vec<(Vec<f64>, Vec<f64>)>,
    pub p: Vec<Vec<f64>>,
}

impl IntermediateLog {
    fn push(&mut self, state: &FlowState) {
        self.u.push((state.u.x.clone(), state.u.y.clone()));
        self.p.push(state.p.values.clone());
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    /// Initial relative momentum residual of each outer iteration.
    pub momentum_residuals: Vec<f64>,
    pub pressure: Option<SolveReport>,
    /// Max |sum of cell face fluxes| after the last correction.
    pub continuity_defect: f64,
}

fn momentum_residual(sys: &MomentumSystem, u: &VectorField) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..2 {
        let m = &sys.comp[c].matrix;
        let rhs = &sys.comp[c].rhs;
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for i in 0..m.n() {
            let (cols, vals) = m.row(i);
            let ax: f64 = cols
                .iter()
                .zip(vals)
                .map(|(&j, &v)| v * u.component(c)[j])
                .sum();
            r2 += (rhs[i] - ax) * (rhs[i] - ax);
            b2 += rhs[i] * rhs[i];
        }
        worst = worst.max(r2.sqrt() / b2.sqrt().max(f64::MIN_POSITIVE));
    }
    worst
}

fn continuity_defect(mesh: &Mesh2D, flux: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for cell in 0..mesh.n_cells() {
        let mut div = 0.0;
        for &(f, sign) in mesh.cell_faces(cell) {
            div += sign * flux[f];
        }
        worst = worst.max(div.abs());
    }
    worst
}

/// Correction field boundary conditions: homogeneous versions of the
/// pressure conditions.
fn correction_field(p: &ScalarField, values: Vec<f64>) -> ScalarField {
    ScalarField {
        values,
        bc: p
            .bc
            .iter()
            .map(|b| match b {
                ScalarBc::FixedValue(_) => ScalarBc::FixedValue(0.0),
                ScalarBc::ZeroGradient => ScalarBc::ZeroGradient,
            })
            .collect(),
    }
}

/// One full PIMPLE time step on an already-moved mesh: `n_outer` momentum
/// predictor + pressure corrector sweeps.
pub fn pimple_step(
    ctx: &StepContext,
    controls: &PimpleControls,
    state: &mut FlowState,
    solvers: &mut dyn StageSolvers,
    mut log: Option<&mut IntermediateLog>,
) -> Result<StepReport> {
    let u_time = (state.u.x.clone(), state.u.y.clone());
    let mut residuals = Vec::with_capacity(controls.n_outer);
    let mut pressure_report = None;

    for outer in 0..controls.n_outer {
        let is_final = outer + 1 == controls.n_outer;
        let (alpha_u, alpha_p) = if is_final && controls.final_relax_one {
            (1.0, 1.0)
        } else {
            (controls.alpha_u, controls.alpha_p)
        };

        update_boundary_fluxes(ctx.mesh, ctx.geom, &state.u, ctx.swept, &mut state.flux);
        let mctx = MomentumCtx {
            mesh: ctx.mesh,
            geom: ctx.geom,
            layout: ctx.layout,
            vol_old: ctx.vol_old,
            swept: ctx.swept,
            dt: ctx.dt,
            nu: ctx.nu,
        };
        let mut sys = assemble_momentum(&mctx, &state.u, (&u_time.0, &u_time.1), &state.p, &state.flux)?;
        residuals.push(momentum_residual(&sys, &state.u));
        relax_momentum(&mut sys, &state.u, alpha_u);
        solvers.solve_momentum(&sys, &mut state.u)?;
        if let Some(l) = log.as_deref_mut() {
            l.push(state);
        }

        for _ in 0..controls.n_inner {
            let split = [
                ah_split(&sys.comp[0].matrix, &sys.rhs_no_p[0], &state.u.x),
                ah_split(&sys.comp[1].matrix, &sys.rhs_no_p[1], &state.u.y),
            ];
            let pa = assemble_pressure_poisson(
                ctx.mesh,
                ctx.geom,
                ctx.layout,
                [&split[0].a, &split[1].a],
                [&split[0].h, &split[1].h],
                &state.u,
                &state.p,
                ctx.swept,
            );
            let n = ctx.mesh.n_cells();
            let mut p_prime = vec![0.0; n];
            let mut report =
                solvers.solve_pressure(&pa.system.matrix, &pa.system.rhs, &mut p_prime)?;
            let mut e_face = vec![0.0; ctx.mesh.n_faces()];
            for _ in 0..controls.n_nonorth {
                let ppf = correction_field(&state.p, p_prime.clone());
                e_face = pressure_nonorth_term(ctx.mesh, ctx.geom, &pa, &ppf);
                let rhs = pressure_rhs_with_nonorth(ctx.mesh, &pa, &e_face);
                report = solvers.solve_pressure(&pa.system.matrix, &rhs, &mut p_prime)?;
            }
            state.flux = correct_fluxes(ctx.mesh, &pa, &p_prime, &e_face);
            for i in 0..n {
                state.p.values[i] += alpha_p * p_prime[i];
            }
            let grad_p = grad_scalar(ctx.mesh, ctx.geom, &state.p);
            for i in 0..n {
                state.u.x[i] = pa.hbya[0][i] - pa.rau[i] * grad_p[i].x;
                state.u.y[i] = pa.hbya[1][i] - pa.rau[i] * grad_p[i].y;
            }
            solvers.end_correction(&mut state.u, &mut state.p)?;
            if let Some(l) = log.as_deref_mut() {
                l.push(state);
            }
            pressure_report = Some(report);
        }
    }

    let report = StepReport {
        momentum_residuals: residuals,
        pressure: pressure_report,
        continuity_defect: continuity_defect(ctx.mesh, &state.flux),
    };
    if !report
        .momentum_residuals
        .iter()
        .all(|r| r.is_finite())
        || !report.continuity_defect.is_finite()
    {
        return Err(VivError::Numerics(
            "pimple_step: non-finite residual, the run diverged".into(),
        ));
    }
    Ok(report)
}

/// Courant-limited time step: `cfl_i = dt * sum(|F_f|) / (2 V_i)`, growth
/// capped at 1.2x per step.
pub fn adaptive_dt(
    mesh: &Mesh2D,
    geom: &MeshGeometry,
    flux: &[f64],
    max_cfl: f64,
    dt: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for cell in 0..mesh.n_cells() {
        let mut sum = 0.0;
        for &(f, _) in mesh.cell_faces(cell) {
            sum += flux[f].abs();
        }
        worst = worst.max(sum / (2.0 * geom.cell_volume[cell]));
    }
    let target = if worst > 0.0 {
        max_cfl / worst
    } else {
        f64::INFINITY
    };
    target.min(1.2 * dt)
}

#[derive(Debug, Clone, Copy)]
pub struct HistoryRow {
    pub t: f64,
    pub cl: f64,
    pub cd: f64,
    pub fy: f64,
    pub y: f64,
    pub y_dot: f64,
}

#[derive(Debug)]
pub struct FomResult {
    pub history: Vec<HistoryRow>,
    pub snapshots: Vec<SnapshotRecord>,
    /// Extra fields captured inside the solve sequence when requested.
    pub intermediates: Vec<SnapshotRecord>,
    pub final_state: FlowState,
    pub reference_points: Vec<Vec2>,
}

#[derive(Debug, Default, Clone)]
pub struct FomOptions {
    pub record_intermediates: bool,
    /// Progress lines every this many steps (0 = silent).
    pub progress_every: usize,
}

/// Boundary-condition table of the cross-flow case, patch order taken from
/// the mesh.
fn case_bcs(mesh: &Mesh2D, cfg: &CaseConfig) -> Result<(Vec<VectorBc>, Vec<ScalarBc>)> {
    let inlet = Vec2::new(cfg.u_in, 0.0);
    let mut u_bc = Vec::with_capacity(mesh.patches.len());
    let mut p_bc = Vec::with_capacity(mesh.patches.len());
    for patch in &mesh.patches {
        let (ub, pb) = match patch.name.as_str() {
            "inlet" => (VectorBc::FixedValue(inlet), ScalarBc::ZeroGradient),
            "outlet" => (VectorBc::ZeroGradient, ScalarBc::FixedValue(0.0)),
            "top" | "bottom" => (VectorBc::Symmetry, ScalarBc::ZeroGradient),
            "cylinder" => match cfg.cylinder_bc {
                CylinderBc::MovingWall => {
                    (VectorBc::MovingWall(Vec2::zeros()), ScalarBc::ZeroGradient)
                }
                CylinderBc::FreeStream => (VectorBc::FixedValue(inlet), ScalarBc::ZeroGradient),
            },
            other => {
                return Err(VivError::Config(format!(
                    "mesh patch '{other}' has no boundary condition for the cross-flow case"
                )))
            }
        };
        u_bc.push(ub);
        p_bc.push(pb);
    }
    Ok((u_bc, p_bc))
}

/// Inlet velocity with the transient shedding trigger.
fn inlet_velocity(cfg: &CaseConfig, t: f64) -> Vec2 {
    if cfg.perturb_until > 0.0 && t < cfg.perturb_until && cfg.perturb_amplitude != 0.0 {
        let s = (std::f64::consts::PI * t / cfg.perturb_until).sin();
        Vec2::new(cfg.u_in, cfg.perturb_amplitude * cfg.u_in * s)
    } else {
        Vec2::new(cfg.u_in, 0.0)
    }
}

/// Run the full-order transient problem on the given mesh.
pub fn run_fom(cfg: &CaseConfig, mesh: &mut Mesh2D, opts: &FomOptions) -> Result<FomResult> {
    cfg.validate()?;
    let controls = PimpleControls::from_config(cfg);
    let mut solvers = FomSolvers::from_controls(&controls);
    let layout = MatrixLayout::from_mesh(mesh);
    let mut geom = mesh.geometry()?;

    let (u_bc, p_bc) = case_bcs(mesh, cfg)?;
    let mut state = FlowState::uniform(mesh, &geom, Vec2::new(cfg.u_in, 0.0), u_bc, p_bc)?;
    let cylinder_patch_idx = mesh
        .patches
        .iter()
        .position(|p| p.name == "cylinder")
        .ok_or_else(|| VivError::Config("mesh has no 'cylinder' patch".into()))?;
    let inlet_patch_idx = mesh.patches.iter().position(|p| p.name == "inlet");

    let needs_motion = !matches!(cfg.motion, CylinderMotion::Fixed);
    let motion = if needs_motion {
        Some(MotionSolver::new(mesh, cfg.motion_method, "cylinder")?)
    } else {
        None
    };
    let reference_points = mesh.points.clone();

    let mut osc = Oscillator::new(cfg.mass, cfg.stiffness, cfg.damping_ratio)?;
    let mu = cfg.nu * cfg.rho;
    let mut forces = integrate_fluid_forces(
        mesh,
        &geom,
        &state.u,
        &state.p,
        &mesh.patches[cylinder_patch_idx],
        mu,
        cfg.rho,
        cfg.u_in,
        cfg.diameter,
    )?;

    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut history = vec![HistoryRow {
        t,
        cl: forces.cl,
        cd: forces.cd,
        fy: forces.fy,
        y: osc.y,
        y_dot: osc.y_dot,
    }];
    let mut snapshots = Vec::new();
    let mut intermediates = Vec::new();
    let mut clock = SnapshotClock {
        start: cfg.snapshot_start,
        interval: cfg.snapshot_interval,
        last: -1,
    };
    if clock.due(t, dt) {
        snapshots.push(make_snapshot(t, &state, mesh, &reference_points, &osc, &forces));
    }

    let mut step_count = 0usize;
    while t + 1e-9 < cfg.end_time {
        if controls.adaptive_dt {
            dt = adaptive_dt(mesh, &geom, &state.flux, controls.max_cfl, dt)
                .min(cfg.end_time - t)
                .max(1e-9);
        } else {
            dt = cfg.dt.min(cfg.end_time - t).max(1e-9);
        }

        // Structural stage on the previous step's force, then mesh motion.
        let vol_old = geom.cell_volume.clone();
        let mut swept = SweptAreas::stationary(mesh.n_faces(), dt);
        match cfg.motion {
            CylinderMotion::Fixed => {}
            CylinderMotion::Free => {
                osc = symplectic_step(&osc, forces.fy, dt);
                if !osc.y.is_finite() {
                    return Err(VivError::Numerics(
                        "structural displacement became non-finite".into(),
                    ));
                }
            }
            CylinderMotion::Prescribed {
                amplitude,
                frequency,
            } => {
                let t_new = t + dt;
                osc.y = amplitude * (std::f64::consts::TAU * frequency * t_new).sin();
                osc.y_dot =
                    amplitude * std::f64::consts::TAU * frequency
                        * (std::f64::consts::TAU * frequency * t_new).cos();
            }
        }
        if let Some(motion) = &motion {
            let target = motion.positions_for(mesh, osc.y, cfg.diameter)?;
            let disp: Vec<Vec2> = target
                .iter()
                .zip(&mesh.points)
                .map(|(a, b)| a - b)
                .collect();
            let moved = mesh.move_points(&disp, dt)?;
            geom = moved.0;
            swept = moved.1;
        }

        // Boundary updates for the new time level.
        if matches!(cfg.cylinder_bc, CylinderBc::MovingWall) {
            state.u.bc[cylinder_patch_idx] = VectorBc::MovingWall(Vec2::new(0.0, osc.y_dot));
        }
        if let Some(idx) = inlet_patch_idx {
            if let VectorBc::FixedValue(_) = state.u.bc[idx] {
                state.u.bc[idx] = VectorBc::FixedValue(inlet_velocity(cfg, t + dt));
            }
        }

        let ctx = StepContext {
            mesh,
            geom: &geom,
            layout: &layout,
            vol_old: &vol_old,
            swept: &swept,
            dt,
            nu: cfg.nu,
        };
        let mut log = if opts.record_intermediates {
            Some(IntermediateLog::default())
        } else {
            None
        };
        pimple_step(&ctx, &controls, &mut state, &mut solvers, log.as_mut())?;
        t += dt;
        step_count += 1;

        forces = integrate_fluid_forces(
            mesh,
            &geom,
            &state.u,
            &state.p,
            &mesh.patches[cylinder_patch_idx],
            mu,
            cfg.rho,
            cfg.u_in,
            cfg.diameter,
        )?;
        history.push(HistoryRow {
            t,
            cl: forces.cl,
            cd: forces.cd,
            fy: forces.fy,
            y: osc.y,
            y_dot: osc.y_dot,
        });
        if clock.due(t, dt) {
            snapshots.push(make_snapshot(t, &state, mesh, &reference_points, &osc, &forces));
        }
        if let Some(l) = log {
            for (u, p) in l.u.into_iter().zip(l.p) {
                intermediates.push(SnapshotRecord {
                    time: t,
                    u: stack_components(&u.0, &u.1),
                    p,
                    displacement: stack_displacement(mesh, &reference_points),
                    y: osc.y,
                    y_dot: osc.y_dot,
                    forces,
                });
            }
        }
        if opts.progress_every > 0 && step_count % opts.progress_every == 0 {
            eprintln!(
                "t = {t:.3}  cl = {:+.4}  cd = {:.4}  y = {:+.5}",
                forces.cl, forces.cd, osc.y
            );
        }
    }

    Ok(FomResult {
        history,
        snapshots,
        intermediates,
        final_state: state,
        reference_points,
    })
}

/// Decides when an export time has been reached on the marching grid.
pub struct SnapshotClock {
    pub start: f64,
    pub interval: f64,
    pub last: i64,
}

impl SnapshotClock {
    pub fn due(&mut self, t: f64, dt: f64) -> bool {
        if self.interval <= 0.0 || t + 1e-12 < self.start {
            return false;
        }
        let k = ((t - self.start) / self.interval).round() as i64;
        let t_k = self.start + k as f64 * self.interval;
        if (t - t_k).abs() < 0.25 * dt.max(1e-300) && k > self.last {
            self.last = k;
            true
        } else {
            false
        }
    }
}

fn stack_components(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * 2);
    out.extend_from_slice(x);
    out.extend_from_slice(y);
    out
}

fn stack_displacement(mesh: &Mesh2D, reference: &[Vec2]) -> Vec<f64> {
    let n = mesh.n_points();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        let d = mesh.points[i] - reference[i];
        out[i] = d.x;
        out[n + i] = d.y;
    }
    out
}

pub fn make_snapshot(
    time: f64,
    state: &FlowState,
    mesh: &Mesh2D,
    reference: &[Vec2],
    osc: &Oscillator,
    forces: &ForceResult,
) -> SnapshotRecord {
    SnapshotRecord {
        time,
        u: stack_components(&state.u.x, &state.u.y),
        p: state.p.values.clone(),
        displacement: stack_displacement(mesh, reference),
        y: osc.y,
        y_dot: osc.y_dot,
        forces: *forces,
    }
}

/// Write forces.csv, motion.csv and the snapshot directory of a run.
pub fn write_fom_outputs(paths: &CasePaths, cfg: &CaseConfig, result: &FomResult) -> Result<()> {
    std::fs::create_dir_all(&paths.root)?;
    let force_rows: Vec<Vec<f64>> = result
        .history
        .iter()
        .map(|h| vec![h.t, h.cl, h.cd, h.fy])
        .collect();
    crate::io::write_csv(&paths.forces(), &["t", "cl", "cd", "fy"], &force_rows)?;
    let motion_rows: Vec<Vec<f64>> = result
        .history
        .iter()
        .map(|h| vec![h.t, h.y, h.y_dot])
        .collect();
    crate::io::write_csv(&paths.motion(), &["t", "y", "y_dot"], &motion_rows)?;
    crate::io::write_snapshots(&paths.snapshots(), &result.snapshots)?;
    cfg.save(&paths.resolved_config())?;
    Ok(())
}

#[cfg(test)]
mod tests;
