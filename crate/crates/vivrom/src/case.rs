//! Case configuration: a flat `key = value` file with `[section]` headers.
//! Every field has a default matching the cross-flow cylinder study, and the
//! fully resolved configuration is written back next to the outputs so a run
//! records exactly what produced it.

use crate::error::{Result, VivError};
use crate::mesh::{OgridSpec, Vec2};
use crate::meshmotion::MotionMethod;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureSolverKind {
    ConjugateGradient,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CylinderMotion {
    /// Coupled to the oscillator.
    Free,
    /// Rigidly held.
    Fixed,
    /// Prescribed transverse sine, `y(t) = amplitude * sin(2 pi freq t)`.
    Prescribed { amplitude: f64, frequency: f64 },
}

/// Boundary treatment of the cylinder patch. `FreeStream` replaces the
/// no-slip wall by the fixed inlet velocity, which is what the free-stream
/// preservation test needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderBc {
    MovingWall,
    FreeStream,
}

#[derive(Debug, Clone)]
pub struct CaseConfig {
    // geometry
    pub diameter: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub n_circ: usize,
    pub n_rad: usize,
    pub grading: f64,
    // physics
    pub nu: f64,
    pub rho: f64,
    pub u_in: f64,
    /// Optional declared Reynolds number, checked against u_in * D / nu.
    pub re: Option<f64>,
    // structure
    pub mass: f64,
    pub stiffness: f64,
    pub damping_ratio: f64,
    pub motion: CylinderMotion,
    pub cylinder_bc: CylinderBc,
    pub motion_method: MotionMethod,
    // controls
    pub dt: f64,
    pub end_time: f64,
    pub adaptive_dt: bool,
    pub max_cfl: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_nonorth: usize,
    pub alpha_u: f64,
    pub alpha_p: f64,
    pub tol_u: f64,
    pub tol_p: f64,
    pub max_iter_u: usize,
    pub max_iter_p: usize,
    pub pressure_solver: PressureSolverKind,
    /// Transient inlet tilt that triggers vortex shedding; zero disables.
    pub perturb_until: f64,
    pub perturb_amplitude: f64,
    // snapshots
    pub snapshot_start: f64,
    pub snapshot_interval: f64,
    // pod / rom
    pub modes_u: usize,
    pub modes_p: usize,
    pub modes_d: usize,
    pub ric_target: f64,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            diameter: 1.0,
            x_min: -8.0,
            x_max: 20.0,
            y_min: -8.0,
            y_max: 8.0,
            n_circ: 72,
            n_rad: 40,
            grading: 1.12,
            nu: 0.005,
            rho: 1.0,
            u_in: 1.0,
            re: Some(200.0),
            mass: 0.1,
            stiffness: 0.135114884,
            damping_ratio: 0.4,
            motion: CylinderMotion::Free,
            cylinder_bc: CylinderBc::MovingWall,
            motion_method: MotionMethod::Rbf,
            dt: 0.01,
            end_time: 30.0,
            adaptive_dt: false,
            max_cfl: 0.9,
            n_outer: 3,
            n_inner: 1,
            n_nonorth: 1,
            alpha_u: 0.7,
            alpha_p: 0.3,
            tol_u: 1e-7,
            tol_p: 1e-7,
            max_iter_u: 300,
            max_iter_p: 2000,
            pressure_solver: PressureSolverKind::ConjugateGradient,
            perturb_until: 10.0,
            perturb_amplitude: 0.1,
            snapshot_start: 0.0,
            snapshot_interval: 0.1,
            modes_u: 30,
            modes_p: 30,
            modes_d: 1,
            ric_target: 0.999,
        }
    }
}

impl CaseConfig {
    pub fn reynolds(&self) -> f64 {
        self.u_in * self.diameter / self.nu
    }

    pub fn ogrid_spec(&self) -> OgridSpec {
        OgridSpec {
            diameter: self.diameter,
            center: Vec2::zeros(),
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
            n_circ: self.n_circ,
            n_rad: self.n_rad,
            grading: self.grading,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.diameter <= 0.0 {
            return Err(VivError::Config("diameter must be > 0".into()));
        }
        if self.nu <= 0.0 || self.rho <= 0.0 {
            return Err(VivError::Config("nu and rho must be > 0".into()));
        }
        if let Some(re) = self.re {
            let actual = self.reynolds();
            if (actual - re).abs() > 1e-6 * re.abs().max(1.0) {
                return Err(VivError::Config(format!(
                    "declared re = {re} inconsistent with u_in*D/nu = {actual}"
                )));
            }
        }
        if !(self.alpha_u > 0.0 && self.alpha_u <= 1.0 && self.alpha_p > 0.0 && self.alpha_p <= 1.0)
        {
            return Err(VivError::Config("relaxation factors must be in (0,1]".into()));
        }
        if self.max_cfl <= 0.0 {
            return Err(VivError::Config("max_cfl must be > 0".into()));
        }
        if !(self.ric_target > 0.0 && self.ric_target <= 1.0) {
            return Err(VivError::Config("ric_target must be in (0,1]".into()));
        }
        if self.dt <= 0.0 || self.end_time <= 0.0 {
            return Err(VivError::Config("dt and end_time must be > 0".into()));
        }
        if self.n_outer == 0 {
            return Err(VivError::Config("n_outer must be >= 1".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let err = |line: usize, msg: String| VivError::Format {
            path: origin.to_string(),
            msg: format!("line {line}: {msg}"),
        };
        let mut section = String::new();
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(ln + 1, format!("expected 'key = value', got '{line}'")))?;
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            entries.insert(full, (ln + 1, value.trim().to_string()));
        }

        for (key, (ln, value)) in entries {
            self.apply_entry(&key, &value)
                .map_err(|msg| err(ln, msg))?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(v: &str) -> std::result::Result<f64, String> {
            v.parse().map_err(|_| format!("bad number '{v}'"))
        }
        fn int(v: &str) -> std::result::Result<usize, String> {
            v.parse().map_err(|_| format!("bad integer '{v}'"))
        }
        fn boolean(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("bad boolean '{v}'")),
            }
        }
        match key {
            "geometry.diameter" => self.diameter = num(value)?,
            "geometry.x_min" => self.x_min = num(value)?,
            "geometry.x_max" => self.x_max = num(value)?,
            "geometry.y_min" => self.y_min = num(value)?,
            "geometry.y_max" => self.y_max = num(value)?,
            "geometry.n_circ" => self.n_circ = int(value)?,
            "geometry.n_rad" => self.n_rad = int(value)?,
            "geometry.grading" => self.grading = num(value)?,
            "physics.nu" => self.nu = num(value)?,
            "physics.rho" => self.rho = num(value)?,
            "physics.u_in" => self.u_in = num(value)?,
            "physics.re" => self.re = Some(num(value)?),
            "structure.mass" => self.mass = num(value)?,
            "structure.stiffness" => self.stiffness = num(value)?,
            "structure.damping_ratio" => self.damping_ratio = num(value)?,
            "structure.motion" => {
                let mut it = value.split_whitespace();
                self.motion = match it.next() {
                    Some("free") => CylinderMotion::Free,
                    Some("fixed") => CylinderMotion::Fixed,
                    Some("prescribed") => {
                        let amplitude = num(it.next().ok_or("prescribed needs amplitude")?)?;
                        let frequency = num(it.next().ok_or("prescribed needs frequency")?)?;
                        CylinderMotion::Prescribed {
                            amplitude,
                            frequency,
                        }
                    }
                    other => return Err(format!("bad motion '{other:?}'")),
                };
            }
            "structure.cylinder_bc" => {
                self.cylinder_bc = match value {
                    "movingwall" => CylinderBc::MovingWall,
                    "freestream" => CylinderBc::FreeStream,
                    _ => return Err(format!("bad cylinder_bc '{value}'")),
                };
            }
            "structure.motion_method" => {
                self.motion_method = match value {
                    "rbf" => MotionMethod::Rbf,
                    "spring" => MotionMethod::Spring,
                    _ => return Err(format!("bad motion_method '{value}'")),
                };
            }
            "controls.dt" => self.dt = num(value)?,
            "controls.end_time" => self.end_time = num(value)?,
            "controls.adaptive_dt" => self.adaptive_dt = boolean(value)?,
            "controls.max_cfl" => self.max_cfl = num(value)?,
            "controls.n_outer" => self.n_outer = int(value)?,
            "controls.n_inner" => self.n_inner = int(value)?,
            "controls.n_nonorth" => self.n_nonorth = int(value)?,
            "controls.alpha_u" => self.alpha_u = num(value)?,
            "controls.alpha_p" => self.alpha_p = num(value)?,
            "controls.tol_u" => self.tol_u = num(value)?,
            "controls.tol_p" => self.tol_p = num(value)?,
            "controls.max_iter_u" => self.max_iter_u = int(value)?,
            "controls.max_iter_p" => self.max_iter_p = int(value)?,
            "controls.pressure_solver" => {
                self.pressure_solver = match value {
                    "cg" => PressureSolverKind::ConjugateGradient,
                    "gs" => PressureSolverKind::GaussSeidel,
                    _ => return Err(format!("bad pressure_solver '{value}'")),
                };
            }
            "controls.perturb_until" => self.perturb_until = num(value)?,
            "controls.perturb_amplitude" => self.perturb_amplitude = num(value)?,
            "snapshots.start" => self.snapshot_start = num(value)?,
            "snapshots.interval" => self.snapshot_interval = num(value)?,
            "pod.modes_u" => self.modes_u = int(value)?,
            "pod.modes_p" => self.modes_p = int(value)?,
            "pod.modes_d" => self.modes_d = int(value)?,
            "pod.ric_target" => self.ric_target = num(value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Serialise every resolved value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let motion = match self.motion {
            CylinderMotion::Free => "free".to_string(),
            CylinderMotion::Fixed => "fixed".to_string(),
            CylinderMotion::Prescribed {
                amplitude,
                frequency,
            } => format!("prescribed {amplitude} {frequency}"),
        };
        writeln!(s, "[geometry]").unwrap();
        writeln!(s, "diameter = {}", self.diameter).unwrap();
        writeln!(s, "x_min = {}", self.x_min).unwrap();
        writeln!(s, "x_max = {}", self.x_max).unwrap();
        writeln!(s, "y_min = {}", self.y_min).unwrap();
        writeln!(s, "y_max = {}", self.y_max).unwrap();
        writeln!(s, "n_circ = {}", self.n_circ).unwrap();
        writeln!(s, "n_rad = {}", self.n_rad).unwrap();
        writeln!(s, "grading = {}", self.grading).unwrap();
        writeln!(s, "\n[physics]").unwrap();
        writeln!(s, "nu = {}", self.nu).unwrap();
        writeln!(s, "rho = {}", self.rho).unwrap();
        writeln!(s, "u_in = {}", self.u_in).unwrap();
        if let Some(re) = self.re {
            writeln!(s, "re = {re}").unwrap();
        }
        writeln!(s, "\n[structure]").unwrap();
        writeln!(s, "mass = {}", self.mass).unwrap();
        writeln!(s, "stiffness = {}", self.stiffness).unwrap();
        writeln!(s, "damping_ratio = {}", self.damping_ratio).unwrap();
        writeln!(s, "motion = {motion}").unwrap();
        writeln!(
            s,
            "cylinder_bc = {}",
            match self.cylinder_bc {
                CylinderBc::MovingWall => "movingwall",
                CylinderBc::FreeStream => "freestream",
            }
        )
        .unwrap();
        writeln!(
            s,
            "motion_method = {}",
            match self.motion_method {
                MotionMethod::Rbf => "rbf",
                MotionMethod::Spring => "spring",
            }
        )
        .unwrap();
        writeln!(s, "\n[controls]").unwrap();
        writeln!(s, "dt = {}", self.dt).unwrap();
        writeln!(s, "end_time = {}", self.end_time).unwrap();
        writeln!(s, "adaptive_dt = {}", self.adaptive_dt).unwrap();
        writeln!(s, "max_cfl = {}", self.max_cfl).unwrap();
        writeln!(s, "n_outer = {}", self.n_outer).unwrap();
        writeln!(s, "n_inner = {}", self.n_inner).unwrap();
        writeln!(s, "n_nonorth = {}", self.n_nonorth).unwrap();
        writeln!(s, "alpha_u = {}", self.alpha_u).unwrap();
        writeln!(s, "alpha_p = {}", self.alpha_p).unwrap();
        writeln!(s, "tol_u = {}", self.tol_u).unwrap();
        writeln!(s, "tol_p = {}", self.tol_p).unwrap();
        writeln!(s, "max_iter_u = {}", self.max_iter_u).unwrap();
        writeln!(s, "max_iter_p = {}", self.max_iter_p).unwrap();
        writeln!(
            s,
            "pressure_solver = {}",
            match self.pressure_solver {
                PressureSolverKind::ConjugateGradient => "cg",
                PressureSolverKind::GaussSeidel => "gs",
            }
        )
        .unwrap();
        writeln!(s, "perturb_until = {}", self.perturb_until).unwrap();
        writeln!(s, "perturb_amplitude = {}", self.perturb_amplitude).unwrap();
        writeln!(s, "\n[snapshots]").unwrap();
        writeln!(s, "start = {}", self.snapshot_start).unwrap();
        writeln!(s, "interval = {}", self.snapshot_interval).unwrap();
        writeln!(s, "\n[pod]").unwrap();
        writeln!(s, "modes_u = {}", self.modes_u).unwrap();
        writeln!(s, "modes_p = {}", self.modes_p).unwrap();
        writeln!(s, "modes_d = {}", self.modes_d).unwrap();
        writeln!(s, "ric_target = {}", self.ric_target).unwrap();
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = CaseConfig::default();
        let mut back = CaseConfig::default();
        back.end_time = 1.0; // scribble, then restore via parse
        back.apply_text(&cfg.to_text(), "inline").unwrap();
        assert_eq!(back.end_time, cfg.end_time);
        assert_eq!(back.stiffness, cfg.stiffness);
        assert_eq!(back.motion, cfg.motion);
        back.validate().unwrap();
    }

    #[test]
    fn reynolds_consistency_is_enforced() {
        let mut cfg = CaseConfig::default();
        cfg.re = Some(150.0); // u_in * D / nu = 200
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("inconsistent"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let mut cfg = CaseConfig::default();
        let err = cfg
            .apply_text("[physics]\nviscosity = 1\n", "inline")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("unknown key"), "{msg}");
    }

    #[test]
    fn prescribed_motion_parses() {
        let mut cfg = CaseConfig::default();
        cfg.apply_text("[structure]\nmotion = prescribed 0.1 0.2\n", "inline")
            .unwrap();
        assert_eq!(
            cfg.motion,
            CylinderMotion::Prescribed {
                amplitude: 0.1,
                frequency: 0.2
            }
        );
    }
}
