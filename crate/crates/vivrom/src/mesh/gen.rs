//! Built-in mesh generators: uniform Cartesian blocks and a body-fitted
//! O-grid around a circular cylinder inside a rectangular far field.

use super::{edge_normal, Face, Mesh2D, Patch, Vec2};
use crate::error::{Result, VivError};

#[derive(Debug, Clone)]
pub struct CartesianSpec {
    pub nx: usize,
    pub ny: usize,
    pub origin: Vec2,
    pub lx: f64,
    pub ly: f64,
}

impl CartesianSpec {
    pub fn unit(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            origin: Vec2::zeros(),
            lx: 1.0,
            ly: 1.0,
        }
    }
}

/// Uniform Cartesian mesh with patches `left`, `right`, `bottom`, `top`.
/// Cells are numbered row-major from the lower-left corner.
pub fn cartesian(spec: &CartesianSpec) -> Result<Mesh2D> {
    let (nx, ny) = (spec.nx, spec.ny);
    if nx == 0 || ny == 0 || spec.lx <= 0.0 || spec.ly <= 0.0 {
        return Err(VivError::Config(format!(
            "cartesian mesh: nx={nx}, ny={ny}, lx={}, ly={} must all be positive",
            spec.lx, spec.ly
        )));
    }
    let dx = spec.lx / nx as f64;
    let dy = spec.ly / ny as f64;
    let pid = |i: usize, j: usize| j * (nx + 1) + i;
    let cid = |i: usize, j: usize| j * nx + i;

    let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            points.push(spec.origin + Vec2::new(i as f64 * dx, j as f64 * dy));
        }
    }

    let mut faces = Vec::new();
    // Vertical internal faces: owner on the left, normal +x.
    for j in 0..ny {
        for i in 1..nx {
            faces.push(Face {
                a: pid(i, j),
                b: pid(i, j + 1),
                owner: cid(i - 1, j),
                neighbour: Some(cid(i, j)),
            });
        }
    }
    // Horizontal internal faces: owner below, normal +y.
    for j in 1..ny {
        for i in 0..nx {
            faces.push(Face {
                a: pid(i + 1, j),
                b: pid(i, j),
                owner: cid(i, j - 1),
                neighbour: Some(cid(i, j)),
            });
        }
    }

    let mut patches = Vec::new();
    let mut add_patch = |name: &str, fs: Vec<Face>, faces: &mut Vec<Face>| {
        patches.push(Patch {
            name: name.into(),
            start: faces.len(),
            count: fs.len(),
        });
        faces.extend(fs);
    };
    add_patch(
        "left",
        (0..ny)
            .map(|j| Face {
                a: pid(0, j + 1),
                b: pid(0, j),
                owner: cid(0, j),
                neighbour: None,
            })
            .collect(),
        &mut faces,
    );
    add_patch(
        "right",
        (0..ny)
            .map(|j| Face {
                a: pid(nx, j),
                b: pid(nx, j + 1),
                owner: cid(nx - 1, j),
                neighbour: None,
            })
            .collect(),
        &mut faces,
    );
    add_patch(
        "bottom",
        (0..nx)
            .map(|i| Face {
                a: pid(i, 0),
                b: pid(i + 1, 0),
                owner: cid(i, 0),
                neighbour: None,
            })
            .collect(),
        &mut faces,
    );
    add_patch(
        "top",
        (0..nx)
            .map(|i| Face {
                a: pid(i + 1, ny),
                b: pid(i, ny),
                owner: cid(i, ny - 1),
                neighbour: None,
            })
            .collect(),
        &mut faces,
    );

    Mesh2D::from_parts(points, faces, patches)
}

#[derive(Debug, Clone)]
pub struct OgridSpec {
    /// Cylinder diameter.
    pub diameter: f64,
    /// Cylinder center.
    pub center: Vec2,
    /// Far-field rectangle.
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Points around the circumference (also cells per ring).
    pub n_circ: usize,
    /// Cell layers from the cylinder to the far field.
    pub n_rad: usize,
    /// Geometric expansion of layer thickness away from the cylinder (>= 1).
    pub grading: f64,
}

impl OgridSpec {
    /// Desk-scale defaults around a unit cylinder.
    pub fn desk(diameter: f64) -> Self {
        Self {
            diameter,
            center: Vec2::zeros(),
            x_min: -8.0 * diameter,
            x_max: 20.0 * diameter,
            y_min: -8.0 * diameter,
            y_max: 8.0 * diameter,
            n_circ: 72,
            n_rad: 40,
            grading: 1.12,
        }
    }
}

/// Body-fitted O-grid: `n_circ` rays from the cylinder surface to the
/// far-field rectangle, `n_rad` geometrically graded layers along each ray.
///
/// Four rays are snapped onto the rectangle corners so every outer face lies
/// on exactly one side; the sides become the patches `inlet` (left),
/// `outlet` (right), `bottom` and `top`, plus the `cylinder` patch.
pub fn ogrid(spec: &OgridSpec) -> Result<Mesh2D> {
    let r = spec.diameter / 2.0;
    if r <= 0.0 {
        return Err(VivError::Config(format!(
            "ogrid: diameter {} must be positive",
            spec.diameter
        )));
    }
    if spec.n_circ < 8 || spec.n_rad < 2 {
        return Err(VivError::Config(
            "ogrid: need n_circ >= 8 and n_rad >= 2".into(),
        ));
    }
    if spec.grading < 1.0 {
        return Err(VivError::Config("ogrid: grading must be >= 1".into()));
    }
    let c = spec.center;
    let margin = 2.0 * r;
    if c.x - spec.x_min < margin
        || spec.x_max - c.x < margin
        || c.y - spec.y_min < margin
        || spec.y_max - c.y < margin
    {
        return Err(VivError::Config(
            "ogrid: cylinder too close to the far-field rectangle".into(),
        ));
    }

    let n = spec.n_circ;
    let two_pi = std::f64::consts::TAU;
    let mut angles: Vec<f64> = (0..n).map(|k| two_pi * k as f64 / n as f64).collect();
    // Snap the nearest ray onto each rectangle corner so that outer faces
    // never straddle a corner.
    let corners = [
        Vec2::new(spec.x_max, spec.y_max),
        Vec2::new(spec.x_min, spec.y_max),
        Vec2::new(spec.x_min, spec.y_min),
        Vec2::new(spec.x_max, spec.y_min),
    ];
    for corner in corners {
        let phi = {
            let d = corner - c;
            let a = d.y.atan2(d.x);
            if a < 0.0 {
                a + two_pi
            } else {
                a
            }
        };
        let k = (0..n)
            .min_by(|&i, &j| {
                let di = ang_dist(angles[i], phi);
                let dj = ang_dist(angles[j], phi);
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap();
        angles[k] = phi;
    }

    // Radial fractions, geometrically graded (fine near the cylinder).
    let g = spec.grading;
    let fractions: Vec<f64> = if (g - 1.0).abs() < 1e-12 {
        (0..=spec.n_rad).map(|j| j as f64 / spec.n_rad as f64).collect()
    } else {
        let total = (g.powi(spec.n_rad as i32) - 1.0) / (g - 1.0);
        (0..=spec.n_rad)
            .map(|j| ((g.powi(j as i32) - 1.0) / (g - 1.0)) / total)
            .collect()
    };

    let mut points = Vec::with_capacity((spec.n_rad + 1) * n);
    for &t in &fractions {
        for &th in &angles {
            let dir = Vec2::new(th.cos(), th.sin());
            let inner = c + r * dir;
            let outer = c + ray_to_rect(dir, c, spec);
            points.push(inner + t * (outer - inner));
        }
    }
    let pid = |k: usize, j: usize| j * n + (k % n);
    let cid = |k: usize, j: usize| j * n + (k % n);
    let n_cells = spec.n_rad * n;

    // Approximate cell centers, used only to orient faces.
    let center_of = |k: usize, j: usize| -> Vec2 {
        0.25 * (points[pid(k, j)]
            + points[pid(k + 1, j)]
            + points[pid(k + 1, j + 1)]
            + points[pid(k, j + 1)])
    };

    let orient = |mut f: Face| -> Face {
        let (kj, owner) = f_owner_cell(f.owner, n);
        let cc = center_of(kj, owner);
        let mid = 0.5 * (points[f.a] + points[f.b]);
        if edge_normal(points[f.a], points[f.b]).dot(&(mid - cc)) < 0.0 {
            std::mem::swap(&mut f.a, &mut f.b);
        }
        f
    };
    fn f_owner_cell(cell: usize, n: usize) -> (usize, usize) {
        (cell % n, cell / n)
    }

    let mut faces = Vec::new();
    // "Spoke" faces between circumferentially adjacent cells.
    for j in 0..spec.n_rad {
        for k in 0..n {
            let (c0, c1) = (cid(k, j), cid(k + 1, j));
            let (owner, neighbour) = (c0.min(c1), c0.max(c1));
            faces.push(orient(Face {
                a: pid(k + 1, j),
                b: pid(k + 1, j + 1),
                owner,
                neighbour: Some(neighbour),
            }));
        }
    }
    // "Ring" faces between radially adjacent cells.
    for j in 1..spec.n_rad {
        for k in 0..n {
            faces.push(orient(Face {
                a: pid(k, j),
                b: pid(k + 1, j),
                owner: cid(k, j - 1),
                neighbour: Some(cid(k, j)),
            }));
        }
    }
    faces.sort_by_key(|f| (f.owner, f.neighbour));

    // Cylinder patch.
    let mut cyl = Vec::new();
    for k in 0..n {
        cyl.push(orient(Face {
            a: pid(k, 0),
            b: pid(k + 1, 0),
            owner: cid(k, 0),
            neighbour: None,
        }));
    }
    // Outer boundary, split by rectangle side.
    let mut sides: [Vec<Face>; 4] = Default::default(); // left, right, bottom, top
    let eps = 1e-9 * (spec.x_max - spec.x_min).max(spec.y_max - spec.y_min);
    for k in 0..n {
        let f = orient(Face {
            a: pid(k, spec.n_rad),
            b: pid(k + 1, spec.n_rad),
            owner: cid(k, spec.n_rad - 1),
            neighbour: None,
        });
        let mid = 0.5 * (points[f.a] + points[f.b]);
        let side = if (mid.x - spec.x_min).abs() < eps {
            0
        } else if (mid.x - spec.x_max).abs() < eps {
            1
        } else if (mid.y - spec.y_min).abs() < eps {
            2
        } else if (mid.y - spec.y_max).abs() < eps {
            3
        } else {
            return Err(VivError::Mesh(format!(
                "ogrid: outer face {k} not on the rectangle (midpoint {mid:?})"
            )));
        };
        sides[side].push(f);
    }

    let mut patches = Vec::new();
    let mut push_patch = |name: &str, fs: Vec<Face>, faces: &mut Vec<Face>| {
        patches.push(Patch {
            name: name.into(),
            start: faces.len(),
            count: fs.len(),
        });
        faces.extend(fs);
    };
    push_patch("cylinder", cyl, &mut faces);
    let [left, right, bottom, top] = sides;
    push_patch("inlet", left, &mut faces);
    push_patch("outlet", right, &mut faces);
    push_patch("bottom", bottom, &mut faces);
    push_patch("top", top, &mut faces);

    debug_assert_eq!(n_cells, spec.n_rad * n);
    Mesh2D::from_parts(points, faces, patches)
}

fn ang_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Offset from `c` along `dir` to the far-field rectangle boundary.
fn ray_to_rect(dir: Vec2, c: Vec2, spec: &OgridSpec) -> Vec2 {
    let mut t = f64::INFINITY;
    if dir.x > 1e-300 {
        t = t.min((spec.x_max - c.x) / dir.x);
    }
    if dir.x < -1e-300 {
        t = t.min((spec.x_min - c.x) / dir.x);
    }
    if dir.y > 1e-300 {
        t = t.min((spec.y_max - c.y) / dir.y);
    }
    if dir.y < -1e-300 {
        t = t.min((spec.y_min - c.y) / dir.y);
    }
    t * dir
}

/// Unit square split into two triangles along the main diagonal.
/// Used by geometry tests.
pub fn two_triangles() -> Mesh2D {
    let points = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ];
    // Cell 0: (0,1,2) lower-right triangle; cell 1: (0,2,3) upper-left.
    let faces = vec![
        Face {
            a: 2,
            b: 0,
            owner: 0,
            neighbour: Some(1),
        },
        Face {
            a: 0,
            b: 1,
            owner: 0,
            neighbour: None,
        },
        Face {
            a: 1,
            b: 2,
            owner: 0,
            neighbour: None,
        },
        Face {
            a: 2,
            b: 3,
            owner: 1,
            neighbour: None,
        },
        Face {
            a: 3,
            b: 0,
            owner: 1,
            neighbour: None,
        },
    ];
    let patches = vec![Patch {
        name: "boundary".into(),
        start: 1,
        count: 4,
    }];
    Mesh2D::from_parts(points, faces, patches).expect("two_triangles is valid")
}
