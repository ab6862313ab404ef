use super::*;
use gen::two_triangles;

fn closedness_defect(mesh: &Mesh2D, geom: &MeshGeometry, cell: usize) -> f64 {
    let mut sum = Vec2::zeros();
    let mut scale = 0.0;
    for &(f, sign) in mesh.cell_faces(cell) {
        sum += sign * geom.face_area[f];
        scale += geom.face_area[f].norm();
    }
    sum.norm() / scale
}

#[test]
fn two_triangles_geometry() {
    let mesh = two_triangles();
    let geom = mesh.geometry().unwrap();
    assert_eq!(mesh.n_cells(), 2);
    for c in 0..2 {
        assert!((geom.cell_volume[c] - 0.5).abs() < 1e-15);
        assert!(closedness_defect(&mesh, &geom, c) < 1e-12);
    }
}

#[test]
fn unit_square_cell() {
    let mesh = cartesian(&CartesianSpec::unit(1, 1)).unwrap();
    let geom = mesh.geometry().unwrap();
    assert_eq!(mesh.n_cells(), 1);
    assert!((geom.cell_volume[0] - 1.0).abs() < 1e-15);
    assert_eq!(mesh.n_faces(), 4);
    for f in 0..4 {
        assert!((geom.face_area[f].norm() - 1.0).abs() < 1e-15);
    }
    let c = geom.cell_center[0];
    assert!((c - Vec2::new(0.5, 0.5)).norm() < 1e-15);
}

/// Shoelace polygon area, independent of the face-gather formula used by
/// `MeshGeometry`.
fn shoelace(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

#[test]
fn perturbed_quads_match_shoelace_oracle() {
    // 4x4 Cartesian block with deterministically jittered interior points.
    let nx = 4;
    let mut mesh = cartesian(&CartesianSpec::unit(nx, nx)).unwrap();
    let h = 1.0 / nx as f64;
    for j in 1..nx {
        for i in 1..nx {
            let p = &mut mesh.points[j * (nx + 1) + i];
            let s = ((i * 31 + j * 17) % 7) as f64 / 7.0 - 0.5;
            let t = ((i * 13 + j * 29) % 5) as f64 / 5.0 - 0.5;
            *p += Vec2::new(0.3 * h * s, 0.3 * h * t);
        }
    }
    let geom = mesh.geometry().unwrap();
    let pid = |i: usize, j: usize| j * (nx + 1) + i;
    for j in 0..nx {
        for i in 0..nx {
            let poly = [
                mesh.points[pid(i, j)],
                mesh.points[pid(i + 1, j)],
                mesh.points[pid(i + 1, j + 1)],
                mesh.points[pid(i, j + 1)],
            ];
            let oracle = shoelace(&poly);
            let got = geom.cell_volume[j * nx + i];
            assert!(
                (got - oracle).abs() < 1e-14,
                "cell ({i},{j}): {got} vs shoelace {oracle}"
            );
            assert!(closedness_defect(&mesh, &geom, j * nx + i) < 1e-12);
        }
    }
}

#[test]
fn zero_displacement_is_stationary() {
    let mut mesh = cartesian(&CartesianSpec::unit(3, 3)).unwrap();
    let disp = vec![Vec2::zeros(); mesh.n_points()];
    let (_, swept) = mesh.move_points(&disp, 0.1).unwrap();
    for f in 0..mesh.n_faces() {
        assert_eq!(swept.delta_area[f], 0.0);
        assert_eq!(swept.mesh_flux(f), 0.0);
    }
}

#[test]
fn rigid_translation_preserves_volumes_and_gcl() {
    let mut mesh = cartesian(&CartesianSpec::unit(4, 3)).unwrap();
    let before = mesh.geometry().unwrap();
    let disp = vec![Vec2::new(0.0, 0.1); mesh.n_points()];
    let (after, swept) = mesh.move_points(&disp, 0.05).unwrap();
    for c in 0..mesh.n_cells() {
        let dv: f64 = mesh
            .cell_faces(c)
            .iter()
            .map(|&(f, s)| s * swept.delta_area[f])
            .sum();
        assert!(dv.abs() < 1e-12 * before.cell_volume[c]);
        assert!(
            (after.cell_volume[c] - before.cell_volume[c]).abs()
                < 1e-12 * before.cell_volume[c]
        );
    }
}

#[test]
fn rigid_rotation_preserves_volumes() {
    let mut mesh = gen::ogrid(&OgridSpec {
        n_circ: 16,
        n_rad: 6,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    let before = mesh.geometry().unwrap();
    let th: f64 = 0.02;
    let (s, c) = th.sin_cos();
    let disp: Vec<Vec2> = mesh
        .points
        .iter()
        .map(|p| Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) - p)
        .collect();
    let (after, _) = mesh.move_points(&disp, 1.0).unwrap();
    for cell in 0..mesh.n_cells() {
        assert!(
            (after.cell_volume[cell] - before.cell_volume[cell]).abs()
                < 1e-12 * before.cell_volume[cell]
        );
    }
}

#[test]
fn vertical_stretch_swept_area_matches_rectangle_oracle() {
    // Stretch the top row of a 2x2 unit mesh upward: the horizontal faces of
    // the moving row sweep exact rectangles.
    let mut mesh = cartesian(&CartesianSpec::unit(2, 2)).unwrap();
    let dy = 0.125;
    let disp: Vec<Vec2> = mesh
        .points
        .iter()
        .map(|p| {
            if p.y > 0.75 {
                Vec2::new(0.0, dy)
            } else {
                Vec2::zeros()
            }
        })
        .collect();
    let geom0 = mesh.geometry().unwrap();
    let (_, swept) = mesh.move_points(&disp, 1.0).unwrap();
    for f in 0..mesh.n_faces() {
        let s = geom0.face_area[f];
        // Only horizontal faces whose points moved sweep anything; stretched
        // vertical faces trace a zero-area sliver.
        let moved = mesh.faces[f].a;
        let expected = if mesh.points[moved].y > 0.75 + dy - 1e-9 && s.y.abs() > 1e-12 {
            // Horizontal face of length |S| translating by dy along its
            // normal sign.
            dy * s.y.signum() * s.norm()
        } else {
            0.0
        };
        assert!(
            (swept.delta_area[f] - expected).abs() < 1e-14,
            "face {f}: swept {} vs oracle {expected}",
            swept.delta_area[f]
        );
    }
}

#[test]
fn random_motion_satisfies_discrete_gcl() {
    // Arbitrary deterministic interior wobble on the O-grid; the GCL identity
    // must hold per cell to machine precision.
    let mut mesh = gen::ogrid(&OgridSpec {
        n_circ: 24,
        n_rad: 8,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    let before = mesh.geometry().unwrap();
    let boundary = mesh.boundary_points();
    let disp: Vec<Vec2> = mesh
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if boundary.binary_search(&i).is_ok() {
                Vec2::zeros()
            } else {
                0.05 * Vec2::new((3.1 * p.x + 1.7 * p.y).sin(), (2.3 * p.x - 1.1 * p.y).cos())
            }
        })
        .collect();
    let (after, swept) = mesh.move_points(&disp, 0.01).unwrap();
    for c in 0..mesh.n_cells() {
        let swept_sum: f64 = mesh
            .cell_faces(c)
            .iter()
            .map(|&(f, s)| s * swept.delta_area[f])
            .sum();
        let dv = after.cell_volume[c] - before.cell_volume[c];
        assert!(
            (dv - swept_sum).abs() <= 1e-12 * before.cell_volume[c].max(1.0),
            "cell {c}: dV {dv} vs swept {swept_sum}"
        );
    }
}

#[test]
fn inverted_cell_motion_is_rejected() {
    let mut mesh = cartesian(&CartesianSpec::unit(2, 2)).unwrap();
    let before = mesh.points.clone();
    // Push the central point far outside the mesh.
    let centre = mesh
        .points
        .iter()
        .position(|p| (p - Vec2::new(0.5, 0.5)).norm() < 1e-12)
        .unwrap();
    let mut disp = vec![Vec2::zeros(); mesh.n_points()];
    disp[centre] = Vec2::new(2.0, 2.0);
    let err = mesh.move_points(&disp, 1.0).unwrap_err();
    assert!(err.to_string().contains("rejected"), "{err}");
    assert_eq!(mesh.points, before);
}

#[test]
fn nonorthogonality_zero_on_cartesian() {
    let mesh = cartesian(&CartesianSpec::unit(4, 4)).unwrap();
    let geom = mesh.geometry().unwrap();
    for f in 0..mesh.n_internal() {
        assert!(geom.non_orthogonality_angle(f) < 1e-9);
    }
}

#[test]
fn nonorthogonality_of_constructed_skew() {
    // Two cells sharing a vertical face at x = 1 whose normal is (1, 0).
    // Shifting the right cell's far edge up by 2*dy moves its centroid up by
    // dy, so the center-to-center vector is (1, dy); dy = tan(20 deg) makes
    // its angle against the normal exactly 20 degrees.
    let dy = 20.0f64.to_radians().tan();
    let shift = |p: Vec2| {
        if p.x > 1.5 {
            p + Vec2::new(0.0, 2.0 * dy)
        } else {
            p
        }
    };
    let points: Vec<Vec2> = vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(2.0, 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(2.0, 1.0),
    ]
    .into_iter()
    .map(shift)
    .collect();
    let faces = vec![
        Face {
            a: 1,
            b: 4,
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
            a: 4,
            b: 3,
            owner: 0,
            neighbour: None,
        },
        Face {
            a: 3,
            b: 0,
            owner: 0,
            neighbour: None,
        },
        Face {
            a: 2,
            b: 5,
            owner: 1,
            neighbour: None,
        },
        Face {
            a: 1,
            b: 2,
            owner: 1,
            neighbour: None,
        },
        Face {
            a: 5,
            b: 4,
            owner: 1,
            neighbour: None,
        },
    ];
    let patches = vec![Patch {
        name: "boundary".into(),
        start: 1,
        count: 6,
    }];
    let mesh = Mesh2D::from_parts(points, faces, patches).unwrap();
    let geom = mesh.geometry().unwrap();
    let got = geom.non_orthogonality_angle(0);
    assert!((got - 20.0).abs() < 1e-9, "constructed angle 20, got {got}");
    // The split invariants: pi parallel to d, k orthogonal to d.
    let d = geom.face_delta[0];
    let pi = geom.face_ortho[0];
    let k = geom.face_nonortho[0];
    assert!((pi.x * d.y - pi.y * d.x).abs() < 1e-12);
    assert!(k.dot(&d).abs() < 1e-12);
    assert!((pi + k - geom.face_area[0]).norm() < 1e-14);
}

#[test]
fn ogrid_is_valid_and_reports_nonorthogonality() {
    let mesh = gen::ogrid(&OgridSpec::desk(1.0)).unwrap();
    let geom = mesh.geometry().unwrap();
    assert_eq!(mesh.n_cells(), 72 * 40);
    for c in 0..mesh.n_cells() {
        assert!(geom.cell_volume[c] > 0.0);
        assert!(closedness_defect(&mesh, &geom, c) < 1e-12);
    }
    // Direct-recomputation oracle for the angle of every internal face.
    let mut max_angle: f64 = 0.0;
    for f in 0..mesh.n_internal() {
        let d = geom.face_delta[f];
        let s = geom.face_area[f];
        let oracle = (d.dot(&s) / (d.norm() * s.norm())).clamp(-1.0, 1.0).acos();
        let got = geom.non_orthogonality_angle(f);
        assert!((got - oracle.to_degrees()).abs() < 1e-9);
        assert!(got >= 0.0 && got < 90.0);
        max_angle = max_angle.max(got);
    }
    assert!(max_angle.is_finite());
    assert_eq!(geom.max_non_orthogonality(&mesh), max_angle);
    // Patches cover the boundary exactly once.
    let n_boundary: usize = mesh.patches.iter().map(|p| p.count).sum();
    assert_eq!(n_boundary, mesh.n_faces() - mesh.n_internal());
    for name in ["cylinder", "inlet", "outlet", "top", "bottom"] {
        assert!(mesh.patch(name).is_some(), "missing patch {name}");
    }
}

#[test]
fn mesh_file_round_trip() {
    let dir = std::env::temp_dir().join("vivrom_mesh_io_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mesh.txt");
    let mesh = gen::ogrid(&OgridSpec {
        n_circ: 16,
        n_rad: 5,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    write_mesh(&mesh, &path).unwrap();
    let back = read_mesh(&path).unwrap();
    assert_eq!(back.n_cells(), mesh.n_cells());
    assert_eq!(back.n_points(), mesh.n_points());
    assert_eq!(back.faces, mesh.faces);
    for (p, q) in back.points.iter().zip(&mesh.points) {
        assert_eq!(p, q);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_mesh_files_are_rejected() {
    let dir = std::env::temp_dir().join("vivrom_mesh_badio_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.txt");
    std::fs::write(&path, "not-a-mesh 1\npoints 0\n").unwrap();
    assert!(read_mesh(&path).is_err());
    std::fs::write(&path, "vivmesh 99\npoints 0\nfaces 0\npatches 0\n").unwrap();
    let err = read_mesh(&path).unwrap_err();
    assert!(err.to_string().contains("version"));
    std::fs::remove_dir_all(&dir).ok();
}
