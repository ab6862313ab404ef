use super::*;
use crate::mesh::{cartesian, ogrid, CartesianSpec, OgridSpec};

fn dm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

#[test]
fn constant_data_lands_in_polynomial_tail() {
    let centers = dm(4, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    let values = dm(4, 1, &[2.5, 2.5, 2.5, 2.5]);
    let model = rbf_train(centers, &values, RbfBasis::ThinPlateSpline, PolyTail::Linear).unwrap();
    for w in model.weights().iter() {
        assert!(w.abs() < 1e-8, "gamma = {w}");
    }
    assert!((model.evaluate_one(&[0.3, 0.7])[0] - 2.5).abs() < 1e-8);
}

#[test]
fn linear_data_is_reproduced_exactly_with_zero_weights() {
    let centers = dm(5, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.4, 0.6]);
    let values = DMatrix::from_fn(5, 1, |i, _| centers[(i, 0)]); // d(x, y) = x
    let model = rbf_train(centers, &values, RbfBasis::ThinPlateSpline, PolyTail::Linear).unwrap();
    for w in model.weights().iter() {
        assert!(w.abs() < 1e-8, "gamma = {w}");
    }
    for q in [[0.2, 0.9], [5.0, -3.0], [0.5, 0.5]] {
        assert!((model.evaluate_one(&q)[0] - q[0]).abs() < 1e-8);
    }
}

#[test]
fn interpolation_conditions_hold_at_centers() {
    // Deterministic scattered centers/values.
    let centers = dm(
        5,
        2,
        &[0.1, 0.2, 0.9, 0.15, 0.55, 0.85, 0.3, 0.6, 0.75, 0.4],
    );
    let values = dm(5, 1, &[1.2, -0.7, 0.4, 2.1, -1.5]);
    for basis in [
        RbfBasis::ThinPlateSpline,
        RbfBasis::Gaussian { eps: 0.5 },
        RbfBasis::InverseMultiquadric { eps: 0.5 },
    ] {
        let model = rbf_train(centers.clone(), &values, basis, PolyTail::Linear).unwrap();
        for i in 0..5 {
            let got = model.evaluate_one(&[centers[(i, 0)], centers[(i, 1)]])[0];
            assert!(
                (got - values[(i, 0)]).abs() < 1e-8 * values.abs().max(),
                "{basis:?} center {i}: {got} vs {}",
                values[(i, 0)]
            );
        }
        // Side conditions with the linear tail.
        if basis == RbfBasis::ThinPlateSpline {
            let w = model.weights();
            let s0: f64 = w.column(0).sum();
            let sx: f64 = (0..5).map(|i| w[(i, 0)] * centers[(i, 0)]).sum();
            let sy: f64 = (0..5).map(|i| w[(i, 0)] * centers[(i, 1)]).sum();
            assert!(s0.abs() < 1e-8 && sx.abs() < 1e-8 && sy.abs() < 1e-8);
        }
    }
}

#[test]
fn gaussian_far_query_decays_to_tail() {
    let centers = dm(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    let values = dm(3, 1, &[1.0, 2.0, 3.0]);
    // Constant-free comparison: tail value at the far query point.
    let model = rbf_train(
        centers,
        &values,
        RbfBasis::Gaussian { eps: 0.3 },
        PolyTail::None,
    )
    .unwrap();
    let far = model.evaluate_one(&[50.0, 50.0])[0];
    assert!(far.abs() < 1e-12, "gaussian should vanish far away: {far}");
}

#[test]
fn inverse_multiquadric_midpoint_stays_in_envelope() {
    let centers = dm(2, 1, &[0.0, 1.0]);
    let values = dm(2, 1, &[1.0, 1.0]);
    let model = rbf_train(
        centers,
        &values,
        RbfBasis::InverseMultiquadric { eps: 0.7 },
        PolyTail::None,
    )
    .unwrap();
    let mid = model.evaluate_one(&[0.5])[0];
    // Direct evaluation oracle: w solved from the 2x2 symmetric system.
    let phi0 = RbfBasis::InverseMultiquadric { eps: 0.7 }.eval(0.0);
    let phi1 = RbfBasis::InverseMultiquadric { eps: 0.7 }.eval(1.0);
    let w = 1.0 / (phi0 + phi1); // both weights equal by symmetry
    let oracle = 2.0 * w * RbfBasis::InverseMultiquadric { eps: 0.7 }.eval(0.5);
    assert!((mid - oracle).abs() < 1e-12);
    // The oracle shows a mild overshoot above the data values: pure IMQ
    // interpolation is not bounded by the data envelope.
    assert!((mid - 1.034323).abs() < 1e-4, "mid = {mid}");
}

#[test]
fn coincident_centers_name_the_pair() {
    let centers = dm(3, 2, &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    let values = dm(3, 1, &[1.0, 2.0, 3.0]);
    let err = rbf_train(centers, &values, RbfBasis::ThinPlateSpline, PolyTail::Linear).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("1") && msg.contains("2"), "{msg}");
}

#[test]
fn spring_zero_boundary_zero_interior() {
    let mesh = cartesian(&CartesianSpec::unit(4, 4)).unwrap();
    let mut prescribed = vec![None; mesh.n_points()];
    for p in mesh.boundary_points() {
        prescribed[p] = Some(Vec2::zeros());
    }
    let res = spring_relax(&mesh, &prescribed, 1e-12, 1000).unwrap();
    assert!(res.converged);
    for d in res.displacement {
        assert!(d.norm() < 1e-12);
    }
}

#[test]
fn spring_three_point_chain_averages() {
    // 1x2 cell mesh gives a 3-point chain along each grid line; on the
    // x = const lines the points are equally spaced, ends prescribed 0 and 1.
    let mesh = cartesian(&CartesianSpec::unit(1, 2)).unwrap();
    let mut prescribed = vec![None; mesh.n_points()];
    for (i, p) in mesh.points.iter().enumerate() {
        if p.y < 1e-12 {
            prescribed[i] = Some(Vec2::zeros());
        }
        if (p.y - 1.0).abs() < 1e-12 {
            prescribed[i] = Some(Vec2::new(1.0, 0.0));
        }
    }
    let res = spring_relax(&mesh, &prescribed, 1e-12, 10_000).unwrap();
    assert!(res.converged);
    for (i, p) in mesh.points.iter().enumerate() {
        if (p.y - 0.5).abs() < 1e-12 {
            assert!(
                (res.displacement[i].x - 0.5).abs() < 1e-9,
                "midpoint {i}: {:?}",
                res.displacement[i]
            );
        }
    }
}

/// Dense equilibrium oracle: solve `sum_j alpha_ij (d_j - d_i) = 0` directly.
fn spring_dense_oracle(mesh: &Mesh2D, prescribed: &[Option<Vec2>]) -> Vec<Vec2> {
    let n = mesh.n_points();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut bx = DMatrix::<f64>::zeros(n, 2);
    for &(i, j) in &mesh.point_edges() {
        let alpha = 1.0 / (mesh.points[i] - mesh.points[j]).norm();
        for (p, q) in [(i, j), (j, i)] {
            if prescribed[p].is_none() {
                a[(p, p)] += alpha;
                a[(p, q)] -= alpha;
            }
        }
    }
    for i in 0..n {
        if let Some(d) = prescribed[i] {
            a[(i, i)] = 1.0;
            bx[(i, 0)] = d.x;
            bx[(i, 1)] = d.y;
        }
    }
    let sol = a.lu().solve(&bx).unwrap();
    (0..n).map(|i| Vec2::new(sol[(i, 0)], sol[(i, 1)])).collect()
}

#[test]
fn spring_matches_dense_equilibrium_oracle() {
    let mesh = cartesian(&CartesianSpec::unit(5, 5)).unwrap();
    let mut prescribed = vec![None; mesh.n_points()];
    for (i, p) in mesh.points.iter().enumerate() {
        if p.x < 1e-12 || p.x > 1.0 - 1e-12 || p.y < 1e-12 || p.y > 1.0 - 1e-12 {
            prescribed[i] = Some(if p.x > 1.0 - 1e-12 {
                Vec2::new(0.0, 0.2) // one side displaced
            } else {
                Vec2::zeros()
            });
        }
    }
    let oracle = spring_dense_oracle(&mesh, &prescribed);
    let res = spring_relax(&mesh, &prescribed, 1e-13, 50_000).unwrap();
    assert!(res.converged);
    for i in 0..mesh.n_points() {
        assert!(
            (res.displacement[i] - oracle[i]).norm() < 1e-8,
            "point {i}: {:?} vs {:?}",
            res.displacement[i],
            oracle[i]
        );
    }
}

#[test]
fn spring_iteration_error_decreases_monotonically() {
    let mesh = cartesian(&CartesianSpec::unit(5, 5)).unwrap();
    let mut prescribed = vec![None; mesh.n_points()];
    for (i, p) in mesh.points.iter().enumerate() {
        if p.x < 1e-12 || p.x > 1.0 - 1e-12 || p.y < 1e-12 || p.y > 1.0 - 1e-12 {
            prescribed[i] = Some(if p.y > 1.0 - 1e-12 {
                Vec2::new(0.1, 0.0)
            } else {
                Vec2::zeros()
            });
        }
    }
    let oracle = spring_dense_oracle(&mesh, &prescribed);
    let err_of = |d: &[Vec2]| -> f64 {
        d.iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    };
    let mut prev = f64::INFINITY;
    for sweeps in [1usize, 2, 4, 8, 16, 32, 64] {
        let res = spring_relax(&mesh, &prescribed, 1e-30, sweeps).unwrap();
        let e = err_of(&res.displacement);
        assert!(e <= prev * (1.0 + 1e-12), "sweeps {sweeps}: {e} > {prev}");
        prev = e;
    }
}

#[test]
fn deform_identity_at_zero_displacement() {
    let mesh = ogrid(&OgridSpec {
        n_circ: 24,
        n_rad: 8,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    for method in [MotionMethod::Rbf, MotionMethod::Spring] {
        let solver = MotionSolver::new(&mesh, method, "cylinder").unwrap();
        let pos = solver.positions_for(&mesh, 0.0, 1.0).unwrap();
        for (p, q) in pos.iter().zip(&mesh.points) {
            assert!((p - q).norm() < 1e-12);
        }
    }
}

#[test]
fn deform_moves_cylinder_exactly_farfield_fixed() {
    let mesh = ogrid(&OgridSpec {
        n_circ: 24,
        n_rad: 8,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    let y = 0.05;
    for method in [MotionMethod::Rbf, MotionMethod::Spring] {
        let solver = MotionSolver::new(&mesh, method, "cylinder").unwrap();
        let pos = solver.positions_for(&mesh, y, 1.0).unwrap();
        let cyl = mesh.patch_points(mesh.patch("cylinder").unwrap());
        for &p in &cyl {
            let d = pos[p] - mesh.points[p];
            assert!((d - Vec2::new(0.0, y)).norm() < 1e-9, "{method:?}: {d:?}");
        }
        let boundary = mesh.boundary_points();
        for &p in &boundary {
            if cyl.binary_search(&p).is_err() {
                assert!((pos[p] - mesh.points[p]).norm() < 1e-9, "{method:?}");
            }
        }
    }
}

#[test]
fn deform_keeps_volumes_positive_at_twenty_percent() {
    let mut mesh = ogrid(&OgridSpec {
        n_circ: 24,
        n_rad: 8,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    let solver = MotionSolver::new(&mesh, MotionMethod::Rbf, "cylinder").unwrap();
    let pos = solver.positions_for(&mesh, 0.2, 1.0).unwrap();
    let disp: Vec<Vec2> = pos.iter().zip(&mesh.points).map(|(a, b)| a - b).collect();
    let (geom, _) = mesh.move_points(&disp, 1.0).unwrap();
    let min_vol = geom.cell_volume.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min_vol > 0.0);
}

#[test]
fn deformation_is_linear_in_amplitude() {
    let mesh = ogrid(&OgridSpec {
        n_circ: 16,
        n_rad: 6,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    for method in [MotionMethod::Rbf, MotionMethod::Spring] {
        let solver = MotionSolver::new(&mesh, method, "cylinder").unwrap();
        let f1 = solver.displacement_field(&mesh, 0.05).unwrap();
        let f2 = solver.displacement_field(&mesh, 0.10).unwrap();
        let scale = f1.iter().map(|d| d.norm()).fold(0.0f64, f64::max);
        for (a, b) in f1.iter().zip(&f2) {
            assert!(
                (2.0 * a - b).norm() <= 1e-10 * scale.max(1.0),
                "{method:?}: {a:?} vs {b:?}"
            );
        }
    }
}

#[test]
fn excessive_displacement_is_rejected() {
    let mesh = ogrid(&OgridSpec {
        n_circ: 16,
        n_rad: 6,
        ..OgridSpec::desk(1.0)
    })
    .unwrap();
    let solver = MotionSolver::new(&mesh, MotionMethod::Rbf, "cylinder").unwrap();
    let err = solver.positions_for(&mesh, 0.9, 1.0).unwrap_err();
    assert!(err.to_string().contains("reduce dt"), "{err}");
}
