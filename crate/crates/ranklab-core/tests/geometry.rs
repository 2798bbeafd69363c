//! Metric, connection and curvature checks against closed forms.

use ranklab_core::geometry::{
    deck_isometry_defect, default_domain, random_unit_vector, DeckGenerator, ManifoldModel, Point,
    WarpFn,
};
use ranklab_core::trial_rng;

fn models() -> Vec<ManifoldModel> {
    vec![
        ManifoldModel::euclidean(2).unwrap(),
        ManifoldModel::euclidean(3).unwrap(),
        ManifoldModel::hyperbolic_half_space(2).unwrap(),
        ManifoldModel::hyperbolic_half_space(3).unwrap(),
        ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), 2.0 * std::f64::consts::PI)
            .unwrap(),
        ManifoldModel::warped_3d(WarpFn::default_ridge()).unwrap(),
    ]
}

#[test]
fn euclidean_is_flat() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let p = Point::new(&[0.3, -1.2]);
    let c = m.christoffel_at(&p);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c.get(k, i, j), 0.0);
            }
        }
    }
    let u = ranklab_core::linalg::VecN::from_slice(&[1.0, 0.0]);
    let v = ranklab_core::linalg::VecN::from_slice(&[0.3, 1.0]);
    assert!(m.sectional_curvature(&p, &u, &v).unwrap().abs() < 1e-14);
}

#[test]
fn half_plane_christoffel_and_curvature() {
    let m = ManifoldModel::hyperbolic_half_space(2).unwrap();
    let p = Point::new(&[0.0, 1.0]);
    let c = m.christoffel_at(&p);
    assert!((c.get(0, 0, 1) - (-1.0)).abs() < 1e-15); // Γ^x_xy = -1
    assert!((c.get(1, 0, 0) - 1.0).abs() < 1e-15); // Γ^y_xx = 1
    assert!((c.get(1, 1, 1) - (-1.0)).abs() < 1e-15); // Γ^y_yy = -1
    let u = ranklab_core::linalg::VecN::from_slice(&[1.0, 0.0]);
    let v = ranklab_core::linalg::VecN::from_slice(&[0.0, 1.0]);
    assert!((m.sectional_curvature(&p, &u, &v).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn hyperbolic_3d_constant_curvature() {
    let m = ManifoldModel::hyperbolic_half_space(3).unwrap();
    let mut rng = trial_rng(11, 0);
    let dom = default_domain(&m);
    for _ in 0..200 {
        let p = dom.sample_point(&mut rng);
        let u = random_unit_vector(&m, &p, &mut rng);
        let v = random_unit_vector(&m, &p, &mut rng);
        match m.sectional_curvature(&p, &u.comps, &v.comps) {
            Ok(k) => assert!((k + 1.0).abs() < 1e-8, "K = {k} at {:?}", p),
            Err(_) => continue, // collinear draw
        }
    }
}

#[test]
fn flat_ridge_gaussian_curvature() {
    let per = 2.0 * std::f64::consts::PI;
    let m = ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), per).unwrap();
    let ex = ranklab_core::linalg::VecN::from_slice(&[1.0, 0.0]);
    let ey = ranklab_core::linalg::VecN::from_slice(&[0.0, 1.0]);
    // K = -f''/f with f = 1 + x^4/12: zero at the ridge, -12/13 at x = 1
    let k0 = m.sectional_curvature(&Point::new(&[0.0, 0.3]), &ex, &ey).unwrap();
    assert!(k0.abs() < 1e-12, "K(0) = {k0}");
    let k1 = m.sectional_curvature(&Point::new(&[1.0, -0.4]), &ex, &ey).unwrap();
    assert!((k1 + 12.0 / 13.0).abs() < 1e-12, "K(1) = {k1}");
}

#[test]
fn warped_product_plane_curvatures() {
    let m = ManifoldModel::warped_3d(WarpFn::default_ridge()).unwrap();
    let x = 1.0;
    let p = Point::new(&[x, 0.2, -0.7]);
    let ex = ranklab_core::linalg::VecN::from_slice(&[1.0, 0.0, 0.0]);
    let ey = ranklab_core::linalg::VecN::from_slice(&[0.0, 1.0, 0.0]);
    let ez = ranklab_core::linalg::VecN::from_slice(&[0.0, 0.0, 1.0]);
    let f = 1.0 + 1.0 / 12.0;
    let f1: f64 = 4.0 * x * x * x / 12.0;
    let f2 = x * x;
    let kxy = m.sectional_curvature(&p, &ex, &ey).unwrap();
    assert!((kxy + f2 / f).abs() < 1e-12);
    let kyz = m.sectional_curvature(&p, &ey, &ez).unwrap();
    assert!((kyz + (f1 / f) * (f1 / f)).abs() < 1e-12);
}

#[test]
fn numeric_christoffel_matches_closed_forms() {
    for m in models() {
        let dom = default_domain(&m);
        let mut rng = trial_rng(5, 0);
        for _ in 0..25 {
            let p = dom.sample_point(&mut rng);
            let exact = m.christoffel_at(&p);
            let num = m.christoffel_numeric(&p).unwrap();
            for k in 0..m.dim() {
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        let e = exact.get(k, i, j);
                        let n = num.get(k, i, j);
                        let scale = e.abs().max(1.0);
                        assert!(
                            (e - n).abs() / scale < 1e-6,
                            "{}: Γ^{k}_{i}{j} exact {e} vs numeric {n} at {:?}",
                            m.name(),
                            p
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn sampled_curvature_stays_nonpositive() {
    for m in models() {
        assert!(m.curvature_upper_bound() <= 0.0);
        let dom = default_domain(&m);
        let mut rng = trial_rng(17, 0);
        let mut checked = 0;
        while checked < 1000 {
            let p = dom.sample_point(&mut rng);
            let u = random_unit_vector(&m, &p, &mut rng);
            let v = random_unit_vector(&m, &p, &mut rng);
            if let Ok(k) = m.sectional_curvature(&p, &u.comps, &v.comps) {
                assert!(
                    k <= m.curvature_upper_bound() + 1e-8,
                    "{}: K = {k} above bound {}",
                    m.name(),
                    m.curvature_upper_bound()
                );
                checked += 1;
            }
        }
    }
}

#[test]
fn metric_positive_definite_and_symmetric_connection() {
    for m in models() {
        let dom = default_domain(&m);
        let mut rng = trial_rng(23, 0);
        for _ in 0..200 {
            let p = dom.sample_point(&mut rng);
            let g = m.metric_at(&p);
            assert!(g.min_eigenvalue_sym().unwrap() > 0.0);
            let c = m.christoffel_at(&p);
            for k in 0..m.dim() {
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        assert_eq!(c.get(k, i, j), c.get(k, j, i));
                    }
                }
            }
        }
    }
}

#[test]
fn deck_generators_are_isometries() {
    let per = 2.0 * std::f64::consts::PI;
    let cyl = ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), per).unwrap();
    let mut rng = trial_rng(31, 0);
    let dom = default_domain(&cyl);
    let pts: Vec<Point> = (0..100).map(|_| dom.sample_point(&mut rng)).collect();
    for g in cyl.deck_generators() {
        assert!(deck_isometry_defect(&cyl, g, &pts) < 1e-12);
    }
    // hyperbolic cylinder: dilation about the boundary origin
    let hyp = ManifoldModel::hyperbolic_half_space(2)
        .unwrap()
        .with_deck_generators(vec![DeckGenerator::Dilation { factor: (1.5f64).exp() }]);
    let dom = default_domain(&hyp);
    let pts: Vec<Point> = (0..100).map(|_| dom.sample_point(&mut rng)).collect();
    for g in hyp.deck_generators() {
        assert!(deck_isometry_defect(&hyp, g, &pts) < 1e-12);
    }
}

#[test]
fn warp_validation_rejects_bad_profiles() {
    // concave profile: f'' < 0 somewhere
    let bad = WarpFn::even(&[1.0, -0.2]);
    assert!(ManifoldModel::warped_3d(bad).is_err());
    // positive but with f'' > 0 at the ridge point
    let not_ridge = WarpFn::even(&[1.0, 0.1]);
    assert!(ManifoldModel::flat_ridge_cylinder(not_ridge, 1.0).is_err());
    // vanishing somewhere
    let vanishing = WarpFn::quartic_series(&[0.0, 1.0]);
    assert!(ManifoldModel::warped_3d(vanishing).is_err());
}

#[test]
fn sectional_curvature_rejects_collinear_planes() {
    let m = ManifoldModel::euclidean(3).unwrap();
    let p = Point::new(&[0.0, 0.0, 0.0]);
    let u = ranklab_core::linalg::VecN::from_slice(&[1.0, 2.0, 0.0]);
    let v = ranklab_core::linalg::VecN::from_slice(&[2.0, 4.0, 0.0]);
    assert!(m.sectional_curvature(&p, &u, &v).is_err());
}

#[test]
fn sectional_curvature_is_basis_invariant() {
    let m = ManifoldModel::warped_3d(WarpFn::default_ridge()).unwrap();
    let p = Point::new(&[0.8, 0.1, 0.4]);
    let u = ranklab_core::linalg::VecN::from_slice(&[0.9, 0.2, -0.1]);
    let v = ranklab_core::linalg::VecN::from_slice(&[-0.1, 1.1, 0.5]);
    let k1 = m.sectional_curvature(&p, &u, &v).unwrap();
    // same plane, different basis
    let u2 = u.add_scaled(&v, 0.7).scale(1.3);
    let v2 = v.add_scaled(&u, -0.2);
    let k2 = m.sectional_curvature(&p, &u2, &v2).unwrap();
    assert!((k1 - k2).abs() < 1e-10);
}
