//! Geodesic flow, Jacobi fields, transport, distances, spheres and Busemann
//! functions against closed forms on the oracle models and against structural
//! invariants everywhere.

use ranklab_core::flow::{self, FlowOptions};
use ranklab_core::geometry::{
    default_domain, random_unit_vector, ManifoldModel, Point, Tangent, UnitVector, WarpFn,
};
use ranklab_core::linalg::VecN;
use ranklab_core::trial_rng;

fn h2() -> ManifoldModel {
    ManifoldModel::hyperbolic_half_space(2).unwrap()
}

fn e2() -> ManifoldModel {
    ManifoldModel::euclidean(2).unwrap()
}

fn e3() -> ManifoldModel {
    ManifoldModel::euclidean(3).unwrap()
}

fn ridge() -> ManifoldModel {
    ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), 2.0 * std::f64::consts::PI)
        .unwrap()
}

fn unit(model: &ManifoldModel, base: &[f64], comps: &[f64]) -> UnitVector {
    UnitVector::normalized(model, Tangent::new(Point::new(base), comps)).unwrap()
}

#[test]
fn flow_straight_line() {
    let m = e2();
    let v = unit(&m, &[0.0, 0.0], &[1.0, 0.0]);
    let opts = FlowOptions::default();
    let w = flow::flow_phi(&m, &v, 5.0, &opts).unwrap();
    assert!((w.base.coords[0] - 5.0).abs() < 1e-9);
    assert!(w.base.coords[1].abs() < 1e-12);
    assert!((w.comps[0] - 1.0).abs() < 1e-9);
}

#[test]
fn flow_vertical_half_plane() {
    let m = h2();
    let v = unit(&m, &[0.0, 1.0], &[0.0, 1.0]);
    let opts = FlowOptions::default();
    let w = flow::flow_phi(&m, &v, 1.0, &opts).unwrap();
    let e = std::f64::consts::E;
    assert!((w.base.coords[1] - e).abs() < 1e-7);
    assert!(w.base.coords[0].abs() < 1e-9);
    assert!((w.comps[1] - e).abs() < 1e-6);
}

#[test]
fn flow_matches_half_space_oracle() {
    let m = h2();
    let opts = FlowOptions::precise();
    let mut rng = trial_rng(3, 0);
    let dom = default_domain(&m);
    for _ in 0..20 {
        let p = dom.sample_point(&mut rng);
        let v = random_unit_vector(&m, &p, &mut rng);
        for t in [0.7, -1.3, 4.0] {
            let numeric = flow::flow_phi(&m, &v, t, &opts).unwrap();
            let oracle = m.oracle_flow(&v, t).unwrap();
            let gap = numeric.base.coords.sub(&oracle.base.coords).norm();
            let scale = 1.0 + oracle.base.coords.norm();
            assert!(gap / scale < 1e-8, "chart gap {gap} at t = {t}");
        }
    }
}

#[test]
fn ridge_line_is_invariant() {
    let m = ridge();
    let v = unit(&m, &[0.0, 0.0], &[0.0, 1.0]);
    let opts = FlowOptions::default();
    let w = flow::flow_phi(&m, &v, 2.5, &opts).unwrap();
    // f(0) = 1, so arc length equals the chart shift
    assert!(w.base.coords[0].abs() < 1e-10);
    assert!((w.base.coords[1] - 2.5).abs() < 1e-8);
}

#[test]
fn flow_group_law() {
    let m = h2();
    let opts = FlowOptions::default();
    let v = unit(&m, &[0.4, 1.3], &[0.6, -0.8]);
    let a = flow::flow_phi(&m, &v, 1.2, &opts).unwrap();
    let b = flow::flow_phi(&m, &a, 0.9, &opts).unwrap();
    let c = flow::flow_phi(&m, &v, 2.1, &opts).unwrap();
    let gap = flow::d1(&m, &b, &c, &opts).unwrap();
    assert!(gap < 1e-6, "group law gap {gap}");
}

#[test]
fn unit_speed_and_residual_bounds() {
    // stored paths use the dense profile so the Hermite midpoint residual
    // meets its contract
    let opts = FlowOptions::dense();
    for m in [e2(), h2(), ridge()] {
        let dom = default_domain(&m);
        let mut rng = trial_rng(41, 0);
        for _ in 0..50 {
            let p = dom.sample_point(&mut rng);
            let v = random_unit_vector(&m, &p, &mut rng);
            let path = flow::geodesic(&m, &v, -4.0, 4.0, &opts).unwrap();
            assert!(flow::unit_speed_defect(&m, &path) < 1e-7);
            assert!(flow::geodesic_residual(&m, &path) < 1e-6);
        }
    }
}

#[test]
fn jacobi_flat_and_hyperbolic_growth() {
    let opts = FlowOptions::default();
    // flat: J stays parallel
    let m = e2();
    let v = unit(&m, &[0.0, 0.0], &[1.0, 0.0]);
    let path = flow::geodesic(&m, &v, 0.0, 5.0, &opts).unwrap();
    let j0 = VecN::from_slice(&[0.3, 0.7]);
    let zero = VecN::zeros(2);
    let field = flow::jacobi_integrate(&m, &path, &j0, &zero, 5.0).unwrap();
    let s = field.eval(5.0);
    assert!((s.j[0] - 0.3).abs() < 1e-9 && (s.j[1] - 0.7).abs() < 1e-9);

    // hyperbolic: ‖J(t)‖ = cosh(t) for a unit normal field with J'(0) = 0
    let m = h2();
    let v = unit(&m, &[0.0, 1.0], &[0.0, 1.0]);
    let path = flow::geodesic(&m, &v, -6.0, 6.0, &opts).unwrap();
    let j0 = VecN::from_slice(&[1.0, 0.0]); // unit and orthogonal to v at (0,1)
    let field = flow::jacobi_integrate_opts(&m, &path, &j0, &zero, 6.0, &FlowOptions::precise()).unwrap();
    for t in [0.5, 2.0, 6.0] {
        let n = field.norm_at(&m, t);
        assert!(
            (n - t.cosh()).abs() / t.cosh() < 1e-7,
            "‖J({t})‖ = {n} vs cosh = {}",
            t.cosh()
        );
    }
    // backward in time as well
    let field = flow::jacobi_integrate_opts(&m, &path, &j0, &zero, -6.0, &FlowOptions::precise()).unwrap();
    let n = field.norm_at(&m, -6.0);
    assert!((n - 6.0f64.cosh()).abs() / 6.0f64.cosh() < 1e-7);
}

#[test]
fn jacobi_on_the_ridge_stays_parallel() {
    let m = ridge();
    let opts = FlowOptions::default();
    let v = unit(&m, &[0.0, 0.0], &[0.0, 1.0]);
    let path = flow::geodesic(&m, &v, 0.0, 10.0, &opts).unwrap();
    let j0 = VecN::from_slice(&[1.0, 0.0]);
    let zero = VecN::zeros(2);
    let field = flow::jacobi_integrate(&m, &path, &j0, &zero, 10.0).unwrap();
    for t in [2.0, 6.0, 10.0] {
        assert!((field.norm_at(&m, t) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn jacobi_is_linear_and_conserves_velocity_pairing() {
    let m = h2();
    let opts = FlowOptions::default();
    let v = unit(&m, &[0.3, 0.9], &[0.8, 0.6]);
    let path = flow::geodesic(&m, &v, 0.0, 4.0, &opts).unwrap();
    let j0 = VecN::from_slice(&[0.2, -0.5]);
    let j0p = VecN::from_slice(&[0.1, 0.4]);
    let f1 = flow::jacobi_integrate_opts(&m, &path, &j0, &j0p, 4.0, &FlowOptions::precise()).unwrap();
    let f2 = flow::jacobi_integrate_opts(&m, &path, &j0.scale(2.0), &j0p.scale(2.0), 4.0, &FlowOptions::precise()).unwrap();
    let s1 = f1.eval(3.0);
    let s2 = f2.eval(3.0);
    for i in 0..2 {
        assert!((2.0 * s1.j[i] - s2.j[i]).abs() < 1e-7);
    }
    // ⟨J', γ̇⟩ constant along the field
    let c0 = {
        let s = f1.eval(0.0);
        m.inner(&s.x, &s.jp, &s.xdot)
    };
    for t in [1.0, 2.5, 4.0] {
        let s = f1.eval(t);
        let c = m.inner(&s.x, &s.jp, &s.xdot);
        assert!((c - c0).abs() < 1e-7, "pairing drift {c} vs {c0}");
    }
}

#[test]
fn transport_examples() {
    let opts = FlowOptions::default();
    // flat: components unchanged
    let m = e2();
    let v = unit(&m, &[0.0, 0.0], &[1.0, 0.0]);
    let path = flow::geodesic(&m, &v, 0.0, 3.0, &opts).unwrap();
    let u = Tangent::new(Point::new(&[0.0, 0.0]), &[0.2, 0.9]);
    let tr = flow::parallel_transport(&m, &path, &u, 0.0, 3.0, &opts).unwrap();
    assert!((tr.comps[0] - 0.2).abs() < 1e-10 && (tr.comps[1] - 0.9).abs() < 1e-10);

    // half-plane vertical line: components scale with the height
    let m = h2();
    let v = unit(&m, &[0.0, 1.0], &[0.0, 1.0]);
    let path = flow::geodesic(&m, &v, 0.0, 1.0, &opts).unwrap();
    let u = Tangent::new(Point::new(&[0.0, 1.0]), &[1.0, 0.0]);
    let tr = flow::parallel_transport(&m, &path, &u, 0.0, 1.0, &opts).unwrap();
    let e = std::f64::consts::E;
    assert!((tr.comps[0] - e).abs() < 1e-6, "got {:?}", tr.comps.as_slice());
    assert!(tr.comps[1].abs() < 1e-7);
    // norm preserved
    assert!((m.norm(&tr.base, &tr.comps) - 1.0).abs() < 1e-8);

    // round trip is the identity
    let back = flow::parallel_transport(&m, &path, &tr, 1.0, 0.0, &opts).unwrap();
    assert!((back.comps[0] - 1.0).abs() < 1e-8 && back.comps[1].abs() < 1e-8);

    // inner products preserved along a generic ridge geodesic
    let m = ridge();
    let v = unit(&m, &[0.6, 0.2], &[0.5, 0.6]);
    let path = flow::geodesic(&m, &v, 0.0, 4.0, &opts).unwrap();
    let a = Tangent::new(Point::new(&[0.6, 0.2]), &[1.0, 0.3]);
    let b = Tangent::new(Point::new(&[0.6, 0.2]), &[-0.2, 0.8]);
    let ip0 = m.inner(&a.base, &a.comps, &b.comps);
    let ta = flow::parallel_transport(&m, &path, &a, 0.0, 4.0, &opts).unwrap();
    let tb = flow::parallel_transport(&m, &path, &b, 0.0, 4.0, &opts).unwrap();
    let ip1 = m.inner(&ta.base, &ta.comps, &tb.comps);
    assert!((ip0 - ip1).abs() < 1e-7);
}

#[test]
fn distance_examples() {
    let opts = FlowOptions::default();
    let m = e3();
    let p = Point::new(&[1.0, 2.0, 3.0]);
    let q = Point::new(&[-1.0, 0.0, 4.0]);
    let d = flow::distance(&m, &p, &q, &opts).unwrap();
    assert!((d - 3.0).abs() < 1e-9);

    let m = h2();
    // vertical segment: d = log(y2/y1)
    let d = flow::distance(&m, &Point::new(&[0.0, 1.0]), &Point::new(&[0.0, (2.0f64).exp()]), &opts)
        .unwrap();
    assert!((d - 2.0).abs() < 1e-8);
    // symmetric pair at the same height: d = arcosh(3)
    let d = flow::distance(&m, &Point::new(&[-1.0, 1.0]), &Point::new(&[1.0, 1.0]), &opts).unwrap();
    assert!((d - 3.0f64.acosh()).abs() < 1e-8);
    // symmetry and triangle inequality on sampled triples
    let mut rng = trial_rng(9, 0);
    let dom = default_domain(&m);
    for _ in 0..20 {
        let a = dom.sample_point(&mut rng);
        let b = dom.sample_point(&mut rng);
        let c = dom.sample_point(&mut rng);
        let dab = flow::distance(&m, &a, &b, &opts).unwrap();
        let dba = flow::distance(&m, &b, &a, &opts).unwrap();
        assert!((dab - dba).abs() < 1e-7);
        let dbc = flow::distance(&m, &b, &c, &opts).unwrap();
        let dac = flow::distance(&m, &a, &c, &opts).unwrap();
        assert!(dac <= dab + dbc + 1e-6);
    }
}

#[test]
fn shooting_distance_matches_oracle_without_seed() {
    // exercise the Newton path from a chord seed on the hyperbolic model
    let m = h2();
    let opts = FlowOptions::default();
    let p = Point::new(&[-0.8, 0.7]);
    let q = Point::new(&[1.1, 2.4]);
    let lg = flow::log_map_seeded(&m, &p, &q, Some(&q.coords.sub(&p.coords)), &opts).unwrap();
    let d_shoot = m.norm(&p, &lg.comps);
    let d_oracle = m.oracle_distance(&p, &q).unwrap();
    assert!((d_shoot - d_oracle).abs() < 1e-8, "{d_shoot} vs {d_oracle}");
}

#[test]
fn d1_examples() {
    let opts = FlowOptions::default();
    let m = e2();
    let u = unit(&m, &[0.0, 0.0], &[0.0, 1.0]);
    assert!(flow::d1(&m, &u, &u, &opts).unwrap() < 1e-12);
    // same base point: the angle
    let w = unit(&m, &[0.0, 0.0], &[1.0, 1.0]);
    let d = flow::d1(&m, &u, &w, &opts).unwrap();
    assert!((d - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    // parallel unit vectors at distance L: exactly L
    let w = unit(&m, &[3.0, 0.0], &[0.0, 1.0]);
    let d = flow::d1(&m, &u, &w, &opts).unwrap();
    assert!((d - 3.0).abs() < 1e-9);
    // the Sasaki estimate carries the upper-bound flag
    let s = flow::sasaki_distance(&m, &u, &w, &opts).unwrap();
    assert!(s.is_upper_bound && (s.upper - 3.0).abs() < 1e-9);
}

#[test]
fn sasaki_lower_ratio_in_range() {
    let m = h2();
    let opts = FlowOptions::default();
    let mut rng = trial_rng(77, 0);
    let dom = default_domain(&m);
    let mut pairs = Vec::new();
    for _ in 0..40 {
        let p = dom.sample_point(&mut rng);
        let u = random_unit_vector(&m, &p, &mut rng);
        let w = ranklab_core::hyperbolicity::sample_near(&m, &u, 0.3, &mut rng, &opts).unwrap();
        pairs.push((u, w));
    }
    let nu = flow::estimate_sasaki_lower_ratio(&m, &pairs, &mut rng, &opts).unwrap();
    assert!(nu > 0.5 && nu <= 1.0, "nu = {nu}");
}

#[test]
fn sphere_and_radial_vectors() {
    let opts = FlowOptions::default();
    let m = e2();
    let v = unit(&m, &[2.0, 0.0], &[1.0, 0.0]);
    let s = flow::sphere_in_ux(&m, &v, 2.0, &opts).unwrap();
    assert!(s.center.coords.norm() < 1e-9); // centre at the origin
    // the sphere through v reproduces v at zero angles
    let r0 = flow::radial_vector(&m, &s, &[0.0], &opts).unwrap();
    assert!(flow::d1(&m, &r0, &v, &opts).unwrap() < 1e-8);
    // round sphere: every radial vector's base sits at distance r
    for ang in [0.5, 1.5, 3.0] {
        let rv = flow::radial_vector(&m, &s, &[ang], &opts).unwrap();
        let d = flow::distance(&m, &s.center, &rv.base, &opts).unwrap();
        assert!((d - 2.0).abs() < 1e-8);
    }
    // tiny radii are rejected
    assert!(flow::sphere_in_ux(&m, &v, 1e-9, &opts).is_err());
}

#[test]
fn sphere_flow_action() {
    // flowing a sphere pointwise gives the sphere of grown radius
    let m = h2();
    let opts = FlowOptions::default();
    let v = unit(&m, &[0.2, 1.1], &[0.7, -0.4]);
    let r = 1.5;
    let t = 0.8;
    let s1 = flow::sphere_in_ux(&m, &v, r, &opts).unwrap();
    let v_t = flow::flow_phi(&m, &v, t, &opts).unwrap();
    let s2 = flow::sphere_in_ux(&m, &v_t, r + t, &opts).unwrap();
    assert!(s1.center.coords.sub(&s2.center.coords).norm() < 1e-7);
    for ang in [-1.0, 0.3, 2.2] {
        let a = flow::flow_phi(&m, &flow::radial_vector(&m, &s1, &[ang], &opts).unwrap(), t, &opts)
            .unwrap();
        let b = flow::radial_vector(&m, &s2, &[ang], &opts).unwrap();
        assert!(flow::d1(&m, &a, &b, &opts).unwrap() < 1e-6);
    }
}

#[test]
fn busemann_examples() {
    let opts = FlowOptions::default();
    // normalisation at the base point
    let m = h2();
    let u = unit(&m, &[0.0, 1.0], &[0.0, -1.0]);
    let b = flow::busemann(&m, &u, &Point::new(&[0.0, 1.0]), 40.0, &opts).unwrap();
    assert!(b.abs() < 1e-5);
    // horospheres of the downward vector are horizontal lines: b = -log y
    for y in [0.5, 2.0, 4.0] {
        let b = flow::busemann(&m, &u, &Point::new(&[0.0, y]), 40.0, &opts).unwrap();
        assert!((b + y.ln()).abs() < 1e-4, "b = {b} vs {}", -y.ln());
    }
    // growth along the ray
    let g1 = flow::flow_phi(&m, &u, 1.7, &opts).unwrap();
    let b = flow::busemann(&m, &u, &g1.base, 40.0, &opts).unwrap();
    assert!((b - 1.7).abs() < 1e-4);
    // flat space: linear in the ray direction
    let m = e2();
    let u = unit(&m, &[0.0, 0.0], &[1.0, 0.0]);
    let p = Point::new(&[1.3, 0.4]);
    let b = flow::busemann(&m, &u, &p, 200.0, &opts).unwrap();
    assert!((b - 1.3).abs() < 1e-4, "b = {b}");
}

#[test]
fn closest_point_on_geodesic() {
    let opts = FlowOptions::default();
    // flat line
    let m = e2();
    let v = unit(&m, &[0.0, 0.0], &[1.0, 0.0]);
    let path = flow::geodesic(&m, &v, -5.0, 5.0, &opts).unwrap();
    let c = flow::min_distance_to_geodesic(&m, &Point::new(&[0.0, 1.0]), &path, &opts).unwrap();
    assert!(c.t_star.abs() < 1e-6 && (c.d_star - 1.0).abs() < 1e-9 && c.bracketed);

    // the unit semicircle: closest point to (0, 2) is the apex (0, 1)
    let m = h2();
    let v = unit(&m, &[0.0, 1.0], &[1.0, 0.0]);
    let path = flow::geodesic(&m, &v, -4.0, 4.0, &opts).unwrap();
    let c = flow::min_distance_to_geodesic(&m, &Point::new(&[0.0, 2.0]), &path, &opts).unwrap();
    assert!((c.d_star - 2.0f64.ln()).abs() < 1e-7);
    assert!(c.t_star.abs() < 1e-5);

    // boundary minimum is flagged when the span excludes the foot point
    let c = flow::min_distance_on_span(&m, &Point::new(&[0.0, 2.0]), &path, (1.0, 4.0), &opts)
        .unwrap();
    assert!(!c.bracketed);
}

#[test]
fn distance_convexity_between_geodesics() {
    // sampled second differences of t -> d(γ(t), σ(t)) stay nonnegative
    let opts = FlowOptions::default();
    for m in [h2(), ridge()] {
        let dom = default_domain(&m);
        let mut rng = trial_rng(53, 0);
        for _ in 0..25 {
            let p = dom.sample_point(&mut rng);
            let q = dom.sample_point(&mut rng);
            let v = random_unit_vector(&m, &p, &mut rng);
            let w = random_unit_vector(&m, &q, &mut rng);
            let pv = flow::geodesic(&m, &v, -2.0, 2.0, &opts).unwrap();
            let pw = flow::geodesic(&m, &w, -2.0, 2.0, &opts).unwrap();
            let mut d = Vec::new();
            for k in 0..9 {
                let t = -2.0 + 0.5 * k as f64;
                let (a, _) = pv.eval(t);
                let (b, _) = pw.eval(t);
                d.push(flow::distance(&m, &a, &b, &opts).unwrap());
            }
            for k in 1..8 {
                let second = d[k - 1] - 2.0 * d[k] + d[k + 1];
                assert!(second >= -1e-7, "{}: second difference {second}", m.name());
            }
        }
    }
}
