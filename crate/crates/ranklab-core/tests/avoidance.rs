//! Supports, distortions, screens and the avoiding-ray machinery.

use ranklab_core::avoidance::{
    self, calibrate_beta, calibrate_psi, choose_constants, construct_avoiding_ray, dist_ur,
    iterate_avoidance, pi_epsilon, psi_r_epsilon, HitClass, IterateOptions, ObstacleSet,
    ScreenGeometry, ScreensParams, StratifiedSupport,
};
use ranklab_core::flow::{self, FlowOptions};
use ranklab_core::geometry::{
    default_domain, random_unit_vector, DeckGenerator, ManifoldModel, Point, Tangent, UnitVector,
    WarpFn,
};
use ranklab_core::hyperbolicity::calibrate_shrink;
use ranklab_core::linalg::VecN;
use ranklab_core::trial_rng;

fn unit(model: &ManifoldModel, base: &[f64], comps: &[f64]) -> UnitVector {
    UnitVector::normalized(model, Tangent::new(Point::new(base), comps)).unwrap()
}

fn ridge_model() -> ManifoldModel {
    ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), 2.0 * std::f64::consts::PI)
        .unwrap()
}

fn z_axis_support() -> StratifiedSupport {
    StratifiedSupport::line3(&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], 60.0)
}

#[test]
fn dist_ur_examples() {
    let opts = FlowOptions::default();
    // tangent to the stratum: zero
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(60.0);
    let v = unit(&m, &[0.0, 1.3], &[0.0, 1.0]);
    let d = dist_ur(&m, &sup, &v, false, &opts).unwrap();
    assert!(d.value < 1e-7, "on-stratum distance {}", d.value);

    // flat 3-space with the vertical axis: base offset plus right angle
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup3 = z_axis_support();
    let v = unit(&e3, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
    let d = dist_ur(&e3, &sup3, &v, false, &opts).unwrap();
    let expect = 1.0 + std::f64::consts::FRAC_PI_2;
    assert!((d.value - expect).abs() < 1e-6, "{} vs {expect}", d.value);

    // empty support
    let none = StratifiedSupport::empty();
    let d = dist_ur(&e3, &none, &v, false, &opts).unwrap();
    assert!(d.value.is_infinite());
}

#[test]
fn dist_ur_matches_brute_force() {
    let opts = FlowOptions::default();
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(60.0);
    let mut rng = trial_rng(3, 0);
    let dom = default_domain(&m);
    for _ in 0..3 {
        let p = dom.sample_point(&mut rng);
        let v = random_unit_vector(&m, &p, &mut rng);
        let fast = dist_ur(&m, &sup, &v, false, &opts).unwrap().value;
        // dense enumeration over stratum tangents near the base foot (far
        // parameters cannot win: the base distance alone already exceeds
        // any nearby candidate)
        let st = &sup.strata[0];
        let foot = st.foot_hint(&m, &v.base).unwrap();
        let mut brute = f64::INFINITY;
        for k in 0..=1200 {
            let s = foot - 7.5 + 15.0 * k as f64 / 1200.0;
            let u = st.unit_tangent(&m, s);
            let a = flow::d1(&m, &v, &u, &opts).unwrap();
            let b = flow::d1(&m, &v, &u.negate(), &opts).unwrap();
            brute = brute.min(a.min(b));
        }
        assert!(
            fast <= brute + 1e-6 && brute <= fast + 2e-3,
            "fast {fast} vs brute {brute}"
        );
    }
}

#[test]
fn distortion_contracts_flat_axis() {
    // explicit flat-space transport: the distortion pushes radially away
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup = z_axis_support();
    let opts = FlowOptions::default();
    let eps = 0.1;
    // vector close to the axis tangents: aimed along the axis, base nearby
    let v = unit(&e3, &[0.2, 0.0, 0.0], &[0.0, 0.0, 1.0]);
    let clearance_before = dist_ur(&e3, &sup, &v, true, &opts).unwrap().value;
    assert!((clearance_before - 0.2).abs() < 1e-7);
    assert!(clearance_before < 4.0 * eps);
    let pv = pi_epsilon(&e3, &sup, &v, eps, &opts).unwrap();
    // moved outward along the x-axis by alpha, components unchanged
    let alpha = 2.0 * eps - 0.5 * clearance_before;
    assert!((pv.base.coords[0] - (0.2 + alpha)).abs() < 1e-9);
    assert!((flow::d1(&e3, &v, &pv, &opts).unwrap() - alpha).abs() < 1e-7);
    // base distance to the support grows by exactly alpha
    let d0 = avoidance::base_distance(&e3, &sup, &v.base, true, &opts).unwrap();
    let d1 = avoidance::base_distance(&e3, &sup, &pv.base, true, &opts).unwrap();
    assert!((d1 - d0 - alpha).abs() < 1e-8);
    // image clearance
    let after = dist_ur(&e3, &sup, &pv, true, &opts).unwrap().value;
    assert!(after >= eps - 1e-9, "clearance {after}");

    // fixed point beyond 4 eps: exact identity
    let far = unit(&e3, &[3.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
    let pfar = pi_epsilon(&e3, &sup, &far, eps, &opts).unwrap();
    assert_eq!(far.base.coords.as_slice(), pfar.base.coords.as_slice());
    assert_eq!(far.comps.as_slice(), pfar.comps.as_slice());
}

#[test]
fn distortion_injective_on_samples() {
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup = z_axis_support();
    let opts = FlowOptions::default();
    let eps = 0.1;
    let mut rng = trial_rng(9, 0);
    let dom = default_domain(&e3);
    let mut images: Vec<UnitVector> = Vec::new();
    let mut originals: Vec<UnitVector> = Vec::new();
    for _ in 0..60 {
        let p = dom.sample_point(&mut rng);
        if avoidance::base_distance(&e3, &sup, &p, true, &opts).unwrap() < 1e-3 {
            continue;
        }
        let v = random_unit_vector(&e3, &p, &mut rng);
        let pv = pi_epsilon(&e3, &sup, &v, eps, &opts).unwrap();
        images.push(pv);
        originals.push(v);
    }
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            let din = flow::d1(&e3, &originals[i], &originals[j], &opts).unwrap();
            if din < 1e-9 {
                continue;
            }
            let dout = flow::d1(&e3, &images[i], &images[j], &opts).unwrap();
            assert!(dout > 1e-9, "collapsed pair {i},{j}");
        }
    }
}

#[test]
fn deck_equivariance_of_distortion() {
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(80.0);
    let opts = FlowOptions::default();
    let eps = 0.05;
    let v = unit(&m, &[0.12, 0.4], &[0.25, 1.0]);
    let gen = m.deck_generators()[0].clone();
    let pv = pi_epsilon(&m, &sup, &v, eps, &opts).unwrap();
    let shifted = gen.apply_tangent(&v.as_tangent());
    let sv = UnitVector::new(&m, shifted).unwrap();
    let psv = pi_epsilon(&m, &sup, &sv, eps, &opts).unwrap();
    let expect = gen.apply_tangent(&pv.as_tangent());
    assert!(psv.base.coords.sub(&expect.base.coords).norm() < 1e-7);
    assert!(psv.comps.sub(&expect.comps).norm() < 1e-7);
}

#[test]
fn sphere_distortion_contracts() {
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup = z_axis_support();
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&e3, &sup, 2.0, 24, 5, &opts).unwrap();
    assert!(psi.tau > 0.0 && psi.epsilon > 0.0 && psi.c_disp > 0.0);
    assert!(psi.kappa <= 4.0 * psi.epsilon + 1e-12);
    let mut rng = trial_rng(21, 0);
    let mut tested = 0;
    for r in [2.0, 5.0, 10.0] {
        let mut k = 0;
        while tested < 3 * 10 && k < 200 {
            k += 1;
            let mut rng2 = trial_rng(33, k + 1000 * r as u64);
            let dom = default_domain(&e3);
            let p = dom.sample_point(&mut rng2);
            if avoidance::base_distance(&e3, &sup, &p, true, &opts).unwrap() < 1e-2 {
                continue;
            }
            let v = random_unit_vector(&e3, &p, &mut rng2);
            let out = match psi_r_epsilon(&e3, &sup, &v, r, psi.epsilon, &opts) {
                Ok(o) => o,
                Err(_) => continue,
            };
            tested += 1;
            // sphere membership: same centre, same radius
            let center = flow::flow_phi(&e3, &v, -r, &opts).unwrap().base;
            let d = flow::distance(&e3, &center, &out.base, &opts).unwrap();
            assert!((d - r).abs() < 1e-6, "sphere membership error {}", (d - r).abs());
            // clearance and displacement
            let clr = dist_ur(&e3, &sup, &out, false, &opts).unwrap().value;
            assert!(clr >= psi.tau - 1e-7, "clearance {clr} vs tau {}", psi.tau);
            let disp = flow::d1(&e3, &v, &out, &opts).unwrap();
            assert!(disp <= psi.c_disp + 1e-7, "displacement {disp} vs C {}", psi.c_disp);
        }
    }
    assert!(tested >= 20);
    let _ = rng;
}

#[test]
fn screens_hit_classification() {
    let m = ManifoldModel::hyperbolic_half_space(2).unwrap();
    let opts = FlowOptions::default();
    let o = Point::new(&[0.0, 1.0]);
    let delta = 0.02;
    let screens = ScreenGeometry::new(delta);
    // obstacle on the vertical ray from o
    let omega = Point::new(&[0.0, (3.0f64).exp()]);
    let v_up = unit(&m, &[0.0, 1.0], &[0.0, 1.0]);
    let (class, d, _) = avoidance::hit_test(&m, &v_up, &omega, &screens, 1e-9, 6.0, &opts).unwrap();
    assert_eq!(class, HitClass::Disk);
    assert!(d < 1e-7);
    let _ = o;
}

#[test]
fn screens_construction_on_hyperbolic_cylinder() {
    let period = 1.2f64;
    let m = ManifoldModel::hyperbolic_half_space(2)
        .unwrap()
        .with_deck_generators(vec![DeckGenerator::Dilation { factor: period.exp() }]);
    let opts = FlowOptions::default();
    let o = Point::new(&[0.0, 1.0]);
    // marked vector on the vertical axis one period up
    let omega0 = unit(&m, &[0.3, (2.0f64).exp()], &[1.0, 0.4]);
    let set = ObstacleSet::orbit(&m, &omega0, &o, 12.0, &opts).unwrap();
    assert!(set.len() >= 3, "orbit size {}", set.len());

    let delta = 0.02;
    let delta_prime = 6.5 * delta;
    let cert =
        avoidance::verify_radial_separation(&m, &o, &set, 0.5 + delta_prime, delta_prime, &opts)
            .unwrap();
    assert!(cert.ok, "orbit not radially separated");

    let params = ScreensParams { delta, delta_prime, a: 0.5, rho: 0.8, i_max: 64 };
    // start aimed near (but not at) the first obstacle
    let aim = flow::log_map(&m, &o, &set.points[0], &opts).unwrap();
    let dir = UnitVector::normalized(&m, aim).unwrap();
    let frame = m.orthonormal_frame(&o, Some(&dir.comps)).unwrap();
    let tilted = UnitVector::normalized(
        &m,
        Tangent {
            base: o,
            comps: dir.comps.scale((0.35f64).cos()).add_scaled(&frame[1], (0.35f64).sin()),
        },
    )
    .unwrap();
    let trace = construct_avoiding_ray(&m, &o, &tilted, &set, &params, &opts).unwrap();
    assert!(trace.converged, "construction did not converge");
    assert!(
        trace.final_clearance >= delta - 1e-9,
        "clearance {} below delta {delta}",
        trace.final_clearance
    );
    assert!(trace.total_rotation < params.rho / 5.0 + 1e-9);
    // independent dense re-check of the limit ray
    let dense = avoidance::dense_clearance_check(&m, &trace.z, &set, 14.0, 4000, &opts).unwrap();
    assert!(dense >= delta - 1e-4, "dense clearance {dense}");
    for s in &trace.steps {
        assert!(s.rehit_prior_annuli);
        assert!(s.cauchy_lhs <= s.cauchy_rhs + 1e-9);
    }
}

#[test]
fn iterate_stabilizes_when_support_is_far() {
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(60.0);
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&m, &sup, 2.5, 16, 3, &opts).unwrap();
    // a ray crossing the ridge at a right angle keeps a large clearance
    let v0 = unit(&m, &[-2.0, 0.0], &[1.0, 0.0]);
    let ledger_input = fabricate_ledger(&m, &sup, &psi, &opts);
    let trace = iterate_avoidance(
        &m,
        &sup,
        &[v0],
        &ledger_input,
        &psi,
        &IterateOptions { t_max: 12.0, strict: true, ..Default::default() },
        &opts,
    )
    .unwrap();
    assert!(trace.stabilized);
    assert!(trace.steps.is_empty());
    assert!(trace.limit_distance < 1e-12);
    assert!(trace.final_clearance > 0.3);
}

// small but valid ledger for module-level runs: shrink and clearance
// certificates computed with few trials
fn fabricate_ledger(
    m: &ManifoldModel,
    sup: &StratifiedSupport,
    psi: &avoidance::PsiConstants,
    opts: &FlowOptions,
) -> avoidance::ConstantsLedger {
    let r0 = 2.5;
    let plan = avoidance::plan_constants(psi).unwrap();
    let eps = plan.epsilon;
    let dom = default_domain(m);
    let mut rng = trial_rng(41, 0);
    let mut family = Vec::new();
    while family.len() < 10 {
        let p = dom.sample_point(&mut rng);
        let v = random_unit_vector(m, &p, &mut rng);
        if dist_ur(m, sup, &v, false, opts).unwrap().value >= eps {
            family.push(v);
        }
    }
    let shrink = calibrate_shrink(m, &family, plan.n_shrink, plan.shield, r0, 24, 7, opts).unwrap();
    let b_wait = (shrink.a + 8.0 * eps).max(r0 + 4.0 * eps) + 0.5;
    let beta = calibrate_beta(m, sup, eps, b_wait, 12, 11, opts).unwrap();
    choose_constants(r0, psi, &shrink, &beta).unwrap()
}

#[test]
fn iterate_deforms_a_ridge_hugging_ray() {
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(120.0);
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&m, &sup, 2.5, 16, 3, &opts).unwrap();
    let ledger = fabricate_ledger(&m, &sup, &psi, &opts);
    // aimed along the ridge from just off it
    let x0 = 6.0 * ledger.epsilon;
    let v0 = unit(&m, &[x0, 0.0], &[0.0, 1.0]);
    let trace = iterate_avoidance(
        &m,
        &sup,
        &[v0],
        &ledger,
        &psi,
        &IterateOptions { t_max: 30.0, strict: true, seed: 5, ..Default::default() },
        &opts,
    )
    .unwrap();
    assert!(!trace.steps.is_empty(), "expected at least one deformation");
    for s in &trace.steps {
        for c in &s.checks {
            assert!(c.pass, "check {} failed: {} vs {}", c.name, c.lhs, c.rhs);
        }
    }
    let n = f64::from(ledger.n_shrink);
    assert!(trace.limit_distance <= n * ledger.delta / (n - 1.0) * ledger.epsilon + 1e-9);
    assert!(
        trace.final_clearance >= ledger.beta * ledger.epsilon,
        "clearance {} vs beta*eps {}",
        trace.final_clearance,
        ledger.beta * ledger.epsilon
    );
}

#[test]
fn iterate_is_deterministic() {
    let m = ridge_model();
    let sup = StratifiedSupport::ridge(60.0);
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&m, &sup, 2.5, 16, 3, &opts).unwrap();
    let ledger = fabricate_ledger(&m, &sup, &psi, &opts);
    let v0 = unit(&m, &[5.0 * ledger.epsilon, 0.0], &[0.0, 1.0]);
    let run = |seed: u64| {
        iterate_avoidance(
            &m,
            &sup,
            &[v0],
            &ledger,
            &psi,
            &IterateOptions { t_max: 14.0, strict: false, seed, ..Default::default() },
            &opts,
        )
        .unwrap()
    };
    let a = run(9);
    let b = run(9);
    assert_eq!(a.steps.len(), b.steps.len());
    assert_eq!(a.limit_distance.to_bits(), b.limit_distance.to_bits());
    assert_eq!(a.final_clearance.to_bits(), b.final_clearance.to_bits());
    for (x, y) in a.v_inf.iter().zip(b.v_inf.iter()) {
        assert_eq!(x.comps.as_slice(), y.comps.as_slice());
    }
}

#[test]
fn ledger_rejects_inconsistent_certificates() {
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup = z_axis_support();
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&e3, &sup, 2.0, 16, 3, &opts).unwrap();
    // flat space yields a rejected shrink certificate
    let dom = default_domain(&e3);
    let mut rng = trial_rng(51, 0);
    let family: Vec<UnitVector> = (0..6)
        .map(|_| {
            let p = dom.sample_point(&mut rng);
            random_unit_vector(&e3, &p, &mut rng)
        })
        .collect();
    let shrink = calibrate_shrink(&e3, &family, 6, 0.5, 2.0, 10, 3, &opts).unwrap();
    assert!(!shrink.accepted);
    let beta = calibrate_beta(&e3, &sup, psi.tau / 20.0, 5.0, 8, 3, &opts).unwrap();
    let err = choose_constants(2.5, &psi, &shrink, &beta).unwrap_err();
    match err {
        ranklab_core::Error::ConstraintViolated { name, .. } => {
            assert_eq!(name, "shrink_certificate")
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn delta_is_scale_free() {
    // delta = (C + tau/2) / eps must not depend on the tau scaling
    let e3 = ManifoldModel::euclidean(3).unwrap();
    let sup = z_axis_support();
    let opts = FlowOptions::default();
    let psi = calibrate_psi(&e3, &sup, 2.0, 16, 3, &opts).unwrap();
    let delta_of = |p: &avoidance::PsiConstants| (p.c_disp + p.tau / 2.0) / (p.tau / 20.0);
    let full = delta_of(&psi);
    let half = delta_of(&psi.scaled(0.5));
    assert!((full - half).abs() < 1e-12);
    // the shrinking factor floor is the ceiling choice
    let n = (2.0 + full / 2.0).ceil();
    assert!(n > 1.0 + full / 2.0);
}
