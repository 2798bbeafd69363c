use ranklab_core::avoidance::{self, dist_ur, iterate_avoidance, IterateOptions, StratifiedSupport};
use ranklab_core::flow::FlowOptions;
use ranklab_core::geometry::*;
use ranklab_core::hyperbolicity::calibrate_shrink_capped;
use ranklab_core::trial_rng;
use std::time::Instant;

#[test]
fn dbg() {
    let m = ManifoldModel::flat_ridge_cylinder(WarpFn::default_ridge(), 2.0 * std::f64::consts::PI).unwrap();
    let sup = StratifiedSupport::ridge(60.0);
    let opts = FlowOptions::default();
    let psi = avoidance::calibrate_psi(&m, &sup, 2.5, 16, 3, &opts).unwrap();
    let plan = avoidance::plan_constants(&psi).unwrap();
    let dom = default_domain(&m);
    let mut rng = trial_rng(41, 0);
    let mut family = Vec::new();
    let t0 = Instant::now();
    while family.len() < 10 {
        let p = dom.sample_point(&mut rng);
        let v = random_unit_vector(&m, &p, &mut rng);
        if dist_ur(&m, &sup, &v, false, &opts).unwrap().value >= plan.epsilon {
            family.push(v);
        }
    }
    println!("family: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let shrink = calibrate_shrink_capped(&m, &family, plan.n_shrink, plan.shield, 2.5, 24, 7, 8.0, &opts).unwrap();
    println!("shrink: {:?} accepted={} a={}", t0.elapsed(), shrink.accepted, shrink.a);
    let eps = plan.epsilon;
    let b_wait = (shrink.a + 8.0 * eps).max(2.5 + 4.0 * eps) + 0.5;
    let t0 = Instant::now();
    let beta = avoidance::calibrate_beta(&m, &sup, eps, b_wait, 12, 11, &opts).unwrap();
    println!("beta: {:?} beta={} min_clr={:.6}", t0.elapsed(), beta.beta, beta.min_clearance);
    let ledger = avoidance::choose_constants(2.5, &psi, &shrink, &beta).unwrap();
    println!("ledger ok: eps={:.6} delta={:.1} N={} A={} Bwait={:.3} beta={:.4}", ledger.epsilon, ledger.delta, ledger.n_shrink, ledger.a_dist, ledger.b_wait, ledger.beta);
    let v0 = UnitVector::normalized(&m, Tangent::new(Point::new(&[-2.0, 0.0]), &[1.0, 0.0])).unwrap();
    let t0 = Instant::now();
    let trace = iterate_avoidance(&m, &sup, &[v0], &ledger, &psi,
        &IterateOptions { t_max: 12.0, strict: true, ..Default::default() }, &opts).unwrap();
    println!("iterate: {:?} steps={} stabilized={} clr={:.5}", t0.elapsed(), trace.steps.len(), trace.stabilized, trace.final_clearance);
}
