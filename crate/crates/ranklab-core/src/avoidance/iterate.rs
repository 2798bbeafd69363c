//! The avoiding-ray iteration: wait at least one window, find the first time
//! the flowed map comes within `11 eps` of the support tangents, deform on
//! the sphere of that radius, and repeat. Shrinking of past displacements is
//! asserted on the trace at every step.

use crate::avoidance::constants::ConstantsLedger;
use crate::avoidance::distortion::{deform_on_sphere, PsiConstants};
use crate::avoidance::support::{self, StratifiedSupport};
// float methods come from the trait in no_std builds; std test harnesses shadow it
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions, GeodesicPath};
use crate::geometry::{ManifoldModel, UnitVector};
use crate::optim;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Options of one iteration run.
#[derive(Debug, Clone, Copy)]
pub struct IterateOptions {
    pub t_max: f64,
    /// Coarse step of the trigger-time scan.
    pub coarse_dt: f64,
    /// Abort on the first failed per-step check (the primary diagnostic
    /// surface); otherwise record and continue.
    pub strict: bool,
    pub seed: u64,
    /// Dimension of the sample grid (0 = single vector, 1 = circle).
    pub dim_y: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { t_max: 50.0, coarse_dt: 0.05, strict: true, seed: 7, dim_y: 0 }
    }
}

/// One recorded check with its measured sides.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

fn check(name: &'static str, lhs: f64, rhs: f64) -> CheckOutcome {
    CheckOutcome { name, pass: lhs <= rhs, lhs, rhs }
}

/// One deformation step of the trace.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub index: usize,
    pub t_i: f64,
    /// Worst clearance of the flowed map at the trigger time.
    pub trigger_clearance: f64,
    /// Worst clearance at the trigger time after the deformation.
    pub clearance_after: f64,
    /// Largest displacement at the trigger time.
    pub displacement_at_t: f64,
    /// Largest displacement of the direction vectors at the origin.
    pub vector_displacement: f64,
    /// Radius jitter used by this deformation (recorded for exact replay).
    pub radius_jitter: f64,
    pub checks: Vec<CheckOutcome>,
}

/// Full trace of one run.
#[derive(Debug, Clone)]
pub struct AvoidanceTrace {
    pub ledger: ConstantsLedger,
    pub steps: Vec<StepRecord>,
    pub v_inf: Vec<UnitVector>,
    /// Largest `d^1(v_0(x), v_inf(x))`.
    pub limit_distance: f64,
    /// Dense-sampled clearance of the limit rays over `[0, t_final]`.
    pub final_clearance: f64,
    pub t_final: f64,
    pub stabilized: bool,
}

struct StepSnapshots {
    t: f64,
    /// Flowed map before the deformation, at its trigger time.
    pre: Vec<UnitVector>,
    /// Flowed map after the deformation, at the same time.
    post: Vec<UnitVector>,
}

/// Runs the iteration on a grid map of directions at a common origin.
pub fn iterate_avoidance(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    v0_map: &[UnitVector],
    ledger: &ConstantsLedger,
    psi: &PsiConstants,
    options: &IterateOptions,
    opts: &FlowOptions,
) -> Result<AvoidanceTrace> {
    if v0_map.is_empty() {
        return Err(Error::InvalidInput { detail: String::from("empty direction grid") });
    }
    if !sup.is_empty() && options.dim_y >= model.dim() - sup.dim {
        return Err(Error::InvalidInput {
            detail: format!(
                "grid dimension {} must stay below dim X - dim support = {}",
                options.dim_y,
                model.dim() - sup.dim
            ),
        });
    }
    ledger.validate()?;
    let origin = v0_map[0].base;
    for v in v0_map {
        if v.base.coords.sub(&origin.coords).norm() > 1e-9 {
            return Err(Error::InvalidInput {
                detail: String::from("all grid directions must share one base point"),
            });
        }
    }

    let eps = ledger.epsilon;
    let horizon = options.t_max + ledger.shield + 1.0;
    let mut v_cur: Vec<UnitVector> = v0_map.into();
    let mut paths: Vec<GeodesicPath> = Vec::with_capacity(v_cur.len());
    for v in &v_cur {
        paths.push(flow::geodesic(model, v, 0.0, horizon, opts)?);
    }

    let mut snapshots: Vec<StepSnapshots> = Vec::new();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut t_prev = 0.0f64;
    let mut stabilized = false;

    for step_index in 0..256 {
        // ---- trigger search: first time the map comes within 11 eps of UR
        let trigger = find_trigger(
            model,
            sup,
            &paths,
            t_prev + ledger.b_wait,
            options.t_max,
            options.coarse_dt,
            11.0 * eps,
            opts,
        )?;
        let Some((t_i, clearance_at)) = trigger else {
            stabilized = true;
            break;
        };

        // ---- deformation on the sphere of radius t_i
        let at_t: Vec<UnitVector> = paths.iter().map(|p| p.velocity(t_i)).collect();
        let (deformed, jitter) = deform_on_sphere(
            model,
            sup,
            &at_t,
            t_i,
            psi,
            1.0,
            options.seed ^ (step_index as u64).wrapping_mul(0x9E37_79B9),
            opts,
        )?;

        let mut v_next: Vec<UnitVector> = Vec::with_capacity(v_cur.len());
        let mut next_paths: Vec<GeodesicPath> = Vec::with_capacity(v_cur.len());
        let mut displacement_at_t: f64 = 0.0;
        let mut clearance_after = f64::INFINITY;
        let mut vector_displacement: f64 = 0.0;
        for (x, d) in deformed.iter().enumerate() {
            displacement_at_t = displacement_at_t.max(d.displacement);
            clearance_after = clearance_after.min(d.clearance);
            if d.displacement == 0.0 {
                v_next.push(v_cur[x]);
                next_paths.push(paths[x].clone());
                continue;
            }
            // pull the deformed vector back to the origin and renormalise;
            // radial vectors from o stay radial, so the base snap is exact
            // bookkeeping rather than a projection
            let back = flow::flow_phi(model, &d.vector, -t_i, opts)?;
            let snapped =
                UnitVector::normalized(model, crate::geometry::Tangent { base: origin, comps: back.comps })?;
            let disp = flow::d1(model, &v_cur[x], &snapped, opts)?;
            vector_displacement = vector_displacement.max(disp);
            next_paths.push(flow::geodesic(model, &snapped, 0.0, horizon, opts)?);
            v_next.push(snapped);
        }

        // ---- per-step checks
        let mut checks: Vec<CheckOutcome> = Vec::new();
        checks.push(check("step_displacement", displacement_at_t, ledger.delta * eps));
        checks.push(CheckOutcome {
            name: "deformed_clearance",
            pass: clearance_after >= 10.0 * eps,
            lhs: clearance_after,
            rhs: 10.0 * eps,
        });
        let n = f64::from(ledger.n_shrink);
        let contraction_rhs = ledger.delta * eps / n.powi(step_index as i32 - 1);
        checks.push(check("vector_contraction", vector_displacement, contraction_rhs));

        let post: Vec<UnitVector> = deformed.iter().map(|d| d.vector).collect();
        for (j, snap) in snapshots.iter().enumerate() {
            let mut worst_drift: f64 = 0.0;
            let mut worst_pre: f64 = 0.0;
            let mut worst_post: f64 = 0.0;
            let mut worst_clear = f64::INFINITY;
            let mut worst_contraction: f64 = 0.0;
            for x in 0..v_next.len() {
                let (t_jx, d_post) =
                    closest_approach(model, &next_paths[x], &snap.post[x], snap.t, 1.5, opts)?;
                let control = next_paths[x].velocity(t_jx);
                worst_drift = worst_drift.max((t_jx - snap.t).abs());
                worst_post = worst_post.max(d_post);
                worst_pre = worst_pre.max(flow::d1(model, &control, &snap.pre[x], opts)?);
                worst_clear =
                    worst_clear.min(support::dist_ur(model, sup, &control, false, opts)?.value);
                // distance from the control vector to the previous ray
                let (_, d_prev) =
                    closest_approach(model, &paths[x], &control, t_jx, 1.5, opts)?;
                worst_contraction = worst_contraction.max(d_prev);
            }
            checks.push(check("control_time_drift", worst_drift, 4.0 * eps));
            checks.push(check("control_gap_pre", worst_pre, (ledger.delta + ledger.lambda) * eps));
            checks.push(check("control_gap_post", worst_post, 2.0 * eps));
            checks.push(CheckOutcome {
                name: "control_clearance",
                pass: worst_clear > 2.0 * eps,
                lhs: worst_clear,
                rhs: 2.0 * eps,
            });
            let k_back = step_index - j;
            checks.push(check(
                "geometric_contraction",
                worst_contraction,
                ledger.delta * eps / n.powi(k_back as i32),
            ));
        }

        if options.strict {
            if let Some(c) = checks.iter().find(|c| !c.pass) {
                return Err(Error::CheckFailed {
                    check: c.name,
                    detail: format!(
                        "step {step_index} at t = {t_i:.4}: {} = {:.6e} vs bound {:.6e}",
                        c.name, c.lhs, c.rhs
                    ),
                });
            }
        }

        snapshots.push(StepSnapshots { t: t_i, pre: at_t, post });
        steps.push(StepRecord {
            index: step_index,
            t_i,
            trigger_clearance: clearance_at,
            clearance_after,
            displacement_at_t,
            vector_displacement,
            radius_jitter: jitter,
            checks,
        });
        v_cur = v_next;
        paths = next_paths;
        t_prev = t_i;
    }

    // ---- limit vector and its certificates
    let mut limit_distance: f64 = 0.0;
    for (v0, vi) in v0_map.iter().zip(v_cur.iter()) {
        limit_distance = limit_distance.max(flow::d1(model, v0, vi, opts)?);
    }
    let t_final = if stabilized { options.t_max } else { t_prev };
    let mut final_clearance = f64::INFINITY;
    for path in &paths {
        final_clearance =
            final_clearance.min(dense_ray_clearance(model, sup, path, t_final, 0.1, opts)?);
    }
    Ok(AvoidanceTrace {
        ledger: *ledger,
        steps,
        v_inf: v_cur,
        limit_distance,
        final_clearance,
        t_final,
        stabilized,
    })
}

/// First `t` in `[start, t_max]` with worst map clearance `<= threshold`,
/// scanned coarsely and refined by bisection. `None` when the map stays
/// clear through the horizon.
#[allow(clippy::too_many_arguments)]
fn find_trigger(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    paths: &[GeodesicPath],
    start: f64,
    t_max: f64,
    dt: f64,
    threshold: f64,
    opts: &FlowOptions,
) -> Result<Option<(f64, f64)>> {
    if sup.is_empty() || start > t_max {
        return Ok(None);
    }
    let clearance = |t: f64| -> Result<f64> {
        let mut worst = f64::INFINITY;
        for p in paths {
            let u = p.velocity(t);
            let lb = support::dist_ur_lower_bound(model, sup, &u.base, opts)?;
            if lb > threshold.max(worst) {
                continue;
            }
            let d = support::dist_ur(model, sup, &u, false, opts)?.value;
            worst = worst.min(d);
        }
        Ok(worst)
    };
    let mut t_above = start;
    let c0 = clearance(start)?;
    if c0 <= threshold {
        return Ok(Some((start, c0)));
    }
    let mut t = start + dt;
    while t <= t_max + 1e-12 {
        let c = clearance(t)?;
        if c <= threshold {
            // refine the crossing
            let mut err = None;
            let t_star = optim::bisect_root(
                |s| match clearance(s) {
                    Ok(c) => c - threshold,
                    Err(e) => {
                        err = Some(e);
                        -1.0
                    }
                },
                t_above,
                t,
                1e-10,
            );
            if let Some(e) = err {
                return Err(e);
            }
            let c_star = clearance(t_star)?;
            return Ok(Some((t_star, c_star)));
        }
        t_above = t;
        t += dt;
    }
    Ok(None)
}

/// Closest approach of the velocity field of `path` to a fixed vector,
/// searched in a window around `t_center`.
fn closest_approach(
    model: &ManifoldModel,
    path: &GeodesicPath,
    target: &UnitVector,
    t_center: f64,
    window: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let (lo, hi) = path.span();
    let a = (t_center - window).max(lo);
    let b = (t_center + window).min(hi);
    let mut err = None;
    let (t_star, d_star, _) = optim::scan_then_golden(
        |t| match flow::d1(model, &path.velocity(t), target, opts) {
            Ok(d) => d,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        a,
        b,
        13,
        1e-9,
    );
    match err {
        Some(e) => Err(e),
        None => Ok((t_star, d_star)),
    }
}

/// Dense clearance of one ray over `[0, t_final]`: pointwise `d^1` to the
/// support tangents with lower-bound pruning and local refinement at the
/// worst grid node.
pub fn dense_ray_clearance(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    path: &GeodesicPath,
    t_final: f64,
    dt: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    if sup.is_empty() {
        return Ok(f64::INFINITY);
    }
    let steps = (t_final / dt).ceil() as usize;
    let mut best = f64::INFINITY;
    let mut best_t = 0.0f64;
    for k in 0..=steps {
        let t = t_final * k as f64 / steps.max(1) as f64;
        let u = path.velocity(t);
        let lb = support::dist_ur_lower_bound(model, sup, &u.base, opts)?;
        if lb >= best {
            continue;
        }
        let d = support::dist_ur(model, sup, &u, false, opts)?.value;
        if d < best {
            best = d;
            best_t = t;
        }
    }
    // refine around the worst grid node
    let mut err = None;
    let (_, refined, _) = optim::scan_then_golden(
        |t| {
            let u = path.velocity(t.clamp(0.0, t_final));
            match support::dist_ur(model, sup, &u, false, opts) {
                Ok(d) => d.value,
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            }
        },
        (best_t - dt).max(0.0),
        (best_t + dt).min(t_final),
        9,
        1e-8,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(best.min(refined))
}
