//! From rays to geodesics on 3-d models: deform two orthogonal direction
//! circles through `±v0`, intersect the deformed families, and return a
//! vector whose forward and backward rays both stay clear of the support
//! tangents.

use crate::avoidance::constants::ConstantsLedger;
use crate::avoidance::distortion::{deform_on_sphere_with, PsiConstants};
use crate::avoidance::iterate::{dense_ray_clearance, iterate_avoidance, AvoidanceTrace, IterateOptions};
use crate::avoidance::support::StratifiedSupport;
// float methods come from the trait in no_std builds; std test harnesses shadow it
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::geometry::{ManifoldModel, Tangent, UnitVector};
use crate::linalg::VecN;
use crate::optim;
use alloc::format;
use alloc::vec::Vec;

/// Result of the ray-pairing step.
#[derive(Debug, Clone)]
pub struct ClosedGeodesic {
    pub v_hat: UnitVector,
    /// Sign changes of the side function over the full circle (expected >= 2).
    pub intersections: usize,
    /// `d^1(v0, v_hat)`.
    pub displacement: f64,
    /// Bound `c * eta` with `c = delta / (N (N-1))` and `eta = N^2 eps`.
    pub displacement_bound: f64,
    pub forward_clearance: f64,
    pub backward_clearance: f64,
    pub trace_fwd: AvoidanceTrace,
    pub trace_bwd: AvoidanceTrace,
}

/// Deforms the circles through `±v0` spanned with the two frame directions
/// orthogonal to `v0`, then brackets an intersection of the first deformed
/// family with the negated second one near `v0`.
#[allow(clippy::too_many_arguments)]
pub fn close_ray_pair(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    v0: &UnitVector,
    ledger: &ConstantsLedger,
    psi: &PsiConstants,
    options: &IterateOptions,
    grid: usize,
    opts: &FlowOptions,
) -> Result<ClosedGeodesic> {
    if model.dim() != 3 {
        return Err(Error::InvalidInput {
            detail: format!("ray pairing needs a 3-d model, dim {}", model.dim()),
        });
    }
    if !sup.is_empty() && sup.dim != 1 {
        return Err(Error::InvalidInput {
            detail: format!("support dimension {} must be 1", sup.dim),
        });
    }
    let o = v0.base;
    let frame = model.orthonormal_frame(&o, Some(&v0.comps))?;
    let circle = |axis: usize, s: f64| -> UnitVector {
        let c = frame[0].scale(s.cos()).add_scaled(&frame[axis], s.sin());
        UnitVector::trusted(o, c)
    };
    let mut grid_s = Vec::with_capacity(grid);
    for k in 0..grid {
        grid_s.push(2.0 * core::f64::consts::PI * k as f64 / grid as f64);
    }
    let y1: Vec<UnitVector> = grid_s.iter().map(|&s| circle(1, s)).collect();
    let y2: Vec<UnitVector> = grid_s.iter().map(|&s| circle(2, s)).collect();

    let run_opts = IterateOptions { dim_y: 1, ..*options };
    let trace_fwd = iterate_avoidance(model, sup, &y1, ledger, psi, &run_opts, opts)?;
    let trace_bwd = iterate_avoidance(
        model,
        sup,
        &y2,
        ledger,
        psi,
        &IterateOptions { seed: run_opts.seed ^ 0xB1D, ..run_opts },
        opts,
    )?;

    // coordinates on the direction sphere in the metric-orthonormal frame
    let coords = |v: &UnitVector| -> VecN {
        let g = model.metric_at(&o);
        let mut c = VecN::zeros(3);
        for (i, b) in frame.iter().enumerate() {
            c[i] = g.bilinear(&v.comps, b);
        }
        c
    };
    let target: Vec<VecN> = trace_bwd.v_inf.iter().map(|v| coords(&v.negate())).collect();

    // signed offset of a point from the closed polyline `-Y2_hat`
    let side = |p: &VecN| -> f64 {
        let m = target.len();
        let mut best = (f64::INFINITY, 0usize);
        for (u, t) in target.iter().enumerate() {
            let d = p.sub(t).norm();
            if d < best.0 {
                best = (d, u);
            }
        }
        let u = best.1;
        let prev = &target[(u + m - 1) % m];
        let next = &target[(u + 1) % m];
        let tangent = next.sub(prev);
        let normal = cross3(&target[u], &tangent);
        let nn = normal.norm();
        if nn < 1e-12 {
            return 0.0;
        }
        p.dot(&normal.scale(1.0 / nn))
    };

    // replay the first family's deformation schedule on an arbitrary circle
    // parameter (continuous extension of the deformed map to off-grid s)
    let schedule_fwd: Vec<(f64, f64)> =
        trace_fwd.steps.iter().map(|st| (st.t_i, st.radius_jitter)).collect();
    let replay = |s: f64| -> Result<UnitVector> {
        replay_schedule(model, sup, &circle(1, s), &schedule_fwd, psi, opts)
    };

    // bracket sign changes of the side function over the full circle
    let mut h = Vec::with_capacity(grid);
    for v in trace_fwd.v_inf.iter() {
        h.push(side(&coords(v)));
    }
    let mut brackets = Vec::new();
    for k in 0..grid {
        let a = h[k];
        let b = h[(k + 1) % grid];
        if a == 0.0 || a * b < 0.0 {
            brackets.push((grid_s[k], grid_s[k] + 2.0 * core::f64::consts::PI / grid as f64));
        }
    }
    let intersections = brackets.len();
    if intersections == 0 {
        return Err(Error::NoIntersection);
    }

    // refine the bracket nearest s = 0 (the parameter of v0 on the circle)
    brackets.sort_by(|x, y| {
        angular_gap(0.5 * (x.0 + x.1))
            .partial_cmp(&angular_gap(0.5 * (y.0 + y.1)))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let (sa, sb) = brackets[0];
    let mut err = None;
    let s_star = optim::bisect_root(
        |s| match replay(s) {
            Ok(v) => side(&coords(&v)),
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        sa,
        sb,
        1e-10,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let v_hat = replay(s_star)?;

    // certificates: displacement and dense clearance of both half-rays
    let displacement = flow::d1(model, v0, &v_hat, opts)?;
    let n = f64::from(ledger.n_shrink);
    let c_global = ledger.delta / (n * (n - 1.0));
    let eta = n * n * ledger.epsilon;
    let fwd_path = flow::geodesic(model, &v_hat, 0.0, options.t_max, opts)?;
    let bwd_path = flow::geodesic(model, &v_hat.negate(), 0.0, options.t_max, opts)?;
    let forward_clearance =
        dense_ray_clearance(model, sup, &fwd_path, options.t_max, 0.1, opts)?;
    let backward_clearance =
        dense_ray_clearance(model, sup, &bwd_path, options.t_max, 0.1, opts)?;
    Ok(ClosedGeodesic {
        v_hat,
        intersections,
        displacement,
        displacement_bound: c_global * eta,
        forward_clearance,
        backward_clearance,
        trace_fwd,
        trace_bwd,
    })
}

/// Applies a recorded deformation schedule `(t_i, jitter)` to one direction.
pub fn replay_schedule(
    model: &ManifoldModel,
    sup: &StratifiedSupport,
    v: &UnitVector,
    schedule: &[(f64, f64)],
    psi: &PsiConstants,
    opts: &FlowOptions,
) -> Result<UnitVector> {
    let o = v.base;
    let mut cur = *v;
    for &(t_i, dr) in schedule {
        let at_t = flow::flow_phi(model, &cur, t_i, opts)?;
        let deformed = deform_on_sphere_with(model, sup, &[at_t], t_i, psi, 1.0, dr, opts)?;
        let d = &deformed[0];
        if d.displacement == 0.0 {
            continue;
        }
        let back = flow::flow_phi(model, &d.vector, -t_i, opts)?;
        cur = UnitVector::normalized(model, Tangent { base: o, comps: back.comps })?;
    }
    Ok(cur)
}

fn cross3(a: &VecN, b: &VecN) -> VecN {
    VecN::from_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

fn angular_gap(s: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut a = s % two_pi;
    if a > core::f64::consts::PI {
        a -= two_pi;
    }
    if a < -core::f64::consts::PI {
        a += two_pi;
    }
    a.abs()
}
