//! Doubling behaviour of geodesics near rank-one vectors: tracing distances,
//! the segment-contraction (hyperbolicity) test, and empirical calibration of
//! the radial shrinking constants consumed by the avoidance iteration.
//!
//! Universal quantifiers are replaced by randomized certificates with
//! recorded seeds and trial counts throughout.

use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::geometry::{random_unit_vector, ManifoldModel, Point, UnitVector};
use crate::linalg::VecN;
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::optim;
use crate::trial_rng;
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

/// A certified-by-sampling tracing distance for a vector family: any vector
/// `w` within `theta` of a family member `v` keeps both endpoint gaps of the
/// segments over `[-half_length, half_length]` below `epsilon`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracingSpec {
    pub half_length: f64,
    pub epsilon: f64,
    pub theta: f64,
    /// False when no grid value passed; `theta` is then the smallest grid
    /// value tried.
    pub certified: bool,
}

/// Perturbs `v` into a vector within `d^1`-distance `radius` (base move plus
/// rotation, verified and shrunk on failure).
pub fn sample_near<R: Rng>(
    model: &ManifoldModel,
    v: &UnitVector,
    radius: f64,
    rng: &mut R,
    opts: &FlowOptions,
) -> Result<UnitVector> {
    let mut scale = radius;
    for _ in 0..6 {
        let dir = random_unit_vector(model, &v.base, rng);
        let shift: f64 = rng.random::<f64>() * 0.45 * scale;
        let path = flow::geodesic(model, &dir, 0.0, shift.max(1e-9), opts)?;
        let moved = flow::parallel_transport(model, &path, &v.as_tangent(), 0.0, shift, opts)?;
        // rotate toward a random orthogonal direction
        let probe = random_unit_vector(model, &moved.base, rng);
        let c = model.inner(&moved.base, &probe.comps, &moved.comps);
        let mut perp = probe.comps.add_scaled(&moved.comps, -c);
        let pn = model.norm(&moved.base, &perp);
        let w = if pn < 1e-9 {
            moved.comps
        } else {
            perp = perp.scale(1.0 / pn);
            let ang: f64 = rng.random::<f64>() * 0.45 * scale;
            moved.comps.scale(ang.cos()).add_scaled(&perp, ang.sin())
        };
        let cand = UnitVector::trusted(moved.base, w);
        if flow::d1(model, v, &cand, opts)? < radius {
            return Ok(cand);
        }
        scale *= 0.5;
    }
    Ok(*v)
}

/// Largest grid value of `theta` such that sampled vectors within `theta` of
/// each family member trace the family segments to endpoint accuracy
/// `epsilon` over `[-half_length, half_length]`.
pub fn tracing_distance(
    model: &ManifoldModel,
    family: &[UnitVector],
    half_length: f64,
    epsilon: f64,
    probes_per_vector: usize,
    seed: u64,
    opts: &FlowOptions,
) -> Result<TracingSpec> {
    let mut theta = 0.9 * epsilon;
    let shrink = 0.55;
    let levels = 18usize;
    for level in 0..levels {
        let mut ok = true;
        'family: for (vi, v) in family.iter().enumerate() {
            let end_p = flow::flow_phi(model, v, half_length, opts)?;
            let end_m = flow::flow_phi(model, v, -half_length, opts)?;
            for probe in 0..probes_per_vector {
                let mut rng =
                    trial_rng(seed, (level * family.len() + vi) as u64 * 1000 + probe as u64);
                let w = sample_near(model, v, theta, &mut rng, opts)?;
                let wp = flow::flow_phi(model, &w, half_length, opts)?;
                let wm = flow::flow_phi(model, &w, -half_length, opts)?;
                let gap_p = flow::d1(model, &end_p, &wp, opts)?;
                let gap_m = flow::d1(model, &end_m, &wm, opts)?;
                if gap_p.max(gap_m) >= epsilon {
                    ok = false;
                    break 'family;
                }
            }
        }
        if ok {
            return Ok(TracingSpec { half_length, epsilon, theta, certified: true });
        }
        if level + 1 < levels {
            theta *= shrink;
        }
    }
    Ok(TracingSpec { half_length, epsilon, theta, certified: false })
}

/// Minimal distance and Hausdorff distance between the base segments
/// `γ_{w1}([-T, T])` and `γ_{w2}([-T, T])`.
///
/// The per-point distance to the other segment is convex in the parameter, so
/// the Hausdorff suprema sit at the four endpoints and the minimum is found
/// by golden section with a local inner bracket.
pub fn segment_distances(
    model: &ManifoldModel,
    w1: &UnitVector,
    w2: &UnitVector,
    half_length: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let t = half_length;
    let p1 = flow::geodesic(model, w1, -t, t, opts)?;
    let p2 = flow::geodesic(model, w2, -t, t, opts)?;
    let seg_dist = |from: &flow::GeodesicPath,
                    to: &flow::GeodesicPath,
                    at: f64|
     -> Result<f64> {
        let (x, _) = from.eval(at);
        // the segments stay close, so the nearest parameter is near `at`
        let lo = (at - 2.0).max(-t);
        let hi = (at + 2.0).min(t);
        let mut err = None;
        let (_, d, _) = optim::scan_then_golden(
            |s| {
                let (y, _) = to.eval(s);
                match flow::fast_distance(model, &x, &y, opts) {
                    Ok(d) => d,
                    Err(e) => {
                        err = Some(e);
                        f64::INFINITY
                    }
                }
            },
            lo,
            hi,
            9,
            1e-10,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(d),
        }
    };
    let mut hausdorff: f64 = 0.0;
    for &(from, to) in &[(&p1, &p2), (&p2, &p1)] {
        for &at in &[-t, t] {
            hausdorff = hausdorff.max(seg_dist(from, to, at)?);
        }
    }
    let mut err = None;
    let (_, min_dist, _) = optim::scan_then_golden(
        |s| match seg_dist(&p1, &p2, s) {
            Ok(d) => d,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        -t,
        t,
        33,
        1e-10,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok((min_dist, hausdorff))
}

/// `min / Hausdorff` contraction ratio of one segment pair; the degenerate
/// case (`Hd < 1e-12`) is reported as an error so callers can discard it.
pub fn segment_contraction_ratio(
    model: &ManifoldModel,
    w1: &UnitVector,
    w2: &UnitVector,
    half_length: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    let (min_dist, hd) = segment_distances(model, w1, w2, half_length, opts)?;
    if hd < 1e-12 {
        return Err(Error::InvalidInput { detail: format!("degenerate pair, Hd = {hd:.3e}") });
    }
    Ok(min_dist / hd)
}

/// Result of the randomized doubling test around one vector.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperbolicityReport {
    pub mu: f64,
    pub half_length: f64,
    pub delta: f64,
    pub trials_requested: usize,
    pub trials_used: usize,
    pub pass: bool,
    pub worst_ratio: f64,
    pub theta: f64,
    pub seed: u64,
}

/// Tests the contraction condition: for sampled pairs in the
/// `(half_length, delta)`-tracing neighbourhood of `v`, the minimal segment
/// distance must not exceed `mu` times the Hausdorff distance.
pub fn hyperbolicity_test(
    model: &ManifoldModel,
    v: &UnitVector,
    mu: f64,
    half_length: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    opts: &FlowOptions,
) -> Result<HyperbolicityReport> {
    debug_assert!(mu > 0.0 && mu < 1.0);
    let tracing = tracing_distance(model, &[*v], half_length, delta, 6, seed, opts)?;
    let mut used = 0usize;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, 7_000_000 + trial as u64);
        let w1 = sample_near(model, v, tracing.theta, &mut rng, opts)?;
        let w2 = sample_near(model, v, tracing.theta, &mut rng, opts)?;
        match segment_contraction_ratio(model, &w1, &w2, half_length, opts) {
            Ok(ratio) => {
                used += 1;
                worst = worst.max(ratio);
                if ratio > mu {
                    pass = false;
                }
            }
            Err(Error::InvalidInput { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(HyperbolicityReport {
        mu,
        half_length,
        delta,
        trials_requested: trials,
        trials_used: used,
        pass,
        worst_ratio: worst,
        theta: tracing.theta,
        seed,
    })
}

/// Randomized certificate for the radial shrinking property: closeness
/// `eps < delta` of `γ_v(a)` to a radial ray `γ_w` (same origin) forces
/// `d^1(v, γ̇_w) < eps / n_shrink`, once `a` is large enough.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShrinkCertificate {
    pub model: alloc::string::String,
    pub n_shrink: u32,
    pub delta: f64,
    pub r0: f64,
    pub a: f64,
    pub trials: usize,
    pub failures: usize,
    pub seed: u64,
    pub accepted: bool,
}

/// Closest point of an integrated ray to a fixed chart point, searched in a
/// window around a parameter hint (pointwise distances only; no long-range
/// shooting).
pub fn closest_on_path(
    model: &ManifoldModel,
    path: &flow::GeodesicPath,
    point: &Point,
    s_center: f64,
    window: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let (lo_span, hi_span) = path.span();
    let lo = (s_center - window).max(lo_span);
    let hi = (s_center + window).min(hi_span);
    let mut err = None;
    let (s, d, _) = optim::scan_then_golden(
        |s| {
            let (x, _) = path.eval(s);
            match flow::fast_distance(model, point, &x, opts) {
                Ok(d) => d,
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            }
        },
        lo,
        hi,
        17,
        1e-9,
    );
    match err {
        Some(e) => Err(e),
        None => Ok((s, d)),
    }
}

/// Minimal `d^1` from `v` to the forward velocity field of the ray `path`,
/// searched in a window around a parameter hint.
pub fn d1_to_ray_windowed(
    model: &ManifoldModel,
    v: &UnitVector,
    path: &flow::GeodesicPath,
    s_center: f64,
    window: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let (lo_span, hi_span) = path.span();
    let lo = (s_center - window).max(lo_span);
    let hi = (s_center + window).min(hi_span);
    let mut err = None;
    let (s_star, d_star, _) = optim::scan_then_golden(
        |s| match flow::d1(model, v, &path.velocity(s), opts) {
            Ok(x) => x,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        13,
        1e-9,
    );
    match err {
        Some(e) => Err(e),
        None => Ok((s_star, d_star)),
    }
}

/// Doubling search for the smallest ladder distance `a ∈ {1, 2, 4, ...}` at
/// which no sampled radial pair violates the shrinking inequality.
///
/// Sampled radii grow with the candidate (`r ∈ [r0, r0 + 4a]`), so flat
/// geometry, whose required distance grows with the radius, is never
/// accepted.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_shrink(
    model: &ManifoldModel,
    family: &[UnitVector],
    n_shrink: u32,
    delta: f64,
    r0: f64,
    trials: usize,
    seed: u64,
    opts: &FlowOptions,
) -> Result<ShrinkCertificate> {
    calibrate_shrink_capped(model, family, n_shrink, delta, r0, trials, seed, 128.0, opts)
}

/// [`calibrate_shrink`] with an explicit ladder cap (useful where long-range
/// probing is pointless or expensive).
#[allow(clippy::too_many_arguments)]
pub fn calibrate_shrink_capped(
    model: &ManifoldModel,
    family: &[UnitVector],
    n_shrink: u32,
    delta: f64,
    r0: f64,
    trials: usize,
    seed: u64,
    a_cap: f64,
    opts: &FlowOptions,
) -> Result<ShrinkCertificate> {
    debug_assert!(n_shrink >= 2);
    let full_ladder = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let a_ladder: alloc::vec::Vec<f64> =
        full_ladder.iter().copied().filter(|a| *a <= a_cap).collect();
    let mut last_failures = trials;
    for (ai, &a) in a_ladder.iter().enumerate() {
        let mut failures = 0usize;
        for trial in 0..trials {
            let mut rng = trial_rng(seed, (ai * trials + trial) as u64);
            if shrink_trial_fails(model, family, n_shrink, delta, r0, a, &mut rng, opts)? {
                failures += 1;
            }
        }
        last_failures = failures;
        if failures == 0 {
            return Ok(ShrinkCertificate {
                model: alloc::string::String::from(model.name()),
                n_shrink,
                delta,
                r0,
                a,
                trials,
                failures: 0,
                seed,
                accepted: true,
            });
        }
    }
    Ok(ShrinkCertificate {
        model: alloc::string::String::from(model.name()),
        n_shrink,
        delta,
        r0,
        a: a_ladder[a_ladder.len() - 1],
        trials,
        failures: last_failures,
        seed,
        accepted: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn shrink_trial_fails<R: Rng>(
    model: &ManifoldModel,
    family: &[UnitVector],
    n_shrink: u32,
    delta: f64,
    r0: f64,
    a: f64,
    rng: &mut R,
    opts: &FlowOptions,
) -> Result<bool> {
    let v = family[rng.random_range(0..family.len())];
    // radii grow with the candidate but stay within the range where forward
    // integration is reliable; the cap still rules flat geometry out, whose
    // required distance grows linearly with the radius
    let r = r0 + rng.random::<f64>() * (4.0 * a).min(30.0);
    let origin_vec = flow::flow_phi(model, &v, -r, opts)?;
    let origin = origin_vec.base;
    let tip = flow::flow_phi(model, &v, a, opts)?.base;
    // radial companion ray: rotate the outward ray direction at the origin
    // by an angle sized so the tip distance lands inside the shield radius
    let outward = origin_vec; // γ̇_v(-r): points along the ray toward p(v)
    let frame = model.orthonormal_frame(&origin, Some(&outward.comps))?;
    let mut perp = crate::linalg::VecN::zeros(model.dim());
    let mut norm2 = 0.0;
    for b in frame.iter().skip(1) {
        let c: f64 = 2.0 * rng.random::<f64>() - 1.0;
        perp = perp.add_scaled(b, c);
        norm2 += c * c;
    }
    if norm2 < 1e-12 {
        return Ok(false);
    }
    let perp = perp.scale(1.0 / model.norm(&origin, &perp).max(1e-300));
    let eps_target = delta * (0.1 + 0.85 * rng.random::<f64>());
    let theta = eps_target / (r + a);
    let w = UnitVector::trusted(
        origin,
        outward.comps.scale(theta.cos()).add_scaled(&perp, theta.sin()),
    );
    let horizon = r + a + 3.0 * delta + 2.0;
    let path_w = flow::geodesic(model, &w, 0.0, horizon, opts)?;
    let (foot_s, eps_t) = closest_on_path(model, &path_w, &tip, r + a, 6.0, opts)?;
    if eps_t < 1e-6 || eps_t >= delta {
        return Ok(false); // degenerate or outside the shield radius
    }
    let (_, d1w) = d1_to_ray_windowed(model, &v, &path_w, foot_s - a, 6.0, opts)?;
    Ok(d1w >= eps_t / n_shrink as f64)
}

/// Support of the uniqueness check behind the radial-distance topology: from
/// multiple starts, gradient-free descent of `w -> d(p, γ_w)` over the unit
/// sphere at `o` should always land in one basin (the ray aimed at `p`).
pub fn radial_distance_basins(
    model: &ManifoldModel,
    o: &Point,
    p: &Point,
    starts: usize,
    seed: u64,
    opts: &FlowOptions,
) -> Result<Vec<VecN>> {
    let horizon = 4.0 * flow::distance(model, o, p, opts)? + 4.0;
    let mut minima = Vec::new();
    for k in 0..starts {
        let mut rng = trial_rng(seed, k as u64);
        let mut w = random_unit_vector(model, o, &mut rng);
        // keep to the half sphere facing p
        let aim = flow::log_map(model, o, p, opts)?;
        if model.inner(o, &w.comps, &aim.comps) < 0.0 {
            w = w.negate();
        }
        let mut cur = flow::distance_to_ray(model, p, &w, (0.0, horizon), opts)?.d_star;
        let mut step = 0.4f64;
        while step > 1e-6 {
            let mut improved = false;
            let frame = model.orthonormal_frame(o, Some(&w.comps))?;
            for dir in frame.iter().skip(1) {
                for sgn in [1.0, -1.0] {
                    let cand_raw = w.comps.scale((step * sgn).cos()).add_scaled(dir, (step * sgn).sin());
                    let cand = UnitVector::trusted(*o, cand_raw);
                    if model.inner(o, &cand.comps, &aim.comps) < 0.0 {
                        continue;
                    }
                    let d = flow::distance_to_ray(model, p, &cand, (0.0, horizon), opts)?.d_star;
                    if d < cur - 1e-12 {
                        w = cand;
                        cur = d;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        minima.push(w.comps);
    }
    Ok(minima)
}
