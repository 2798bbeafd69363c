//! Obstacle screens: protective disk, good annulus and good sphere around
//! each obstacle, and the recursive ray construction that reroutes a ray
//! through good spheres until every obstacle keeps its clearance.
//!
//! Surface models only (the direction sphere at the base point is a circle).

// float methods come from the trait in no_std builds; std test harnesses shadow it
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::geometry::{ManifoldModel, Point, UnitVector};
use crate::optim;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// An obstacle orbit: base points with their marked unit vectors.
#[derive(Debug, Clone)]
pub struct ObstacleSet {
    pub points: Vec<Point>,
    pub vectors: Vec<UnitVector>,
    /// Both orientations of each marked vector belong to the set.
    pub symmetric: bool,
    pub separation: Option<SeparationCertificate>,
}

#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparationCertificate {
    /// Any two obstacles both within `delta_prime` of one ray are more than
    /// `a_plus` apart.
    pub a_plus: f64,
    pub delta_prime: f64,
    pub pairs_checked: usize,
    pub ok: bool,
}

impl ObstacleSet {
    /// Deck orbit of a marked vector, truncated to base points within
    /// `radius` of `o`. Uses the model's first deck generator.
    pub fn orbit(
        model: &ManifoldModel,
        seed_vector: &UnitVector,
        o: &Point,
        radius: f64,
        opts: &FlowOptions,
    ) -> Result<ObstacleSet> {
        let gen = model.deck_generators().first().ok_or_else(|| Error::InvalidInput {
            detail: String::from("model carries no deck generators"),
        })?;
        let inv = gen.inverse();
        let mut points = Vec::new();
        let mut vectors = Vec::new();
        for dir_gen in [gen.clone(), inv] {
            let mut t = seed_vector.as_tangent();
            for _ in 0..64 {
                let d = flow::fast_distance(model, o, &t.base, opts)?;
                if d <= radius {
                    points.push(t.base);
                    vectors.push(UnitVector::trusted(t.base, t.comps));
                }
                t = dir_gen.apply_tangent(&t);
                if !t.base.coords.is_finite() {
                    break;
                }
            }
        }
        // the seed itself appears in both sweeps; deduplicate
        let mut ded_p = Vec::new();
        let mut ded_v = Vec::new();
        for (p, v) in points.iter().zip(vectors.iter()) {
            let dup = ded_p
                .iter()
                .any(|q: &Point| q.coords.sub(&p.coords).norm() < 1e-9 * (1.0 + p.coords.norm()));
            if !dup {
                ded_p.push(*p);
                ded_v.push(*v);
            }
        }
        Ok(ObstacleSet { points: ded_p, vectors: ded_v, symmetric: true, separation: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Derived screen radii for a shield parameter `delta`: protective disk
/// `[0, 2 delta)`, good annulus `(delta, 3 delta)`, good sphere `{2 delta}`.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreenGeometry {
    pub delta: f64,
    pub disk_radius: f64,
    pub annulus: (f64, f64),
    pub sphere_radius: f64,
}

impl ScreenGeometry {
    pub fn new(delta: f64) -> Self {
        ScreenGeometry {
            delta,
            disk_radius: 2.0 * delta,
            annulus: (delta, 3.0 * delta),
            sphere_radius: 2.0 * delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HitClass {
    Miss,
    Disk,
    Annulus,
    Sphere,
}

/// Distance from an obstacle to the forward ray of `v`, with the foot time.
pub fn ray_obstacle_distance(
    model: &ManifoldModel,
    v: &UnitVector,
    omega: &Point,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let c = flow::distance_to_ray(model, omega, v, (0.0, horizon), opts)?;
    Ok((c.d_star, c.t_star))
}

/// Classifies the ray of `v` against the screens of one obstacle. The sphere
/// band (`|d - 2 delta| <= tol`) wins over the overlapping disk/annulus.
pub fn hit_test(
    model: &ManifoldModel,
    v: &UnitVector,
    omega: &Point,
    screens: &ScreenGeometry,
    tol: f64,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<(HitClass, f64, f64)> {
    let (d, t) = ray_obstacle_distance(model, v, omega, horizon, opts)?;
    let class = if (d - screens.sphere_radius).abs() <= tol {
        HitClass::Sphere
    } else if d < screens.disk_radius {
        HitClass::Disk
    } else if d > screens.annulus.0 && d < screens.annulus.1 {
        HitClass::Annulus
    } else {
        HitClass::Miss
    };
    Ok((class, d, t))
}

/// Exhaustive pairwise radial-separation check: for every obstacle pair, if
/// some ray from `o` passes within `delta_prime` of both, their mutual
/// distance must exceed `a_plus`.
pub fn verify_radial_separation(
    model: &ManifoldModel,
    o: &Point,
    set: &ObstacleSet,
    a_plus: f64,
    delta_prime: f64,
    opts: &FlowOptions,
) -> Result<SeparationCertificate> {
    let frame = model.orthonormal_frame(o, None)?;
    let n = set.len();
    let mut pairs = 0usize;
    let mut ok = true;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let horizon = ray_horizon(model, o, &set.points[i], opts)?
                .max(ray_horizon(model, o, &set.points[j], opts)?);
            // can one ray approach both within delta_prime?
            let joint = |theta: f64| -> Result<f64> {
                let dir = frame[0].scale(theta.cos()).add_scaled(&frame[1], theta.sin());
                let v = UnitVector::trusted(*o, dir);
                let (d1, _) = ray_obstacle_distance(model, &v, &set.points[i], horizon, opts)?;
                let (d2, _) = ray_obstacle_distance(model, &v, &set.points[j], horizon, opts)?;
                Ok(d1.max(d2))
            };
            let mut err = None;
            let (_, m, _) = optim::scan_then_golden(
                |th| match joint(th) {
                    Ok(d) => d,
                    Err(e) => {
                        err = Some(e);
                        f64::INFINITY
                    }
                },
                0.0,
                2.0 * core::f64::consts::PI,
                192,
                1e-7,
            );
            if let Some(e) = err {
                return Err(e);
            }
            if m <= delta_prime {
                let dij = flow::fast_distance(model, &set.points[i], &set.points[j], opts)?;
                if dij <= a_plus {
                    ok = false;
                }
            }
        }
    }
    Ok(SeparationCertificate { a_plus, delta_prime, pairs_checked: pairs, ok })
}

fn ray_horizon(model: &ManifoldModel, o: &Point, omega: &Point, opts: &FlowOptions) -> Result<f64> {
    Ok(1.6 * flow::fast_distance(model, o, omega, opts)? + 4.0)
}

/// Parameters of the screens construction.
#[derive(Debug, Clone, Copy)]
pub struct ScreensParams {
    pub delta: f64,
    /// Separation scale; requires `6 delta < delta_prime`.
    pub delta_prime: f64,
    /// Radial separation distance from the certificate.
    pub a: f64,
    /// Cap-size parameter: starting directions keep `2 rho / 5` away from the
    /// aimed directions of near obstacles.
    pub rho: f64,
    pub i_max: usize,
}

/// One rerouting step of the construction.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreensStep {
    pub index: usize,
    pub obstacle: usize,
    pub obstacle_origin_distance: f64,
    pub foot_time: f64,
    pub distance_before: f64,
    pub distance_after: f64,
    pub angle_moved: f64,
    /// `sin(angle(θ_ω, x))` against the Cauchy bound `6 delta / (i a)`.
    pub cauchy_lhs: f64,
    pub cauchy_rhs: f64,
    /// The new ray lies in the good annulus of every earlier obstacle.
    pub rehit_prior_annuli: bool,
}

/// Trace of a screens run.
#[derive(Debug, Clone)]
pub struct ScreensTrace {
    pub steps: Vec<ScreensStep>,
    pub z: UnitVector,
    pub converged: bool,
    /// Total angular displacement `d(x_0, z)`; bounded by `rho / 5`.
    pub total_rotation: f64,
    /// Final ray clearance over all enumerated obstacles.
    pub final_clearance: f64,
}

/// Recursive rerouting of the ray of `x0` through good spheres (surface
/// models). Obstacles must be radially `(a + delta', delta')`-separated with
/// `6 delta < delta'`.
pub fn construct_avoiding_ray(
    model: &ManifoldModel,
    o: &Point,
    x0: &UnitVector,
    set: &ObstacleSet,
    params: &ScreensParams,
    opts: &FlowOptions,
) -> Result<ScreensTrace> {
    if model.dim() != 2 {
        return Err(Error::InvalidInput {
            detail: format!("screens construction needs a surface model, dim {}", model.dim()),
        });
    }
    if 6.0 * params.delta >= params.delta_prime {
        return Err(Error::ConstraintViolated {
            name: "screen_scale",
            detail: format!("6 delta = {} >= delta' = {}", 6.0 * params.delta, params.delta_prime),
        });
    }
    let screens = ScreenGeometry::new(params.delta);
    let frame = model.orthonormal_frame(o, None)?;
    let angle_of = |v: &UnitVector| -> f64 {
        let c1 = model.inner(o, &v.comps, &frame[0]);
        let c2 = model.inner(o, &v.comps, &frame[1]);
        c2.atan2(c1)
    };
    let dir_at = |theta: f64| -> UnitVector {
        UnitVector::trusted(*o, frame[0].scale(theta.cos()).add_scaled(&frame[1], theta.sin()))
    };

    // aimed directions and origin distances per obstacle
    let mut aimed = Vec::with_capacity(set.len());
    let mut origin_dist = Vec::with_capacity(set.len());
    for w in &set.points {
        let lg = flow::log_map(model, o, w, opts)?;
        let ln = model.norm(o, &lg.comps);
        aimed.push((lg.comps.scale(1.0 / ln), ln));
        origin_dist.push(ln);
    }
    // starting direction must stay outside the excluded caps of near obstacles
    for (k, (dir, dist)) in aimed.iter().enumerate() {
        if *dist < params.a {
            let ang = model.angle(o, &x0.comps, dir);
            let gap = ang.min(core::f64::consts::PI - ang);
            if ang < 0.4 * params.rho {
                return Err(Error::InvalidInput {
                    detail: format!(
                        "start direction inside the excluded cap of obstacle {k} (angle {gap:.4})"
                    ),
                });
            }
        }
    }

    let mut theta = angle_of(x0);
    let mut x = *x0;
    let mut progress = 0.0f64; // ray time beyond which obstacles are searched
    let mut processed: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut converged = false;
    for step_index in 0..params.i_max {
        // first obstacle beyond the current foot whose protective disk the ray hits
        let mut next: Option<(usize, f64, f64)> = None; // (obstacle, d, foot)
        for k in 0..set.len() {
            if processed.contains(&k) {
                continue;
            }
            let horizon = ray_horizon(model, o, &set.points[k], opts)?;
            let (d, t) = ray_obstacle_distance(model, &x, &set.points[k], horizon, opts)?;
            if d < screens.disk_radius && t > progress + 1e-9 {
                let better = match next {
                    None => true,
                    // ray order; origin-distance order breaks ties
                    Some((bk, _, bt)) => {
                        t < bt - 1e-12 || ((t - bt).abs() <= 1e-12 && k < bk)
                    }
                };
                if better {
                    next = Some((k, d, t));
                }
            }
        }
        let Some((k, d_before, foot)) = next else {
            converged = true;
            break;
        };

        // rotate away from the aimed direction until the ray meets the good sphere
        let aim_angle = {
            let c1 = model.inner(o, &aimed[k].0, &frame[0]);
            let c2 = model.inner(o, &aimed[k].0, &frame[1]);
            c2.atan2(c1)
        };
        let mut side = wrap_angle(theta - aim_angle);
        if side == 0.0 {
            side = 1e-9;
        }
        let sgn = side.signum();
        let horizon = ray_horizon(model, o, &set.points[k], opts)?;
        let d_of = |phi: f64| -> Result<f64> {
            let v = dir_at(theta + sgn * phi);
            Ok(ray_obstacle_distance(model, &v, &set.points[k], horizon, opts)?.0)
        };
        // bracket the sphere radius
        let mut hi = (2.5 * params.delta / origin_dist[k].max(1e-9)).max(1e-4);
        let mut phi_hi = None;
        for _ in 0..40 {
            if d_of(hi)? >= screens.sphere_radius {
                phi_hi = Some(hi);
                break;
            }
            hi *= 1.6;
        }
        let Some(phi_hi) = phi_hi else {
            return Err(Error::IterationCap { iterations: step_index });
        };
        let mut err = None;
        let phi_star = optim::bisect_root(
            |phi| match d_of(phi) {
                Ok(d) => d - screens.sphere_radius,
                Err(e) => {
                    err = Some(e);
                    1.0
                }
            },
            0.0,
            phi_hi,
            1e-12,
        );
        if let Some(e) = err {
            return Err(e);
        }
        theta += sgn * phi_star;
        x = dir_at(theta);
        let (d_after, foot_after) =
            ray_obstacle_distance(model, &x, &set.points[k], horizon, opts)?;

        // prior-annulus revisits: the new ray keeps every earlier obstacle in
        // its good annulus
        let mut rehit = true;
        for &kk in &processed {
            let h = ray_horizon(model, o, &set.points[kk], opts)?;
            let (dk, _) = ray_obstacle_distance(model, &x, &set.points[kk], h, opts)?;
            if dk <= screens.annulus.0 || dk >= screens.annulus.1 {
                rehit = false;
            }
        }
        processed.push(k);
        let i1 = processed.len(); // 1-based obstacle counter
        let cauchy_lhs = model.angle(o, &aimed[k].0, &x.comps).sin();
        let cauchy_rhs = 6.0 * params.delta / (i1 as f64 * params.a);
        steps.push(ScreensStep {
            index: step_index,
            obstacle: k,
            obstacle_origin_distance: origin_dist[k],
            foot_time: foot,
            distance_before: d_before,
            distance_after: d_after,
            angle_moved: phi_star,
            cauchy_lhs,
            cauchy_rhs,
            rehit_prior_annuli: rehit,
        });
        progress = foot_after;
    }

    // final clearance over the whole enumerated set
    let mut clearance = f64::INFINITY;
    for w in &set.points {
        let h = ray_horizon(model, o, w, opts)?;
        let (d, _) = ray_obstacle_distance(model, &x, w, h, opts)?;
        clearance = clearance.min(d);
    }
    let total_rotation = model.angle(o, &x0.comps, &x.comps);
    Ok(ScreensTrace { steps, z: x, converged, total_rotation, final_clearance: clearance })
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * core::f64::consts::PI);
    if a > core::f64::consts::PI {
        a -= 2.0 * core::f64::consts::PI;
    }
    if a < -core::f64::consts::PI {
        a += 2.0 * core::f64::consts::PI;
    }
    a
}

/// Clearance of the limit ray re-measured by dense sampling (independent of
/// the golden-section route): min over a fine time grid of the pointwise
/// distances to each obstacle.
pub fn dense_clearance_check(
    model: &ManifoldModel,
    z: &UnitVector,
    set: &ObstacleSet,
    t_max: f64,
    samples: usize,
    opts: &FlowOptions,
) -> Result<f64> {
    let path = flow::geodesic(model, z, 0.0, t_max, opts)?;
    let mut best = f64::INFINITY;
    for k in 0..=samples {
        let t = t_max * k as f64 / samples as f64;
        let (xp, _) = path.eval(t);
        for w in &set.points {
            best = best.min(flow::fast_distance(model, &xp, w, opts)?);
        }
    }
    Ok(best)
}

/// Minimal `d^1` from `v` to the marked obstacle vectors (both signs).
pub fn obstacle_vector_clearance(
    model: &ManifoldModel,
    set: &ObstacleSet,
    v: &UnitVector,
    opts: &FlowOptions,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for w in &set.vectors {
        let d = flow::d1(model, v, w, opts)?;
        let dneg = flow::d1(model, v, &w.negate(), opts)?;
        best = best.min(d.min(dneg));
    }
    Ok(best)
}
