//! Declared supports: stratified base-point sets whose unit tangent bundles
//! the constructions avoid.
//!
//! Strata are chart-affine geodesic curves (the cylinder ridge, coordinate
//! axes in flat space, the vertical axis in half-space). Tangents are taken
//! with both signs; distances in `UX` use the transport surrogate `d^1`.

// float methods come from the trait in no_std builds; std test harnesses shadow it
#[allow(unused_imports)]
use crate::num::FloatExt;
use crate::error::{Error, Result};
use crate::flow::{self, FlowOptions};
use crate::geometry::{ManifoldModel, Point, Tangent, UnitVector};
use crate::linalg::VecN;
use crate::optim;
use alloc::string::String;
use alloc::vec::Vec;

/// A one-dimensional stratum: `p(s) = origin + s * dir` over `range`, with a
/// same-dimension extension used as the thickened set the distortions see.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub origin: VecN,
    pub dir: VecN,
    pub range: (f64, f64),
    pub extended: (f64, f64),
}

impl Stratum {
    pub fn point_at(&self, s: f64) -> Point {
        Point { coords: self.origin.add_scaled(&self.dir, s) }
    }

    /// Unit tangent (positive orientation) at parameter `s`.
    pub fn unit_tangent(&self, model: &ManifoldModel, s: f64) -> UnitVector {
        let p = self.point_at(s);
        let n = model.norm(&p, &self.dir);
        UnitVector::trusted(p, self.dir.scale(1.0 / n))
    }

    fn clamp(&self, s: f64, extended: bool) -> f64 {
        let (lo, hi) = if extended { self.extended } else { self.range };
        s.clamp(lo, hi)
    }

    /// Closed-form base distance from `p` to the stratum where the geometry
    /// admits one (used to prune searches; `None` falls back to shooting).
    pub fn exact_base_distance(&self, model: &ManifoldModel, p: &Point) -> Option<f64> {
        let n = model.dim();
        match model.name() {
            "euclidean" => {
                // point-line distance, clamped to the range
                let rel = p.coords.sub(&self.origin);
                let dd = self.dir.dot(&self.dir);
                let s = (rel.dot(&self.dir) / dd).clamp(self.range.0, self.range.1);
                Some(p.coords.sub(&self.point_at(s).coords).norm())
            }
            "flat_ridge_cylinder" => {
                // the ridge {x = 0}: any path crossing to it has length >= |x|
                if self.origin[0] == 0.0 && self.dir[0] == 0.0 {
                    Some(p.coords[0].abs())
                } else {
                    None
                }
            }
            "hyperbolic_half_space" => {
                // vertical axis {horizontal = const}: sinh(d) = |horizontal offset| / y
                let vertical = (0..n - 1).all(|i| self.dir[i] == 0.0) && self.dir[n - 1] != 0.0;
                if vertical && self.range.0 <= 0.0 {
                    let mut h2 = 0.0;
                    for i in 0..n - 1 {
                        let d = p.coords[i] - self.origin[i];
                        h2 += d * d;
                    }
                    Some((h2.sqrt() / p.coords[n - 1]).asinh())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Closed-form foot parameter on the stratum, when available.
    pub fn foot_hint(&self, model: &ManifoldModel, p: &Point) -> Option<f64> {
        let n = model.dim();
        match model.name() {
            "euclidean" => {
                let rel = p.coords.sub(&self.origin);
                Some(rel.dot(&self.dir) / self.dir.dot(&self.dir))
            }
            "flat_ridge_cylinder" if self.dir[0] == 0.0 => Some((p.coords[1] - self.origin[1]) / self.dir[1]),
            "hyperbolic_half_space" => {
                // foot of the perpendicular from p onto the vertical axis sits
                // at Euclidean height |p - axis base| (circle centred on the
                // boundary)
                let vertical = (0..n - 1).all(|i| self.dir[i] == 0.0) && self.dir[n - 1] != 0.0;
                if vertical {
                    let mut r2 = p.coords[n - 1] * p.coords[n - 1];
                    for i in 0..n - 1 {
                        let d = p.coords[i] - self.origin[i];
                        r2 += d * d;
                    }
                    Some((r2.sqrt() - self.origin[n - 1]) / self.dir[n - 1])
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// A locally finite union of strata with its thickening margin.
#[derive(Debug, Clone)]
pub struct StratifiedSupport {
    pub strata: Vec<Stratum>,
    /// Max stratum dimension (1 for curve strata).
    pub dim: usize,
    /// Margin `rho` separating the core ranges from the extended boundary;
    /// also bounds the distortion scale (`epsilon < rho / 4`).
    pub margin: f64,
}

impl StratifiedSupport {
    pub fn curves(strata: Vec<Stratum>, margin: f64) -> Self {
        StratifiedSupport { strata, dim: 1, margin }
    }

    pub fn empty() -> Self {
        StratifiedSupport { strata: Vec::new(), dim: 0, margin: 1.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// The ridge line of a flat-ridge cylinder over `|y| <= half_span`.
    pub fn ridge(half_span: f64) -> Self {
        let s = Stratum {
            origin: VecN::from_slice(&[0.0, 0.0]),
            dir: VecN::from_slice(&[0.0, 1.0]),
            range: (-half_span, half_span),
            extended: (-half_span - 1.0, half_span + 1.0),
        };
        StratifiedSupport::curves(alloc::vec![s], 0.5)
    }

    /// A chart-affine line in a 3-d model over `s in [-half_span, half_span]`.
    pub fn line3(origin: &[f64], dir: &[f64], half_span: f64) -> Self {
        let s = Stratum {
            origin: VecN::from_slice(origin),
            dir: VecN::from_slice(dir),
            range: (-half_span, half_span),
            extended: (-half_span - 1.0, half_span + 1.0),
        };
        StratifiedSupport::curves(alloc::vec![s], 0.5)
    }
}

/// Nearest stratum base point: `(stratum index, parameter, distance)`.
pub fn nearest_base(
    model: &ManifoldModel,
    support: &StratifiedSupport,
    p: &Point,
    extended: bool,
    opts: &FlowOptions,
) -> Result<(usize, f64, f64)> {
    if support.is_empty() {
        return Err(Error::InvalidInput { detail: String::from("empty support") });
    }
    let mut best = (0usize, 0.0f64, f64::INFINITY);
    for (idx, st) in support.strata.iter().enumerate() {
        let (lo, hi) = if extended { st.extended } else { st.range };
        let mut err = None;
        let center = st.foot_hint(model, p).unwrap_or(0.5 * (lo + hi)).clamp(lo, hi);
        let w = 6.0;
        let (s, d, boundary) = optim::scan_then_golden(
            |s| match flow::fast_distance(model, p, &st.point_at(st.clamp(s, extended)), opts) {
                Ok(d) => d,
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            },
            (center - w).max(lo),
            (center + w).min(hi),
            17,
            1e-9,
        );
        if let Some(e) = err {
            return Err(e);
        }
        let (s, d) = if boundary {
            // fall back to the full range when the local window clipped the min
            let mut err2 = None;
            let (s2, d2, _) = optim::scan_then_golden(
                |s| match flow::fast_distance(model, p, &st.point_at(st.clamp(s, extended)), opts) {
                    Ok(d) => d,
                    Err(e) => {
                        err2 = Some(e);
                        f64::INFINITY
                    }
                },
                lo,
                hi,
                65,
                1e-9,
            );
            if let Some(e) = err2 {
                return Err(e);
            }
            if d2 < d {
                (s2, d2)
            } else {
                (s, d)
            }
        } else {
            (s, d)
        };
        if d < best.2 {
            best = (idx, st.clamp(s, extended), d);
        }
    }
    Ok(best)
}

/// Base distance from `p` to the support (closed form when available).
pub fn base_distance(
    model: &ManifoldModel,
    support: &StratifiedSupport,
    p: &Point,
    extended: bool,
    opts: &FlowOptions,
) -> Result<f64> {
    if support.is_empty() {
        return Ok(f64::INFINITY);
    }
    let mut best = f64::INFINITY;
    let mut need_search = false;
    for st in &support.strata {
        match st.exact_base_distance(model, p) {
            Some(d) => best = best.min(d),
            None => need_search = true,
        }
    }
    if need_search {
        let (_, _, d) = nearest_base(model, support, p, extended, opts)?;
        best = best.min(d);
    }
    Ok(best)
}

/// Distance in `UX` from `v` to the unit tangents of the support, with the
/// witness tangent. Coarse window around the base foot, then golden section;
/// both tangent orientations are tested.
#[derive(Debug, Clone, Copy)]
pub struct UrDistance {
    pub value: f64,
    pub stratum: usize,
    pub s: f64,
    /// +1 or -1: the orientation of the witness tangent.
    pub orientation: f64,
}

pub fn dist_ur(
    model: &ManifoldModel,
    support: &StratifiedSupport,
    v: &UnitVector,
    extended: bool,
    opts: &FlowOptions,
) -> Result<UrDistance> {
    if support.is_empty() {
        return Ok(UrDistance { value: f64::INFINITY, stratum: 0, s: 0.0, orientation: 1.0 });
    }
    let mut best = UrDistance { value: f64::INFINITY, stratum: 0, s: 0.0, orientation: 1.0 };
    for (idx, st) in support.strata.iter().enumerate() {
        let (lo, hi) = if extended { st.extended } else { st.range };
        if lo >= hi {
            continue;
        }
        let center = match st.foot_hint(model, p_of(v)) {
            Some(s) => s.clamp(lo, hi),
            None => {
                // coarse base-distance scan over this stratum
                let mut err = None;
                let (s, _, _) = optim::scan_then_golden(
                    |s| match flow::fast_distance(model, p_of(v), &st.point_at(st.clamp(s, extended)), opts) {
                        Ok(d) => d,
                        Err(e) => {
                            err = Some(e);
                            f64::INFINITY
                        }
                    },
                    lo,
                    hi,
                    65,
                    1e-6,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                s
            }
        };
        let w = 4.0;
        let mut err = None;
        let mut orient_best = 1.0f64;
        let (s_star, d_star, _) = optim::scan_then_golden(
            |s| {
                let sc = st.clamp(s, extended);
                match d1_to_both_tangents(model, v, st, sc, opts) {
                    Ok((d, o)) => {
                        orient_best = o;
                        d
                    }
                    Err(e) => {
                        err = Some(e);
                        f64::INFINITY
                    }
                }
            },
            (center - w).max(lo),
            (center + w).min(hi),
            17,
            1e-9,
        );
        if let Some(e) = err {
            return Err(e);
        }
        // re-evaluate orientation at the winner (golden section may have left
        // `orient_best` at another parameter)
        let (d_fin, o_fin) = d1_to_both_tangents(model, v, st, st.clamp(s_star, extended), opts)?;
        let d_fin = d_fin.min(d_star);
        if d_fin < best.value {
            best = UrDistance { value: d_fin, stratum: idx, s: s_star, orientation: o_fin };
        }
    }
    Ok(best)
}

/// Cheap lower bound for [`dist_ur`]: the base distance to the support.
pub fn dist_ur_lower_bound(
    model: &ManifoldModel,
    support: &StratifiedSupport,
    p: &Point,
    opts: &FlowOptions,
) -> Result<f64> {
    base_distance(model, support, p, false, opts)
}

fn p_of(v: &UnitVector) -> &Point {
    &v.base
}

fn d1_to_both_tangents(
    model: &ManifoldModel,
    v: &UnitVector,
    st: &Stratum,
    s: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let u = st.unit_tangent(model, s);
    let target = u.base;
    let lg = flow::log_map(model, &v.base, &target, opts)?;
    let base_dist = model.norm(&v.base, &lg.comps);
    let moved = if base_dist < 1e-13 {
        Tangent { base: target, comps: v.comps }
    } else {
        let dir = UnitVector::trusted(v.base, lg.comps.scale(1.0 / base_dist));
        let path = flow::geodesic(model, &dir, 0.0, base_dist, opts)?;
        flow::parallel_transport(model, &path, &v.as_tangent(), 0.0, base_dist, opts)?
    };
    let a_plus = model.angle(&target, &moved.comps, &u.comps);
    let a_minus = core::f64::consts::PI - a_plus;
    if a_plus <= a_minus {
        Ok((base_dist + a_plus, 1.0))
    } else {
        Ok((base_dist + a_minus, -1.0))
    }
}

/// Gradient of the base distance to the (extended) support: the unit vector
/// at `p` pointing away from the nearest stratum point.
pub fn distance_gradient(
    model: &ManifoldModel,
    support: &StratifiedSupport,
    p: &Point,
    opts: &FlowOptions,
) -> Result<(UnitVector, f64)> {
    let (idx, s, d) = nearest_base(model, support, p, true, opts)?;
    if d < 1e-9 {
        return Err(Error::BaseOnSupport);
    }
    let q = support.strata[idx].point_at(s);
    let lg = flow::log_map(model, p, &q, opts)?;
    let n = model.norm(p, &lg.comps);
    Ok((UnitVector::trusted(*p, lg.comps.scale(-1.0 / n)), d))
}
