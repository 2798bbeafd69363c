//! Model manifolds in a single global chart.
//!
//! Four builtin families: Euclidean space, the hyperbolic upper half-space,
//! the flat-ridge cylinder `dx^2 + f(x)^2 dy^2` and the warped product
//! `dx^2 + f(x)^2 (dy^2 + dz^2)`. Each carries closed-form metric,
//! Christoffel and curvature evaluators; Euclidean and hyperbolic models
//! additionally carry closed-form distance/log/flow oracles used to seed the
//! shooting solver and to check the integrators.

use crate::error::{Error, Result};
use crate::linalg::{MatN, VecN, MAX_DIM};
#[allow(unused_imports)]
use crate::num::FloatExt;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// A chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub coords: VecN,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point { coords: VecN::from_slice(coords) }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A tangent vector in chart components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub comps: VecN,
}

impl Tangent {
    pub fn new(base: Point, comps: &[f64]) -> Self {
        Tangent { base, comps: VecN::from_slice(comps) }
    }

    pub fn negate(&self) -> Tangent {
        Tangent { base: self.base, comps: self.comps.scale(-1.0) }
    }
}

/// A unit tangent vector (metric norm 1 within `UNIT_TOL`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector {
    pub base: Point,
    pub comps: VecN,
}

pub const UNIT_TOL: f64 = 1e-9;

impl UnitVector {
    /// Wraps a tangent after verifying unit norm within `UNIT_TOL`.
    pub fn new(model: &ManifoldModel, t: Tangent) -> Result<Self> {
        let n = model.norm(&t.base, &t.comps);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidInput { detail: format!("norm {n} is not 1") });
        }
        Ok(UnitVector { base: t.base, comps: t.comps })
    }

    /// Rescales a nonzero tangent to unit metric norm.
    pub fn normalized(model: &ManifoldModel, t: Tangent) -> Result<Self> {
        let n = model.norm(&t.base, &t.comps);
        if n < 1e-14 {
            return Err(Error::InvalidInput { detail: String::from("zero vector") });
        }
        Ok(UnitVector { base: t.base, comps: t.comps.scale(1.0 / n) })
    }

    /// Internal constructor for vectors produced by conserving flows.
    pub(crate) fn trusted(base: Point, comps: VecN) -> Self {
        UnitVector { base, comps }
    }

    pub fn as_tangent(&self) -> Tangent {
        Tangent { base: self.base, comps: self.comps }
    }

    pub fn negate(&self) -> UnitVector {
        UnitVector { base: self.base, comps: self.comps.scale(-1.0) }
    }
}

/// Even polynomial warp profile; the coefficient `c_k` scales `x^(2k)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WarpFn {
    coeffs: Vec<f64>,
}

impl WarpFn {
    /// General even polynomial: `f(x) = sum_k coeffs[k] x^(2k)`.
    pub fn even(coeffs: &[f64]) -> Self {
        WarpFn { coeffs: coeffs.into() }
    }

    /// Quartic series `f(x) = sum_k coeffs[k] x^(4k)`; every member with
    /// nonnegative coefficients has `f''` vanishing exactly at `x = 0`.
    pub fn quartic_series(coeffs: &[f64]) -> Self {
        let mut c = Vec::new();
        for (k, &v) in coeffs.iter().enumerate() {
            c.push(v);
            if k + 1 < coeffs.len() {
                c.push(0.0);
            }
        }
        WarpFn { coeffs: c }
    }

    /// The default ridge profile `1 + x^4/12`.
    pub fn default_ridge() -> Self {
        WarpFn::quartic_series(&[1.0, 1.0 / 12.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x2 + c;
        }
        acc
    }

    pub fn d1(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if k == 0 {
                continue;
            }
            acc = acc * x2 + (2 * k) as f64 * c;
        }
        acc * x
    }

    pub fn d2(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if k == 0 {
                continue;
            }
            let p = (2 * k) as f64;
            acc = acc * x2 + p * (p - 1.0) * c;
        }
        // each term is p(p-1) c x^(p-2); factor x^(2k-2) handled by Horner in x^2
        acc
    }

    fn validate(&self, band: f64, need_ridge: bool) -> Result<()> {
        let m = 512;
        for i in 0..=m {
            let x = -band + 2.0 * band * i as f64 / m as f64;
            let f = self.eval(x);
            let f2 = self.d2(x);
            if f <= 0.0 {
                return Err(Error::InvalidWarp { detail: format!("f({x}) = {f} <= 0") });
            }
            if f2 < -1e-12 {
                return Err(Error::InvalidWarp { detail: format!("f''({x}) = {f2} < 0") });
            }
            if need_ridge && x.abs() > 1e-3 && f2 <= 0.0 {
                return Err(Error::InvalidWarp {
                    detail: format!("f''({x}) = 0 away from the ridge"),
                });
            }
        }
        if need_ridge {
            if self.d1(0.0).abs() > 1e-14 {
                return Err(Error::InvalidWarp { detail: String::from("f'(0) != 0") });
            }
            if self.d2(0.0).abs() > 1e-14 {
                return Err(Error::InvalidWarp { detail: String::from("f''(0) != 0") });
            }
        }
        Ok(())
    }
}

/// Chart isometries generating the deck group.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DeckGenerator {
    /// `p -> p + offset` (cylinder `y`-shift, Euclidean translations).
    Translation { offset: Vec<f64> },
    /// `p -> factor * p` in half-space coordinates (translation along the
    /// vertical axis geodesic).
    Dilation { factor: f64 },
}

impl DeckGenerator {
    pub fn apply(&self, p: &Point) -> Point {
        match self {
            DeckGenerator::Translation { offset } => {
                let mut c = p.coords;
                for (i, o) in offset.iter().enumerate() {
                    c[i] += o;
                }
                Point { coords: c }
            }
            DeckGenerator::Dilation { factor } => Point { coords: p.coords.scale(*factor) },
        }
    }

    pub fn apply_tangent(&self, t: &Tangent) -> Tangent {
        match self {
            DeckGenerator::Translation { .. } => Tangent { base: self.apply(&t.base), comps: t.comps },
            DeckGenerator::Dilation { factor } => {
                Tangent { base: self.apply(&t.base), comps: t.comps.scale(*factor) }
            }
        }
    }

    pub fn inverse(&self) -> DeckGenerator {
        match self {
            DeckGenerator::Translation { offset } => DeckGenerator::Translation {
                offset: offset.iter().map(|x| -x).collect(),
            },
            DeckGenerator::Dilation { factor } => DeckGenerator::Dilation { factor: 1.0 / factor },
        }
    }

    /// Differential of the chart map (constant for both kinds).
    fn jacobian_scale(&self) -> f64 {
        match self {
            DeckGenerator::Translation { .. } => 1.0,
            DeckGenerator::Dilation { factor } => *factor,
        }
    }
}

/// Worst componentwise defect of the metric pullback under a deck generator
/// over the sampled points: zero (to rounding) iff the generator acts by
/// isometries there.
pub fn deck_isometry_defect(
    model: &ManifoldModel,
    gen: &DeckGenerator,
    points: &[Point],
) -> f64 {
    let s = gen.jacobian_scale();
    let n = model.dim();
    let mut worst: f64 = 0.0;
    for p in points {
        let gp = model.metric_at(p);
        let gq = model.metric_at(&gen.apply(p));
        for i in 0..n {
            for j in 0..n {
                let pullback = s * s * gq.get(i, j);
                let scale = gp.get(i, j).abs().max(1.0);
                worst = worst.max((pullback - gp.get(i, j)).abs() / scale);
            }
        }
    }
    worst
}

/// Christoffel symbols at a point, `gamma(k, i, j)` = `Γ^k_{ij}`.
#[derive(Debug, Clone, Copy)]
pub struct Christoffel {
    n: usize,
    g: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel { n, g: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.g[k][i][j]
    }

    #[inline]
    pub fn set_sym(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.g[k][i][j] = v;
        self.g[k][j][i] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `out^k = -Γ^k_{ij} u^i v^j` (geodesic/transport acceleration).
    pub fn acceleration(&self, u: &VecN, v: &VecN) -> VecN {
        let n = self.n;
        let mut out = VecN::zeros(n);
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let g = self.g[k][i][j];
                    if g != 0.0 {
                        s += g * u[i] * v[j];
                    }
                }
            }
            out[k] = -s;
        }
        out
    }
}

/// Full curvature tensor at a point, `get(l, i, j, k)` = `(R(e_i,e_j)e_k)^l`.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureTensor {
    fn zeros(n: usize) -> Self {
        let mut data = Vec::new();
        data.resize(n * n * n * n, 0.0);
        CurvatureTensor { n, data }
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.n + i) * self.n + j) * self.n + k]
    }

    #[inline]
    fn set(&mut self, l: usize, i: usize, j: usize, k: usize, v: f64) {
        self.data[((l * self.n + i) * self.n + j) * self.n + k] = v;
    }

    /// `R(u, v) w` in chart components.
    pub fn apply(&self, u: &VecN, v: &VecN, w: &VecN) -> VecN {
        let n = self.n;
        let mut out = VecN::zeros(n);
        for l in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if v[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        let r = self.get(l, i, j, k);
                        if r != 0.0 {
                            s += r * u[i] * v[j] * w[k];
                        }
                    }
                }
            }
            out[l] = s;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Euclidean,
    HyperbolicHalfSpace,
    FlatRidgeCylinder { warp: WarpFn, period: f64 },
    Warped3 { warp: WarpFn },
}

/// A model manifold: metric, connection and curvature in one global chart.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    kind: Kind,
    dim: usize,
    curvature_upper_bound: f64,
    deck: Vec<DeckGenerator>,
    band: f64,
}

impl ManifoldModel {
    /// Flat `R^n`.
    pub fn euclidean(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(ManifoldModel {
            kind: Kind::Euclidean,
            dim: n,
            curvature_upper_bound: 0.0,
            deck: Vec::new(),
            band: 5.0,
        })
    }

    /// Upper half-space `{x_n > 0}` with metric `delta_ij / x_n^2` (constant
    /// curvature -1).
    pub fn hyperbolic_half_space(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(ManifoldModel {
            kind: Kind::HyperbolicHalfSpace,
            dim: n,
            curvature_upper_bound: -1.0,
            deck: Vec::new(),
            band: 5.0,
        })
    }

    /// Cylinder cover `dx^2 + f(x)^2 dy^2` with deck shift `y -> y + period`.
    ///
    /// Requires `f > 0`, `f'' >= 0`, `f'(0) = 0` and `f''` vanishing exactly
    /// at `x = 0` on the sampled band.
    pub fn flat_ridge_cylinder(warp: WarpFn, period: f64) -> Result<Self> {
        let band = 4.0;
        warp.validate(band, true)?;
        if !(period > 0.0) {
            return Err(Error::InvalidInput { detail: String::from("period must be positive") });
        }
        Ok(ManifoldModel {
            kind: Kind::FlatRidgeCylinder { warp, period },
            dim: 2,
            curvature_upper_bound: 0.0,
            deck: alloc::vec![DeckGenerator::Translation { offset: alloc::vec![0.0, period] }],
            band,
        })
    }

    /// Warped product `dx^2 + f(x)^2 (dy^2 + dz^2)` on `R^3`.
    pub fn warped_3d(warp: WarpFn) -> Result<Self> {
        let band = 4.0;
        warp.validate(band, false)?;
        Ok(ManifoldModel {
            kind: Kind::Warped3 { warp },
            dim: 3,
            curvature_upper_bound: 0.0,
            deck: Vec::new(),
            band,
        })
    }

    /// Replaces the deck generator list (e.g. to model a hyperbolic cylinder
    /// quotient by a dilation).
    pub fn with_deck_generators(mut self, deck: Vec<DeckGenerator>) -> Self {
        self.deck = deck;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature_upper_bound(&self) -> f64 {
        self.curvature_upper_bound
    }

    pub fn deck_generators(&self) -> &[DeckGenerator] {
        &self.deck
    }

    /// Half-width of the `Gamma`-compact working band in the first coordinate
    /// (cylinder and warped models); plain box half-width otherwise.
    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Euclidean => "euclidean",
            Kind::HyperbolicHalfSpace => "hyperbolic_half_space",
            Kind::FlatRidgeCylinder { .. } => "flat_ridge_cylinder",
            Kind::Warped3 { .. } => "warped_3d",
        }
    }

    pub fn warp(&self) -> Option<&WarpFn> {
        match &self.kind {
            Kind::FlatRidgeCylinder { warp, .. } | Kind::Warped3 { warp } => Some(warp),
            _ => None,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            Kind::FlatRidgeCylinder { period, .. } => Some(*period),
            _ => None,
        }
    }

    /// Is the point inside the chart domain?
    pub fn contains(&self, p: &Point) -> bool {
        if !p.coords.is_finite() {
            return false;
        }
        match self.kind {
            Kind::HyperbolicHalfSpace => p.coords[self.dim - 1] > 0.0,
            _ => true,
        }
    }

    pub fn metric_at(&self, p: &Point) -> MatN {
        let n = self.dim;
        let mut g = MatN::identity(n);
        match &self.kind {
            Kind::Euclidean => {}
            Kind::HyperbolicHalfSpace => {
                let y = p.coords[n - 1];
                let s = 1.0 / (y * y);
                for i in 0..n {
                    g.set(i, i, s);
                }
            }
            Kind::FlatRidgeCylinder { warp, .. } => {
                let f = warp.eval(p.coords[0]);
                g.set(1, 1, f * f);
            }
            Kind::Warped3 { warp } => {
                let f = warp.eval(p.coords[0]);
                g.set(1, 1, f * f);
                g.set(2, 2, f * f);
            }
        }
        g
    }

    pub fn metric_inverse_at(&self, p: &Point) -> Result<MatN> {
        // all builtin metrics are diagonal; invert directly
        let g = self.metric_at(p);
        let n = self.dim;
        let mut inv = MatN::zeros(n);
        for i in 0..n {
            let d = g.get(i, i);
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::SingularMetric { detail: format!("g_{{{i}{i}}} = {d}") });
            }
            inv.set(i, i, 1.0 / d);
        }
        Ok(inv)
    }

    /// Metric inner product of two chart vectors at `p`.
    pub fn inner(&self, p: &Point, u: &VecN, v: &VecN) -> f64 {
        self.metric_at(p).bilinear(u, v)
    }

    pub fn norm(&self, p: &Point, u: &VecN) -> f64 {
        self.inner(p, u, u).max(0.0).sqrt()
    }

    /// Angle between two nonzero vectors at a common base point.
    pub fn angle(&self, p: &Point, u: &VecN, v: &VecN) -> f64 {
        let c = self.inner(p, u, v) / (self.norm(p, u) * self.norm(p, v));
        c.clamp(-1.0, 1.0).acos()
    }

    /// Closed-form Christoffel symbols.
    pub fn christoffel_at(&self, p: &Point) -> Christoffel {
        let n = self.dim;
        let mut c = Christoffel::zeros(n);
        match &self.kind {
            Kind::Euclidean => {}
            Kind::HyperbolicHalfSpace => {
                let y = p.coords[n - 1];
                let inv = 1.0 / y;
                let last = n - 1;
                for i in 0..last {
                    c.set_sym(i, i, last, -inv);
                    c.set_sym(last, i, i, inv);
                }
                c.set_sym(last, last, last, -inv);
            }
            Kind::FlatRidgeCylinder { warp, .. } => {
                let x = p.coords[0];
                let f = warp.eval(x);
                let f1 = warp.d1(x);
                c.set_sym(0, 1, 1, -f * f1);
                c.set_sym(1, 0, 1, f1 / f);
            }
            Kind::Warped3 { warp } => {
                let x = p.coords[0];
                let f = warp.eval(x);
                let f1 = warp.d1(x);
                c.set_sym(0, 1, 1, -f * f1);
                c.set_sym(0, 2, 2, -f * f1);
                c.set_sym(1, 0, 1, f1 / f);
                c.set_sym(2, 0, 2, f1 / f);
            }
        }
        c
    }

    /// Closed-form partial derivatives `d Γ / d x^m`; `(m, k, i, j)` indexes
    /// `∂_m Γ^k_{ij}`. Only used to assemble the curvature tensor.
    fn christoffel_partial_at(&self, p: &Point, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        match &self.kind {
            Kind::Euclidean => 0.0,
            Kind::HyperbolicHalfSpace => {
                let last = n - 1;
                if m != last {
                    return 0.0;
                }
                let y = p.coords[last];
                let s = 1.0 / (y * y);
                if k == last && i == j && i < last {
                    -s
                } else if k < last && ((i == k && j == last) || (j == k && i == last)) {
                    s
                } else if k == last && i == last && j == last {
                    s
                } else {
                    0.0
                }
            }
            Kind::FlatRidgeCylinder { warp, .. } | Kind::Warped3 { warp } => {
                if m != 0 {
                    return 0.0;
                }
                let x = p.coords[0];
                let f = warp.eval(x);
                let f1 = warp.d1(x);
                let f2 = warp.d2(x);
                let radial_pairs = if matches!(self.kind, Kind::Warped3 { .. }) { 2 } else { 1 };
                // Γ^0_{aa} = -f f', Γ^a_{0a} = f'/f for a in 1..=radial_pairs
                for a in 1..=radial_pairs {
                    if k == 0 && i == a && j == a {
                        return -(f1 * f1 + f * f2);
                    }
                    if k == a && ((i == 0 && j == a) || (i == a && j == 0)) {
                        return (f2 * f - f1 * f1) / (f * f);
                    }
                }
                0.0
            }
        }
    }

    /// Curvature tensor assembled from `Γ` and its exact partials:
    /// `R^l_{ijk} = ∂_i Γ^l_{jk} - ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} - Γ^l_{jm}Γ^m_{ik}`.
    pub fn curvature_at(&self, p: &Point) -> CurvatureTensor {
        let n = self.dim;
        let mut r = CurvatureTensor::zeros(n);
        let c = self.christoffel_at(p);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = self.christoffel_partial_at(p, i, l, j, k)
                            - self.christoffel_partial_at(p, j, l, i, k);
                        for m in 0..n {
                            v += c.get(l, i, m) * c.get(m, j, k) - c.get(l, j, m) * c.get(m, i, k);
                        }
                        r.set(l, i, j, k, v);
                    }
                }
            }
        }
        r
    }

    /// `R(u, v) w` at `p`.
    pub fn curvature_apply(&self, p: &Point, u: &VecN, v: &VecN, w: &VecN) -> VecN {
        self.curvature_at(p).apply(u, v, w)
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional_curvature(&self, p: &Point, u: &VecN, v: &VecN) -> Result<f64> {
        let nu = self.inner(p, u, u);
        let nv = self.inner(p, v, v);
        let uv = self.inner(p, u, v);
        let den = nu * nv - uv * uv;
        if den < 1e-12 * nu * nv || den <= 0.0 {
            return Err(Error::CollinearVectors);
        }
        let rv = self.curvature_apply(p, u, v, v);
        let num = self.inner(p, &rv, u);
        Ok(num / den)
    }

    /// Finite-difference Christoffel symbols from metric samples:
    /// `Γ^k_{ij} = 1/2 g^{kl} (∂_i g_jl + ∂_j g_il - ∂_l g_ij)`.
    pub fn christoffel_numeric(&self, p: &Point) -> Result<Christoffel> {
        let n = self.dim;
        let ginv = self.full_metric_inverse(p)?;
        // central differences of the metric in each coordinate direction
        let mut dg = [[[0.0f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; // dg[m][i][j] = ∂_m g_ij
        for m in 0..n {
            let h = 1e-5f64.max(1e-5 * p.coords[m].abs());
            let mut pp = *p;
            pp.coords[m] += h;
            let gp = self.metric_at(&pp);
            let mut pm = *p;
            pm.coords[m] -= h;
            let gm = self.metric_at(&pm);
            for i in 0..n {
                for j in 0..n {
                    dg[m][i][j] = (gp.get(i, j) - gm.get(i, j)) / (2.0 * h);
                }
            }
        }
        let mut c = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let gi = ginv.get(k, l);
                        if gi != 0.0 {
                            s += gi * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                        }
                    }
                    c.set_sym(k, i, j, 0.5 * s);
                }
            }
        }
        Ok(c)
    }

    fn full_metric_inverse(&self, p: &Point) -> Result<MatN> {
        let g = self.metric_at(p);
        if g.min_eigenvalue_sym()? <= 0.0 {
            return Err(Error::SingularMetric { detail: String::from("not positive definite") });
        }
        g.inverse()
    }

    /// Metric-orthonormal frame at `p`; when `first` is given it is normalised
    /// and completed by Gram-Schmidt over the chart axes.
    pub fn orthonormal_frame(&self, p: &Point, first: Option<&VecN>) -> Result<Vec<VecN>> {
        let n = self.dim;
        let mut frame: Vec<VecN> = Vec::with_capacity(n);
        if let Some(f) = first {
            let nf = self.norm(p, f);
            if nf < 1e-14 {
                return Err(Error::InvalidInput { detail: String::from("zero frame seed") });
            }
            frame.push(f.scale(1.0 / nf));
        }
        let mut axis = 0;
        while frame.len() < n {
            if axis >= n {
                return Err(Error::InvalidInput {
                    detail: String::from("chart axes failed to complete a frame"),
                });
            }
            let mut v = VecN::basis(n, axis);
            axis += 1;
            for b in &frame {
                let c = self.inner(p, &v, b);
                v = v.add_scaled(b, -c);
            }
            let nv = self.norm(p, &v);
            if nv > 1e-9 {
                frame.push(v.scale(1.0 / nv));
            }
        }
        Ok(frame)
    }

    /// Closed-form distance when the model carries an oracle.
    pub fn oracle_distance(&self, p: &Point, q: &Point) -> Option<f64> {
        match self.kind {
            Kind::Euclidean => Some(q.coords.sub(&p.coords).norm()),
            Kind::HyperbolicHalfSpace => Some(half_space_distance(self.dim, p, q)),
            _ => None,
        }
    }

    /// Closed-form log map (initial velocity of the unit-time geodesic from
    /// `p` to `q`) when the model carries an oracle.
    pub fn oracle_log(&self, p: &Point, q: &Point) -> Option<Tangent> {
        match self.kind {
            Kind::Euclidean => Some(Tangent { base: *p, comps: q.coords.sub(&p.coords) }),
            Kind::HyperbolicHalfSpace => Some(half_space_log(self.dim, p, q)),
            _ => None,
        }
    }

    /// Closed-form geodesic flow when the model carries an oracle.
    pub fn oracle_flow(&self, v: &UnitVector, t: f64) -> Option<UnitVector> {
        match self.kind {
            Kind::Euclidean => Some(UnitVector::trusted(
                Point { coords: v.base.coords.add_scaled(&v.comps, t) },
                v.comps,
            )),
            Kind::HyperbolicHalfSpace => Some(half_space_flow(self.dim, v, t)),
            _ => None,
        }
    }

    pub fn has_oracle(&self) -> bool {
        matches!(self.kind, Kind::Euclidean | Kind::HyperbolicHalfSpace)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension { dim: n })
    }
}

fn half_space_distance(n: usize, p: &Point, q: &Point) -> f64 {
    let py = p.coords[n - 1];
    let qy = q.coords[n - 1];
    let d2 = q.coords.sub(&p.coords).dot(&q.coords.sub(&p.coords));
    (1.0 + d2 / (2.0 * py * qy)).acosh()
}

fn half_space_log(n: usize, p: &Point, q: &Point) -> Tangent {
    let py = p.coords[n - 1];
    let qy = q.coords[n - 1];
    let mut delta = q.coords.sub(&p.coords);
    delta[n - 1] = 0.0;
    let dh = delta.norm();
    let dist = half_space_distance(n, p, q);
    if dh < 1e-14 * (py + qy) {
        // vertical geodesic
        let mut comps = VecN::zeros(n);
        comps[n - 1] = py * (qy / py).ln();
        return Tangent { base: *p, comps };
    }
    // reduce to the (s, y) plane through the horizontal chord
    let m = (dh * dh + qy * qy - py * py) / (2.0 * dh);
    let r = (m * m + py * py).sqrt();
    // unit chart tangent at (0, py): (py, m) * (py / r) has metric norm 1
    let us = py * py / r;
    let uy = m * py / r;
    let mut comps = delta.scale(us / dh);
    comps[n - 1] = uy;
    Tangent { base: *p, comps: comps.scale(dist) }
}

fn half_space_flow(n: usize, v: &UnitVector, t: f64) -> UnitVector {
    let py = v.base.coords[n - 1];
    let mut vh = v.comps;
    vh[n - 1] = 0.0;
    let vs = vh.norm();
    let vy = v.comps[n - 1];
    if vs < 1e-14 * py.max(1.0) {
        // vertical line: y(t) = py * exp(±t)
        let sig = if vy >= 0.0 { 1.0 } else { -1.0 };
        let y = py * (sig * t).exp();
        let mut base = v.base.coords;
        base[n - 1] = y;
        let mut comps = VecN::zeros(n);
        comps[n - 1] = sig * y;
        return UnitVector::trusted(Point { coords: base }, comps);
    }
    let shat = vh.scale(1.0 / vs);
    // semicircle with centre (m, 0) and Euclidean radius r in the (s, y) plane
    let m = py * vy / vs;
    let r = py * py / vs.abs();
    // u = tan(theta/2) evolves exponentially in arc length
    let cos_p = -m / r;
    let sin_p = py / r;
    let u_p = sin_p / (1.0 + cos_p); // tan(theta_p / 2)
    let sig = -vs.signum();
    let u = u_p * (sig * t).exp();
    let den = 1.0 + u * u;
    let sin_t = 2.0 * u / den;
    let cos_t = (1.0 - u * u) / den;
    let s = m + r * cos_t;
    let y = r * sin_t;
    let mut base = v.base.coords;
    for i in 0..n - 1 {
        base[i] += shat[i] * s;
    }
    base[n - 1] = y;
    // chart velocity sigma*sin(theta) * (-r sin, r cos)
    let dvs = sig * sin_t * (-r * sin_t);
    let dvy = sig * sin_t * (r * cos_t);
    let mut comps = shat.scale(dvs);
    comps[n - 1] = dvy;
    UnitVector::trusted(Point { coords: base }, comps)
}

/// Axis-aligned chart box used to sample points reproducibly.
#[derive(Debug, Clone)]
pub struct SampleBox {
    pub lo: VecN,
    pub hi: VecN,
}

impl SampleBox {
    pub fn sample_point<R: rand::Rng>(&self, rng: &mut R) -> Point {
        let n = self.lo.len();
        let mut c = VecN::zeros(n);
        for i in 0..n {
            let u: f64 = rng.random();
            c[i] = self.lo[i] + u * (self.hi[i] - self.lo[i]);
        }
        Point { coords: c }
    }
}

/// A reasonable `Gamma`-compact sampling domain per model.
pub fn default_domain(model: &ManifoldModel) -> SampleBox {
    let n = model.dim();
    let mut lo = VecN::zeros(n);
    let mut hi = VecN::zeros(n);
    match model.kind {
        Kind::Euclidean => {
            for i in 0..n {
                lo[i] = -model.band;
                hi[i] = model.band;
            }
        }
        Kind::HyperbolicHalfSpace => {
            for i in 0..n - 1 {
                lo[i] = -model.band;
                hi[i] = model.band;
            }
            lo[n - 1] = 0.5;
            hi[n - 1] = 4.0;
        }
        Kind::FlatRidgeCylinder { period, .. } => {
            lo[0] = -0.9 * model.band;
            hi[0] = 0.9 * model.band;
            lo[1] = 0.0;
            hi[1] = period;
        }
        Kind::Warped3 { .. } => {
            lo[0] = -0.9 * model.band;
            hi[0] = 0.9 * model.band;
            for i in 1..n {
                lo[i] = -model.band;
                hi[i] = model.band;
            }
        }
    }
    SampleBox { lo, hi }
}

/// Uniform-ish random unit vector at `p` (Gram-Schmidt of a random chart
/// direction against nothing, i.e. metric-normalised Gaussian-free sampling).
pub fn random_unit_vector<R: rand::Rng>(
    model: &ManifoldModel,
    p: &Point,
    rng: &mut R,
) -> UnitVector {
    let n = model.dim();
    loop {
        let mut c = VecN::zeros(n);
        let mut e2 = 0.0;
        for i in 0..n {
            let u: f64 = rng.random();
            c[i] = 2.0 * u - 1.0;
            e2 += c[i] * c[i];
        }
        if e2 > 1e-4 && e2 <= 1.0 {
            let nm = model.norm(p, &c);
            if nm > 1e-9 {
                return UnitVector::trusted(*p, c.scale(1.0 / nm));
            }
        }
    }
}
