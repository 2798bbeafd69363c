//! Flatness and infinitesimal-flatness functionals on horizontal elements,
//! and the finite-horizon rank and flatness estimators.
//!
//! A horizontal element pairs a unit vector `v` with a second vector `w` at
//! the same base point; it induces the Jacobi field with `J(0) = w`,
//! `J'(0) = 0` along the geodesic of `v`. The infinitesimal functional
//! measures `‖J(t)‖^2 - ‖J(0)‖^2`; the geometric one compares the squared
//! distance of the two geodesic endpoints with its flat-space value.

use crate::error::Result;
use crate::flow::{self, FlowOptions, JacobiField};
use crate::geometry::{ManifoldModel, UnitVector};
use crate::linalg::{MatN, VecN};
use alloc::vec::Vec;

/// Initial data of a Jacobi field with vanishing covariant derivative:
/// `J(0) = w` along the geodesic of `v`.
#[derive(Debug, Clone, Copy)]
pub struct HorizontalElement {
    pub v: UnitVector,
    pub w: VecN,
}

/// Output of [`rank_estimate`].
#[derive(Debug, Clone)]
pub struct RankReport {
    pub v: UnitVector,
    pub horizon: f64,
    pub tolerance: f64,
    /// Accumulated quadratic form of the infinitesimal-flatness functional
    /// over an orthonormal basis of horizontal elements.
    pub gram: MatN,
    pub eigenvalues: VecN,
    pub estimated_rank: usize,
    pub estimated_flatness: Option<usize>,
    /// Orthonormal basis of the numerical kernel (the parallel directions),
    /// anchored so that the flow direction is its first element.
    pub kernel_basis: Vec<HorizontalElement>,
}

/// `‖J_ξ(t)‖^2 - ‖J_ξ(0)‖^2` for the Jacobi field induced by `ξ`.
pub fn frak_j(model: &ManifoldModel, xi: &HorizontalElement, t: f64) -> Result<f64> {
    frak_j_opts(model, xi, t, &FlowOptions::default())
}

pub fn frak_j_opts(
    model: &ManifoldModel,
    xi: &HorizontalElement,
    t: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    let path = flow::geodesic(model, &xi.v, t.min(0.0), t.max(0.0).max(1e-9), opts)?;
    let zero = VecN::zeros(model.dim());
    let field = flow::jacobi_integrate_opts(model, &path, &xi.w, &zero, t, opts)?;
    let s = field.eval(t);
    let n_t = model.inner(&s.x, &s.j, &s.j);
    let n_0 = model.inner(&xi.v.base, &xi.w, &xi.w);
    Ok(n_t - n_0)
}

/// `d(γ_v(t), γ_w(t))^2 - t^2 ‖v - w‖^2`: the deviation of the geodesic
/// triangle from its flat comparison triangle.
pub fn frak_f(model: &ManifoldModel, xi: &HorizontalElement, t: f64) -> Result<f64> {
    frak_f_opts(model, xi, t, &FlowOptions::default())
}

pub fn frak_f_opts(
    model: &ManifoldModel,
    xi: &HorizontalElement,
    t: f64,
    opts: &FlowOptions,
) -> Result<f64> {
    let base = xi.v.base;
    let vw = xi.v.comps.sub(&xi.w);
    let flat_term = t * t * model.inner(&base, &vw, &vw);
    let end_v = flow::flow_phi(model, &xi.v, t, opts)?.base;
    let speed = model.norm(&base, &xi.w);
    let end_w = if speed < 1e-14 {
        base
    } else {
        let w_unit = UnitVector::trusted(base, xi.w.scale(1.0 / speed));
        flow::flow_phi(model, &w_unit, t * speed, opts)?.base
    };
    let d = flow::distance(model, &end_v, &end_w, opts)?;
    Ok(d * d - flat_term)
}

/// Basis Jacobi fields over `[-T, T]` for an orthonormal frame anchored at
/// the flow direction.
struct BasisFields {
    frame: Vec<VecN>,
    fwd: Vec<JacobiField>,
    bwd: Vec<JacobiField>,
}

fn basis_fields(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<BasisFields> {
    let frame = model.orthonormal_frame(&v.base, Some(&v.comps))?;
    let path = flow::geodesic(model, v, -horizon, horizon, opts)?;
    let zero = VecN::zeros(model.dim());
    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    for b in &frame {
        fwd.push(flow::jacobi_integrate_opts(model, &path, b, &zero, horizon, opts)?);
        bwd.push(flow::jacobi_integrate_opts(model, &path, b, &zero, -horizon, opts)?);
    }
    Ok(BasisFields { frame, fwd, bwd })
}

/// Finite-horizon rank estimate: the kernel dimension of the accumulated
/// quadratic form `Q[i][j] = ∫_{-T}^{T} (⟨J_i, J_j⟩(t) - ⟨J_i, J_j⟩(0)) dt`
/// over the basis Jacobi fields with vanishing initial derivative.
pub fn rank_estimate(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    tol: f64,
) -> Result<RankReport> {
    rank_estimate_opts(model, v, horizon, tol, &FlowOptions::default())
}

pub fn rank_estimate_opts(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<RankReport> {
    let n = model.dim();
    let fields = basis_fields(model, v, horizon, opts)?;

    // composite Simpson over a uniform grid in each half-interval
    let m = 128usize; // even
    let h = horizon / m as f64;
    let mut gram = MatN::zeros(n);
    for half in 0..2 {
        for k in 0..=m {
            let t = if half == 0 { -horizon + h * k as f64 } else { h * k as f64 };
            let weight = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let list = if half == 0 { &fields.bwd } else { &fields.fwd };
            // all basis fields share the carrier geodesic; evaluate each once
            let evals: Vec<_> = list.iter().map(|f| f.eval(t)).collect();
            let x = evals[0].x;
            let g = model.metric_at(&x);
            for i in 0..n {
                for j in i..n {
                    let inner_t = g.bilinear(&evals[i].j, &evals[j].j);
                    let inner_0 = if i == j { 1.0 } else { 0.0 };
                    let contrib = (weight * h / 3.0) * (inner_t - inner_0);
                    gram.set(i, j, gram.get(i, j) + contrib);
                    gram.set(j, i, gram.get(i, j));
                }
            }
        }
    }

    let (vals, vecs) = gram.sym_eigen()?;
    let lam_max = vals[n - 1].max(0.0);
    let thr = tol * lam_max.max(1.0);
    let mut kernel_cols: Vec<VecN> = Vec::new();
    for k in 0..n {
        if vals[k] < thr {
            kernel_cols.push(vecs.column(k));
        }
    }
    let estimated_rank = kernel_cols.len().max(1).min(n);

    // anchor the kernel basis at the flow direction when it belongs there
    let kernel_basis = anchored_kernel(model, v, &fields.frame, &kernel_cols);

    Ok(RankReport {
        v: *v,
        horizon,
        tolerance: tol,
        gram,
        eigenvalues: vals,
        estimated_rank,
        estimated_flatness: None,
        kernel_basis,
    })
}

/// Rotates the kernel span so that the flow direction (always a parallel
/// direction) is the first basis element; the rest is orthonormalised
/// against it. Eigenvectors of near-zero eigenvalues mix arbitrarily inside
/// the kernel, so per-direction tests need this anchoring.
fn anchored_kernel(
    model: &ManifoldModel,
    v: &UnitVector,
    frame: &[VecN],
    kernel_cols: &[VecN],
) -> Vec<HorizontalElement> {
    let n = model.dim();
    let p = &v.base;
    if kernel_cols.is_empty() {
        return alloc::vec![HorizontalElement { v: *v, w: v.comps }];
    }
    // chart vectors spanned by the kernel coefficients over the frame
    let to_chart = |c: &VecN| {
        let mut w = VecN::zeros(n);
        for (i, b) in frame.iter().enumerate() {
            w = w.add_scaled(b, c[i]);
        }
        w
    };
    let mut span: Vec<VecN> = kernel_cols.iter().map(to_chart).collect();
    // project the flow direction onto the span
    let mut anchor = VecN::zeros(n);
    for s in &span {
        let c = model.inner(p, &v.comps, s) / model.inner(p, s, s);
        anchor = anchor.add_scaled(s, c);
    }
    let mut basis: Vec<VecN> = Vec::new();
    let an = model.norm(p, &anchor);
    if an > 1e-6 {
        basis.push(anchor.scale(1.0 / an));
    }
    for s in &span {
        let mut w = *s;
        for b in &basis {
            let c = model.inner(p, &w, b);
            w = w.add_scaled(b, -c);
        }
        let nw = model.norm(p, &w);
        if nw > 1e-8 {
            basis.push(w.scale(1.0 / nw));
        }
    }
    span.clear();
    basis.into_iter().map(|w| HorizontalElement { v: *v, w }).collect()
}

/// Counts the kernel directions whose geometric flatness functional stays
/// below `tol` over the sampled horizon. Always at most the estimated rank.
pub fn flatness_estimate(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    tol: f64,
) -> Result<usize> {
    flatness_estimate_opts(model, v, horizon, tol, &FlowOptions::default())
}

pub fn flatness_estimate_opts(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<usize> {
    let report = rank_estimate_opts(model, v, horizon, tol, opts)?;
    let mut count = 0usize;
    for xi in &report.kernel_basis {
        if flat_direction(model, xi, horizon, tol, opts)? {
            count += 1;
        }
    }
    Ok(count.min(report.estimated_rank).max(1))
}

fn flat_direction(
    model: &ManifoldModel,
    xi: &HorizontalElement,
    horizon: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<bool> {
    let p = &xi.v.base;
    // collinear pairs span a degenerate (always flat) triangle
    let cross = model.inner(p, &xi.v.comps, &xi.w).abs();
    let nw = model.norm(p, &xi.w);
    if nw < 1e-12 || (cross - nw).abs() < 1e-9 {
        return Ok(true);
    }
    // sample the geodesic pair once over the horizon
    let w_unit = UnitVector::trusted(*p, xi.w.scale(1.0 / nw));
    let path_v = flow::geodesic(model, &xi.v, -horizon, horizon, opts)?;
    let span_w = horizon * nw;
    let path_w = flow::geodesic(model, &w_unit, -span_w, span_w, opts)?;
    let vw = xi.v.comps.sub(&xi.w);
    let flat_rate = model.inner(p, &vw, &vw);
    let samples = 16usize;
    let mut worst: f64 = 0.0;
    for k in 1..=samples {
        let t = -horizon + 2.0 * horizon * k as f64 / samples as f64;
        if t.abs() < 1e-9 {
            continue;
        }
        let (xv, _) = path_v.eval(t);
        let (xw, _) = path_w.eval(t * nw);
        let d = flow::distance(model, &xv, &xw, opts)?;
        worst = worst.max(d * d - t * t * flat_rate);
        if worst >= tol {
            return Ok(false);
        }
    }
    Ok(worst < tol)
}

/// Convenience: rank report with the flatness count filled in.
pub fn rank_and_flatness(
    model: &ManifoldModel,
    v: &UnitVector,
    horizon: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<RankReport> {
    let mut report = rank_estimate_opts(model, v, horizon, tol, opts)?;
    let mut count = 0usize;
    for xi in &report.kernel_basis {
        if flat_direction(model, xi, horizon, tol, opts)? {
            count += 1;
        }
    }
    report.estimated_flatness = Some(count.min(report.estimated_rank).max(1));
    Ok(report)
}
