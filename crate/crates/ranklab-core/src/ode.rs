//! Adaptive Dormand-Prince 5(4) integrator with cubic-Hermite dense output.
//!
//! The geodesic, Jacobi and transport systems are smooth and non-stiff on all
//! builtin models, so an explicit embedded pair with PI-free step control is
//! enough. States are stack-allocated; the largest system integrated jointly
//! is (position, velocity, Jacobi value, Jacobi derivative) = 4n <= 24.

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::num::FloatExt;
use alloc::vec::Vec;

/// Capacity of an ODE state.
pub const STATE_MAX: usize = 24;

/// Stack-allocated ODE state of runtime length.
#[derive(Debug, Clone, Copy)]
pub struct State {
    n: usize,
    a: [f64; STATE_MAX],
}

impl State {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= STATE_MAX);
        State { n, a: [0.0; STATE_MAX] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = State::zeros(s.len());
        v.a[..s.len()].copy_from_slice(s);
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.a[..self.n]
    }

    #[inline]
    fn add_scaled(&self, other: &State, c: f64) -> State {
        let mut v = *self;
        for i in 0..v.n {
            v.a[i] += c * other.a[i];
        }
        v
    }
}

impl core::ops::Index<usize> for State {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.a[i]
    }
}

impl core::ops::IndexMut<usize> for State {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.a[i]
    }
}

/// Step-control options.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_step: 0.25, max_steps: 4_000_000 }
    }
}

/// Accepted integration node: time, state, derivative.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub t: f64,
    pub y: State,
    pub dy: State,
}

/// Dense solution over one time span.
#[derive(Debug, Clone)]
pub struct Solution {
    nodes: Vec<Node>,
    forward: bool,
}

impl Solution {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn t_start(&self) -> f64 {
        self.nodes.first().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.nodes.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Cubic-Hermite interpolation; returns `(y, dy)` at `t` (clamped to the
    /// integrated span).
    pub fn eval(&self, t: f64) -> (State, State) {
        let nodes = &self.nodes;
        debug_assert!(nodes.len() >= 1);
        if nodes.len() == 1 {
            return (nodes[0].y, nodes[0].dy);
        }
        // locate the bracketing interval
        let mut lo = 0usize;
        let mut hi = nodes.len() - 1;
        let fwd = self.forward;
        let tc = if fwd {
            t.clamp(nodes[0].t, nodes[hi].t)
        } else {
            t.clamp(nodes[hi].t, nodes[0].t)
        };
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let before = if fwd { nodes[mid].t <= tc } else { nodes[mid].t >= tc };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = &nodes[lo];
        let b = &nodes[hi];
        let h = b.t - a.t;
        if h.abs() < 1e-300 {
            return (a.y, a.dy);
        }
        let s = (tc - a.t) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let n = a.y.len();
        let mut y = State::zeros(n);
        let mut dy = State::zeros(n);
        for i in 0..n {
            y[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
            dy[i] = d00 * a.y[i] + d10 * a.dy[i] + d01 * b.y[i] + d11 * b.dy[i];
        }
        (y, dy)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<F>(mut f: F, y0: &State, t0: f64, t1: f64, opts: &OdeOptions) -> Result<Solution>
where
    F: FnMut(f64, &State) -> State,
{
    let n = y0.len();
    let forward = t1 >= t0;
    let dir = if forward { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut nodes = Vec::new();
    let mut t = t0;
    let mut y = *y0;
    let mut dy = f(t, &y);
    nodes.push(Node { t, y, dy });
    if span == 0.0 {
        return Ok(Solution { nodes, forward });
    }

    let mut h = opts.max_step.min(span).max(1e-12);
    let mut k = [State::zeros(n); 7];
    for _step in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-12 * (1.0 + t1.abs()) {
            return Ok(Solution { nodes, forward });
        }
        if h > remaining {
            h = remaining;
        }
        let hs = dir * h;
        k[0] = dy;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    ys = ys.add_scaled(kj, hs * a);
                }
            }
            k[s] = f(t + hs * C[s], &ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5 = y5.add_scaled(kj, hs * B5[j]);
            }
            if B4[j] != 0.0 {
                y4 = y4.add_scaled(kj, hs * B4[j]);
            }
        }
        // scaled RMS error; non-finite states force a hard step shrink
        let mut err = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = (err / n as f64).sqrt();
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            t += hs;
            y = y5;
            dy = k[6]; // FSAL: stage 7 is f at the new point
            nodes.push(Node { t, y, dy });
        }
        let fac = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            0.9 * err.powf(-0.2)
        } else {
            0.2
        };
        h = (h * fac.clamp(0.2, 5.0)).min(opts.max_step);
        if h < 1e-13 * (1.0 + t.abs()) {
            return Err(Error::StepUnderflow { t_last: t });
        }
    }
    Err(Error::StepUnderflow { t_last: t })
}
