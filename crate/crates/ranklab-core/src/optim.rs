//! One-dimensional searches: golden-section minimisation, grid bracketing,
//! bisection on a sign change, Aitken extrapolation.


const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of `f` on `[a, b]`.
///
/// Returns `(argmin, min)`. Assumes `f` is unimodal on the interval; on a
/// convex function this finds the global minimum.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if fc <= fd && fc <= fm {
        (c, fc)
    } else if fd <= fm {
        (d, fd)
    } else {
        (xm, fm)
    }
}

/// Scan `m` uniform grid points on `[a, b]` and return the bracket
/// `(x_left, x_best, x_right, f_best)` around the sampled minimum.
///
/// When the best sample sits at the boundary the bracket is clamped there and
/// `boundary` is set.
pub struct GridBracket {
    pub left: f64,
    pub best: f64,
    pub right: f64,
    pub f_best: f64,
    pub boundary: bool,
}

pub fn grid_bracket<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, m: usize) -> GridBracket {
    let m = m.max(3);
    let h = (b - a) / (m as f64 - 1.0);
    let mut best = 0usize;
    let mut f_best = f64::INFINITY;
    let mut cache = alloc::vec::Vec::with_capacity(m);
    for i in 0..m {
        let x = a + h * i as f64;
        let y = f(x);
        cache.push(y);
        if y < f_best {
            f_best = y;
            best = i;
        }
    }
    let boundary = best == 0 || best == m - 1;
    let left = if best == 0 { a } else { a + h * (best as f64 - 1.0) };
    let right = if best == m - 1 { b } else { a + h * (best as f64 + 1.0) };
    GridBracket { left, best: a + h * best as f64, right, f_best, boundary }
}

/// Grid scan followed by golden-section refinement.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    m: usize,
    xtol: f64,
) -> (f64, f64, bool) {
    let br = grid_bracket(&mut f, a, b, m);
    let (x, v) = golden_min(&mut f, br.left, br.right, xtol);
    if v <= br.f_best {
        (x, v, br.boundary)
    } else {
        (br.best, br.f_best, br.boundary)
    }
}

/// Bisection for `f(x) = 0` given a sign change on `[a, b]`.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(fa * fb <= 0.0, "bisect_root needs a sign change");
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// One Aitken delta-squared step on three successive sequence values.
///
/// Exact for error decaying geometrically; returns `h3` unchanged when the
/// denominator degenerates.
pub fn aitken(h1: f64, h2: f64, h3: f64) -> f64 {
    let d1 = h2 - h1;
    let d2 = h3 - h2;
    let den = d2 - d1;
    if den.abs() < 1e-15 * (h3.abs() + 1.0) {
        h3
    } else {
        h3 - d2 * d2 / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_min() {
        let (x, v) = golden_min(|x| (x - 1.3) * (x - 1.3) + 0.5, -4.0, 6.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-8);
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aitken_geometric_exact() {
        // b + c q^k with q = 1/2
        let b = 2.0;
        let c = 0.7;
        let s = |k: i32| b + c * 0.5f64.powi(k);
        let e = aitken(s(1), s(2), s(3));
        assert!((e - b).abs() < 1e-14);
    }
}
