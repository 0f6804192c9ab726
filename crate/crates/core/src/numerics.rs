//! Scalar root bracketing, unimodal search and adaptive quadrature.

/// Bisection on a sign-changing bracket.
///
/// Stops when `|h(mid)| <= ftol` or the bracket is narrower than `xtol`.
/// Returns the final point and its value; the bracket invariant
/// `sign(h(lo)) != sign(h(hi))` holds at every iterate.
pub fn bisect<F>(mut h: F, mut lo: f64, mut hi: f64, mut h_lo: f64, xtol: f64, ftol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if h_lo.abs() <= ftol {
        return (lo, h_lo);
    }
    let mut best = (0.5 * (lo + hi), f64::NAN);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid);
        best = (mid, h_mid);
        if h_mid == 0.0 || h_mid.abs() <= ftol || (hi - lo) <= xtol {
            break;
        }
        if h_mid.signum() == h_lo.signum() {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    best
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal function.
pub fn golden_section_max<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_section_min(|t| -h(t), lo, hi, tol);
    (x, -v)
}

/// Golden-section search for the minimum of a unimodal function; the
/// endpoints are included as candidates.
pub fn golden_section_min<F: Fn(f64) -> f64>(h: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let (a0, b0) = (lo, hi);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = h(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = h(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a0, b0] {
        let v = h(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Adaptive Simpson quadrature of `h` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(h: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = h(a);
    let fb = h(b);
    let m = 0.5 * (a + b);
    let fm = h(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&h, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    h: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = h(lm);
    let frm = h(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
