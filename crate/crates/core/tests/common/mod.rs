//! Independent reference computations for the integration tests.
//!
//! The shooting oracle integrates `u″ = λ + f(t) − g(u)` (the `n = 1` radial
//! equation) with classical fixed-step RK4 and its own copy of the default
//! nonlinearity, then brackets sign changes of `u(1; s)` on a uniform grid
//! in `s` and bisects in plain `s`.

#![allow(dead_code)]

use rayon::prelude::*;

pub const ORACLE_STEPS: usize = 4096;
const ESCAPE: f64 = 1e6;

/// `g(u) = u²` for `u ≥ 0`, `|u|⁵` otherwise.
pub fn g_default(u: f64) -> f64 {
    if u >= 0.0 {
        u * u
    } else {
        -(u * u * u * u * u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Miss {
    Finite(f64),
    Escaped(f64),
}

impl Miss {
    pub fn sign(self) -> f64 {
        match self {
            Miss::Finite(v) => v.signum(),
            Miss::Escaped(s) => s,
        }
    }
}

/// `u(1; s)` for `n = 1` with source amplitude `c` in `f(t) = c·cos(πt)`.
pub fn oracle_miss(s: f64, lambda: f64, c: f64) -> Miss {
    let h = 1.0 / ORACLE_STEPS as f64;
    let acc = |t: f64, u: f64| lambda + c * (std::f64::consts::PI * t).cos() - g_default(u);
    let (mut u, mut v) = (s, 0.0);
    for i in 0..ORACLE_STEPS {
        let t = i as f64 * h;
        let k1 = (v, acc(t, u));
        let k2 = (v + 0.5 * h * k1.1, acc(t + 0.5 * h, u + 0.5 * h * k1.0));
        let k3 = (v + 0.5 * h * k2.1, acc(t + 0.5 * h, u + 0.5 * h * k2.0));
        let k4 = (v + h * k3.1, acc(t + h, u + h * k3.0));
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(u.abs() < ESCAPE) {
            return Miss::Escaped(if u.is_nan() { -1.0 } else { u.signum() });
        }
    }
    Miss::Finite(u)
}

/// Roots of `u(1; s)` found by a uniform scan with spacing `ds` on
/// `[lo, hi]` and bisection down to adjacent floats.
pub fn brute_force_roots(lambda: f64, c: f64, lo: f64, hi: f64, ds: f64) -> Vec<f64> {
    let n = ((hi - lo) / ds).round() as usize;
    let grid: Vec<(f64, Miss)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let s = lo + i as f64 * ds;
            (s, oracle_miss(s, lambda, c))
        })
        .collect();
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let ((mut a, ma), (mut b, mb)) = (w[0], w[1]);
        if ma.sign() == mb.sign() {
            continue;
        }
        let sa = ma.sign();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if oracle_miss(m, lambda, c).sign() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        // a zero exists by continuity when both ends are finite; a jump
        // between an escaped and a finite shot leaves one end escaped
        if let (Miss::Finite(_), Miss::Finite(_)) = (oracle_miss(a, lambda, c), oracle_miss(b, lambda, c)) {
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

/// `∫_a^b (u² − λ) du` with `a = √(λ+m₁)`, `b = √(λ+m₂)`, in closed form
/// rearranged to avoid cancellation:
/// `(b − a)·(m₁ + m₂ + ab − λ)/3` with `b − a = (m₂ − m₁)/(a + b)` and
/// `ab − λ = (λ(m₁ + m₂) + m₁m₂)/(ab + λ)`.
pub fn mean_value_integral(lambda: f64, m1: f64, m2: f64) -> f64 {
    let (a, b) = ((lambda + m1).sqrt(), (lambda + m2).sqrt());
    let width = (m2 - m1) / (a + b);
    let ab_minus = (lambda * (m1 + m2) + m1 * m2) / (a * b + lambda);
    width * (m1 + m2 + ab_minus) / 3.0
}
