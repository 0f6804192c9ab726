//! Nodal classification: zeros of `Φ = u − g₊⁻¹(λ + f)`, their simplicity,
//! the class `Z_k`, and the critical points of `u`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{bisect, golden_section_min};
use crate::profile::SolutionProfile;

/// Default number of uniform grid points for the sign scan.
pub const CLASSIFY_GRID: usize = 4096;

const ZERO_FTOL: f64 = 1e-12;
const TANGENCY_LEVEL: f64 = 1e-7;
const SIMPLE_REL: f64 = 1e-6;
/// Relative rise below which an adjacent max/min pair is rounding noise.
const PROMINENCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub tau: f64,
    /// `Φ′(τ) = u′(τ) − [g₊⁻¹(λ + f)]′(τ)`.
    pub phi_slope: f64,
    pub simple: bool,
    pub u_slope: f64,
    /// `Φ(τ)` after refinement.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub zeros: Vec<ZeroRecord>,
    pub k: usize,
    /// `Z_k`, or `degenerate` when some zero is not simple.
    pub class_label: String,
    pub maxima: Vec<CriticalPoint>,
    pub minima: Vec<CriticalPoint>,
    /// First zero of `u` after the largest zero of `Φ`.
    pub eta: Option<f64>,
    pub grid: usize,
}

impl ClassificationReport {
    pub fn is_degenerate(&self) -> bool {
        self.zeros.iter().any(|z| !z.simple)
    }

    /// Largest zero of `Φ`.
    pub fn largest_zero(&self) -> Option<&ZeroRecord> {
        self.zeros.last()
    }

    /// The `k` largest simple zeros, ascending.
    pub fn largest_simple(&self, k: usize) -> Vec<ZeroRecord> {
        let simple: Vec<ZeroRecord> = self.zeros.iter().filter(|z| z.simple).copied().collect();
        simple[simple.len().saturating_sub(k)..].to_vec()
    }

    /// `tau,phi_slope,u_slope,simple` rows.
    pub fn zeros_csv(&self) -> String {
        let mut out = String::from("tau,phi_slope,u_slope,simple\n");
        for z in &self.zeros {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{}", z.tau, z.phi_slope, z.u_slope, z.simple);
        }
        out
    }

    /// `kind,t,u` rows for maxima and minima.
    pub fn critical_csv(&self) -> String {
        let mut out = String::from("kind,t,u\n");
        for (kind, pts) in [("max", &self.maxima), ("min", &self.minima)] {
            for c in pts.iter() {
                let _ = writeln!(out, "{kind},{:.16e},{:.16e}", c.t, c.u);
            }
        }
        out
    }
}

/// `Φ(t) = u(t) − g₊⁻¹(λ + f(t))` from dense output.
pub fn phi(t: f64, profile: &SolutionProfile) -> Result<f64> {
    Ok(profile.value(t) - profile.problem.plus_level(t)?)
}

fn zero_record(tau: f64, profile: &SolutionProfile) -> Result<ZeroRecord> {
    let (_, du, _) = profile.eval_all(tau);
    let phi_slope = du - profile.problem.plus_level_derivative(tau)?;
    Ok(ZeroRecord {
        tau,
        phi_slope,
        simple: phi_slope.abs() > SIMPLE_REL * (1.0 + du.abs()),
        u_slope: du,
        residual: phi(tau, profile)?,
    })
}

fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn sign_changes(ts: &[f64], vs: &[f64], mut refine: impl FnMut(f64, f64, f64) -> f64) -> Vec<f64> {
    let mut roots = Vec::new();
    for i in 0..ts.len() - 1 {
        let (a, b) = (vs[i], vs[i + 1]);
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            // a zero on a node counts when the sign actually flips across it
            if let Some(&c) = vs.get(i + 2) {
                if c != 0.0 && c.signum() != a.signum() {
                    roots.push(ts[i + 1]);
                }
            }
            continue;
        }
        if a.signum() != b.signum() {
            roots.push(refine(ts[i], ts[i + 1], a));
        }
    }
    roots
}

/// Zeros of `Φ` from a scan on `grid` points: transversal crossings refined
/// by bisection plus tangential touches found as dips of `|Φ|` below 1e−7.
pub fn phi_zeros(profile: &SolutionProfile, grid: usize) -> Result<Vec<ZeroRecord>> {
    let grid = grid.max(3);
    let ts = grid_points(grid);
    let vs = ts.iter().map(|&t| phi(t, profile)).collect::<Result<Vec<f64>>>()?;
    let h = |t: f64| phi(t, profile).unwrap_or(f64::NAN);

    let mut taus = sign_changes(&ts, &vs, |lo, hi, h_lo| bisect(h, lo, hi, h_lo, 1e-15, ZERO_FTOL).0);

    // endpoints: zero to within the refinement tolerance
    for (i, t) in [(0, 0.0), (grid - 1, 1.0)] {
        if vs[i].abs() <= 1e-9 && !taus.iter().any(|&x| (x - t).abs() < 1e-12) {
            taus.push(t);
        }
    }

    // tangential touches: local minima of |Φ| not adjacent to a sign change
    for i in 0..grid {
        let a = vs[i].abs();
        let left = if i > 0 { vs[i - 1] } else { vs[i] };
        let right = if i + 1 < grid { vs[i + 1] } else { vs[i] };
        let same_sign = vs[i] != 0.0 && left.signum() == vs[i].signum() && right.signum() == vs[i].signum();
        if !(same_sign && a <= left.abs() && a <= right.abs()) {
            continue;
        }
        let lo = ts[i.saturating_sub(1)];
        let hi = ts[(i + 1).min(grid - 1)];
        let (t_min, v_min) = golden_section_min(|t| h(t).abs(), lo, hi, 1e-13);
        if v_min < TANGENCY_LEVEL && !taus.iter().any(|&x| (x - t_min).abs() < 1e-9) {
            taus.push(t_min);
        }
    }

    taus.sort_by(f64::total_cmp);
    taus.iter().map(|&t| zero_record(t, profile)).collect()
}

/// Interior sign changes of `u′`, refined by bisection; `t = 0` is reported
/// as a minimum when `u″(0) > 0` and as a maximum when `u″(0) < 0`.
pub fn critical_points(profile: &SolutionProfile) -> (Vec<CriticalPoint>, Vec<CriticalPoint>) {
    critical_points_on(profile, CLASSIFY_GRID)
}

pub fn critical_points_on(profile: &SolutionProfile, grid: usize) -> (Vec<CriticalPoint>, Vec<CriticalPoint>) {
    let grid = grid.max(3);
    let ts = grid_points(grid);
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let ddu0 = profile.ddu[0];
    let at = |t: f64| CriticalPoint { t, u: profile.value(t) };
    if ddu0 > 0.0 {
        minima.push(at(0.0));
    } else if ddu0 < 0.0 {
        maxima.push(at(0.0));
    }

    // interior only: t = 0 is handled above and t = 1 is excluded
    let inner = &ts[1..grid - 1];
    let vs: Vec<f64> = inner.iter().map(|&t| profile.derivative(t)).collect();
    let h = |t: f64| profile.derivative(t);
    let roots = sign_changes(inner, &vs, |lo, hi, h_lo| bisect(h, lo, hi, h_lo, 1e-15, 0.0).0);
    // a solution lingering near a constant state has u′ at rounding level,
    // whose sign flips come as adjacent max/min pairs with no rise between
    let mut kept: Vec<(CriticalPoint, bool)> = Vec::new();
    for t in roots {
        let before = profile.derivative((t - 1e-9).max(0.0));
        let after = profile.derivative((t + 1e-9).min(1.0));
        let point = (at(t), before > 0.0 || after < 0.0);
        match kept.last() {
            Some(&(prev, was_max))
                if was_max != point.1 && (prev.u - point.0.u).abs() <= PROMINENCE * (1.0 + prev.u.abs()) =>
            {
                kept.pop();
            }
            _ => kept.push(point),
        }
    }
    for (point, is_max) in kept {
        if is_max {
            maxima.push(point);
        } else {
            minima.push(point);
        }
    }
    (maxima, minima)
}

fn first_zero_of_u_after(profile: &SolutionProfile, start: f64, grid: usize) -> Option<f64> {
    let ts: Vec<f64> = grid_points(grid).into_iter().filter(|&t| t > start).collect();
    if ts.is_empty() {
        return None;
    }
    let mut pts = vec![start];
    pts.extend(ts);
    let vs: Vec<f64> = pts.iter().map(|&t| profile.value(t)).collect();
    let h = |t: f64| profile.value(t);
    let roots = sign_changes(&pts, &vs, |lo, hi, h_lo| bisect(h, lo, hi, h_lo, 1e-15, 0.0).0);
    if let Some(&t) = roots.first() {
        return Some(t);
    }
    (profile.terminal().abs() <= 1e-8).then_some(1.0)
}

/// Classification on the default 4096-point grid.
pub fn classify(profile: &SolutionProfile) -> Result<ClassificationReport> {
    classify_on(profile, CLASSIFY_GRID)
}

pub fn classify_on(profile: &SolutionProfile, grid: usize) -> Result<ClassificationReport> {
    let zeros = phi_zeros(profile, grid)?;
    let k = zeros.iter().filter(|z| z.simple).count();
    let degenerate = zeros.iter().any(|z| !z.simple);
    let class_label = if degenerate { "degenerate".to_string() } else { format!("Z{k}") };
    let (maxima, minima) = critical_points_on(profile, grid);
    let eta = zeros.last().and_then(|z| first_zero_of_u_after(profile, z.tau, grid));
    Ok(ClassificationReport {
        zeros,
        k,
        class_label,
        maxima,
        minima,
        eta,
        grid,
    })
}

/// Outcome of the sign-structure checks relating critical points of `u` to
/// the level `g₊⁻¹(λ + f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignStructure {
    /// `min Φ(β)` over maxima, `+∞` when there are none.
    pub worst_maximum: f64,
    /// `max Φ(α)` over minima with `u(α) > 0`, `−∞` when there are none.
    pub worst_positive_minimum: f64,
    /// Sign of `Φ` constant between consecutive simple zeros on the grid.
    pub intervals_consistent: bool,
    pub pass: bool,
}

/// Every maximum lies on or above the level and every positive minimum on
/// or below it, within `tol`.
pub fn sign_structure(report: &ClassificationReport, profile: &SolutionProfile, tol: f64) -> Result<SignStructure> {
    let mut worst_maximum = f64::INFINITY;
    for b in &report.maxima {
        worst_maximum = worst_maximum.min(phi(b.t, profile)?);
    }
    let mut worst_positive_minimum = f64::NEG_INFINITY;
    for a in report.minima.iter().filter(|a| a.u > 0.0) {
        worst_positive_minimum = worst_positive_minimum.max(phi(a.t, profile)?);
    }
    let mut cuts = vec![0.0];
    cuts.extend(report.zeros.iter().map(|z| z.tau));
    cuts.push(1.0);
    let mut intervals_consistent = true;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-9 {
            continue;
        }
        let mut sign = 0.0;
        for j in 1..64 {
            let t = a + (b - a) * j as f64 / 64.0;
            let v = phi(t, profile)?;
            if v.abs() <= tol {
                continue;
            }
            if sign == 0.0 {
                sign = v.signum();
            } else if v.signum() != sign {
                intervals_consistent = false;
            }
        }
    }
    let pass = worst_maximum >= -tol && worst_positive_minimum <= tol && intervals_consistent;
    Ok(SignStructure {
        worst_maximum,
        worst_positive_minimum,
        intervals_consistent,
        pass,
    })
}
