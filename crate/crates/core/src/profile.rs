//! Computed radial trajectories `(t, u, u′)` on `[0, 1]` with dense output.
//!
//! Between nodes the profile is the quintic Hermite interpolant of
//! `(u, u′, u″)` at both ends. The interpolant is C² across nodes, so its
//! first and second derivatives are usable by downstream zero finding and
//! finite-difference residuals.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::RadialProblem;

/// Where a profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileOrigin {
    Integrated,
    Synthetic,
    Loaded,
}

/// Integrator statistics carried with a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationMeta {
    pub origin: ProfileOrigin,
    pub steps: usize,
    pub rejected_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    pub t_start: f64,
}

impl IntegrationMeta {
    fn external(origin: ProfileOrigin) -> Self {
        Self {
            origin,
            steps: 0,
            rejected_steps: 0,
            rtol: 0.0,
            atol: 0.0,
            t_start: 0.0,
        }
    }
}

/// A trajectory of the radial equation sampled at increasing nodes
/// `0 = t₀ < … < t_N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `u″` at the nodes; drives the quintic dense output.
    pub ddu: Vec<f64>,
    /// Shooting parameter `u(0)`.
    pub s0: f64,
    pub meta: IntegrationMeta,
    pub problem: RadialProblem,
}

/// Quintic Hermite coefficients in the local variable `s ∈ [0, 1]`.
fn hermite_coefficients(
    h: f64,
    (u0, v0, a0): (f64, f64, f64),
    (u1, v1, a1): (f64, f64, f64),
) -> [f64; 6] {
    let c0 = u0;
    let c1 = h * v0;
    let c2 = 0.5 * h * h * a0;
    let d0 = u1 - (c0 + c1 + c2);
    let d1 = h * v1 - (c1 + 2.0 * c2);
    let d2 = h * h * a1 - 2.0 * c2;
    let c3 = 10.0 * d0 - 4.0 * d1 + 0.5 * d2;
    let c4 = -15.0 * d0 + 7.0 * d1 - d2;
    let c5 = 6.0 * d0 - 3.0 * d1 + 0.5 * d2;
    [c0, c1, c2, c3, c4, c5]
}

impl SolutionProfile {
    pub(crate) fn from_parts(
        t: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        ddu: Vec<f64>,
        meta: IntegrationMeta,
        problem: RadialProblem,
    ) -> Self {
        let s0 = u[0];
        Self {
            t,
            u,
            du,
            ddu,
            s0,
            meta,
            problem,
        }
    }

    /// Synthetic profile from closed-form `u`, `u′`, `u″` sampled on `nodes`
    /// uniform intervals.
    pub fn from_fn(
        problem: &RadialProblem,
        nodes: usize,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
        ddu: impl Fn(f64) -> f64,
    ) -> Self {
        let nodes = nodes.max(2);
        let t: Vec<f64> = (0..=nodes).map(|i| i as f64 / nodes as f64).collect();
        let uu = t.iter().map(|&x| u(x)).collect();
        let vv = t.iter().map(|&x| du(x)).collect();
        let aa = t.iter().map(|&x| ddu(x)).collect();
        Self::from_parts(
            t,
            uu,
            vv,
            aa,
            IntegrationMeta::external(ProfileOrigin::Synthetic),
            problem.clone(),
        )
    }

    /// Profile from nodal samples of `u` and `u′` only; `u″` at the nodes is
    /// recovered by differentiating `u′` with three-point stencils.
    pub fn from_samples(
        problem: &RadialProblem,
        t: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        origin: ProfileOrigin,
    ) -> Result<Self> {
        let n = t.len();
        if n < 3 || u.len() != n || du.len() != n {
            return Err(Error::invalid("profile needs at least 3 nodes with matching columns"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("profile nodes must be strictly increasing"));
        }
        let ddu = nodal_derivative(&t, &du);
        Ok(Self::from_parts(
            t,
            u,
            du,
            ddu,
            IntegrationMeta::external(origin),
            problem.clone(),
        ))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `u(1)`.
    pub fn terminal(&self) -> f64 {
        *self.u.last().expect("profile has nodes")
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.t.len() - 2;
        let idx = self.t.partition_point(|&x| x <= t);
        idx.saturating_sub(1).min(last)
    }

    fn local(&self, t: f64) -> ([f64; 6], f64, f64) {
        let i = self.segment(t);
        let h = self.t[i + 1] - self.t[i];
        let c = hermite_coefficients(
            h,
            (self.u[i], self.du[i], self.ddu[i]),
            (self.u[i + 1], self.du[i + 1], self.ddu[i + 1]),
        );
        (c, (t - self.t[i]) / h, h)
    }

    /// Dense `(u, u′, u″)` at `t`.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let (c, s, h) = self.local(t);
        let u = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let du = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let ddu = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        (u, du / h, ddu / (h * h))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_all(t).1
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.eval_all(t).2
    }

    /// CSV with columns `t,u,du`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,du\n");
        for i in 0..self.t.len() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.t[i], self.u[i], self.du[i]);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_csv().as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Parses the `t,u,du` CSV written by [`SolutionProfile::to_csv`].
    pub fn from_csv(problem: &RadialProblem, reader: impl BufRead) -> Result<Self> {
        let mut t = Vec::new();
        let mut u = Vec::new();
        let mut du = Vec::new();
        let mut header_seen = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
                if cols != ["t", "u", "du"] {
                    return Err(Error::ProfileFormat {
                        line: line_no,
                        message: format!("expected header `t,u,du`, found `{trimmed}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::ProfileFormat {
                    line: line_no,
                    message: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut row = [0.0; 3];
            for (slot, text) in row.iter_mut().zip(&fields) {
                *slot = text.trim().parse().map_err(|e| Error::ProfileFormat {
                    line: line_no,
                    message: format!("`{text}`: {e}"),
                })?;
            }
            t.push(row[0]);
            u.push(row[1]);
            du.push(row[2]);
        }
        Self::from_samples(problem, t, u, du, ProfileOrigin::Loaded)
    }

    pub fn read_csv(problem: &RadialProblem, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv(problem, std::io::BufReader::new(file))
    }
}

/// Three-point derivative on a non-uniform grid (one-sided at the ends).
fn nodal_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let three_point = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, at: f64| {
        y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2);
            three_point(t[j - 1], t[j], t[j + 1], y[j - 1], y[j], y[j + 1], t[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::problem::SourceTerm;

    fn problem() -> RadialProblem {
        RadialProblem::new(1, 2.0, SourceTerm::Zero, Nonlinearity::zero()).unwrap()
    }

    #[test]
    fn quintic_interpolant_is_exact_for_quintics() {
        let u = |t: f64| 1.0 - 2.0 * t + t.powi(3) - 0.5 * t.powi(5);
        let du = |t: f64| -2.0 + 3.0 * t * t - 2.5 * t.powi(4);
        let ddu = |t: f64| 6.0 * t - 10.0 * t.powi(3);
        let p = SolutionProfile::from_fn(&problem(), 7, u, du, ddu);
        for &x in &[0.0, 0.013, 0.31, 0.5, 0.777, 1.0] {
            let (a, b, c) = p.eval_all(x);
            assert!((a - u(x)).abs() < 1e-14);
            assert!((b - du(x)).abs() < 1e-12);
            assert!((c - ddu(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let p = SolutionProfile::from_fn(
            &problem(),
            300,
            |t| (3.0 * t).sin() / 7.0,
            |t| 3.0 * (3.0 * t).cos() / 7.0,
            |t| -9.0 * (3.0 * t).sin() / 7.0,
        );
        let text = p.to_csv();
        let back = SolutionProfile::from_csv(&p.problem, text.as_bytes()).unwrap();
        assert_eq!(back.t, p.t);
        assert_eq!(back.u, p.u);
        assert_eq!(back.du, p.du);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        let bad = "t,u,du\n0,1,0\n0.5,abc,1\n1,2,2\n";
        let err = SolutionProfile::from_csv(&problem(), bad.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ProfileFormat { line: 3, .. }));
        let bad_header = "x,y\n";
        assert!(SolutionProfile::from_csv(&problem(), bad_header.as_bytes()).is_err());
    }

    #[test]
    fn nodal_derivative_exact_for_quadratics() {
        let t = vec![0.0, 0.1, 0.35, 0.6, 1.0];
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        let d = nodal_derivative(&t, &y);
        for (x, dx) in t.iter().zip(&d) {
            assert!((dx - 2.0 * x).abs() < 1e-12);
        }
    }
}
