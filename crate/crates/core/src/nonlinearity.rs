//! Admissible nonlinearities `g`, their branch inverses and the amplitude
//! envelope `R(y) = max(|g₋⁻¹(y)|, |g₊⁻¹(y)|)`.
//!
//! The built-in family is the piecewise power law
//!
//! ```text
//! g(u) = u^p     for u >= 0
//! g(u) = |u|^q   for u <  0
//! ```
//!
//! which is continuous, vanishes at zero and is convex and monotone on both
//! branches `[A, ∞)` and `(-∞, -A]`. A `Zero` family (`g ≡ 0`) exists only
//! to validate the integrator against closed-form solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family tag for the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `u^p` on the positive half line, `|u|^q` on the negative one.
    PiecewisePower { p: f64, q: f64 },
    /// `g ≡ 0`, for integrator validation only.
    Zero,
}

/// A nonlinearity `g` together with its branch threshold `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    #[serde(flatten)]
    pub family: Family,
    /// Branch threshold; `g₊ = g|[A,∞)` and `g₋ = g|(-∞,-A]`.
    #[serde(rename = "A")]
    pub threshold: f64,
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Self {
            family: Family::PiecewisePower { p: 2.0, q: 5.0 },
            threshold: 1.0,
        }
    }
}

impl Nonlinearity {
    /// Piecewise power family with threshold `A = 1`.
    pub fn power(p: f64, q: f64) -> Result<Self> {
        Self::power_with_threshold(p, q, 1.0)
    }

    pub fn power_with_threshold(p: f64, q: f64, threshold: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("exponent p must be positive, got {p}")));
        }
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::invalid(format!("exponent q must be positive, got {q}")));
        }
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::invalid(format!(
                "branch threshold A must be positive, got {threshold}"
            )));
        }
        Ok(Self {
            family: Family::PiecewisePower { p, q },
            threshold,
        })
    }

    /// The `g ≡ 0` test nonlinearity.
    pub fn zero() -> Self {
        Self {
            family: Family::Zero,
            threshold: 1.0,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::PiecewisePower { .. } => "piecewise-power",
            Family::Zero => "zero",
        }
    }

    /// `g(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        match self.family {
            Family::PiecewisePower { p, q } => {
                if u >= 0.0 {
                    u.powf(p)
                } else {
                    (-u).powf(q)
                }
            }
            Family::Zero => 0.0,
        }
    }

    /// `g′(u)` of the active branch. At `u = 0` the common one-sided limit
    /// is returned, which is `0` whenever `p, q > 1`.
    pub fn eval_prime(&self, u: f64) -> f64 {
        match self.family {
            Family::PiecewisePower { p, q } => {
                if u > 0.0 {
                    p * u.powf(p - 1.0)
                } else if u < 0.0 {
                    -q * (-u).powf(q - 1.0)
                } else {
                    // one-sided limits are 0 for exponents above 1
                    if p > 1.0 && q > 1.0 {
                        0.0
                    } else if p == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                }
            }
            Family::Zero => 0.0,
        }
    }

    /// `g(base + delta) − g(base)` without cancellation when `delta` is
    /// small against `base`.
    pub fn increment(&self, base: f64, delta: f64) -> f64 {
        match self.family {
            Family::PiecewisePower { p, q } => {
                let moved = base + delta;
                if base < 0.0 && moved < 0.0 {
                    let m = -base;
                    m.powf(q) * (q * (-delta / m).ln_1p()).exp_m1()
                } else if base > 0.0 && moved > 0.0 {
                    base.powf(p) * (p * (delta / base).ln_1p()).exp_m1()
                } else {
                    self.eval(moved) - self.eval(base)
                }
            }
            Family::Zero => 0.0,
        }
    }

    /// Second derivative of `g`, used for the third derivative of profiles.
    pub fn eval_second(&self, u: f64) -> f64 {
        match self.family {
            Family::PiecewisePower { p, q } => {
                if u > 0.0 {
                    p * (p - 1.0) * u.powf(p - 2.0)
                } else if u < 0.0 {
                    q * (q - 1.0) * (-u).powf(q - 2.0)
                } else {
                    0.0
                }
            }
            Family::Zero => 0.0,
        }
    }

    /// Lower end of the domain of `g₊⁻¹`, i.e. `g(A)`.
    pub fn plus_domain(&self) -> f64 {
        self.eval(self.threshold)
    }

    /// Lower end of the domain of `g₋⁻¹`, i.e. `g(-A)`.
    pub fn minus_domain(&self) -> f64 {
        self.eval(-self.threshold)
    }

    /// `g₊⁻¹(y)`: the unique `x >= A` with `g(x) = y`.
    pub fn inverse_plus(&self, y: f64) -> Result<f64> {
        match self.family {
            Family::PiecewisePower { p, .. } => {
                let bound = self.plus_domain();
                if !(y >= bound) {
                    return Err(Error::Domain {
                        what: "inverse_plus (g₊⁻¹)",
                        value: y,
                        bound,
                    });
                }
                Ok(y.powf(1.0 / p).max(self.threshold))
            }
            Family::Zero => Err(Error::NotInvertible {
                what: "inverse_plus (g₊⁻¹)",
                family: "zero",
            }),
        }
    }

    /// `g₋⁻¹(y)`: the unique `x <= -A` with `g(x) = y`.
    pub fn inverse_minus(&self, y: f64) -> Result<f64> {
        match self.family {
            Family::PiecewisePower { q, .. } => {
                let bound = self.minus_domain();
                if !(y >= bound) {
                    return Err(Error::Domain {
                        what: "inverse_minus (g₋⁻¹)",
                        value: y,
                        bound,
                    });
                }
                Ok(-(y.powf(1.0 / q).max(self.threshold)))
            }
            Family::Zero => Err(Error::NotInvertible {
                what: "inverse_minus (g₋⁻¹)",
                family: "zero",
            }),
        }
    }

    /// Amplitude envelope `R(y) = max(|g₋⁻¹(y)|, |g₊⁻¹(y)|)`.
    pub fn envelope(&self, y: f64) -> Result<f64> {
        let bound = self.plus_domain().max(self.minus_domain());
        if !(y >= bound) {
            return Err(Error::Domain {
                what: "envelope R",
                value: y,
                bound,
            });
        }
        let plus = self.inverse_plus(y)?;
        let minus = self.inverse_minus(y)?;
        Ok(plus.abs().max(minus.abs()))
    }

    /// Checks the growth and shape hypotheses on the given probe points.
    pub fn verify_conditions(&self, settings: &ConditionSettings) -> ConditionReport {
        verify_conditions(self, settings)
    }
}

/// Probe configuration for [`verify_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSettings {
    /// Increasing probe abscissae for the limit conditions.
    pub probes: Vec<f64>,
    /// `|g(x)/x|` must exceed this at the last probe.
    pub superlinear_threshold: f64,
    /// The asymmetry expression must exceed this at the last probe.
    pub ratio_threshold: f64,
    /// Sampling density for the monotonicity/convexity checks.
    pub points_per_decade: usize,
}

impl Default for ConditionSettings {
    fn default() -> Self {
        Self {
            probes: log_grid(1e3, 1e9, 64),
            superlinear_threshold: 1e2,
            ratio_threshold: 1.0,
            points_per_decade: 64,
        }
    }
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..=n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / n as f64).exp()
            }
        })
        .collect()
}

/// One probe evaluation kept as evidence in a [`ConditionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub condition: ProbeKind,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    SuperlinearPos,
    SuperlinearNeg,
    Ratio,
}

/// Outcome of [`verify_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub superlinear_pos: bool,
    pub superlinear_neg: bool,
    pub ratio_condition: bool,
    pub shape_ok: bool,
    pub samples: Vec<ProbeSample>,
    pub verdict: bool,
}

fn grows_past(values: &[f64], threshold: f64) -> bool {
    values.iter().all(|v| v.is_finite())
        && values.windows(2).all(|w| w[1] > w[0])
        && values.last().is_some_and(|&v| v > threshold)
}

/// `x ↦ g(x)` and `x ↦ g(-x)` must be positive, strictly increasing and
/// convex on `[A, hi]`.
fn branch_shape_ok(nl: &Nonlinearity, hi: f64, per_decade: usize) -> bool {
    let xs = log_grid(nl.threshold, hi.max(10.0 * nl.threshold), per_decade);
    [1.0, -1.0].iter().all(|&sign| {
        let ys: Vec<f64> = xs.iter().map(|&x| nl.eval(sign * x)).collect();
        if ys.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
            return false;
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return false;
        }
        let slopes: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        slopes
            .windows(2)
            .all(|s| s[1] >= s[0] * (1.0 - 1e-9) - 1e-12)
    })
}

/// Probes superlinearity on both branches, the asymmetry condition
/// `√(R(x)/x)·g₊⁻¹(x)/g₋⁻¹(x) → -∞` (checked in absolute value) and the
/// shape hypotheses. Failures are recorded in the report, never raised.
pub fn verify_conditions(nl: &Nonlinearity, settings: &ConditionSettings) -> ConditionReport {
    let probes = &settings.probes;
    let mut samples = Vec::with_capacity(3 * probes.len());

    let pos: Vec<f64> = probes.iter().map(|&x| (nl.eval(x) / x).abs()).collect();
    let neg: Vec<f64> = probes.iter().map(|&x| (nl.eval(-x) / x).abs()).collect();
    let ratio: Vec<f64> = probes
        .iter()
        .map(|&x| {
            let r = nl.envelope(x);
            let plus = nl.inverse_plus(x);
            let minus = nl.inverse_minus(x);
            match (r, plus, minus) {
                (Ok(r), Ok(plus), Ok(minus)) => ((r / x).sqrt() * plus / minus).abs(),
                _ => f64::NAN,
            }
        })
        .collect();

    for (i, &x) in probes.iter().enumerate() {
        samples.push(ProbeSample { condition: ProbeKind::SuperlinearPos, x, value: pos[i] });
        samples.push(ProbeSample { condition: ProbeKind::SuperlinearNeg, x, value: neg[i] });
        samples.push(ProbeSample { condition: ProbeKind::Ratio, x, value: ratio[i] });
    }

    let superlinear_pos = grows_past(&pos, settings.superlinear_threshold);
    let superlinear_neg = grows_past(&neg, settings.superlinear_threshold);
    let ratio_condition = grows_past(&ratio, settings.ratio_threshold);
    let hi = probes.last().copied().unwrap_or(1e9);
    let shape_ok = match nl.family {
        Family::Zero => false,
        Family::PiecewisePower { .. } => branch_shape_ok(nl, hi, settings.points_per_decade),
    };

    ConditionReport {
        superlinear_pos,
        superlinear_neg,
        ratio_condition,
        shape_ok,
        samples,
        verdict: superlinear_pos && superlinear_neg && ratio_condition && shape_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nl25() -> Nonlinearity {
        Nonlinearity::power(2.0, 5.0).unwrap()
    }

    #[test]
    fn eval_matches_branches() {
        let g = nl25();
        assert_eq!(g.eval(3.0), 9.0);
        assert_eq!(g.eval(-2.0), 32.0);
        assert_eq!(g.eval(0.0), 0.0);
    }

    #[test]
    fn derivative_of_active_branch() {
        let g = nl25();
        assert_eq!(g.eval_prime(3.0), 6.0);
        assert_eq!(g.eval_prime(-2.0), -80.0);
        assert_eq!(g.eval_prime(0.0), 0.0);
    }

    #[test]
    fn branch_inverses() {
        let g = nl25();
        assert_eq!(g.inverse_plus(9.0).unwrap(), 3.0);
        assert_eq!(g.inverse_plus(1.0).unwrap(), 1.0);
        assert!(matches!(g.inverse_plus(0.25), Err(Error::Domain { .. })));
        assert!((g.inverse_minus(32.0).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(g.inverse_minus(1.0).unwrap(), -1.0);
        assert!((g.inverse_minus(243.0).unwrap() + 3.0).abs() < 1e-14);
        assert!(g.inverse_minus(0.5).is_err());
    }

    #[test]
    fn envelope_values() {
        let g = nl25();
        assert_eq!(g.envelope(16.0).unwrap(), 4.0);
        assert_eq!(g.envelope(1.0).unwrap(), 1.0);
        assert_eq!(g.envelope(64.0).unwrap(), 8.0);
        assert!(g.envelope(0.9).is_err());
    }

    #[test]
    fn increment_is_accurate_for_small_steps() {
        let g = nl25();
        let base = -(100f64.powf(0.2));
        let d = 1e-13;
        let exact = 5.0 * base.abs().powi(4) * d; // leading term, relative error ~1e-13
        assert!((g.increment(base, -d) - exact).abs() <= 1e-9 * exact);
        assert_eq!(g.increment(-1.0, 2.0), g.eval(1.0) - g.eval(-1.0));
        assert!((g.increment(3.0, 1.0) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn zero_family_has_no_inverse() {
        let z = Nonlinearity::zero();
        assert_eq!(z.eval(5.0), 0.0);
        assert!(matches!(z.inverse_plus(4.0), Err(Error::NotInvertible { .. })));
        let report = z.verify_conditions(&ConditionSettings::default());
        assert!(!report.verdict);
    }

    #[test]
    fn default_family_satisfies_conditions() {
        let report = nl25().verify_conditions(&ConditionSettings::default());
        assert!(report.superlinear_pos && report.superlinear_neg);
        assert!(report.ratio_condition);
        assert!(report.shape_ok);
        assert!(report.verdict);
    }

    #[test]
    fn symmetric_cubic_fails_ratio_condition() {
        let g = Nonlinearity::power(3.0, 3.0).unwrap();
        let report = g.verify_conditions(&ConditionSettings::default());
        assert!(!report.ratio_condition);
        assert!(!report.verdict);
    }

    #[test]
    fn linear_branch_is_not_superlinear() {
        let g = Nonlinearity::power(1.0, 5.0).unwrap();
        let report = g.verify_conditions(&ConditionSettings::default());
        assert!(!report.superlinear_pos);
        assert!(report.superlinear_neg);
    }

    #[test]
    fn log_grid_has_requested_density() {
        let xs = log_grid(1e3, 1e9, 64);
        assert_eq!(xs.len(), 6 * 64 + 1);
        assert_eq!(xs[0], 1e3);
        assert_eq!(*xs.last().unwrap(), 1e9);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(Nonlinearity::power(0.0, 5.0).is_err());
        assert!(Nonlinearity::power(2.0, f64::NAN).is_err());
        assert!(Nonlinearity::power_with_threshold(2.0, 5.0, -1.0).is_err());
    }
}
