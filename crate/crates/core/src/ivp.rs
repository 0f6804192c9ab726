//! Singular initial value problem for the radial equation
//!
//! ```text
//! u″ = −((n−1)/t) u′ − (g(u) − λ − f(t)),   u(0) = s,  u′(0) = 0
//! ```
//!
//! integrated from a Taylor start at `t_start` to `t = 1` with the
//! Dormand–Prince 5(4) embedded pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::RadialProblem;
use crate::profile::{IntegrationMeta, ProfileOrigin, SolutionProfile};

/// `u″` from the radial equation. At `t = 0` the removable singularity is
/// replaced by its limit `u″(0) = −(g(u) − λ − f(0))/n`.
pub fn rhs(t: f64, u: f64, du: f64, problem: &RadialProblem) -> f64 {
    let forcing = problem.forcing(t, u);
    if t > 0.0 {
        -((problem.dimension() - 1) as f64 / t) * du - forcing
    } else {
        -forcing / problem.dimension() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub atol: f64,
    pub rtol: f64,
    /// Start of the Taylor-regularised integration.
    pub t_start: f64,
    /// `|u|` beyond this is reported as blow-up.
    pub overflow_guard: f64,
    /// Step underflow with `|u|` above this level is also reported as
    /// blow-up rather than as a step failure.
    pub escape_level: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            t_start: 1e-6,
            overflow_guard: 1e12,
            escape_level: 1e6,
            max_step: 1.0 / 512.0,
            min_step: 1e-15,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("atol", self.atol),
            ("rtol", self.rtol),
            ("t_start", self.t_start),
            ("overflow_guard", self.overflow_guard),
            ("escape_level", self.escape_level),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("integrator {name} must be positive, got {v}")));
            }
        }
        if self.t_start >= 0.5 {
            return Err(Error::invalid("integrator t_start must be well below 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("integrator max_steps must be positive"));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

/// Curve the integrator measures deviations from.
///
/// Near the negative equilibrium `g₋⁻¹(λ + f)` trajectories linger for a time
/// that depends on `log(s − g₋⁻¹(λ + f(0)))`, so `u(1; s)` is exponentially
/// sensitive to `s`. Integrating `w = u − r(t)` with `r = g₋⁻¹(λ + f(t))`
/// and shooting on the offset `w(0)` keeps full relative precision there.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Reference {
    /// `r ≡ 0`; the state is `u` itself.
    Origin,
    /// `r(t) = g₋⁻¹(λ + f(t))`.
    NegativeBranch,
}

/// `(r, r′, r″, g(r) − λ − f(t))` at `t`.
type CurvePoint = (f64, f64, f64, f64);

impl Reference {
    pub(crate) fn for_problem(problem: &RadialProblem) -> Self {
        let nl = problem.nonlinearity();
        let floor = problem.lambda() - problem.m();
        match nl.inverse_minus(floor) {
            Ok(_) if floor > nl.minus_domain() => Reference::NegativeBranch,
            _ => Reference::Origin,
        }
    }

    fn curve(self, t: f64, problem: &RadialProblem) -> CurvePoint {
        match self {
            Reference::Origin => (0.0, 0.0, 0.0, problem.forcing(t, 0.0)),
            Reference::NegativeBranch => {
                let nl = problem.nonlinearity();
                let src = problem.source();
                let level = problem.lambda() + src.eval(t);
                let r = nl
                    .inverse_minus(level)
                    .expect("reference level stays inside the g₋⁻¹ domain");
                let df = src.derivative(t);
                if df == 0.0 && src.second_derivative(t) == 0.0 {
                    return (r, 0.0, 0.0, 0.0);
                }
                let slope = nl.eval_prime(r);
                let r1 = df / slope;
                let r2 = (src.second_derivative(t) - nl.eval_second(r) * r1 * r1) / slope;
                (r, r1, r2, 0.0)
            }
        }
    }

    /// `r(0)`; a shot with offset `w(0)` starts at `u(0) = r(0) + w(0)`.
    pub(crate) fn origin_value(self, problem: &RadialProblem) -> f64 {
        self.curve(0.0, problem).0
    }
}

/// `g(u) − λ − f(t)` evaluated as `[g(r + w) − g(r)] + [g(r) − λ − f(t)]`.
#[inline]
fn forcing_at(problem: &RadialProblem, curve: CurvePoint, w: f64) -> f64 {
    problem.nonlinearity().increment(curve.0, w) + curve.3
}

/// Deviation field: state `(w, w′)`, returns `(w′, w″)` and `u″`.
#[inline]
fn field(t: f64, y: State, problem: &RadialProblem, reference: Reference) -> (State, f64) {
    let curve = reference.curve(t, problem);
    let forcing = forcing_at(problem, curve, y[0]);
    let du = y[1] + curve.1;
    let ddu = if t > 0.0 {
        -((problem.dimension() - 1) as f64 / t) * du - forcing
    } else {
        -forcing / problem.dimension() as f64
    };
    ([y[1], ddu - curve.2], ddu)
}

#[inline]
fn axpy(y: State, h: f64, terms: &[(f64, State)]) -> State {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Counters returned by [`drive`].
pub(crate) struct RunStats {
    pub steps: usize,
    pub rejected: usize,
}

/// Core adaptive loop for the shot with `w(0) = offset` relative to
/// `reference`. `on_node(t, u, u′, u″)` is called for `t = 0`, the Taylor
/// start and every accepted step.
pub(crate) fn drive(
    offset: f64,
    reference: Reference,
    problem: &RadialProblem,
    config: &IntegratorConfig,
    mut on_node: impl FnMut(f64, f64, f64, f64),
) -> Result<RunStats> {
    let c0 = reference.curve(0.0, problem);
    let a0 = -forcing_at(problem, c0, offset) / problem.dimension() as f64;
    on_node(0.0, c0.0 + offset, 0.0, a0);

    // two-term Taylor start; w(ts) = w(0) + (u − r)(ts) − (u − r)(0) without
    // forming u(ts) − r(ts) in floating point
    let ts = config.t_start;
    let mut t = ts;
    let cs = reference.curve(ts, problem);
    let r_drop = c0.1 * ts + 0.5 * c0.2 * ts * ts;
    let mut y: State = [offset + 0.5 * a0 * ts * ts - r_drop, a0 * ts - cs.1];
    let (mut k1, mut acc) = field(t, y, problem, reference);
    on_node(t, cs.0 + y[0], y[1] + cs.1, acc);

    let mut h = config.max_step.min(1e-4);
    let mut stats = RunStats { steps: 0, rejected: 0 };
    let mut retry = false;

    while t < 1.0 {
        if stats.steps + stats.rejected >= config.max_steps {
            return Err(Error::StepFailure { t, h });
        }
        // stretch onto t = 1 only after an accepted step, so that rejections
        // keep shrinking h
        let last = if retry { t + h >= 1.0 } else { t + h >= 1.0 - 1e-15 };
        if last {
            h = 1.0 - t;
        }

        let f = |tt: f64, yy: State| field(tt, yy, problem, reference).0;
        let k2 = f(t + C2 * h, axpy(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]));
        let k4 = f(t + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = f(t + C5 * h, axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = f(t + h, axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y_new = axpy(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let t_new = if last { 1.0 } else { t + h };
        let (k7, acc_new) = field(t_new, y_new, problem, reference);

        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = config.atol + config.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / scale);
        }
        if !err.is_finite() || !y_new[0].is_finite() || !y_new[1].is_finite() {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            acc = acc_new;
            stats.steps += 1;
            retry = false;
            let c = reference.curve(t, problem);
            let u = c.0 + y[0];
            on_node(t, u, y[1] + c.1, acc);
            if u.abs() > config.overflow_guard {
                return Err(Error::BlowUp { t, u });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(config.max_step);
        } else {
            stats.rejected += 1;
            retry = true;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= factor;
        }

        if h < config.min_step * t.max(1.0) {
            let u = reference.curve(t, problem).0 + y[0];
            if u.abs() >= config.escape_level {
                return Err(Error::BlowUp { t, u });
            }
            return Err(Error::StepFailure { t, h });
        }
    }
    Ok(stats)
}

fn record(
    offset: f64,
    reference: Reference,
    problem: &RadialProblem,
    config: &IntegratorConfig,
) -> Result<SolutionProfile> {
    let cap = (1.0 / config.max_step) as usize + 16;
    let mut t = Vec::with_capacity(cap);
    let mut u = Vec::with_capacity(cap);
    let mut du = Vec::with_capacity(cap);
    let mut ddu = Vec::with_capacity(cap);
    let stats = drive(offset, reference, problem, config, |a, b, c, d| {
        t.push(a);
        u.push(b);
        du.push(c);
        ddu.push(d);
    })?;
    let meta = IntegrationMeta {
        origin: ProfileOrigin::Integrated,
        steps: stats.steps,
        rejected_steps: stats.rejected,
        rtol: config.rtol,
        atol: config.atol,
        t_start: config.t_start,
    };
    Ok(SolutionProfile::from_parts(t, u, du, ddu, meta, problem.clone()))
}

/// Integrates the radial IVP with `u(0) = s0` and records the full profile.
pub fn integrate(s0: f64, problem: &RadialProblem, config: &IntegratorConfig) -> Result<SolutionProfile> {
    let reference = Reference::for_problem(problem);
    record(s0 - reference.origin_value(problem), reference, problem, config)
}

/// Integrates the shot `u(0) = r(0) + offset`, where `r(0)` is
/// [`shot_origin`]. Offsets keep full relative precision close to `r(0)`.
pub fn integrate_offset(
    offset: f64,
    problem: &RadialProblem,
    config: &IntegratorConfig,
) -> Result<SolutionProfile> {
    record(offset, Reference::for_problem(problem), problem, config)
}

/// Base point `r(0)` of shooting offsets: `g₋⁻¹(λ + f(0))` when
/// `λ − M` lies inside the `g₋⁻¹` domain, `0` otherwise.
pub fn shot_origin(problem: &RadialProblem) -> f64 {
    Reference::for_problem(problem).origin_value(problem)
}

/// `u(1)` for the shot `u(0) = r(0) + offset`, without storing the trajectory.
pub fn terminal_offset(offset: f64, problem: &RadialProblem, config: &IntegratorConfig) -> Result<f64> {
    let mut last = f64::NAN;
    drive(offset, Reference::for_problem(problem), problem, config, |_, u, _, _| last = u)?;
    Ok(last)
}

/// `u(1; s0)` without storing the trajectory.
pub fn terminal_value(s0: f64, problem: &RadialProblem, config: &IntegratorConfig) -> Result<f64> {
    terminal_offset(s0 - shot_origin(problem), problem, config)
}

/// Points of the uniform grid used by [`residual_norm`].
pub const RESIDUAL_GRID: usize = 4096;

/// Scaled residual of the radial equation on a profile:
/// `max |u″_fd + ((n−1)/t)u′ + g(u) − λ − f(t)| / (1 + λ)` over the interior
/// of a uniform 4096-point grid, with `u″_fd` the centred second difference
/// of the dense output.
pub fn residual_norm(profile: &SolutionProfile) -> f64 {
    let problem = &profile.problem;
    let n = RESIDUAL_GRID;
    let h = 1.0 / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| profile.value(i as f64 * h)).collect();
    let damping = (problem.dimension() - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let t = i as f64 * h;
        let fd = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        let du = profile.derivative(t);
        let r = fd + damping / t * du + problem.forcing(t, values[i]);
        worst = worst.max(r.abs());
    }
    worst / (1.0 + problem.lambda())
}
