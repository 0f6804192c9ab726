//! Shooting on `s = u(0)`: scan the terminal miss `u(1; s)`, bracket its sign
//! changes and refine them by bisection.
//!
//! Shots are parametrised by their offset from [`shot_origin`]; bisection
//! runs on the offset so that roots squeezed against the negative
//! equilibrium keep full relative precision. Blow-up outcomes take part in
//! bracketing with their sign. Where the scan crosses from blow-up to finite
//! outcomes, the finite side is re-sampled on a logarithmic grid in the
//! distance to the blow-up edge, since roots accumulate there
//! exponentially fast.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivp::{integrate_offset, residual_norm, shot_origin, terminal_offset, IntegratorConfig};
use crate::problem::RadialProblem;
use crate::profile::SolutionProfile;

/// Terminal value of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    Finite { value: f64 },
    /// Escaped through the overflow guard at time `t` with the given sign.
    BlowUp { sign: f64, t: f64 },
    /// Integrator failure; excluded from bracketing.
    Failed,
}

impl Terminal {
    /// Sign used for bracketing, `None` for failures.
    pub fn sign(&self) -> Option<f64> {
        match *self {
            Terminal::Finite { value } => Some(if value == 0.0 { 0.0 } else { value.signum() }),
            Terminal::BlowUp { sign, .. } => Some(sign),
            Terminal::Failed => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Terminal::Finite { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Terminal::BlowUp { .. })
    }

    /// Signed proxy: the value, `±∞` for blow-up, NaN for failure.
    pub fn proxy(&self) -> f64 {
        match *self {
            Terminal::Finite { value } => value,
            Terminal::BlowUp { sign, .. } => sign * f64::INFINITY,
            Terminal::Failed => f64::NAN,
        }
    }
}

/// One scanned shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOutcome {
    pub s: f64,
    /// `s − r(0)`, the parameter actually integrated.
    pub offset: f64,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    /// Accept a refined shot when `|u(1)|` is at most this.
    pub boundary_tol: f64,
    /// Stop bisecting when the bracket is narrower than this, relative to
    /// `max(1, |offset|)` for offsets of order one and to `|offset|` below.
    /// Brackets with finite values at both ends ignore it and bisect to
    /// float resolution.
    pub bracket_tol: f64,
    /// Solutions whose offsets agree to this relative tolerance are merged.
    pub merge_tol: f64,
    /// Logarithmic re-sampling next to blow-up edges.
    pub edge_refinement: bool,
    pub edge_decades: usize,
    pub edge_points_per_decade: usize,
    /// Slack on `u″(0) ≥ 0` for the local-minimum admissibility test.
    pub admissibility_slack: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            boundary_tol: 1e-9,
            bracket_tol: 1e-12,
            merge_tol: 1e-8,
            edge_refinement: true,
            edge_decades: 16,
            edge_points_per_decade: 16,
            admissibility_slack: 1e-9,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        for (name, v) in [
            ("boundary_tol", self.boundary_tol),
            ("bracket_tol", self.bracket_tol),
            ("merge_tol", self.merge_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("shooting {name} must be positive, got {v}")));
            }
        }
        if !(self.admissibility_slack.is_finite() && self.admissibility_slack >= 0.0) {
            return Err(Error::invalid("shooting admissibility_slack must be non-negative"));
        }
        Ok(())
    }
}

fn shoot(offset: f64, origin: f64, problem: &RadialProblem, config: &IntegratorConfig) -> Result<ShootingOutcome> {
    let terminal = match terminal_offset(offset, problem, config) {
        Ok(value) => Terminal::Finite { value },
        Err(Error::BlowUp { t, u }) => Terminal::BlowUp { sign: u.signum(), t },
        Err(e) => return Err(e),
    };
    Ok(ShootingOutcome {
        s: origin + offset,
        offset,
        terminal,
    })
}

fn shoot_lenient(offset: f64, origin: f64, problem: &RadialProblem, config: &IntegratorConfig) -> ShootingOutcome {
    shoot(offset, origin, problem, config).unwrap_or(ShootingOutcome {
        s: origin + offset,
        offset,
        terminal: Terminal::Failed,
    })
}

/// `u(1; s)`, or a signed blow-up marker when the trajectory escapes first.
pub fn boundary_miss(s: f64, problem: &RadialProblem, config: &IntegratorConfig) -> Result<Terminal> {
    let origin = shot_origin(problem);
    shoot(s - origin, origin, problem, config).map(|o| o.terminal)
}

/// Default scan window `[−2·R(4(λ+M)), g₊⁻¹(λ + f(0))]`: below it the a
/// priori bound excludes solutions, above it `u` cannot have a local
/// minimum at the origin.
pub fn default_window(problem: &RadialProblem) -> Result<(f64, f64)> {
    let nl = problem.nonlinearity();
    let lo = -2.0 * nl.envelope(4.0 * (problem.lambda() + problem.m()))?;
    let hi = problem.plus_level(0.0)?;
    Ok((lo, hi))
}

/// `u′(0) = 0` and `u″(0) = −(g(u(0)) − λ − f(0))/n ≥ −slack`, i.e. the
/// origin is a local minimum of `u`.
pub fn filter_admissible(profile: &SolutionProfile) -> bool {
    filter_admissible_with(profile, ShootingConfig::default().admissibility_slack)
}

pub fn filter_admissible_with(profile: &SolutionProfile, slack: f64) -> bool {
    let p = &profile.problem;
    let s = profile.u[0];
    let curvature = -p.forcing(0.0, s) / p.dimension() as f64;
    profile.du[0] == 0.0 && curvature >= -slack
}

/// Midpoint that halves the bracket in absolute terms while it straddles or
/// nearly touches zero, and in relative terms once both ends share a sign.
fn split(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else if hi < 0.0 && lo < 4.0 * hi {
        -(lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

fn narrow_enough(lo: f64, hi: f64, tol: f64) -> bool {
    let scale = lo.abs().max(hi.abs()).min(1.0);
    hi - lo <= tol * scale || (hi - lo) <= f64::MIN_POSITIVE
}

/// A sign-change interval of the terminal miss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub s_lo: f64,
    pub s_hi: f64,
    pub offset_lo: f64,
    pub offset_hi: f64,
    /// `true` for brackets produced by blow-up edge re-sampling.
    pub from_edge: bool,
    /// Whether bisection reached `|u(1)| ≤ boundary_tol`.
    pub resolved: bool,
}

/// A refined shooting solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub s: f64,
    pub offset: f64,
    /// `u(1)` of the refined shot.
    pub terminal: f64,
    pub residual: f64,
    pub bisection_steps: usize,
    #[serde(skip)]
    pub profile: Option<SolutionProfile>,
}

impl Solution {
    pub fn profile(&self) -> &SolutionProfile {
        self.profile.as_ref().expect("solution carries its profile")
    }
}

/// Scan statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub s_lo: f64,
    pub s_hi: f64,
    pub n_scan: usize,
    pub shot_origin: f64,
    pub evaluations: usize,
    pub blow_ups: usize,
    pub failures: usize,
    pub edges_refined: usize,
    pub rejected_inadmissible: usize,
    pub unresolved_brackets: usize,
}

/// All solutions found in a scan window, sorted by `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSet {
    pub lambda: f64,
    pub n: u32,
    #[serde(rename = "M")]
    pub m: f64,
    pub solutions: Vec<Solution>,
    pub brackets: Vec<Bracket>,
    pub scan: ScanMeta,
    pub outcomes: Vec<ShootingOutcome>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.solutions.iter().map(|s| s.s).collect()
    }
}

struct Refined {
    offset: f64,
    value: f64,
    steps: usize,
    lo: f64,
    hi: f64,
}

/// Bisection on the offset. Every iterate keeps `sign(lo) != sign(hi)`.
fn refine(
    lo: &ShootingOutcome,
    hi: &ShootingOutcome,
    origin: f64,
    problem: &RadialProblem,
    config: &ShootingConfig,
) -> Option<Refined> {
    let (mut a, mut b) = (lo.offset, hi.offset);
    let mut sign_a = lo.terminal.sign()?;
    let mut best = None::<(f64, f64)>;
    for (o, t) in [(a, lo.terminal), (b, hi.terminal)] {
        if let Some(v) = t.value() {
            if v.abs() <= config.boundary_tol && best.is_none_or(|(_, bv)| v.abs() < bv.abs()) {
                best = Some((o, v));
            }
        }
    }
    if let Some((offset, value)) = best {
        return Some(Refined { offset, value, steps: 0, lo: a, hi: b });
    }
    let mut steps = 0;
    let mut closest: Option<(f64, f64)> = None;
    // with finite values of opposite sign at both ends a root is certain, so
    // bisection runs to float resolution instead of stopping at the width
    let (mut finite_a, mut finite_b) = (lo.terminal.value().is_some(), hi.terminal.value().is_some());
    while steps < 400 {
        let mid = split(a, b);
        if !(mid > a && mid < b) {
            break;
        }
        let out = shoot_lenient(mid, origin, problem, &config.integrator);
        steps += 1;
        let sign = out.terminal.sign()?;
        if let Some(v) = out.terminal.value() {
            if closest.is_none_or(|(_, cv)| v.abs() < cv.abs()) {
                closest = Some((mid, v));
            }
            if v.abs() <= config.boundary_tol {
                return Some(Refined { offset: mid, value: v, steps, lo: a, hi: b });
            }
        }
        let finite = out.terminal.value().is_some();
        if sign == sign_a {
            a = mid;
            sign_a = sign;
            finite_a = finite;
        } else {
            b = mid;
            finite_b = finite;
        }
        if !(finite_a && finite_b) && narrow_enough(a, b, config.bracket_tol) {
            break;
        }
    }
    closest.map(|(offset, value)| Refined { offset, value, steps, lo: a, hi: b })
}

/// Locates the blow-up edge inside `[blow, fin]` (either order) and returns
/// finite outcomes on a logarithmic grid in the distance from it.
fn edge_samples(
    blow: &ShootingOutcome,
    fin: &ShootingOutcome,
    origin: f64,
    problem: &RadialProblem,
    config: &ShootingConfig,
) -> Vec<ShootingOutcome> {
    let (mut b, mut f) = (blow.offset, fin.offset);
    let mut anchor = *fin;
    for _ in 0..400 {
        let (lo, hi) = if b < f { (b, f) } else { (f, b) };
        let mid = split(lo, hi);
        if !(mid > lo && mid < hi) || narrow_enough(lo, hi, 1e-14) {
            break;
        }
        let out = shoot_lenient(mid, origin, problem, &config.integrator);
        match out.terminal {
            Terminal::BlowUp { .. } => b = mid,
            Terminal::Finite { .. } => {
                f = mid;
                anchor = out;
            }
            Terminal::Failed => break,
        }
    }
    let dir = if fin.offset > blow.offset { 1.0 } else { -1.0 };
    let span = (fin.offset - anchor.offset).abs();
    if span == 0.0 {
        return vec![anchor];
    }
    let total = config.edge_decades * config.edge_points_per_decade;
    let mut offsets: Vec<f64> = (1..=total)
        .map(|j| {
            let d = span * 10f64.powf(-(j as f64) / config.edge_points_per_decade as f64);
            anchor.offset + dir * d
        })
        .filter(|o| (o - anchor.offset).abs() > 0.0)
        .collect();
    offsets.dedup();
    let mut samples: Vec<ShootingOutcome> = offsets
        .par_iter()
        .map(|&o| shoot_lenient(o, origin, problem, &config.integrator))
        .collect();
    samples.push(anchor);
    samples
}

/// Finds all solutions with `u(0) ∈ [s_lo, s_hi]` visible on a uniform scan
/// of `n_scan` intervals plus edge re-sampling; only admissible solutions
/// (local minimum at the origin) are returned.
pub fn solve_all(
    problem: &RadialProblem,
    s_lo: f64,
    s_hi: f64,
    n_scan: usize,
    config: &ShootingConfig,
) -> Result<SolutionSet> {
    if !(s_lo < s_hi) || !s_lo.is_finite() || !s_hi.is_finite() {
        return Err(Error::invalid(format!("scan window [{s_lo}, {s_hi}] is empty")));
    }
    if n_scan < 1 {
        return Err(Error::invalid("n_scan must be positive"));
    }
    config.validate()?;
    let origin = shot_origin(problem);
    let width = s_hi - s_lo;
    let outcomes: Vec<ShootingOutcome> = (0..=n_scan)
        .into_par_iter()
        .map(|i| {
            let s = if i == n_scan { s_hi } else { s_lo + width * i as f64 / n_scan as f64 };
            shoot_lenient(s - origin, origin, problem, &config.integrator)
        })
        .collect();
    let mut meta = ScanMeta {
        s_lo,
        s_hi,
        n_scan,
        shot_origin: origin,
        evaluations: outcomes.len(),
        blow_ups: outcomes.iter().filter(|o| o.terminal.is_blow_up()).count(),
        failures: outcomes.iter().filter(|o| o.terminal == Terminal::Failed).count(),
        ..ScanMeta::default()
    };

    // cells: consecutive outcome pairs to search for sign changes
    let mut pairs: Vec<(ShootingOutcome, ShootingOutcome, bool)> = Vec::new();
    for w in outcomes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let edge = config.edge_refinement
            && (a.terminal.is_blow_up() != b.terminal.is_blow_up())
            && a.terminal != Terminal::Failed
            && b.terminal != Terminal::Failed;
        if edge {
            let (blow, fin) = if a.terminal.is_blow_up() { (a, b) } else { (b, a) };
            let mut sub = edge_samples(&blow, &fin, origin, problem, config);
            meta.evaluations += sub.len();
            meta.edges_refined += 1;
            sub.push(a);
            sub.push(b);
            sub.sort_by(|x, y| x.offset.total_cmp(&y.offset));
            sub.dedup_by(|x, y| x.offset == y.offset);
            for v in sub.windows(2) {
                pairs.push((v[0], v[1], true));
            }
        } else {
            pairs.push((a, b, false));
        }
    }

    let mut exact: Vec<ShootingOutcome> = Vec::new();
    let mut candidates: Vec<(ShootingOutcome, ShootingOutcome, bool)> = Vec::new();
    for (a, b, from_edge) in pairs {
        let (Some(sa), Some(sb)) = (a.terminal.sign(), b.terminal.sign()) else {
            continue;
        };
        if sa == 0.0 {
            exact.push(a);
        }
        if sa != 0.0 && sb != 0.0 && sa != sb {
            candidates.push((a, b, from_edge));
        }
    }
    if let Some(last) = outcomes.last() {
        if last.terminal.sign() == Some(0.0) {
            exact.push(*last);
        }
    }

    let refined: Vec<(Bracket, Option<Refined>)> = candidates
        .par_iter()
        .map(|(a, b, from_edge)| {
            let r = refine(a, b, origin, problem, config);
            let resolved = r.as_ref().is_some_and(|r| r.value.abs() <= config.boundary_tol);
            let bracket = Bracket {
                s_lo: a.s,
                s_hi: b.s,
                offset_lo: a.offset,
                offset_hi: b.offset,
                from_edge: *from_edge,
                resolved,
            };
            (bracket, r)
        })
        .collect();

    let mut roots: Vec<(f64, f64, usize)> = exact.iter().map(|o| (o.offset, 0.0, 0)).collect();
    let mut brackets = Vec::with_capacity(refined.len());
    for (bracket, r) in refined {
        if let Some(r) = r.filter(|r| r.value.abs() <= config.boundary_tol) {
            debug_assert!(r.lo <= r.offset && r.offset <= r.hi);
            roots.push((r.offset, r.value, r.steps));
        } else {
            meta.unresolved_brackets += 1;
        }
        brackets.push(bracket);
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    roots.dedup_by(|x, y| (x.0 - y.0).abs() <= config.merge_tol * x.0.abs().max(y.0.abs()).max(f64::MIN_POSITIVE));

    let mut solutions = Vec::new();
    for (offset, value, steps) in roots {
        let profile = match integrate_offset(offset, problem, &config.integrator) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if !filter_admissible_with(&profile, config.admissibility_slack) {
            meta.rejected_inadmissible += 1;
            continue;
        }
        solutions.push(Solution {
            s: profile.s0,
            offset,
            terminal: value,
            residual: residual_norm(&profile),
            bisection_steps: steps,
            profile: Some(profile),
        });
    }
    solutions.sort_by(|a, b| a.s.total_cmp(&b.s));

    Ok(SolutionSet {
        lambda: problem.lambda(),
        n: problem.dimension(),
        m: problem.m(),
        solutions,
        brackets,
        scan: meta,
        outcomes,
    })
}

/// [`solve_all`] over [`default_window`].
pub fn solve_default(problem: &RadialProblem, n_scan: usize, config: &ShootingConfig) -> Result<SolutionSet> {
    let (lo, hi) = default_window(problem)?;
    solve_all(problem, lo, hi, n_scan, config)
}
