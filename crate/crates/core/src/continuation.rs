//! Parameter sweeps in `λ`: per-point shooting with warm-started windows,
//! branch linking by nearest `s`, and detection of class changes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classification::classify;
use crate::error::{Error, Result};
use crate::problem::RadialProblem;
use crate::shooting::{solve_all, solve_default, ShootingConfig, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub shooting: ShootingConfig,
    /// Intervals of the global scan at every sweep point.
    pub n_scan: usize,
    /// Intervals of each warm-start window.
    pub warm_scan: usize,
    /// Warm-start half width as a fraction of `1 + |s|`.
    pub warm_width: f64,
    /// Branch jump guard `jump_rel·|s| + jump_abs`.
    pub jump_rel: f64,
    pub jump_abs: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            shooting: ShootingConfig::default(),
            n_scan: 2000,
            warm_scan: 200,
            warm_width: 0.05,
            jump_rel: 0.5,
            jump_abs: 1.0,
        }
    }
}

impl SweepConfig {
    fn guard(&self, s: f64) -> f64 {
        self.jump_rel * s.abs() + self.jump_abs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub s: f64,
    pub class_label: String,
    pub k: usize,
    /// Largest value of `u` at a local maximum, if any.
    pub u_max: Option<f64>,
    /// Smallest value of `u` at a local minimum, if any.
    pub u_min: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    Alive,
    /// No solution within the jump guard at the next point.
    Terminated,
    /// Lost its nearest solution to another branch.
    Merged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
    pub status: BranchStatus,
    /// Sweep point preceding the first point, when the branch was not
    /// present at the start.
    pub born_after: Option<f64>,
    /// `λ` at which the branch was lost.
    pub lost_at: Option<f64>,
}

impl Branch {
    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branches are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub lambdas: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Solutions found at each sweep point.
    pub counts: Vec<usize>,
}

impl Sweep {
    /// `branch,lambda,s,k,class,u0,u_max,u_min` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("branch,lambda,s,k,class,u0,u_max,u_min\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for b in &self.branches {
            for p in &b.points {
                let _ = writeln!(
                    out,
                    "{},{:.16e},{:.16e},{},{},{:.16e},{},{}",
                    b.id,
                    p.lambda,
                    p.s,
                    p.k,
                    p.class_label,
                    p.s,
                    opt(p.u_max),
                    opt(p.u_min)
                );
            }
        }
        out
    }
}

/// Geometric grid of `steps` points from `lo` to `hi`; a single point when
/// the range is empty.
pub fn geometric_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..steps)
        .map(|i| match i {
            0 => lo,
            i if i + 1 == steps => hi,
            i => lo * ratio.powf(i as f64 / (steps - 1) as f64),
        })
        .collect()
}

fn merge_solutions(mut all: Vec<Solution>, tol: f64) -> Vec<Solution> {
    all.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    all.dedup_by(|x, y| (x.offset - y.offset).abs() <= tol * x.offset.abs().max(y.offset.abs()).max(f64::MIN_POSITIVE));
    all
}

/// All solutions at one `λ`: the global scan plus windows around `seeds`.
pub fn solve_point(problem: &RadialProblem, seeds: &[f64], config: &SweepConfig) -> Result<Vec<Solution>> {
    let mut all = solve_default(problem, config.n_scan, &config.shooting)?.solutions;
    for &s in seeds {
        let w = config.warm_width * (1.0 + s.abs());
        let set = solve_all(problem, s - w, s + w, config.warm_scan, &config.shooting)?;
        all.extend(set.solutions);
    }
    Ok(merge_solutions(all, config.shooting.merge_tol))
}

fn point_for(solution: &Solution, lambda: f64) -> Result<BranchPoint> {
    let report = classify(solution.profile())?;
    Ok(BranchPoint {
        lambda,
        s: solution.s,
        class_label: report.class_label.clone(),
        k: report.k,
        u_max: report.maxima.iter().map(|c| c.u).reduce(f64::max),
        u_min: report.minima.iter().map(|c| c.u).reduce(f64::min),
        residual: solution.residual,
    })
}

/// Sweeps `λ` over a geometric grid and links solutions into branches.
pub fn sweep_lambda(
    template: &RadialProblem,
    lambda_lo: f64,
    lambda_hi: f64,
    steps: usize,
    config: &SweepConfig,
) -> Result<Sweep> {
    if !(lambda_lo > 0.0 && lambda_hi >= lambda_lo) {
        return Err(Error::invalid(format!("invalid lambda range [{lambda_lo}, {lambda_hi}]")));
    }
    if steps < 2 && lambda_lo != lambda_hi {
        return Err(Error::invalid("a sweep needs at least 2 steps"));
    }
    let lambdas = geometric_grid(lambda_lo, lambda_hi, steps);
    let mut branches: Vec<Branch> = Vec::new();
    let mut counts = Vec::with_capacity(lambdas.len());

    for (i, &lambda) in lambdas.iter().enumerate() {
        let problem = template.with_lambda(lambda)?;
        let seeds: Vec<f64> = branches
            .iter()
            .filter(|b| b.status == BranchStatus::Alive)
            .map(|b| b.last().s)
            .collect();
        let solutions = solve_point(&problem, &seeds, config)?;
        counts.push(solutions.len());
        let points = solutions
            .iter()
            .map(|s| point_for(s, lambda))
            .collect::<Result<Vec<_>>>()?;

        // greedy nearest-s assignment under the jump guard
        let alive: Vec<usize> = (0..branches.len())
            .filter(|&b| branches[b].status == BranchStatus::Alive)
            .collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &b in &alive {
            let s_prev = branches[b].last().s;
            for (j, p) in points.iter().enumerate() {
                let d = (p.s - s_prev).abs();
                if d < config.guard(s_prev) {
                    pairs.push((d, b, j));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut branch_taken = vec![false; branches.len()];
        let mut point_taken = vec![false; points.len()];
        for &(_, b, j) in &pairs {
            if !branch_taken[b] && !point_taken[j] {
                branch_taken[b] = true;
                point_taken[j] = true;
                branches[b].points.push(points[j].clone());
            }
        }
        for &b in &alive {
            if !branch_taken[b] {
                let had_candidate = pairs.iter().any(|&(_, bb, _)| bb == b);
                branches[b].status = if had_candidate { BranchStatus::Merged } else { BranchStatus::Terminated };
                branches[b].lost_at = Some(lambda);
            }
        }
        for (j, p) in points.into_iter().enumerate() {
            if !point_taken[j] {
                branches.push(Branch {
                    id: branches.len(),
                    points: vec![p],
                    status: BranchStatus::Alive,
                    born_after: if i > 0 { Some(lambdas[i - 1]) } else { None },
                    lost_at: None,
                });
            }
        }
    }
    Ok(Sweep {
        lambdas,
        branches,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionKind {
    ClassChange { from: String, to: String },
    Birth,
    Termination,
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub branch: usize,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(flatten)]
    pub kind: TransitionKind,
    pub description: String,
}

/// Class changes between consecutive branch points, plus branch births and
/// losses, each with its bracketing `λ` interval.
pub fn detect_transitions(branches: &[Branch]) -> Vec<Transition> {
    let mut out = Vec::new();
    for b in branches {
        if let Some(prev) = b.born_after {
            let first = &b.points[0];
            out.push(Transition {
                branch: b.id,
                lambda_lo: prev,
                lambda_hi: first.lambda,
                kind: TransitionKind::Birth,
                description: format!("branch {} appears with class {} at s = {:.9}", b.id, first.class_label, first.s),
            });
        }
        for w in b.points.windows(2) {
            if w[0].class_label != w[1].class_label {
                out.push(Transition {
                    branch: b.id,
                    lambda_lo: w[0].lambda,
                    lambda_hi: w[1].lambda,
                    kind: TransitionKind::ClassChange {
                        from: w[0].class_label.clone(),
                        to: w[1].class_label.clone(),
                    },
                    description: format!("branch {} changes class {} -> {}", b.id, w[0].class_label, w[1].class_label),
                });
            }
        }
        if let Some(lost) = b.lost_at {
            let (kind, what) = match b.status {
                BranchStatus::Merged => (TransitionKind::Merge, "merges into a neighbour"),
                _ => (TransitionKind::Termination, "terminates"),
            };
            out.push(Transition {
                branch: b.id,
                lambda_lo: b.last().lambda,
                lambda_hi: lost,
                kind,
                description: format!("branch {} {what}", b.id),
            });
        }
    }
    out.sort_by(|a, b| a.lambda_lo.total_cmp(&b.lambda_lo).then(a.branch.cmp(&b.branch)));
    out
}

/// Number of class-change events.
pub fn class_changes(transitions: &[Transition]) -> usize {
    transitions
        .iter()
        .filter(|t| matches!(t.kind, TransitionKind::ClassChange { .. }))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::problem::SourceTerm;

    fn point(lambda: f64, s: f64, class: &str) -> BranchPoint {
        BranchPoint {
            lambda,
            s,
            class_label: class.to_string(),
            k: 0,
            u_max: None,
            u_min: Some(s),
            residual: 0.0,
        }
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(50.0, 400.0, 4);
        assert_eq!((g[0], g[3]), (50.0, 400.0));
        assert!((g[1] - 100.0).abs() < 1e-12 && (g[2] - 200.0).abs() < 1e-12);
        assert_eq!(geometric_grid(7.0, 7.0, 2), vec![7.0]);
    }

    #[test]
    fn constant_branch_has_no_transitions() {
        let b = Branch {
            id: 0,
            points: vec![point(1.0, -1.0, "Z0"), point(2.0, -1.1, "Z0")],
            status: BranchStatus::Alive,
            born_after: None,
            lost_at: None,
        };
        assert!(detect_transitions(&[b]).is_empty());
    }

    #[test]
    fn birth_and_class_change_are_reported() {
        let b = Branch {
            id: 3,
            points: vec![point(3.0, -1.0, "Z0"), point(4.0, -1.0, "Z2")],
            status: BranchStatus::Terminated,
            born_after: Some(2.0),
            lost_at: Some(5.0),
        };
        let t = detect_transitions(&[b]);
        assert_eq!(t.len(), 3);
        assert_eq!(t[0].kind, TransitionKind::Birth);
        assert_eq!((t[0].lambda_lo, t[0].lambda_hi), (2.0, 3.0));
        assert_eq!(class_changes(&t), 1);
        assert_eq!(t[2].kind, TransitionKind::Termination);
    }

    #[test]
    fn rejects_bad_ranges() {
        let p = RadialProblem::new(1, 50.0, SourceTerm::Zero, Nonlinearity::default()).unwrap();
        let cfg = SweepConfig::default();
        assert!(sweep_lambda(&p, 60.0, 50.0, 2, &cfg).is_err());
        assert!(sweep_lambda(&p, 50.0, 60.0, 1, &cfg).is_err());
    }

    #[test]
    fn sweep_tracks_single_branch() {
        let p = RadialProblem::new(1, 50.0, SourceTerm::Zero, Nonlinearity::default()).unwrap();
        let cfg = SweepConfig {
            n_scan: 400,
            warm_scan: 50,
            ..SweepConfig::default()
        };
        let sweep = sweep_lambda(&p, 50.0, 100.0, 3, &cfg).unwrap();
        assert_eq!(sweep.lambdas.len(), 3);
        assert_eq!(sweep.branches.len(), 1);
        let b = &sweep.branches[0];
        assert_eq!(b.status, BranchStatus::Alive);
        assert_eq!(b.points.len(), 3);
        assert!(b.points.iter().all(|p| p.class_label == "Z0"));
        assert!(detect_transitions(&sweep.branches).is_empty());
        assert_eq!(sweep.to_csv().lines().count(), 4);
        let single = sweep_lambda(&p, 50.0, 50.0, 2, &cfg).unwrap();
        assert_eq!(single.lambdas, vec![50.0]);
    }
}
