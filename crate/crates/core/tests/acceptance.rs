//! Acceptance harness: one line per criterion.
//!
//! Criterion 3 cannot be met. At λ = 100 the default family has exactly one
//! solution, and the independent oracle agrees. It is reported as an expected
//! failure. Criteria 6 and 7 only constrain sign-changing solutions, and none
//! exist for λ ≤ 400, so they are reported as vacuous. The same checks are run
//! at λ = 800 and 1600 for information.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_roots, mean_value_integral};
use radial_nodal::classification::{classify_on, sign_structure};
use radial_nodal::continuation::{class_changes, BranchStatus};
use radial_nodal::estimates::{
    check_extrema_bounds, check_mean_value, check_parts_bound, check_sturm_gap, check_zero_derivative_bounds,
    estimate_gamma, verify_solution,
};
use radial_nodal::nonlinearity::log_grid;
use radial_nodal::shooting::solve_default;
use radial_nodal::{
    classify, detect_transitions, filter_admissible, integrate, residual_norm, solve_all, sweep_lambda, BoundEntry,
    ConditionSettings, EstimateSettings, IntegratorConfig, Nonlinearity, RadialProblem, ShootingConfig, Solution,
    SolutionProfile, SourceTerm, SweepConfig, Verdict,
};

const PROBE_LAMBDAS: [f64; 4] = [50.0, 100.0, 200.0, 400.0];
const N_SCAN: usize = 2000;

enum Status {
    Pass,
    Fail,
    /// Fails for a documented reason that no implementation can remove.
    KnownFail,
    Vacuous,
}

struct Line {
    status: Status,
    detail: String,
}

impl Line {
    fn check(ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Line { status, detail }
    }
}

struct Run {
    lambda: f64,
    cosine: bool,
    solutions: Vec<Solution>,
}

impl Run {
    fn tag(&self) -> String {
        format!("λ={}{}", self.lambda, if self.cosine { " cos" } else { "" })
    }
}

fn problem(lambda: f64, cosine: bool) -> RadialProblem {
    let source = if cosine { SourceTerm::Cosine(vec![0.0, 0.5]) } else { SourceTerm::Zero };
    RadialProblem::new(1, lambda, source, Nonlinearity::default()).unwrap()
}

fn solve(lambda: f64, cosine: bool) -> Run {
    let set = solve_default(&problem(lambda, cosine), N_SCAN, &ShootingConfig::default()).unwrap();
    Run {
        lambda,
        cosine,
        solutions: set.solutions,
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let p = RadialProblem::new(3, 6.0, SourceTerm::Zero, Nonlinearity::zero()).unwrap();
    let mut worst: f64 = 0.0;
    for s in [-2.0, 0.0, 1.0, 3.5] {
        let prof = integrate(s, &p, &IntegratorConfig::default()).unwrap();
        worst = worst.max((prof.terminal() - (s + 1.0)).abs());
    }
    let elapsed = start.elapsed();
    Line::check(
        worst <= 1e-8 && elapsed < Duration::from_secs(1),
        format!("max terminal error {worst:.2e}, {}", secs(elapsed)),
    )
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let settings = ConditionSettings::default();
    let good = Nonlinearity::power(2.0, 5.0).unwrap().verify_conditions(&settings);
    let symmetric = Nonlinearity::power(3.0, 3.0).unwrap().verify_conditions(&settings);
    let elapsed = start.elapsed();
    Line::check(
        good.verdict && !symmetric.ratio_condition && elapsed < Duration::from_secs(1),
        format!(
            "(2,5) verdict {}, (3,3) ratio_condition {}, {}",
            good.verdict,
            symmetric.ratio_condition,
            secs(elapsed)
        ),
    )
}

fn criterion_3() -> (Line, Vec<SolutionProfile>) {
    let start = Instant::now();
    let p = problem(100.0, false);
    let (lo, hi) = (-150.0, 10.0);
    let set = solve_all(&p, lo, hi, N_SCAN, &ShootingConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let oracle = brute_force_roots(100.0, 0.0, lo, hi, 1e-3);
    let s = set.s_values();
    let quality = set.solutions.iter().all(|x| {
        x.terminal.abs() <= 1e-9 && residual_norm(x.profile()) <= 1e-5 && filter_admissible(x.profile())
    });
    let matches = s.len() == oracle.len() && s.iter().zip(&oracle).all(|(a, b)| (a - b).abs() <= 1e-6);
    let timely = elapsed < Duration::from_secs(60);
    let detail = format!(
        "{} solution(s) {s:?}, oracle on [{lo:.3}, {hi:.3}] {oracle:?}, quality {quality}, match {matches}, {}",
        s.len(),
        secs(elapsed)
    );
    let status = if s.len() >= 2 && quality && matches && timely {
        Status::Pass
    } else if quality && matches && timely && oracle.len() < 2 {
        Status::KnownFail
    } else {
        Status::Fail
    };
    let profiles = set.solutions.iter().map(|x| x.profile().clone()).collect();
    (Line { status, detail }, profiles)
}

/// Even number of simple zeros, no degenerate zeros, and zero locations stable
/// under grid doubling.
fn parity_ok(profile: &SolutionProfile) -> bool {
    let (Ok(a), Ok(b)) = (classify_on(profile, 4096), classify_on(profile, 8192)) else {
        return false;
    };
    !a.is_degenerate()
        && a.k % 2 == 0
        && a.k == b.k
        && a.zeros.iter().zip(&b.zeros).all(|(x, y)| (x.tau - y.tau).abs() <= 1e-8)
}

fn criterion_4(c3: &[SolutionProfile], sweep_profiles: &[SolutionProfile]) -> Line {
    let bad = c3.iter().chain(sweep_profiles).filter(|p| !parity_ok(p)).count();
    let total = c3.len() + sweep_profiles.len();
    Line::check(
        bad == 0 && total > 0,
        format!("{total} profiles ({} from the sweep), {bad} with odd or unstable zeros", sweep_profiles.len()),
    )
}

fn criterion_5(runs: &[Run]) -> Line {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut failed = Vec::new();
    for run in runs {
        for sol in &run.solutions {
            let report = classify(sol.profile()).unwrap();
            for e in check_extrema_bounds(&report, &sol.profile().problem).unwrap() {
                checked += 1;
                worst = worst.min(e.margin);
                if !(e.passed() && e.margin > 0.0) {
                    failed.push(format!("{} {} at s={}", run.tag(), e.name, sol.s));
                }
            }
        }
    }
    Line::check(
        checked > 0 && failed.is_empty(),
        format!("{checked} entries, smallest margin {worst:.4}{}", failures(&failed)),
    )
}

fn failures(failed: &[String]) -> String {
    if failed.is_empty() {
        String::new()
    } else {
        format!(", failed: {}", failed.join("; "))
    }
}

fn lemma_entries(runs: &[Run]) -> Vec<(f64, BoundEntry)> {
    let b = EstimateSettings::default().b;
    let mut out = Vec::new();
    for run in runs {
        for sol in &run.solutions {
            let report = classify(sol.profile()).unwrap();
            if report.k == 0 {
                continue;
            }
            let entries = check_zero_derivative_bounds(&report, &sol.profile().problem, b, 0.0).unwrap();
            out.extend(entries.into_iter().filter(|e| e.name == "Lemma2.largest").map(|e| (run.lambda, e)));
        }
    }
    out
}

/// Passes when every entry passes and, per source, the smallest margin at
/// each λ is non-decreasing in λ.
fn lemma_summary(runs: &[Run]) -> (usize, bool, String) {
    let mut all_ok = true;
    let mut parts = Vec::new();
    let mut count = 0;
    for cosine in [false, true] {
        let subset: Vec<&Run> = runs.iter().filter(|r| r.cosine == cosine).collect();
        let mut margins: Vec<(f64, f64)> = Vec::new();
        for run in subset {
            let entries = lemma_entries(std::slice::from_ref(run));
            if entries.is_empty() {
                continue;
            }
            count += entries.len();
            all_ok &= entries.iter().all(|(_, e)| e.passed());
            let m = entries.iter().map(|(_, e)| e.margin).fold(f64::INFINITY, f64::min);
            margins.push((run.lambda, m));
        }
        all_ok &= margins.windows(2).all(|w| w[1].1 >= w[0].1);
        if !margins.is_empty() {
            let text: Vec<String> = margins.iter().map(|(l, m)| format!("{l}:{m:.3}")).collect();
            parts.push(format!("{} margins {}", if cosine { "cos" } else { "f=0" }, text.join(" ")));
        }
    }
    (count, all_ok, parts.join(", "))
}

fn criterion_6(runs: &[Run], extra: &[Run]) -> Line {
    let (count, ok, text) = lemma_summary(runs);
    let (xc, xok, xtext) = lemma_summary(extra);
    let note = format!("λ=800,1600: {xc} entries, pass {xok}, {xtext}");
    if count == 0 {
        return Line {
            status: Status::Vacuous,
            detail: format!("no sign-changing solution for λ ≤ 400; {note}"),
        };
    }
    Line::check(ok, format!("{count} entries, {text}; {note}"))
}

fn sturm_entries(runs: &[Run]) -> Vec<BoundEntry> {
    let mut out = Vec::new();
    for run in runs {
        for sol in &run.solutions {
            let report = classify(sol.profile()).unwrap();
            out.push(check_sturm_gap(&report, sol.profile()).unwrap());
        }
    }
    out
}

fn criterion_7(runs: &[Run], extra: &[Run]) -> Line {
    let applicable = |v: Vec<BoundEntry>| -> Vec<BoundEntry> {
        v.into_iter().filter(|e| e.verdict != Verdict::NotApplicable).collect()
    };
    let main = applicable(sturm_entries(runs));
    let side = applicable(sturm_entries(extra));
    let note = format!(
        "λ=800,1600: {} crossings, all pass {}",
        side.len(),
        side.iter().all(BoundEntry::passed)
    );
    if main.is_empty() {
        return Line {
            status: Status::Vacuous,
            detail: format!("no level crossing for λ ≤ 400; {note}"),
        };
    }
    Line::check(
        main.iter().all(BoundEntry::passed),
        format!("{} crossings; {note}", main.len()),
    )
}

fn criterion_8(runs: &[Run]) -> Line {
    let mut parts_ok = true;
    let mut parts_count = 0;
    for run in runs.iter().filter(|r| r.cosine) {
        for sol in &run.solutions {
            parts_count += 1;
            parts_ok &= check_parts_bound(sol.profile()).unwrap().passed();
        }
    }
    let mean = check_mean_value(&problem(100.0, false), 0.0, 1.0).unwrap();
    let exact = mean_value_integral(100.0, 0.0, 1.0).abs();
    let mean_ok = mean.passed() && (mean.lhs - exact).abs() <= 1e-9;
    let gamma = estimate_gamma(&Nonlinearity::default(), 1.0, 4.0, &log_grid(1e2, 1e9, 4))
        .unwrap()
        .gamma_hat;
    let gamma_ok = (gamma - 2.0).abs() <= 1e-3;
    Line::check(
        parts_count > 0 && parts_ok && mean_ok && gamma_ok,
        format!(
            "Eq8 {parts_count} profiles pass {parts_ok}; Eq6 lhs {:.12} vs oracle {exact:.12} <= rhs {:.6}; γ̂ {gamma:.6}",
            mean.lhs, mean.rhs
        ),
    )
}

fn criterion_9(profiles: &[&SolutionProfile]) -> Line {
    let bad = profiles
        .iter()
        .filter(|p| {
            let report = classify(p).unwrap();
            !sign_structure(&report, p, 1e-6).unwrap().pass
        })
        .count();
    Line::check(
        !profiles.is_empty() && bad == 0,
        format!("{} profiles, {bad} violations", profiles.len()),
    )
}

fn main() -> ExitCode {
    let mut lines: Vec<(usize, Line)> = vec![(1, criterion_1()), (2, criterion_2())];
    let (line3, c3_profiles) = criterion_3();
    lines.push((3, line3));

    let runs: Vec<Run> = [false, true]
        .into_iter()
        .flat_map(|c| PROBE_LAMBDAS.map(|l| (l, c)))
        .map(|(l, c)| solve(l, c))
        .collect();
    let extra: Vec<Run> = [800.0, 1600.0].into_iter().map(|l| solve(l, false)).collect();

    let start = Instant::now();
    let template = problem(50.0, false);
    let sweep = sweep_lambda(&template, 50.0, 400.0, 16, &SweepConfig::default()).unwrap();
    let sweep_time = start.elapsed();
    let transitions = detect_transitions(&sweep.branches);
    let alive_changes = class_changes(
        &transitions
            .iter()
            .filter(|t| sweep.branches.iter().any(|b| b.id == t.branch && b.status == BranchStatus::Alive))
            .cloned()
            .collect::<Vec<_>>(),
    );
    let sweep_profiles: Vec<SolutionProfile> = sweep
        .branches
        .iter()
        .flat_map(|b| &b.points)
        .map(|pt| integrate(pt.s, &template.with_lambda(pt.lambda).unwrap(), &IntegratorConfig::default()).unwrap())
        .collect();

    lines.push((4, criterion_4(&c3_profiles, &sweep_profiles)));
    lines.push((5, criterion_5(&runs)));
    lines.push((6, criterion_6(&runs, &extra)));
    lines.push((7, criterion_7(&runs, &extra)));
    lines.push((8, criterion_8(&runs)));
    let all: Vec<&SolutionProfile> = runs
        .iter()
        .chain(&extra)
        .flat_map(|r| r.solutions.iter().map(Solution::profile))
        .chain(&c3_profiles)
        .collect();
    lines.push((9, criterion_9(&all)));
    lines.push((
        10,
        Line::check(
            alive_changes == 0 && sweep_time < Duration::from_secs(600),
            format!(
                "{} branches, counts {:?}, {} transitions, {alive_changes} class changes on alive branches, {}",
                sweep.branches.len(),
                sweep.counts,
                transitions.len(),
                secs(sweep_time)
            ),
        ),
    ));

    // full bounds reports must not contain failures on any computed solution
    let settings = EstimateSettings::default();
    let report_failures: usize = all
        .iter()
        .map(|p| verify_solution(p, &settings).unwrap().1.failures().count())
        .sum();

    let mut unexpected = 0;
    for (i, line) in &lines {
        let label = match line.status {
            Status::Pass => "PASS",
            Status::Fail => {
                unexpected += 1;
                "FAIL"
            }
            Status::KnownFail => "FAIL (known unattainable)",
            Status::Vacuous => "VACUOUS",
        };
        println!("criterion {i:>2}: {label}  {}", line.detail);
    }
    println!("bounds reports: {report_failures} failing entries over {} solutions", all.len());
    if unexpected > 0 || report_failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
