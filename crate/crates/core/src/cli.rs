//! Configuration file parsing and command execution for the command-line
//! front end.
//!
//! The configuration is a TOML document with the flat sections
//! `[nonlinearity]`, `[source]`, `[problem]`, `[solver]`, `[estimates]` and
//! `[output]`. Every key is optional; unknown keys are rejected. See
//! `config.example.toml` and `config.schema.json` in the repository root.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classification::{classify, sign_structure, ClassificationReport};
use crate::continuation::{class_changes, detect_transitions, sweep_lambda, SweepConfig, Transition};
use crate::error::{Error, Result};
use crate::estimates::{verify_problem, verify_solution, BoundsReport, EstimateSettings};
use crate::ivp::IntegratorConfig;
use crate::nonlinearity::{verify_conditions, ConditionSettings, Nonlinearity};
use crate::problem::{RadialProblem, SourceTerm};
use crate::profile::SolutionProfile;
use crate::shooting::{default_window, solve_all, ShootingConfig, SolutionSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearitySection {
    /// `piecewise-power` or `zero`.
    pub kind: String,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            kind: "piecewise-power".into(),
            p: 2.0,
            q: 5.0,
            a: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    /// `zero`, `polynomial` or `cosine`.
    pub kind: String,
    pub coefficients: Vec<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            coefficients: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub n: u32,
    pub lambda: f64,
    /// `[lo, hi]` for `sweep`.
    pub lambda_range: [f64; 2],
    pub steps: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            n: 1,
            lambda: 100.0,
            lambda_range: [50.0, 400.0],
            steps: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub atol: f64,
    pub rtol: f64,
    pub t_start: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub overflow_guard: f64,
    pub escape_level: f64,
    pub n_scan: usize,
    /// Explicit `[s_lo, s_hi]`; the a priori window is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_window: Option<[f64; 2]>,
    pub boundary_tol: f64,
    pub bracket_tol: f64,
    pub merge_tol: f64,
    pub edge_refinement: bool,
    pub edge_decades: usize,
    pub edge_points_per_decade: usize,
    pub admissibility_slack: f64,
    pub warm_scan: usize,
    pub warm_width: f64,
    pub jump_rel: f64,
    pub jump_abs: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let i = IntegratorConfig::default();
        let s = ShootingConfig::default();
        let w = SweepConfig::default();
        Self {
            atol: i.atol,
            rtol: i.rtol,
            t_start: i.t_start,
            max_step: i.max_step,
            min_step: i.min_step,
            max_steps: i.max_steps,
            overflow_guard: i.overflow_guard,
            escape_level: i.escape_level,
            n_scan: w.n_scan,
            scan_window: None,
            boundary_tol: s.boundary_tol,
            bracket_tol: s.bracket_tol,
            merge_tol: s.merge_tol,
            edge_refinement: s.edge_refinement,
            edge_decades: s.edge_decades,
            edge_points_per_decade: s.edge_points_per_decade,
            admissibility_slack: s.admissibility_slack,
            warm_scan: w.warm_scan,
            warm_width: w.warm_width,
            jump_rel: w.jump_rel,
            jump_abs: w.jump_abs,
        }
    }
}

impl SolverSection {
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            atol: self.atol,
            rtol: self.rtol,
            t_start: self.t_start,
            overflow_guard: self.overflow_guard,
            escape_level: self.escape_level,
            max_step: self.max_step,
            min_step: self.min_step,
            max_steps: self.max_steps,
        }
    }

    pub fn shooting(&self) -> ShootingConfig {
        ShootingConfig {
            integrator: self.integrator(),
            boundary_tol: self.boundary_tol,
            bracket_tol: self.bracket_tol,
            merge_tol: self.merge_tol,
            edge_refinement: self.edge_refinement,
            edge_decades: self.edge_decades,
            edge_points_per_decade: self.edge_points_per_decade,
            admissibility_slack: self.admissibility_slack,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            shooting: self.shooting(),
            n_scan: self.n_scan,
            warm_scan: self.warm_scan,
            warm_width: self.warm_width,
            jump_rel: self.jump_rel,
            jump_abs: self.jump_abs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Any of `json` and `csv`.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["json".into(), "csv".into()],
        }
    }
}

impl OutputSection {
    fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

/// Fully defaulted run configuration; serialised verbatim into the run
/// manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: NonlinearitySection,
    pub source: SourceSection,
    pub problem: ProblemSection,
    pub solver: SolverSection,
    pub estimates: EstimateSettings,
    pub output: OutputSection,
}

fn field_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| field_error("document", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| field_error(&path.display().to_string(), e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.nonlinearity()?;
        self.source()?;
        let p = &self.problem;
        if p.n < 1 {
            return Err(field_error("problem.n", "n must be at least 1"));
        }
        if !(p.lambda.is_finite() && p.lambda > 0.0) {
            return Err(field_error("problem.lambda", "lambda must be positive"));
        }
        let [lo, hi] = p.lambda_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(field_error("problem.lambda_range", "need 0 < lo <= hi"));
        }
        if p.steps < 2 {
            return Err(field_error("problem.steps", "steps must be at least 2"));
        }
        let s = &self.solver;
        if s.n_scan < 1 {
            return Err(field_error("solver.n_scan", "n_scan must be positive"));
        }
        if let Some([a, b]) = s.scan_window {
            if !(a < b && a.is_finite() && b.is_finite()) {
                return Err(field_error("solver.scan_window", "need s_lo < s_hi"));
            }
        }
        s.sweep()
            .shooting
            .validate()
            .map_err(|e| field_error("solver", e.to_string()))?;
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                return Err(field_error("output.formats", format!("unknown format {f:?}")));
            }
        }
        let e = &self.estimates;
        if !(e.m1 < e.m2) {
            return Err(field_error("estimates.m1", "m1 must be below m2"));
        }
        if !(e.a > 0.0 && e.b_ratio > e.a) {
            return Err(field_error("estimates.b_ratio", "need 0 < a < b_ratio"));
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let s = &self.nonlinearity;
        match s.kind.as_str() {
            "zero" => Ok(Nonlinearity::zero()),
            "piecewise-power" => {
                if !(s.p > 1.0) {
                    return Err(field_error("nonlinearity.p", "p must exceed 1"));
                }
                if !(s.q > 1.0) {
                    return Err(field_error("nonlinearity.q", "q must exceed 1"));
                }
                Nonlinearity::power_with_threshold(s.p, s.q, s.a).map_err(|e| field_error("nonlinearity.A", e.to_string()))
            }
            other => Err(field_error("nonlinearity.kind", format!("unknown kind {other:?}"))),
        }
    }

    pub fn source(&self) -> Result<SourceTerm> {
        let s = &self.source;
        let c = s.coefficients.clone();
        if c.iter().any(|x| !x.is_finite()) {
            return Err(field_error("source.coefficients", "coefficients must be finite"));
        }
        match s.kind.as_str() {
            "zero" => Ok(SourceTerm::Zero),
            "polynomial" => Ok(SourceTerm::Polynomial(c)),
            "cosine" => Ok(SourceTerm::Cosine(c)),
            other => Err(field_error("source.kind", format!("unknown kind {other:?}"))),
        }
    }

    pub fn problem_at(&self, lambda: f64) -> Result<RadialProblem> {
        RadialProblem::new(self.problem.n, lambda, self.source()?, self.nonlinearity()?)
    }

    pub fn problem(&self) -> Result<RadialProblem> {
        self.problem_at(self.problem.lambda)
    }

    /// Configured window, else the a priori window, else (for `g ≡ 0`)
    /// `±(1 + λ + M)`.
    pub fn scan_window(&self, problem: &RadialProblem) -> Result<(f64, f64)> {
        if let Some([a, b]) = self.solver.scan_window {
            return Ok((a, b));
        }
        match default_window(problem) {
            Err(Error::NotInvertible { .. }) => {
                let w = 1.0 + problem.lambda() + problem.m();
                Ok((-w, w))
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckNonlinearity,
    Solve,
    Classify,
    VerifyBounds,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckNonlinearity => "check-nonlinearity",
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::VerifyBounds => "verify-bounds",
            Command::Sweep => "sweep",
        }
    }
}

/// Per-invocation options that are not part of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub out: Option<PathBuf>,
    /// CSV profile (`t,u,du`) to classify or verify instead of solving.
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    /// Some check reported a failure.
    pub failed_checks: bool,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    profile: Option<&'a Path>,
    artifacts: &'a [PathBuf],
    failed_checks: bool,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            artifacts: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }
}

fn solve(config: &RunConfig, problem: &RadialProblem) -> Result<SolutionSet> {
    let (lo, hi) = config.scan_window(problem)?;
    solve_all(problem, lo, hi, config.solver.n_scan, &config.solver.shooting())
}

fn profiles(config: &RunConfig, options: &RunOptions) -> Result<(Vec<SolutionProfile>, Option<SolutionSet>)> {
    let problem = config.problem()?;
    if let Some(path) = &options.profile {
        return Ok((vec![SolutionProfile::read_csv(&problem, path)?], None));
    }
    let set = solve(config, &problem)?;
    let list = set.solutions.iter().map(|s| s.profile().clone()).collect();
    Ok((list, Some(set)))
}

/// Runs one command and writes its artifacts plus `manifest.json`.
pub fn run_command(command: Command, config: &RunConfig, options: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let dir = options.out.clone().unwrap_or_else(|| config.output.directory.clone());
    let mut w = Writer::new(dir)?;
    let json = config.output.wants("json");
    let csv = config.output.wants("csv");
    let (failed_checks, summary) = match command {
        Command::CheckNonlinearity => {
            let report = verify_conditions(&config.nonlinearity()?, &ConditionSettings::default());
            if json {
                w.json("condition_report.json", &report)?;
            }
            (!report.verdict, format!("verdict: {}", report.verdict))
        }
        Command::Solve => {
            let problem = config.problem()?;
            let set = solve(config, &problem)?;
            if json {
                w.json("solutions.json", &set)?;
            }
            if csv {
                for (i, s) in set.solutions.iter().enumerate() {
                    w.text(&format!("profile_{i}.csv"), &s.profile().to_csv())?;
                }
            }
            let bad = set.solutions.iter().any(|s| s.residual > 1e-5);
            let list: Vec<String> = set.solutions.iter().map(|s| format!("{:.12}", s.s)).collect();
            (bad, format!("{} solution(s): s = [{}]", set.len(), list.join(", ")))
        }
        Command::Classify => {
            let (list, _) = profiles(config, options)?;
            let mut reports: Vec<ClassificationReport> = Vec::new();
            let mut bad = false;
            for (i, prof) in list.iter().enumerate() {
                let r = classify(prof)?;
                bad |= r.is_degenerate() || !sign_structure(&r, prof, 1e-6)?.pass;
                if csv {
                    w.text(&format!("zeros_{i}.csv"), &r.zeros_csv())?;
                    w.text(&format!("critical_{i}.csv"), &r.critical_csv())?;
                }
                reports.push(r);
            }
            if json {
                w.json("classification.json", &reports)?;
            }
            let labels: Vec<&str> = reports.iter().map(|r| r.class_label.as_str()).collect();
            (bad, format!("classes: [{}]", labels.join(", ")))
        }
        Command::VerifyBounds => {
            let (list, _) = profiles(config, options)?;
            let mut reports: Vec<BoundsReport> = Vec::new();
            for prof in &list {
                reports.push(verify_solution(prof, &config.estimates)?.1);
            }
            reports.push(verify_problem(&config.problem()?, &config.estimates)?);
            if json {
                w.json("bounds.json", &reports)?;
            }
            let table: String = reports.iter().map(|r| r.table()).collect::<Vec<_>>().join("\n");
            w.text("bounds.txt", &table)?;
            let failures = reports.iter().flat_map(|r| r.failures()).count();
            (failures > 0, format!("{failures} failed entr{}", if failures == 1 { "y" } else { "ies" }))
        }
        Command::Sweep => {
            let template = config.problem()?;
            let [lo, hi] = config.problem.lambda_range;
            let sweep = sweep_lambda(&template, lo, hi, config.problem.steps, &config.solver.sweep())?;
            let transitions: Vec<Transition> = detect_transitions(&sweep.branches);
            if csv {
                w.text("branches.csv", &sweep.to_csv())?;
            }
            if json {
                w.json("sweep.json", &sweep)?;
                w.json("transitions.json", &transitions)?;
            }
            let changes = class_changes(&transitions);
            (
                changes > 0,
                format!("{} branch(es), {} transition(s), {changes} class change(s)", sweep.branches.len(), transitions.len()),
            )
        }
    };
    let mut artifacts = w.artifacts.clone();
    artifacts.push(w.dir.join("manifest.json"));
    let manifest = Manifest {
        command: command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config,
        profile: options.profile.as_deref(),
        artifacts: &artifacts,
        failed_checks,
    };
    w.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        failed_checks,
        artifacts,
        summary,
    })
}

/// Exit status contract: 0 success, 1 failed check under `--strict`, 2 error.
pub fn exit_code(result: &Result<RunOutcome>, strict: bool) -> i32 {
    match result {
        Ok(o) if strict && o.failed_checks => 1,
        Ok(_) => 0,
        Err(_) => 2,
    }
}
