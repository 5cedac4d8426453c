//! Benchmark problems, method comparisons and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::driver::{DifferenceNorm, IterationControl, Problem, Simulation, StepResult};
use crate::error::{GridError, SolveError};
use crate::grid::{AngularQuadrature, BoundarySource, InitialCondition, MaterialField, SlabMesh};
use crate::slope_approx::{BetaGuard, MethodKind, UnknownMethod};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem '{0}' (expected test-a or test-b)")]
    UnknownProblem(String),
    #[error(transparent)]
    UnknownMethod(#[from] UnknownMethod),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Flat description of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    /// cm
    pub length: f64,
    pub cells: usize,
    pub points_per_half: usize,
    /// cm⁻¹
    pub sigma_t: f64,
    /// cm⁻¹
    pub sigma_s: f64,
    pub source: f64,
    pub inflow_left: f64,
    pub inflow_right: f64,
    pub initial_flux: f64,
    /// cm/s
    pub speed: f64,
    /// ns
    pub t_end: f64,
    /// ns
    pub dt: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relative_norm: bool,
    pub method: MethodKind,
    pub out: PathBuf,
}

/// Built-in benchmark problems.
pub fn builtin_problem(name: &str) -> Result<ProblemSpec, HarnessError> {
    match name {
        // photon-like transient with a steep incoming front
        "test-a" => Ok(ProblemSpec {
            name: name.to_string(),
            length: 5.0,
            cells: 100,
            points_per_half: 4,
            sigma_t: 0.1,
            sigma_s: 0.05,
            source: 0.0,
            inflow_left: 100.0,
            inflow_right: 0.0,
            initial_flux: 1e-3,
            speed: 3e10,
            t_end: 1.0,
            dt: 0.02,
            tolerance: 1e-8,
            max_iterations: 200,
            relative_norm: false,
            method: MethodKind::Reference,
            out: PathBuf::from("out"),
        }),
        // optically thick, nearly pure scatterer
        "test-b" => Ok(ProblemSpec {
            name: name.to_string(),
            length: 5.0,
            cells: 25,
            points_per_half: 4,
            sigma_t: 100.0,
            sigma_s: 100.0 - 1e-2,
            source: 1e-2,
            inflow_left: 0.0,
            inflow_right: 0.0,
            initial_flux: 1e-3,
            speed: 3e10,
            t_end: 0.4,
            dt: 0.02,
            tolerance: 1e-8,
            max_iterations: 200,
            relative_norm: false,
            method: MethodKind::Reference,
            out: PathBuf::from("out"),
        }),
        _ => Err(HarnessError::UnknownProblem(name.to_string())),
    }
}

impl ProblemSpec {
    /// Number of steps; `dt` must divide `t_end` to 1e−12.
    pub fn steps(&self) -> Result<usize, HarnessError> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(HarnessError::Invalid(format!(
                "need dt > 0 and t_end > 0 (dt={}, t_end={})",
                self.dt, self.t_end
            )));
        }
        let ratio = self.t_end / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-12 * ratio.max(1.0) || n < 1.0 {
            return Err(HarnessError::Invalid(format!(
                "dt={} does not divide t_end={}",
                self.dt, self.t_end
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let physical = [
            ("length", self.length),
            ("sigma_t", self.sigma_t),
            ("sigma_s", self.sigma_s),
            ("source", self.source),
            ("inflow_left", self.inflow_left),
            ("inflow_right", self.inflow_right),
            ("initial_flux", self.initial_flux),
            ("speed", self.speed),
            ("tolerance", self.tolerance),
        ];
        for (k, v) in physical {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(HarnessError::Invalid(format!(
                    "{k} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.speed == 0.0 {
            return Err(HarnessError::Invalid("speed must be positive".into()));
        }
        self.steps()?;
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num(v: &str) -> Result<f64, String> {
            v.parse::<f64>()
                .map_err(|e| format!("bad number '{v}': {e}"))
        }
        fn int(v: &str) -> Result<usize, String> {
            v.parse::<usize>()
                .map_err(|e| format!("bad integer '{v}': {e}"))
        }
        match key {
            "problem" => {
                let out = self.out.clone();
                let method = self.method;
                *self = builtin_problem(value).map_err(|e| e.to_string())?;
                self.out = out;
                self.method = method;
            }
            "length" => self.length = num(value)?,
            "cells" => self.cells = int(value)?,
            "points_per_half" => self.points_per_half = int(value)?,
            "sigma_t" => self.sigma_t = num(value)?,
            "sigma_s" => self.sigma_s = num(value)?,
            "sigma_a" => self.sigma_s = self.sigma_t - num(value)?,
            "source" => self.source = num(value)?,
            "inflow_left" => self.inflow_left = num(value)?,
            "inflow_right" => self.inflow_right = num(value)?,
            "initial_flux" => self.initial_flux = num(value)?,
            "speed" => self.speed = num(value)?,
            "t_end" => self.t_end = num(value)?,
            "dt" => self.dt = num(value)?,
            "tolerance" => self.tolerance = num(value)?,
            "max_iterations" => self.max_iterations = int(value)?,
            "norm" => {
                self.relative_norm = match value {
                    "relative" => true,
                    "absolute" => false,
                    other => {
                        return Err(format!("norm must be relative or absolute, got '{other}'"))
                    }
                }
            }
            "method" => self.method = value.parse().map_err(|e: UnknownMethod| e.to_string())?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<(), HarnessError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                line: n + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|message| HarnessError::Config {
                    line: n + 1,
                    message,
                })?;
        }
        Ok(())
    }

    /// Solver-ready problem; speed converted to cm/ns.
    pub fn build(&self, threads: usize) -> Result<Problem, HarnessError> {
        self.validate()?;
        let mesh = SlabMesh::uniform(self.length, self.cells)?;
        let quadrature = AngularQuadrature::double_gauss(self.points_per_half)?;
        let materials =
            MaterialField::uniform(self.cells, self.sigma_t, self.sigma_s, self.source)?;
        let initial = InitialCondition::constant(self.initial_flux, self.cells, quadrature.len());
        Ok(Problem {
            mesh,
            quadrature,
            materials,
            boundary: BoundarySource::new(self.inflow_left, self.inflow_right),
            initial,
            speed: self.speed / 1e9,
            dt: self.dt,
            steps: self.steps()?,
            control: IterationControl {
                tolerance: self.tolerance,
                max_iterations: self.max_iterations,
                norm: if self.relative_norm {
                    DifferenceNorm::Relative
                } else {
                    DifferenceNorm::Absolute
                },
            },
            guard: BetaGuard::default(),
            threads: threads.max(1),
        })
    }
}

/// Relative 2-norm difference; `None` norm flag means the reference was zero
/// and the absolute norm of `candidate` is returned instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub value: f64,
    pub absolute_fallback: bool,
}

/// `‖candidate − reference‖₂ / ‖reference‖₂`.
///
/// Panics if the slices differ in length.
pub fn relative_l2_error(candidate: &[f64], reference: &[f64]) -> RelativeError {
    assert_eq!(
        candidate.len(),
        reference.len(),
        "error metric needs equal lengths"
    );
    let diff: f64 = candidate
        .iter()
        .zip(reference)
        .map(|(c, r)| (c - r) * (c - r))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    if norm > 0.0 {
        RelativeError {
            value: diff / norm,
            absolute_fallback: false,
        }
    } else {
        RelativeError {
            value: candidate.iter().map(|c| c * c).sum::<f64>().sqrt(),
            absolute_fallback: true,
        }
    }
}

/// Outcome of one method over a whole run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: MethodKind,
    pub steps: Vec<StepResult>,
    pub failure: Option<SolveError>,
}

impl MethodRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs one method to the end (or to its first failure).
pub fn run_method(problem: &Problem, method: MethodKind) -> MethodRun {
    let mut sim = Simulation::new(problem.clone(), method);
    match sim.run() {
        Ok(steps) => MethodRun {
            method,
            steps,
            failure: None,
        },
        Err((steps, e)) => MethodRun {
            method,
            steps,
            failure: Some(e),
        },
    }
}

/// Per-step errors of one method against the reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodErrors {
    pub method: MethodKind,
    pub avg_flux: Vec<f64>,
    pub slope_flux: Vec<f64>,
    pub iterations: Vec<usize>,
    pub balance: Vec<f64>,
    pub max_lambda: Vec<f64>,
    pub failure: Option<String>,
}

impl MethodErrors {
    pub fn final_avg_error(&self) -> Option<f64> {
        if self.failure.is_some() {
            None
        } else {
            self.avg_flux.last().copied()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub problem: String,
    pub dt: f64,
    pub methods: Vec<MethodErrors>,
}

impl ErrorReport {
    pub fn method(&self, method: MethodKind) -> Option<&MethodErrors> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn errors_against(run: &MethodRun, reference: &MethodRun) -> MethodErrors {
    let pairs = run.steps.iter().zip(&reference.steps);
    MethodErrors {
        method: run.method,
        avg_flux: pairs
            .clone()
            .map(|(s, r)| relative_l2_error(&s.low_order.avg_flux, &r.low_order.avg_flux).value)
            .collect(),
        slope_flux: pairs
            .map(|(s, r)| relative_l2_error(&s.low_order.slope_flux, &r.low_order.slope_flux).value)
            .collect(),
        iterations: run.steps.iter().map(|s| s.iterations).collect(),
        balance: run.steps.iter().map(|s| s.balance_residual).collect(),
        max_lambda: run
            .steps
            .iter()
            .map(|s| s.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        failure: run.failure.as_ref().map(|e| e.to_string()),
    }
}

/// Runs the reference and every requested method; methods run on separate
/// threads and results are merged in request order.
pub fn run_comparison(
    problem: &Problem,
    name: &str,
    methods: &[MethodKind],
) -> (ErrorReport, Vec<MethodRun>) {
    let mut order: Vec<MethodKind> = vec![MethodKind::Reference];
    order.extend(
        methods
            .iter()
            .copied()
            .filter(|&m| m != MethodKind::Reference),
    );
    let runs: Vec<MethodRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = order
            .iter()
            .map(|&m| scope.spawn(move || run_method(problem, m)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("method worker panicked"))
            .collect()
    });
    let reference = &runs[0];
    let report = ErrorReport {
        problem: name.to_string(),
        dt: problem.dt,
        methods: runs.iter().map(|r| errors_against(r, reference)).collect(),
    };
    (report, runs)
}

/// Fixed 17-significant-digit rendering.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-step summary of one run.
pub fn steps_csv(run: &MethodRun) -> String {
    let mut s = String::from("step,time_ns,iterations,balance_residual,max_lambda_per_ns\n");
    for r in &run.steps {
        let max_l = r.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            fmt_f64(r.time),
            r.iterations,
            fmt_f64(r.balance_residual),
            fmt_f64(max_l)
        );
    }
    s
}

/// Per-step, per-cell low-order solution.
pub fn solution_csv(run: &MethodRun, mesh: &SlabMesh) -> String {
    let mut s = String::from(
        "step,time_ns,cell,x_cm,phi_avg,phi_slope,current_avg,current_slope,lambda_per_ns\n",
    );
    for r in &run.steps {
        let lo = &r.low_order;
        for (i, x) in mesh.centers().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                fmt_f64(r.time),
                i,
                fmt_f64(*x),
                fmt_f64(lo.avg_flux[i]),
                fmt_f64(lo.slope_flux[i]),
                fmt_f64(lo.avg_current[i]),
                fmt_f64(lo.slope_current[i]),
                fmt_f64(r.lambda[i])
            );
        }
    }
    s
}

/// One row per step, one column group per method; failed methods leave
/// empty cells past their last completed step.
pub fn comparison_csv(report: &ErrorReport) -> String {
    let mut s = String::from("step,time_ns");
    for m in &report.methods {
        let n = m.method.name();
        let _ = write!(
            s,
            ",{n}_err_phi_avg,{n}_err_phi_slope,{n}_iterations,{n}_balance_residual,{n}_max_lambda_per_ns"
        );
    }
    s.push('\n');
    let rows = report
        .methods
        .iter()
        .map(|m| m.avg_flux.len())
        .max()
        .unwrap_or(0);
    for k in 0..rows {
        let _ = write!(s, "{},{}", k + 1, fmt_f64((k + 1) as f64 * report.dt));
        for m in &report.methods {
            if k < m.avg_flux.len() {
                let _ = write!(
                    s,
                    ",{},{},{},{},{}",
                    fmt_f64(m.avg_flux[k]),
                    fmt_f64(m.slope_flux[k]),
                    m.iterations[k],
                    fmt_f64(m.balance[k]),
                    fmt_f64(m.max_lambda[k])
                );
            } else {
                s.push_str(",,,,,");
            }
        }
        s.push('\n');
    }
    s
}

/// Final-time summary, including failures.
pub fn summary_csv(report: &ErrorReport) -> String {
    let mut s = String::from("method,status,steps_completed,final_err_phi_avg,final_err_phi_slope,iterations_min,iterations_max\n");
    for m in &report.methods {
        let status = m.failure.as_deref().map_or("ok".to_string(), |e| {
            format!("failed: {}", e.replace(',', ";"))
        });
        let last = |v: &[f64]| v.last().map_or(String::new(), |x| fmt_f64(*x));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            m.method,
            status,
            m.avg_flux.len(),
            last(&m.avg_flux),
            last(&m.slope_flux),
            m.iterations
                .iter()
                .min()
                .map_or(String::new(), |v| v.to_string()),
            m.iterations
                .iter()
                .max()
                .map_or(String::new(), |v| v.to_string()),
        );
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

/// Writes the per-run files of `run` into `dir`.
pub fn write_run(
    dir: &Path,
    run: &MethodRun,
    mesh: &SlabMesh,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let n = run.method.name();
    Ok(vec![
        write_file(dir, &format!("{n}_steps.csv"), &steps_csv(run))?,
        write_file(dir, &format!("{n}_solution.csv"), &solution_csv(run, mesh))?,
    ])
}

/// Writes all per-run files plus the comparison and summary files.
pub fn write_comparison(
    dir: &Path,
    report: &ErrorReport,
    runs: &[MethodRun],
    mesh: &SlabMesh,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths = Vec::new();
    for r in runs {
        paths.extend(write_run(dir, r, mesh)?);
    }
    paths.push(write_file(dir, "comparison.csv", &comparison_csv(report))?);
    paths.push(write_file(dir, "summary.csv", &summary_csv(report))?);
    Ok(paths)
}

/// Parses `all` or a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<MethodKind>, HarnessError> {
    if list.trim() == "all" {
        return Ok(MethodKind::ALL.to_vec());
    }
    let mut seen = BTreeMap::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: MethodKind = name.parse()?;
        seen.entry(m).or_insert(());
    }
    Ok(seen.into_keys().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_step_counts() {
        let a = builtin_problem("test-a").unwrap();
        assert_eq!(a.steps().unwrap(), 50);
        let b = builtin_problem("test-b").unwrap();
        assert_eq!(b.steps().unwrap(), 20);
        assert!((b.sigma_s - 99.99).abs() < 1e-12);
        assert!(builtin_problem("test-c").is_err());
    }

    #[test]
    fn speed_converted_to_cm_per_ns() {
        let p = builtin_problem("test-a").unwrap().build(1).unwrap();
        assert_eq!(p.speed, 30.0);
        assert_eq!(p.speed * p.dt, 0.6);
    }

    #[test]
    fn relative_error_examples() {
        assert_eq!(relative_l2_error(&[1.0, 2.0], &[1.0, 2.0]).value, 0.0);
        let r = [1.0, -3.0, 0.5];
        let c: Vec<f64> = r.iter().map(|x| 1.01 * x).collect();
        assert!((relative_l2_error(&c, &r).value - 0.01).abs() < 1e-15);
        let e = relative_l2_error(&[3.0, 4.0], &[0.0, 5.0]);
        assert!((e.value - 10f64.sqrt() / 5.0).abs() < 1e-15);
        let e = relative_l2_error(&[3.0, 4.0], &[0.0, 0.0]);
        assert!(e.absolute_fallback);
        assert_eq!(e.value, 5.0);
    }

    #[test]
    fn config_overrides() {
        let mut spec = builtin_problem("test-a").unwrap();
        spec.apply_config("# comment\ncells = 50\nmethod=sr-sl\nsigma_a = 0.02 # trailing\n")
            .unwrap();
        assert_eq!(spec.cells, 50);
        assert_eq!(spec.method, MethodKind::SrSl);
        assert!((spec.sigma_s - 0.08).abs() < 1e-15);
        assert!(spec.apply_config("bogus = 1").is_err());
        assert!(spec.apply_config("cells").is_err());
    }

    #[test]
    fn dt_must_divide_t_end() {
        let mut spec = builtin_problem("test-b").unwrap();
        spec.dt = 0.03;
        assert!(spec.steps().is_err());
    }

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("all").unwrap().len(), 6);
        assert_eq!(
            parse_methods("sr-sl, p1,p1").unwrap(),
            vec![MethodKind::P1, MethodKind::SrSl]
        );
        assert!(parse_methods("p2").is_err());
    }
}
