use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use pmfix_core::algebra::{check_tnorm_axioms, idempotent_dominance};
use pmfix_core::contraction::{ContractionCheck, MinKEstimate};
use pmfix_core::solver::{
    picard, picard_in_sphere, power_picard, IterationTrace, Outcome, SolverError, SolverParams,
    IDEMPOTENCE_GRID,
};
use pmfix_core::space::{check_axioms, PMSpace, COMPLETENESS_NOTE};

use crate::config::{ConfigError, KSpec, Loaded, OutputFormat, SolveMode};

/// Grid step for the t-norm axiom scan in `check-space`.
pub const TNORM_GRID: f64 = 0.05;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    CheckSpace,
    CheckContraction,
    Solve,
    Report,
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub exit: i32,
    pub summary: Vec<String>,
    pub report: Value,
    /// CSV rendering of a solver trace, when the command produced one.
    pub trace_csv: Option<String>,
}

/// Exit code for an error: hypothesis failures are semantic, everything
/// else is a usage or parse problem.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<SolverError>() {
        Some(
            SolverError::SphereHypothesis { .. }
            | SolverError::PowerNotContractive { .. }
            | SolverError::Discontinuous { .. }
            | SolverError::NotFixed(_),
        ) => EXIT_FAILED,
        _ => EXIT_USAGE,
    }
}

pub fn run(kind: CommandKind, loaded: &Loaded, force: bool) -> Result<CommandOutput> {
    match kind {
        CommandKind::CheckSpace => check_space(loaded),
        CommandKind::CheckContraction => check_contraction(loaded),
        CommandKind::Solve => solve(loaded, force),
        CommandKind::Report => report(loaded, force),
    }
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

fn space_summary(space: &PMSpace) -> Value {
    json!({
        "labels": space.labels(),
        "triangle": space.mode().to_string(),
        "origin": space.origin(),
        "completeness": COMPLETENESS_NOTE,
    })
}

pub fn check_space(loaded: &Loaded) -> Result<CommandOutput> {
    let space = &loaded.space;
    let axioms = check_axioms(space);
    let tnorm = &space.mode().tnorm;
    let tnorm_axioms = check_tnorm_axioms(tnorm, TNORM_GRID)?;
    let idempotence = idempotent_dominance(tnorm, IDEMPOTENCE_GRID)?;
    let passed = axioms.passed() && tnorm_axioms.passed();
    let mut summary = vec![format!(
        "{} points under {}: {} triples, {} violations",
        space.len(),
        space.mode(),
        axioms.triples_checked,
        axioms.violations.len()
    )];
    if let Some(v) = axioms.violations.first() {
        summary.push(format!(
            "witness: ({}, {}, {}) at t = {}: {} < {}",
            space.label(v.p),
            space.label(v.q),
            space.label(v.r),
            v.t,
            v.lhs,
            v.rhs
        ));
    }
    summary.push(format!(
        "t-norm {}: {} axiom violations on grid {}",
        tnorm,
        tnorm_axioms.violations.len(),
        TNORM_GRID
    ));
    let report = json!({
        "command": "check-space",
        "space": space_summary(space),
        "axioms": to_value(&axioms)?,
        "tnorm_axioms": to_value(&tnorm_axioms)?,
        "idempotence": to_value(&idempotence)?,
        "passed": passed,
    });
    Ok(CommandOutput {
        exit: if passed { EXIT_OK } else { EXIT_FAILED },
        summary,
        report,
        trace_csv: None,
    })
}

pub fn check_contraction(loaded: &Loaded) -> Result<CommandOutput> {
    let space = &loaded.space;
    let check = loaded.check()?;
    let f = loaded.map()?;
    let mut base = ContractionCheck::new(check.class, 0.5)
        .grid(&check.t_grid)
        .m_max(check.m_max);
    if let Some(tol) = check.tolerance {
        base = base.tolerance(tol);
    }
    let per_t = if check.per_t {
        Some(to_value(&base.per_t_min_k(
            space,
            &f,
            check.search_tolerance,
        )?)?)
    } else {
        None
    };
    let (passed, summary, body) = match check.k {
        KSpec::Value(k) => {
            let report = base.with_k(k).run(space, &f)?;
            let mut summary = vec![format!(
                "{} with k = {}: {} (max defect {})",
                report.class,
                k,
                if report.holds { "holds" } else { "fails" },
                report.max_defect
            )];
            if let (false, Some(w)) = (report.holds, &report.witness) {
                summary.push(format!(
                    "witness: x = {}, y = {}, t = {}{}",
                    space.label(w.x),
                    space.label(w.y),
                    w.t,
                    w.m.map(|m| format!(", m = {m}")).unwrap_or_default()
                ));
            }
            (
                report.holds,
                summary,
                json!({ "report": to_value(&report)? }),
            )
        }
        KSpec::Search(_) => {
            let estimate = base.estimate_min_k(space, &f, check.search_tolerance)?;
            let line = match &estimate {
                MinKEstimate::Found { k } => format!("least {} constant: k = {k}", check.class),
                MinKEstimate::NotFound => format!("{} fails for every probed k < 1", check.class),
                MinKEstimate::NonMonotone { .. } => {
                    format!("{} holds/fails profile over k is not monotone", check.class)
                }
            };
            let found = matches!(estimate, MinKEstimate::Found { .. });
            (found, vec![line], json!({ "search": to_value(&estimate)? }))
        }
    };
    let mut report = json!({
        "command": "check-contraction",
        "space": space_summary(space),
        "map": f.image(),
        "passed": passed,
    });
    merge(&mut report, body);
    if let Some(per_t) = per_t {
        report["per_t"] = per_t;
    }
    Ok(CommandOutput {
        exit: if passed { EXIT_OK } else { EXIT_FAILED },
        summary,
        report,
        trace_csv: None,
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

pub fn solve(loaded: &Loaded, force: bool) -> Result<CommandOutput> {
    let space = &loaded.space;
    let solve = loaded.solve()?;
    let f = loaded.map()?;
    let x0 = loaded.point(&solve.x0)?;
    let mode = loaded.solver_mode(solve);
    let params = SolverParams::new(mode, solve.k)
        .grid(&solve.t_grid)
        .eps(solve.eps)
        .max_iter(solve.max_iter)
        .m_max(solve.m_max)
        .force(force);
    let mut report = json!({
        "command": "solve",
        "space": space_summary(space),
        "map": f.image(),
        "x0": x0,
    });
    let trace: IterationTrace = match solve.mode {
        SolveMode::Thm33 | SolveMode::Thm41 => picard(space, &f, x0, &params)?,
        SolveMode::Sphere => {
            let sphere = solve
                .sphere
                .as_ref()
                .ok_or_else(|| ConfigError::Invalid("sphere mode needs a sphere section".into()))?;
            let run = picard_in_sphere(space, &f, x0, sphere.r, sphere.t, &sphere.u_grid, &params)?;
            report["sphere"] = to_value(&run.sphere)?;
            run.trace
        }
        SolveMode::Power => {
            let m = solve
                .m
                .ok_or_else(|| ConfigError::Invalid("power mode needs m".into()))?;
            let run = power_picard(space, &f, m, x0, &params)?;
            report["power"] = to_value(&run.power)?;
            run.trace
        }
    };
    let converged = trace.fixed_point().is_some();
    let exit = if converged && (trace.certified || force) {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let summary = solve_summary(space, &trace);
    report["trace"] = to_value(&trace)?;
    report["certified"] = json!(trace.certified);
    let csv = trace_csv(space, &trace)?;
    Ok(CommandOutput {
        exit,
        summary,
        report,
        trace_csv: Some(csv),
    })
}

fn solve_summary(space: &PMSpace, trace: &IterationTrace) -> Vec<String> {
    let mut lines = vec![format!("mode: {}", trace.mode)];
    match &trace.outcome {
        Outcome::Converged {
            point,
            exact,
            steps,
        } => {
            lines.push(format!("fixed point: {}", space.label(*point)));
            lines.push(format!("iterations: {steps}"));
            if !exact {
                lines.push("stopped on residual; fixpoint not exact".to_string());
            }
        }
        Outcome::Cycle { start, period } => lines.push(format!(
            "cycle of period {period} from {}",
            space.label(trace.iterates[*start])
        )),
        Outcome::BudgetExhausted => lines.push(format!(
            "budget exhausted after {} iterations",
            trace.residual.len()
        )),
    }
    lines.push(format!("certified: {}", trace.certified));
    for gate in trace.gates.iter().filter(|g| !g.passed) {
        lines.push(format!("gate {} failed: {}", gate.name, gate.detail));
    }
    lines
}

/// One row per step: `n, x_n, residual, min_t bound, min_t step value, certified`.
pub fn trace_csv(space: &PMSpace, trace: &IterationTrace) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "n",
        "x_n",
        "residual",
        "min_t_bound_value",
        "min_t_step_value",
        "certified",
    ])?;
    for n in 0..trace.residual.len() {
        writer.write_record([
            n.to_string(),
            space.label(trace.iterates[n]).to_string(),
            trace.residual[n].to_string(),
            trace.min_bound(n).to_string(),
            trace.min_step_value(n).to_string(),
            trace.certified.to_string(),
        ])?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

pub fn report(loaded: &Loaded, force: bool) -> Result<CommandOutput> {
    let mut exit = EXIT_OK;
    let mut summary = Vec::new();
    let mut report = json!({ "command": "report" });
    let mut steps: Vec<(&str, CommandKind)> = vec![("check_space", CommandKind::CheckSpace)];
    if loaded.config.check.is_some() {
        steps.push(("check_contraction", CommandKind::CheckContraction));
    }
    if loaded.config.solve.is_some() {
        steps.push(("solve", CommandKind::Solve));
    }
    for (key, kind) in steps {
        match run(kind, loaded, force) {
            Ok(out) => {
                exit = exit.max(out.exit);
                summary.extend(out.summary.into_iter().map(|l| format!("[{key}] {l}")));
                report[key] = out.report;
            }
            Err(err) if exit_code(&err) == EXIT_FAILED => {
                exit = exit.max(EXIT_FAILED);
                summary.push(format!("[{key}] {err}"));
                report[key] = json!({ "error": err.to_string() });
            }
            Err(err) => return Err(err),
        }
    }
    report["passed"] = json!(exit == EXIT_OK);
    Ok(CommandOutput {
        exit,
        summary,
        report,
        trace_csv: None,
    })
}

/// Sorted-key pretty JSON with a trailing newline.
pub fn render_json(value: &Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes the report (or the CSV trace, when the format asks for it and the
/// command produced one) to `out`, falling back to the config's output path.
pub fn write_output(
    loaded: &Loaded,
    output: &CommandOutput,
    out: Option<&Path>,
) -> Result<Option<PathBuf>> {
    let configured = loaded.config.output.as_ref();
    let Some(path) = out
        .map(Path::to_path_buf)
        .or_else(|| configured.and_then(|o| o.path.clone()))
    else {
        return Ok(None);
    };
    let csv = configured.map(|o| o.format) == Some(OutputFormat::Csv);
    let text = match (&output.trace_csv, csv) {
        (Some(trace), true) => trace.clone(),
        _ => render_json(&output.report)?,
    };
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(Some(path))
}
