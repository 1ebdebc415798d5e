//! The `flag-gluer` command line. Every command prints one JSON document (or
//! JSON lines for `trace`) with sorted keys, so identical inputs give
//! byte-identical output.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or parse error,
//! 3 numerical failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::flags::{ProjMatrix, Vec4};
use crate::geometry;
use crate::monodromy::{self, Cochain, MonodromyComplex, PathSpec};
use crate::params::{parse_slot, ParamSet};
use crate::solver::{self, parse_pin, ResidualSystem, SolveOptions, SolveResult, Status, Variable};
use crate::triangulation::Triangulation;

pub const SCHEMA: &str = "flag-gluer/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "flag-gluer", version, about = "Real projective gluing equations on ideal triangulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Edge classes, face classes, cusps and system sizes of a triangulation.
    Info(InfoArgs),
    /// Evaluates every residual of a parameter file.
    Check(CheckArgs),
    /// Solves the gluing equations.
    Solve(SolveArgs),
    /// Follows a one-parameter family of solutions.
    Trace(TraceArgs),
    /// Classifies tetrahedra into hyperbolic, Anti-de Sitter, half-pipe or none.
    Classify(ClassifyArgs),
    /// Holonomy along a closed path or around a cusp.
    Holonomy(HolonomyArgs),
    /// Places copies of tetrahedra by developing across faces.
    Develop(DevelopArgs),
    /// Checks every 2-cell boundary and reports the edge matrices.
    Cocycle(CocycleArgs),
}

#[derive(Args, Debug)]
pub struct TriArgs {
    /// Triangulation file.
    pub triangulation: PathBuf,
    /// Treat every edge as a manifold edge, ignoring cone orders in the file.
    #[arg(long)]
    pub manifold: bool,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    #[command(flatten)]
    pub tri: TriArgs,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    /// Parameter file.
    pub params: PathBuf,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Initial parameters; all ones when absent.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Enables random restarts after a failed first attempt.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Holds a variable fixed, as `tet0:e12=2`, `0:(12)3=2` or `face1:g=1`.
    #[arg(long = "pin", value_name = "NAME=VALUE")]
    pub pins: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also writes the solution as a parameter file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// The variable that is moved, e.g. `tet0:e12`.
    #[arg(long)]
    pub vary: String,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    pub params: PathBuf,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct HolonomyArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    pub params: PathBuf,
    /// A closed path: a start `<tet>:(ij)k` followed by `rot+`, `rot-`,
    /// `flip` and `glue` tokens.
    #[arg(long, conflicts_with = "cusp", required_unless_present = "cusp")]
    pub path: Option<String>,
    /// Reports independent peripheral loops of this cusp instead.
    #[arg(long)]
    pub cusp: Option<usize>,
    /// Number of peripheral loops to report.
    #[arg(long, default_value_t = 3)]
    pub loops: usize,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct DevelopArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    pub params: PathBuf,
    /// Base vertex `<tet>:(ij)k`.
    #[arg(long, default_value = "0:(12)3")]
    pub base: String,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct CocycleArgs {
    #[command(flatten)]
    pub tri: TriArgs,
    pub params: PathBuf,
    #[arg(long, env = "FLAG_GLUER_TOL", default_value_t = 1e-9)]
    pub tol: f64,
}

/// Runs the command line with the process's standard streams.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "flag-gluer: {e}");
            exit_code(&e)
        }
    }
}

/// The exit code a library error maps to.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Triangulation(_) | Error::Params(_) | Error::Path(_) | Error::Io { .. } => EXIT_USAGE,
        Error::Cocycle(_) => EXIT_CHECK_FAILED,
        Error::Degenerate(_) | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Info(a) => info(a, out),
        Command::Check(a) => check(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Trace(a) => trace(a, out),
        Command::Classify(a) => classify(a, out),
        Command::Holonomy(a) => holonomy(a, out),
        Command::Develop(a) => develop(a, out),
        Command::Cocycle(a) => cocycle(a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn load_triangulation(a: &TriArgs) -> Result<Triangulation> {
    let tri = Triangulation::from_json(&read(&a.triangulation)?)?;
    Ok(if a.manifold { tri.as_manifold() } else { tri })
}

fn load_params(tri: &Triangulation, path: &Path) -> Result<ParamSet> {
    ParamSet::from_json(&read(path)?, tri)
}

/// Wraps a report with the schema tag and writes it as one JSON document.
fn emit(out: &mut dyn Write, command: &str, mut body: Value, pretty: bool) -> Result<()> {
    let map = body.as_object_mut().expect("reports are objects");
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("command".into(), json!(command));
    let text = if pretty { serde_json::to_string_pretty(&body) } else { serde_json::to_string(&body) }
        .expect("reports serialize");
    match writeln!(out, "{text}") {
        // A closed pipe (`| head`) is the reader's choice, not a failure.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn params_json(tri: &Triangulation, ps: &ParamSet) -> Value {
    serde_json::to_value(ps.to_file(tri)).expect("parameters serialize")
}

fn matrix_json(m: &ProjMatrix) -> Result<Value> {
    let n = ProjMatrix(m.normal_form()?);
    Ok(json!({ "row_major": n.row_major(), "scale_normalized": true }))
}

fn info(a: &InfoArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let complex = MonodromyComplex::new(&tri);
    let system = ResidualSystem::assemble(&tri, &[])?;
    let face_classes: Vec<Value> = tri
        .face_classes()
        .iter()
        .map(|fc| {
            json!({
                "id": fc.id,
                "canonical": format!("{}:{}", fc.canonical.0, fc.canonical.1),
                "partner": format!("{}:{}", fc.partner.0, fc.partner.1),
            })
        })
        .collect();
    let body = json!({
        "num_tetrahedra": tri.num_tets(),
        "edges": tri.edge_cycles(),
        "face_classes": face_classes,
        "cusps": tri.vertex_classes(),
        "complex": {
            "vertices": complex.num_vertices,
            "red_edges": complex.num_red,
            "blue_edges": complex.num_blue,
            "green_edges": complex.num_green,
            "triangles": complex.count(monodromy::CellKind::Triangle),
            "quadrilaterals": complex.count(monodromy::CellKind::Quadrilateral),
            "hexagons": complex.count(monodromy::CellKind::Hexagon),
            "edge_polygons": complex.count(monodromy::CellKind::EdgePolygon),
        },
        "variables": system.variables().iter().map(Variable::to_string).collect::<Vec<_>>(),
        "residuals": system.residual_names(),
    });
    emit(out, "info", body, true)?;
    Ok(EXIT_OK)
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let ps = load_params(&tri, &a.params)?;
    let system = ResidualSystem::assemble(&tri, &[])?;
    let values = system.evaluate(&ps)?;
    let names = system.residual_names();
    let residuals: BTreeMap<&str, f64> = names.iter().map(String::as_str).zip(values.iter().copied()).collect();
    let failing: Vec<&str> =
        names.iter().zip(&values).filter(|(_, v)| v.is_nan() || v.abs() > a.tol).map(|(n, _)| n.as_str()).collect();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pass = failing.is_empty();
    let body = json!({
        "pass": pass,
        "tol": a.tol,
        "max_abs_residual": max_abs,
        "residual_norm": values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        "failing": failing,
        "residuals": residuals,
    });
    emit(out, "check", body, true)?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn solver_setup(tri: &Triangulation, a: &SolverArgs) -> Result<(ResidualSystem, ParamSet, SolveOptions)> {
    let pins = a.pins.iter().map(|p| parse_pin(p)).collect::<Result<Vec<_>>>()?;
    let system = ResidualSystem::assemble(tri, &pins)?;
    let init = match &a.init {
        Some(p) => load_params(tri, p)?,
        None => ParamSet::all_ones(tri),
    };
    let opts = SolveOptions { tol: a.tol, max_iter: a.max_iter, seed: a.seed, ..SolveOptions::default() };
    Ok((system.clone(), system.pinned(&init), opts))
}

fn result_json(tri: &Triangulation, r: &SolveResult) -> Value {
    json!({
        "status": r.status,
        "residual_norm": r.residual_norm,
        "iterations": r.iterations,
        "jacobian_rank": r.jacobian_rank,
        "params": params_json(tri, &r.params),
    })
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let (system, init, opts) = solver_setup(&tri, &a.solver)?;
    let r = solver::solve(&system, &init, &opts)?;
    if let Some(path) = &a.out {
        std::fs::write(path, r.params.to_json(&tri) + "\n")
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    }
    let mut body = result_json(&tri, &r);
    body["pins"] = json!(system.pins().iter().map(|(v, x)| (v.to_string(), *x)).collect::<BTreeMap<_, _>>());
    emit(out, "solve", body, true)?;
    Ok(if r.status == Status::Converged { EXIT_OK } else { EXIT_NUMERICAL })
}

fn trace(a: &TraceArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let (system, init, opts) = solver_setup(&tri, &a.solver)?;
    let vary: Variable = a.vary.parse()?;
    let t = solver::trace(&system, &init, vary, a.from, a.to, a.steps, &opts)?;
    for (k, step) in t.steps.iter().enumerate() {
        let mut body = result_json(&tri, &step.result);
        body["step"] = json!(k);
        body["variable"] = json!(vary.to_string());
        body["value"] = json!(step.value);
        emit(out, "trace", body, false)?;
    }
    match t.breakdown {
        None => Ok(EXIT_OK),
        Some(b) => {
            emit(out, "trace", json!({ "breakdown": b }), false)?;
            Ok(EXIT_NUMERICAL)
        }
    }
}

fn classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let ps = load_params(&tri, &a.params)?;
    let c = geometry::classify(&tri, &ps, a.tol)?;
    let mut body = serde_json::to_value(&c).expect("classification serializes");
    body["tol"] = json!(a.tol);
    emit(out, "classify", body, true)?;
    Ok(EXIT_OK)
}

/// The flag fixed by peripheral holonomy: the point `[1,0,0,0]` on the plane
/// `[0,1,0,0]*`.
fn base_flag() -> (Vec4, Vec4) {
    (Vec4::new(1.0, 0.0, 0.0, 0.0), Vec4::new(0.0, 1.0, 0.0, 0.0))
}

fn holonomy(a: &HolonomyArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let ps = load_params(&tri, &a.params)?;
    let complex = MonodromyComplex::new(&tri);
    let cochain = Cochain::new(&tri, &ps)?;
    let (point, plane) = base_flag();
    let body = match (&a.path, a.cusp) {
        (Some(path), _) => {
            let path: PathSpec = path.parse()?;
            let m = cochain.holonomy(&complex, &path, a.tol)?;
            json!({
                "path": path.to_string(),
                "matrix": matrix_json(&m)?,
                "distance_to_identity": m.distance_to_identity(),
            })
        }
        (None, Some(cusp)) => {
            let loops = cochain.independent_peripheral_loops(cusp, a.loops)?;
            let mut entries = Vec::new();
            for l in &loops {
                let m = cochain.holonomy(&complex, l, a.tol)?;
                entries.push(json!({
                    "path": l.to_string(),
                    "matrix": matrix_json(&m)?,
                    "flag_displacement": m.flag_displacement(&point, &plane),
                }));
            }
            json!({ "cusp": cusp, "loops": entries })
        }
        (None, None) => unreachable!("clap requires --path or --cusp"),
    };
    emit(out, "holonomy", body, true)?;
    Ok(EXIT_OK)
}

fn develop(a: &DevelopArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let ps = load_params(&tri, &a.params)?;
    let complex = MonodromyComplex::new(&tri);
    let cochain = Cochain::new(&tri, &ps)?;
    let base = parse_slot(&a.base)?;
    let copies = cochain.develop(&complex, base, a.depth, a.tol)?;
    let body = json!({
        "base": a.base,
        "depth": a.depth,
        "face_mismatch": monodromy::develop_mismatch(&copies),
        "copies": copies,
    });
    emit(out, "develop", body, true)?;
    Ok(EXIT_OK)
}

fn cocycle(a: &CocycleArgs, out: &mut dyn Write) -> Result<i32> {
    let tri = load_triangulation(&a.tri)?;
    let ps = load_params(&tri, &a.params)?;
    let complex = MonodromyComplex::new(&tri);
    let cochain = Cochain::new(&tri, &ps)?;
    let report = cochain.verify(&complex, a.tol);
    let failing: Vec<&str> = report.failing().iter().map(|c| c.label.as_str()).collect();
    let body = json!({
        "pass": report.pass,
        "tol": a.tol,
        "failing": failing,
        "cells": report.cells,
        "edge_matrices": cochain.edge_matrices(),
    });
    emit(out, "cocycle", body, true)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("flag-gluer").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&[]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = run_str(&["info", "/nonexistent/file.tri"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("/nonexistent/file.tri"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("solve"));
    }

    #[test]
    fn error_kinds_map_to_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Cocycle("x".into())), EXIT_CHECK_FAILED);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
    }
}
