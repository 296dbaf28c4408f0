//! Command-line front end: subcommands `constants`, `fiber`, `extremal`,
//! `nehari`, `phase`, `bnlimit`, each emitting JSON records and/or CSV tables.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a run finishes with
//! flagged diagnostics (non-converged solves, suspect branches). Failures
//! print a JSON error record; output files are written in one shot, never
//! partially. A JSON config file can predefine any of the shared parameters;
//! explicit flags override it. Same config and seed means byte-identical
//! output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::constants::sobolev_constant;
use crate::fiber::{FiberInput, ProblemParams, classify_fiber};
use crate::mesh::{Grading, RadialMesh};
use crate::solvers::{
    ExtremalOptions, LambdaPolicy, NehariConfig, PhaseGrid, continuation_b_to_zero,
    extremal_lambda, extremal_lambda0, global_minimize, nehari_minus_minimize, phase_diagram,
    second_solution_gate, standard_starts,
};

#[derive(Parser, Debug)]
#[command(
    name = "kirchhoff-fiber",
    about = "Fiber-map analysis and Nehari minimization for the critical Kirchhoff problem",
    version
)]
pub struct Cli {
    /// JSON config file with default parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Emit machine-readable JSON where a table would be printed.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output path for the primary artifact (JSON or CSV per subcommand).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of mesh intervals.
    #[arg(long = "mesh-size", global = true)]
    pub mesh_size: Option<usize>,
    /// Node layout: `uniform` or `refined`.
    #[arg(long, global = true)]
    pub grading: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sobolev and critical constants plus the hyperbola table.
    Constants(ConstantsArgs),
    /// Classify one fiber map from its norm data.
    Fiber(FiberArgs),
    /// Upper bounds for the extremal parameters lambda0* and lambda*.
    Extremal(ParamArgs),
    /// Branch level c^-, global minimizer, and the second-solution gate.
    Nehari(ParamArgs),
    /// Regime diagram over an (a, b) grid.
    Phase(PhaseArgs),
    /// Continuation of the branch along b decreasing to zero.
    Bnlimit(BnlimitArgs),
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[arg(long = "N")]
    pub n: Option<u32>,
    /// Comma-separated `a` values for the hyperbola table.
    #[arg(long = "a-values", value_delimiter = ',')]
    pub a_values: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct FiberArgs {
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Squared gradient norm of the direction.
    #[arg(long = "A")]
    pub grad_sq: f64,
    /// Critical integral of the direction.
    #[arg(long = "C")]
    pub crit_int: f64,
    /// Subcritical integral of the direction.
    #[arg(long = "P")]
    pub pert_int: f64,
    /// Write a `t,psi,dpsi` sample CSV here.
    #[arg(long = "samples-out")]
    pub samples_out: Option<PathBuf>,
    #[arg(long, default_value_t = 600)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct ParamArgs {
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long = "n-starts")]
    pub n_starts: Option<usize>,
    /// Write the minimizer (or argmin direction) as an `r,value` CSV here.
    #[arg(long = "minimizer-out")]
    pub minimizer_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Range syntax `lo:hi:count` (inclusive linspace).
    #[arg(long = "a-range")]
    pub a_range: String,
    #[arg(long = "b-range")]
    pub b_range: String,
    /// `skip` or `estimate` (lambda0* per admissible cell).
    #[arg(long = "lambda-policy", default_value = "skip")]
    pub lambda_policy: String,
}

#[derive(Args, Debug)]
pub struct BnlimitArgs {
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated non-increasing Kirchhoff coefficients, e.g.
    /// `2e-4,1e-4,0`; values must sit below the C2 hyperbola for the branch
    /// to survive to the limit.
    #[arg(long = "b-seq", value_delimiter = ',')]
    pub b_seq: Vec<f64>,
}

/// Defaults that a `--config` file may override; flags beat both.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub mesh_size: Option<usize>,
    pub grading: Option<String>,
    pub seed: Option<u64>,
    pub n_starts: Option<usize>,
    /// Descent stopping tolerances for the minimizing subcommands.
    pub grad_tol: Option<f64>,
    pub level_tol: Option<f64>,
    pub max_iter: Option<usize>,
}

struct Resolved {
    n: u32,
    a: f64,
    b: f64,
    lambda: f64,
    p: f64,
    mesh_size: usize,
    grading: Grading,
    seed: u64,
    n_starts: usize,
    nehari_cfg: NehariConfig,
    json: bool,
    out: Option<PathBuf>,
}

fn fail(code: u8, message: impl std::fmt::Display) -> u8 {
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "error": message.to_string() })).unwrap()
    );
    code
}

/// Formats a float with 17 significant digits so CSV output round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses the `lo:hi:count` range syntax into an inclusive linspace.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range `{spec}` is not of the form lo:hi:count"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("bad range start: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("bad range end: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad range count: {e}"))?;
    if count == 0 {
        return Err("range count must be positive".into());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// One row of the `phase` CSV, parsed back.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub a: f64,
    pub b: f64,
    pub product: f64,
    pub regime: String,
    pub regime_mesh: String,
    pub nehari_empty_at_lambda0: bool,
    pub phi0_negative_found: bool,
    pub lambda0_star_est: Option<f64>,
    pub error: Option<String>,
}

pub const PHASE_CSV_HEADER: &str =
    "a,b,product,regime,regime_mesh,nehari_empty_at_lambda0,phi0_negative_found,lambda0_star_est,error";

/// Parses the `phase` CSV emitted by this module.
pub fn parse_phase_csv(text: &str) -> Result<Vec<PhaseRow>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PHASE_CSV_HEADER) {
        return Err("unexpected phase CSV header".into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(9, ',').collect();
        if cols.len() != 9 {
            return Err(format!("phase CSV row {} has {} columns", i + 2, cols.len()));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2));
        rows.push(PhaseRow {
            a: f(cols[0])?,
            b: f(cols[1])?,
            product: f(cols[2])?,
            regime: cols[3].to_string(),
            regime_mesh: cols[4].to_string(),
            nehari_empty_at_lambda0: cols[5].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            phi0_negative_found: cols[6].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            lambda0_star_est: if cols[7].is_empty() { None } else { Some(f(cols[7])?) },
            error: if cols[8].is_empty() { None } else { Some(cols[8].to_string()) },
        });
    }
    Ok(rows)
}

/// One row of the `bnlimit` branch table, parsed back.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub b: f64,
    pub level: f64,
    pub t_projection: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_residual: f64,
}

pub const BRANCH_CSV_HEADER: &str = "b,level,t_projection,iterations,converged,grad_residual";

/// Parses the `bnlimit` CSV emitted by this module.
pub fn parse_branch_csv(text: &str) -> Result<Vec<BranchRow>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(BRANCH_CSV_HEADER) {
        return Err("unexpected branch CSV header".into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(format!("branch CSV row {} has {} columns", i + 2, cols.len()));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2));
        rows.push(BranchRow {
            b: f(cols[0])?,
            level: f(cols[1])?,
            t_projection: f(cols[2])?,
            iterations: cols[3].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            converged: cols[4].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            grad_residual: f(cols[5])?,
        });
    }
    Ok(rows)
}

/// Entry point used by both `main` and the test suites.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not failures.
            return if e.use_stderr() {
                eprintln!("{e}");
                1
            } else {
                print!("{e}");
                0
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err((code, msg)) => fail(code, msg),
    }
}

type CmdResult = Result<u8, (u8, String)>;

fn dispatch(cli: Cli) -> CmdResult {
    let config: RunConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (1, format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| (1, format!("bad config: {e}")))?
        }
        None => RunConfig::default(),
    };
    let grading_str = cli
        .grading
        .clone()
        .or(config.grading.clone())
        .unwrap_or_else(|| "refined".into());
    let grading: Grading = grading_str.parse().map_err(|e| (1, format!("{e}")))?;
    let resolved = |n: Option<u32>,
                    a: Option<f64>,
                    b: Option<f64>,
                    lambda: Option<f64>,
                    p: Option<f64>,
                    n_starts: Option<usize>| {
        let defaults = NehariConfig::default();
        Resolved {
            n: n.or(config.n).unwrap_or(5),
            a: a.or(config.a).unwrap_or(1.0),
            b: b.or(config.b).unwrap_or(0.0),
            lambda: lambda.or(config.lambda).unwrap_or(0.0),
            p: p.or(config.p).unwrap_or(3.0),
            mesh_size: cli.mesh_size.or(config.mesh_size).unwrap_or(256),
            grading,
            seed: cli.seed.or(config.seed).unwrap_or(0),
            n_starts: n_starts.or(config.n_starts).unwrap_or(8),
            nehari_cfg: NehariConfig {
                max_iter: config.max_iter.unwrap_or(defaults.max_iter),
                level_tol: config.level_tol.unwrap_or(defaults.level_tol),
                grad_tol: config.grad_tol.unwrap_or(defaults.grad_tol),
            },
            json: cli.json,
            out: cli.out.clone(),
        }
    };
    match &cli.command {
        Command::Constants(args) => {
            cmd_constants(args, resolved(args.n, None, None, None, None, None))
        }
        Command::Fiber(args) => {
            cmd_fiber(args, resolved(args.n, args.a, args.b, args.lambda, args.p, None))
        }
        Command::Extremal(args) => cmd_extremal(
            args,
            resolved(args.n, args.a, args.b, args.lambda, args.p, args.n_starts),
        ),
        Command::Nehari(args) => cmd_nehari(
            args,
            resolved(args.n, args.a, args.b, args.lambda, args.p, args.n_starts),
        ),
        Command::Phase(args) => cmd_phase(args, resolved(args.n, None, None, None, args.p, None)),
        Command::Bnlimit(args) => {
            cmd_bnlimit(args, resolved(args.n, Some(1.0), None, args.lambda, args.p, None))
        }
    }
}

fn emit(r: &Resolved, contents: String) -> CmdResult {
    match &r.out {
        Some(path) => {
            write_artifact(path, &contents).map_err(|e| (1, e))?;
            Ok(0)
        }
        None => {
            print!("{contents}");
            Ok(0)
        }
    }
}

fn cmd_constants(args: &ConstantsArgs, r: Resolved) -> CmdResult {
    let consts = sobolev_constant(r.n).map_err(|e| (1, e.to_string()))?;
    let a_values = if args.a_values.is_empty() { vec![1.0] } else { args.a_values.clone() };
    if r.json {
        let hyperbolas: Vec<_> = a_values
            .iter()
            .map(|&a| {
                json!({
                    "a": a,
                    "b_on_c1": consts.b_on_hyperbola(consts.c1, a),
                    "b_on_c2": consts.b_on_hyperbola(consts.c2, a),
                })
            })
            .collect();
        let record = json!({
            "N": r.n,
            "two_star": consts.two_star,
            "S_N": consts.sobolev,
            "omega_N": consts.omega_n,
            "C1": consts.c1,
            "C2": consts.c2,
            "ratio_c1_c2": consts.ratio_c1_c2(),
            "hyperbolas": hyperbolas,
        });
        return emit(&r, format!("{}\n", serde_json::to_string_pretty(&record).unwrap()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "N        = {}", r.n);
    let _ = writeln!(out, "2*       = {}", consts.two_star);
    let _ = writeln!(out, "S_N      = {}", consts.sobolev);
    let _ = writeln!(out, "omega_N  = {}", consts.omega_n);
    let _ = writeln!(out, "C1       = {:e}", consts.c1);
    let _ = writeln!(out, "C2       = {:e}", consts.c2);
    let _ = writeln!(
        out,
        "C1/C2    = {}  (closed form {})",
        consts.c1 / consts.c2,
        consts.ratio_c1_c2()
    );
    let _ = writeln!(out, "{:>12} {:>24} {:>24}", "a", "b on C1 hyperbola", "b on C2 hyperbola");
    for &a in &a_values {
        let _ = writeln!(
            out,
            "{:>12.6} {:>24e} {:>24e}",
            a,
            consts.b_on_hyperbola(consts.c1, a),
            consts.b_on_hyperbola(consts.c2, a)
        );
    }
    emit(&r, out)
}

fn cmd_fiber(args: &FiberArgs, r: Resolved) -> CmdResult {
    let params =
        ProblemParams::new(r.n, r.a, r.b, r.lambda, r.p).map_err(|e| (1, e.to_string()))?;
    let input = FiberInput::unchecked(args.grad_sq, args.crit_int, args.pert_int, params);
    let report = classify_fiber(&input).map_err(|e| (1, e.to_string()))?;
    let ts = params.two_star();
    let consts = params.constants();
    let sobolev_consistent = args.crit_int
        <= consts.sobolev.powf(-ts / 2.0) * args.grad_sq.powf(ts / 2.0) * (1.0 + 1e-9);
    if let Some(path) = &args.samples_out {
        let t_ref = report
            .t_minus
            .or(report.t_degenerate)
            .unwrap_or((params.a * args.grad_sq / args.crit_int).powf(1.0 / (ts - 2.0)));
        let mut csv = String::from("t,psi,dpsi\n");
        let count = args.samples.max(2);
        let (lo, hi) = (1e-2 * t_ref, 1e2 * t_ref);
        let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
        let mut t = lo;
        for _ in 0..count {
            let _ = writeln!(
                csv,
                "{},{},{}",
                fmt_f64(t),
                fmt_f64(input.psi(t)),
                fmt_f64(input.dpsi(t))
            );
            t *= ratio;
        }
        write_artifact(path, &csv).map_err(|e| (1, e))?;
    }
    let record = json!({
        "params": params,
        "input": { "A": args.grad_sq, "C": args.crit_int, "P": args.pert_int },
        "sobolev_consistent": sobolev_consistent,
        "report": report,
    });
    emit(&r, format!("{}\n", serde_json::to_string_pretty(&record).unwrap()))
}

fn cmd_extremal(args: &ParamArgs, r: Resolved) -> CmdResult {
    let params = ProblemParams::new(r.n, r.a, r.b, 0.0, r.p).map_err(|e| (1, e.to_string()))?;
    let mesh =
        Arc::new(RadialMesh::new(r.n, r.mesh_size, r.grading).map_err(|e| (1, e.to_string()))?);
    let opts = ExtremalOptions { n_starts: r.n_starts, seed: r.seed, ..Default::default() };
    let l0 = extremal_lambda0(&params, &mesh, &opts).map_err(|e| (1, e.to_string()))?;
    let mut opts1 = opts.clone();
    opts1.extra_starts.push(l0.argmin.clone());
    let l1 = extremal_lambda(&params, &mesh, &opts1).map_err(|e| (1, e.to_string()))?;
    if let Some(path) = &args.minimizer_out {
        write_artifact(path, &l0.argmin.to_csv()).map_err(|e| (1, e))?;
    }
    let record = json!({
        "params": params,
        "lambda0_star_upper": l0.summary(),
        "lambda_star_upper": l1.summary(),
        "ordered": l1.lambda_upper < l0.lambda_upper,
    });
    emit(&r, format!("{}\n", serde_json::to_string_pretty(&record).unwrap()))?;
    Ok(if l1.lambda_upper < l0.lambda_upper { 0 } else { 2 })
}

fn cmd_nehari(args: &ParamArgs, r: Resolved) -> CmdResult {
    let params =
        ProblemParams::new(r.n, r.a, r.b, r.lambda, r.p).map_err(|e| (1, e.to_string()))?;
    let mesh =
        Arc::new(RadialMesh::new(r.n, r.mesh_size, r.grading).map_err(|e| (1, e.to_string()))?);
    let cfg = r.nehari_cfg;
    let mut best: Option<crate::solvers::NehariResult> = None;
    for start in standard_starts(&mesh, r.n_starts, r.seed) {
        match nehari_minus_minimize(&params, &mesh, &start, &cfg) {
            Ok(res) => {
                if best.as_ref().is_none_or(|b| res.level < b.level) {
                    best = Some(res);
                }
            }
            Err(crate::solvers::SolverError::NehariEmptyAlongStart) => continue,
            Err(e) => return Err((1, e.to_string())),
        }
    }
    let minus = best.ok_or((2, "Nehari branch empty along every start direction".to_string()))?;

    let global = if params.b > 0.0 {
        // Seed the descent at the fiber global minimum of the best direction
        // when it exists.
        let input = minus.minimizer.fiber_input(&params);
        let seed_fn = match classify_fiber(&input) {
            Ok(rep) if rep.t_plus.is_some() => minus.minimizer.scaled(rep.t_plus.unwrap()),
            _ => minus.minimizer.scaled(0.1),
        };
        Some(global_minimize(&params, &mesh, &seed_fn, &cfg).map_err(|e| (1, e.to_string()))?)
    } else {
        None
    };
    let gate = if params.b > 0.0 {
        Some(second_solution_gate(&params, &mesh, r.seed).map_err(|e| (1, e.to_string()))?)
    } else {
        None
    };
    if let Some(path) = &args.minimizer_out {
        write_artifact(path, &minus.minimizer.to_csv()).map_err(|e| (1, e))?;
    }
    let flagged = !minus.converged
        || minus.suspect_branch
        || minus.near_degenerate_level
        || global.as_ref().is_some_and(|g| !g.converged)
        || gate.as_ref().is_some_and(|g| !g.consistent);
    let record = json!({
        "params": params,
        "nehari_minus": minus.summary(),
        "global": global.map(|g| g.summary()),
        "gate": gate,
        // Whether the branch level coincides with the mountain-pass level is
        // open; only the branch value is computed here.
        "note": "second-solution level is the N^- branch value; equality with the mountain-pass level is an open question",
    });
    emit(&r, format!("{}\n", serde_json::to_string_pretty(&record).unwrap()))?;
    Ok(if flagged { 2 } else { 0 })
}

fn cmd_phase(args: &PhaseArgs, r: Resolved) -> CmdResult {
    let base = ProblemParams::new(r.n, 1.0, 0.0, 0.0, r.p).map_err(|e| (1, e.to_string()))?;
    let a_values = parse_range(&args.a_range).map_err(|e| (1, e))?;
    let b_values = parse_range(&args.b_range).map_err(|e| (1, e))?;
    let policy = match args.lambda_policy.as_str() {
        "skip" => LambdaPolicy::Skip,
        "estimate" => LambdaPolicy::Estimate,
        other => return Err((1, format!("unknown lambda policy `{other}`"))),
    };
    let mesh =
        Arc::new(RadialMesh::new(r.n, r.mesh_size, r.grading).map_err(|e| (1, e.to_string()))?);
    let grid = PhaseGrid { a_values, b_values };
    let cells =
        phase_diagram(&base, &grid, policy, &mesh, r.seed).map_err(|e| (1, e.to_string()))?;
    let mut csv = format!("{PHASE_CSV_HEADER}\n");
    let mut failures = 0usize;
    for c in &cells {
        if c.error.is_some() {
            failures += 1;
        }
        let _ = writeln!(
            csv,
            "{},{},{},{:?},{:?},{},{},{},{}",
            fmt_f64(c.a),
            fmt_f64(c.b),
            fmt_f64(c.product),
            c.regime,
            c.regime_mesh,
            c.nehari_empty_at_lambda0,
            c.phi0_negative_found,
            c.lambda0_star_est.map(fmt_f64).unwrap_or_default(),
            c.error.clone().unwrap_or_default(),
        );
    }
    emit(&r, csv)?;
    Ok(if failures > 0 { 2 } else { 0 })
}

fn cmd_bnlimit(args: &BnlimitArgs, r: Resolved) -> CmdResult {
    if args.b_seq.is_empty() {
        return Err((1, "bnlimit needs --b-seq".into()));
    }
    let base = ProblemParams::new(r.n, 1.0, args.b_seq[0], r.lambda, r.p)
        .map_err(|e| (1, e.to_string()))?;
    let mesh =
        Arc::new(RadialMesh::new(r.n, r.mesh_size, r.grading).map_err(|e| (1, e.to_string()))?);
    let cfg = r.nehari_cfg;
    let outcome =
        continuation_b_to_zero(&base, &args.b_seq, &mesh, &cfg).map_err(|e| (1, e.to_string()))?;
    let mut csv = format!("{BRANCH_CSV_HEADER}\n");
    for step in &outcome.steps {
        let s = step.result.summary();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(step.b),
            fmt_f64(s.level),
            fmt_f64(s.t_projection),
            s.iterations,
            s.converged,
            fmt_f64(s.grad_residual),
        );
    }
    match &r.out {
        Some(path) => write_artifact(path, &csv).map_err(|e| (1, e))?,
        None => print!("{csv}"),
    }
    let summary = outcome.summary();
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    let ok = outcome.completed
        && outcome.steps.iter().all(|s| s.result.converged)
        && summary.limit_verification.is_some_and(|v| v.pde_residual <= 1e-6);
    Ok(if ok { 0 } else { 2 })
}

pub fn main_entry() -> u8 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("2:5:1").unwrap(), vec![2.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("a:2:3").is_err());
        assert!(parse_range("1:2:0").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [1.0, -0.1, std::f64::consts::PI, 4.555e-4, 1.0 / 3.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
