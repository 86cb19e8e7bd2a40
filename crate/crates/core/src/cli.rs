//! Command-line front end behind the `dn` binary.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or a numerical
//! error during a run, 2 on usage or configuration errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::acceptance::{self, AcceptanceConfig};
use crate::catalog::{self, residual_report, CatalogEntry};
use crate::diffops::{casoratian, periodicity_defect};
use crate::equations::{
    bind_params, relation_quartic_defect, solution_avoid, DifferenceEquation, EquationFile, FunctionFile,
    TOL_RELATION, TOL_RESIDUAL,
};
use crate::error::Error;
use crate::expr::{parse, parse_with, Bindings, Expr};
use crate::grid::{regular_points, seed_from_env, GUARD};
use crate::limits::{
    default_schedule, geometric_schedule, limit_csv, EpsFamily, LimitExperiment, LimitReport, Scaling,
};
use crate::meromorphic::{MeromorphicFunction, Rect, SingularityLedger};
use crate::nevanlinna::{characteristic_csv, characteristic_t, growth_ratio, radii, DEFAULT_NODES};
use crate::report::{growth_csv, residual_csv, write_file, AxisScale, Plot, Series};

#[derive(Debug, Parser)]
#[command(name = "dn", version, about = "Verify solutions of (Δf)² = A(f(z)f(z+1) − B) and related identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Residual suite for an equation and its solutions.
    Verify(Common),
    /// Characteristic tables and growth ratios.
    Nevanlinna(Common),
    /// Casoratian periodicity and the quartic relation for a solution pair.
    Casoratian(Common),
    /// Continuous-limit experiments.
    Limit(Common),
    /// Runs every acceptance criterion.
    ReportAll(Common),
    /// Lists the catalog.
    List,
}

#[derive(Debug, Args, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<String>,
    /// Parameter binding `name=expression`, repeatable.
    #[arg(long = "param", value_name = "NAME=EXPR")]
    params: Vec<String>,
    #[arg(long)]
    equation: Option<PathBuf>,
    /// Solution file, repeatable.
    #[arg(long = "solution")]
    solutions: Vec<PathBuf>,
    /// `a..b` or `a..b:n`.
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    eps_ratio: Option<f64>,
    #[arg(long)]
    eps_steps: Option<usize>,
    /// `box:x0,x1,y0,y1:n`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    /// Perturb a coefficient: `A+=c`, `B+=c`, `A*=c` or `B*=c`.
    #[arg(long)]
    mutate: Option<String>,
    /// Add a spurious pole to one catalog ledger before validation.
    #[arg(long)]
    corrupt_ledger: bool,
}

/// Run configuration as read from `--config`. Relative paths are taken
/// relative to the config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present it must name the subcommand being run.
    pub command: Option<String>,
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub equation: Option<PathBuf>,
    #[serde(default)]
    pub solutions: Vec<PathBuf>,
    pub radii: Option<String>,
    pub nodes: Option<usize>,
    pub eps_start: Option<f64>,
    pub eps_ratio: Option<f64>,
    pub eps_steps: Option<usize>,
    pub grid: Option<String>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub mutate: Option<String>,
    #[serde(default)]
    pub corrupt_ledger: bool,
    pub seed: Option<u64>,
    /// Limit experiments: `direct` or `indirect`.
    pub mode: Option<String>,
    /// `Ã(t, eps)` for indirect experiments.
    pub a_tilde: Option<String>,
    /// `B̃(t, eps)` for indirect experiments.
    pub b_tilde: Option<String>,
    /// Candidate `w(t, eps)`.
    pub candidate: Option<String>,
    /// `box:x0,x1,y0,y1:n` or a comma-separated list of `re:im` points.
    pub t_grid: Option<String>,
}

struct Failure {
    code: i32,
    msg: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        msg: e.to_string(),
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        msg: e.to_string(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::List => cmd_list(out),
        Command::Verify(c) => config(c, "verify").and_then(|cfg| cmd_verify(&cfg, out)),
        Command::Nevanlinna(c) => config(c, "nevanlinna").and_then(|cfg| cmd_nevanlinna(&cfg, out)),
        Command::Casoratian(c) => config(c, "casoratian").and_then(|cfg| cmd_casoratian(&cfg, out)),
        Command::Limit(c) => config(c, "limit").and_then(|cfg| cmd_limit(&cfg, out)),
        Command::ReportAll(c) => config(c, "report-all").and_then(|cfg| cmd_report_all(&cfg, out)),
    };
    match result {
        Ok(passed) => i32::from(!passed),
        Err(f) => {
            eprintln!("dn: {}", f.msg);
            f.code
        }
    }
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p
    }
}

/// Merges the config file (if any) with the flags.
fn config(c: Common, command: &str) -> CliResult<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let mut cfg: RunConfig =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            cfg.equation = cfg.equation.map(|p| resolve(&base, p));
            cfg.solutions = cfg.solutions.into_iter().map(|p| resolve(&base, p)).collect();
            cfg
        }
        None => RunConfig::default(),
    };
    for p in &c.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| usage(format!("--param expects name=expression, got `{p}`")))?;
        cfg.params.insert(k.trim().to_string(), v.trim().to_string());
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if c.$f.is_some() { cfg.$f = c.$f.clone(); } )* };
    }
    take!(catalog, equation, radii, nodes, eps_start, eps_ratio, eps_steps, grid, out, tol, mutate);
    if !c.solutions.is_empty() {
        cfg.solutions = c.solutions.clone();
    }
    cfg.corrupt_ledger |= c.corrupt_ledger;
    match &cfg.command {
        Some(name) if name != command => {
            return Err(usage(format!("config is for `{name}`, not `{command}`")));
        }
        _ => cfg.command = Some(command.to_string()),
    }
    for p in cfg.equation.iter().chain(&cfg.solutions) {
        if !p.exists() {
            return Err(usage(format!("{}: no such file", p.display())));
        }
    }
    if let Some(s) = seed_from_env() {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("dn-out"))
}

fn write(dir: &Path, name: &str, content: &str) -> CliResult<()> {
    write_file(dir, name, content).map_err(runtime)
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("bad number `{s}` in {what}")))
}

/// `box:x0,x1,y0,y1:n`.
pub fn parse_grid_spec(spec: &str) -> std::result::Result<(Rect, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 || parts[0] != "box" {
        return Err(format!("grid spec must look like box:x0,x1,y0,y1:n, got `{spec}`"));
    }
    let v: Vec<f64> = parts[1]
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad box bounds in `{spec}`"))?;
    if v.len() != 4 {
        return Err(format!("box needs four bounds in `{spec}`"));
    }
    let n: usize = parts[2].trim().parse().map_err(|_| format!("bad point count in `{spec}`"))?;
    if n == 0 {
        return Err("grid needs at least one point".into());
    }
    let rect = Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())?;
    Ok((rect, n))
}

/// `a..b` or `a..b:n`, with `0 < a < b`.
pub fn parse_radii_spec(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let (range, n) = match spec.split_once(':') {
        Some((r, n)) => (r, n.trim().parse::<usize>().map_err(|_| format!("bad count in `{spec}`"))?),
        None => (spec, 10),
    };
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| format!("radii must look like a..b[:n], got `{spec}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad radius in `{spec}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad radius in `{spec}`"))?;
    if !(a > 0.0 && b > a && n >= 2) {
        return Err(format!("radii need 0 < a < b and at least two points, got `{spec}`"));
    }
    Ok(radii(a, b, n))
}

fn parse_mutation(spec: &str) -> std::result::Result<(char, char, Complex64), String> {
    let (lhs, value) = spec
        .split_once('=')
        .ok_or_else(|| format!("mutation must look like B+=0.1, got `{spec}`"))?;
    let mut chars = lhs.trim().chars();
    let (target, op) = match (chars.next(), chars.next(), chars.next()) {
        (Some(t @ ('A' | 'B')), Some(o @ ('+' | '*')), None) => (t, o),
        _ => return Err(format!("mutation must look like B+=0.1, got `{spec}`")),
    };
    let v = parse(value)
        .ok()
        .and_then(|e| e.as_const())
        .ok_or_else(|| format!("mutation value must be a constant, got `{value}`"))?;
    Ok((target, op, v))
}

fn mutate(eq: &DifferenceEquation, spec: &str) -> CliResult<DifferenceEquation> {
    let (target, op, v) = parse_mutation(spec).map_err(usage)?;
    let coef = if target == 'A' { &eq.a } else { &eq.b };
    let (expr, ledger) = match op {
        // Poles survive a shift but the zeros move.
        '+' => (Expr::add(coef.expr.clone(), Expr::constant(v)), strip_zeros(&coef.ledger)),
        _ => (Expr::mul(coef.expr.clone(), Expr::constant(v)), coef.ledger.clone()),
    };
    let mutated = MeromorphicFunction::new(format!("{}({spec})", coef.label), expr, ledger);
    let (a, b) = if target == 'A' { (mutated, eq.b.clone()) } else { (eq.a.clone(), mutated) };
    DifferenceEquation::new(a, b, eq.form).map_err(usage)
}

fn strip_zeros(ledger: &SingularityLedger) -> SingularityLedger {
    let entries: Vec<_> = ledger
        .to_entries()
        .into_iter()
        .filter(|e| e.kind() == crate::meromorphic::Kind::Pole)
        .collect();
    SingularityLedger::from_entries(&entries, false).unwrap_or_else(|_| SingularityLedger::poles_only())
}

/// The equation and solutions a command works on.
struct Problem {
    label: String,
    equation: DifferenceEquation,
    solutions: Vec<MeromorphicFunction>,
    entry: Option<CatalogEntry>,
}

fn problem(cfg: &RunConfig) -> CliResult<Problem> {
    match (&cfg.catalog, &cfg.equation) {
        (Some(_), Some(_)) => Err(usage("give either --catalog or --equation, not both")),
        (Some(id), None) => {
            let mut bindings = Bindings::new();
            for (k, v) in &cfg.params {
                bindings.insert(k.clone(), parse(v).map_err(usage)?);
            }
            let entry = catalog::get(id, &bindings).map_err(|e| match e {
                Error::CatalogSelfCheck { .. } => runtime(e),
                other => usage(other),
            })?;
            let mut solutions = entry.solutions.clone();
            for path in &cfg.solutions {
                let file = FunctionFile::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                solutions.push(file.build(&entry.params).map_err(usage)?);
            }
            Ok(Problem {
                label: id.clone(),
                equation: entry.equation.clone(),
                solutions,
                entry: Some(entry),
            })
        }
        (None, Some(path)) => {
            let file = EquationFile::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let mut file = file;
            for (k, v) in &cfg.params {
                file.params.insert(k.clone(), v.clone());
            }
            let (equation, bindings) = file.build().map_err(usage)?;
            let mut solutions = Vec::new();
            for p in &cfg.solutions {
                let f = FunctionFile::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                solutions.push(f.build(&bindings).map_err(usage)?);
            }
            Ok(Problem {
                label: path.display().to_string(),
                equation,
                solutions,
                entry: None,
            })
        }
        (None, None) => {
            // A bare solution list is allowed for commands that need no equation.
            let bindings = bind_params(&cfg.params, &Bindings::new()).map_err(usage)?;
            let mut solutions = Vec::new();
            for p in &cfg.solutions {
                let f = FunctionFile::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                solutions.push(f.build(&bindings).map_err(usage)?);
            }
            if solutions.is_empty() {
                return Err(usage("give --catalog, --equation or --solution"));
            }
            let placeholder = DifferenceEquation::constant(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), crate::equations::Form::Main)
                .map_err(usage)?;
            Ok(Problem {
                label: "solutions".into(),
                equation: placeholder,
                solutions,
                entry: None,
            })
        }
    }
}

fn cmd_list(out: &mut dyn Write) -> CliResult<bool> {
    for info in catalog::list() {
        let _ = writeln!(out, "{}  {}", info.id, info.provenance);
        for p in info.params {
            let _ = writeln!(out, "    {} = {}  ({})", p.name, p.default, p.constraint);
        }
    }
    Ok(true)
}

fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<bool> {
    if cfg.catalog.is_none() && cfg.equation.is_none() {
        return Err(usage("verify needs --catalog or --equation"));
    }
    let mut p = problem(cfg)?;
    if p.solutions.is_empty() {
        return Err(usage("verify needs at least one solution"));
    }
    if let Some(spec) = &cfg.mutate {
        p.equation = mutate(&p.equation, spec)?;
    }
    let (rect, n) = match &cfg.grid {
        Some(g) => parse_grid_spec(g).map_err(usage)?,
        None => (Rect::square(3.0), 200),
    };
    let tol = cfg.tol.unwrap_or(TOL_RESIDUAL);
    let dir = out_dir(cfg);
    let mut rows = Vec::new();
    let mut all = true;
    let mut worst: f64 = 0.0;
    for (k, f) in p.solutions.iter().enumerate() {
        let rep = residual_report(&p.equation, f, &rect, n, cfg.seed).map_err(runtime)?;
        let pass = rep.passes(tol);
        all &= pass;
        worst = worst.max(rep.max_relative);
        write(&dir, &format!("residual_{k}.csv"), &residual_csv(&rep))?;
        let _ = writeln!(
            out,
            "{} {}: max relative residual {:e} over {} points",
            if pass { "PASS" } else { "FAIL" },
            f.label,
            rep.max_relative,
            rep.grid.len()
        );
        rows.push(json!({"solution": f.label, "max_relative": rep.max_relative, "pass": pass}));
    }
    let summary = json!({
        "problem": p.label,
        "tolerance": tol,
        "max_relative": worst,
        "pass": all,
        "solutions": rows,
    });
    write(&dir, "summary.json", &pretty(&summary))?;
    let _ = writeln!(out, "{}: {}", p.label, if all { "pass" } else { "fail" });
    Ok(all)
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_nevanlinna(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<bool> {
    let p = problem(cfg)?;
    let rs = match &cfg.radii {
        Some(s) => parse_radii_spec(s).map_err(usage)?,
        None => radii(5.0, 50.0, 10),
    };
    let nodes = cfg.nodes.unwrap_or(DEFAULT_NODES);
    if nodes < 4 {
        return Err(usage("--nodes must be at least 4"));
    }
    let dir = out_dir(cfg);
    let mut curves = Vec::new();
    for (k, f) in p.solutions.iter().enumerate() {
        let rows = rs
            .iter()
            .map(|&r| characteristic_t(f, r, nodes))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(runtime)?;
        write(&dir, &format!("characteristic_{k}.csv"), &characteristic_csv(&rows))?;
        let last = rows.last().expect("nonempty radii");
        let _ = writeln!(out, "{}: T({}) = {:.6} (m = {:.6}, N = {:.6})", f.label, last.r, last.t, last.m, last.n_int);
        curves.push(Series {
            label: f.label.clone(),
            points: rows.iter().map(|c| (c.r, c.t)).collect(),
        });
    }
    let plot = Plot {
        title: format!("T(r) for {}", p.label),
        x_label: "r".into(),
        y_label: "T(r)".into(),
        x_scale: AxisScale::Linear,
        y_scale: AxisScale::Linear,
        series: curves,
    };
    write(&dir, "characteristic.svg", &plot.to_svg())?;
    let mut summary = json!({"problem": p.label, "radii": rs, "nodes": nodes});
    if p.solutions.len() >= 2 {
        let g = growth_ratio(&p.solutions[0], &p.solutions[1], &rs, nodes).map_err(runtime)?;
        write(&dir, "growth.csv", &growth_csv(&g))?;
        let plot = Plot {
            title: format!("T({}) / T({})", p.solutions[0].label, p.solutions[1].label),
            x_label: "r".into(),
            y_label: "ratio".into(),
            x_scale: AxisScale::Linear,
            y_scale: AxisScale::Linear,
            series: vec![Series {
                label: "T1/T2".into(),
                points: g.rows.iter().map(|r| (r.r, r.ratio)).collect(),
            }],
        };
        write(&dir, "growth.svg", &plot.to_svg())?;
        let flag = if g.growth_separated {
            "growth-separated"
        } else if g.tends_to_one() {
            "tends to 1"
        } else {
            "unsettled"
        };
        let _ = writeln!(out, "ratio T1/T2 at r={}: {:.6}, drift {:.6}: {flag}", rs[rs.len() - 1], g.final_ratio, g.drift);
        summary["growth"] = serde_json::to_value(&g).expect("serializable");
        summary["verdict"] = json!(flag);
    }
    write(&dir, "summary.json", &pretty(&summary))?;
    Ok(true)
}

fn cmd_casoratian(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<bool> {
    if cfg.catalog.is_none() && cfg.equation.is_none() {
        return Err(usage("casoratian needs --catalog or --equation"));
    }
    let p = problem(cfg)?;
    if p.solutions.len() < 2 {
        return Err(usage("casoratian needs two solutions"));
    }
    let (f1, f2) = (&p.solutions[0], &p.solutions[1]);
    let (rect, n) = match &cfg.grid {
        Some(g) => parse_grid_spec(g).map_err(usage)?,
        None => (Rect::square(3.0), 50),
    };
    let tol = cfg.tol.unwrap_or(TOL_RELATION);
    let mut avoid = p.equation.avoid();
    avoid.extend(solution_avoid(f1, 2));
    avoid.extend(solution_avoid(f2, 2));
    let grid = regular_points(&rect, n, &avoid, GUARD, cfg.seed).map_err(runtime)?;
    let h = casoratian(&f1.expr, &f2.expr);
    let mut csv = String::from("z_re,z_im,H_re,H_im,quartic_relative\n");
    let mut quartic: f64 = 0.0;
    for &z in &grid {
        let hv = h.eval_finite(z).ok_or_else(|| runtime(Error::DomainError(z)))?;
        let q = relation_quartic_defect(&p.equation, f1, f2, &h, z).map_err(runtime)?.relative();
        quartic = quartic.max(q);
        csv.push_str(&format!("{},{},{},{},{}\n", z.re, z.im, hv.re, hv.im, q));
    }
    let period = periodicity_defect(&h, Complex64::new(1.0, 0.0), &grid).map_err(runtime)?.relative();
    let pass = period <= TOL_RESIDUAL && quartic <= tol;
    let dir = out_dir(cfg);
    write(&dir, "casoratian.csv", &csv)?;
    let summary = json!({
        "problem": p.label,
        "pair": [f1.label, f2.label],
        "periodicity_defect": period,
        "quartic_max_relative": quartic,
        "pass": pass,
    });
    write(&dir, "summary.json", &pretty(&summary))?;
    let _ = writeln!(
        out,
        "{} H = C({}, {}): 1-periodicity defect {period:e}, quartic relation {quartic:e}",
        if pass { "PASS" } else { "FAIL" },
        f1.label,
        f2.label
    );
    Ok(pass)
}

fn schedule(cfg: &RunConfig) -> CliResult<Vec<Complex64>> {
    if cfg.eps_start.is_none() && cfg.eps_ratio.is_none() && cfg.eps_steps.is_none() {
        return Ok(default_schedule());
    }
    let start = cfg.eps_start.unwrap_or(0.5);
    let ratio = cfg.eps_ratio.unwrap_or(0.5);
    let steps = cfg.eps_steps.unwrap_or(12);
    geometric_schedule(Complex64::new(start, 0.0), ratio, steps).map_err(usage)
}

fn parse_t_grid(spec: &str) -> CliResult<Vec<Complex64>> {
    if spec.starts_with("box:") {
        let (rect, n) = parse_grid_spec(spec).map_err(usage)?;
        return regular_points(&rect, n, &[], GUARD, None).map_err(usage);
    }
    spec.split(',')
        .map(|p| {
            let (re, im) = p.split_once(':').unwrap_or((p, "0"));
            Ok(Complex64::new(parse_f64(re, "t-grid")?, parse_f64(im, "t-grid")?))
        })
        .collect()
}

fn experiments(cfg: &RunConfig) -> CliResult<Vec<LimitExperiment>> {
    let sched = schedule(cfg)?;
    let t_grid = match &cfg.t_grid {
        Some(s) => Some(parse_t_grid(s)?),
        None => None,
    };
    if cfg.mode.is_none() && cfg.candidate.is_none() {
        let id = cfg
            .catalog
            .as_ref()
            .ok_or_else(|| usage("limit needs --catalog or an experiment --config"))?;
        let p = problem(cfg)?;
        let entry = p.entry.expect("catalog problem");
        if entry.limits.is_empty() {
            return Err(usage(format!("{id} has no limit experiment")));
        }
        return Ok(entry
            .limits
            .into_iter()
            .map(|mut x| {
                x.schedule = sched.clone();
                if let Some(g) = &t_grid {
                    x.t_grid = g.clone();
                }
                x
            })
            .collect());
    }
    let bindings = bind_params(&cfg.params, &Bindings::new()).map_err(usage)?;
    let candidate = cfg.candidate.clone().ok_or_else(|| usage("experiment needs a candidate"))?;
    // Fail early on a malformed candidate.
    let mut probe = bindings.clone();
    probe.insert("eps".into(), Expr::real(0.5));
    parse_with(&candidate, &probe).map_err(usage)?;
    let scaling = match cfg.mode.as_deref().unwrap_or("direct") {
        "direct" => {
            let p = problem(cfg)?;
            Scaling::Direct {
                a: p.equation.a,
                b: p.equation.b,
            }
        }
        "indirect" => {
            let a = cfg.a_tilde.clone().ok_or_else(|| usage("indirect experiment needs a_tilde"))?;
            let b = cfg.b_tilde.clone().ok_or_else(|| usage("indirect experiment needs b_tilde"))?;
            for text in [&a, &b] {
                parse_with(text, &probe).map_err(usage)?;
            }
            Scaling::Indirect {
                a: EpsFamily::template(a, bindings.clone()),
                b: EpsFamily::template(b, bindings.clone()),
            }
        }
        other => return Err(usage(format!("mode must be direct or indirect, got `{other}`"))),
    };
    let t_grid = match t_grid {
        Some(g) => g,
        None => parse_t_grid("box:0.5,2,-0.5,0.5:20")?,
    };
    Ok(vec![LimitExperiment {
        label: cfg.catalog.clone().unwrap_or_else(|| "experiment".into()),
        scaling,
        schedule: sched,
        t_grid,
        candidate: EpsFamily::template(candidate, bindings),
    }])
}

fn limit_plot(rep: &LimitReport) -> Plot {
    Plot {
        title: format!("residual vs eps: {}", rep.label),
        x_label: "|eps|".into(),
        y_label: "max residual".into(),
        x_scale: AxisScale::Log,
        y_scale: AxisScale::Log,
        series: vec![
            Series {
                label: "max residual".into(),
                points: rep.records.iter().map(|r| (r.eps.norm(), r.max_residual)).collect(),
            },
            Series {
                label: "rounding floor".into(),
                points: rep.records.iter().map(|r| (r.eps.norm(), r.floor)).collect(),
            },
        ],
    }
}

fn cmd_limit(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<bool> {
    let exps = experiments(cfg)?;
    let dir = out_dir(cfg);
    let mut reports = Vec::new();
    for (k, x) in exps.iter().enumerate() {
        let rep = x.run().map_err(runtime)?;
        write(&dir, &format!("limit_{k}.csv"), &limit_csv(&rep.records))?;
        write(&dir, &format!("limit_{k}.svg"), &limit_plot(&rep).to_svg())?;
        let status = match rep.status {
            crate::limits::OrderStatus::Fitted { order } => format!("fitted order {order:.4}"),
            crate::limits::OrderStatus::ResidualUnderflow { usable: 0, .. } => {
                "residual at rounding level for every eps (exact family)".to_string()
            }
            crate::limits::OrderStatus::ResidualUnderflow { usable, order } => format!(
                "residual underflow after {usable} usable steps{}",
                order.map_or(String::new(), |o| format!(", prefix order {o:.4}"))
            ),
        };
        let _ = writeln!(out, "{}: {status}", rep.label);
        reports.push(rep);
    }
    write(&dir, "summary.json", &pretty(&json!({ "experiments": reports })))?;
    Ok(true)
}

fn cmd_report_all(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<bool> {
    let mut acfg = AcceptanceConfig {
        corrupt_ledger: cfg.corrupt_ledger,
        seed: cfg.seed,
        ..AcceptanceConfig::default()
    };
    if let Some(s) = &cfg.radii {
        let rs = parse_radii_spec(s).map_err(usage)?;
        acfg.radii = (rs[0], rs[rs.len() - 1], rs.len());
    }
    if let Some(n) = cfg.nodes {
        acfg.nodes = n;
    }
    let verdicts = acceptance::run_all(&acfg);
    let mut text = String::new();
    for v in &verdicts {
        text.push_str(&format!("{v}\n"));
    }
    let passed = verdicts.iter().all(|v| v.passed);
    text.push_str(if passed { "all criteria passed\n" } else { "some criteria failed\n" });
    let _ = write!(out, "{text}");
    let dir = out_dir(cfg);
    // Timings vary run to run, so the machine-readable verdicts omit them.
    let rows: Vec<_> = verdicts
        .iter()
        .map(|v| json!({"id": v.id, "title": v.title, "pass": v.passed, "detail": v.detail}))
        .collect();
    write(&dir, "verdicts.json", &pretty(&json!({"pass": passed, "criteria": rows})))?;
    write(&dir, "summary.txt", &text)?;
    Ok(passed)
}
