//! Command-line surface. [`run`] takes the argument list and returns the
//! exit code with whatever would have gone to stdout and stderr, so the
//! binary is a thin wrapper and tests need no subprocess.
//!
//! Every command produces a list of named tables. `--out json` prints
//! `{"command", "status", "tables": {name: [record, ...]}}` with fixed
//! column names per table; `--out csv` prints each table as a header line
//! plus rows, tables separated by a blank line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::cases::{self, CaseOutcome};
use crate::composite::{
    compare_optima, optimize_multiperiod, solve_cascade, CascadeReport, CascadeSchedule,
};
use crate::document::{parse_plan, parse_scenario, parse_schedule, Document};
use crate::hen::{hen_solve, solve_any, HenOptions};
use crate::instantiation::{
    count_nonlinearities, emit_node, instantiate, AbstractionLevel, AbstractionPlan,
    EquationSystem, Mode, Paradigm, Scenario,
};
use crate::numfmt::sig;
use crate::solvers::{SolveOptions, SolveReport};
use crate::topology::{validate, Diagnostic, Topology};
use crate::Error;

const DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "massflow",
    version,
    about = "Plant models at several abstraction levels from one topology"
)]
struct Cli {
    /// Output format.
    #[arg(long = "out", global = true, value_enum, default_value = "human")]
    out: Format,
    /// Solver tolerance; overrides MASSFLOW_TOL.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Plan file, or inline records such as `level=mass; node=rx level=energy-local`.
    #[arg(long)]
    plan: Option<String>,
    #[arg(long)]
    paradigm: Option<String>,
    #[arg(long)]
    level: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a plant file.
    Validate { file: String },
    /// Solve the plant at one abstraction plan.
    Simulate {
        file: String,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Optimize over a multi-period scenario.
    Optimize {
        file: String,
        /// Scenario file or inline records.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        periods: Option<usize>,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Iterate the heat exchanger network to a fixed point.
    Hen {
        file: String,
        #[arg(long)]
        scenario: Option<String>,
        /// Relaxation factor on temperature updates, in (0, 1].
        #[arg(long)]
        relax: Option<f64>,
    },
    /// Run a staged cascade with warm starts.
    Cascade {
        file: String,
        /// Schedule file or inline records; defaults to the file's own or the standard cascade.
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Term counts per paradigm, or optima per abstraction level.
    Compare {
        file: String,
        /// Side-by-side bilinear counts for both paradigms.
        #[arg(long)]
        paradigms: bool,
        /// Comma-separated levels to optimize and cross-price.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<String>,
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Bundled validation cases.
    Case {
        #[command(subcommand)]
        action: CaseAction,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Simulate { .. } => "simulate",
            Command::Optimize { .. } => "optimize",
            Command::Hen { .. } => "hen",
            Command::Cascade { .. } => "cascade",
            Command::Compare { .. } => "compare",
            Command::Case {
                action: CaseAction::List,
            } => "case list",
            Command::Case { .. } => "case run",
        }
    }
}

#[derive(Debug, Subcommand)]
enum CaseAction {
    /// List bundled cases.
    List,
    /// Run one bundled case, or `all`.
    Run { name: String },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Flag(bool),
    Empty,
}

impl Cell {
    fn human(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => sig(*x, DIGITS),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Empty => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Empty => String::new(),
            other => other.human(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(x) => sig(*x, DIGITS)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Flag(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone)]
struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

struct Report {
    command: &'static str,
    status: String,
    tables: Vec<Table>,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            status: "ok".into(),
            tables: Vec::new(),
        }
    }

    fn render(&self, f: Format) -> String {
        let mut s = String::new();
        match f {
            Format::Human => {
                let _ = writeln!(s, "{}: {}", self.command, self.status);
                for t in &self.tables {
                    let cells: Vec<Vec<String>> = t
                        .rows
                        .iter()
                        .map(|r| r.iter().map(Cell::human).collect())
                        .collect();
                    let widths: Vec<usize> = (0..t.columns.len())
                        .map(|j| {
                            cells
                                .iter()
                                .map(|r| r[j].len())
                                .chain([t.columns[j].len()])
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let line = |row: Vec<&str>| {
                        row.iter()
                            .zip(&widths)
                            .map(|(c, w)| format!("{c:>w$}"))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    let _ = writeln!(s, "\n{}", t.name);
                    let _ = writeln!(s, "{}", line(t.columns.clone()));
                    for r in &cells {
                        let _ = writeln!(s, "{}", line(r.iter().map(String::as_str).collect()));
                    }
                }
            }
            Format::Csv => {
                for (k, t) in self.tables.iter().enumerate() {
                    if k > 0 {
                        s.push('\n');
                    }
                    let _ = writeln!(s, "table,{}", t.columns.join(","));
                    for r in &t.rows {
                        let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                        let _ = writeln!(s, "{},{}", t.name, cells.join(","));
                    }
                }
            }
            Format::Json => {
                let mut tables = Map::new();
                for t in &self.tables {
                    let rows: Vec<Value> = t
                        .rows
                        .iter()
                        .map(|r| {
                            Value::Object(
                                t.columns
                                    .iter()
                                    .zip(r)
                                    .map(|(c, v)| (c.to_string(), v.json()))
                                    .collect(),
                            )
                        })
                        .collect();
                    tables.insert(t.name.to_string(), Value::Array(rows));
                }
                let doc =
                    json!({ "command": self.command, "status": self.status, "tables": tables });
                s = serde_json::to_string_pretty(&doc).expect("json");
                s.push('\n');
            }
        }
        s
    }
}

/// Command failure: 1 for diagnostics and failed checks, 2 for bad usage.
struct Failure {
    code: i32,
    message: String,
    report: Option<Report>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let report = match &e {
            Error::Invalid(d) => Some(diagnostics_report("diagnostics", d)),
            _ => None,
        };
        Failure {
            code: 1,
            message: e.to_string(),
            report,
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
        report: None,
    }
}

type Outcome = std::result::Result<(Report, i32), Failure>;

/// Runs one command line (including the program name).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let mut log = String::new();
    let format = cli.out;
    let command = cli.command.name();
    match dispatch(cli, &mut log) {
        Ok((report, code)) => Output {
            code,
            stdout: report.render(format),
            stderr: log,
        },
        Err(f) => {
            let _ = writeln!(log, "error: {}", f.message);
            if f.code == 2 {
                let _ = writeln!(log, "usage: massflow <validate|simulate|optimize|hen|cascade|compare|case> <file> [options]");
            }
            let stdout = f
                .report
                .map(|r| Report { command, ..r }.render(format))
                .unwrap_or_default();
            Output {
                code: f.code,
                stdout,
                stderr: log,
            }
        }
    }
}

fn dispatch(cli: Cli, log: &mut String) -> Outcome {
    let opts = SolveOptions::resolve(cli.tol, std::env::var("MASSFLOW_TOL").ok().as_deref());
    opts.check().map_err(|e| usage(e.to_string()))?;
    match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Simulate { file, plan } => cmd_simulate(&file, &plan, &opts, log),
        Command::Optimize {
            file,
            scenario,
            periods,
            plan,
        } => cmd_optimize(&file, scenario.as_deref(), periods, &plan, &opts, log),
        Command::Hen {
            file,
            scenario,
            relax,
        } => cmd_hen(&file, scenario.as_deref(), relax, &opts, log),
        Command::Cascade { file, schedule } => cmd_cascade(&file, schedule.as_deref(), &opts, log),
        Command::Compare {
            file,
            paradigms,
            levels,
            level,
            scenario,
        } => {
            if paradigms == !levels.is_empty() {
                return Err(usage(
                    "compare needs exactly one of --paradigms or --levels",
                ));
            }
            if paradigms {
                cmd_compare_paradigms(&file, level.as_deref())
            } else {
                cmd_compare_levels(&file, &levels, scenario.as_deref(), &opts)
            }
        }
        Command::Case {
            action: CaseAction::List,
        } => {
            let mut t = Table::new("cases", &["case", "expected"]);
            for n in cases::names() {
                t.push(vec![n.into(), cases::load(n)?.expected.len().into()]);
            }
            let mut r = Report::new("case list");
            r.tables.push(t);
            Ok((r, 0))
        }
        Command::Case {
            action: CaseAction::Run { name },
        } => cmd_case(&name, &opts, log),
    }
}

fn load(file: &str) -> std::result::Result<Document, Failure> {
    let doc = Document::read(file)?;
    let diags = validate(&doc.topology);
    if !diags.is_empty() {
        return Err(Error::Invalid(diags).into());
    }
    Ok(doc)
}

/// File contents when `arg` names a file, else inline records under
/// `section` with `;` separating records.
fn file_or_inline(arg: &str, section: &str) -> std::result::Result<String, Failure> {
    if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| Error::Io(format!("{arg}: {e}")).into())
    } else {
        Ok(format!("[{section}]\n{}\n", arg.replace(';', "\n")))
    }
}

fn parse_flag<T: std::str::FromStr<Err = Error>>(
    v: Option<&str>,
) -> std::result::Result<Option<T>, Failure> {
    v.map(|s| s.parse::<T>().map_err(|e| usage(e.to_string())))
        .transpose()
}

fn resolve_plan(doc: &Document, a: &PlanArgs) -> std::result::Result<AbstractionPlan, Failure> {
    let mut plan = match &a.plan {
        Some(p) => parse_plan(&file_or_inline(p, "plan")?)?,
        None => doc.plan_or_default(),
    };
    if let Some(l) = parse_flag::<AbstractionLevel>(a.level.as_deref())? {
        plan.level = l;
    }
    if let Some(p) = parse_flag::<Paradigm>(a.paradigm.as_deref())? {
        plan.paradigm = p;
    }
    Ok(plan)
}

fn resolve_scenario(doc: &Document, arg: Option<&str>) -> std::result::Result<Scenario, Failure> {
    match arg {
        Some(s) => Ok(parse_scenario(&file_or_inline(s, "scenario")?)?),
        None => Ok(doc.scenario_or_default()),
    }
}

fn diagnostics_report(command: &'static str, d: &[Diagnostic]) -> Report {
    let mut t = Table::new("diagnostics", &["rule", "subject", "line", "message"]);
    for d in d {
        t.push(vec![
            d.rule.as_str().into(),
            d.subject.as_str().into(),
            d.line.into(),
            d.message.as_str().into(),
        ]);
    }
    let mut r = Report::new(command);
    r.status = format!("{} diagnostic(s)", d.len());
    r.tables.push(t);
    r
}

fn cmd_validate(file: &str) -> Outcome {
    let doc = Document::read(file)?;
    let diags = validate(&doc.topology);
    let code = i32::from(!diags.is_empty());
    let mut r = diagnostics_report("validate", &diags);
    let t = &doc.topology;
    let mut s = Table::new("summary", &["components", "streams", "nodes"]);
    s.push(vec![
        t.components.len().into(),
        t.streams.len().into(),
        t.nodes.len().into(),
    ]);
    r.tables.insert(0, s);
    if code == 0 {
        r.status = "ok".into();
    }
    Ok((r, code))
}

/// Streams in declaration order, then periods.
fn stream_tables(t: &Topology, rep: &SolveReport) -> Vec<Table> {
    let mut streams = Table::new(
        "streams",
        &[
            "period",
            "stream",
            "component",
            "flow",
            "fraction",
            "temperature",
        ],
    );
    let order: HashMap<&str, usize> = t
        .streams
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut states: Vec<_> = rep.table.streams.iter().collect();
    states.sort_by_key(|s| {
        (
            s.period,
            order.get(s.stream.as_str()).copied().unwrap_or(usize::MAX),
        )
    });
    for s in states {
        streams.push(vec![
            s.period.into(),
            s.stream.as_str().into(),
            "*".into(),
            s.total.into(),
            Cell::Empty,
            s.temperature.into(),
        ]);
        for c in &t.components {
            let flow = s.flows.iter().find(|(id, _)| id == &c.id).map(|f| f.1);
            let frac = s.fractions.iter().find(|(id, _)| id == &c.id).map(|f| f.1);
            if flow.is_some() || frac.is_some() {
                streams.push(vec![
                    s.period.into(),
                    s.stream.as_str().into(),
                    c.id.as_str().into(),
                    flow.into(),
                    frac.into(),
                    Cell::Empty,
                ]);
            }
        }
    }
    let norder: HashMap<&str, usize> = t
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut duties = Table::new("duties", &["period", "node", "duty"]);
    let mut ds: Vec<_> = rep.table.duties.iter().collect();
    ds.sort_by_key(|d| {
        (
            d.period,
            norder.get(d.node.as_str()).copied().unwrap_or(usize::MAX),
        )
    });
    for d in ds {
        duties.push(vec![d.period.into(), d.node.as_str().into(), d.duty.into()]);
    }
    vec![streams, duties]
}

fn count_table(sys: &EquationSystem) -> Table {
    let c = count_nonlinearities(sys);
    let mut t = Table::new(
        "term_counts",
        &["node", "rows", "linear_rows", "bilinear", "general"],
    );
    for (node, n) in &c.per_node {
        t.push(vec![
            node.as_str().into(),
            n.rows.into(),
            n.linear_rows.into(),
            n.bilinear.into(),
            n.general.into(),
        ]);
    }
    t.push(vec![
        "total".into(),
        c.rows.into(),
        c.linear_rows.into(),
        c.bilinear.into(),
        c.general.into(),
    ]);
    t
}

fn solve_table(rep: &SolveReport) -> Table {
    let mut t = Table::new("solve", &["status", "iterations", "residual", "objective"]);
    t.push(vec![
        rep.status.to_string().into(),
        rep.iterations.into(),
        rep.residual.into(),
        rep.objective.into(),
    ]);
    t
}

fn cmd_simulate(file: &str, a: &PlanArgs, opts: &SolveOptions, log: &mut String) -> Outcome {
    let doc = load(file)?;
    let plan = resolve_plan(&doc, a)?;
    let sc = Scenario {
        mode: Mode::Simulate,
        ..doc.scenario_or_default()
    };
    let sys = instantiate(&doc.topology, &plan, &sc)?;
    let rep = solve_any(&sys, opts)?;
    let _ = writeln!(
        log,
        "simulate: {} after {} iteration(s)",
        rep.status, rep.iterations
    );
    let mut r = Report::new("simulate");
    r.status = rep.status.to_string();
    r.tables.push(solve_table(&rep));
    r.tables.extend(stream_tables(&doc.topology, &rep));
    r.tables.push(count_table(&sys));
    Ok((r, i32::from(!rep.status.is_success())))
}

fn cascade_tables(t: &Topology, rep: &CascadeReport) -> Vec<Table> {
    let mut stages = Table::new(
        "stages",
        &[
            "stage",
            "solver",
            "refresh",
            "status",
            "iterations",
            "outer_passes",
            "inherited",
            "objective",
            "max_dh",
        ],
    );
    for s in &rep.stages {
        stages.push(vec![
            s.stage.into(),
            s.solver.to_string().into(),
            s.refresh.to_string().into(),
            s.report.status.to_string().into(),
            s.iterations.into(),
            s.outer_passes.into(),
            s.inherited.len().into(),
            s.report.objective.into(),
            s.max_dh.into(),
        ]);
    }
    let mut periods = Table::new("objective_by_period", &["period", "objective"]);
    for (p, v) in rep.objective_by_period.iter().enumerate() {
        periods.push(vec![p.into(), (*v).into()]);
    }
    let mut out = vec![stages, periods];
    if let Some(last) = rep.last() {
        out.extend(stream_tables(t, &last.report));
    }
    out
}

fn cascade_status(rep: &CascadeReport) -> (String, i32) {
    match (&rep.failed_stage, &rep.failure) {
        (Some(k), Some(msg)) => (format!("stage {k} failed: {msg}"), 1),
        _ => ("ok".into(), 0),
    }
}

fn cmd_optimize(
    file: &str,
    scenario: Option<&str>,
    periods: Option<usize>,
    a: &PlanArgs,
    opts: &SolveOptions,
    log: &mut String,
) -> Outcome {
    let doc = load(file)?;
    let plan = resolve_plan(&doc, a)?;
    let mut sc = resolve_scenario(&doc, scenario)?;
    if let Some(n) = periods {
        if n == 0 {
            return Err(usage("--periods must be at least 1"));
        }
        sc = sc.with_periods(n);
    }
    let rep = optimize_multiperiod(&doc.topology, &sc, &plan, opts)?;
    let _ = writeln!(
        log,
        "optimize: {} stage(s), {} iteration(s)",
        rep.stages.len(),
        rep.total_iterations()
    );
    let mut r = Report::new("optimize");
    let (status, code) = cascade_status(&rep);
    r.status = status;
    r.tables = cascade_tables(&doc.topology, &rep);
    Ok((r, code))
}

fn cmd_hen(
    file: &str,
    scenario: Option<&str>,
    relax: Option<f64>,
    opts: &SolveOptions,
    log: &mut String,
) -> Outcome {
    let doc = load(file)?;
    let sc = Scenario {
        mode: Mode::Simulate,
        ..resolve_scenario(&doc, scenario)?
    };
    let mut ho = HenOptions {
        solve: opts.clone(),
        ..HenOptions::default()
    };
    if let Some(w) = relax {
        if !(w > 0.0 && w <= 1.0) {
            return Err(usage(format!("--relax must lie in (0, 1], got {w}")));
        }
        ho.omega = w;
    }
    let rep = hen_solve(&doc.topology, &sc, &ho)?;
    let _ = writeln!(log, "hen: {} outer iteration(s)", rep.iterations);
    let mut it = Table::new(
        "iterations",
        &["iteration", "max_dt", "exchanger", "period", "duty"],
    );
    for i in &rep.log {
        for (e, p, q) in &i.duties {
            it.push(vec![
                i.iteration.into(),
                i.max_dt.into(),
                e.as_str().into(),
                (*p).into(),
                (*q).into(),
            ]);
        }
    }
    let mut ex = Table::new(
        "exchangers",
        &[
            "exchanger",
            "period",
            "phi",
            "duty",
            "th_in",
            "th_out",
            "tc_in",
            "tc_out",
        ],
    );
    for e in &rep.exchangers {
        ex.push(vec![
            e.node.as_str().into(),
            e.period.into(),
            e.phi.into(),
            e.q.into(),
            e.th_in.into(),
            e.th_out.into(),
            e.tc_in.into(),
            e.tc_out.into(),
        ]);
    }
    let mut r = Report::new("hen");
    r.status = if rep.converged {
        "converged".into()
    } else {
        "not converged".into()
    };
    r.tables = vec![it, ex];
    r.tables.extend(stream_tables(&doc.topology, &rep.report));
    Ok((r, i32::from(!rep.converged)))
}

fn cmd_cascade(
    file: &str,
    schedule: Option<&str>,
    opts: &SolveOptions,
    log: &mut String,
) -> Outcome {
    let doc = load(file)?;
    let sched = match schedule {
        Some(s) => parse_schedule(&file_or_inline(s, "schedule")?)?,
        None => doc
            .schedule
            .clone()
            .unwrap_or_else(CascadeSchedule::standard),
    };
    let sc = Scenario {
        mode: Mode::Simulate,
        ..doc.scenario_or_default()
    };
    let rep = solve_cascade(&doc.topology, &sc, &sched, opts)?;
    for s in &rep.stages {
        let _ = writeln!(
            log,
            "stage {}: {} iteration(s), {} inherited",
            s.stage,
            s.iterations,
            s.inherited.len()
        );
    }
    let mut r = Report::new("cascade");
    let (status, code) = cascade_status(&rep);
    r.status = status;
    r.tables = cascade_tables(&doc.topology, &rep);
    Ok((r, code))
}

fn cmd_compare_paradigms(file: &str, level: Option<&str>) -> Outcome {
    let doc = load(file)?;
    let level = parse_flag::<AbstractionLevel>(level)?.unwrap_or(AbstractionLevel::MassOnly);
    let mut t = Table::new(
        "paradigms",
        &[
            "node",
            "kind",
            "fractions_bilinear",
            "flows_bilinear",
            "fractions_rows",
            "flows_rows",
        ],
    );
    let mut totals: [Option<usize>; 4] = [Some(0); 4];
    for n in &doc.topology.nodes {
        let counts: Vec<Option<(usize, usize)>> =
            [Paradigm::FractionsBased, Paradigm::ComponentFlows]
                .iter()
                .map(|&p| {
                    emit_node(&doc.topology, &n.id, &AbstractionPlan::uniform(level, p))
                        .ok()
                        .map(|s| (s.bilinear.len(), s.rows.len()))
                })
                .collect();
        let vals = [
            counts[0].map(|c| c.0),
            counts[1].map(|c| c.0),
            counts[0].map(|c| c.1),
            counts[1].map(|c| c.1),
        ];
        for (tot, v) in totals.iter_mut().zip(vals) {
            *tot = tot.zip(v).map(|(a, b)| a + b);
        }
        let mut row: Vec<Cell> = vec![n.id.as_str().into(), n.kind.name().into()];
        row.extend(vals.iter().map(|v| match v {
            Some(c) => Cell::from(*c),
            None => "unsupported".into(),
        }));
        t.push(row);
    }
    let mut row: Vec<Cell> = vec!["total".into(), Cell::Empty];
    row.extend(totals.iter().map(|v| Cell::from(*v)));
    t.push(row);
    let mut r = Report::new("compare");
    r.tables.push(t);
    Ok((r, 0))
}

fn cmd_compare_levels(
    file: &str,
    levels: &[String],
    scenario: Option<&str>,
    opts: &SolveOptions,
) -> Outcome {
    let doc = load(file)?;
    let sc = resolve_scenario(&doc, scenario)?;
    let base = doc.plan_or_default();
    let plans = levels
        .iter()
        .map(|l| {
            let level = l
                .parse::<AbstractionLevel>()
                .map_err(|e| usage(e.to_string()))?;
            Ok(AbstractionPlan {
                level,
                ..base.clone()
            })
        })
        .collect::<std::result::Result<Vec<_>, Failure>>()?;
    let cmp = compare_optima(&doc.topology, &sc, &plans, opts)?;
    let mut t = Table::new("optima", &["level", "objective", "full_cost"]);
    for row in &cmp.rows {
        t.push(vec![
            row.level.to_string().into(),
            row.objective.into(),
            row.full_cost.into(),
        ]);
    }
    let mut o = Table::new("ordering", &["holds"]);
    o.push(vec![cmp.ordering_holds.into()]);
    let mut r = Report::new("compare");
    r.status = if cmp.ordering_holds {
        "ok".into()
    } else {
        "ordering violated".into()
    };
    r.tables = vec![t, o];
    Ok((r, 0))
}

fn case_rows(t: &mut Table, o: &CaseOutcome) {
    for e in &o.entries {
        t.push(vec![
            o.case.as_str().into(),
            e.run.to_string().into(),
            e.level.to_string().into(),
            e.quantity.as_str().into(),
            e.expected.into(),
            e.got.into(),
            e.tol.into(),
            e.oracle.to_string().into(),
            if e.pass { "pass" } else { "FAIL" }.into(),
            e.error.clone().into(),
        ]);
    }
}

fn cmd_case(name: &str, opts: &SolveOptions, log: &mut String) -> Outcome {
    let names: Vec<&str> = if name == "all" {
        cases::names().to_vec()
    } else {
        vec![name]
    };
    let mut t = Table::new(
        "entries",
        &[
            "case", "run", "level", "quantity", "expected", "got", "tol", "oracle", "result",
            "error",
        ],
    );
    let mut failed = 0;
    for n in names {
        let o = cases::run_bundle(&cases::load(n)?, opts);
        let _ = writeln!(log, "case {n}: {}", if o.passed { "pass" } else { "FAIL" });
        failed += usize::from(!o.passed);
        case_rows(&mut t, &o);
    }
    let mut r = Report::new("case run");
    r.status = if failed == 0 {
        "pass".into()
    } else {
        format!("{failed} case(s) failed")
    };
    r.tables.push(t);
    Ok((r, i32::from(failed > 0)))
}
