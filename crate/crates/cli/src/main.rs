//! `extrinsic-q`: evaluate conformal operators and verify their laws.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use extrinsic_q::config::{Report, RunConfig};
use extrinsic_q::operators::{evaluate, GeometrySource, Op, OpParams};
use extrinsic_q::scenario::{self, Scenario, CATALOG};
use extrinsic_q::verify::quadrature::Quadrature;
use extrinsic_q::verify::suite::Suite;
use extrinsic_q::verify::{integrate, volume, CheckResult, Tolerances};
use extrinsic_q::{Expr, ExprField, ScalarField};

#[derive(Parser)]
#[command(name = "extrinsic-q", version, about = "Intrinsic and extrinsic conformal Laplacians and Q-curvatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON or CSV report.
    Verify(VerifyArgs),
    /// Print the curvature of a scenario's surface metric at a point.
    Curvature(PointArgs),
    /// Print the extrinsic geometry of an embedded scenario at a point.
    Extrinsic(PointArgs),
    /// Evaluate an operator at a point or on the quadrature grid.
    Apply(ApplyArgs),
    /// Integrate an expression or operator over a closed scenario.
    Integrate(IntegrateArgs),
    /// List catalog scenarios, suites and operators.
    ListScenarios,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct VerifyArgs {
    /// Configuration file (TOML or JSON); a previous report reruns its config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    suite: Option<Suite>,
    /// Scenario name; repeat for several.
    #[arg(long = "scenario")]
    scenarios: Vec<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// Node count for every quadrature axis.
    #[arg(long)]
    nodes: Option<usize>,
    /// Tolerance override: a bare number sets `pointwise`, `key=value` any class.
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points per pointwise check.
    #[arg(long)]
    points: Option<usize>,
    /// Random (phi, f) pairs per check.
    #[arg(long)]
    pairs: Option<usize>,
    /// Report path.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Do not stream records to stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    scenario: String,
    /// Comma-separated surface coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, default_value_t = 2)]
    degree: usize,
}

#[derive(Args)]
struct OpArgs {
    #[arg(long)]
    scenario: String,
    /// Operator name, see `list-scenarios`.
    #[arg(long)]
    op: Op,
    /// Input function for operators acting on functions.
    #[arg(long, allow_hyphen_values = true)]
    input: Option<String>,
    /// Coefficient of |rho|^2 in Q4.
    #[arg(long)]
    rho_coefficient: Option<f64>,
    /// Coefficient of the Laplacian term of C.
    #[arg(long)]
    c_laplacian_coefficient: Option<f64>,
}

#[derive(Args)]
struct ApplyArgs {
    #[command(flatten)]
    op: OpArgs,
    /// Comma-separated surface coordinates; the quadrature grid if omitted.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Node count per axis for grid output.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    scenario: String,
    /// Operator to integrate.
    #[arg(long)]
    op: Option<Op>,
    /// Expression to integrate, or input of `--op`.
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    rho_coefficient: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Curvature(a) => curvature(a).map(|_| true),
        Command::Extrinsic(a) => extrinsic(a).map(|_| true),
        Command::Apply(a) => apply(a).map(|_| true),
        Command::Integrate(a) => integrate_cmd(a).map(|_| true),
        Command::ListScenarios => list().map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn set_tolerance(tol: &mut Tolerances, spec: &str) -> Result<()> {
    let (key, value) = match spec.split_once('=') {
        Some((k, v)) => (k.trim(), v.trim()),
        None => ("pointwise", spec.trim()),
    };
    let value: f64 = value.parse().with_context(|| format!("--tol {spec}: not a number"))?;
    let mut map = serde_json::to_value(*tol)?;
    let slot = map
        .get_mut(key)
        .ok_or_else(|| anyhow!("--tol {spec}: unknown tolerance class `{key}`"))?;
    *slot = json!(value);
    *tol = serde_json::from_value(map)?;
    Ok(())
}

fn build_config(a: &VerifyArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.suite {
        c.suite = s;
    }
    if !a.scenarios.is_empty() {
        c.scenarios = a.scenarios.clone();
    }
    if let Some(d) = a.degree {
        c.degree = d;
    }
    if let Some(n) = a.nodes {
        c.nodes = Some(n);
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(p) = a.points {
        c.points = p;
    }
    if let Some(p) = a.pairs {
        c.pairs = p;
    }
    for t in &a.tol {
        set_tolerance(&mut c.tolerances, t)?;
    }
    Ok(c)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    check: &'a str,
    samples: usize,
    max_abs_error: f64,
    scale: f64,
    relative_error: f64,
    tolerance: f64,
    pass: bool,
    seed: u64,
    bound: &'static str,
    evidence: bool,
    note: &'a str,
    details: String,
}

impl<'a> CsvRow<'a> {
    fn of(r: &'a CheckResult) -> CsvRow<'a> {
        CsvRow {
            scenario: &r.scenario,
            check: &r.check,
            samples: r.samples,
            max_abs_error: r.max_abs_error,
            scale: r.scale,
            relative_error: r.relative_error,
            tolerance: r.tolerance,
            pass: r.pass,
            seed: r.seed,
            bound: match r.bound {
                extrinsic_q::verify::Bound::Upper => "upper",
                extrinsic_q::verify::Bound::Lower => "lower",
            },
            evidence: r.evidence,
            note: r.note.as_deref().unwrap_or(""),
            details: r
                .details
                .iter()
                .map(|(k, v)| format!("{k}={v:e}"))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

fn write_csv<'a, W: Write>(w: W, records: impl IntoIterator<Item = &'a CheckResult>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(CsvRow::of(r))?;
    }
    out.flush()?;
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let config = build_config(&a)?;
    let plan = config.resolve()?;
    let stdout = io::stdout();
    let mut csv_out = (!a.quiet && matches!(a.format, Format::Csv))
        .then(|| csv::Writer::from_writer(stdout.lock()));
    let report: Report = plan.run_with(|r| {
        if a.quiet {
            return;
        }
        match &mut csv_out {
            Some(w) => {
                let _ = w.serialize(CsvRow::of(r));
                let _ = w.flush();
            }
            None => {
                let mut lock = io::stdout().lock();
                let _ = writeln!(lock, "{}", serde_json::to_string(r).expect("record serializes"));
            }
        }
    })?;
    drop(csv_out);
    if let Some(path) = &a.output {
        match a.format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&report)?;
                text.push('\n');
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            Format::Csv => {
                let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
                write_csv(f, report.records())?;
            }
        }
    }
    let s = report.summary;
    eprintln!(
        "suite {}: {} checks, {} passed, {} failed, {} evidence",
        report.suite, s.checks, s.passed, s.failed, s.evidence
    );
    for r in report.records().filter(|r| r.is_failure()) {
        eprintln!(
            "FAIL {} / {}: relative error {:e} (tolerance {:e})",
            r.scenario, r.check, r.relative_error, r.tolerance
        );
    }
    Ok(report.all_passed())
}

fn parse_point(text: &str, sc: &Scenario) -> Result<Vec<f64>> {
    let p: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("--point: `{s}` is not a number")))
        .collect::<Result<_>>()?;
    if p.len() != sc.dim() {
        bail!("--point has {} coordinates, scenario `{}` has dimension {}", p.len(), sc.name, sc.dim());
    }
    Ok(p)
}

fn print_json(v: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn curvature(a: PointArgs) -> Result<()> {
    let sc = scenario::build(&a.scenario)?;
    let x = parse_point(&a.point, &sc)?;
    let geo = sc.surface_metric().at(&x, a.degree.max(2))?;
    print_json(&geo.curvature_pack()?)
}

fn extrinsic(a: PointArgs) -> Result<()> {
    let sc = scenario::build(&a.scenario)?;
    let emb = sc
        .embedding()
        .ok_or_else(|| anyhow!("scenario `{}` is not embedded", sc.name))?;
    let x = parse_point(&a.point, &sc)?;
    print_json(&emb.geometry(&x, a.degree.max(3))?.pack()?)
}

fn params_of(rho: Option<f64>, c: Option<f64>) -> OpParams {
    let d = OpParams::default();
    OpParams {
        rho_coefficient: rho.unwrap_or(d.rho_coefficient),
        c_laplacian_coefficient: c.unwrap_or(d.c_laplacian_coefficient),
        ..d
    }
}

fn input_field(op: Op, sc: &Scenario, input: Option<&str>) -> Result<Option<Arc<dyn ScalarField>>> {
    match (op.takes_input(), input) {
        (true, Some(text)) => Ok(Some(Arc::new(ExprField::new(&sc.chart(), Expr::parse(text)?)?))),
        (true, None) => bail!("operator `{op}` acts on a function; pass --input"),
        (false, Some(_)) => bail!("operator `{op}` takes no input function"),
        (false, None) => Ok(None),
    }
}

fn check_source(op: Op, sc: &Scenario) -> Result<()> {
    if op.is_extrinsic() && !sc.is_embedded() {
        bail!("operator `{op}` needs an embedded scenario, `{}` is intrinsic", sc.name);
    }
    Ok(())
}

fn apply(a: ApplyArgs) -> Result<()> {
    let sc = scenario::build(&a.op.scenario)?;
    let op = a.op.op;
    check_source(op, &sc)?;
    let input = input_field(op, &sc, a.op.input.as_deref())?;
    let params = params_of(a.op.rho_coefficient, a.op.c_laplacian_coefficient);
    let eval = |x: &[f64]| evaluate(op, &sc.source, input.as_deref(), x, 0, &params).map(|j| j.value());
    match &a.point {
        Some(p) => {
            let x = parse_point(p, &sc)?;
            print_json(&json!({
                "op": op.name(),
                "scenario": sc.name,
                "point": x,
                "value": eval(&x)?,
            }))
        }
        None => {
            let q = Quadrature::for_chart(&sc.chart(), a.nodes)?;
            let values = (0..q.len())
                .map(|k| {
                    let (x, _) = q.node(k);
                    Ok(json!({ "point": x, "value": eval(&x)? }))
                })
                .collect::<Result<Vec<_>>>()?;
            print_json(&json!({
                "op": op.name(),
                "scenario": sc.name,
                "nodes": q.counts(),
                "values": values,
            }))
        }
    }
}

/// `(op, source)` evaluated at the quadrature nodes as a scalar field.
struct Evaluated {
    op: Op,
    source: GeometrySource,
    input: Option<Arc<dyn ScalarField>>,
    params: OpParams,
}

impl ScalarField for Evaluated {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn eval(&self, point: &[f64], degree: usize) -> extrinsic_q::Result<extrinsic_q::Jet> {
        evaluate(self.op, &self.source, self.input.as_deref(), point, degree, &self.params)
    }
}

fn integrate_cmd(a: IntegrateArgs) -> Result<()> {
    let sc = scenario::build(&a.scenario)?;
    if !sc.is_closed() {
        bail!("scenario `{}` is not a closed manifold", sc.name);
    }
    let q = Quadrature::for_chart(&sc.chart(), a.nodes)?;
    let metric = sc.surface_metric();
    let field: Arc<dyn ScalarField> = match a.op {
        Some(op) => {
            check_source(op, &sc)?;
            Arc::new(Evaluated {
                op,
                source: sc.source.clone(),
                input: input_field(op, &sc, a.expr.as_deref())?,
                params: params_of(a.rho_coefficient, None),
            })
        }
        None => {
            let text = a.expr.as_deref().ok_or_else(|| anyhow!("pass --expr or --op"))?;
            Arc::new(ExprField::new(&sc.chart(), Expr::parse(text)?)?)
        }
    };
    let integral = integrate(field.as_ref(), &metric, &q)?;
    let vol = volume(&metric, &q)?;
    print_json(&json!({
        "scenario": sc.name,
        "op": a.op.map(|o| o.name()),
        "expr": a.expr,
        "nodes": q.counts(),
        "integral": integral,
        "volume": vol,
    }))
}

fn list() -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "Scenarios:")?;
    for (name, about) in CATALOG {
        writeln!(out, "  {name:<32} {about}")?;
    }
    writeln!(out, "\nSuites (default scenarios):")?;
    for s in Suite::ALL {
        writeln!(out, "  {:<12} {}", s.name(), s.description())?;
        if s != Suite::All && s != Suite::Jets {
            writeln!(out, "  {:<12}   {}", "", s.default_scenarios().join(" "))?;
        }
    }
    writeln!(out, "\nOperators:")?;
    for op in Op::ALL {
        let input = if op.takes_input() { " (acts on --input)" } else { "" };
        let kind = if op.is_extrinsic() { "extrinsic" } else { "intrinsic" };
        writeln!(out, "  {:<24} order {} {kind}{input}", op.name(), op.order())?;
    }
    Ok(())
}
