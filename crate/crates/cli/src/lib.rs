//! Command-line surface. Parses argv, runs the requested analysis, renders
//! the report as text, deterministic JSON, or CSV, and encodes the outcome
//! in the exit code: 0 success (or polynomial-time candidate), 1
//! not-polynomial-time, 2 inconclusive, 64 usage error, 65 bad input data,
//! 70 internal limit hit.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use growthgauge::boundedness::{find_bounding_order, BoundStatus, BoundednessReport};
use growthgauge::calculus::{evaluate, nth_derivative, LimitKind};
use growthgauge::classify::{classify_multivariate, classify_univariate, Classification, Verdict};
use growthgauge::config::{AnalysisConfig, CalcConfig};
use growthgauge::error::Error;
use growthgauge::expr::{format as render, parse, Expr};
use growthgauge::fit::{classify_empirical, fit_models, load_samples, ModelFit, SampleFormat};
use growthgauge::taylor::{
    eval_truncated, lagrange_bound, radius_ratio, radius_root, taylor_series, RadiusEstimate,
    RadiusMethod, RadiusVerdict, TaylorSeries,
};

#[derive(Parser)]
#[command(
    name = "growthgauge",
    version,
    about = "Growth-class analysis of complexity functions and runtime data"
)]
struct Cli {
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ratio,
    Root,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Csv,
    Json,
}

/// Tunables for the symbolic commands (derive, taylor, radius).
#[derive(Args)]
struct LimitFlags {
    /// Derivative order cap; defaults to the larger of 10 and the requested
    /// order, so setting it only makes the cap binding.
    #[arg(long)]
    n_max: Option<usize>,
    /// Working precision in bits (64..=1024). Overrides GG_PRECISION_BITS.
    #[arg(long)]
    precision_bits: Option<usize>,
    /// Node-count ceiling on intermediate derivatives (default 100000).
    #[arg(long)]
    node_cap: Option<usize>,
}

/// Tunables for the probe-based commands (bound, classify, fit).
#[derive(Args)]
struct AnalysisFlags {
    /// Highest derivative order examined (default 8).
    #[arg(long)]
    n_max: Option<usize>,
    /// Left edge of the probe domain (default 1.0009765625).
    #[arg(long)]
    x_min: Option<f64>,
    /// First probe point (default 4).
    #[arg(long)]
    probe_start: Option<f64>,
    /// Geometric step between probe points (default 2).
    #[arg(long)]
    probe_factor: Option<f64>,
    /// Number of probe points (default 60, minimum 10).
    #[arg(long)]
    probe_steps: Option<usize>,
    /// Working precision in bits (64..=1024). Overrides GG_PRECISION_BITS.
    #[arg(long)]
    precision_bits: Option<usize>,
    /// Values pinned onto the other variables in multivariate runs.
    #[arg(long, value_delimiter = ',')]
    fix_values: Option<Vec<f64>>,
    /// Probe every order up to n-max instead of stopping when bounded.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the n-th derivative in canonical form.
    Derive {
        /// Expression over one or more variables, e.g. "x*ln(x)".
        expr: String,
        #[arg(long, default_value = "x")]
        var: String,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[command(flatten)]
        limits: LimitFlags,
    },
    /// Taylor coefficients about a center, optionally with plot samples.
    Taylor {
        expr: String,
        #[arg(long, default_value = "x")]
        var: String,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long)]
        order: usize,
        /// Sample f, the truncated series, and the remainder bound on
        /// (x0, PLOT_TO]; csv output then carries the plot table.
        #[arg(long)]
        plot_to: Option<f64>,
        #[arg(long, default_value_t = 32)]
        plot_points: usize,
        #[command(flatten)]
        limits: LimitFlags,
    },
    /// Radius-of-convergence estimate from the Taylor coefficients.
    Radius {
        expr: String,
        #[arg(long, default_value = "x")]
        var: String,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long, default_value_t = 16)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Method::Ratio)]
        method: Method,
        #[command(flatten)]
        limits: LimitFlags,
    },
    /// Probe the boundedness of successive derivatives on [x_min, inf).
    Bound {
        expr: String,
        #[arg(long, default_value = "x")]
        var: String,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Growth-class verdict; exit code 0 candidate, 1 not polynomial, 2
    /// inconclusive.
    Classify {
        expr: String,
        /// Variables to analyze (default: the expression's free variables).
        #[arg(long, value_delimiter = ',')]
        vars: Option<Vec<String>>,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Fit measured (size, seconds) samples and classify the best model.
    Fit {
        /// Sample file: CSV with header `size,seconds`, or a JSON array of
        /// {"size": .., "seconds": ..} objects.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        format: InputFormat,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
}

enum Failure {
    Core(Error),
    Usage(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Input(_) => 65,
            Failure::Core(e) => match e {
                Error::OrderTooLarge { .. }
                | Error::InvalidConfig { .. }
                | Error::UnexpectedVariables { .. }
                | Error::NoVariables => 64,
                Error::ExpressionTooLarge { .. } => 70,
                _ => 65,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Usage(m) | Failure::Input(m) => m.clone(),
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    check_variable_names(&cli.command)?;
    match &cli.command {
        Command::Derive {
            expr,
            var,
            order,
            limits,
        } => cmd_derive(expr, var, *order, limits, cli.output),
        Command::Taylor {
            expr,
            var,
            x0,
            order,
            plot_to,
            plot_points,
            limits,
        } => cmd_taylor(expr, var, *x0, *order, *plot_to, *plot_points, limits, cli.output),
        Command::Radius {
            expr,
            var,
            x0,
            order,
            method,
            limits,
        } => cmd_radius(expr, var, *x0, *order, *method, limits, cli.output),
        Command::Bound { expr, var, analysis } => cmd_bound(expr, var, analysis, cli.output),
        Command::Classify { expr, vars, analysis } => {
            cmd_classify(expr, vars.as_deref(), analysis, cli.output)
        }
        Command::Fit {
            input,
            format,
            analysis,
        } => cmd_fit(input, *format, analysis, cli.output),
    }
}

/// Rejects `--var`/`--vars` values no expression can bind (shell quoting
/// slips like `--var ""` or `--vars "x,,y"`). Differentiating with respect
/// to such a name would quietly produce 0, so fail loudly instead. Mirrors
/// the expression language's identifier rule: [A-Za-z_][A-Za-z0-9_]*.
fn check_variable_names(cmd: &Command) -> Result<(), Failure> {
    let names: Vec<&str> = match cmd {
        Command::Derive { var, .. }
        | Command::Taylor { var, .. }
        | Command::Radius { var, .. }
        | Command::Bound { var, .. } => vec![var.as_str()],
        Command::Classify { vars, .. } => vars
            .iter()
            .flatten()
            .map(String::as_str)
            .collect(),
        Command::Fit { .. } => Vec::new(),
    };
    for name in names {
        let mut chars = name.chars();
        let head_ok = chars
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        if !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Failure::Usage(format!(
                "`{name}` is not a valid variable name"
            )));
        }
    }
    Ok(())
}

/// GG_PRECISION_BITS supplies the precision when no flag does.
fn resolve_precision(flag: Option<usize>, fallback: usize) -> Result<usize, Failure> {
    if let Some(bits) = flag {
        return Ok(bits);
    }
    match std::env::var("GG_PRECISION_BITS") {
        Ok(s) => s.trim().parse().map_err(|_| {
            Failure::Usage(format!("GG_PRECISION_BITS must be an integer, got `{s}`"))
        }),
        Err(_) => Ok(fallback),
    }
}

fn calc_config(limits: &LimitFlags, order: usize) -> Result<CalcConfig, Failure> {
    let mut cfg = CalcConfig::default();
    cfg.precision_bits = resolve_precision(limits.precision_bits, cfg.precision_bits)?;
    cfg.n_max = limits.n_max.unwrap_or(cfg.n_max.max(order));
    if let Some(cap) = limits.node_cap {
        cfg.node_cap = cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analysis_config(flags: &AnalysisFlags) -> Result<AnalysisConfig, Failure> {
    let mut cfg = AnalysisConfig::default();
    cfg.probe.precision_bits =
        resolve_precision(flags.precision_bits, cfg.probe.precision_bits)?;
    if let Some(n) = flags.n_max {
        cfg.n_max = n;
    }
    if let Some(x) = flags.x_min {
        cfg.x_min = x;
    }
    if let Some(s) = flags.probe_start {
        cfg.probe.start = s;
    }
    if let Some(f) = flags.probe_factor {
        cfg.probe.factor = f;
    }
    if let Some(s) = flags.probe_steps {
        cfg.probe.steps = s;
    }
    if let Some(v) = &flags.fix_values {
        cfg.fix_values = v.clone();
    }
    cfg.full = flags.full;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_expr(src: &str) -> Result<Expr, Failure> {
    parse(src).map_err(Failure::Core)
}

/// JSON has no encoding for non-finite floats, so they become strings.
fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn cmd_derive(
    src: &str,
    var: &str,
    order: usize,
    limits: &LimitFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = calc_config(limits, order)?;
    let f = parse_expr(src)?;
    let d = nth_derivative(&f, var, order, &cfg)?;
    let text = render(&d);
    match out {
        Output::Text => println!("{text}"),
        Output::Json => emit(&json!({
            "command": "derive",
            "expression": src,
            "variable": var,
            "order": order,
            "derivative": { "text": text, "tree": d.to_json() },
        })),
        Output::Csv => println!("order,derivative\n{order},\"{text}\""),
    }
    Ok(0)
}

struct PlotRow {
    x: f64,
    f: f64,
    t_n: f64,
    bound: f64,
}

fn plot_rows(
    f: &Expr,
    s: &TaylorSeries,
    var: &str,
    to: f64,
    points: usize,
    cfg: &CalcConfig,
) -> Result<Vec<PlotRow>, Failure> {
    if points == 0 || !(to > s.center) {
        return Err(Failure::Usage(
            "--plot-to must lie right of the center and --plot-points must be positive".into(),
        ));
    }
    let next = nth_derivative(f, var, s.order + 1, &CalcConfig {
        n_max: cfg.n_max.max(s.order + 1),
        ..cfg.clone()
    })?;
    let eval = |e: &Expr, x: f64| -> f64 {
        let mut env = BTreeMap::new();
        env.insert(var.to_string(), x);
        evaluate(e, &env, cfg.precision_bits).unwrap_or(f64::NAN)
    };
    let xs: Vec<f64> = (1..=points)
        .map(|j| s.center + (to - s.center) * j as f64 / points as f64)
        .collect();
    // Grid sup of |f^(n+1)| stands in for M in the remainder bound.
    let m = xs
        .iter()
        .map(|&x| eval(&next, x).abs())
        .fold(0.0f64, f64::max);
    Ok(xs
        .into_iter()
        .map(|x| PlotRow {
            x,
            f: eval(f, x),
            t_n: eval_truncated(s, x),
            bound: lagrange_bound(m, s.order, x, s.center).unwrap_or(f64::NAN),
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_taylor(
    src: &str,
    var: &str,
    x0: f64,
    order: usize,
    plot_to: Option<f64>,
    plot_points: usize,
    limits: &LimitFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = calc_config(limits, order)?;
    let f = parse_expr(src)?;
    let s = taylor_series(&f, var, x0, order, &cfg)?;
    let plot = plot_to
        .map(|to| plot_rows(&f, &s, var, to, plot_points, &cfg))
        .transpose()?;

    let coeff_exact = |k: usize| -> Option<String> {
        s.coefficients[k].exact.as_ref().map(|r| r.to_string())
    };
    match out {
        Output::Text => {
            println!("T_{order} of {src} about {var} = {x0}");
            for (k, c) in s.coefficients.iter().enumerate() {
                match coeff_exact(k) {
                    Some(e) => println!("a_{k} = {e}"),
                    None => println!("a_{k} = {}", c.value),
                }
            }
            if let Some(rows) = &plot {
                println!("x,f,t_n,bound");
                for r in rows {
                    println!("{},{},{},{}", r.x, r.f, r.t_n, r.bound);
                }
            }
        }
        Output::Json => {
            let coefficients: Vec<Value> = s
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    json!({
                        "k": k,
                        "value": jnum(c.value),
                        "exact": coeff_exact(k).map(Value::from).unwrap_or(Value::Null),
                    })
                })
                .collect();
            let mut report = json!({
                "command": "taylor",
                "expression": src,
                "variable": var,
                "center": jnum(x0),
                "order": order,
                "coefficients": coefficients,
            });
            if let Some(rows) = &plot {
                report["plot"] = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "x": jnum(r.x),
                            "f": jnum(r.f),
                            "t_n": jnum(r.t_n),
                            "bound": jnum(r.bound),
                        })
                    })
                    .collect();
            }
            emit(&report);
        }
        Output::Csv => {
            if let Some(rows) = &plot {
                println!("x,f,t_n,bound");
                for r in rows {
                    println!("{},{},{},{}", r.x, r.f, r.t_n, r.bound);
                }
            } else {
                println!("k,a_k");
                for (k, c) in s.coefficients.iter().enumerate() {
                    match coeff_exact(k) {
                        Some(e) => println!("{k},{e}"),
                        None => println!("{k},{}", c.value),
                    }
                }
            }
        }
    }
    Ok(0)
}

fn verdict_json(est: &RadiusEstimate) -> Value {
    match est.verdict {
        RadiusVerdict::Infinite => json!({ "kind": "Infinite" }),
        RadiusVerdict::Finite(r) => json!({ "kind": "Finite", "radius": jnum(r) }),
        RadiusVerdict::Inconclusive => json!({ "kind": "Inconclusive" }),
    }
}

fn verdict_text(est: &RadiusEstimate) -> String {
    match est.verdict {
        RadiusVerdict::Infinite => "Infinite".into(),
        RadiusVerdict::Finite(r) => format!("Finite({r})"),
        RadiusVerdict::Inconclusive => "Inconclusive".into(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_radius(
    src: &str,
    var: &str,
    x0: f64,
    order: usize,
    method: Method,
    limits: &LimitFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = calc_config(limits, order)?;
    let f = parse_expr(src)?;
    let s = taylor_series(&f, var, x0, order, &cfg)?;
    let est = match method {
        Method::Ratio => radius_ratio(&s, &Default::default()),
        Method::Root => radius_root(&s, &Default::default()),
    };
    let method_name = match est.method {
        RadiusMethod::Ratio => "ratio",
        RadiusMethod::Root => "root",
    };
    match out {
        Output::Text => {
            println!("method: {method_name}");
            println!("verdict: {}", verdict_text(&est));
            println!(
                "sequence: [{}]",
                est.sequence
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            if !est.skipped_indices.is_empty() {
                println!(
                    "skipped coefficient indices: {:?}",
                    est.skipped_indices
                );
            }
        }
        Output::Json => emit(&json!({
            "command": "radius",
            "expression": src,
            "variable": var,
            "center": jnum(x0),
            "order": order,
            "method": method_name,
            "sequence": est.sequence.iter().map(|&v| jnum(v)).collect::<Vec<_>>(),
            "skipped_indices": est.skipped_indices,
            "verdict": verdict_json(&est),
        })),
        Output::Csv => {
            println!("i,estimate");
            for (i, v) in est.sequence.iter().enumerate() {
                println!("{i},{v}");
            }
        }
    }
    Ok(0)
}

fn limit_kind_json(k: &LimitKind) -> Value {
    match k {
        LimitKind::Finite(v) => json!({ "kind": "Finite", "value": jnum(*v) }),
        LimitKind::PlusInfinity => json!({ "kind": "PlusInfinity" }),
        LimitKind::MinusInfinity => json!({ "kind": "MinusInfinity" }),
        LimitKind::Inconclusive => json!({ "kind": "Inconclusive" }),
    }
}

fn limit_kind_text(k: &LimitKind) -> String {
    match k {
        LimitKind::Finite(v) => format!("Finite({v})"),
        LimitKind::PlusInfinity => "+inf".into(),
        LimitKind::MinusInfinity => "-inf".into(),
        LimitKind::Inconclusive => "inconclusive".into(),
    }
}

fn status_json(s: &BoundStatus) -> Value {
    match s {
        BoundStatus::Bounded { m_estimate } => {
            json!({ "kind": "Bounded", "m_estimate": jnum(*m_estimate) })
        }
        BoundStatus::Unbounded => json!({ "kind": "Unbounded" }),
        BoundStatus::Inconclusive => json!({ "kind": "Inconclusive" }),
    }
}

fn status_text(s: &BoundStatus) -> String {
    match s {
        BoundStatus::Bounded { m_estimate } => format!("Bounded(M={m_estimate})"),
        BoundStatus::Unbounded => "Unbounded".into(),
        BoundStatus::Inconclusive => "Inconclusive".into(),
    }
}

fn bound_report_json(r: &BoundednessReport) -> Value {
    json!({
        "function": render(&r.function),
        "variable": r.variable,
        "x_min": jnum(r.x_min),
        "bounding_order": r.bounding_order,
        "alternating_sign_note": r.alternating_sign_note,
        "numerical_evidence_only": r.numerical_evidence_only,
        "verdicts": r.verdicts.iter().map(|v| json!({
            "order": v.order,
            "sup_estimate": jnum(v.sup_estimate),
            "tail": limit_kind_json(&v.tail),
            "status": status_json(&v.status),
            "reason": v.reason.clone().map(Value::from).unwrap_or(Value::Null),
        })).collect::<Vec<_>>(),
    })
}

fn bound_report_text(r: &BoundednessReport) -> String {
    let mut lines = vec![format!(
        "derivative boundedness of {} in {} on [{}, inf)",
        render(&r.function),
        r.variable,
        r.x_min
    )];
    for v in &r.verdicts {
        let mut line = format!(
            "  n={}: sup~{} tail={} {}",
            v.order,
            v.sup_estimate,
            limit_kind_text(&v.tail),
            status_text(&v.status)
        );
        if let Some(reason) = &v.reason {
            line.push_str(&format!(" ({reason})"));
        }
        lines.push(line);
    }
    lines.push(match r.bounding_order {
        Some(n) => format!("bounded at order {n}"),
        None => "no bounded derivative order found".into(),
    });
    if r.alternating_sign_note {
        lines.push("note: consecutive divergences alternate in sign (numerical artifact)".into());
    }
    lines.join("\n")
}

fn cmd_bound(
    src: &str,
    var: &str,
    flags: &AnalysisFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = analysis_config(flags)?;
    let f = parse_expr(src)?;
    let report = find_bounding_order(&f, var, &cfg)?;
    match out {
        Output::Text => println!("{}", bound_report_text(&report)),
        Output::Json => emit(&json!({
            "command": "bound",
            "expression": src,
            "n_max": cfg.n_max,
            "report": bound_report_json(&report),
        })),
        Output::Csv => {
            println!("order,sup_estimate,tail,status,reason");
            for v in &report.verdicts {
                println!(
                    "{},{},{},{},\"{}\"",
                    v.order,
                    v.sup_estimate,
                    limit_kind_text(&v.tail),
                    status_text(&v.status),
                    v.reason.as_deref().unwrap_or("")
                );
            }
        }
    }
    Ok(0)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::PolynomialTimeCandidate => "PolynomialTimeCandidate",
        Verdict::NotPolynomialTime => "NotPolynomialTime",
        Verdict::Inconclusive => "Inconclusive",
    }
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::PolynomialTimeCandidate => 0,
        Verdict::NotPolynomialTime => 1,
        Verdict::Inconclusive => 2,
    }
}

fn classification_json(cls: &Classification) -> Value {
    json!({
        "verdict": verdict_name(cls.verdict),
        "degree_estimate": cls.degree_estimate,
        "per_variable": cls.per_variable.iter().map(|(v, r)| json!({
            "variable": v,
            "report": bound_report_json(r),
        })).collect::<Vec<_>>(),
        "notes": cls.notes,
    })
}

fn classification_text(cls: &Classification) -> String {
    let mut lines = vec![format!("verdict: {}", verdict_name(cls.verdict))];
    match cls.degree_estimate {
        Some(d) => lines.push(format!("degree estimate: {d}")),
        None => lines.push("degree estimate: none".into()),
    }
    for (var, report) in &cls.per_variable {
        lines.push(format!(
            "{}: bounding order {}",
            var,
            report
                .bounding_order
                .map(|n| n.to_string())
                .unwrap_or_else(|| "none".into())
        ));
    }
    for note in &cls.notes {
        lines.push(format!("note: {note}"));
    }
    lines.join("\n")
}

fn cmd_classify(
    src: &str,
    vars: Option<&[String]>,
    flags: &AnalysisFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = analysis_config(flags)?;
    let f = parse_expr(src)?;
    let vars: Vec<String> = match vars {
        Some(v) => v.to_vec(),
        None => f.free_vars().into_iter().collect(),
    };
    let cls = if vars.is_empty() {
        // Constant expressions are classified as functions of a dummy x.
        classify_univariate(&f, "x", &cfg)?
    } else {
        classify_multivariate(&f, &vars, &cfg)?
    };
    match out {
        Output::Text => println!("{}", classification_text(&cls)),
        Output::Json => emit(&json!({
            "command": "classify",
            "expression": src,
            "variables": vars,
            "classification": classification_json(&cls),
        })),
        Output::Csv => {
            println!("variable,bounding_order,verdict,degree_estimate");
            for (var, report) in &cls.per_variable {
                println!(
                    "{},{},{},{}",
                    var,
                    report
                        .bounding_order
                        .map(|n| n.to_string())
                        .unwrap_or_default(),
                    verdict_name(cls.verdict),
                    cls.degree_estimate
                        .map(|d| d.to_string())
                        .unwrap_or_default()
                );
            }
        }
    }
    Ok(verdict_exit(cls.verdict))
}

fn model_fit_json(m: &ModelFit) -> Value {
    json!({
        "family": m.family.name(),
        "scale": jnum(m.scale),
        "shape": m.shape.map(jnum).unwrap_or(Value::Null),
        "residual": jnum(m.residual),
        "expression": render(&m.expr),
    })
}

fn cmd_fit(
    input: &PathBuf,
    format: InputFormat,
    flags: &AnalysisFlags,
    out: Output,
) -> Result<i32, Failure> {
    let cfg = analysis_config(flags)?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", input.display())))?;
    let samples = load_samples(
        &text,
        match format {
            InputFormat::Csv => SampleFormat::Csv,
            InputFormat::Json => SampleFormat::Json,
        },
    )?;
    let fits = fit_models(&samples)?;
    let cls = classify_empirical(&samples, &cfg)?;
    match out {
        Output::Text => {
            println!("samples: {}", samples.len());
            println!("rank,family,scale,shape,residual");
            for (i, m) in fits.iter().enumerate() {
                println!(
                    "{},{},{},{},{}",
                    i + 1,
                    m.family.name(),
                    m.scale,
                    m.shape.map(|a| a.to_string()).unwrap_or_default(),
                    m.residual
                );
            }
            println!("{}", classification_text(&cls));
        }
        Output::Json => emit(&json!({
            "command": "fit",
            "input": input.display().to_string(),
            "samples": samples.len(),
            "ranking": fits.iter().map(model_fit_json).collect::<Vec<_>>(),
            "classification": classification_json(&cls),
        })),
        Output::Csv => {
            println!("rank,family,scale,shape,residual");
            for (i, m) in fits.iter().enumerate() {
                println!(
                    "{},{},{},{},{}",
                    i + 1,
                    m.family.name(),
                    m.scale,
                    m.shape.map(|a| a.to_string()).unwrap_or_default(),
                    m.residual
                );
            }
        }
    }
    Ok(verdict_exit(cls.verdict))
}
