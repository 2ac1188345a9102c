//! Command-line front end: configuration, subcommands and report emission.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::admissibility::{approach_grid, full_report, ReportOptions, TrendRule};
use crate::error::{Error, Result};
use crate::family::{FamilyEvaluator, TailPolicy};
use crate::number_theory::{divisor_profile, exact_count, CountKind, DEFAULT_BUDGET};
use crate::saddle::{
    baez_duarte_estimate_with, hardy_ramanujan, hayman_estimate_with, scheme_by_name, ApproxScheme,
    EstimateComparison, Oracle, PowerOfLog, ScaledMean,
};
use crate::series::io::resolve_series;
use crate::series::{builtin, exp_series, fmt_float, CoefficientSeries, Params, Radius};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything that determines a run's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub precision_bits: u32,
    /// Coefficients of g materialised up front (the fit window lives inside this).
    pub truncation: usize,
    pub window: Option<[usize; 2]>,
    /// Exponent range k of the approach grid: R(1 − 2^{−k}) or 2^k.
    pub grid: Option<[i32; 2]>,
    pub theta_points: usize,
    pub trend: TrendRule,
    pub tail: TailPolicy,
    pub max_f_coeffs: usize,
    pub budget_bytes: u64,
    pub format: Format,
    /// Radius assumed for CSV coefficient files.
    pub csv_radius: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_bits: crate::series::DEFAULT_PREC,
            truncation: 1024,
            window: None,
            grid: None,
            theta_points: 512,
            trend: TrendRule::default(),
            tail: TailPolicy::default(),
            max_f_coeffs: 1 << 17,
            budget_bytes: DEFAULT_BUDGET,
            format: Format::Json,
            csv_radius: "1".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    fn evaluator(&self, g: CoefficientSeries) -> FamilyEvaluator {
        FamilyEvaluator::with_options(g, self.precision_bits, self.tail.clone()).with_max_f_coeffs(self.max_f_coeffs)
    }

    fn series(&self, spec: &str) -> Result<CoefficientSeries> {
        resolve_series(spec, self.truncation, Radius::parse(&self.csv_radius)?)
    }
}

#[derive(Debug, Parser)]
#[command(name = "khinchin", version, about = "Khinchin families, Hayman-class checks and saddle-point estimates")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags and environment override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "KHINCHIN_PRECISION")]
    pub precision: Option<u32>,
    /// Truncation order N of g.
    #[arg(long = "terms", global = true)]
    pub terms: Option<usize>,
    /// Memory budget in bytes for exact tables.
    #[arg(long, global = true, env = "KHINCHIN_BUDGET")]
    pub budget: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Radius assumed for CSV coefficient files ("inf" or a decimal).
    #[arg(long = "csv-radius", global = true)]
    pub csv_radius: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Plain,
    Factorial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Of {
    F,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    F,
    Mean,
    Var,
    Mass,
    Char,
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Auto,
    None,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact coefficients of f = e^g (or of g).
    Coeffs {
        #[arg(long)]
        series: String,
        #[arg(long)]
        n: usize,
        /// First index printed (defaults to n).
        #[arg(long)]
        from: Option<usize>,
        #[arg(long, value_enum, default_value = "plain")]
        scale: Scale,
        #[arg(long, value_enum, default_value = "f")]
        of: Of,
    },
    /// Real-axis and circle quantities of the family.
    Eval {
        #[arg(long)]
        series: String,
        /// A point, or lo:hi:steps spaced geometrically toward the radius. Repeatable.
        #[arg(long = "t", required = true)]
        t: Vec<String>,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        theta: Option<f64>,
        /// Index n for --what mass.
        #[arg(long)]
        index: Option<usize>,
    },
    /// σ_c, σ_c^odd, χ and ω for one m or a range a:b.
    Divisors {
        #[arg(long, conflicts_with = "range")]
        m: Option<u64>,
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = 1)]
        c: u32,
    },
    /// Exact counts from the independent tables.
    Exact {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: u64,
    },
    /// Admissibility report.
    Check {
        #[arg(long)]
        series: String,
        /// Fit window lo:hi.
        #[arg(long)]
        window: Option<String>,
        /// Grid exponents k0:k1.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        no_diagnostics: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Coefficient estimates against exact values.
    Estimate {
        #[arg(long)]
        series: String,
        /// Comma list or a:b:step. Repeatable.
        #[arg(long = "n", required = true)]
        n: Vec<String>,
        /// saddle, identity, euler, power_of_log:A:p, scaled_mean:c or file:path.json
        #[arg(long, default_value = "saddle")]
        scheme: String,
        #[arg(long, value_enum, default_value = "auto")]
        oracle: OracleMode,
    },
    /// Run a named scenario end to end.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(FIXTURES))]
        fixture: String,
    },
}

pub const FIXTURES: &[&str] =
    &["partitions-hardy-ramanujan", "bell-hayman", "distinct-parts-direct", "forests-counterexample"];

/// Run with explicit arguments; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = json!({"error": "usage", "message": e.to_string().trim()});
            let _ = writeln!(err, "{msg}");
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = json!({"error": e.kind(), "message": e.to_string()});
            let _ = writeln!(err, "{msg}");
            1
        }
    }
}

pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = g.precision {
        cfg.precision_bits = p;
    }
    if let Some(n) = g.terms {
        cfg.truncation = n;
    }
    if let Some(b) = g.budget {
        cfg.budget_bytes = b;
    }
    if let Some(f) = g.format {
        cfg.format = f;
    }
    if let Some(r) = &g.csv_radius {
        cfg.csv_radius = r.clone();
    }
    if cfg.precision_bits < 64 {
        return Err(Error::InvalidParameter { name: "precision".into(), reason: "at least 64 bits".into() });
    }
    Ok(cfg)
}

fn io(e: std::io::Error) -> Error {
    Error::Io { path: "<output>".into(), message: e.to_string() }
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T)> {
    let bad = || Error::Parse(format!("{what} `{s}` is not lo:hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_float(s: &str, prec: u32) -> Result<Float> {
    let v = Float::parse(s.trim()).map_err(|_| Error::Parse(format!("`{s}` is not a number")))?;
    Ok(Float::with_val(prec, v))
}

/// Points from `t` or `lo:hi:steps`, spaced geometrically toward the radius.
pub fn parse_t_spec(s: &str, radius: &Radius, prec: u32) -> Result<Vec<Float>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse_float(one, prec)?]),
        [lo, hi, steps] => {
            let lo = parse_float(lo, prec)?;
            let hi = parse_float(hi, prec)?;
            let steps: usize = steps.trim().parse().map_err(|_| Error::Parse(format!("bad step count in `{s}`")))?;
            if steps < 2 {
                return Ok(vec![lo]);
            }
            Ok((0..steps)
                .map(|i| {
                    let w = Float::with_val(prec, i) / (steps - 1) as u32;
                    match radius {
                        Radius::Finite(r) => {
                            let a = Float::with_val(prec, r - &lo);
                            let b = Float::with_val(prec, r - &hi);
                            let q = Float::with_val(prec, &b / &a).ln() * &w;
                            Float::with_val(prec, r - a * q.exp())
                        }
                        Radius::Infinite => {
                            let q = Float::with_val(prec, &hi / &lo).ln() * &w;
                            Float::with_val(prec, &lo * q.exp())
                        }
                    }
                })
                .collect())
        }
        _ => Err(Error::Parse(format!("t spec `{s}` is neither a point nor lo:hi:steps"))),
    }
}

/// Indices from `a,b,c` or `a:b:step`.
pub fn parse_n_spec(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("n spec `{s}` is neither a list nor a:b:step"));
    if s.contains(':') {
        let p: Vec<u64> = s.split(':').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match p.as_slice() {
            [a, b] => Ok((*a..=*b).collect()),
            [a, b, step] if *step > 0 => Ok((*a..=*b).step_by(*step as usize).collect()),
            _ => Err(bad()),
        }
    } else {
        s.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

fn digits(x: &Float) -> String {
    fmt_float(x, 20)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Coeffs { series, n, from, scale, of } => coeffs(&cfg, series, *n, from.unwrap_or(*n), *scale, *of, out),
        Command::Eval { series, t, what, theta, index } => eval(&cfg, series, t, *what, *theta, *index, out),
        Command::Divisors { m, range, c } => divisors(&cfg, *m, range.as_deref(), *c, out),
        Command::Exact { kind, n } => {
            let v = exact_count(&CountKind::parse(kind)?, *n, cfg.budget_bytes)?;
            match cfg.format {
                Format::Csv => writeln!(out, "n,value\n{n},{v}").map_err(io),
                Format::Json => writeln!(out, "{}", json!({"kind": kind, "n": n, "value": v.to_string()})).map_err(io),
            }
        }
        Command::Check { series, window, grid, alpha, no_diagnostics, json } => {
            let mut cfg = cfg.clone();
            if let Some(w) = window {
                let (a, b) = parse_pair(w, "window")?;
                cfg.window = Some([a, b]);
            }
            if let Some(gk) = grid {
                let (a, b) = parse_pair(gk, "grid")?;
                cfg.grid = Some([a, b]);
            }
            check(&cfg, series, *alpha, !*no_diagnostics, json.as_deref(), out)
        }
        Command::Estimate { series, n, scheme, oracle } => {
            let mut ns = Vec::new();
            for s in n {
                ns.extend(parse_n_spec(s)?);
            }
            ns.sort_unstable();
            ns.dedup();
            estimate(&cfg, series, &ns, scheme, *oracle, out)
        }
        Command::Reproduce { fixture } => reproduce(&cfg, fixture, out),
    }
}

fn coeffs(cfg: &RunConfig, spec: &str, n: usize, from: usize, scale: Scale, of: Of, out: &mut dyn Write) -> Result<()> {
    if from > n {
        return Err(Error::Usage(format!("--from {from} exceeds --n {n}")));
    }
    let g = cfg.series(spec)?;
    let g = if g.truncation_order() < n { g.extend(n)? } else { g };
    let series = match of {
        Of::G => g,
        Of::F => exp_series(&g)?,
    };
    if cfg.format == Format::Csv {
        writeln!(out, "n,value").map_err(io)?;
    }
    for k in from..=n {
        let mut q = series.exact(k).ok_or(Error::InexactCoefficient { index: k })?;
        if scale == Scale::Factorial {
            q *= Integer::from(Integer::factorial(k as u32));
        }
        match cfg.format {
            Format::Csv => writeln!(out, "{k},{q}"),
            Format::Json => writeln!(out, "{}", json!({"n": k, "value": q.to_string()})),
        }
        .map_err(io)?;
    }
    Ok(())
}

fn eval(
    cfg: &RunConfig,
    spec: &str,
    ts: &[String],
    what: What,
    theta: Option<f64>,
    index: Option<usize>,
    out: &mut dyn Write,
) -> Result<()> {
    let ev = cfg.evaluator(cfg.series(spec)?);
    let mut points = Vec::new();
    for s in ts {
        points.extend(parse_t_spec(s, ev.radius(), cfg.precision_bits)?);
    }
    let need = |name: &str| Error::Usage(format!("--what {name} needs --{}", if name == "mass" { "index" } else { "theta" }));
    let rows: Vec<Result<serde_json::Value>> = points
        .par_iter()
        .map(|t| {
            let value = match what {
                What::F => json!(digits(&ev.log_f(t)?)),
                What::Mean => json!(digits(&ev.mean(t)?)),
                What::Var => json!(digits(&ev.variance(t)?)),
                What::Ratio => json!(digits(&ev.gaussianity_ratio(t)?)),
                What::Mass => json!(digits(&ev.mass(t, index.ok_or_else(|| need("mass"))?)?)),
                What::Char => {
                    let z = ev.char_fn(t, theta.ok_or_else(|| need("char"))?)?;
                    json!({"re": z.re, "im": z.im})
                }
            };
            let key = match what {
                What::F => "log_f",
                What::Mean => "mean",
                What::Var => "variance",
                What::Ratio => "gaussianity_ratio",
                What::Mass => "mass",
                What::Char => "char",
            };
            Ok(json!({"t": digits(t), key: value}))
        })
        .collect();
    let mut csv_header = false;
    for r in rows {
        let r = r?;
        match cfg.format {
            Format::Json => writeln!(out, "{r}").map_err(io)?,
            Format::Csv => {
                let obj = r.as_object().unwrap();
                let (key, v) = obj.iter().find(|(k, _)| k.as_str() != "t").unwrap();
                if !csv_header {
                    let h = if key == "char" { "t,re,im".to_string() } else { format!("t,{key}") };
                    writeln!(out, "{h}").map_err(io)?;
                    csv_header = true;
                }
                let t = obj["t"].as_str().unwrap();
                match v {
                    serde_json::Value::String(s) => writeln!(out, "{t},{s}"),
                    other => writeln!(out, "{t},{},{}", other["re"], other["im"]),
                }
                .map_err(io)?;
            }
        }
    }
    Ok(())
}

fn divisors(cfg: &RunConfig, m: Option<u64>, range: Option<&str>, c: u32, out: &mut dyn Write) -> Result<()> {
    let ms: Vec<u64> = match (m, range) {
        (Some(m), _) => vec![m],
        (None, Some(r)) => {
            let (a, b): (u64, u64) = parse_pair(r, "range")?;
            (a.max(1)..=b).collect()
        }
        (None, None) => return Err(Error::Usage("give --m or --range".into())),
    };
    if ms.first() == Some(&0) {
        return Err(Error::InvalidParameter { name: "m".into(), reason: "must be positive".into() });
    }
    if cfg.format == Format::Csv {
        writeln!(out, "m,c,sigma,sigma_odd,chi,omega").map_err(io)?;
    }
    for m in ms {
        let p = divisor_profile(m, c);
        match cfg.format {
            Format::Json => writeln!(out, "{}", serde_json::to_string(&p).unwrap()),
            Format::Csv => writeln!(out, "{},{},{},{},{},{}", p.m, p.c, p.sigma, p.sigma_odd, p.chi, p.omega),
        }
        .map_err(io)?;
    }
    Ok(())
}

fn check(
    cfg: &RunConfig,
    spec: &str,
    alpha: Option<f64>,
    with_diagnostics: bool,
    json_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let ev = cfg.evaluator(cfg.series(spec)?);
    let opts = ReportOptions {
        window: cfg.window.map(|[a, b]| (a, b)),
        grid: cfg.grid.map(|[a, b]| approach_grid(ev.radius(), a..=b, cfg.precision_bits)),
        alpha,
        theta_points: cfg.theta_points,
        rule: cfg.trend.clone(),
        diagnostics: with_diagnostics,
    };
    let report = full_report(&ev, &opts);
    let doc = json!({"artifact": "khinchin", "version": VERSION, "config": cfg, "report": report});
    let text = serde_json::to_string_pretty(&doc).unwrap();
    if let Some(p) = json_path {
        std::fs::write(p, format!("{text}\n"))
            .map_err(|e| Error::Io { path: p.display().to_string(), message: e.to_string() })?;
    }
    match cfg.format {
        Format::Json => writeln!(out, "{text}").map_err(io),
        Format::Csv => {
            writeln!(out, "quantity,t,value,argmax").map_err(io)?;
            if let Some(d) = &report.diagnostics {
                for tr in [&d.variance, &d.cut_condition, &d.minor_arc, &d.major_arc, &d.central_limit] {
                    for (i, t) in tr.grid.iter().enumerate() {
                        let am = tr.argmax.as_ref().and_then(|a| a[i]);
                        writeln!(out, "{},{t},{},{}", tr.quantity, opt(tr.values[i]), opt(am)).map_err(io)?;
                    }
                }
            }
            Ok(())
        }
    }
}

/// A scheme described in a JSON file.
#[derive(Debug, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
enum SchemeFile {
    PowerOfLog { a: f64, p: f64 },
    ScaledMean { c: f64 },
}

fn load_scheme(name: &str) -> Result<Option<Box<dyn ApproxScheme>>> {
    if name == "saddle" {
        return Ok(None);
    }
    if let Some(path) = name.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), message: e.to_string() })?;
        let s: SchemeFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
        return Ok(Some(match s {
            SchemeFile::PowerOfLog { a, p } => Box::new(PowerOfLog { a, p, label: name.into() }),
            SchemeFile::ScaledMean { c } => Box::new(ScaledMean(c)),
        }));
    }
    scheme_by_name(name).map(Some)
}

fn estimate(
    cfg: &RunConfig,
    spec: &str,
    ns: &[u64],
    scheme: &str,
    oracle: OracleMode,
    out: &mut dyn Write,
) -> Result<()> {
    let ev = cfg.evaluator(cfg.series(spec)?);
    let scheme = load_scheme(scheme)?;
    let orc = match oracle {
        OracleMode::Auto => Oracle::for_series(&ev),
        OracleMode::None => None,
    };
    let rows: Vec<Result<EstimateComparison>> = ns
        .par_iter()
        .map(|&n| match &scheme {
            None => hayman_estimate_with(&ev, n, orc.as_ref(), cfg.budget_bytes),
            Some(s) => baez_duarte_estimate_with(&ev, s.as_ref(), n, orc.as_ref(), cfg.budget_bytes),
        })
        .collect();
    let rows: Vec<EstimateComparison> = rows.into_iter().collect::<Result<_>>()?;
    match cfg.format {
        Format::Csv => {
            let tilde = rows.iter().any(|r| r.log_estimate_sigma_tilde.is_some());
            let mut head = "n,t,log_estimate,log_exact,log_ratio".to_string();
            if tilde {
                head.push_str(",log_estimate_sigma_tilde,log_ratio_sigma_tilde");
            }
            writeln!(out, "{head}").map_err(io)?;
            for r in &rows {
                let mut line =
                    format!("{},{},{},{},{}", r.n, r.t, r.log_estimate, opt(r.log_exact), opt(r.log_ratio));
                if tilde {
                    line.push_str(&format!(",{},{}", opt(r.log_estimate_sigma_tilde), opt(r.log_ratio_sigma_tilde)));
                }
                writeln!(out, "{line}").map_err(io)?;
            }
        }
        Format::Json => {
            for r in &rows {
                writeln!(out, "{}", serde_json::to_string(r).unwrap()).map_err(io)?;
            }
        }
    }
    Ok(())
}

fn reproduce(cfg: &RunConfig, fixture: &str, out: &mut dyn Write) -> Result<()> {
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io);
    let bi = |name: &str| builtin(name, &Params::new(), cfg.truncation);
    match fixture {
        "partitions-hardy-ramanujan" => {
            let ev = cfg.evaluator(bi("partitions")?);
            let ns = [50u64, 100, 200, 500];
            let rows: Vec<Result<(u64, Integer, f64, EstimateComparison)>> = ns
                .par_iter()
                .map(|&n| {
                    let p = exact_count(&CountKind::Partitions, n, cfg.budget_bytes)?;
                    let bd = baez_duarte_estimate_with(
                        &ev,
                        &PowerOfLog::euler_partitions(),
                        n,
                        Some(&Oracle::Count(CountKind::Partitions)),
                        cfg.budget_bytes,
                    )?;
                    Ok((n, p, hardy_ramanujan(n), bd))
                })
                .collect();
            w(out, "n,p_n,log_hardy_ramanujan,log_baez_duarte,hardy_ramanujan_ratio,baez_duarte_ratio".into())?;
            for r in rows {
                let (n, p, hr, bd) = r?;
                let lp = Float::with_val(cfg.precision_bits, &p).ln().to_f64();
                w(out, format!("{n},{p},{hr},{},{},{}", bd.log_estimate, (hr - lp).exp(), bd.log_ratio.unwrap().exp()))?;
            }
            Ok(())
        }
        "bell-hayman" => {
            let ev = cfg.evaluator(bi("sets_of_sets")?);
            let ns = [10u64, 20, 50, 100];
            let rows: Vec<Result<(u64, Integer, EstimateComparison)>> = ns
                .par_iter()
                .map(|&n| {
                    let b = exact_count(&CountKind::Bell, n, cfg.budget_bytes)?;
                    Ok((n, b, hayman_estimate_with(&ev, n, Some(&Oracle::Bell), cfg.budget_bytes)?))
                })
                .collect();
            w(out, "n,bell_n,t_n,log_estimate_times_factorial,ratio".into())?;
            for r in rows {
                let (n, b, e) = r?;
                let lf = Float::with_val(cfg.precision_bits, n + 1).ln_gamma().to_f64();
                w(out, format!("{n},{b},{},{},{}", e.t, e.log_estimate + lf, e.log_ratio.unwrap().exp()))?;
            }
            Ok(())
        }
        "distinct-parts-direct" => {
            let ev = cfg.evaluator(bi("distinct_parts")?);
            let report = full_report(
                &ev,
                &ReportOptions {
                    alpha: Some(17.0 / 12.0),
                    theta_points: cfg.theta_points,
                    rule: cfg.trend.clone(),
                    ..ReportOptions::default()
                },
            );
            w(out, format!("# verdict,{}", serde_json::to_value(report.verdict).unwrap().as_str().unwrap()))?;
            w(out, "quantity,t,value".into())?;
            if let Some(d) = &report.diagnostics {
                for tr in [&d.variance, &d.cut_condition, &d.minor_arc, &d.major_arc, &d.central_limit] {
                    for (t, v) in tr.grid.iter().zip(&tr.values) {
                        w(out, format!("{},{t},{}", tr.quantity, opt(*v)))?;
                    }
                }
            }
            let ns = [50u64, 100, 200, 500];
            let rows: Vec<Result<EstimateComparison>> = ns
                .par_iter()
                .map(|&n| hayman_estimate_with(&ev, n, Some(&Oracle::Count(CountKind::DistinctParts)), cfg.budget_bytes))
                .collect();
            w(out, "n,t_n,log_estimate,log_exact,ratio".into())?;
            for r in rows {
                let e = r?;
                w(out, format!("{},{},{},{},{}", e.n, e.t, e.log_estimate, opt(e.log_exact), e.log_ratio.unwrap().exp()))?;
            }
            Ok(())
        }
        "forests-counterexample" => {
            let ev = cfg.evaluator(bi("rooted_trees")?);
            let grid = approach_grid(ev.radius(), 3..=8, cfg.precision_bits);
            w(out, "k,t,mean,sigma,mean_over_sigma,gaussianity_ratio".into())?;
            for (k, t) in (3..=8).zip(&grid) {
                let s = ev.sums(t)?;
                let sigma = Float::with_val(cfg.precision_bits, s.s2.sqrt_ref());
                let r = ev.gaussianity_ratio(t)?;
                let q = Float::with_val(cfg.precision_bits, &s.s1 / &sigma);
                w(out, format!("{k},{},{},{},{},{}", digits(t), digits(&s.s1), digits(&sigma), digits(&q), digits(&r)))?;
            }
            Ok(())
        }
        other => Err(Error::Usage(format!("unknown fixture `{other}`"))),
    }
}
