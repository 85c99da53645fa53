//! Command-line front end: `jtheta eval`, `jtheta coeffs`, `jtheta verify`.

mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::complex_core::{Complex, TruncationPolicy, I};
use crate::elliptic::{elliptic_expansion, elliptic_theta, EllipticFunction, EllipticPoint, FormVariant};
use crate::error::{Error, Result};
use crate::report_io::{
    format_number, serialize_report, Deviation, Measurement, ReportFormat, Verdict, VerificationReport,
};
use crate::theta_classical::{theta_constants, theta_series, LatticeParameter, ThetaKind};
use crate::theta_expansion::{theta_via_expansion_with, ExpansionOptions, Summation};
use crate::trig_coefficients::{coefficients_closed_form, extract_coefficients_oracle, seeds_from_paper};
use crate::zeta::{zeta, ZetaRoute};

pub use suites::{run_suite, Suite, SuiteConfig};

/// Largest nome run without `--force`.
pub const NOME_GUARD: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "jtheta", version, about = "Theta, elliptic and zeta functions with cross-verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Real nome in [0, 1).
    #[arg(long, global = true, conflicts_with = "tau_im")]
    pub q: Option<f64>,
    /// Imaginary part of a purely imaginary τ.
    #[arg(long = "tau-im", global = true)]
    pub tau_im: Option<f64>,
    /// Highest coefficient order P.
    #[arg(long = "P", global = true, default_value_t = 64)]
    pub p: usize,
    /// Term tolerance of every truncated series.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Hard cap on the number of series terms.
    #[arg(long = "max-terms", global = true)]
    pub max_terms: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Allow nomes above the supported range.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Plain,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => ReportFormat::Json,
            OutputFormat::Csv => ReportFormat::Csv,
            OutputFormat::Plain => ReportFormat::Plain,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one function at a complex argument `re[,im]`.
    Eval {
        /// theta1, theta2, theta3, theta4, sn, cn, dn or zeta.
        function: String,
        /// Argument as `re` or `re,im`.
        #[arg(allow_hyphen_values = true)]
        argument: String,
        /// classical, expansion, resummed, literal, theta_ratio, fourier,
        /// rational_form, theorem6_canonical, theorem6_literal, log_derivative.
        #[arg(long)]
        route: Option<String>,
    },
    /// Tabulate c_2 … c_2P.
    Coeffs {
        /// Add contour-oracle and printed-seed columns.
        #[arg(long)]
        compare: bool,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: Vec<u8>, code: i32) -> Self {
        Self { code, stdout, stderr: String::new() }
    }

    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Self { code, stdout: Vec::new(), stderr }
    }
}

/// Validated configuration shared by the subcommands.
#[derive(Debug, Clone, Copy)]
pub struct CliConfig {
    pub lat: LatticeParameter,
    pub q: f64,
    pub policy: TruncationPolicy,
    pub max_order_p: usize,
    pub force: bool,
}

impl CliConfig {
    pub fn from_args(args: &ConfigArgs) -> Result<Self> {
        let (lat, q) = match (args.q, args.tau_im) {
            (Some(q), None) => {
                if !(0.0..1.0).contains(&q) {
                    return Err(Error::InvalidParameter(format!("--q must lie in [0, 1), got {q}")));
                }
                (LatticeParameter::from_nome(q)?, q)
            }
            (None, Some(t)) => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::InvalidParameter(format!("--tau-im must be positive, got {t}")));
                }
                (LatticeParameter::from_tau(I * t)?, (-std::f64::consts::PI * t).exp())
            }
            _ => return Err(Error::InvalidParameter("exactly one of --q and --tau-im is required".into())),
        };
        let mut policy = TruncationPolicy::default();
        if let Some(t) = args.tol {
            policy = policy.with_tolerance(t);
        }
        if let Some(m) = args.max_terms {
            policy = policy.with_max_terms(m);
        }
        policy.max_order_p = policy.max_order_p.max(args.p);
        policy.validate()?;
        if args.p == 0 {
            return Err(Error::InvalidParameter("--P must be positive".into()));
        }
        Ok(Self { lat, q, policy, max_order_p: args.p, force: args.force })
    }

    pub fn in_guarded_range(&self) -> bool {
        self.force || self.q <= NOME_GUARD
    }

    fn range_message(&self) -> String {
        format!("q = {} is outside the supported range (0, {NOME_GUARD}]; pass --force to run anyway", self.q)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { Outcome::ok(text.into_bytes(), 0) } else { Outcome::fail(2, text) };
        }
    };
    let cfg = match CliConfig::from_args(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => return Outcome::fail(2, format!("configuration error: {e}")),
    };
    let outcome = match &cli.command {
        Command::Eval { function, argument, route } => {
            let format = cli.config.format.unwrap_or(OutputFormat::Plain);
            cmd_eval(function, argument, route.as_deref(), &cfg, format)
        }
        Command::Coeffs { compare } => cmd_coeffs(*compare, &cfg, cli.config.format.unwrap_or(OutputFormat::Plain)),
        Command::Verify { suite } => cmd_verify(*suite, &cfg, cli.config.format.unwrap_or(OutputFormat::Json)),
    };
    match (&cli.config.out, outcome.stdout.is_empty()) {
        (Some(path), false) => match std::fs::write(path, &outcome.stdout) {
            Ok(()) => Outcome { stdout: Vec::new(), ..outcome },
            Err(e) => Outcome::fail(2, format!("cannot write {}: {e}", path.display())),
        },
        _ => outcome,
    }
}

fn parse_complex(s: &str) -> Result<Complex> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("cannot read {t:?} as a number")))
    };
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(parse(re)?, parse(im)?)),
        None => Ok(Complex::new(parse(s)?, 0.0)),
    }
}

fn format_complex(z: Complex) -> String {
    if z.im == 0.0 {
        format_number(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{} {sign} {}i", format_number(z.re), format_number(z.im.abs()))
    }
}

fn evaluate(function: &str, z: Complex, route: Option<&str>, cfg: &CliConfig) -> Result<(Complex, &'static str)> {
    let lat = &cfg.lat;
    let table = || coefficients_closed_form(lat, cfg.max_order_p, &cfg.policy);
    let unknown_route =
        |r: &str| Error::InvalidParameter(format!("route {r:?} does not apply to {function}"));
    if let Some(idx) = function.strip_prefix("theta") {
        let which = ThetaKind::try_from(idx.parse::<u8>().unwrap_or(0))?;
        return match route.unwrap_or("classical") {
            "classical" => Ok((theta_series(which, z, lat, &cfg.policy)?, "classical")),
            "expansion" => Ok((
                theta_via_expansion_with(which, z, lat, &table()?, &cfg.policy, ExpansionOptions::default())?,
                "expansion",
            )),
            "resummed" => Ok((
                theta_via_expansion_with(
                    which,
                    z,
                    lat,
                    &table()?,
                    &cfg.policy,
                    ExpansionOptions::default().with_summation(Summation::Resummed),
                )?,
                "resummed",
            )),
            r => Err(unknown_route(r)),
        };
    }
    let f = match function {
        "sn" => Some(EllipticFunction::Sn),
        "cn" => Some(EllipticFunction::Cn),
        "dn" => Some(EllipticFunction::Dn),
        _ => None,
    };
    if let Some(f) = f {
        let pt = EllipticPoint::from_u(z, lat, &cfg.policy)?;
        let expand = |form, summation| elliptic_expansion(f, &pt, &table()?, form, summation, &cfg.policy);
        return match route.unwrap_or("theta_ratio") {
            "theta_ratio" => Ok((elliptic_theta(f, &pt, &cfg.policy)?, "theta_ratio")),
            "expansion" => Ok((expand(FormVariant::CanonicalDerived, Summation::Adaptive)?, "expansion")),
            "resummed" => Ok((expand(FormVariant::CanonicalDerived, Summation::Resummed)?, "resummed")),
            "literal" => Ok((expand(FormVariant::PaperLiteral, Summation::Adaptive)?, "literal")),
            r => Err(unknown_route(r)),
        };
    }
    if function == "zeta" {
        let name = route.unwrap_or("fourier");
        let r = ZetaRoute::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| unknown_route(name))?;
        return Ok((zeta(z, lat, r, &table()?, &cfg.policy)?, r.name()));
    }
    Err(Error::InvalidParameter(format!(
        "unknown function {function:?}; expected theta1..theta4, sn, cn, dn or zeta"
    )))
}

fn cmd_eval(function: &str, argument: &str, route: Option<&str>, cfg: &CliConfig, format: OutputFormat) -> Outcome {
    let z = match parse_complex(argument) {
        Ok(z) => z,
        Err(e) => return Outcome::fail(2, format!("configuration error: {e}")),
    };
    if !cfg.in_guarded_range() {
        return Outcome::fail(1, cfg.range_message());
    }
    let (value, route) = match evaluate(function, z, route, cfg) {
        Ok(v) => v,
        Err(e @ Error::InvalidParameter(_)) => return Outcome::fail(2, format!("configuration error: {e}")),
        Err(e) => return Outcome::fail(1, format!("{function}({}) failed: {e}", format_complex(z))),
    };
    let text = match format {
        OutputFormat::Plain => format!("{}\n", format_complex(value)),
        OutputFormat::Json => {
            let v = json!({
                "function": function,
                "argument": {"re": z.re, "im": z.im},
                "route": route,
                "q": cfg.q,
                "value": {"re": value.re, "im": value.im},
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("finite values serialize"))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let row = [
                function.to_string(),
                route.to_string(),
                format_number(cfg.q),
                format_number(z.re),
                format_number(z.im),
                format_number(value.re),
                format_number(value.im),
            ];
            w.write_record(["function", "route", "q", "arg_re", "arg_im", "value_re", "value_im"])
                .and_then(|_| w.write_record(&row))
                .expect("in-memory csv");
            return Outcome::ok(w.into_inner().expect("in-memory csv"), 0);
        }
    };
    Outcome::ok(text.into_bytes(), 0)
}

struct CoeffRow {
    p: usize,
    closed: f64,
    oracle: Option<f64>,
    seed: Option<f64>,
    flag: Option<&'static str>,
}

fn coefficient_rows(compare: bool, cfg: &CliConfig) -> Result<Vec<CoeffRow>> {
    let closed = coefficients_closed_form(&cfg.lat, cfg.max_order_p, &cfg.policy)?;
    let oracle = if compare { extract_coefficients_oracle(&cfg.lat, cfg.max_order_p, &cfg.policy).ok() } else { None };
    let seeds = if compare && !cfg.lat.is_degenerate() {
        Some(seeds_from_paper(&theta_constants(&cfg.lat, &cfg.policy)?))
    } else {
        None
    };
    Ok(closed
        .values()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = i + 1;
            let seed = seeds.and_then(|s| match p {
                1 => Some(s.c2.re),
                2 => Some(s.c4.re),
                _ => None,
            });
            let flag = seed.map(|s| if (s - c.re).abs() <= 1e-10 * c.re.abs().max(1.0) { "ok" } else { "discrepancy" });
            CoeffRow { p, closed: c.re, oracle: oracle.as_ref().and_then(|o| o.get(p)).map(|z| z.re), seed, flag }
        })
        .collect())
}

fn cmd_coeffs(compare: bool, cfg: &CliConfig, format: OutputFormat) -> Outcome {
    if !cfg.in_guarded_range() {
        return Outcome::fail(1, cfg.range_message());
    }
    let rows = match coefficient_rows(compare, cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(1, format!("coefficients failed: {e}")),
    };
    let opt = |x: Option<f64>| x.map(format_number).unwrap_or_default();
    let bytes = match format {
        OutputFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = json!({"p": r.p, "order": 2 * r.p, "closed_form": r.closed});
                    if compare {
                        v["oracle"] = json!(r.oracle);
                        v["paper_seed"] = json!(r.seed);
                        v["flag"] = json!(r.flag);
                    }
                    v
                })
                .collect();
            let doc = json!({"q": cfg.q, "P": cfg.max_order_p, "method": "closed_form", "rows": rows});
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("finite values serialize")).into_bytes()
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["p", "order", "closed_form"];
            if compare {
                header.extend(["oracle", "paper_seed", "flag"]);
            }
            w.write_record(&header).expect("in-memory csv");
            for r in &rows {
                let mut rec = vec![r.p.to_string(), (2 * r.p).to_string(), format_number(r.closed)];
                if compare {
                    rec.extend([opt(r.oracle), opt(r.seed), r.flag.unwrap_or_default().to_string()]);
                }
                w.write_record(&rec).expect("in-memory csv");
            }
            w.into_inner().expect("in-memory csv")
        }
        OutputFormat::Plain => {
            let mut out = String::new();
            if compare {
                out.push_str(&format!("{:>4} {:>6} {:>24} {:>24} {:>24} {}\n", "p", "order", "closed_form", "oracle", "paper_seed", "flag"));
            } else {
                out.push_str(&format!("{:>4} {:>6} {:>24}\n", "p", "order", "closed_form"));
            }
            for r in &rows {
                out.push_str(&format!("{:>4} {:>6} {:>24}", r.p, 2 * r.p, format_number(r.closed)));
                if compare {
                    out.push_str(&format!(" {:>24} {:>24} {}", opt(r.oracle), opt(r.seed), r.flag.unwrap_or("")));
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    Outcome::ok(bytes, 0)
}

/// Report for a nome outside the supported range.
pub fn range_guard_report(suite: Suite, cfg: &CliConfig) -> VerificationReport {
    let mut rep = VerificationReport::new(suite.name()).param("force", false);
    rep.set_number("q", cfg.q);
    rep.set_param("error", cfg.range_message());
    let mut d = Deviation::new();
    d.add_real(cfg.q, NOME_GUARD);
    rep.push(Measurement::new(
        "supported nome range",
        "q",
        "upper bound",
        &d,
        Measurement::within(0.0, crate::report_io::DeviationScale::Absolute),
    ));
    rep
}

fn cmd_verify(suite: Suite, cfg: &CliConfig, format: OutputFormat) -> Outcome {
    let rep = if cfg.in_guarded_range() {
        run_suite(suite, &SuiteConfig::from_cli(cfg))
    } else {
        range_guard_report(suite, cfg)
    };
    let code = if rep.verdict == Verdict::Fail { 1 } else { 0 };
    Outcome::ok(serialize_report(&rep, format.into()), code)
}
