//! The `hamcon` command line.
//!
//! Exit codes: 0 when every asserted row passes, 1 when a row fails, 2 on
//! usage or input errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{h_exponent, BoundId, BoundParams};
use crate::error::Error;
use crate::report::{fmt_num, TargetKind};
use crate::scenario_file::load_scenario;
use crate::space::DEFAULT_ENUMERATION_CAP;
use crate::verify::{sweep, verify, ScenarioLimits};

/// Overrides the default enumeration cap (a positive integer).
pub const ENUM_CAP_ENV: &str = "HAMCON_ENUM_CAP";

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hamcon",
    version,
    about = "Check concentration bounds for weighted Hamming distances"
)]
pub struct Cli {
    /// Seed for every random choice; overrides the scenario file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one closed-form bound (or the exponent `h`).
    EvalBound(EvalBoundArgs),
    /// Verify a scenario file against every applicable bound.
    Verify(VerifyArgs),
    /// Verify random scenarios in parallel.
    Sweep(SweepArgs),
    /// Tabulate bounds over a parameter range as CSV.
    Curves(CurvesArgs),
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub n: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> BoundParams {
        BoundParams {
            t: self.t,
            rho: self.rho,
            lambda: self.lambda,
            gap: self.gap,
            mu: self.mu,
            a: self.a,
            b: self.b,
            n: self.n,
        }
    }

    fn given(&self) -> Vec<(&'static str, f64)> {
        [
            ("t", self.t),
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("gap", self.gap),
            ("mu", self.mu),
            ("a", self.a),
            ("b", self.b),
            ("n", self.n),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct EvalBoundArgs {
    /// Bound name such as `improved-set` or `gap-improved`, or `h`.
    pub name: String,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Set,
    Median,
    Gap,
    Drop,
}

impl From<KindArg> for TargetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Set => TargetKind::Set,
            KindArg::Median => TargetKind::Median,
            KindArg::Gap => TargetKind::Gap,
            KindArg::Drop => TargetKind::Drop,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = ScenarioLimits::default().max_n)]
    pub max_n: usize,
    #[arg(long, default_value_t = ScenarioLimits::default().max_alphabet)]
    pub max_alphabet: usize,
    #[arg(long, default_value_t = ScenarioLimits::default().max_outcomes)]
    pub max_outcomes: u64,
    /// Write per-trial outcomes as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Comma-separated bound names; `h` is accepted as well.
    #[arg(long, value_delimiter = ',', required = true)]
    pub bounds: Vec<String>,
    /// `start:end:steps`, inclusive on both ends.
    #[arg(long, conflicts_with_all = ["rho_range", "lambda_range"])]
    pub t_range: Option<String>,
    #[arg(long, conflicts_with = "lambda_range")]
    pub rho_range: Option<String>,
    #[arg(long)]
    pub lambda_range: Option<String>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Default enumeration cap, taken from `HAMCON_ENUM_CAP` when set.
pub fn enumeration_cap_from_env() -> anyhow::Result<u64> {
    match std::env::var(ENUM_CAP_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(cap) if cap > 0 => Ok(cap),
            _ => bail!("{ENUM_CAP_ENV} must be a positive integer, got `{v}`"),
        },
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_ENUMERATION_CAP),
        Err(e) => bail!("{ENUM_CAP_ENV}: {e}"),
    }
}

/// Parse `start:end:steps` into `steps` evenly spaced values.
pub fn parse_range(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, steps] = parts.as_slice() else {
        bail!("range `{spec}` must look like start:end:steps");
    };
    let start: f64 = start
        .trim()
        .parse()
        .with_context(|| format!("bad range start in `{spec}`"))?;
    let end: f64 = end
        .trim()
        .parse()
        .with_context(|| format!("bad range end in `{spec}`"))?;
    let steps: usize = steps
        .trim()
        .parse()
        .with_context(|| format!("bad step count in `{spec}`"))?;
    if !(start.is_finite() && end.is_finite()) || end < start {
        bail!("range `{spec}` needs finite start <= end");
    }
    if steps == 0 {
        bail!("range `{spec}` needs at least one step");
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let width = end - start;
    Ok((0..steps)
        .map(|k| {
            if k + 1 == steps {
                end
            } else {
                start + width * k as f64 / (steps - 1) as f64
            }
        })
        .collect())
}

enum Column {
    H,
    Bound(BoundId),
}

impl Column {
    fn parse(name: &str) -> anyhow::Result<Self> {
        if name.eq_ignore_ascii_case("h") {
            return Ok(Column::H);
        }
        Ok(Column::Bound(name.parse()?))
    }

    fn name(&self) -> String {
        match self {
            Column::H => "h".into(),
            Column::Bound(id) => id.cli_name(),
        }
    }

    fn evaluate(&self, p: &BoundParams) -> crate::Result<f64> {
        match self {
            Column::H => h_exponent(
                p.t.ok_or_else(|| Error::InvalidArgument("missing parameter --t".into()))?,
                p.rho
                    .ok_or_else(|| Error::InvalidArgument("missing parameter --rho".into()))?,
            ),
            Column::Bound(id) => id.evaluate(p),
        }
    }
}

fn open_output(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn eval_bound(args: &EvalBoundArgs) -> anyhow::Result<u8> {
    let column = Column::parse(&args.name)?;
    let value = column.evaluate(&args.params.params())?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "parameter\tvalue")?;
    writeln!(out, "bound\t{}", column.name())?;
    for (k, v) in args.params.given() {
        writeln!(out, "{k}\t{}", fmt_num(v))?;
    }
    writeln!(out, "value\t{}", fmt_num(value))?;
    Ok(EXIT_PASS)
}

fn verify_cmd(args: &VerifyArgs, seed: Option<u64>) -> anyhow::Result<u8> {
    let cap = enumeration_cap_from_env()?;
    let mut scenario = load_scenario(&args.scenario, cap)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let report = verify(&scenario)?;
    let mut out = open_output(args.out.as_deref())?;
    match args.format {
        Format::Json => writeln!(out, "{}", report.to_json())?,
        Format::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;
    drop(out);

    let mut err = std::io::stderr().lock();
    writeln!(
        err,
        "{} rows, {} failed, {} diagnostic failures",
        report.rows.len(),
        report.summary.failures,
        report.summary.diagnostic_failures
    )?;
    if report.all_pass() {
        return Ok(EXIT_PASS);
    }
    for row in report.failing_rows() {
        writeln!(
            err,
            "FAIL {} side={} median={} t={} lambda={} lhs={} bound={} slack={}",
            row.bound_id,
            row.side.map_or("-", |s| s.as_str()),
            row.median_used.map_or("-", |m| m.as_str()),
            row.t.map_or("-".into(), |n| fmt_num(n.0)),
            row.lambda.map_or("-".into(), |n| fmt_num(n.0)),
            fmt_num(row.lhs.0),
            fmt_num(row.bound.0),
            fmt_num(row.slack.0),
        )?;
    }
    Ok(EXIT_FAIL)
}

fn sweep_cmd(args: &SweepArgs, seed: Option<u64>) -> anyhow::Result<u8> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let limits = ScenarioLimits {
        max_n: args.max_n,
        max_alphabet: args.max_alphabet,
        max_outcomes: args.max_outcomes,
    };
    if limits.max_n == 0 || limits.max_alphabet < 2 || limits.max_outcomes < 2 {
        bail!("limits need --max-n >= 1, --max-alphabet >= 2 and --max-outcomes >= 2");
    }
    let summary = sweep(args.kind.into(), args.trials, seed.unwrap_or(0), limits);
    if let Some(path) = &args.out {
        let mut out = open_output(Some(path))?;
        serde_json::to_writer_pretty(&mut out, &summary)?;
        writeln!(out)?;
        out.flush()?;
    }
    println!("{}", summary.summary_line());
    for o in summary.outcomes.iter().filter(|o| o.error.is_some()) {
        eprintln!(
            "seed {}: {}",
            o.seed,
            o.error.as_deref().unwrap_or_default()
        );
    }
    Ok(if summary.all_pass() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn curves_cmd(args: &CurvesArgs) -> anyhow::Result<u8> {
    let columns: Vec<Column> = args
        .bounds
        .iter()
        .map(|b| Column::parse(b.trim()))
        .collect::<anyhow::Result<_>>()?;
    let (axis, xs) = match (&args.t_range, &args.rho_range, &args.lambda_range) {
        (Some(r), _, _) => ("t", parse_range(r)?),
        (_, Some(r), _) => ("rho", parse_range(r)?),
        (_, _, Some(r)) => ("lambda", parse_range(r)?),
        _ => ("t", vec![args.params.t.context("give --t or a range")?]),
    };

    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let mut p = args.params.params();
        match axis {
            "t" => p.t = Some(x),
            "rho" => p.rho = Some(x),
            _ => p.lambda = Some(x),
        }
        let mut record = vec![fmt_num(x)];
        for c in &columns {
            record.push(match c.evaluate(&p) {
                Ok(v) => fmt_num(v),
                Err(Error::OutsideValidity { .. }) => String::new(),
                Err(e) => return Err(e.into()),
            });
        }
        rows.push(record);
    }

    let out = open_output(args.out.as_deref())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![axis.to_string()];
    header.extend(columns.iter().map(Column::name));
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(EXIT_PASS)
}

pub fn execute(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::EvalBound(args) => eval_bound(args),
        Command::Verify(args) => verify_cmd(args, cli.seed),
        Command::Sweep(args) => sweep_cmd(args, cli.seed),
        Command::Curves(args) => curves_cmd(args),
    }
}

/// Parse arguments, run, and return the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = parse_range("0.05:3:60").unwrap();
        assert_eq!(r.len(), 60);
        assert_eq!((r[0], r[59]), (0.05, 3.0));
        assert_eq!(parse_range("1:1:1").unwrap(), vec![1.0]);
        for bad in ["1:2", "a:2:3", "2:1:3", "0:1:0", "0:1:x"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn columns() {
        let p = BoundParams {
            t: Some(1.0),
            rho: Some(0.0),
            ..Default::default()
        };
        assert_eq!(Column::parse("h").unwrap().evaluate(&p).unwrap(), 2.0);
        assert_eq!(
            Column::parse("gap-classical").unwrap().name(),
            "gap-classical"
        );
        assert!(Column::parse("nope").is_err());
    }
}
