//! Report rows and their JSON / CSV serialization.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips any `f64` exactly. JSON carries the same digits as raw number
//! tokens, so a JSON and a CSV export of one run hold identical text for every
//! value. Non-finite values become `null` in JSON and `inf` / `-inf` / `nan`
//! in CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::bounds::BoundId;
use crate::functionals::Certificate;

/// Pass tolerance on slack.
pub const SLACK_TOL: f64 = 1e-12;

/// A float serialized with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Num(pub f64);

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt_num(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num(x)
    }
}

pub(crate) fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Set,
    Median,
    Gap,
    Drop,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Set => "set",
            TargetKind::Median => "median",
            TargetKind::Gap => "gap",
            TargetKind::Drop => "drop",
        }
    }
}

impl std::str::FromStr for TargetKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "set" => Ok(TargetKind::Set),
            "median" => Ok(TargetKind::Median),
            "gap" => Ok(TargetKind::Gap),
            "drop" | "mean" => Ok(TargetKind::Drop),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown target kind `{other}` (expected set, median, gap or drop)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianEndpoint {
    Lo,
    Hi,
}

impl MedianEndpoint {
    pub fn as_str(self) -> &'static str {
        match self {
            MedianEndpoint::Lo => "lo",
            MedianEndpoint::Hi => "hi",
        }
    }
}

/// Which deviation a row bounds: `f − c ≥ t` (upper) or `c − f ≥ t` (lower).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

/// One bound evaluation against its exact left-hand side.
///
/// Diagnostic rows are recorded for inspection and never count towards
/// `all_pass`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub target_kind: TargetKind,
    pub median_used: Option<MedianEndpoint>,
    pub side: Option<Side>,
    pub t: Option<Num>,
    pub lambda: Option<Num>,
    pub lhs: Num,
    pub bound_id: BoundId,
    pub bound: Num,
    pub slack: Num,
    pub pass: bool,
    pub vacuous: bool,
    pub diagnostic: bool,
}

impl ReportRow {
    pub fn new(target_kind: TargetKind, bound_id: BoundId, lhs: f64, bound: f64) -> Self {
        let slack = bound - lhs;
        Self {
            target_kind,
            median_used: None,
            side: None,
            t: None,
            lambda: None,
            lhs: Num(lhs),
            bound_id,
            bound: Num(bound),
            slack: Num(slack),
            pass: slack >= -SLACK_TOL,
            vacuous: bound_id.is_probability() && bound > 1.0,
            diagnostic: false,
        }
    }

    pub fn at_t(mut self, t: f64) -> Self {
        self.t = Some(Num(t));
        self
    }

    pub fn at_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(Num(lambda));
        self
    }

    pub fn side(mut self, side: Side) -> Self {
        self.side = Some(side);
        self
    }

    pub fn median(mut self, endpoint: MedianEndpoint) -> Self {
        self.median_used = Some(endpoint);
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.diagnostic = true;
        self
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "target_kind",
        "median_used",
        "side",
        "t",
        "lambda",
        "lhs",
        "bound_id",
        "bound",
        "slack",
        "pass",
        "vacuous",
        "diagnostic",
    ];

    fn csv_record(&self) -> [String; 12] {
        let opt = |x: Option<Num>| x.map(|n| fmt_num(n.0)).unwrap_or_default();
        [
            self.target_kind.as_str().to_string(),
            self.median_used
                .map(|m| m.as_str().to_string())
                .unwrap_or_default(),
            self.side
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
            opt(self.t),
            opt(self.lambda),
            fmt_num(self.lhs.0),
            self.bound_id.as_str().to_string(),
            fmt_num(self.bound.0),
            fmt_num(self.slack.0),
            self.pass.to_string(),
            self.vacuous.to_string(),
            self.diagnostic.to_string(),
        ]
    }
}

/// Quantities derived for one median endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianSummary {
    pub endpoint: MedianEndpoint,
    pub median: Num,
    /// `E[d_α(X, {f ≤ m})]`.
    pub rho_sublevel: Num,
    /// `E[d_α(X, {f ≥ m})]`.
    pub rho_superlevel: Num,
    pub gap: Num,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Derived {
    pub p_in: Option<Num>,
    pub rho: Option<Num>,
    pub mu: Option<Num>,
    pub median_lo: Option<Num>,
    pub median_hi: Option<Num>,
    pub medians: Vec<MedianSummary>,
    /// `P(f − μ ≥ 1.001·Σα_i)`; zero for every Lipschitz `f`.
    pub tail_beyond_diameter: Option<Num>,
    /// How the Lipschitz hypothesis was certified, when it was needed.
    pub lipschitz_path: Option<String>,
    pub certificates: Vec<Certificate>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub all_pass: bool,
    pub rows: usize,
    pub failures: usize,
    pub diagnostic_failures: usize,
    /// Minimum slack per bound over asserted rows.
    pub worst_slack: BTreeMap<BoundId, Num>,
    pub derived: Derived,
    pub seed: u64,
    pub rng: &'static str,
}

impl Summary {
    pub fn from_rows(rows: &[ReportRow], derived: Derived, seed: u64) -> Self {
        let mut worst_slack: BTreeMap<BoundId, Num> = BTreeMap::new();
        let mut failures = 0;
        let mut diagnostic_failures = 0;
        for row in rows {
            if row.diagnostic {
                diagnostic_failures += usize::from(!row.pass);
                continue;
            }
            failures += usize::from(!row.pass);
            worst_slack
                .entry(row.bound_id)
                .and_modify(|w| {
                    if row.slack.0 < w.0 {
                        *w = row.slack;
                    }
                })
                .or_insert(row.slack);
        }
        Self {
            all_pass: failures == 0,
            rows: rows.len(),
            failures,
            diagnostic_failures,
            worst_slack,
            derived,
            seed,
            rng: crate::space::RNG_ALGORITHM,
        }
    }

    /// Smallest slack across all asserted rows.
    pub fn min_slack(&self) -> f64 {
        self.worst_slack
            .values()
            .map(|n| n.0)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub fingerprint: String,
    pub scenario: Box<RawValue>,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.summary.all_pass
    }

    pub fn failing_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass && !r.diagnostic)
    }

    pub fn rows_for(&self, id: BoundId) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.bound_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ReportRow::CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_record())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
