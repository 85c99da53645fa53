//! Verification reports and their JSON/CSV encodings.
//!
//! A report is a list of measurements, each comparing two evaluation routes
//! over a set of points. The report verdict is derived from the measurements:
//! any measurement outside its tolerance fails the report, an expected
//! discrepancy downgrades a pass to `documented_discrepancy`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex_core::Complex;
use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    DocumentedDiscrepancy,
}

impl Verdict {
    /// `fail` dominates `documented_discrepancy`, which dominates `pass`.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (DocumentedDiscrepancy, _) | (_, DocumentedDiscrepancy) => DocumentedDiscrepancy,
            _ => Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::DocumentedDiscrepancy => "documented_discrepancy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationScale {
    Absolute,
    Relative,
}

/// What a measurement is held to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// The governing deviation must not exceed `tolerance`.
    Within {
        tolerance: f64,
        scale: DeviationScale,
    },
    /// A known disagreement; the numbers are the finding.
    Discrepancy,
    /// Recorded for reference only.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub route_a: String,
    pub route_b: String,
    #[serde(with = "lenient_f64")]
    pub max_abs_deviation: f64,
    #[serde(with = "lenient_f64")]
    pub max_rel_deviation: f64,
    pub n_points: usize,
    pub expectation: Expectation,
}

impl Measurement {
    pub fn new(
        name: impl Into<String>,
        route_a: impl Into<String>,
        route_b: impl Into<String>,
        deviation: &Deviation,
        expectation: Expectation,
    ) -> Self {
        Self {
            name: name.into(),
            route_a: route_a.into(),
            route_b: route_b.into(),
            max_abs_deviation: deviation.max_abs,
            max_rel_deviation: deviation.max_rel,
            n_points: deviation.n_points.max(1),
            expectation,
        }
    }

    /// Shorthand for a single scalar compared against zero.
    pub fn scalar(
        name: impl Into<String>,
        route_a: impl Into<String>,
        value: f64,
        expectation: Expectation,
    ) -> Self {
        let mut d = Deviation::new();
        d.add_real(value, 0.0);
        Self::new(name, route_a, "zero", &d, expectation)
    }

    pub fn within(tolerance: f64, scale: DeviationScale) -> Expectation {
        Expectation::Within { tolerance, scale }
    }

    pub fn governing_deviation(&self) -> f64 {
        match self.expectation {
            Expectation::Within {
                scale: DeviationScale::Relative,
                ..
            } => self.max_rel_deviation,
            _ => self.max_abs_deviation,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self.expectation {
            Expectation::Within { tolerance, .. } => {
                let d = self.governing_deviation();
                // NaN compares false and therefore fails
                if d <= tolerance {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            Expectation::Discrepancy => Verdict::DocumentedDiscrepancy,
            Expectation::Informational => Verdict::Pass,
        }
    }
}

/// Running maxima of `|a - b|` and `|a - b| / max(|b|, floor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub max_abs: f64,
    pub max_rel: f64,
    pub n_points: usize,
    relative_floor: f64,
}

impl Default for Deviation {
    fn default() -> Self {
        Self::new()
    }
}

impl Deviation {
    pub fn new() -> Self {
        Self::with_relative_floor(f64::MIN_POSITIVE)
    }

    /// Relative deviations are taken against `max(|b|, floor)`; `floor = 1`
    /// gives the mixed absolute/relative measure.
    pub fn with_relative_floor(relative_floor: f64) -> Self {
        Self {
            max_abs: 0.0,
            max_rel: 0.0,
            n_points: 0,
            relative_floor,
        }
    }

    pub fn add(&mut self, a: Complex, b: Complex) {
        let abs = (a - b).norm();
        let rel = if abs == 0.0 {
            0.0
        } else {
            abs / b.norm().max(self.relative_floor)
        };
        self.record(abs, rel);
    }

    pub fn add_real(&mut self, a: f64, b: f64) {
        self.add(Complex::new(a, 0.0), Complex::new(b, 0.0));
    }

    /// A point where one of the routes could not be evaluated.
    pub fn add_failure(&mut self) {
        self.record(f64::INFINITY, f64::INFINITY);
    }

    fn record(&mut self, abs: f64, rel: f64) {
        let abs = if abs.is_nan() { f64::INFINITY } else { abs };
        let rel = if rel.is_nan() { f64::INFINITY } else { rel };
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(rel);
        self.n_points += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub title: String,
    pub subject_refs: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub measurements: Vec<Measurement>,
    pub verdict: Verdict,
    pub artifact_version: String,
}

impl VerificationReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            subject_refs: Vec::new(),
            parameters: BTreeMap::new(),
            measurements: Vec::new(),
            verdict: Verdict::Pass,
            artifact_version: ARTIFACT_VERSION.to_string(),
        }
    }

    pub fn subject(mut self, reference: impl Into<String>) -> Self {
        self.subject_refs.push(reference.into());
        self
    }

    pub fn param(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set_param(key, value);
        self
    }

    /// Non-finite numbers are stored as strings so the document stays valid JSON.
    pub fn set_param(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.parameters.insert(key.into(), value.into());
    }

    pub fn set_number(&mut self, key: impl Into<String>, value: f64) {
        let v = serde_json::Number::from_f64(value)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(format!("{value}")));
        self.parameters.insert(key.into(), v);
    }

    pub fn push(&mut self, m: Measurement) {
        self.verdict = self.verdict.combine(m.verdict());
        self.measurements.push(m);
    }

    /// Records an evaluation that could not be carried out at all.
    pub fn push_error(&mut self, name: impl Into<String>, err: &Error) {
        let name = name.into();
        let mut d = Deviation::new();
        d.add_failure();
        self.set_param(format!("{name}.error"), err.to_string());
        self.push(Measurement::new(
            name,
            "evaluation",
            "reference",
            &d,
            Measurement::within(0.0, DeviationScale::Absolute),
        ));
    }

    /// Recomputes the verdict from the measurements.
    pub fn derived_verdict(&self) -> Verdict {
        self.measurements
            .iter()
            .fold(Verdict::Pass, |acc, m| acc.combine(m.verdict()))
    }

    pub fn measurement(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Plain,
}

const CSV_HEADER: [&str; 10] = [
    "report",
    "name",
    "route_a",
    "route_b",
    "max_abs_deviation",
    "max_rel_deviation",
    "n_points",
    "expectation",
    "tolerance",
    "verdict",
];

pub fn serialize_report(rep: &VerificationReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rep).expect("report is always serializable");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => to_csv(rep),
        ReportFormat::Plain => render_plain(rep).into_bytes(),
    }
}

pub fn deserialize_report(bytes: &[u8]) -> Result<VerificationReport> {
    serde_json::from_slice(bytes).map_err(|e| Error::InvalidParameter(format!("bad report: {e}")))
}

fn to_csv(rep: &VerificationReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for m in &rep.measurements {
        let (kind, tol) = match m.expectation {
            Expectation::Within { tolerance, scale } => (
                match scale {
                    DeviationScale::Absolute => "within_absolute",
                    DeviationScale::Relative => "within_relative",
                },
                format_number(tolerance),
            ),
            Expectation::Discrepancy => ("discrepancy", String::new()),
            Expectation::Informational => ("informational", String::new()),
        };
        w.write_record([
            rep.title.as_str(),
            &m.name,
            &m.route_a,
            &m.route_b,
            &format_number(m.max_abs_deviation),
            &format_number(m.max_rel_deviation),
            &m.n_points.to_string(),
            kind,
            &tol,
            m.verdict().as_str(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Shortest round-trip rendering, `inf` for non-finite values.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn render_plain(rep: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} [{}]", rep.title, rep.verdict.as_str());
    for (k, v) in &rep.parameters {
        let _ = writeln!(s, "  {k} = {v}");
    }
    for m in &rep.measurements {
        let _ = writeln!(
            s,
            "  {:<24} {:<32} abs {:>11} rel {:>11} n={:<5} {}",
            m.verdict().as_str(),
            m.name,
            short(m.max_abs_deviation),
            short(m.max_rel_deviation),
            m.n_points,
            match m.expectation {
                Expectation::Within { tolerance, scale } => format!(
                    "tol {} ({})",
                    short(tolerance),
                    match scale {
                        DeviationScale::Absolute => "abs",
                        DeviationScale::Relative => "rel",
                    }
                ),
                Expectation::Discrepancy => "expected discrepancy".into(),
                Expectation::Informational => "info".into(),
            }
        );
    }
    s
}

fn short(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        format_number(x)
    }
}

/// Folds several reports into one: measurements concatenated in order,
/// parameters namespaced by the source report title.
pub fn aggregate_reports(reps: &[VerificationReport]) -> VerificationReport {
    let mut out = VerificationReport::new("aggregate");
    for r in reps {
        for s in &r.subject_refs {
            if !out.subject_refs.contains(s) {
                out.subject_refs.push(s.clone());
            }
        }
        for (k, v) in &r.parameters {
            out.parameters.insert(format!("{}.{}", r.title, k), v.clone());
        }
        for m in &r.measurements {
            let mut m = m.clone();
            m.name = format!("{}: {}", r.title, m.name);
            out.measurements.push(m);
        }
        out.verdict = out.verdict.combine(r.verdict);
    }
    out
}

mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(verdict_kind: Expectation, dev: f64) -> VerificationReport {
        let mut r = VerificationReport::new("sample")
            .subject("closed-form coefficients")
            .param("q", 0.1)
            .param("P", 8);
        let mut d = Deviation::new();
        d.add_real(1.0 + dev, 1.0);
        r.push(Measurement::new("m", "a", "b", &d, verdict_kind));
        r
    }

    #[test]
    fn empty_report_is_a_valid_document() {
        let r = VerificationReport::new("empty");
        let bytes = serialize_report(&r, ReportFormat::Json);
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["measurements"], Value::Array(vec![]));
        assert_eq!(v["verdict"], "pass");
        assert_eq!(deserialize_report(&bytes).unwrap(), r);
        let csv = String::from_utf8(serialize_report(&r, ReportFormat::Csv)).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn json_schema_field_names() {
        let r = sample(Measurement::within(1e-9, DeviationScale::Absolute), 1e-12);
        let v: Value = serde_json::from_slice(&serialize_report(&r, ReportFormat::Json)).unwrap();
        for key in ["title", "subject_refs", "parameters", "measurements", "verdict", "artifact_version"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let m = &v["measurements"][0];
        for key in ["name", "route_a", "route_b", "max_abs_deviation", "max_rel_deviation", "n_points"] {
            assert!(m.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn infinite_deviation_round_trips_through_null() {
        let mut r = VerificationReport::new("diverging");
        r.push_error("expansion", &Error::Domain("x".into()));
        let bytes = serialize_report(&r, ReportFormat::Json);
        assert!(String::from_utf8_lossy(&bytes).contains("null"));
        let back = deserialize_report(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.verdict, Verdict::Fail);
    }

    #[test]
    fn measurement_order_is_preserved_in_bytes() {
        let mut a = VerificationReport::new("order");
        let mut b = VerificationReport::new("order");
        let m1 = Measurement::scalar("one", "x", 1.0, Expectation::Informational);
        let m2 = Measurement::scalar("two", "x", 2.0, Expectation::Informational);
        a.push(m1.clone());
        a.push(m2.clone());
        b.push(m2);
        b.push(m1);
        assert_ne!(
            serialize_report(&a, ReportFormat::Json),
            serialize_report(&b, ReportFormat::Json)
        );
        assert_eq!(
            serialize_report(&a, ReportFormat::Json),
            serialize_report(&a.clone(), ReportFormat::Json)
        );
    }

    #[test]
    fn verdict_follows_measurements() {
        assert_eq!(sample(Measurement::within(1e-9, DeviationScale::Absolute), 1e-12).verdict, Verdict::Pass);
        assert_eq!(sample(Measurement::within(1e-9, DeviationScale::Absolute), 1e-6).verdict, Verdict::Fail);
        assert_eq!(sample(Expectation::Discrepancy, 1.0).verdict, Verdict::DocumentedDiscrepancy);
    }

    #[test]
    fn aggregation_lattice() {
        assert_eq!(aggregate_reports(&[]).verdict, Verdict::Pass);
        assert!(aggregate_reports(&[]).measurements.is_empty());
        let pass = sample(Expectation::Informational, 0.0);
        let disc = sample(Expectation::Discrepancy, 0.5);
        let fail = sample(Measurement::within(0.0, DeviationScale::Absolute), 0.5);
        assert_eq!(
            aggregate_reports(&[pass.clone(), disc.clone()]).verdict,
            Verdict::DocumentedDiscrepancy
        );
        let all = aggregate_reports(&[pass, fail, disc]);
        assert_eq!(all.verdict, Verdict::Fail);
        assert_eq!(all.measurements.len(), 3);
        assert_eq!(all.derived_verdict(), Verdict::Fail);
    }

    #[test]
    fn csv_rows_follow_measurements() {
        let r = sample(Measurement::within(1e-9, DeviationScale::Relative), 1e-12);
        let text = String::from_utf8(serialize_report(&r, ReportFormat::Csv)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with("sample,m,a,b,"));
        assert!(row.ends_with(",pass"));
    }

    #[test]
    fn mixed_relative_floor() {
        let mut d = Deviation::with_relative_floor(1.0);
        d.add_real(1e-3 + 1e-10, 1e-3);
        assert!((d.max_rel - 1e-10).abs() < 1e-15);
        let mut pure = Deviation::new();
        pure.add_real(1e-3 + 1e-10, 1e-3);
        assert!((pure.max_rel - 1e-7).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn json_round_trip(dev in 0.0f64..1e3, q in 0.0f64..1.0, n in 1usize..500, name in "[a-z_]{1,12}") {
            let mut r = VerificationReport::new(name.clone()).param("q", q);
            let mut d = Deviation::new();
            for i in 0..n.min(5) {
                d.add_real(dev * i as f64, 1.0);
            }
            r.push(Measurement::new(name, "a", "b", &d, Measurement::within(1.0, DeviationScale::Absolute)));
            let back = deserialize_report(&serialize_report(&r, ReportFormat::Json)).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
