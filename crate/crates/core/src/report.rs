//! Check and scenario reports, and their JSON/CSV serialization.
//!
//! Floats are written with 17 significant digits so a report read back
//! reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// Serde adapter for floats that may be infinite or NaN.
/// `±∞` are written as the strings `"inf"`/`"-inf"`, NaN as `null`.
pub mod float {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_none()
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct FloatVisitor;

    impl<'de> Visitor<'de> for FloatVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number, \"inf\", \"-inf\" or null")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
        fn visit_none<E: de::Error>(self) -> Result<f64, E> {
            Ok(f64::NAN)
        }
        fn visit_unit<E: de::Error>(self) -> Result<f64, E> {
            Ok(f64::NAN)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(FloatVisitor)
    }
}

/// Outcome of comparing one inequality `lhs ≤ rhs·(1 + tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    #[serde(with = "float")]
    pub constant_used: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default)]
    pub vacuous: bool,
    pub witness: String,
}

impl CheckReport {
    pub fn evaluate(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        constant_used: f64,
        tolerance: f64,
        witness: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            constant_used,
            tolerance,
            passed: lhs <= rhs * (1.0 + tolerance),
            vacuous: false,
            witness: witness.into(),
        }
    }

    /// A check whose right side is trivially true (e.g. a bound ≥ 1 on a
    /// probability). Counted as passed but excluded from the verdict.
    pub fn vacuous_pass(self) -> Self {
        Self { vacuous: true, ..self }
    }

    /// A check that cannot be evaluated (its bound is undefined): flagged
    /// vacuous and not passed. `rhs` is NaN so the pass rule stays exact.
    pub fn undefined(name: impl Into<String>, lhs: f64, constant_used: f64, witness: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs: f64::NAN,
            constant_used,
            tolerance: 0.0,
            passed: false,
            vacuous: true,
            witness: witness.into(),
        }
    }
}

/// A named number reported by a scenario, with where it comes from
/// (`exact`, `quadrature`, `estimate`, `monte-carlo`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
    pub provenance: String,
}

impl Quantity {
    pub fn new(name: impl Into<String>, value: f64, provenance: impl Into<String>) -> Self {
        Self { name: name.into(), value, provenance: provenance.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    HypothesisUnmet,
}

impl Outcome {
    /// Process exit code: 0 pass, 1 check failure, 2 unmet hypothesis.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::HypothesisUnmet => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<CheckReport>,
    pub outcome: Outcome,
    pub runtime_ms: u64,
}

impl ScenarioReport {
    pub fn new(scenario: impl Into<String>, seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            params: BTreeMap::new(),
            seed,
            quantities: Vec::new(),
            checks: Vec::new(),
            outcome: Outcome::Pass,
            runtime_ms: 0,
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        self.params.insert(name.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: f64, provenance: impl Into<String>) {
        self.quantities.push(Quantity::new(name, value, provenance));
    }

    pub fn check(&mut self, check: CheckReport) {
        self.checks.push(check);
    }

    pub fn quantity_value(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|q| q.name == name).map(|q| q.value)
    }

    /// Conjunction of all non-vacuous checks.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.vacuous).all(|c| c.passed)
    }

    /// Sets `outcome` from the checks unless the hypothesis was already
    /// reported unmet.
    pub fn finalize(&mut self) {
        if self.outcome != Outcome::HypothesisUnmet {
            self.outcome = if self.all_passed() { Outcome::Pass } else { Outcome::Fail };
        }
    }
}

/// Pretty JSON with every float printed as `d.dddddddddddddddde±x`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17 significant digits per float,
/// terminated by a newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Parameter(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

/// Checks one per row: `name,lhs,rhs,constant,tolerance,passed`.
pub fn checks_to_csv(checks: &[CheckReport]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["name", "lhs", "rhs", "constant", "tolerance", "passed"])?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            format_float(c.lhs),
            format_float(c.rhs),
            format_float(c.constant_used),
            format_float(c.tolerance),
            c.passed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render_report(report: &ScenarioReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json_string(report),
        ReportFormat::Csv => checks_to_csv(&report.checks),
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &ScenarioReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let text = render_report(report, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

pub fn load_report(json: &str) -> Result<ScenarioReport> {
    Ok(serde_json::from_str(json)?)
}
