//! Tabular results shared by every engine, plus tolerance-based comparison.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::model::{BlockingTable, Engine, OperationMode, ScenarioConfig, Variant};

pub const CSV_HEADER: [&str; 10] =
    ["mode", "engine", "variant", "load", "od", "class", "bp", "overall_bp", "runtime_s", "meta"];

/// One `(o,k)` entry of a scenario point, or its overall line (`od` and
/// `class` both `*`). `meta` holds `key=value` pairs separated by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: String,
    pub engine: String,
    pub variant: String,
    pub load: f64,
    pub od: String,
    pub class: String,
    pub bp: f64,
    pub overall_bp: f64,
    pub runtime_s: f64,
    pub meta: String,
}

impl ReportRow {
    pub fn is_overall(&self) -> bool {
        self.od == "*" && self.class == "*"
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.split(';').filter_map(|kv| kv.split_once('=')).find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    fn key(&self) -> String {
        format!("{}|{}|{}|{}|{}", self.mode, self.variant, self.load, self.od, self.class)
    }

    fn loose_key(&self) -> String {
        format!("{}|*|{}|{}|{}", self.mode, self.load, self.od, self.class)
    }
}

pub fn format_meta(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Rows for one scenario point: every `(o,k)` then the overall line.
/// Per-pair metadata (e.g. a CI) comes from `pair_meta`.
#[allow(clippy::too_many_arguments)]
pub fn rows_for(
    config: &ScenarioConfig,
    mode: OperationMode,
    engine: Engine,
    variant: Option<Variant>,
    load: f64,
    blocking: &BlockingTable,
    runtime_s: f64,
    meta: &str,
    pair_meta: impl Fn(usize, usize) -> String,
) -> Vec<ReportRow> {
    let variant = variant.map(|v| v.to_string()).unwrap_or_default();
    let row = |od: String, class: String, bp: f64, meta: String| ReportRow {
        mode: mode.to_string(),
        engine: engine.to_string(),
        variant: variant.clone(),
        load,
        od,
        class,
        bp,
        overall_bp: blocking.overall,
        runtime_s,
        meta,
    };
    let mut out = Vec::new();
    for (o, od) in config.od_pairs.iter().enumerate() {
        for k in 0..config.num_classes() {
            out.push(row(
                format!("{}-{}", od.origin, od.destination),
                (k + 1).to_string(),
                blocking.get(o, k),
                pair_meta(o, k),
            ));
        }
    }
    out.push(row("*".into(), "*".into(), blocking.overall, meta.to_string()));
    out
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a report CSV; lines starting with `#` are comments.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, ReportError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonEntry {
    od: String,
    class: String,
    bp: f64,
    meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonPoint {
    mode: String,
    engine: String,
    variant: String,
    load: f64,
    overall_bp: f64,
    runtime_s: f64,
    meta: serde_json::Map<String, serde_json::Value>,
    entries: Vec<JsonEntry>,
}

/// Rows grouped by scenario point; the overall line's meta becomes a map.
pub fn write_json<W: Write>(rows: &[ReportRow], out: W) -> Result<(), ReportError> {
    let mut points: Vec<JsonPoint> = Vec::new();
    let mut open = true;
    for r in rows {
        let same = points.last().is_some_and(|p| {
            open && p.mode == r.mode && p.engine == r.engine && p.variant == r.variant && p.load == r.load
        });
        if !same {
            points.push(JsonPoint {
                mode: r.mode.clone(),
                engine: r.engine.clone(),
                variant: r.variant.clone(),
                load: r.load,
                overall_bp: r.overall_bp,
                runtime_s: r.runtime_s,
                meta: serde_json::Map::new(),
                entries: Vec::new(),
            });
        }
        let p = points.last_mut().unwrap();
        if r.is_overall() {
            p.meta = r
                .meta
                .split(';')
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
                .collect();
            open = false;
        } else {
            open = true;
            p.entries.push(JsonEntry { od: r.od.clone(), class: r.class.clone(), bp: r.bp, meta: r.meta.clone() });
        }
    }
    serde_json::to_writer_pretty(out, &points)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ReportRow>, ReportError> {
    let points: Vec<JsonPoint> = serde_json::from_reader(input)?;
    let mut rows = Vec::new();
    for p in points {
        let row = |od: String, class: String, bp: f64, meta: String| ReportRow {
            mode: p.mode.clone(),
            engine: p.engine.clone(),
            variant: p.variant.clone(),
            load: p.load,
            od,
            class,
            bp,
            overall_bp: p.overall_bp,
            runtime_s: p.runtime_s,
            meta,
        };
        for e in &p.entries {
            rows.push(row(e.od.clone(), e.class.clone(), e.bp, e.meta.clone()));
        }
        let meta = p
            .meta
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect::<Vec<_>>()
            .join(";");
        rows.push(row("*".into(), "*".into(), p.overall_bp, meta));
    }
    Ok(rows)
}

/// How far an actual value may stray from the expected one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceSpec {
    /// `rel:x`: `|a - e| <= x |e|`.
    Relative(f64),
    /// `abs:x`.
    Absolute(f64),
    /// `ci:m`: `|a - e| <= m * ci`, with `ci` read from the actual row's
    /// meta (or the expected row's).
    ConfidenceInterval(f64),
    /// `factor:x`: `max(a/e, e/a) <= x`.
    Factor(f64),
    /// `sig:s[:u]`: the actual value rounded to `s` significant figures is
    /// within `u` units (default 1) of the expected value's last digit.
    SignificantDigits { digits: u32, units: f64 },
}

impl FromStr for ToleranceSpec {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReportError::Tolerance(s.to_string());
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let num = |p: Option<&str>| -> Result<f64, ReportError> {
            let v: f64 = p.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        let spec = match kind {
            "rel" => ToleranceSpec::Relative(num(parts.next())?),
            "abs" => ToleranceSpec::Absolute(num(parts.next())?),
            "ci" => ToleranceSpec::ConfidenceInterval(num(parts.next())?),
            "factor" => {
                let x = num(parts.next())?;
                if x < 1.0 {
                    return Err(bad());
                }
                ToleranceSpec::Factor(x)
            }
            "sig" => {
                let digits: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if digits == 0 {
                    return Err(bad());
                }
                let units = match parts.next() {
                    Some(u) => num(Some(u))?,
                    None => 1.0,
                };
                ToleranceSpec::SignificantDigits { digits, units }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(spec)
    }
}

impl fmt::Display for ToleranceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToleranceSpec::Relative(x) => write!(f, "rel:{x}"),
            ToleranceSpec::Absolute(x) => write!(f, "abs:{x}"),
            ToleranceSpec::ConfidenceInterval(m) => write!(f, "ci:{m}"),
            ToleranceSpec::Factor(x) => write!(f, "factor:{x}"),
            ToleranceSpec::SignificantDigits { digits, units } => write!(f, "sig:{digits}:{units}"),
        }
    }
}

fn scale(m: f64, exp: i32) -> f64 {
    if exp < 0 {
        m / 10f64.powi(-exp)
    } else {
        m * 10f64.powi(exp)
    }
}

fn descale(v: f64, exp: i32) -> f64 {
    if exp < 0 {
        v * 10f64.powi(-exp)
    } else {
        v / 10f64.powi(exp)
    }
}

/// `v` rounded to `digits` significant figures, and the value of one unit
/// in its last place.
pub fn round_significant(v: f64, digits: u32) -> (f64, f64) {
    if v == 0.0 || !v.is_finite() {
        return (v, 0.0);
    }
    let exp = v.abs().log10().floor() as i32 - (digits as i32 - 1);
    let rounded = scale(descale(v, exp).round(), exp);
    // rounding can carry into a new decade (9.96 -> 10.0)
    let exp2 = rounded.abs().log10().floor() as i32 - (digits as i32 - 1);
    (rounded, scale(1.0, exp2.max(exp)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffEntry {
    pub key: String,
    pub expected: f64,
    pub actual: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffSummary {
    pub tolerance: ToleranceSpec,
    pub entries: Vec<DiffEntry>,
}

impl DiffSummary {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &DiffEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

impl fmt::Display for DiffSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} {}  expected {:.4e}  actual {:.4e}  rel {:.3}  allowed {:.3e}",
                if e.pass { "PASS" } else { "FAIL" },
                e.key,
                e.expected,
                e.actual,
                e.rel_diff,
                e.allowed
            )?;
        }
        let failed = self.failures().count();
        write!(f, "{} of {} rows within {}", self.entries.len() - failed, self.entries.len(), self.tolerance)
    }
}

fn keyed(rows: &[ReportRow]) -> Result<HashMap<String, &ReportRow>, ReportError> {
    let mut map = HashMap::new();
    for r in rows {
        let key = r.key();
        if map.insert(key.clone(), r).is_some() {
            return Err(ReportError::DuplicateKey(key));
        }
    }
    Ok(map)
}

/// Checks every `expected` row against the `actual` row with the same
/// (mode, variant, load, od, class). The engine is not part of the key, so
/// exact and simulated tables compare directly. An expected row without a
/// variant also matches the single actual row that differs only in variant.
pub fn compare(
    expected: &[ReportRow],
    actual: &[ReportRow],
    tolerance: ToleranceSpec,
) -> Result<DiffSummary, ReportError> {
    keyed(expected)?;
    let full = keyed(actual)?;
    let mut loose: HashMap<String, Vec<&ReportRow>> = HashMap::new();
    for r in actual {
        loose.entry(r.loose_key()).or_default().push(r);
    }
    let mut entries = Vec::with_capacity(expected.len());
    for e in expected {
        let key = e.key();
        let a = match full.get(&key) {
            Some(a) => *a,
            None if e.variant.is_empty() => match loose.get(&e.loose_key()).map(Vec::as_slice) {
                Some([only]) => *only,
                _ => return Err(ReportError::KeyMismatch(key)),
            },
            None => return Err(ReportError::KeyMismatch(key)),
        };
        let abs_diff = (a.bp - e.bp).abs();
        let rel_diff = if e.bp != 0.0 {
            abs_diff / e.bp.abs()
        } else if abs_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let (allowed, pass) = match tolerance {
            ToleranceSpec::Relative(x) => (x * e.bp.abs(), abs_diff <= x * e.bp.abs()),
            ToleranceSpec::Absolute(x) => (x, abs_diff <= x),
            ToleranceSpec::Factor(x) => {
                let ratio = if e.bp > 0.0 && a.bp > 0.0 { (a.bp / e.bp).max(e.bp / a.bp) } else { f64::INFINITY };
                (x, ratio <= x || abs_diff == 0.0)
            }
            ToleranceSpec::ConfidenceInterval(m) => {
                let ci = a
                    .meta_value("ci")
                    .or_else(|| e.meta_value("ci"))
                    .and_then(|v| v.parse::<f64>().ok())
                    .unwrap_or(f64::NAN);
                (m * ci, abs_diff <= m * ci)
            }
            ToleranceSpec::SignificantDigits { digits, units } => {
                let (_, unit) = round_significant(e.bp, digits);
                let (rounded, _) = round_significant(a.bp, digits);
                let allowed = units * unit;
                (allowed, (rounded - e.bp).abs() <= allowed * (1.0 + 1e-9))
            }
        };
        entries.push(DiffEntry { key, expected: e.bp, actual: a.bp, abs_diff, rel_diff, allowed, pass });
    }
    Ok(DiffSummary { tolerance, entries })
}
