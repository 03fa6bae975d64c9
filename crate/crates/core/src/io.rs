//! File formats: CSV and JSON traces, versioned JSON envelopes, and the run
//! configuration echoed into every output.
//!
//! Full CSV traces have columns `m,sum_num,sum_den,sum_float`. Beyond
//! [`COMPACT_THRESHOLD`] rows the compact format `m,increment,sum_float` is
//! used instead: `increment` is the exact term `S_m - S_{m-1}` as `p/q`, so
//! the exact trace can be rebuilt by summation while rows stay short.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::injection::Injection;
use crate::rational::{fmt_rational, parse_rational, rat, serde_exact, to_f64, Accumulator, Bounds, Rational};
use crate::series::{PartialSumTrace, Series};
use crate::sets::{IndexSet, DEFAULT_SCAN_BOUND};

pub const SCHEMA: &str = "serieslab/1";
pub const COMPACT_THRESHOLD: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown format `{s}` (csv|json)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Settings of a run, echoed into every output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub horizon: u64,
    #[serde(with = "serde_exact")]
    pub tol: Rational,
    pub seed: u64,
    pub format: Format,
    pub scan_bound: u64,
    #[serde(with = "serde_exact")]
    pub base: Rational,
    pub version: String,
}

impl Default for RunConfig {
    /// Horizon `10^6`, tolerance `1/8`, seed 0, CSV, scan bound `10^7`, base 5.
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            horizon: 1_000_000,
            tol: rat(1, 8),
            seed: 0,
            format: Format::Csv,
            scan_bound: DEFAULT_SCAN_BOUND,
            base: rat(5, 1),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// A versioned JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub kind: String,
    pub config: RunConfig,
    pub payload: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: impl Into<String>, config: &RunConfig, payload: T) -> Self {
        Envelope { schema: SCHEMA.to_string(), kind: kind.into(), config: config.clone(), payload }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, kind: &str, config: &RunConfig, payload: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &Envelope::new(kind, config, payload))?;
    writeln!(w)?;
    Ok(())
}

/// Reads an envelope, rejecting unknown schemas.
pub fn read_json<R: std::io::Read, T: DeserializeOwned>(r: R) -> Result<Envelope<T>> {
    let env: Envelope<T> = serde_json::from_reader(r)?;
    if env.schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema `{}`", env.schema)));
    }
    Ok(env)
}

/// JSON payload of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub series: String,
    pub over: Option<String>,
    #[serde(with = "serde_exact::vec")]
    pub sums: Vec<Rational>,
}

impl From<&PartialSumTrace> for TraceData {
    fn from(t: &PartialSumTrace) -> Self {
        TraceData { series: t.series_name().to_string(), over: t.over().map(str::to_string), sums: t.sums().to_vec() }
    }
}

impl TryFrom<TraceData> for PartialSumTrace {
    type Error = Error;

    fn try_from(d: TraceData) -> Result<Self> {
        PartialSumTrace::from_parts(d.series, d.over, d.sums)
    }
}

fn write_header<W: Write>(w: &mut W, config: &RunConfig, series: &str, over: Option<&str>, layout: &str) -> Result<()> {
    writeln!(w, "# schema: {SCHEMA}")?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(w, "# series: {series}")?;
    writeln!(w, "# over: {}", over.unwrap_or("-"))?;
    writeln!(w, "# layout: {layout}")?;
    Ok(())
}

/// Full CSV: `m,sum_num,sum_den,sum_float`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &PartialSumTrace, config: &RunConfig) -> Result<()> {
    write_header(&mut w, config, trace.series_name(), trace.over(), "full")?;
    writeln!(w, "m,sum_num,sum_den,sum_float")?;
    for (i, s) in trace.sums().iter().enumerate() {
        writeln!(w, "{},{},{},{}", i + 1, s.numerator(), s.denominator(), to_f64(s))?;
    }
    Ok(())
}

/// Full CSV streamed straight from the series, without holding the trace.
pub fn write_trace_csv_stream<W: Write>(
    mut w: W,
    series: &Series,
    over: Option<&IndexSet>,
    horizon: u64,
    config: &RunConfig,
) -> Result<()> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    write_header(&mut w, config, series.name(), over.map(|a| a.label()), "full")?;
    writeln!(w, "m,sum_num,sum_den,sum_float")?;
    let mask = over.map(|a| a.bitmap_upto(horizon));
    let mut acc = Accumulator::new();
    let mut s = Rational::ZERO;
    for m in 1..=horizon {
        if mask.as_ref().is_none_or(|b| b[m as usize]) {
            acc.add(&series.term(m)?);
            s = acc.value();
        }
        writeln!(w, "{m},{},{},{}", s.numerator(), s.denominator(), to_f64(&s))?;
    }
    Ok(())
}

/// Compact CSV streamed straight from the series: `m,increment,sum_float`.
/// Returns the approximate final sum.
pub fn write_trace_compact<W: Write>(
    mut w: W,
    series: &Series,
    over: Option<&IndexSet>,
    horizon: u64,
    config: &RunConfig,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    write_header(&mut w, config, series.name(), over.map(|a| a.label()), "compact")?;
    writeln!(w, "m,increment,sum_float")?;
    let mask = over.map(|a| a.bitmap_upto(horizon));
    let mut bounds = Bounds::new();
    for m in 1..=horizon {
        let t = if mask.as_ref().is_none_or(|b| b[m as usize]) { series.term(m)? } else { Rational::ZERO };
        bounds.add(&t);
        writeln!(w, "{m},{},{}", fmt_rational(&t), bounds.approx())?;
    }
    Ok(bounds.approx())
}

/// A trace read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub config: Option<RunConfig>,
    pub series: String,
    pub over: Option<String>,
    pub body: TraceBody,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceBody {
    Full(Vec<Rational>),
    Compact { increments: Vec<Rational>, floats: Vec<f64> },
}

impl TraceFile {
    pub fn horizon(&self) -> u64 {
        match &self.body {
            TraceBody::Full(v) => v.len() as u64,
            TraceBody::Compact { increments, .. } => increments.len() as u64,
        }
    }

    /// The exact trace (summing increments for compact files).
    pub fn to_trace(&self) -> Result<PartialSumTrace> {
        let sums = match &self.body {
            TraceBody::Full(v) => v.clone(),
            TraceBody::Compact { increments, .. } => {
                let mut acc = Accumulator::new();
                increments
                    .iter()
                    .map(|t| {
                        acc.add(t);
                        acc.value()
                    })
                    .collect()
            }
        };
        PartialSumTrace::from_parts(self.series.clone(), self.over.clone(), sums)
    }

    /// The float column.
    pub fn floats(&self) -> Vec<f64> {
        match &self.body {
            TraceBody::Full(v) => v.iter().map(to_f64).collect(),
            TraceBody::Compact { floats, .. } => floats.clone(),
        }
    }
}

/// Reads either CSV layout.
pub fn read_trace_csv<R: BufRead>(r: R) -> Result<TraceFile> {
    let mut config = None;
    let (mut series, mut over, mut layout) = (String::new(), None, String::from("full"));
    let mut full = Vec::new();
    let (mut incs, mut floats) = (Vec::new(), Vec::new());
    let mut header_seen = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some((k, v)) = meta.split_once(": ") {
                match k {
                    "schema" if v != SCHEMA => return Err(bad("unsupported schema")),
                    "config" => config = Some(serde_json::from_str(v)?),
                    "series" => series = v.to_string(),
                    "over" => over = (v != "-").then(|| v.to_string()),
                    "layout" => layout = v.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let m: u64 = cols.first().and_then(|c| c.parse().ok()).ok_or_else(|| bad("bad index"))?;
        let expected = (if layout == "compact" { incs.len() } else { full.len() }) as u64 + 1;
        if m != expected {
            return Err(bad("rows out of order"));
        }
        match (layout.as_str(), cols.as_slice()) {
            ("full", [_, num, den, _]) => full.push(parse_rational(&format!("{num}/{den}"))?),
            ("compact", [_, inc, fl]) => {
                incs.push(parse_rational(inc)?);
                floats.push(fl.parse().map_err(|_| bad("bad float"))?);
            }
            _ => return Err(bad("wrong number of columns")),
        }
    }
    let body = if layout == "compact" { TraceBody::Compact { increments: incs, floats } } else { TraceBody::Full(full) };
    Ok(TraceFile { config, series, over, body })
}

/// Two-column CSV `n,p_n` for `n <= horizon`.
pub fn write_permutation_csv<W: Write>(mut w: W, f: &Injection, horizon: u64, config: &RunConfig) -> Result<()> {
    writeln!(w, "# schema: {SCHEMA}")?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(w, "# map: {}", f.label())?;
    writeln!(w, "n,p_n")?;
    for n in 1..=horizon {
        writeln!(w, "{n},{}", f.apply(n)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{classify, partial_sums, DivergenceVerdict};
    use std::io::BufReader;

    #[test]
    fn streamed_csv_matches_stored_trace() {
        let a = Series::alternating_harmonic();
        let t = partial_sums(&a, 40, Some(&IndexSet::evens())).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_trace_csv(&mut x, &t, &RunConfig::default()).unwrap();
        write_trace_csv_stream(&mut y, &a, Some(&IndexSet::evens()), 40, &RunConfig::default()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn full_csv_roundtrip() {
        let t = partial_sums(&Series::alternating_harmonic(), 50, Some(&IndexSet::odds())).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t, &RunConfig::default()).unwrap();
        let back = read_trace_csv(BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.to_trace().unwrap(), t);
        assert_eq!(back.config, Some(RunConfig::default()));
    }

    #[test]
    fn compact_csv_roundtrip() {
        let a = Series::alternating_harmonic();
        let mut buf = Vec::new();
        write_trace_compact(&mut buf, &a, Some(&IndexSet::evens()), 40, &RunConfig::default()).unwrap();
        let back = read_trace_csv(BufReader::new(&buf[..])).unwrap();
        let exact = partial_sums(&a, 40, Some(&IndexSet::evens())).unwrap();
        assert_eq!(back.to_trace().unwrap().sums(), exact.sums());
        let f = back.floats();
        assert!((f[39] - to_f64(exact.last())).abs() < 1e-12);
    }

    #[test]
    fn json_envelope_roundtrip() {
        let a = Series::alternating_harmonic();
        let t = partial_sums(&a, 30, Some(&IndexSet::odds())).unwrap();
        let v = classify(&t, &rat(2, 1), &rat(1, 1), 1).unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, "verdict", &RunConfig::default(), &v).unwrap();
        let env: Envelope<DivergenceVerdict> = read_json(&buf[..]).unwrap();
        assert_eq!(env.payload, v);
        assert!(env.payload.verify(&a, Some(&IndexSet::odds())).unwrap());
        let mut buf = Vec::new();
        write_json(&mut buf, "trace", &RunConfig::default(), &TraceData::from(&t)).unwrap();
        let env: Envelope<TraceData> = read_json(&buf[..]).unwrap();
        assert_eq!(PartialSumTrace::try_from(env.payload).unwrap(), t);
    }

    #[test]
    fn rejects_foreign_schema() {
        let doc = r#"{"schema":"other/9","kind":"x","config":null,"payload":1}"#;
        assert!(read_json::<_, u32>(doc.as_bytes()).is_err());
        assert!("yaml".parse::<Format>().is_err());
    }
}
