//! Option-chain and OIS-curve ingestion, day counting and persistence of
//! calibration results.
//!
//! Chain files are CSV with the header
//! `value_date,expiry,strike,call_mid,put_mid`; dates are ISO-8601 and an
//! empty price cell means the quote is missing. OIS files use
//! `tenor_date,zero_rate` with continuously compounded zero rates.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calib::CalibrationResult;
use crate::error::{Error, Result};

pub const CHAIN_HEADER: [&str; 5] = ["value_date", "expiry", "strike", "call_mid", "put_mid"];
pub const OIS_HEADER: [&str; 2] = ["tenor_date", "zero_rate"];

/// Version written into every result document.
pub const SCHEMA_VERSION: u32 = 1;

/// One line of an option chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionRecord {
    pub expiry: NaiveDate,
    pub strike: f64,
    pub call_mid: Option<f64>,
    pub put_mid: Option<f64>,
}

/// Quoted option mids for a single value date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionChain {
    pub value_date: NaiveDate,
    pub records: Vec<OptionRecord>,
}

impl OptionChain {
    /// Distinct expiries in increasing order.
    pub fn expiries(&self) -> Vec<NaiveDate> {
        let mut e: Vec<NaiveDate> = self.records.iter().map(|r| r.expiry).collect();
        e.sort();
        e.dedup();
        e
    }

    /// Records of one expiry sorted by strike.
    pub fn records_for(&self, expiry: NaiveDate) -> Vec<OptionRecord> {
        let mut r: Vec<OptionRecord> = self.records.iter().filter(|r| r.expiry == expiry).copied().collect();
        r.sort_by(|a, b| a.strike.total_cmp(&b.strike));
        r
    }

    /// Writes the chain in the CSV format read by [`load_chain`].
    pub fn to_csv(&self) -> String {
        let mut out = CHAIN_HEADER.join(",");
        out.push('\n');
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.value_date,
                r.expiry,
                r.strike,
                cell(r.call_mid),
                cell(r.put_mid)
            ));
        }
        out
    }
}

/// A rejected chain row. `line` is the 1-based line number in the file
/// (the header is line 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

impl From<RowError> for Error {
    fn from(e: RowError) -> Self {
        Error::ValueError {
            row: e.line,
            message: e.message,
        }
    }
}

/// Result of a lenient parse: the valid records and every rejected row.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParse {
    pub chain: OptionChain,
    pub rejected: Vec<RowError>,
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::SchemaError(format!(
            "expected columns [{}], found [{}]",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

fn parse_date(s: &str, column: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("{column}: `{s}` is not an ISO date ({e})"))
}

fn parse_number(s: &str, column: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{column}: `{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{column}: `{s}` is not finite"))
    }
}

fn parse_price(s: &str, column: &str) -> std::result::Result<Option<f64>, String> {
    if s.trim().is_empty() {
        return Ok(None);
    }
    let v = parse_number(s, column)?;
    if v < 0.0 {
        return Err(format!("{column}: negative option price {v}"));
    }
    Ok(Some(v))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(r)
}

/// Parses a chain, collecting malformed rows instead of failing on them.
/// Only structural problems (header, I/O) are returned as errors.
pub fn parse_chain_lenient<R: Read>(input: R) -> Result<ChainParse> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| Error::SchemaError(e.to_string()))?.clone();
    check_header(&headers, &CHAIN_HEADER)?;
    let mut value_date: Option<NaiveDate> = None;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
                rejected.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let parsed = (|| -> std::result::Result<(NaiveDate, OptionRecord), String> {
            if row.len() != CHAIN_HEADER.len() {
                return Err(format!("expected {} fields, found {}", CHAIN_HEADER.len(), row.len()));
            }
            let vd = parse_date(&row[0], "value_date")?;
            let expiry = parse_date(&row[1], "expiry")?;
            let strike = parse_number(&row[2], "strike")?;
            let call_mid = parse_price(&row[3], "call_mid")?;
            let put_mid = parse_price(&row[4], "put_mid")?;
            if call_mid.is_none() && put_mid.is_none() {
                return Err("both call_mid and put_mid are missing".into());
            }
            if expiry <= vd {
                return Err(format!("expiry {expiry} is not after value date {vd}"));
            }
            Ok((
                vd,
                OptionRecord {
                    expiry,
                    strike,
                    call_mid,
                    put_mid,
                },
            ))
        })();
        match parsed {
            Ok((vd, rec)) => match value_date {
                Some(d) if d != vd => rejected.push(RowError {
                    line,
                    message: format!("value date {vd} differs from {d} of earlier rows"),
                }),
                _ => {
                    value_date = Some(vd);
                    records.push(rec);
                }
            },
            Err(message) => rejected.push(RowError { line, message }),
        }
    }
    let value_date = value_date.ok_or_else(|| Error::SchemaError("chain has no valid rows".into()))?;
    Ok(ChainParse {
        chain: OptionChain { value_date, records },
        rejected,
    })
}

/// Strict parse: the first malformed row is an error.
pub fn parse_chain<R: Read>(input: R) -> Result<OptionChain> {
    let p = parse_chain_lenient(input)?;
    match p.rejected.into_iter().next() {
        Some(e) => Err(e.into()),
        None => Ok(p.chain),
    }
}

pub fn load_chain(path: impl AsRef<Path>) -> Result<OptionChain> {
    parse_chain(fs::File::open(path)?)
}

/// Zero-rate curve, linear in the zero rate between tenor dates and flat
/// outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OisCurve {
    points: Vec<(NaiveDate, f64)>,
}

impl OisCurve {
    pub fn new(points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::SchemaError("OIS curve has no points".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::ValueError {
                    row: i + 3,
                    message: format!("tenor date {} is not after {}", w[1].0, w[0].0),
                });
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    /// Zero rate for a date.
    pub fn zero_rate(&self, date: NaiveDate) -> f64 {
        let p = &self.points;
        if date <= p[0].0 {
            return p[0].1;
        }
        if date >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let i = p.partition_point(|&(d, _)| d <= date);
        let (d0, r0) = p[i - 1];
        let (d1, r1) = p[i];
        let w = (date - d0).num_days() as f64 / (d1 - d0).num_days() as f64;
        r0 + (r1 - r0) * w
    }

    pub fn to_csv(&self) -> String {
        let mut out = OIS_HEADER.join(",");
        out.push('\n');
        for (d, r) in &self.points {
            out.push_str(&format!("{d},{r}\n"));
        }
        out
    }
}

pub fn parse_ois<R: Read>(input: R) -> Result<OisCurve> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| Error::SchemaError(e.to_string()))?.clone();
    check_header(&headers, &OIS_HEADER)?;
    let mut points = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::ValueError {
            row: line,
            message: e.to_string(),
        })?;
        let parsed = (|| -> std::result::Result<(NaiveDate, f64), String> {
            if row.len() != OIS_HEADER.len() {
                return Err(format!("expected {} fields, found {}", OIS_HEADER.len(), row.len()));
            }
            Ok((parse_date(&row[0], "tenor_date")?, parse_number(&row[1], "zero_rate")?))
        })();
        points.push(parsed.map_err(|message| Error::ValueError { row: line, message })?);
    }
    OisCurve::new(points)
}

pub fn load_ois(path: impl AsRef<Path>) -> Result<OisCurve> {
    parse_ois(fs::File::open(path)?)
}

/// ACT/365 fixed year fraction from `d1` to `d2`.
pub fn year_fraction(d1: NaiveDate, d2: NaiveDate) -> Result<f64> {
    let days = (d2 - d1).num_days();
    if days < 0 {
        return Err(Error::NegativeInterval {
            from: d1.to_string(),
            to: d2.to_string(),
        });
    }
    Ok(days as f64 / 365.0)
}

#[derive(Serialize, Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

fn check_version(text: &str) -> Result<()> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found: probe.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ResultDocument<R> {
    schema_version: u32,
    result: R,
}

/// Canonical JSON text of a result document.
pub fn result_to_json(result: &CalibrationResult) -> Result<String> {
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        result,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::SchemaError(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn result_from_json(text: &str) -> Result<CalibrationResult> {
    check_version(text)?;
    let doc: ResultDocument<CalibrationResult> =
        serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
    Ok(doc.result)
}

pub fn save_result(path: impl AsRef<Path>, result: &CalibrationResult) -> Result<()> {
    fs::write(path, result_to_json(result)?)?;
    Ok(())
}

pub fn load_result(path: impl AsRef<Path>) -> Result<CalibrationResult> {
    result_from_json(&fs::read_to_string(path)?)
}

/// Append-only collection of calibration results keyed by value date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultArchive {
    results: BTreeMap<NaiveDate, CalibrationResult>,
}

impl ResultArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, result: CalibrationResult) -> Result<()> {
        let date = result.value_date;
        if self.results.contains_key(&date) {
            return Err(Error::DuplicateValueDate(date.to_string()));
        }
        self.results.insert(date, result);
        Ok(())
    }

    pub fn get(&self, date: NaiveDate) -> Option<&CalibrationResult> {
        self.results.get(&date)
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    /// Results in value-date order.
    pub fn iter(&self) -> impl Iterator<Item = (&NaiveDate, &CalibrationResult)> {
        self.results.iter()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ResultDocument {
            schema_version: SCHEMA_VERSION,
            result: &self.results,
        };
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::SchemaError(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_version(text)?;
        let doc: ResultDocument<BTreeMap<NaiveDate, CalibrationResult>> =
            serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
        Ok(Self { results: doc.result })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
