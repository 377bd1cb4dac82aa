//! CSV ingestion for the model inputs.
//!
//! All readers accept any byte source, skip `#` comment lines, and name the
//! offending row in their errors. Numeric parsing is strict: blank cells or
//! stray text are refused rather than silently dropped.

use crate::error::{Error, Result};
use csv::{ReaderBuilder, StringRecord};
use std::io;

fn reader<R: io::Read>(src: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(src)
}

fn column(headers: &StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Data(format!("missing column '{name}' in header {headers:?}")))
}

fn parse_f64(record: &StringRecord, idx: usize, row: usize) -> Result<f64> {
    let cell = record
        .get(idx)
        .ok_or_else(|| Error::Data(format!("row {row}: too few fields")))?;
    cell.parse::<f64>()
        .map_err(|_| Error::Data(format!("row {row}: '{cell}' is not a number")))
}

/// Single column `x`.
pub fn read_scalar_series<R: io::Read>(src: R) -> Result<Vec<f64>> {
    let mut rdr = reader(src);
    let idx = column(rdr.headers().map_err(|e| Error::Data(e.to_string()))?, "x")?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("row {}: {e}", i + 2)))?;
        out.push(parse_f64(&rec, idx, i + 2)?);
    }
    if out.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    Ok(out)
}

/// Paired columns `x1`, `x2`.
pub fn read_pair_series<R: io::Read>(src: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(src);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let i1 = column(&headers, "x1")?;
    let i2 = column(&headers, "x2")?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("row {}: {e}", i + 2)))?;
        out.push((parse_f64(&rec, i1, i + 2)?, parse_f64(&rec, i2, i + 2)?));
    }
    if out.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    Ok(out)
}

/// Long format with columns `sample` (1 or 2) and `value`.
pub fn read_two_samples<R: io::Read>(src: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(src);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let is = column(&headers, "sample")?;
    let iv = column(&headers, "value")?;
    let (mut one, mut two) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let v = parse_f64(&rec, iv, row)?;
        match rec.get(is) {
            Some("1") => one.push(v),
            Some("2") => two.push(v),
            Some(other) => {
                return Err(Error::Data(format!(
                    "row {row}: sample must be 1 or 2, got '{other}'"
                )))
            }
            None => return Err(Error::Data(format!("row {row}: too few fields"))),
        }
    }
    if one.is_empty() || two.is_empty() {
        return Err(Error::Data("each sample needs at least one row".into()));
    }
    Ok((one, two))
}

/// Long format with columns `group` and `y`. Groups are returned in order
/// of first appearance, with the responses regrouped contiguously.
pub fn read_grouped<R: io::Read>(src: R) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut rdr = reader(src);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let ig = column(&headers, "group")?;
    let iy = column(&headers, "y")?;
    let mut labels: Vec<String> = Vec::new();
    let mut buckets: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let label = rec
            .get(ig)
            .ok_or_else(|| Error::Data(format!("row {row}: too few fields")))?
            .to_string();
        let v = parse_f64(&rec, iy, row)?;
        match labels.iter().position(|l| *l == label) {
            Some(b) => buckets[b].push(v),
            None => {
                labels.push(label);
                buckets.push(vec![v]);
            }
        }
    }
    if buckets.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let sizes: Vec<usize> = buckets.iter().map(Vec::len).collect();
    Ok((sizes, buckets.into_iter().flatten().collect()))
}
