//! Numeric CSV ingestion: comma separated, `.` decimal point, optional
//! single header line detected by any non-numeric cell in the first row.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::moments::DataMatrix;

/// Parses CSV text into a `t x n` data matrix.
pub fn parse_csv(text: &str) -> Result<DataMatrix> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut n = None;
    let mut values = Vec::new();
    let mut t = 0;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if k == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
            n = Some(rec.len());
            continue;
        }
        let width = *n.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(Error::Csv {
                line,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                line,
                column: j + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        t += 1;
    }
    if t == 0 {
        return Err(Error::Csv {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    DataMatrix::from_row_major(t, n.unwrap_or(0), &values)
}

pub fn ingest_csv(path: &Path) -> Result<DataMatrix> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Writes `x` with a `x1,...,xn` header. Values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn write_csv(x: &DataMatrix, out: &mut dyn Write) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=x.n()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).map_err(csv_io)?;
    for l in 0..x.t() {
        w.write_record(x.row(l).iter().map(|v| v.to_string()))
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: ::csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
