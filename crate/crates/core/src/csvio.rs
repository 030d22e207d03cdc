//! CSV ingestion and emission.
//!
//! Input files are comma separated with an optional header row. The first
//! row is a header iff any of its cells fails to parse as a number. Values
//! are written with Rust's shortest round-trip float formatting, so a write
//! followed by a read reproduces every value exactly.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{KdrError, Result};
use crate::synthdata::Dataset;

/// Which column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseSelector {
    Index(usize),
    Name(String),
}

impl ResponseSelector {
    /// Digits select by 0-based index, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => ResponseSelector::Index(i),
            Err(_) => ResponseSelector::Name(s.trim().to_string()),
        }
    }
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

pub fn parse_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| KdrError::Parse { line, message: e.to_string() })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if idx == 0 && record.iter().any(|c| parse_number(c).is_none()) {
            header = Some(record.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(KdrError::Parse {
                line,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                parse_number(cell).ok_or_else(|| KdrError::Parse {
                    line,
                    message: format!("column {col}: '{}' is not a number", cell.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = width.unwrap_or(0);
    let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(Table { header, values })
}

/// Splits a table into covariates and a single response column.
pub fn table_to_dataset(table: &Table, response: &ResponseSelector) -> Result<Dataset> {
    let ncols = table.values.ncols();
    let idx = match response {
        ResponseSelector::Index(i) => *i,
        ResponseSelector::Name(name) => table
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| KdrError::Parse { line: 1, message: format!("no column named '{name}'") })?,
    };
    if idx >= ncols {
        return Err(KdrError::Parse {
            line: 1,
            message: format!("response column {idx} out of range ({ncols} columns)"),
        });
    }
    if ncols < 2 {
        return Err(KdrError::Parse { line: 1, message: "need at least one covariate column".into() });
    }
    let n = table.values.nrows();
    if n < 2 {
        return Err(KdrError::Parse { line: n + 1, message: "need at least two data rows".into() });
    }
    let keep: Vec<usize> = (0..ncols).filter(|&j| j != idx).collect();
    let x = table.values.select_columns(&keep);
    let y = table.values.select_columns(&[idx]);
    Dataset::new(x, y)
}

pub fn read_csv_from<R: Read>(reader: R, response: &ResponseSelector) -> Result<Dataset> {
    table_to_dataset(&parse_table(reader)?, response)
}

/// Reads a data set from a CSV file.
pub fn read_csv(path: &Path, response: &ResponseSelector) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| KdrError::Io(format!("{}: {e}", path.display())))?;
    read_csv_from(std::io::BufReader::new(file), response)
}

/// Writes a matrix, optionally preceded by a header row.
pub fn write_matrix<W: Write>(out: W, header: Option<&[String]>, values: &DMatrix<f64>) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    if let Some(h) = header {
        writeln!(w, "{}", h.join(","))?;
    }
    for row in values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes covariates followed by the response columns, with a header
/// `x0,...,x{m-1},y` (or `y0,...` for several responses).
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut header: Vec<String> = (0..data.m()).map(|j| format!("x{j}")).collect();
    if data.q() == 1 {
        header.push("y".into());
    } else {
        header.extend((0..data.q()).map(|j| format!("y{j}")));
    }
    let mut joined = DMatrix::zeros(data.n(), data.m() + data.q());
    joined.columns_mut(0, data.m()).copy_from(&data.x);
    joined.columns_mut(data.m(), data.q()).copy_from(&data.y);
    write_matrix(out, Some(&header), &joined)
}
