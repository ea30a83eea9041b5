//! Dataset CSV files and small file helpers.
//!
//! Datasets are written with header `c_1,...,c_m,y` and every value in
//! scientific notation with 17 significant digits, so `f64` values survive a
//! write/read round trip bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::scalar::Scalar;

/// Formats a value with 17 significant digits.
pub fn format_value<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x)
}

pub fn write_dataset_csv<T: Scalar, W: Write>(data: &Dataset<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let m = data.n_metabolites();
    let mut header: Vec<String> = (1..=m).map(|i| format!("c_{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_err)?;
    for (c, y) in data.rows().zip(data.rates()) {
        let mut rec: Vec<String> = c.iter().map(|&v| format_value(v)).collect();
        rec.push(format_value(*y));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    let (row, column) = e.position().map_or((0, 0), |p| (p.line() as usize, 0));
    Error::Parse {
        row,
        column,
        message: e.to_string(),
    }
}

/// Parses a dataset CSV. Rows and columns in errors are 1-based; row 1 is the header.
pub fn read_dataset_csv<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let ncols = header.len();
    if ncols < 2 {
        return Err(Error::Parse {
            row: 1,
            column: ncols,
            message: "expected header c_1,...,c_m,y".into(),
        });
    }
    for (j, name) in header.iter().enumerate() {
        let expected = if j + 1 == ncols {
            "y".to_string()
        } else {
            format!("c_{}", j + 1)
        };
        if name != expected {
            return Err(Error::Parse {
                row: 1,
                column: j + 1,
                message: format!("header `{name}` should be `{expected}`"),
            });
        }
    }
    let m = ncols - 1;
    let mut concentrations = Vec::new();
    let mut rates = Vec::new();
    for (k, record) in r.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != ncols {
            return Err(Error::Parse {
                row,
                column: record.len().min(ncols) + 1,
                message: format!("expected {ncols} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let value: T = field.parse().map_err(|e| Error::Parse {
                row,
                column: j + 1,
                message: format!("`{field}`: {e}"),
            })?;
            let ok = if j < m {
                value.is_finite() && value > T::zero()
            } else {
                value.is_finite()
            };
            if !ok {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: if j < m {
                        format!("concentration `{field}` must be positive and finite")
                    } else {
                        format!("rate `{field}` must be finite")
                    },
                });
            }
            if j < m {
                concentrations.push(value);
            } else {
                rates.push(value);
            }
        }
    }
    if rates.is_empty() {
        return Err(Error::Parse {
            row: 2,
            column: 0,
            message: "dataset has no observations".into(),
        });
    }
    Dataset::from_flat(concentrations, rates, m, None)
}

pub fn save_dataset<T: Scalar>(data: &Dataset<T>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset_csv(data, &mut buf)?;
    write_file(path, &buf)
}

pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(std::io::BufReader::new(file))
}

/// Writes bytes, creating missing parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

/// Builds CSV text from a header and string rows.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
}

/// Parses CSV text into a header and string rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
