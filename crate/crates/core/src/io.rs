//! Plain CSV matrices: one matrix row per line, comma separated, no header.
//!
//! Values are written with Rust's shortest round-trip formatting so a
//! written matrix reads back bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CssnmfError, Result};
use crate::matrix::DenseMatrix;

pub fn read_matrix_from<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                CssnmfError::Parse(format!("ragged row at line {}", line + 1))
            }
            _ => CssnmfError::Csv(e),
        })?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    CssnmfError::Parse(format!("line {}: cannot parse {field:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| CssnmfError::io(path, e))?;
    read_matrix_from(file)
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_value(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_text(path, &format_matrix(m))
}

/// One index per line.
pub fn write_indices(path: impl AsRef<Path>, idx: &[usize]) -> Result<()> {
    let text: String = idx.iter().map(|i| format!("{i}\n")).collect();
    write_text(path, &text)
}

pub fn read_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CssnmfError::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| CssnmfError::Parse(format!("bad index {l:?} in {}", path.display())))
        })
        .collect()
}

/// Writes `text` to `path`, replacing any existing file.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| CssnmfError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CssnmfError::io(path, e))
}
