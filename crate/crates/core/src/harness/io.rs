//! MatrixMarket coordinate and dense CSV readers/writers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    MatrixMarket,
    CsvDense,
}

impl MatrixFormat {
    /// `.mtx` → MatrixMarket, `.csv` → dense CSV.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mtx" | "mm" => Some(Self::MatrixMarket),
            "csv" => Some(Self::CsvDense),
            _ => None,
        }
    }
}

pub const MATRIX_MARKET_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<Matrix> {
    let file = File::open(path)?;
    match format {
        MatrixFormat::MatrixMarket => read_matrix_market(BufReader::new(file)),
        MatrixFormat::CsvDense => read_csv(BufReader::new(file)),
    }
}

/// Reads a `coordinate real|integer general` MatrixMarket stream into sparse storage.
pub fn read_matrix_market<R: Read>(reader: R) -> Result<Matrix> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let ok = tokens.len() == 5
        && tokens[0] == "%%matrixmarket"
        && tokens[1] == "matrix"
        && tokens[2] == "coordinate"
        && (tokens[3] == "real" || tokens[3] == "integer")
        && tokens[4] == "general";
    if !ok {
        return Err(parse_err(1, format!("expected '{MATRIX_MARKET_HEADER}', found '{header}'")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triples = Vec::new();
    for (line_no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "size line must be 'rows cols nnz'"));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|e| parse_err(line_no, format!("bad size '{s}': {e}")));
                let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if dims.0 == 0 || dims.1 == 0 {
                    return Err(parse_err(line_no, "matrix dimensions must be positive"));
                }
                triples.reserve(dims.2);
                size = Some(dims);
            }
            Some((m, n, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(line_no, "entry must be 'row col value'"));
                }
                let row: usize = fields[0].parse().map_err(|e| parse_err(line_no, format!("bad row: {e}")))?;
                let col: usize = fields[1].parse().map_err(|e| parse_err(line_no, format!("bad col: {e}")))?;
                let value: f64 = fields[2].parse().map_err(|e| parse_err(line_no, format!("bad value: {e}")))?;
                if row == 0 || col == 0 || row > m || col > n {
                    return Err(parse_err(line_no, format!("index ({row}, {col}) outside 1..={m} x 1..={n}")));
                }
                triples.push((row - 1, col - 1, value));
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| parse_err(2, "missing size line"))?;
    if triples.len() != nnz {
        return Err(parse_err(0, format!("size line declares {nnz} entries, found {}", triples.len())));
    }
    Matrix::sparse(m, n, triples)
}

/// Reads comma-separated rows (no header) into dense storage.
pub fn read_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(line, format!("bad value '{f}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(line, format!("expected {} fields, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no rows"));
    }
    Matrix::from_rows(&rows)
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_matrix_market<W: Write>(a: &Matrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{MATRIX_MARKET_HEADER}")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for e in a.nonzeros() {
        writeln!(w, "{} {} {}", e.row + 1, e.col + 1, fmt_value(e.value))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(a: &Matrix, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let d = a.to_dense_vec();
    for row in d.chunks_exact(a.cols()) {
        w.write_record(row.iter().map(|&v| fmt_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(a: &Matrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        MatrixFormat::MatrixMarket => write_matrix_market(a, file),
        MatrixFormat::CsvDense => write_csv(a, file),
    }
}
