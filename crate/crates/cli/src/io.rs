//! Matrix files and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    /// Binary P5 graymap, maxval 255, read into [0, 1].
    Pgm8,
    /// Comma-separated decimal reals, one matrix row per line.
    Csv,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Pgm8 => "pgm",
            MatrixFormat::Csv => "csv",
        }
    }
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::file(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::file(path, e))?;
    tmp.persist(path).map_err(|e| CliError::file(path, e.error))?;
    Ok(())
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> CliResult<DMatrix<f64>> {
    match format {
        MatrixFormat::Pgm8 => read_pgm(path),
        MatrixFormat::Csv => read_csv_matrix(path),
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, format: MatrixFormat) -> CliResult<()> {
    match format {
        MatrixFormat::Pgm8 => write_atomic(path, &encode_pgm(m)),
        MatrixFormat::Csv => write_csv_matrix(path, m),
    }
}

pub fn read_pgm(path: &Path) -> CliResult<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
    decode_pgm(&bytes).map_err(|msg| CliError::file(path, msg))
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String, String> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err("truncated PGM header".into()),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn decode_pgm(bytes: &[u8]) -> Result<DMatrix<f64>, String> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(format!("malformed PGM header: magic {magic:?}, expected \"P5\""));
    }
    let mut num = |what: &str| -> Result<usize, String> {
        let tok = header_token(bytes, &mut pos)?;
        tok.parse::<usize>()
            .map_err(|_| format!("malformed PGM header: {what} {tok:?}"))
    };
    let (width, height, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval != 255 {
        return Err(format!("malformed PGM header: maxval {maxval}, only 255 is supported"));
    }
    if width == 0 || height == 0 {
        return Err("malformed PGM header: empty image".into());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < width * height {
        return Err(format!("PGM raster has {} bytes, expected {}", raster.len(), width * height));
    }
    Ok(DMatrix::from_fn(height, width, |r, c| f64::from(raster[r * width + c]) / 255.0))
}

/// Values are clamped to [0, 1] and rounded to the nearest level.
pub fn encode_pgm(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push((m[(r, c)].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn read_csv_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_csv_matrix(&text).map_err(|msg| CliError::file(path, msg))
}

pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("line {}: {e}", i + 1))?;
        let row = record
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("line {}: {s:?} is not a finite real", i + 1)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format!("line {} has {} entries, expected {}", i + 1, row.len(), first.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Shortest decimal form that parses back to the same bits.
pub fn format_csv_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv_matrix(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    write_atomic(path, format_csv_matrix(m).as_bytes())
}

/// A numeric CSV with a header row, as emitted for traces and repro outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_table(text: &str) -> Result<Table, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("row {}: {e}", i + 1))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| format!("row {}: {s:?} is not a number", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_table(&text).map_err(|msg| CliError::file(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_on_levels() {
        let m = DMatrix::from_fn(3, 4, |r, c| ((r * 4 + c) * 20) as f64 / 255.0);
        let back = decode_pgm(&encode_pgm(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let m = decode_pgm(&bytes).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    }

    #[test]
    fn pgm_rejects_wrong_magic_and_short_raster() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").unwrap_err().contains("magic"));
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").unwrap_err().contains("raster"));
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").unwrap_err().contains("maxval"));
    }

    #[test]
    fn csv_parses_exact_decimals() {
        let m = parse_csv_matrix("1.5, -2\n0.1,3e-3\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.5, -2.0, 0.1, 0.003]));
    }

    #[test]
    fn csv_rejects_ragged_rows_and_nan() {
        assert!(parse_csv_matrix("1,2\n3\n").unwrap_err().contains("line 2"));
        assert!(parse_csv_matrix("NaN\n").is_err());
        assert!(parse_csv_matrix("").is_err());
    }

    #[test]
    fn table_columns_by_name() {
        let t = parse_table("iteration,objective\n1,-3.5\n2,-1\n").unwrap();
        assert_eq!(t.column("objective"), Some(vec![-3.5, -1.0]));
        assert!(t.column("delta_L1").is_none());
        assert!(parse_table("a\nx\n").is_err());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let m = DMatrix::from_row_slice(1, 3, &[0.1 + 0.2, 1e-300, -std::f64::consts::PI]);
        assert_eq!(parse_csv_matrix(&format_csv_matrix(&m)).unwrap(), m);
    }
}
