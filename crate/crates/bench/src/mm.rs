//! Matrix Market reader and writer for the `coordinate real symmetric`
//! variant.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use svrrg_core::{Error as CoreError, SymmetricSparseMatrix};

#[derive(Debug, thiserror::Error)]
pub enum MmError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: missing %%MatrixMarket header")]
    MissingHeader { line: usize },
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: unsupported format `{found}` (only `coordinate` is supported)")]
    UnsupportedFormat { line: usize, found: String },
    #[error("line {line}: unsupported field `{found}` (only `real` is supported)")]
    UnsupportedField { line: usize, found: String },
    #[error("line {line}: unsupported symmetry `{found}` (only `symmetric` is supported)")]
    UnsupportedSymmetry { line: usize, found: String },
    #[error("line {line}: malformed size line")]
    MalformedSize { line: usize },
    #[error("line {line}: matrix is {rows}x{cols}, expected square")]
    NotSquare { line: usize, rows: usize, cols: usize },
    #[error("line {line}: malformed entry")]
    MalformedEntry { line: usize },
    #[error("line {line}: index {index} outside 1..={dim}")]
    IndexOutOfRange { line: usize, index: usize, dim: usize },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: duplicate entry ({row}, {col})")]
    DuplicateEntry { line: usize, row: usize, col: usize },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
}

/// Reads a Matrix Market stream. Indices are 1-based; entries above the
/// diagonal are accepted and mirrored, and a pair given in both triangles
/// is reported as a duplicate.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SymmetricSparseMatrix, MmError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (header_line, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(MmError::MissingHeader { line: 1 }),
    };
    parse_header(header_line, &header)?;

    let mut size = None;
    for (line, text) in lines.by_ref() {
        let text = text?;
        let t = text.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[rows, cols, nnz]) => {
                if rows != cols {
                    return Err(MmError::NotSquare { line, rows, cols });
                }
                size = Some((rows, nnz));
            }
            _ => return Err(MmError::MalformedSize { line }),
        }
        break;
    }
    let (n, expected) = size.ok_or(MmError::MalformedSize { line: header_line + 1 })?;

    let mut entries = Vec::with_capacity(expected);
    let mut entry_lines = Vec::with_capacity(expected);
    for (line, text) in lines {
        let text = text?;
        let t = text.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(MmError::MalformedEntry { line });
        };
        let (Ok(i), Ok(j), Ok(v)) = (i.parse::<usize>(), j.parse::<usize>(), v.parse::<f64>()) else {
            return Err(MmError::MalformedEntry { line });
        };
        for index in [i, j] {
            if index == 0 || index > n {
                return Err(MmError::IndexOutOfRange { line, index, dim: n });
            }
        }
        if !v.is_finite() {
            return Err(MmError::NonFinite { line });
        }
        entries.push((i - 1, j - 1, v));
        entry_lines.push(line);
    }
    if entries.len() != expected {
        return Err(MmError::EntryCount { expected, found: entries.len() });
    }
    SymmetricSparseMatrix::from_triplets(n, entries).map_err(|e| match e {
        CoreError::DuplicateEntry { row, col, position } => {
            MmError::DuplicateEntry { line: entry_lines[position], row: row + 1, col: col + 1 }
        }
        other => MmError::MalformedHeader { line: header_line, reason: other.to_string() },
    })
}

fn parse_header(line: usize, header: &str) -> Result<(), MmError> {
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(MmError::MissingHeader { line });
    }
    if words.len() != 5 {
        return Err(MmError::MalformedHeader { line, reason: format!("expected 5 fields, found {}", words.len()) });
    }
    if words[1] != "matrix" {
        return Err(MmError::MalformedHeader { line, reason: format!("object `{}` is not `matrix`", words[1]) });
    }
    if words[2] != "coordinate" {
        return Err(MmError::UnsupportedFormat { line, found: words[2].clone() });
    }
    if words[3] != "real" {
        return Err(MmError::UnsupportedField { line, found: words[3].clone() });
    }
    if words[4] != "symmetric" {
        return Err(MmError::UnsupportedSymmetry { line, found: words[4].clone() });
    }
    Ok(())
}

pub fn load_matrix_market(path: &Path) -> Result<SymmetricSparseMatrix, MmError> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes the lower triangle with shortest round-trip float formatting.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SymmetricSparseMatrix) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.lower_entries().len())?;
    for &(r, c, v) in a.lower_entries() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    w.flush()
}

pub fn save_matrix_market(path: &Path, a: &SymmetricSparseMatrix) -> io::Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), a)
}
