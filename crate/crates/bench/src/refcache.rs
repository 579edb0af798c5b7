//! Text cache for ground-truth eigenpairs, bound to a matrix by the
//! SHA-256 of its canonical lower triangle.
//!
//! ```text
//! svrrg-reference 1
//! n 200
//! k 3
//! matrix_sha256 <64 hex digits>
//! tau 3e-1            (or `none`)
//! eigenvalues 200
//! <one value per line>
//! vectors
//! <n lines of k values>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a cache reads back
//! bit-for-bit.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use svrrg_core::{EigenReference, Mat, SymmetricSparseMatrix};

const MAGIC: &str = "svrrg-reference 1";

#[derive(Debug, thiserror::Error)]
pub enum RefError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("reference was computed for matrix {cached}, but the loaded matrix hashes to {actual}")]
    DigestMismatch { cached: String, actual: String },
    #[error("invalid reference: {0}")]
    Invalid(#[from] svrrg_core::Error),
}

/// SHA-256 over `n` and the sorted lower-triangle entries, each as
/// little-endian `u64` row, `u64` column and IEEE-754 value bits.
pub fn matrix_digest(a: &SymmetricSparseMatrix) -> String {
    let mut h = Sha256::new();
    h.update((a.n() as u64).to_le_bytes());
    for &(r, c, v) in a.lower_entries() {
        h.update((r as u64).to_le_bytes());
        h.update((c as u64).to_le_bytes());
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn write_reference<W: Write>(mut w: W, digest: &str, r: &EigenReference) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n {}", r.n())?;
    writeln!(w, "k {}", r.k())?;
    writeln!(w, "matrix_sha256 {digest}")?;
    match r.tau() {
        Some(t) => writeln!(w, "tau {t:e}")?,
        None => writeln!(w, "tau none")?,
    }
    writeln!(w, "eigenvalues {}", r.eigenvalues().len())?;
    for l in r.eigenvalues() {
        writeln!(w, "{l:e}")?;
    }
    writeln!(w, "vectors")?;
    let v = r.vectors();
    for i in 0..v.rows() {
        let row: Vec<String> = v.row(i).iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()
}

pub fn save_reference(path: &Path, digest: &str, r: &EigenReference) -> io::Result<()> {
    write_reference(BufWriter::new(File::create(path)?), digest, r)
}

struct Lines<R> {
    inner: std::iter::Enumerate<io::Lines<R>>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, RefError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l?)
            }
            None => Err(RefError::Parse { line: self.line + 1, reason: "unexpected end of file".into() }),
        }
    }

    fn err(&self, reason: impl Into<String>) -> RefError {
        RefError::Parse { line: self.line, reason: reason.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<String, RefError> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected `{key} <value>`"))),
        }
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T, RefError> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

/// Reads a cache and returns it with the digest it was bound to. Pass
/// `expected_digest` to reject a cache computed for another matrix.
pub fn read_reference<R: BufRead>(
    reader: R,
    expected_digest: Option<&str>,
) -> Result<(EigenReference, String), RefError> {
    let mut lines = Lines { inner: reader.lines().enumerate(), line: 0 };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err(format!("expected `{MAGIC}`")));
    }
    let n: usize = {
        let s = lines.keyed("n")?;
        lines.number(&s)?
    };
    let k: usize = {
        let s = lines.keyed("k")?;
        lines.number(&s)?
    };
    let digest = lines.keyed("matrix_sha256")?;
    if let Some(expected) = expected_digest {
        if expected != digest {
            return Err(RefError::DigestMismatch { cached: digest, actual: expected.to_string() });
        }
    }
    let tau_s = lines.keyed("tau")?;
    let tau: Option<f64> = if tau_s == "none" { None } else { Some(lines.number(&tau_s)?) };
    let count: usize = {
        let s = lines.keyed("eigenvalues")?;
        lines.number(&s)?
    };
    let mut eigenvalues = Vec::with_capacity(count);
    for _ in 0..count {
        let l = lines.next_line()?;
        eigenvalues.push(lines.number(l.trim())?);
    }
    if lines.next_line()?.trim() != "vectors" {
        return Err(lines.err("expected `vectors`"));
    }
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..n {
        let l = lines.next_line()?;
        let row: Vec<f64> = l.split_whitespace().map(|f| lines.number(f)).collect::<Result<_, _>>()?;
        if row.len() != k {
            return Err(lines.err(format!("expected {k} values, found {}", row.len())));
        }
        data.extend(row);
    }
    let mut r = EigenReference::new(eigenvalues, Mat::from_row_major(n, k, data))?;
    if let Some(t) = tau {
        r = r.with_exact_gap(t);
    }
    Ok((r, digest))
}

pub fn load_reference(path: &Path, expected_digest: Option<&str>) -> Result<(EigenReference, String), RefError> {
    read_reference(BufReader::new(File::open(path)?), expected_digest)
}
