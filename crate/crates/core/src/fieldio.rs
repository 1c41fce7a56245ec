//! Flat-text spectral field files: a header line
//! `lattice <lambda> <L> <N> <geometry>`, then one `k1 k2 re im` row per
//! lattice point in enumeration order. Floats are written shortest-roundtrip,
//! so reading back a written file reproduces the field bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{Geometry, Lattice, LatticeError, SpectralField};

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
    #[error("expected {want} coefficient rows, found {got}")]
    RowCount { want: usize, got: usize },
    #[error("field file has no header line")]
    Empty,
}

fn bad(line: usize, what: impl Into<String>) -> FieldIoError {
    FieldIoError::Parse { line, what: what.into() }
}

pub fn field_to_string(field: &SpectralField) -> String {
    let lat = field.lattice();
    let mut out = String::with_capacity(32 + 48 * lat.len());
    writeln!(
        out,
        "lattice {} {} {} {}",
        lat.lambda(),
        lat.len_x1(),
        lat.cutoff(),
        lat.geometry()
    )
    .expect("string writes are infallible");
    for ((k1, k2), c) in lat.points().zip(field.coef()) {
        writeln!(out, "{} {} {} {}", k1, k2, c.re, c.im).expect("string writes are infallible");
    }
    out
}

pub fn field_from_str(text: &str) -> Result<SpectralField, FieldIoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hno, header) = lines.next().ok_or(FieldIoError::Empty)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "lattice" {
        return Err(bad(hno + 1, "header must be `lattice lambda L N geometry`"));
    }
    let num = |i: usize| -> Result<f64, FieldIoError> {
        toks[i].parse().map_err(|_| bad(hno + 1, format!("bad number '{}'", toks[i])))
    };
    let geometry: Geometry =
        toks[4].parse().map_err(|e: String| bad(hno + 1, e))?;
    // cramped so that box-probe dumps read back too; same arithmetic
    let lat = Lattice::cramped(num(1)?, num(2)?, num(3)?, geometry)?;

    let mut coef = Vec::with_capacity(lat.len());
    for ((lno, line), (k1, k2)) in lines.by_ref().zip(lat.points()) {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(bad(lno + 1, "expected `k1 k2 re im`"));
        }
        let want: (i64, i64) = (
            t[0].parse().map_err(|_| bad(lno + 1, format!("bad index '{}'", t[0])))?,
            t[1].parse().map_err(|_| bad(lno + 1, format!("bad index '{}'", t[1])))?,
        );
        if want != (k1, k2) {
            return Err(bad(
                lno + 1,
                format!("row ({} {}) out of enumeration order, expected ({k1} {k2})", want.0, want.1),
            ));
        }
        let re: f64 = t[2].parse().map_err(|_| bad(lno + 1, format!("bad number '{}'", t[2])))?;
        let im: f64 = t[3].parse().map_err(|_| bad(lno + 1, format!("bad number '{}'", t[3])))?;
        coef.push(Complex64::new(re, im));
    }
    if lines.next().is_some() || coef.len() != lat.len() {
        return Err(FieldIoError::RowCount { want: lat.len(), got: coef.len().max(lat.len() + 1) });
    }
    Ok(SpectralField::from_coef(lat, coef)?)
}

/// Atomic write: the file appears complete or not at all (temp + rename in
/// the target directory).
pub fn write_field(path: &Path, field: &SpectralField) -> Result<(), FieldIoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(field_to_string(field).as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<SpectralField, FieldIoError> {
    field_from_str(&fs::read_to_string(path)?)
}
