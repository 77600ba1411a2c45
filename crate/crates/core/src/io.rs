//! CSV serialization of lattice fields and atomic file output.
//!
//! A field is stored as `index,re,im` rows with a JSON sidecar holding
//! `{p, N, K}`. Values are written with 17 significant digits so a
//! write/read cycle reproduces every bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{LatticeField, LatticeGeometry};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Full-precision float formatting used by every CSV in the crate.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn field_to_csv(f: &LatticeField) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "re", "im"])?;
    for (i, v) in f.values().iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(v.re), fmt_f64(v.im)])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn field_from_csv(geometry: LatticeGeometry, bytes: &[u8]) -> Result<LatticeField> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["index", "re", "im"] {
        return Err(Error::Invalid(format!("expected header index,re,im, got {header:?}")));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); geometry.len()];
    let mut seen = vec![false; geometry.len()];
    for rec in r.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<&str> { rec.get(k).ok_or_else(|| Error::Invalid(format!("short row {rec:?}"))) };
        let i: usize = parse(0)?.parse().map_err(|_| Error::Invalid(format!("bad index in {rec:?}")))?;
        let re: f64 = parse(1)?.parse().map_err(|_| Error::Invalid(format!("bad value in {rec:?}")))?;
        let im: f64 = parse(2)?.parse().map_err(|_| Error::Invalid(format!("bad value in {rec:?}")))?;
        if i >= values.len() || seen[i] {
            return Err(Error::Invalid(format!("index {i} out of range or repeated")));
        }
        seen[i] = true;
        values[i] = Complex64::new(re, im);
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Invalid("field CSV does not cover every grid point".into()));
    }
    LatticeField::new(geometry, values)
}

/// Writes `path` and its JSON sidecar.
pub fn write_field(path: &Path, f: &LatticeField) -> Result<()> {
    atomic_write(path, &field_to_csv(f)?)?;
    atomic_write(&sidecar_path(path), serde_json::to_string_pretty(f.geometry())?.as_bytes())
}

pub fn read_field(path: &Path) -> Result<LatticeField> {
    let geometry: LatticeGeometry = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    field_from_csv(geometry.validated()?, &fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = LatticeGeometry::new(2, 1, 2).unwrap();
        let f = LatticeField::from_fn(g, |i| Complex64::new((i as f64 + 0.1).sqrt() / 3.0, -1e-300 * i as f64));
        let back = field_from_csv(g, &field_to_csv(&f).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("padic-io-{}", std::process::id()));
        let path = dir.join("f.csv");
        let g = LatticeGeometry::new(3, 1, 1).unwrap();
        let f = LatticeField::from_fn(g, |i| Complex64::new(1.0 / (i as f64 + 1.0), 0.0));
        write_field(&path, &f).unwrap();
        assert_eq!(read_field(&path).unwrap(), f);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn rejects_incomplete_csv() {
        let g = LatticeGeometry::new(2, 1, 1).unwrap();
        assert!(field_from_csv(g, b"index,re,im\n0,1,0\n").is_err());
    }
}
