//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

/// Shortest text that parses back to the same value; exponent form for very
/// small or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// A named CSV table with optional `# key,value` footer lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<(String, String)>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn footer(mut self, key: &str, value: String) -> Self {
        self.footer.push((key.to_string(), value));
        self
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.header.len()) {
            return Err(CliError::Output(format!(
                "{}: row {i} has {} fields, header has {}",
                self.file,
                r.len(),
                self.header.len()
            )));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let out = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.header).map_err(out)?;
        for r in &self.rows {
            w.write_record(r).map_err(out)?;
        }
        let mut bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        for (k, v) in &self.footer {
            bytes.extend_from_slice(format!("# {k},{v}\n").as_bytes());
        }
        Ok(bytes)
    }
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub tool: &'static str,
    pub library: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub compute_seconds: f64,
    pub total_seconds: f64,
}

/// Everything needed to audit or replay a run; the config is stored resolved
/// so that `mece <command> --config manifest.json` repeats it.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: Command,
    pub config: &'a RunConfig,
    pub versions: Versions,
    pub output_dir: PathBuf,
    pub outputs: Vec<OutputEntry>,
    pub warnings: &'a [String],
    pub override_diagnostics: bool,
    pub timings: Timings,
}

pub fn versions() -> Versions {
    Versions { tool: env!("CARGO_PKG_VERSION"), library: mece::VERSION }
}

/// Renders every table before touching the disk, then writes them.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<OutputEntry>, CliError> {
    let rendered = tables.iter().map(|t| Ok((t, t.to_bytes()?))).collect::<Result<Vec<_>, CliError>>()?;
    let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    rendered
        .into_iter()
        .map(|(t, bytes)| {
            fs::write(dir.join(&t.file), &bytes).map_err(io)?;
            Ok(OutputEntry { file: t.file.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-7, 2.5e-300, 6.02e23, -0.0, 0.0, 12345.678, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    proptest::proptest! {
        #[test]
        fn any_float_round_trips(bits in proptest::num::u64::ANY) {
            let v = f64::from_bits(bits);
            let back: f64 = fmt_f64(v).parse().unwrap();
            proptest::prop_assert!(back.to_bits() == v.to_bits() || (v.is_nan() && back.is_nan()));
        }
    }

    #[test]
    fn empty_table_is_just_the_header() {
        let t = Table::new("t.csv", &["a", "b"]);
        assert_eq!(t.to_bytes().unwrap(), b"a,b\n");
    }

    #[test]
    fn single_row_with_footer() {
        let mut t = Table::new("t.csv", &["kappa", "error"]);
        t.push_floats(&[0.5, 2.0]);
        let t = t.footer("fitted_slope", fmt_f64(1.0));
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "kappa,error\n0.5,2\n# fitted_slope,1\n");
    }

    #[test]
    fn ragged_rows_are_refused() {
        let mut t = Table::new("t.csv", &["a", "b"]);
        t.push(vec!["1".into()]);
        assert!(matches!(t.to_bytes(), Err(CliError::Output(_))));
    }
}
