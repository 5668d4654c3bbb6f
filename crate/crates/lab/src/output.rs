//! Output directory and CSV emission. Every CSV starts with a comment line
//! carrying the config hash so files can be traced back to their run.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::LabResult;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct OutputDir {
    pub path: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    /// `<root>/<name>-<first 12 hex digits of the hash>`, created on demand.
    pub fn create(root: &Path, name: &str, hash: &str) -> LabResult<Self> {
        let path = root.join(format!("{name}-{}", &hash[..12]));
        fs::create_dir_all(&path)?;
        Ok(Self {
            path,
            header: format!("# config_sha256={hash} format_version={FORMAT_VERSION}\n"),
            written: Vec::new(),
        })
    }

    /// Writes `name` with the header line followed by whatever `body` emits.
    pub fn csv<F>(&mut self, name: &str, body: F) -> LabResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> sdwave::Result<()>,
    {
        let mut bytes = self.header.clone().into_bytes();
        body(&mut bytes)?;
        self.raw(name, &bytes)
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> LabResult<PathBuf> {
        let file = self.path.join(name);
        fs::write(&file, bytes)?;
        self.written.push(file.clone());
        Ok(file)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }
}

/// One row of `verdicts.csv`. `pass` is `None` for informational rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub value: String,
    pub threshold: String,
    pub pass: Option<bool>,
}

impl Verdict {
    pub fn new(check: &str, value: impl ToString, threshold: impl ToString, pass: bool) -> Self {
        Self {
            check: check.into(),
            value: value.to_string(),
            threshold: threshold.to_string(),
            pass: Some(pass),
        }
    }

    pub fn info(check: &str, value: impl ToString) -> Self {
        Self {
            check: check.into(),
            value: value.to_string(),
            threshold: String::new(),
            pass: None,
        }
    }

    /// `value <= threshold`, both printed in exponent form.
    pub fn at_most(check: &str, value: f64, threshold: f64) -> Self {
        Self::new(check, sci(value), sci(threshold), value <= threshold)
    }
}

pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_verdicts(rows: &[Verdict], out: &mut Vec<u8>) -> sdwave::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| sdwave::Error::InvalidParameter(format!("csv: {e}"));
    w.write_record(["check", "value", "threshold", "pass"]).map_err(err)?;
    for v in rows {
        let pass = v.pass.map_or("na".to_string(), |p| p.to_string());
        w.write_record([v.check.as_str(), &v.value, &v.threshold, &pass])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| sdwave::Error::InvalidParameter(format!("csv: {e}")))
}
