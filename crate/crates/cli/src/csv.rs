//! Minimal CSV emission with shortest round-trip floats.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Shortest decimal that parses back to the same `f64`; `NaN` and `inf`
/// spelled as Rust prints them.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    num(x.unwrap_or(f64::NAN))
}

pub struct CsvWriter {
    out: Box<dyn Write>,
    columns: usize,
    path: PathBuf,
}

impl CsvWriter {
    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn create(path: Option<&Path>, header: &[&str]) -> CliResult<Self> {
        let (out, path): (Box<dyn Write>, PathBuf) = match path {
            Some(p) => {
                let f = File::create(p).map_err(|source| CliError::Output {
                    path: p.to_path_buf(),
                    source,
                })?;
                (Box::new(BufWriter::new(f)), p.to_path_buf())
            }
            None => (Box::new(BufWriter::new(io::stdout())), PathBuf::from("<stdout>")),
        };
        let mut w = Self {
            out,
            columns: header.len(),
            path,
        };
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        w.row(&header)?;
        Ok(w)
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        assert_eq!(fields.len(), self.columns, "CSV row width");
        writeln!(self.out, "{}", fields.join(",")).map_err(|e| self.err(e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| self.err(e))
    }

    fn err(&self, source: io::Error) -> CliError {
        CliError::Output {
            path: self.path.clone(),
            source,
        }
    }
}
