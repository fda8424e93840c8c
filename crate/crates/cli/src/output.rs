use std::fs;
use std::io::Write;
use std::path::Path;

use mlti_core::Error;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    /// A strict-mode property check failed.
    #[error("{0}")]
    Strict(String),
}

impl Failure {
    /// 1 for bad input, 2 for a failed strict check, 3 for a numerical
    /// failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Strict(_) => 2,
            Failure::Core(e) => match e {
                Error::Domain(_)
                | Error::Precondition(_)
                | Error::Parse { .. }
                | Error::Decode { .. }
                | Error::Io(_) => 1,
                Error::Singular { .. }
                | Error::NonConvergence { .. }
                | Error::Breakdown { .. }
                | Error::Pole { .. }
                | Error::Capability(_) => 3,
            },
        }
    }
}

fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display())).into()),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::Io(format!("stdout: {e}")).into()),
    }
}

/// Pretty JSON to `out`, or stdout.
pub fn write_json(out: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_bytes(out, s.as_bytes())
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row. Fields never contain commas or quotes.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, out: Option<&Path>) -> Result<(), Failure> {
        write_bytes(out, self.text.as_bytes())
    }
}

/// NaN witnesses serialize as absent.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn ranks_field(ranks: &[Vec<usize>]) -> String {
    ranks
        .iter()
        .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("|")
}
