//! Deterministic report emission: JSON with fixed 17-significant-digit
//! floats, CSV tables with documented headers, and a provenance block on
//! every artifact so a report can always be traced back to its inputs.

use std::io::{self, Write};
use std::path::PathBuf;

use otelbaev_core::fmt_g17;
use serde::Serialize;

/// Error carrying the process exit code: 1 invalid spec or arguments,
/// 2 numeric failure, 3 requested-finite quantity is divergent.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<otelbaev_core::Error> for CliError {
    fn from(e: otelbaev_core::Error) -> Self {
        let code = match e {
            otelbaev_core::Error::InvalidSpec(_) | otelbaev_core::Error::InvalidArgument(_) => 1,
            otelbaev_core::Error::Numeric(_) => 2,
            otelbaev_core::Error::Divergent(_) => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_sha256: Option<String>,
    pub tol: f64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    report: &'a T,
}

/// serde_json formatter that renders every float through [`fmt_g17`], so
/// repeated runs emit byte-identical JSON.
struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(fmt_g17(value as f64).as_bytes())
    }
}

/// One CSV table: a fixed header line and pre-rendered rows.
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<Vec<String>>,
}

pub fn cell(x: f64) -> String {
    fmt_g17(x)
}

fn write_bytes(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::new(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::new(2, format!("cannot write to stdout: {e}")))
        }
    }
}

/// Emit one report.  JSON wraps the report in a provenance envelope; CSV is
/// only defined for commands that produce a table and prefixes it with
/// provenance comment lines.
pub fn emit<T: Serialize>(
    format: Format,
    out: &Option<PathBuf>,
    prov: &Provenance,
    report: &T,
    table: Option<Table>,
) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let mut buf = Vec::new();
            let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter);
            Envelope {
                provenance: prov,
                report,
            }
            .serialize(&mut ser)
            .map_err(|e| CliError::new(2, format!("serialization failed: {e}")))?;
            buf.push(b'\n');
            write_bytes(out, &buf)
        }
        Format::Csv => {
            let Some(table) = table else {
                return Err(CliError::new(
                    1,
                    "csv output is not defined for this command; use --format json",
                ));
            };
            let mut s = String::new();
            s.push_str(&format!(
                "# {} {} {}\n",
                prov.tool, prov.version, prov.command
            ));
            if let Some(hash) = &prov.spec_sha256 {
                s.push_str(&format!("# spec_sha256={hash}\n"));
            }
            s.push_str(&format!("# tol={}\n", fmt_g17(prov.tol)));
            s.push_str(table.header);
            s.push('\n');
            for row in &table.rows {
                s.push_str(&row.join(","));
                s.push('\n');
            }
            write_bytes(out, s.as_bytes())
        }
    }
}
