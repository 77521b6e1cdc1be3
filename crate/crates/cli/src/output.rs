use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cli::Format;
use crate::config::Settings;
use crate::error::CliError;

/// Provenance carried by every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl Meta {
    pub fn new(command: &'static str, settings: &Settings) -> Self {
        let canonical = serde_json::to_vec(settings).expect("settings serialize");
        let digest = Sha256::digest(&canonical);
        Meta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: settings.protocol.seed,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    fn header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# config-sha256: {}\n",
            self.tool, self.version, self.command, self.seed, self.config_sha256
        )
    }
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_string(), source }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(&p.display().to_string()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct Document<'a, R> {
    meta: &'a Meta,
    rows: &'a [R],
}

/// Writes a table as `#`-headed CSV or as a JSON document with a `meta` block.
pub fn write_table<R: Serialize>(
    meta: &Meta,
    rows: &[R],
    columns: &[&str],
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let name = out.map_or("stdout".to_string(), |p| p.display().to_string());
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            w.write_all(meta.header().as_bytes()).map_err(io_err(&name))?;
            let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
            csv.write_record(columns).map_err(|e| csv_err(&name, e))?;
            for r in rows {
                csv.serialize(r).map_err(|e| csv_err(&name, e))?;
            }
            csv.flush().map_err(io_err(&name))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &Document { meta, rows })
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            w.write_all(b"\n").map_err(io_err(&name))?;
        }
    }
    w.flush().map_err(io_err(&name))
}

fn csv_err(path: &str, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.to_string(), source },
        other => CliError::Invariant(format!("{other:?}")),
    }
}

#[derive(Serialize)]
struct Single<'a, T> {
    meta: &'a Meta,
    transcript: &'a T,
}

/// One JSON file per item, named `run-NNNNNN.json`, inside `dir`.
pub fn write_json_per_item<T: Serialize>(meta: &Meta, items: &[(u64, T)], dir: &Path) -> Result<(), CliError> {
    let dname = dir.display().to_string();
    fs::create_dir_all(dir).map_err(io_err(&dname))?;
    for (index, item) in items {
        let path = dir.join(format!("run-{index:06}.json"));
        let pname = path.display().to_string();
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&pname))?);
        serde_json::to_writer_pretty(&mut w, &Single { meta, transcript: item })
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        w.write_all(b"\n").map_err(io_err(&pname))?;
        w.flush().map_err(io_err(&pname))?;
    }
    Ok(())
}
