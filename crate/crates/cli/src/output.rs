//! Writing tables, sidecars and reports to files or the standard streams.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use gainswitch::io::write_table;
use serde_json::{json, Map, Value};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: Option<&str>) -> anyhow::Result<Self> {
        match s.unwrap_or("csv") {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => {
                Err(UsageError(format!("unknown format `{other}` (expected csv or json)")).into())
            }
        }
    }
}

/// Where the primary output and its sidecar go.
#[derive(Debug, Clone)]
pub struct Sink {
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// `x/run.csv` -> `x/run.<ext>`.
pub fn companion(path: &Path, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    let mut name = stem;
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Finite numbers as JSON numbers, anything else as null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

impl Sink {
    pub fn new(out: Option<PathBuf>, format: Format) -> anyhow::Result<Self> {
        if let (Some(p), Format::Csv) = (&out, format) {
            if companion(p, "json") == *p {
                return Err(UsageError(format!(
                    "--out {} would be overwritten by its JSON sidecar; use another extension or --format json",
                    p.display()
                ))
                .into());
            }
        }
        Ok(Self { out, format })
    }

    fn primary(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(create(p)?),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// Writes a uniform-time table plus a summary. CSV puts the summary in
    /// `<stem>.json` (stderr without `--out`); JSON embeds it.
    pub fn table(
        &self,
        headers: &[&str],
        dt: f64,
        columns: &[&[f64]],
        summary: Value,
    ) -> anyhow::Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = self.primary()?;
                write_table(&mut w, headers, 0.0, dt, columns)?;
                w.flush()?;
                self.sidecar(&summary)
            }
            Format::Json => {
                let n = columns.iter().map(|c| c.len()).min().unwrap_or(0);
                let t: Vec<f64> = (0..n).map(|k| dt * k as f64).collect();
                let mut data = Map::new();
                data.insert(headers[0].into(), json!(t));
                for (h, c) in headers[1..].iter().zip(columns) {
                    data.insert(
                        (*h).into(),
                        Value::Array(c[..n].iter().map(|v| num(*v)).collect()),
                    );
                }
                self.json(&json!({ "headers": headers, "data": data, "summary": summary }))
            }
        }
    }

    pub fn sidecar(&self, summary: &Value) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(summary)?;
        match &self.out {
            Some(p) => {
                let path = companion(p, "json");
                let mut w = create(&path)?;
                writeln!(w, "{text}")?;
                w.flush()?;
            }
            None => eprintln!("{text}"),
        }
        Ok(())
    }

    pub fn json(&self, doc: &Value) -> anyhow::Result<()> {
        let mut w = self.primary()?;
        serde_json::to_writer_pretty(&mut w, doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Raw text as the primary output.
    pub fn text(&self, s: &str) -> anyhow::Result<()> {
        let mut w = self.primary()?;
        w.write_all(s.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Extra text artifact: `<stem>.<ext>` beside `--out`, else stderr.
    pub fn companion_text(&self, ext: &str, s: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => {
                let path = companion(p, ext);
                std::fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
            }
            None => eprint!("{s}"),
        }
        Ok(())
    }
}
