//! Versioned, hash-stamped, atomically written output files.
//!
//! CSV files start with comment lines carrying the toolkit version, the
//! sha256 of the resolved config, and any command metadata; sections are
//! introduced by a `# section: <name>` comment followed by a header row.
//! JSON files carry the same metadata as top-level fields.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// sha256 hex of the resolved config's canonical JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let canonical = serde_json::to_string(config).context("config hash serialization")?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Default output path: --out if given, else <dir from env var>/<stem>.<ext>.
pub fn resolve_out(out: Option<PathBuf>, stem: &str, format: Format) -> PathBuf {
    out.unwrap_or_else(|| {
        let dir = std::env::var("ORGSCALE_OUT_DIR").unwrap_or_else(|_| ".".into());
        PathBuf::from(dir).join(format!("{stem}.{}", format.extension()))
    })
}

/// Atomic write: temp file in the destination directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .context("cannot create temp file")?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// One named table of serializable rows.
pub struct Section<'a> {
    pub name: &'a str,
    pub rows: Vec<serde_json::Value>,
}

pub fn section<'a, T: Serialize>(name: &'a str, rows: &[T]) -> Result<Section<'a>> {
    let rows = rows
        .iter()
        .map(|r| serde_json::to_value(r).context("row serialization"))
        .collect::<Result<Vec<_>>>()?;
    Ok(Section { name, rows })
}

fn csv_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders metadata plus sections in the chosen format.
pub fn render(
    hash: &str,
    meta: &[(String, String)],
    sections: &[Section<'_>],
    format: Format,
) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# orgscale {VERSION}\n"));
            out.push_str(&format!("# config sha256: {hash}\n"));
            for (k, v) in meta {
                out.push_str(&format!("# {k}: {v}\n"));
            }
            for sec in sections {
                if sections.len() > 1 {
                    out.push_str(&format!("# section: {}\n", sec.name));
                }
                let headers: Vec<String> = match sec.rows.first() {
                    Some(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
                    _ => Vec::new(),
                };
                out.push_str(&headers.join(","));
                out.push('\n');
                for row in &sec.rows {
                    let obj = row.as_object().context("row must be a flat record")?;
                    let cells: Vec<String> =
                        headers.iter().map(|h| csv_scalar(&obj[h])).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Ok(out.into_bytes())
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("version".into(), VERSION.into());
            doc.insert("config_sha256".into(), hash.into());
            for (k, v) in meta {
                doc.insert(k.clone(), v.clone().into());
            }
            for sec in sections {
                doc.insert(sec.name.to_string(), sec.rows.clone().into());
            }
            let mut bytes = serde_json::to_vec_pretty(&doc)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}
