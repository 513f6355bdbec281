use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: &str = "qtclust/1";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| qtclust::QtcError::Io(format!("{}: {e}", dir.display())).into())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| qtclust::QtcError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Serializes `value` as an object and stamps the schema tag first.
pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    let body = serde_json::to_value(value).context("serializing report")?;
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), json!(SCHEMA));
    match body {
        Value::Object(map) => obj.extend(map),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let path = dir.join(name);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(obj)).context("writing JSON")?;
    use std::io::Write;
    writeln!(w).map_err(qtclust::QtcError::from)?;
    Ok(path)
}

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).context("writing CSV row")?;
    }
    w.flush().map_err(qtclust::QtcError::from)?;
    Ok(())
}
