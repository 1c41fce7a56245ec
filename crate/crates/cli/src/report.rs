//! Report emission: an RFC-4180 CSV table plus a JSON sidecar carrying the
//! run metadata, or a single JSON document when `--format json` is chosen.
//! All writes go through a temp file in the target directory followed by a
//! rename, so an interrupted run never leaves a partial report behind.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format {other:?}, expected csv or json"),
        }
    }
}

pub struct Report {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    meta: Map<String, Value>,
}

/// One CSV cell; floats go through `Display`, which always uses `.` and
/// prints shortest-roundtrip digits, so reports are locale-free and stable.
pub fn cell(x: impl Display) -> String {
    x.to_string()
}

impl Report {
    pub fn new(name: &str, columns: &[&str]) -> Report {
        Report {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Map::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch in {}", self.name);
        self.rows.push(cells);
    }

    pub fn meta(&mut self, key: &str, value: impl serde::Serialize) {
        let v = serde_json::to_value(value).expect("metadata values always serialize");
        self.meta.insert(key.to_string(), v);
    }

    fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }

    fn json_value(&self) -> Value {
        json!({
            "metadata": Value::Object(self.meta.clone()),
            "columns": self.columns,
            "rows": self.rows,
        })
    }

    /// Writes the report into `dir` and returns the paths produced.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let mut written = Vec::new();
        match format {
            Format::Csv => {
                let data = dir.join(format!("{}.csv", self.name));
                atomic_write(&data, &self.csv_bytes()?)?;
                written.push(data);
                let side = dir.join(format!("{}.meta.json", self.name));
                let body = serde_json::to_vec_pretty(&Value::Object(self.meta.clone()))?;
                atomic_write(&side, &body)?;
                written.push(side);
            }
            Format::Json => {
                let data = dir.join(format!("{}.json", self.name));
                atomic_write(&data, &serde_json::to_vec_pretty(&self.json_value())?)?;
                written.push(data);
            }
        }
        Ok(written)
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    std::fs::write(tmp.path(), bytes)?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_when_needed() {
        let mut r = Report::new("t", &["a", "b"]);
        r.row(vec!["1.5".into(), "plain".into()]);
        r.row(vec!["x,y".into(), "q\"q".into()]);
        let text = String::from_utf8(r.csv_bytes().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.5,plain\n\"x,y\",\"q\"\"q\"\n");
    }

    #[test]
    fn writes_both_formats_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("demo", &["n", "value"]);
        r.meta("seed", 7u64);
        r.row(vec![cell(8), cell(0.25)]);

        let paths = r.write(dir.path(), Format::Csv).unwrap();
        assert_eq!(paths.len(), 2);
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv, "n,value\n8,0.25\n");
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(meta["seed"], json!(7));

        let paths = r.write(dir.path(), Format::Json).unwrap();
        assert_eq!(paths.len(), 1);
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(doc["columns"], json!(["n", "value"]));
        assert_eq!(doc["rows"][0], json!(["8", "0.25"]));
        assert_eq!(doc["metadata"]["seed"], json!(7));

        // leftover temp files would break the no-partial-report contract
        let stray: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|f| !f.starts_with("demo"))
            .collect();
        assert!(stray.is_empty(), "{stray:?}");
    }
}
