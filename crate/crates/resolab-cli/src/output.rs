//! CSV tables and JSON summaries stamped with the version and config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Sink {
    pub dir: PathBuf,
    pub config_hash: String,
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Sink {
    pub fn new(dir: &Path, config_hash: String) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), config_hash })
    }

    fn header(&self) -> String {
        format!("# resolab {VERSION}\n# config sha256 {}\n", self.config_hash)
    }

    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> std::io::Result<PathBuf> {
        let mut w = csv::Writer::from_writer(self.header().into_bytes());
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r.iter().map(|&x| num(x)))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Writes `fields` with the version and hash prepended.
    pub fn json(&self, name: &str, subcommand: &str, fields: Map<String, Value>) -> std::io::Result<PathBuf> {
        let mut doc = Map::new();
        doc.insert("resolab_version".into(), json!(VERSION));
        doc.insert("config_sha256".into(), json!(self.config_hash));
        doc.insert("subcommand".into(), json!(subcommand));
        doc.extend(fields);
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&Value::Object(doc))? + "\n")?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

/// One pass/fail entry of a summary.
pub fn check(criterion: u32, name: &str, value: f64, threshold: f64, pass: bool) -> Value {
    json!({ "criterion": criterion, "name": name, "value": value, "threshold": threshold, "pass": pass })
}
