use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use spincav_core::config::{RunConfig, TOOL_VERSION};
use spincav_core::{Error, Result};

/// Where results go: stdout, plus files under `dir` when one is given.
pub struct Output {
    pub dir: Option<PathBuf>,
    pub provenance: Vec<String>,
    sha256: String,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, cfg: &RunConfig) -> Self {
        Self { dir, provenance: cfg.provenance(), sha256: cfg.sha256() }
    }

    pub fn with_dir(&self, dir: PathBuf) -> Self {
        Self { dir: Some(dir), provenance: self.provenance.clone(), sha256: self.sha256.clone() }
    }

    pub fn header(&self) -> String {
        self.provenance.iter().map(|l| format!("# {l}\n")).collect()
    }

    fn write_file(path: &Path, text: &str) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::from(e).with_context(parent.display().to_string()))?;
        }
        fs::write(path, text).map_err(|e| Error::from(e).with_context(path.display().to_string()))
    }

    /// CSV body (without provenance) to `<dir>/<name>.csv`, or stdout.
    pub fn csv(&self, name: &str, body: &str) -> Result<()> {
        let text = format!("{}{body}", self.header());
        match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{name}.csv"));
                Self::write_file(&path, &text)?;
                println!("{}", path.display());
                Ok(())
            }
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    /// JSON object with provenance keys, printed and optionally saved.
    pub fn json(&self, name: &str, value: Value) -> Result<()> {
        let mut map = Map::new();
        map.insert("config_sha256".into(), Value::from(self.sha256.clone()));
        map.insert("tool_version".into(), Value::from(TOOL_VERSION));
        match value {
            Value::Object(inner) => map.extend(inner),
            other => {
                map.insert("result".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(map)).expect("JSON value serializes") + "\n";
        if let Some(dir) = &self.dir {
            Self::write_file(&dir.join(format!("{name}.json")), &text)?;
        }
        std::io::stdout().write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn file(&self, path: &Path, text: &str) -> Result<()> {
        Self::write_file(path, text)
    }
}
