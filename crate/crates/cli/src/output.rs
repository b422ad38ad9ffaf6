use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

/// Where command data and the summary line go.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub command: String,
    pub seed: u64,
}

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_json<T: serde::Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(text.as_bytes())
    }

    pub fn wants_json(&self) -> bool {
        self.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"))
    }

    /// Writes the sidecar (when there is an output file) and the summary.
    pub fn finish(&self, fields: Value) -> Result<()> {
        let mut summary = Map::new();
        summary.insert("command".into(), json!(self.command));
        summary.insert("ok".into(), json!(true));
        summary.insert("seed".into(), json!(self.seed));
        if let Value::Object(extra) = fields {
            summary.extend(extra);
        }
        match &self.out {
            Some(path) => {
                summary.insert("out".into(), json!(path.display().to_string()));
                let meta = json!({
                    "command": self.command,
                    "seed": self.seed,
                    "version": env!("CARGO_PKG_VERSION"),
                });
                let side = sidecar(path, "meta.json");
                fs::write(&side, serde_json::to_string_pretty(&meta)? + "\n")
                    .with_context(|| format!("writing {}", side.display()))?;
                println!("{}", Value::Object(summary));
            }
            None => eprintln!("{}", Value::Object(summary)),
        }
        Ok(())
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}
