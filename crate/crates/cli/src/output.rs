use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Common, Format};

/// Rows plus the metadata block that goes with them.
pub struct Report<R> {
    pub command: &'static str,
    pub config: Value,
    pub diagnostics: Value,
    pub rows: Vec<R>,
}

impl<R: Serialize> Report<R> {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            diagnostics: json!({}),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(m) = &mut self.diagnostics {
            m.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        }
    }

    fn meta(&self, common: &Common) -> Value {
        json!({
            "tool": "excursions",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "output": {
                "format": common.format,
                "threads": common.threads,
            },
            "diagnostics": self.diagnostics,
        })
    }

    pub fn emit(&self, common: &Common) -> Result<()> {
        let meta = self.meta(common);
        match common.format {
            Format::Json => {
                let doc = json!({ "meta": meta, "rows": self.rows });
                let mut text = serde_json::to_string_pretty(&doc)?;
                text.push('\n');
                write_target(common.output.as_deref(), text.as_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &self.rows {
                    w.serialize(r)?;
                }
                let bytes = w.into_inner().context("flushing CSV")?;
                write_target(common.output.as_deref(), &bytes)?;
                let mut text = serde_json::to_string_pretty(&meta)?;
                text.push('\n');
                match &common.output {
                    Some(p) => {
                        let mut side = p.as_os_str().to_owned();
                        side.push(".meta.json");
                        std::fs::write(&side, text).with_context(|| format!("writing {side:?}"))
                    }
                    None => {
                        io::stderr().write_all(text.as_bytes())?;
                        Ok(())
                    }
                }
            }
        }
    }
}

fn write_target(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            f.write_all(bytes)?;
            Ok(())
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
