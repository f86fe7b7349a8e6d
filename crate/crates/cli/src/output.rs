//! Writing artifacts. Every file carries the tool version and the SHA-256
//! of the canonical config JSON.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::run::Artifacts;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hash of the config as re-serialized after parsing (defaults filled in,
/// seed override applied), so equivalent inputs hash alike.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn provenance(hash: &str) -> String {
    format!("folner {TOOL_VERSION} config_sha256={hash}")
}

pub fn render_csv(columns: &[&str], rows: &[Vec<String>], hash: &str) -> String {
    let mut s = format!("# {}\n{}\n", provenance(hash), columns.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, cfg: &ExperimentConfig, art: &Artifacts) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let hash = config_hash(cfg);
    let mut written = Vec::new();
    let mut put = |file: String, body: String| -> io::Result<()> {
        let p = dir.join(file);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    for t in &art.tables {
        put(format!("{}{}.csv", cfg.name, t.suffix), render_csv(t.columns, &t.rows, &hash))?;
    }
    let summary = json!({
        "tool_version": TOOL_VERSION,
        "config_sha256": hash,
        "name": cfg.name,
        "verb": cfg.task.verb(),
        "seed": cfg.seed,
        "result": art.summary,
    });
    put(
        format!("{}.json", cfg.name),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    if let Some(svg) = &art.svg {
        put(format!("{}.svg", cfg.name), format!("<!-- {} -->\n{svg}", provenance(&hash)))?;
    }
    Ok(written)
}
