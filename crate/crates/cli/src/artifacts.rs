//! Artifact plumbing.  Every output embeds the effective run configuration
//! and a SHA-256 digest of its payload: JSON artifacts carry both inline,
//! while CSV and binary artifacts get a sibling `<name>.manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use helm_scatter::io::content_digest;

use crate::config::RunConfig;
use crate::Failure;

pub struct ArtifactSet {
    dir: PathBuf,
    config: serde_json::Value,
}

impl ArtifactSet {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        let config = serde_json::to_value(config).map_err(Failure::internal)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
        })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    /// Writes `{"config": …, "digest": …, "payload": …}` and returns the
    /// payload digest.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> Result<String, Failure> {
        let payload = serde_json::to_value(payload).map_err(Failure::internal)?;
        let digest = content_digest(payload.to_string().as_bytes());
        let doc = json!({
            "config": self.config,
            "digest": digest,
            "payload": payload,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(Failure::internal)?;
        text.push('\n');
        let path = self.write(name, text.as_bytes())?;
        println!("wrote {} (digest {})", path.display(), &digest[..16]);
        Ok(digest)
    }

    /// Writes a raw artifact plus its `<name>.manifest.json` and returns
    /// the content digest.
    pub fn write_raw(&self, name: &str, bytes: &[u8]) -> Result<String, Failure> {
        let digest = content_digest(bytes);
        let path = self.write(name, bytes)?;
        let manifest = json!({
            "config": self.config,
            "artifact": name,
            "digest": digest,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(Failure::internal)?;
        text.push('\n');
        self.write(&format!("{name}.manifest.json"), text.as_bytes())?;
        println!("wrote {} (digest {})", path.display(), &digest[..16]);
        Ok(digest)
    }
}
