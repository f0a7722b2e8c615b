//! Run manifests attached to every output.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub family_sha256: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    /// Unix seconds; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl Manifest {
    pub fn new(command: &str, inputs: &[&[u8]], seed: Option<u64>, parameters: impl Serialize) -> Self {
        let mut h = Sha256::new();
        for i in inputs {
            h.update(i);
        }
        Manifest {
            command: command.to_string(),
            family_sha256: hex::encode(h.finalize()),
            seed,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
        }
    }
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// `<out>.manifest.json` next to a non-JSON output.
pub fn sidecar(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    s.into()
}

/// `{"manifest": .., "report": ..}`, pretty printed with a trailing newline.
pub fn wrap(manifest: &Manifest, report: impl Serialize) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "manifest": manifest, "report": report }))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_and_sidecar() {
        let m = Manifest::new("x", &[b"ab", b"c"], Some(3), serde_json::json!({"k": 1}));
        assert_eq!(m.family_sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(sidecar(Path::new("a/b.svg")), Path::new("a/b.svg.manifest.json"));
    }
}
