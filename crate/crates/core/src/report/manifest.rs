use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::io::{json_bytes, read_json, sha256_hex, write_atomic};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Stage-specific configuration snapshot.
    pub config: serde_json::Value,
    /// Input label (path or bundled name) to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory, to content hash.
    pub outputs: BTreeMap<String, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub version: u32,
    /// Crate name to version for every module that touched the outputs.
    pub modules: BTreeMap<String, String>,
    pub seed: u64,
    /// Full configuration of the most recent stage, enough to re-run any stage.
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Default for PipelineManifest {
    fn default() -> Self {
        let mut modules = BTreeMap::new();
        modules.insert(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string());
        PipelineManifest {
            version: MANIFEST_VERSION,
            modules,
            seed: 0,
            config: serde_json::Value::Null,
            stages: BTreeMap::new(),
        }
    }
}

impl PipelineManifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    /// Reads `out/manifest.json`, or starts an empty manifest.
    pub fn load_or_default(out: &Path) -> Result<Self> {
        let p = Self::path(out);
        if p.exists() {
            Self::load(&p)
        } else {
            Ok(Self::default())
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: PipelineManifest = read_json(path)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Structure(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        write_atomic(&Self::path(out), &json_bytes(self)?)?;
        Ok(())
    }

    /// Recorded hash of an output; later stages win.
    pub fn output_hash(&self, rel: &str) -> Option<&str> {
        self.stages
            .values()
            .filter_map(|s| s.outputs.get(rel))
            .last()
            .map(String::as_str)
    }

    /// Checks every recorded output exists under `out` with its recorded hash.
    pub fn verify(&self, out: &Path) -> Result<()> {
        for stage in self.stages.values() {
            for (rel, expected) in &stage.outputs {
                check_file(&out.join(rel), expected)?;
            }
        }
        Ok(())
    }

    /// Reads an output recorded by an earlier stage after checking its hash.
    pub fn read_verified(&self, out: &Path, rel: &str) -> Result<Vec<u8>> {
        let expected = self.output_hash(rel).ok_or_else(|| {
            Error::Argument(format!("{rel} is not recorded in {}; run the stage that produces it first", MANIFEST_FILE))
        })?;
        let path = out.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let actual = sha256_hex(&bytes);
        if actual != expected {
            return Err(Error::Integrity {
                path,
                expected: expected.to_string(),
                actual,
            });
        }
        Ok(bytes)
    }

    pub fn read_verified_json<T: serde::de::DeserializeOwned>(&self, out: &Path, rel: &str) -> Result<T> {
        let bytes = self.read_verified(out, rel)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Structure(format!("{rel}: {e}")))
    }
}

fn check_file(path: &Path, expected: &str) -> Result<()> {
    let actual = match std::fs::read(path) {
        Ok(b) => sha256_hex(&b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => "missing".to_string(),
        Err(e) => return Err(Error::io(path, e)),
    };
    if actual != expected {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            actual,
        });
    }
    Ok(())
}

/// Collects one stage's inputs and outputs while it runs.
pub struct StageRun {
    name: String,
    out: PathBuf,
    started: Instant,
    record: StageRecord,
}

impl StageRun {
    pub fn start(name: &str, out: &Path, config: serde_json::Value) -> Self {
        StageRun {
            name: name.to_string(),
            out: out.to_path_buf(),
            started: Instant::now(),
            record: StageRecord {
                config,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                seconds: 0.0,
            },
        }
    }

    pub fn input(&mut self, label: impl Into<String>, hash: impl Into<String>) {
        self.record.inputs.insert(label.into(), hash.into());
    }

    pub fn inputs(&self) -> &BTreeMap<String, String> {
        &self.record.inputs
    }

    /// Writes `out/rel` atomically and records its hash.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let hash = write_atomic(&self.out.join(rel), bytes)?;
        self.record.outputs.insert(rel.to_string(), hash);
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, &json_bytes(value)?)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.record.outputs.keys().map(String::as_str)
    }

    /// Stores the record under the stage name and saves the manifest.
    pub fn finish(mut self, seed: u64, config: serde_json::Value) -> Result<StageRecord> {
        self.record.seconds = self.started.elapsed().as_secs_f64();
        let mut m = PipelineManifest::load_or_default(&self.out)?;
        m.seed = seed;
        m.config = config;
        m.stages.insert(self.name, self.record.clone());
        m.save(&self.out)?;
        Ok(self.record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tamper_is_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = StageRun::start("demo", dir.path(), serde_json::json!({}));
        run.write("a/x.csv", b"1,2\n").unwrap();
        run.finish(3, serde_json::Value::Null).unwrap();
        let m = PipelineManifest::load_or_default(dir.path()).unwrap();
        m.verify(dir.path()).unwrap();
        assert_eq!(m.read_verified(dir.path(), "a/x.csv").unwrap(), b"1,2\n");

        std::fs::write(dir.path().join("a/x.csv"), b"1,3\n").unwrap();
        let e = m.verify(dir.path()).unwrap_err();
        assert_eq!(e.kind(), crate::ErrorKind::Integrity);
        std::fs::remove_file(dir.path().join("a/x.csv")).unwrap();
        assert!(matches!(m.verify(dir.path()), Err(Error::Integrity { actual, .. }) if actual == "missing"));
    }

    #[test]
    fn unrecorded_output_is_an_argument_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = PipelineManifest::default();
        assert!(matches!(m.read_verified(dir.path(), "wind/profile_winter.json"), Err(Error::Argument(_))));
    }
}
