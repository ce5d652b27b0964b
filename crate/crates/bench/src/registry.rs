//! Dataset registry: a directory of CSV files plus a JSON manifest mapping
//! dataset names to files and label columns. The two synthetic generators are
//! built in so benchmark runs work without any downloaded data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use dynsel_core::dataset::{load_csv, stable_hash64, LabelColumn};
use dynsel_core::synth;
use dynsel_core::Dataset;

const SYNTHETIC_SIZE: usize = 1000;

#[derive(Debug, Clone, Deserialize)]
struct ManifestEntry {
    file: String,
    #[serde(default)]
    label: Option<LabelColumn>,
}

/// Resolves dataset names to loaded datasets.
#[derive(Debug, Clone)]
pub struct Registry {
    dir: PathBuf,
    manifest: BTreeMap<String, ManifestEntry>,
}

impl Registry {
    /// Open a registry rooted at `dir`. A `manifest.json` file there, when
    /// present, maps names to `{ "file": ..., "label": column }`.
    pub fn open(dir: impl AsRef<Path>) -> anyhow::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let manifest_path = dir.join("manifest.json");
        let manifest = if manifest_path.exists() {
            let text = std::fs::read_to_string(&manifest_path)?;
            serde_json::from_str(&text)?
        } else {
            BTreeMap::new()
        };
        Ok(Self { dir, manifest })
    }

    /// Load a dataset by name: manifest entry first, then `<name>.csv` with
    /// the label in the last column, then the synthetic generators.
    pub fn resolve(&self, name: &str) -> anyhow::Result<Dataset> {
        if let Some(entry) = self.manifest.get(name) {
            let label = entry.label.clone().unwrap_or_default();
            let mut ds = load_csv(self.dir.join(&entry.file), &label)?;
            ds.name = name.to_string();
            return Ok(ds);
        }
        let fallback = self.dir.join(format!("{name}.csv"));
        if fallback.exists() {
            let mut ds = load_csv(&fallback, &LabelColumn::default())?;
            ds.name = name.to_string();
            return Ok(ds);
        }
        let seed = stable_hash64(&[b"synthetic", name.as_bytes()]);
        match name {
            "lithuanian" => Ok(synth::two_gaussians(SYNTHETIC_SIZE, seed)),
            "banana" => Ok(synth::banana(SYNTHETIC_SIZE, seed)),
            _ => anyhow::bail!(
                "dataset {name:?} not found in {} (no manifest entry, no {name}.csv, not synthetic)",
                self.dir.display()
            ),
        }
    }

    pub fn names_available(&self) -> Vec<String> {
        let mut names: Vec<String> = self.manifest.keys().cloned().collect();
        for builtin in ["lithuanian", "banana"] {
            if !names.iter().any(|n| n == builtin) {
                names.push(builtin.to_string());
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn synthetic_fallback_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("tiny.csv");
        let mut f = std::fs::File::create(&csv_path).unwrap();
        writeln!(f, "x,y,cls\n1,2,a\n3,4,b\n5,6,a\n7,8,b").unwrap();
        let manifest = r#"{ "tiny": { "file": "tiny.csv", "label": "cls" } }"#;
        std::fs::write(dir.path().join("manifest.json"), manifest).unwrap();

        let reg = Registry::open(dir.path()).unwrap();
        let tiny = reg.resolve("tiny").unwrap();
        assert_eq!(tiny.n_samples(), 4);
        assert_eq!(tiny.name, "tiny");

        let banana = reg.resolve("banana").unwrap();
        assert_eq!(banana.n_samples(), 1000);
        // deterministic regardless of registry location
        assert_eq!(
            banana.fingerprint(),
            reg.resolve("banana").unwrap().fingerprint()
        );

        assert!(reg.resolve("missing").is_err());
    }

    #[test]
    fn plain_csv_fallback_uses_last_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("plain.csv")).unwrap();
        writeln!(f, "1,2,0\n3,4,1\n5,6,0\n7,8,1").unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let ds = reg.resolve("plain").unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.n_classes(), 2);
    }
}
