use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_embeddings, EmbeddingMeta, EmbeddingSet};
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub extractor: String,
    pub dataset: String,
    pub model_tag: String,
    pub n: usize,
    pub d: usize,
}

impl ManifestEntry {
    pub fn meta(&self) -> EmbeddingMeta {
        EmbeddingMeta::new(&self.extractor, &self.dataset, &self.model_tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub format_version: u32,
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl EmbeddingManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = EmbeddingManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            entries,
            base_dir: base_dir.into(),
        };
        m.validate("<manifest>")?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut m: EmbeddingManifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::format(path, format!("invalid manifest: {e}")))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.validate(&path.display().to_string())?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    fn validate(&self, source_name: &str) -> Result<()> {
        if self.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "{source_name}: unsupported manifest format_version {}",
                self.format_version
            )));
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert((&e.extractor, &e.dataset, &e.model_tag)) {
                return Err(Error::Row {
                    source_name: source_name.to_string(),
                    line: i + 1,
                    reason: format!(
                        "duplicate entry for extractor={} dataset={} model_tag={}",
                        e.extractor, e.dataset, e.model_tag
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    /// Loads one entry, checking the listed shape and taking metadata from the
    /// manifest rather than the sidecar.
    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<EmbeddingSet> {
        let set = load_embeddings(&self.resolve(entry), Some((entry.n, entry.d)))?;
        Ok(set.with_meta(entry.meta()))
    }
}
