use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_IMAGES_PER_CLASS: usize = 10;

fn default_images_per_class() -> usize {
    DEFAULT_IMAGES_PER_CLASS
}

/// One study: a pair of image directories sampled for every session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study_id: String,
    pub real_dir: PathBuf,
    pub generated_dir: PathBuf,
    #[serde(default = "default_images_per_class")]
    pub images_per_class: usize,
}

/// Service configuration file. Relative paths resolve against the file's directory.
///
/// ```json
/// {
///   "data_dir": "data",
///   "ui_dir": "ui/dist",
///   "studies": [
///     {"study_id": "sliver07/diffaug", "real_dir": "img/real", "generated_dir": "img/gen"}
///   ]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
    pub studies: Vec<StudyConfig>,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ServiceConfig =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.validate().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(config)
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        if let Some(ui) = self.ui_dir.as_mut() {
            fix(ui);
        }
        for s in &mut self.studies {
            fix(&mut s.real_dir);
            fix(&mut s.generated_dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.studies {
            if s.study_id.is_empty() {
                return Err(Error::InvalidInput("study_id must be non-empty".into()));
            }
            if !seen.insert(&s.study_id) {
                return Err(Error::InvalidInput(format!("duplicate study_id {:?}", s.study_id)));
            }
            if s.images_per_class == 0 {
                return Err(Error::InvalidInput(format!(
                    "study {}: images_per_class must be at least 1",
                    s.study_id
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }

    pub(crate) fn studies_dir(&self) -> PathBuf {
        self.data_dir.join("studies")
    }
}
