use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = "genimg-eval";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run parameters embedded in every emitted document so reruns can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub alpha: BTreeMap<String, f64>,
    pub t_test_variant: Option<String>,
    pub pairing: Option<String>,
}

impl RunInfo {
    pub fn new(command: impl Into<String>) -> Self {
        RunInfo {
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.into(),
            seed: None,
            alpha: BTreeMap::new(),
            t_test_variant: None,
            pairing: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn alpha(mut self, name: &str, value: f64) -> Self {
        self.alpha.insert(name.to_string(), value);
        self
    }

    pub fn t_test_variant(mut self, variant: impl ToString) -> Self {
        self.t_test_variant = Some(variant.to_string());
        self
    }

    pub fn pairing(mut self, pairing: impl ToString) -> Self {
        self.pairing = Some(pairing.to_string());
        self
    }

    /// Markdown preamble listing the parameters.
    pub fn markdown(&self) -> String {
        let alpha = if self.alpha.is_empty() {
            "n/a".to_string()
        } else {
            self.alpha
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "n/a".into());
        format!(
            "<!-- {} {} | command: {} | seed: {} | alpha: {} | t-test: {} | pairing: {} -->\n",
            self.tool,
            self.tool_version,
            self.command,
            self.seed.map_or_else(|| "n/a".into(), |s| s.to_string()),
            alpha,
            opt(&self.t_test_variant),
            opt(&self.pairing),
        )
    }
}
