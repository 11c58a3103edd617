//! Run configuration file (TOML). Every section is optional; missing keys
//! take the defaults, unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::ProviderConfig;
use crate::error::Result;
use crate::extraction::ExtractionConfig;
use crate::index::DEFAULT_TAU_SYN;
use crate::pipeline::PipelineConfig;

pub const DEFAULT_LLM_MODEL: &str = "meta-llama/Llama-3.3-70B-Instruct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSettings {
    pub tau_syn: f64,
}

impl Default for IndexSettings {
    fn default() -> Self {
        Self {
            tau_syn: DEFAULT_TAU_SYN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmSettings {
    pub model: String,
    /// Falls back to `PROPRAG_LLM_URL` when unset.
    pub endpoint: Option<String>,
    pub timeout_secs: u64,
    /// JSONL completion cache.
    pub cache_path: Option<String>,
    pub max_response_bytes: usize,
    pub retries: u32,
    pub parallelism: usize,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let x = ExtractionConfig::default();
        Self {
            model: DEFAULT_LLM_MODEL.to_string(),
            endpoint: None,
            timeout_secs: 120,
            cache_path: None,
            max_response_bytes: x.max_response_bytes,
            retries: x.retries,
            parallelism: x.parallelism,
        }
    }
}

impl LlmSettings {
    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            max_response_bytes: self.max_response_bytes,
            retries: self.retries,
            parallelism: self.parallelism,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub pipeline: PipelineConfig,
    pub provider: ProviderConfig,
    pub index: IndexSettings,
    pub llm: LlmSettings,
}

impl RunConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.provider.validate()?;
        if !(self.index.tau_syn > 0.0 && self.index.tau_syn <= 1.0) {
            return Err(crate::Error::InvalidConfig("tau_syn must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::SeedMode;

    #[test]
    fn defaults_match_published_parameters() {
        let c = RunConfigFile::default();
        let p = &c.pipeline;
        assert_eq!((p.n_prop, p.n_entity, p.top_k_passages), (20, 40, 50));
        assert_eq!((p.damping_stage1, p.damping_stage2), (0.75, 0.45));
        assert_eq!((p.b_initial, p.p_initial(), p.b_beam, p.p_beam), (5, 4, 5, 5));
        assert_eq!(p.lambda_passage, 0.05);
        assert_eq!(p.seed_mode, SeedMode::Both);
        let b = &p.beam;
        assert_eq!((b.beam_width, b.max_length, b.pool_size, b.jump_count), (4, 3, 40, 3));
        assert!(b.graph_guidance);
        assert_eq!(c.index.tau_syn, 0.8);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfigFile::from_toml(
            "[pipeline]\ndamping_stage2 = 0.5\n[pipeline.beam]\nmax_length = 2\n[provider]\ndimension = 1024\n",
        )
        .unwrap();
        assert_eq!(c.pipeline.damping_stage2, 0.5);
        assert_eq!(c.pipeline.damping_stage1, 0.75);
        assert_eq!(c.pipeline.beam.max_length, 2);
        assert_eq!(c.pipeline.beam.beam_width, 4);
        assert_eq!(c.provider.dimension, 1024);
        assert_eq!(RunConfigFile::from_toml("").unwrap(), RunConfigFile::default());
    }

    #[test]
    fn unknown_and_invalid_keys_rejected() {
        assert!(RunConfigFile::from_toml("[pipeline]\ndampnig = 0.5\n").is_err());
        assert!(RunConfigFile::from_toml("[pipeline.beam]\nwidth = 2\n").is_err());
        assert!(RunConfigFile::from_toml("[extra]\n").is_err());
        assert!(RunConfigFile::from_toml("[pipeline]\ndamping_stage1 = 1.5\n").is_err());
        assert!(RunConfigFile::from_toml("[pipeline]\nseed_mode = \"exploitation_only\"\n").is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfigFile::default();
        assert_eq!(RunConfigFile::from_toml(&c.to_toml()).unwrap(), c);
    }
}
