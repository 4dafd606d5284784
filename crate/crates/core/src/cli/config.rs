//! Run configuration: a TOML file with sections mirroring the library
//! config structs, overridden field by field from command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::house::HouseParams;
use crate::env::sim::EnvConfig;
use crate::episodes::types::DatasetProfile;
use crate::error::{Error, Result};
use crate::rl::ppo::PpoConfig;

pub const SEED_ENV_VAR: &str = "OBJNAV_SEED";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicySection {
    pub model: String,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection { model: "smtsc".to_string() }
    }
}

/// Everything a run can configure from a file. Missing sections and fields
/// fall back to the library defaults, so an empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub env: EnvConfig,
    pub house: HouseParams,
    pub profile: DatasetProfile,
    pub ppo: PpoConfig,
    pub policy: PolicySection,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Hash of the effective configuration, embedded in every artifact so a
/// reader can tell whether two runs were comparable.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Seed precedence: explicit flag, then `OBJNAV_SEED`, then the default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    seed_from(flag, std::env::var(SEED_ENV_VAR).ok().as_deref())
}

fn seed_from(flag: Option<u64>, env_value: Option<&str>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env_value {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV_VAR}={text:?} is not an unsigned integer"))),
        None => Ok(DEFAULT_SEED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_partial_configs_fall_back_to_defaults() {
        let empty: FileConfig = toml::from_str("").unwrap();
        assert_eq!(empty, FileConfig::default());
        let partial: FileConfig = toml::from_str("[env]\nmax_steps = 60\n\n[ppo]\nlr = 0.001\n").unwrap();
        assert_eq!(partial.env.max_steps, 60);
        assert_eq!(partial.env.forward_step, 0.25);
        assert_eq!(partial.ppo.lr, 0.001);
        assert_eq!(partial.ppo.clip, 0.2);
        assert_eq!(partial.policy.model, "smtsc");
    }

    #[test]
    fn bad_toml_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[env\n").unwrap();
        match FileConfig::load(Some(&path)) {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = FileConfig::default();
        let mut b = FileConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.env.max_steps = 60;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(seed_from(Some(9), Some("4")).unwrap(), 9);
        assert_eq!(seed_from(None, Some("4")).unwrap(), 4);
        assert_eq!(seed_from(None, Some(" 12 ")).unwrap(), 12);
        assert_eq!(seed_from(None, None).unwrap(), DEFAULT_SEED);
        assert!(seed_from(None, Some("four")).is_err());
    }
}
