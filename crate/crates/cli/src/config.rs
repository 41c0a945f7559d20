//! Run configuration: one flat JSON document whose defaults follow the
//! reference pipeline (alpha = 0.01, gamma = 0.1, p = 1, 5% landmarks,
//! 10% clip margin).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use topo_guard_core::stopping::{ComplexChoice, RMaxPolicy, StopConfig};
use topo_guard_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input CSV paths or globs.
    pub inputs: Vec<String>,
    pub out_dir: PathBuf,
    pub complex: ComplexChoice,
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub max_iters: usize,
    pub r_max: RMaxPolicy,
    pub landmark_fraction: f64,
    pub clip_margin: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let stop = StopConfig::default();
        RunConfig {
            inputs: Vec::new(),
            out_dir: PathBuf::from("out"),
            complex: stop.complex,
            alpha: stop.alpha,
            gamma: stop.gamma,
            p: stop.p,
            max_iters: stop.max_iters,
            r_max: stop.r_max,
            landmark_fraction: stop.landmark_fraction,
            clip_margin: stop.clip_margin,
            seed: stop.seed,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::ParseError {
            line: e.line(),
            msg: format!("config: {e}"),
        })
    }

    /// The stopping configuration for one sample. Each sample gets its own
    /// stream carved out of the master seed by its id, so batch results do
    /// not depend on input ordering.
    pub fn stop_config_for(&self, sample_id: &str) -> StopConfig {
        StopConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            p: self.p,
            max_iters: self.max_iters,
            complex: self.complex,
            r_max: self.r_max,
            landmark_fraction: self.landmark_fraction,
            clip_margin: self.clip_margin,
            seed: self.seed ^ fnv1a(sample_id.as_bytes()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stop_config_for("probe").validate()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_serialize_with_reference_values() {
        let cfg = RunConfig::default();
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(v["alpha"], 0.01);
        assert_eq!(v["gamma"], 0.1);
        assert_eq!(v["p"], 1.0);
        assert_eq!(v["landmark_fraction"], 0.05);
        assert_eq!(v["complex"], "alpha");
        assert_eq!(v["r_max"], "max");
    }

    #[test]
    fn partial_json_falls_back_to_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"gamma": 0.2}"#).unwrap();
        assert_eq!(cfg.gamma, 0.2);
        assert_eq!(cfg.alpha, 0.01);
    }

    #[test]
    fn per_sample_seeds_differ_but_are_stable() {
        let cfg = RunConfig::default();
        let a = cfg.stop_config_for("user1_sig3");
        let b = cfg.stop_config_for("user2_sig1");
        assert_ne!(a.seed, b.seed);
        assert_eq!(a.seed, cfg.stop_config_for("user1_sig3").seed);
    }
}
