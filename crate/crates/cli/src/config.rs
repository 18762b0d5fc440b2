//! Run configuration: defaults, TOML file, command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use imatch_core::group::MAX_BALL_RADIUS;
use imatch_core::AlphaSpec;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `"p,q,d,r"` for `α = (p + q√d) / r`.
    #[serde(serialize_with = "alpha_out", deserialize_with = "alpha_in")]
    pub alpha: AlphaSpec,
    pub seed: u64,
    pub ball_radius: usize,
    /// Anchors per group element in `verify-lemma`.
    pub samples: usize,
    /// Vertex budget for BFS and component walks.
    pub bfs_budget: usize,
    /// Random vertices classified by `explore`.
    pub explore_samples: usize,
    pub dynamics: DynamicsConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub k: Vec<u32>,
    pub window: usize,
    pub instances: usize,
    /// Attempted transpositions per instance; defaults to the window size.
    pub transpositions: Option<usize>,
    /// Instances built from group-element pieces on segments of `G`.
    pub bridge_instances: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: AlphaSpec::default(),
            seed: 0,
            ball_radius: 8,
            samples: 200,
            bfs_budget: 10_000,
            explore_samples: 20,
            dynamics: DynamicsConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            k: vec![3, 5, 7, 9],
            window: 200,
            instances: 500,
            transpositions: None,
            bridge_instances: 8,
        }
    }
}

fn alpha_out<S: Serializer>(spec: &AlphaSpec, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&spec.to_string())
}

fn alpha_in<'de, D: Deserializer<'de>>(d: D) -> Result<AlphaSpec, D::Error> {
    let text = String::deserialize(d)?;
    text.parse().map_err(serde::de::Error::custom)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        imatch_core::make_alpha(self.alpha).map_err(|e| CliError::Usage(format!("alpha: {e}")))?;
        if self.ball_radius > MAX_BALL_RADIUS {
            return bad(format!(
                "ball_radius {} exceeds the maximum {MAX_BALL_RADIUS}",
                self.ball_radius
            ));
        }
        if self.samples == 0 || self.bfs_budget == 0 {
            return bad("samples and bfs_budget must be positive".into());
        }
        let d = &self.dynamics;
        if d.k.is_empty() {
            return bad("dynamics.k must list at least one value".into());
        }
        if let Some(k) = d.k.iter().find(|k| *k % 2 == 0) {
            return bad(format!("dynamics.k entries must be odd, got {k}"));
        }
        let kmax = *d.k.iter().max().expect("nonempty") as usize;
        if d.window == 0 || !d.window.is_multiple_of(2) || d.window < kmax {
            return bad(format!("dynamics.window must be even, positive and at least {kmax}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = toml::to_string(&c).unwrap();
        assert!(text.contains("alpha = \"-1,1,2,1\""));
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("seed = 4\n[dynamics]\nk = [1, 3]\n").unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.dynamics.k, vec![1, 3]);
        assert_eq!(c.dynamics.window, 200);
        assert_eq!(c.ball_radius, 8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(toml::from_str::<RunConfig>("sede = 4").is_err());
        assert!(toml::from_str::<RunConfig>("alpha = \"1,2\"").is_err());
        let mut c = RunConfig {
            ball_radius: 11,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.ball_radius = 0;
        c.dynamics.k = vec![3, 4];
        assert!(c.validate().is_err());
        c.dynamics.k = vec![9];
        c.dynamics.window = 8;
        assert!(c.validate().is_err());
        c.dynamics.window = 10;
        c.validate().unwrap();
        c.alpha = AlphaSpec { p: 1, q: 0, d: 2, r: 2 };
        assert!(c.validate().is_err());
    }
}
