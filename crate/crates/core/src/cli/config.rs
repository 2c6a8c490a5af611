//! Config files: TOML by default, JSON when the path ends in `.json`.
//!
//! ```toml
//! [[agents]]
//! u = 1.0
//! sigma = 1.0
//!
//! [[edges]]      # optional, 1-based
//! i = 1
//! j = 2
//! w = 0.75
//!
//! [groups]       # optional two-community layout
//! n1 = 50
//! n2 = 100
//! kappa = 100.0
//! delta = 2.0
//! ```
//!
//! When `agents` is empty, `groups` defines the population.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{validate_network, validate_population, Network, Population};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub u: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Groups {
    pub n1: usize,
    pub n2: usize,
    pub kappa: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub groups: Option<Groups>,
}

/// A parsed config together with the digest of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Config {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let bytes = std::fs::read(path).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config = if is_json { Self::parse_json(text)? } else { Self::parse_toml(text)? };
        Ok(LoadedConfig { config, digest: digest(&bytes) })
    }

    pub fn population(&self) -> Result<Population> {
        if !self.agents.is_empty() {
            let (u, sigma) = self.agents.iter().map(|a| (a.u, a.sigma)).unzip();
            return validate_population(u, sigma);
        }
        match self.groups {
            Some(g) => group_population(&g),
            None => Err(Error::ConfigParse("no agents and no groups given".into())),
        }
    }

    /// The configured network, converting 1-based indices.
    pub fn network(&self, n: usize) -> Result<Network> {
        let mut entries = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.i == 0 || e.j == 0 {
                return Err(Error::ConfigParse(format!("edge ({}, {}): agent indices start at 1", e.i, e.j)));
            }
            entries.push((e.i - 1, e.j - 1, e.w));
        }
        validate_network(n, &entries)
    }
}

fn group_population(g: &Groups) -> Result<Population> {
    let mut u = vec![g.kappa; g.n1];
    u.extend(std::iter::repeat_n(1.0, g.n2));
    let mut sigma = vec![g.delta; g.n1];
    sigma.extend(std::iter::repeat_n(1.0, g.n2));
    validate_population(u, sigma)
}
