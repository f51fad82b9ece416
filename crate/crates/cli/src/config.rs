//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use hardedge_core::{DropletFamily, PotentialKind, QuadratureSpec, RadialPotential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub n: SizeList,
    pub grid: GridConfig,
    pub quadrature: QuadratureSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub profile: ProfileOptions,
    pub converge: ConvergeOptions,
    pub sample: SampleOptions,
    pub verify: VerifyOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialConfig::default(),
            n: SizeList::One(256),
            grid: GridConfig::default(),
            quadrature: QuadratureSpec::default(),
            output_dir: PathBuf::from("out"),
            seed: 1,
            profile: ProfileOptions::default(),
            converge: ConvergeOptions::default(),
            sample: SampleOptions::default(),
            verify: VerifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// "ginibre", "power" or "custom"
    pub name: String,
    pub p: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    pub r_max: Option<f64>,
    pub tau0: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            name: "ginibre".into(),
            p: None,
            coeffs: None,
            r_max: None,
            tau0: None,
        }
    }
}

impl PotentialConfig {
    pub fn family(&self) -> Result<DropletFamily, CliError> {
        let kind = match self.name.as_str() {
            "ginibre" => PotentialKind::Ginibre,
            "power" => PotentialKind::Power {
                p: self.p.ok_or_else(|| CliError::Config("power potential needs `p`".into()))?,
            },
            "custom" => PotentialKind::Custom {
                coeffs: self
                    .coeffs
                    .clone()
                    .ok_or_else(|| CliError::Config("custom potential needs `coeffs`".into()))?,
            },
            other => return Err(CliError::Config(format!("unknown potential `{other}`"))),
        };
        let pot = RadialPotential::new(kind, self.r_max.unwrap_or(4.0)).map_err(|e| CliError::Config(e.to_string()))?;
        DropletFamily::new(pot, self.tau0.unwrap_or(DropletFamily::DEFAULT_TAU0)).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// `n = 256` or `n = [256, 1024]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeList {
    One(usize),
    Many(Vec<usize>),
}

impl SizeList {
    pub fn values(&self) -> Vec<usize> {
        match self {
            SizeList::One(n) => vec![*n],
            SizeList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: -6.0,
            hi: 4.0,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    /// Degrees whose |w_{j,n}|² profiles are written as well.
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeOptions {
    pub window: [f64; 2],
    pub step: f64,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            window: [-3.0, -0.5],
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleOptions {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub bins: usize,
    pub chains: usize,
    pub batch_len: u64,
    pub quantile: f64,
    pub min_expected: f64,
    /// Continue this checkpoint instead of starting fresh (single chain).
    pub resume: Option<PathBuf>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            sweeps: 202_000,
            burn_in: 2_000,
            thin: 1,
            bins: 16,
            chains: 1,
            batch_len: 1_000,
            quantile: 0.99,
            min_expected: 100.0,
            resume: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub trace_n: Vec<usize>,
    pub rate_n: Vec<usize>,
    pub taus: Vec<f64>,
    pub xi: f64,
    pub rate_bound: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trace_n: vec![4, 16, 64, 256],
            rate_n: vec![256, 1024, 4096],
            taus: vec![0.9, 0.95, 0.99, 0.999],
            xi: -1.0,
            rate_bound: 0.5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.quadrature.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.n.values().is_empty() || self.n.values().contains(&0) {
            return Err(CliError::Config("`n` must be a positive integer or a non-empty list".into()));
        }
        if !(self.grid.step > 0.0) || !(self.grid.hi >= self.grid.lo) {
            return Err(CliError::Config("grid needs lo <= hi and step > 0".into()));
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
