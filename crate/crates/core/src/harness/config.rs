use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::truncation::TruncationPolicy;

pub const SEED_ENV: &str = "THETAFORGE_SEED";

pub const ALL_SUITES: &[&str] = &[
    "shift",
    "doubling",
    "addition-forward",
    "addition-converse",
    "ac-theorem",
    "cyclic",
    "rank",
    "reconstruction",
    "product-reconstruction",
    "separation",
    "jacobi-classical",
    "jacobi-generalized",
    "heat-consistency",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genus: Vec<usize>,
    pub level: Vec<u64>,
    pub suites: Vec<String>,
    /// Tuples per (genus, level) for the identity suites.
    pub samples: usize,
    /// Period matrices for the reconstruction suites.
    pub reconstruction_samples: usize,
    pub separation_pairs: usize,
    /// Estimation and held-out samples for the generalized Jacobi formula.
    pub jacobi_samples: usize,
    pub heldout_samples: usize,
    pub seed: u64,
    /// Replaces every residual tolerance when set.
    pub tolerance: Option<f64>,
    pub truncation: TruncationPolicy,
    /// Re-run identity instances with the radius doubled and report the drift.
    pub stability: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub allow_degraded: bool,
    /// Also run the suites skipped by default for cost (separation at genus >= 3).
    pub all: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genus: vec![1, 2],
            level: vec![1, 2],
            suites: Vec::new(),
            samples: 64,
            reconstruction_samples: 10,
            separation_pairs: 20,
            jacobi_samples: 20,
            heldout_samples: 10,
            seed: 0,
            tolerance: None,
            truncation: TruncationPolicy::default(),
            stability: true,
            out: None,
            format: OutputFormat::Json,
            allow_degraded: false,
            all: false,
        }
    }
}

impl RunConfig {
    /// Defaults with the seed taken from `THETAFORGE_SEED` when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| ThetaError::Config(format!("{SEED_ENV}={s} is not a 64-bit seed")))?;
        }
        Ok(cfg)
    }

    /// Reads a JSON config; missing fields keep the values of `base`.
    pub fn load(path: &Path, base: &RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut merged = serde_json::to_value(base).map_err(|e| ThetaError::Config(e.to_string()))?;
        let overlay: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ThetaError::Config(format!("{}: {e}", path.display())))?;
        let serde_json::Value::Object(fields) = overlay else {
            return Err(ThetaError::Config(format!("{}: expected a JSON object", path.display())));
        };
        for (k, v) in fields {
            merged[k] = v;
        }
        serde_json::from_value(merged).map_err(|e| ThetaError::Config(format!("{}: {e}", path.display())))
    }

    /// Every suite name, in canonical order.
    pub fn default_suites() -> Vec<String> {
        ALL_SUITES.iter().map(|s| s.to_string()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(ThetaError::Config("no suites selected".into()));
        }
        if let Some(bad) = self.suites.iter().find(|s| !ALL_SUITES.contains(&s.as_str())) {
            return Err(ThetaError::UnknownSuite(bad.clone()));
        }
        if self.genus.is_empty() || self.genus.contains(&0) {
            return Err(ThetaError::Config("genus list must be non-empty with every genus >= 1".into()));
        }
        if self.level.is_empty() || self.level.contains(&0) {
            return Err(ThetaError::Config("level list must be non-empty with every level >= 1".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ThetaError::Config(format!("tolerance {t} must be positive")));
            }
        }
        self.truncation.validate()
    }
}
