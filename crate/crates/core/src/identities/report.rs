use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::period::PeriodMatrix;

/// Direction of the pass test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// pass iff `residual < threshold`
    Below,
    /// pass iff `residual > threshold` (rank ratios, separation distances)
    Above,
}

/// Residual record for one verified identity instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub genus: usize,
    pub level: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, Value>,
    pub residual: f64,
    pub scale: f64,
    pub threshold: f64,
    pub criterion: Criterion,
    pub pass: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub degraded: bool,
    /// Wall time in seconds; reported separately from the comparable body.
    #[serde(skip)]
    pub wall_time: f64,
}

impl IdentityReport {
    pub fn new(
        identity: impl Into<String>,
        genus: usize,
        level: u64,
        residual: f64,
        scale: f64,
        threshold: f64,
        criterion: Criterion,
    ) -> Self {
        let pass = match criterion {
            Criterion::Below => residual < threshold,
            Criterion::Above => residual > threshold,
        };
        Self {
            identity: identity.into(),
            genus,
            level,
            seed: None,
            inputs: BTreeMap::new(),
            residual: residual.abs(),
            scale,
            threshold,
            criterion,
            pass: pass && residual.is_finite(),
            degraded: false,
            wall_time: 0.0,
        }
    }

    pub fn below(identity: impl Into<String>, genus: usize, level: u64, residual: f64, scale: f64, tol: f64) -> Self {
        Self::new(identity, genus, level, residual, scale, tol, Criterion::Below)
    }

    pub fn above(identity: impl Into<String>, genus: usize, level: u64, value: f64, threshold: f64) -> Self {
        Self::new(identity, genus, level, value, 1.0, threshold, Criterion::Above)
    }

    pub fn with_input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn with_tau(self, tau: &PeriodMatrix) -> Self {
        self.with_input("tau_digest", tau.digest())
    }

    pub fn with_point(self, key: &str, z: &[Complex64]) -> Self {
        let v: Vec<Value> = z.iter().map(|c| json!([c.re, c.im])).collect();
        self.with_input(key, v)
    }

    pub fn with_char(self, key: &str, v: &impl std::fmt::Display) -> Self {
        self.with_input(key, v.to_string())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Marks the report degraded. Degraded reports fail unless the caller
    /// explicitly allows them.
    pub fn with_degraded(mut self, degraded: bool) -> Self {
        self.degraded |= degraded;
        self
    }

    /// Re-applies the threshold, e.g. after a tolerance override.
    pub fn rejudge(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.pass = self.residual.is_finite()
            && match self.criterion {
                Criterion::Below => self.residual < threshold,
                Criterion::Above => self.residual > threshold,
            };
    }
}
