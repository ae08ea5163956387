use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{OutputFormat, RunConfig};
use crate::error::{Result, ThetaError};
use crate::identities::{Criterion, IdentityReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub reports: Vec<IdentityReport>,
    /// Largest residual among `below` reports.
    pub max_residual: f64,
    pub pass: bool,
}

impl SuiteResult {
    pub fn new(name: &str, reports: Vec<IdentityReport>) -> Self {
        let max_residual = reports
            .iter()
            .filter(|r| r.criterion == Criterion::Below)
            .map(|r| r.residual)
            .fold(0.0, f64::max);
        let pass = reports.iter().all(|r| r.pass);
        Self {
            name: name.to_string(),
            reports,
            max_residual,
            pass,
        }
    }
}

/// Wall times, kept apart from the comparable body.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub suites: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: RunConfig,
    pub suites: Vec<SuiteResult>,
    pub max_residual: f64,
    pub pass: bool,
    pub versions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl SuiteReport {
    pub fn new(config: RunConfig, suites: Vec<SuiteResult>, timing: Timing) -> Self {
        let max_residual = suites.iter().map(|s| s.max_residual).fold(0.0, f64::max);
        let pass = suites.iter().all(|s| s.pass);
        let mut versions = BTreeMap::new();
        versions.insert("thetaforge".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Self {
            config,
            suites,
            max_residual,
            pass,
            versions,
            timing: Some(timing),
        }
    }

    /// JSON of everything except timing; identical configs give identical bodies.
    pub fn body_json(&self) -> String {
        let body = SuiteReport {
            timing: None,
            ..self.clone()
        };
        serde_json::to_string_pretty(&body).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| ThetaError::Io(e.to_string());
        out.write_record([
            "suite", "identity", "genus", "level", "seed", "residual", "scale", "threshold", "criterion", "pass",
            "degraded", "inputs",
        ])
        .map_err(csv_err)?;
        for s in &self.suites {
            for r in &s.reports {
                let criterion = match r.criterion {
                    Criterion::Below => "below",
                    Criterion::Above => "above",
                };
                out.write_record([
                    s.name.clone(),
                    r.identity.clone(),
                    r.genus.to_string(),
                    r.level.to_string(),
                    r.seed.map(|x| x.to_string()).unwrap_or_default(),
                    format!("{:e}", r.residual),
                    format!("{:e}", r.scale),
                    format!("{:e}", r.threshold),
                    criterion.to_string(),
                    r.pass.to_string(),
                    r.degraded.to_string(),
                    serde_json::to_string(&r.inputs).expect("inputs serialize"),
                ])
                .map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| ThetaError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        match format {
            OutputFormat::Json => {
                w.write_all(self.to_json().as_bytes())?;
                w.write_all(b"\n")?;
            }
            OutputFormat::Csv => self.write_csv(&mut w)?,
        }
        w.flush()?;
        Ok(())
    }
}
