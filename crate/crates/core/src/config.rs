//! Configuration files: a TOML or JSON document describing the fleet, the
//! service-level agreement, and where the traces live.
//!
//! ```toml
//! workload_trace = "workload.csv"
//! scale = 1.0
//!
//! [sla]
//! deadline_s = 1.5
//! slot_s = 3600
//!
//! [[datacenter]]
//! id = "dc1"
//! mu = 2.0
//! max_servers = 5000
//! p_idle_w = 100
//! p_peak_w = 200
//! pue = 1.25
//! d_net_s = 0.5
//! green_trace = "green.csv"
//! price_trace = "price.csv"
//! ```
//!
//! Trace paths are resolved relative to the configuration file itself, so a
//! config directory can be moved around as one unit.

use crate::model::{validate_config, Config, ConfigError, DataCenterSpec, SlaSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    workload_trace: String,
    scale: Option<f64>,
    carbon_intensity: Option<f64>,
    currency: Option<String>,
    sla: RawSla,
    datacenter: Vec<RawDataCenter>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSla {
    deadline_s: f64,
    slot_s: f64,
    queue_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataCenter {
    id: String,
    mu: f64,
    max_servers: u32,
    p_idle_w: f64,
    p_peak_w: f64,
    pue: f64,
    d_net_s: f64,
    green_trace: String,
    price_trace: String,
}

/// A validated configuration plus the resolved trace paths it points at.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub config: Config,
    pub workload_trace: PathBuf,
    /// Multiplier applied to the workload trace on load.
    pub scale: f64,
    /// Green-power trace path per data center, in configuration order.
    pub green_traces: Vec<PathBuf>,
    /// Price trace path per data center, in configuration order.
    pub price_traces: Vec<PathBuf>,
}

impl FileConfig {
    /// Data center ids in configuration order; the column names expected in
    /// green and price traces.
    pub fn dc_ids(&self) -> Vec<String> {
        self.config.datacenters().iter().map(|d| d.id.clone()).collect()
    }

    #[cfg(test)]
    pub(crate) fn for_tests(
        workload_trace: PathBuf,
        scale: f64,
        ids: Vec<String>,
        green_traces: Vec<PathBuf>,
        price_traces: Vec<PathBuf>,
    ) -> Self {
        let dcs = ids
            .into_iter()
            .map(|id| DataCenterSpec {
                id,
                mu: 2.0,
                max_servers: 100,
                p_idle: 100.0,
                p_peak: 200.0,
                pue: 1.25,
                d_net: 0.5,
            })
            .collect();
        let sla = SlaSpec { deadline: 1.5, slot_seconds: 3600.0, queue_bound: None };
        FileConfig {
            config: validate_config(dcs, sla).unwrap(),
            workload_trace,
            scale,
            green_traces,
            price_traces,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path} must end in .toml or .json")]
    UnknownFormat { path: PathBuf },
    #[error("config {path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("config sets workload_trace but no scale; set scale = 1.0 for unscaled traces")]
    MissingScale,
    #[error("scale must be a finite positive number, got {value}")]
    BadScale { value: f64 },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Reads and validates a configuration file, TOML or JSON by extension.
pub fn read_config_file(path: &Path) -> Result<FileConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigFileError::Io { path: path.to_owned(), source })?;
    let syntax = |message: String| ConfigFileError::Syntax { path: path.to_owned(), message };
    let raw: RawConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| syntax(e.message().to_owned()))?,
        Some("json") => serde_json::from_str(&text).map_err(|e| syntax(e.to_string()))?,
        _ => return Err(ConfigFileError::UnknownFormat { path: path.to_owned() }),
    };

    let scale = raw.scale.ok_or(ConfigFileError::MissingScale)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ConfigFileError::BadScale { value: scale });
    }

    let dcs: Vec<DataCenterSpec> = raw
        .datacenter
        .iter()
        .map(|d| DataCenterSpec {
            id: d.id.clone(),
            mu: d.mu,
            max_servers: d.max_servers,
            p_idle: d.p_idle_w,
            p_peak: d.p_peak_w,
            pue: d.pue,
            d_net: d.d_net_s,
        })
        .collect();
    let sla = SlaSpec {
        deadline: raw.sla.deadline_s,
        slot_seconds: raw.sla.slot_s,
        queue_bound: raw.sla.queue_bound,
    };
    let mut config = validate_config(dcs, sla)?;
    if let Some(ci) = raw.carbon_intensity {
        config = config.with_carbon_intensity(ci)?;
    }
    if let Some(currency) = raw.currency {
        config = config.with_currency(currency);
    }

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &str| base.join(p);
    Ok(FileConfig {
        config,
        workload_trace: resolve(&raw.workload_trace),
        scale,
        green_traces: raw.datacenter.iter().map(|d| resolve(&d.green_trace)).collect(),
        price_traces: raw.datacenter.iter().map(|d| resolve(&d.price_trace)).collect(),
    })
}
