//! Domain types and validation.
//!
//! Everything downstream (queueing, power, allocation, flow graphs) operates
//! on a [`Config`] produced by [`validate_config`]. Construction is the only
//! place invariants are checked; after that the types are immutable and every
//! consumer may assume finite, in-range fields.

use crate::queueing::{self, Efficiency};
use thiserror::Error;

/// Absolute tolerance for comparing request rates and flows, in req/s.
pub const RATE_EPS: f64 = 1e-9;

/// Default grams of CO2 emitted per watt-hour of grid electricity.
pub const DEFAULT_CARBON_INTENSITY: f64 = 0.4;

/// Static description of one data center.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCenterSpec {
    /// Unique identifier; also the column name in multi-column trace files.
    pub id: String,
    /// Per-server service rate, req/s.
    pub mu: f64,
    /// Number of servers installed.
    pub max_servers: u32,
    /// Power draw of an idle active server, W.
    pub p_idle: f64,
    /// Power draw of a fully loaded server, W.
    pub p_peak: f64,
    /// Power usage effectiveness: facility power / IT power, >= 1.
    pub pue: f64,
    /// Network delay between the front-end and this data center, s.
    pub d_net: f64,
}

/// Service-level agreement and slotting parameters shared by all data centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaSpec {
    /// End-to-end deadline on mean response time, s.
    pub deadline: f64,
    /// Length of one scheduling slot, s.
    pub slot_seconds: f64,
    /// Optional cap on the estimated per-DC request backlog. When present,
    /// simulation runs in queue-bound mode instead of the per-slot
    /// upper-bound mode.
    pub queue_bound: Option<f64>,
}

/// Per-slot input for the whole system.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInput {
    /// Slot index, as found in the trace files.
    pub slot: u64,
    /// Aggregate arriving workload at the front-end, req/s.
    pub workload: f64,
    /// Available green power per data center, W. Length = number of DCs.
    pub green_power: Vec<f64>,
    /// Electricity price per data center, currency per kWh.
    pub price: Vec<f64>,
}

/// Workload split and resulting power draw for one slot.
///
/// All vectors are indexed by data-center position in the [`Config`].
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Workload served on green-powered servers, req/s.
    pub green_rate: Vec<f64>,
    /// Workload served on grid-powered servers, req/s.
    pub brown_rate: Vec<f64>,
    /// Servers switched on attributed to green supply.
    pub green_servers_on: Vec<u32>,
    /// Servers switched on attributed to grid supply.
    pub brown_servers_on: Vec<u32>,
    /// Facility power drawn from green supply, W.
    pub green_power_drawn: Vec<f64>,
    /// Facility power drawn from the grid, W.
    pub brown_power_drawn: Vec<f64>,
    /// Total cost of grid electricity for the slot.
    pub brown_cost: f64,
    /// Green power available but not drawn, summed over DCs, W.
    pub spilled_green: f64,
}

/// One point of the total-power versus green-utilization tradeoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    /// Requested minimum green utilization, in [0, 1].
    pub target_utilization: f64,
    /// Green utilization of the returned allocation.
    pub achieved_utilization: f64,
    /// Total facility power of the allocation, W.
    pub total_power: f64,
    /// Grid share of that power, W.
    pub brown_power: f64,
    /// Whether the target could be met while serving all workload.
    pub feasible: bool,
}

/// Rejection reasons for static configuration.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("no data centers configured")]
    NoDataCenters,
    #[error("duplicate data center id {id:?}")]
    DuplicateId { id: String },
    #[error("data center {id}: {field} is not finite")]
    NotFinite { id: String, field: &'static str },
    #[error("data center {id}: mu must be positive, got {value}")]
    NonPositiveMu { id: String, value: f64 },
    #[error("data center {id}: p_idle below 0, got {value}")]
    NegativeIdlePower { id: String, value: f64 },
    #[error("data center {id}: p_peak must be positive, got {value}")]
    NonPositivePeakPower { id: String, value: f64 },
    #[error("data center {id}: p_peak below p_idle ({p_peak} < {p_idle})")]
    PeakBelowIdle { id: String, p_peak: f64, p_idle: f64 },
    #[error("data center {id}: pue below 1.0, got {value}")]
    PueBelowOne { id: String, value: f64 },
    #[error("data center {id}: d_net below 0, got {value}")]
    NegativeNetworkDelay { id: String, value: f64 },
    #[error("sla: deadline must be positive and finite, got {value}")]
    BadDeadline { value: f64 },
    #[error("sla: slot_s must be positive and finite, got {value}")]
    BadSlotSeconds { value: f64 },
    #[error("sla: queue_bound must be positive and finite, got {value}")]
    BadQueueBound { value: f64 },
    #[error("carbon_intensity below 0, got {value}")]
    NegativeCarbonIntensity { value: f64 },
}

/// Rejection reasons for per-slot input.
#[derive(Debug, Error, PartialEq)]
pub enum SlotError {
    #[error("slot {slot}: green_power has {got} entries, expected {expected}")]
    GreenLength { slot: u64, got: usize, expected: usize },
    #[error("slot {slot}: price has {got} entries, expected {expected}")]
    PriceLength { slot: u64, got: usize, expected: usize },
    #[error("slot {slot}: workload must be finite and >= 0, got {value}")]
    BadWorkload { slot: u64, value: f64 },
    #[error("slot {slot}: green_power[{index}] must be finite and >= 0, got {value}")]
    BadGreenPower { slot: u64, index: usize, value: f64 },
    #[error("slot {slot}: price[{index}] must be finite and >= 0, got {value}")]
    BadPrice { slot: u64, index: usize, value: f64 },
}

/// A validated, immutable system configuration.
///
/// Holds the data centers, the SLA, and the per-DC service efficiency
/// derived from both. Revalidating a `Config`'s own parts yields an equal
/// `Config`.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    datacenters: Vec<DataCenterSpec>,
    sla: SlaSpec,
    efficiency: Vec<Efficiency>,
    carbon_intensity: f64,
    currency: String,
}

/// Checks every data center and the SLA, and precomputes service
/// efficiencies. The first offending field produces the error.
pub fn validate_config(
    datacenters: Vec<DataCenterSpec>,
    sla: SlaSpec,
) -> Result<Config, ConfigError> {
    if datacenters.is_empty() {
        return Err(ConfigError::NoDataCenters);
    }
    if !(sla.deadline.is_finite() && sla.deadline > 0.0) {
        return Err(ConfigError::BadDeadline { value: sla.deadline });
    }
    if !(sla.slot_seconds.is_finite() && sla.slot_seconds > 0.0) {
        return Err(ConfigError::BadSlotSeconds { value: sla.slot_seconds });
    }
    if let Some(q) = sla.queue_bound {
        if !(q.is_finite() && q > 0.0) {
            return Err(ConfigError::BadQueueBound { value: q });
        }
    }
    let mut seen: Vec<&str> = Vec::with_capacity(datacenters.len());
    for dc in &datacenters {
        validate_dc(dc)?;
        if seen.contains(&dc.id.as_str()) {
            return Err(ConfigError::DuplicateId { id: dc.id.clone() });
        }
        seen.push(&dc.id);
    }
    let efficiency = datacenters
        .iter()
        .map(|dc| queueing::service_efficiency(dc, &sla))
        .collect();
    Ok(Config {
        datacenters,
        sla,
        efficiency,
        carbon_intensity: DEFAULT_CARBON_INTENSITY,
        currency: "USD".to_owned(),
    })
}

fn validate_dc(dc: &DataCenterSpec) -> Result<(), ConfigError> {
    let id = || dc.id.clone();
    let finite = |v: f64, field: &'static str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::NotFinite { id: id(), field })
        }
    };
    finite(dc.mu, "mu")?;
    if dc.mu <= 0.0 {
        return Err(ConfigError::NonPositiveMu { id: id(), value: dc.mu });
    }
    finite(dc.p_idle, "p_idle")?;
    if dc.p_idle < 0.0 {
        return Err(ConfigError::NegativeIdlePower { id: id(), value: dc.p_idle });
    }
    finite(dc.p_peak, "p_peak")?;
    if dc.p_peak <= 0.0 {
        return Err(ConfigError::NonPositivePeakPower { id: id(), value: dc.p_peak });
    }
    if dc.p_peak < dc.p_idle {
        return Err(ConfigError::PeakBelowIdle {
            id: id(),
            p_peak: dc.p_peak,
            p_idle: dc.p_idle,
        });
    }
    finite(dc.pue, "pue")?;
    if dc.pue < 1.0 {
        return Err(ConfigError::PueBelowOne { id: id(), value: dc.pue });
    }
    finite(dc.d_net, "d_net")?;
    if dc.d_net < 0.0 {
        return Err(ConfigError::NegativeNetworkDelay { id: id(), value: dc.d_net });
    }
    Ok(())
}

impl Config {
    pub fn datacenters(&self) -> &[DataCenterSpec] {
        &self.datacenters
    }

    pub fn sla(&self) -> &SlaSpec {
        &self.sla
    }

    /// Service efficiency of each data center, aligned with `datacenters()`.
    pub fn efficiency(&self) -> &[Efficiency] {
        &self.efficiency
    }

    pub fn num_datacenters(&self) -> usize {
        self.datacenters.len()
    }

    pub fn carbon_intensity(&self) -> f64 {
        self.carbon_intensity
    }

    pub fn currency(&self) -> &str {
        &self.currency
    }

    /// Replaces the default grid carbon intensity (g CO2 per Wh).
    pub fn with_carbon_intensity(mut self, grams_per_wh: f64) -> Result<Self, ConfigError> {
        if !(grams_per_wh.is_finite() && grams_per_wh >= 0.0) {
            return Err(ConfigError::NegativeCarbonIntensity { value: grams_per_wh });
        }
        self.carbon_intensity = grams_per_wh;
        Ok(self)
    }

    /// Replaces the currency label used for reporting.
    pub fn with_currency(mut self, label: impl Into<String>) -> Self {
        self.currency = label.into();
        self
    }

    /// Checks one slot's vectors against this configuration. Every allocator
    /// entry point calls this before doing any work.
    pub fn validate_slot(&self, slot: &SlotInput) -> Result<(), SlotError> {
        let n = self.datacenters.len();
        if slot.green_power.len() != n {
            return Err(SlotError::GreenLength {
                slot: slot.slot,
                got: slot.green_power.len(),
                expected: n,
            });
        }
        if slot.price.len() != n {
            return Err(SlotError::PriceLength {
                slot: slot.slot,
                got: slot.price.len(),
                expected: n,
            });
        }
        if !(slot.workload.is_finite() && slot.workload >= 0.0) {
            return Err(SlotError::BadWorkload { slot: slot.slot, value: slot.workload });
        }
        for (i, &g) in slot.green_power.iter().enumerate() {
            if !(g.is_finite() && g >= 0.0) {
                return Err(SlotError::BadGreenPower { slot: slot.slot, index: i, value: g });
            }
        }
        for (i, &p) in slot.price.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(SlotError::BadPrice { slot: slot.slot, index: i, value: p });
            }
        }
        Ok(())
    }
}
