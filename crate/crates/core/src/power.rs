//! Server power draw, provisioning arithmetic, electricity cost, and the
//! carbon usage effectiveness metric.
//!
//! A switched-on server draws `p_idle` plus a share of `p_peak - p_idle`
//! proportional to its utilization; multiplying IT power by the PUE gives
//! facility power. Provisioning questions (how many servers does a load
//! need, how many servers can a green supply carry at peak) are answered
//! conservatively: loads round server counts up, supplies round down.

use crate::model::{DataCenterSpec, SlaSpec, RATE_EPS};
use crate::queueing::service_efficiency;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("data center {id}: {load} req/s exceeds capacity of {servers_on} servers")]
    Overloaded { id: String, servers_on: u32, load: f64 },
    #[error("data center {id}: cannot serve any load within the deadline")]
    Unusable { id: String },
    #[error("carbon usage effectiveness undefined for it_energy {it_energy_wh} Wh")]
    UndefinedCue { it_energy_wh: f64 },
}

/// Fewest servers that can serve `load` req/s within the deadline.
///
/// Zero load needs zero servers. A data center that cannot meet the deadline
/// at all errors for any positive load. Counts within [`RATE_EPS`] of a
/// smaller integer round down, so a load of exactly k*e asks for k servers
/// regardless of floating-point dust.
pub fn servers_needed(
    dc: &DataCenterSpec,
    sla: &SlaSpec,
    load: f64,
) -> Result<u32, PowerError> {
    if load <= RATE_EPS {
        return Ok(0);
    }
    let eff = service_efficiency(dc, sla);
    if !eff.usable {
        return Err(PowerError::Unusable { id: dc.id.clone() });
    }
    Ok(ceil_count((load - RATE_EPS) / eff.per_server))
}

pub(crate) fn ceil_count(x: f64) -> u32 {
    if x <= 0.0 {
        0
    } else {
        let c = x.ceil();
        if c >= u32::MAX as f64 {
            u32::MAX
        } else {
            c as u32
        }
    }
}

/// IT power of `servers_on` active servers serving `load` req/s, W.
///
/// Load may not exceed the raw service capacity `servers_on * mu`.
pub fn it_power(dc: &DataCenterSpec, servers_on: u32, load: f64) -> Result<f64, PowerError> {
    let m = servers_on as f64;
    if load > m * dc.mu + RATE_EPS {
        return Err(PowerError::Overloaded { id: dc.id.clone(), servers_on, load });
    }
    Ok(m * dc.p_idle + (dc.p_peak - dc.p_idle) * (load / dc.mu))
}

/// Facility power: IT power scaled by the PUE.
pub fn facility_power(dc: &DataCenterSpec, servers_on: u32, load: f64) -> Result<f64, PowerError> {
    Ok(dc.pue * it_power(dc, servers_on, load)?)
}

/// Number of servers the green supply can keep at peak draw, capped by the
/// installed fleet. Rounds down: a partially covered server is not green.
pub fn green_server_capacity(dc: &DataCenterSpec, green_power: f64) -> u32 {
    let per_server = dc.pue * dc.p_peak;
    let cap = (green_power / per_server).floor();
    if cap <= 0.0 {
        0
    } else if cap >= dc.max_servers as f64 {
        dc.max_servers
    } else {
        cap as u32
    }
}

/// Cost of drawing `brown_power_w` from the grid for one slot at
/// `price_per_kwh`.
pub fn slot_cost(price_per_kwh: f64, brown_power_w: f64, sla: &SlaSpec) -> f64 {
    price_per_kwh * (brown_power_w / 1000.0) * (sla.slot_seconds / 3600.0)
}

/// Carbon usage effectiveness: grams of CO2 emitted per watt-hour of IT
/// energy. Undefined (an error) when no IT energy was consumed.
pub fn cue(total_co2_g: f64, it_energy_wh: f64) -> Result<f64, PowerError> {
    if it_energy_wh <= 0.0 {
        return Err(PowerError::UndefinedCue { it_energy_wh });
    }
    Ok(total_co2_g / it_energy_wh)
}
