//! Processor-sharing delay model and the SLA quantities derived from it.
//!
//! Each active server is modeled as an M/GI/1 processor-sharing queue; the
//! front-end splits a data center's workload evenly over its active servers,
//! so a server receiving rate x has mean sojourn time 1/(mu - x), independent
//! of the service-time distribution beyond its mean. Combining that with the
//! response-time deadline and the network delay to the front-end yields the
//! largest per-server admission rate, the service efficiency `e`, and from it
//! admission upper bounds for whole data centers.

use crate::model::{DataCenterSpec, SlaSpec};
use thiserror::Error;

/// Mean sojourn time of a request, which stops being finite once the
/// offered load reaches the service capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanDelay {
    Bounded(f64),
    Unbounded,
}

impl MeanDelay {
    pub fn is_bounded(&self) -> bool {
        matches!(self, MeanDelay::Bounded(_))
    }

    /// The delay in seconds, or `None` when unbounded.
    pub fn seconds(&self) -> Option<f64> {
        match *self {
            MeanDelay::Bounded(s) => Some(s),
            MeanDelay::Unbounded => None,
        }
    }
}

/// How efficiently a data center turns servers and watts into served load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// Largest deadline-respecting admission rate per server, req/s.
    pub per_server: f64,
    /// The same rate normalized by peak facility power per server,
    /// req/s per W.
    pub per_watt: f64,
    /// False when the deadline cannot be met at any positive rate, in which
    /// case both rates are zero.
    pub usable: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum QueueingError {
    #[error("data center {id}: {load} req/s offered with no active servers")]
    NoActiveServers { id: String, load: f64 },
}

/// Mean response time of requests sent to `dc` when `load` req/s is split
/// evenly over `servers_on` active servers. Network delay is not included.
///
/// Zero load on zero servers is vacuously `Bounded(0.0)`; positive load on
/// zero servers is an error.
pub fn mean_delay(
    dc: &DataCenterSpec,
    servers_on: u32,
    load: f64,
) -> Result<MeanDelay, QueueingError> {
    if servers_on == 0 {
        if load > 0.0 {
            return Err(QueueingError::NoActiveServers { id: dc.id.clone(), load });
        }
        return Ok(MeanDelay::Bounded(0.0));
    }
    let per_server = load / servers_on as f64;
    if per_server >= dc.mu {
        return Ok(MeanDelay::Unbounded);
    }
    Ok(MeanDelay::Bounded(1.0 / (dc.mu - per_server)))
}

/// Largest per-server rate `e` such that queueing delay plus network delay
/// stays within the deadline, and its power-normalized companion.
///
/// Solves 1/(mu - e) + d_net = deadline for e. When the slack
/// `deadline - d_net` is no larger than the bare service time 1/mu, the data
/// center cannot meet the SLA at all and is reported unusable.
pub fn service_efficiency(dc: &DataCenterSpec, sla: &SlaSpec) -> Efficiency {
    let slack = sla.deadline - dc.d_net;
    if slack <= 0.0 {
        return Efficiency { per_server: 0.0, per_watt: 0.0, usable: false };
    }
    let e = dc.mu - 1.0 / slack;
    if e <= 0.0 {
        return Efficiency { per_server: 0.0, per_watt: 0.0, usable: false };
    }
    Efficiency { per_server: e, per_watt: e / (dc.pue * dc.p_peak), usable: true }
}

/// Largest workload `dc` can admit on `servers_on` servers without violating
/// the deadline, req/s. Zero when the data center is unusable.
pub fn upper_bound(dc: &DataCenterSpec, sla: &SlaSpec, servers_on: u32) -> f64 {
    servers_on as f64 * service_efficiency(dc, sla).per_server
}

/// Fluid estimate of the request backlog after one slot: the current backlog
/// plus the slot's arrival/service imbalance, floored at zero.
pub fn estimate_queue(
    current: f64,
    dc: &DataCenterSpec,
    servers_on: u32,
    load: f64,
    sla: &SlaSpec,
) -> f64 {
    let drift = load - servers_on as f64 * dc.mu;
    (current + drift * sla.slot_seconds).max(0.0)
}
