//! Two-stage workload allocation and the slot-by-slot simulation loop.
//!
//! Stage one packs as much workload as possible onto green-powered servers,
//! visiting data centers in descending order of green admission capacity.
//! Stage two places the remainder on grid-powered servers in ascending order
//! of marginal electricity cost. Whatever still remains is reported as
//! unserved; it is never dropped silently.
//!
//! Admission caps come in two flavors. In upper-bound mode (the default)
//! a data center may admit at most `servers * e` req/s, where `e` is the
//! deadline-derived service efficiency, and slots are independent. In
//! queue-bound mode (enabled by `SlaSpec::queue_bound`) admission is limited
//! by raw service rate plus however much backlog growth the queue bound
//! still allows; the estimated backlog is threaded from slot to slot.

use crate::model::{Allocation, Config, SlotError, SlotInput, RATE_EPS};
use crate::power::{ceil_count, green_server_capacity, slot_cost};
use crate::queueing::estimate_queue;
use thiserror::Error;

/// Which admission rule the allocator applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QosMode {
    /// Per-slot deadline bound, slots independent.
    UpperBound,
    /// Backlog bound, estimated queues carried across slots.
    QueueBound,
}

impl QosMode {
    /// The mode a configuration selects: queue-bound iff a queue bound is set.
    pub fn for_config(config: &Config) -> QosMode {
        if config.sla().queue_bound.is_some() {
            QosMode::QueueBound
        } else {
            QosMode::UpperBound
        }
    }
}

/// Stage-one result: per-DC green-served rates plus the exact unallocated
/// remainder, which stage two consumes. Keeping the remainder instead of
/// recomputing it preserves an exact zero when green supply covered the
/// whole slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenAllocation {
    pub rate: Vec<f64>,
    pub leftover: f64,
}

/// Outcome of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    /// Slot index, copied from the input.
    pub slot: u64,
    pub allocation: Allocation,
    /// Total facility power over all data centers, W.
    pub total_power: f64,
    /// Grid electricity cost for the slot.
    pub brown_cost: f64,
    /// Fraction of available green power actually drawn, in [0, 1];
    /// zero when no green power was available.
    pub green_utilization: f64,
    /// Workload that no data center could admit, req/s.
    pub unserved: f64,
}

impl SlotResult {
    /// Grid share of the slot's facility power, W.
    pub fn brown_power(&self) -> f64 {
        self.allocation.brown_power_drawn.iter().sum()
    }

    /// Green share of the slot's facility power, W.
    pub fn green_power(&self) -> f64 {
        self.allocation.green_power_drawn.iter().sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("slot at position {position}: {source}")]
    InvalidSlot { position: usize, source: SlotError },
}

/// Per-DC admission state for one slot.
struct Budget {
    /// Stage-one cap: load servable on green-powered servers, req/s.
    green_cap: f64,
    /// Overall cap for the slot, req/s.
    total_cap: f64,
    /// Extra arrivals per second the queue bound still absorbs (queue mode).
    slack: f64,
    /// Servers the green supply can hold at peak draw.
    green_servers: u32,
}

fn budgets(config: &Config, slot: &SlotInput, mode: QosMode, queues: &[f64]) -> Vec<Budget> {
    let sla = config.sla();
    config
        .datacenters()
        .iter()
        .enumerate()
        .map(|(i, dc)| {
            let gs = green_server_capacity(dc, slot.green_power[i]);
            match mode {
                QosMode::UpperBound => {
                    let e = config.efficiency()[i].per_server;
                    Budget {
                        green_cap: gs as f64 * e,
                        total_cap: dc.max_servers as f64 * e,
                        slack: 0.0,
                        green_servers: gs,
                    }
                }
                QosMode::QueueBound => {
                    let bound = sla.queue_bound.expect("queue mode without bound");
                    let slack = ((bound - queues[i]) / sla.slot_seconds).max(0.0);
                    // The backlog absorbs extra admissions, but anything
                    // beyond the service rate is not served this slot, so
                    // only the total cap grows; green service never does.
                    Budget {
                        green_cap: gs as f64 * dc.mu,
                        total_cap: dc.max_servers as f64 * dc.mu + slack,
                        slack,
                        green_servers: gs,
                    }
                }
            }
        })
        .collect()
}

/// Fills capacities in the given order; returns per-index amounts and the
/// exact remainder.
fn greedy_fill(order: &[usize], caps: &[f64], demand: f64) -> (Vec<f64>, f64) {
    let mut rate = vec![0.0; caps.len()];
    let mut remaining = demand;
    for &i in order {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(caps[i]);
        if take > 0.0 {
            rate[i] = take;
            remaining -= take;
        }
    }
    (rate, remaining)
}

fn green_order(config: &Config, caps: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by(|&a, &b| {
        caps[b]
            .total_cmp(&caps[a])
            .then_with(|| config.datacenters()[a].id.cmp(&config.datacenters()[b].id))
    });
    order
}

/// Marginal grid cost of admitting one more req/s for a whole slot:
/// servers scale as 1/e (or 1/mu at the queue-mode margin, where added
/// servers run saturated), plus the utilization-proportional term.
fn marginal_cost(config: &Config, slot: &SlotInput, mode: QosMode, i: usize) -> f64 {
    let dc = &config.datacenters()[i];
    let watts_per_rate = match mode {
        QosMode::UpperBound => {
            let eff = config.efficiency()[i];
            if !eff.usable {
                return f64::INFINITY;
            }
            dc.pue * (dc.p_idle / eff.per_server + (dc.p_peak - dc.p_idle) / dc.mu)
        }
        QosMode::QueueBound => dc.pue * dc.p_peak / dc.mu,
    };
    slot_cost(slot.price[i], watts_per_rate, config.sla())
}

/// Stage one: serve as much of the slot's workload as green supplies allow,
/// preferring data centers with the largest green admission capacity (ties
/// broken by ascending id). Assumes an empty backlog in queue mode; use
/// [`simulate`] for a backlog threaded across slots.
pub fn allocate_green(config: &Config, slot: &SlotInput) -> Result<GreenAllocation, SlotError> {
    config.validate_slot(slot)?;
    let mode = QosMode::for_config(config);
    let queues = vec![0.0; config.num_datacenters()];
    Ok(allocate_green_inner(config, slot, &budgets(config, slot, mode, &queues)))
}

fn allocate_green_inner(config: &Config, slot: &SlotInput, budgets: &[Budget]) -> GreenAllocation {
    let caps: Vec<f64> = budgets.iter().map(|b| b.green_cap).collect();
    let order = green_order(config, &caps);
    let (rate, leftover) = greedy_fill(&order, &caps, slot.workload);
    GreenAllocation { rate, leftover }
}

/// Stage two: place the remainder on grid power, cheapest marginal cost
/// first (ties broken by ascending id), then account power, cost, and spill.
///
/// `green` must come from [`allocate_green`] on the same config and slot.
pub fn allocate_brown(
    config: &Config,
    slot: &SlotInput,
    green: &GreenAllocation,
) -> Result<Allocation, SlotError> {
    config.validate_slot(slot)?;
    assert_eq!(
        green.rate.len(),
        config.num_datacenters(),
        "green allocation does not match configuration"
    );
    let mode = QosMode::for_config(config);
    let queues = vec![0.0; config.num_datacenters()];
    let budgets = budgets(config, slot, mode, &queues);
    Ok(allocate_brown_inner(config, slot, green, &budgets, mode).0)
}

fn allocate_brown_inner(
    config: &Config,
    slot: &SlotInput,
    green: &GreenAllocation,
    budgets: &[Budget],
    mode: QosMode,
) -> (Allocation, f64) {
    let n = config.num_datacenters();
    let caps: Vec<f64> = (0..n).map(|i| (budgets[i].total_cap - green.rate[i]).max(0.0)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let costs: Vec<f64> = (0..n).map(|i| marginal_cost(config, slot, mode, i)).collect();
    order.sort_by(|&a, &b| {
        costs[a]
            .total_cmp(&costs[b])
            .then_with(|| config.datacenters()[a].id.cmp(&config.datacenters()[b].id))
    });
    let (brown_rate, unserved) = greedy_fill(&order, &caps, green.leftover);
    let allocation = finalize(config, slot, &green.rate, &brown_rate, budgets, mode);
    (allocation, unserved)
}

/// Splits servers and power between the green and grid supplies.
///
/// All of a data center's active servers share one utilization level; the
/// first `m_green` of them are attributed to the green supply. With
/// `m_green` never exceeding what the green supply holds at peak draw, the
/// green attribution can never exceed the available green power.
fn finalize(
    config: &Config,
    slot: &SlotInput,
    green_rate: &[f64],
    brown_rate: &[f64],
    budgets: &[Budget],
    mode: QosMode,
) -> Allocation {
    let n = config.num_datacenters();
    let sla = config.sla();
    let mut alloc = Allocation {
        green_rate: green_rate.to_vec(),
        brown_rate: brown_rate.to_vec(),
        green_servers_on: vec![0; n],
        brown_servers_on: vec![0; n],
        green_power_drawn: vec![0.0; n],
        brown_power_drawn: vec![0.0; n],
        brown_cost: 0.0,
        spilled_green: 0.0,
    };
    for i in 0..n {
        let dc = &config.datacenters()[i];
        let total = green_rate[i] + brown_rate[i];
        let (m_total, m_green) = match mode {
            QosMode::UpperBound => {
                let e = config.efficiency()[i].per_server;
                (count_servers(total, e), count_servers(green_rate[i], e))
            }
            QosMode::QueueBound => {
                // Deferring into the backlog saves servers, but green-served
                // load is never deferred: its power is free, so keep enough
                // servers on to serve it in full.
                let slack = budgets[i].slack;
                let m_green =
                    count_servers(green_rate[i], dc.mu).min(budgets[i].green_servers);
                let m_total =
                    count_servers(total - slack, dc.mu).min(dc.max_servers).max(m_green);
                (m_total, m_green)
            }
        };
        debug_assert!(m_green <= budgets[i].green_servers);
        debug_assert!(m_total <= dc.max_servers);
        let m_brown = m_total - m_green;
        let capacity = m_total as f64 * dc.mu;
        let served = total.min(capacity);
        let utilization = if m_total > 0 { served / capacity } else { 0.0 };
        let per_server = dc.pue * (dc.p_idle + (dc.p_peak - dc.p_idle) * utilization);
        let green_drawn = m_green as f64 * per_server;
        let brown_drawn = m_brown as f64 * per_server;
        alloc.green_servers_on[i] = m_green;
        alloc.brown_servers_on[i] = m_brown;
        alloc.green_power_drawn[i] = green_drawn;
        alloc.brown_power_drawn[i] = brown_drawn;
        alloc.brown_cost += slot_cost(slot.price[i], brown_drawn, sla);
        alloc.spilled_green += slot.green_power[i] - green_drawn;
    }
    alloc
}

/// Fewest servers covering `load` at `rate` req/s each, tolerant of
/// floating-point dust just above an integer multiple.
fn count_servers(load: f64, rate: f64) -> u32 {
    if load <= RATE_EPS || rate <= 0.0 {
        0
    } else {
        ceil_count((load - RATE_EPS) / rate)
    }
}

/// Runs both stages for one slot, assuming an empty backlog in queue mode.
pub fn allocate_slot(config: &Config, slot: &SlotInput) -> Result<SlotResult, SlotError> {
    config.validate_slot(slot)?;
    let mode = QosMode::for_config(config);
    let queues = vec![0.0; config.num_datacenters()];
    Ok(allocate_slot_inner(config, slot, mode, &queues))
}

fn allocate_slot_inner(
    config: &Config,
    slot: &SlotInput,
    mode: QosMode,
    queues: &[f64],
) -> SlotResult {
    let budgets = budgets(config, slot, mode, queues);
    let green = allocate_green_inner(config, slot, &budgets);
    let (allocation, unserved) = allocate_brown_inner(config, slot, &green, &budgets, mode);
    let total_power: f64 = allocation
        .green_power_drawn
        .iter()
        .zip(&allocation.brown_power_drawn)
        .map(|(g, b)| g + b)
        .sum();
    let available: f64 = slot.green_power.iter().sum();
    let drawn: f64 = allocation.green_power_drawn.iter().sum();
    let green_utilization = if available > 0.0 { drawn / available } else { 0.0 };
    SlotResult {
        slot: slot.slot,
        brown_cost: allocation.brown_cost,
        total_power,
        green_utilization,
        unserved,
        allocation,
    }
}

/// Simulates a whole trace. In upper-bound mode this is exactly
/// [`allocate_slot`] applied slot by slot; in queue-bound mode the estimated
/// backlog of each data center is carried forward, starting empty.
///
/// The first slot that fails validation aborts the run, reported with its
/// position in the input.
pub fn simulate(config: &Config, slots: &[SlotInput]) -> Result<Vec<SlotResult>, SimulateError> {
    let mode = QosMode::for_config(config);
    let mut queues = vec![0.0; config.num_datacenters()];
    let mut results = Vec::with_capacity(slots.len());
    for (position, slot) in slots.iter().enumerate() {
        config
            .validate_slot(slot)
            .map_err(|source| SimulateError::InvalidSlot { position, source })?;
        let result = allocate_slot_inner(config, slot, mode, &queues);
        if mode == QosMode::QueueBound {
            for (i, queue) in queues.iter_mut().enumerate() {
                let dc = &config.datacenters()[i];
                let served_on = result.allocation.green_servers_on[i]
                    + result.allocation.brown_servers_on[i];
                let load =
                    result.allocation.green_rate[i] + result.allocation.brown_rate[i];
                *queue = estimate_queue(*queue, dc, served_on, load, config.sla());
            }
        }
        results.push(result);
    }
    Ok(results)
}
