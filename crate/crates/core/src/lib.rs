//! Trace-driven simulation and optimization of geographical load balancing
//! across data centers powered by a mix of on-site green energy and grid
//! (brown) electricity.
//!
//! A front-end dispatcher splits each time slot's aggregate workload across
//! data centers. Every data center is described by a static
//! [`model::DataCenterSpec`]; per-slot inputs (workload, available green
//! power, electricity price) arrive as [`model::SlotInput`]s, usually loaded
//! from CSV traces. The allocator serves as much workload as possible on
//! green-powered servers first, then places the remainder on grid-powered
//! servers where electricity is cheapest, subject to a response-time SLA
//! enforced through a processor-sharing delay model ([`queueing`]).
//!
//! Two further views complement the slot-by-slot simulation:
//!
//! * [`flowgraph`] casts one slot's dispatch limits as a flow network and
//!   answers feasibility questions by max-flow/min-cut.
//! * [`flowgraph::tradeoff_curve`] quantifies how much extra total power must
//!   be spent to push green-energy utilization toward 100%.
//!
//! The `glb` binary wraps all of this behind `simulate`, `tradeoff`,
//! `feasible`, and `gen-traces` subcommands.

pub mod allocator;
pub mod config;
pub mod flowgraph;
pub mod model;
pub mod power;
pub mod queueing;
pub mod trace;

pub use allocator::{allocate_brown, allocate_green, allocate_slot, simulate, QosMode, SlotResult};
pub use flowgraph::{build_graph, feasible, max_flow, min_power_at_utilization, tradeoff_curve};
pub use model::{validate_config, Allocation, Config, DataCenterSpec, SlaSpec, SlotInput, TradeoffPoint};
pub use queueing::{mean_delay, service_efficiency, Efficiency, MeanDelay};
