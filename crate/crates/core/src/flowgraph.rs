//! Dispatch feasibility as max-flow, and the power/green-utilization
//! tradeoff.
//!
//! One slot's dispatch options form a small flow network: a source (the
//! front-end) connects to an ingress node per data center with capacity
//! `aw_i` (the workload the link to that DC may carry), each ingress node
//! connects to its egress node with capacity `ub_i` (the admission bound of
//! the DC itself), and the egress nodes connect to a collector sink with
//! unbounded capacity. The whole workload can be dispatched exactly when the
//! max flow, equivalently the min cut, reaches the demand.
//!
//! The same capacity data drives the tradeoff analysis: serving one req/s at
//! data center i commits `1/eta_i` watts of peak facility power, of which
//! the green supply covers the share placed on green-capable servers.
//! [`min_power_at_utilization`] finds the cheapest total power that serves
//! everything while drawing at least a target fraction of the available
//! green power, and [`tradeoff_curve`] sweeps that target over a grid.

use crate::model::{Config, SlotError, SlotInput, TradeoffPoint, RATE_EPS};
use crate::power::green_server_capacity;
use thiserror::Error;

/// One directed edge of the dispatch network.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    /// Residual arithmetic uses this value even for unbounded edges, where
    /// it is a sentinel strictly larger than any possible flow.
    pub capacity: f64,
    /// True for collector edges whose capacity is conceptually infinite.
    pub unbounded: bool,
}

/// The dispatch network of one slot. Immutable once built; node ids are
/// dense, with the source first and the sink last.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    node_count: usize,
    edges: Vec<FlowEdge>,
    source: usize,
    sink: usize,
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Ingress node of data center `i`.
    pub fn dc_in(&self, i: usize) -> usize {
        1 + 2 * i
    }

    /// Egress node of data center `i`.
    pub fn dc_out(&self, i: usize) -> usize {
        2 + 2 * i
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("aw has {aw} entries but ub has {ub}")]
    LengthMismatch { aw: usize, ub: usize },
    #[error("{which}[{index}] must be finite and >= 0, got {value}")]
    BadCapacity { which: &'static str, index: usize, value: f64 },
    #[error("demand must be finite and >= 0, got {value}")]
    BadDemand { value: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum TradeoffError {
    #[error(transparent)]
    Slot(#[from] SlotError),
    #[error("utilization target must lie in [0, 1], got {value}")]
    BadTarget { value: f64 },
    #[error("tradeoff grid needs at least 2 points, got {points}")]
    GridTooSmall { points: usize },
    #[error("top_k must select at least one data center")]
    EmptySelection,
}

/// Builds the dispatch network for per-DC link capacities `aw` and
/// admission bounds `ub`.
pub fn build_graph(aw: &[f64], ub: &[f64]) -> Result<FlowGraph, FlowError> {
    if aw.len() != ub.len() {
        return Err(FlowError::LengthMismatch { aw: aw.len(), ub: ub.len() });
    }
    let check = |which: &'static str, values: &[f64]| -> Result<(), FlowError> {
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(FlowError::BadCapacity { which, index, value });
            }
        }
        Ok(())
    };
    check("aw", aw)?;
    check("ub", ub)?;

    let n = aw.len();
    let total_aw: f64 = aw.iter().sum();
    if !total_aw.is_finite() {
        return Err(FlowError::BadCapacity { which: "aw", index: 0, value: total_aw });
    }
    // Any cut through a collector edge must cost more than the whole inflow.
    let sentinel = total_aw + 1.0;
    let source = 0;
    let sink = 2 * n + 1;
    let mut edges = Vec::with_capacity(3 * n);
    for i in 0..n {
        edges.push(FlowEdge { from: source, to: 1 + 2 * i, capacity: aw[i], unbounded: false });
        edges.push(FlowEdge { from: 1 + 2 * i, to: 2 + 2 * i, capacity: ub[i], unbounded: false });
        edges.push(FlowEdge { from: 2 + 2 * i, to: sink, capacity: sentinel, unbounded: true });
    }
    Ok(FlowGraph { node_count: 2 * n + 2, edges, source, sink })
}

struct Residual {
    to: usize,
    cap: f64,
    rev: usize,
}

/// Maximum flow from source to sink, by Dinic's algorithm on the residual
/// network. Works for any capacities, not just this crate's three-layer
/// graphs; capacities within [`RATE_EPS`] of zero count as saturated.
pub fn max_flow(graph: &FlowGraph) -> f64 {
    let n = graph.node_count;
    let mut adj: Vec<Vec<Residual>> = (0..n).map(|_| Vec::new()).collect();
    for e in &graph.edges {
        let fwd = adj[e.from].len();
        let back = adj[e.to].len();
        adj[e.from].push(Residual { to: e.to, cap: e.capacity, rev: back });
        adj[e.to].push(Residual { to: e.from, cap: 0.0, rev: fwd });
    }

    let mut total = 0.0;
    let mut level = vec![usize::MAX; n];
    let mut queue = Vec::with_capacity(n);
    loop {
        // BFS: layer the residual graph.
        level.fill(usize::MAX);
        level[graph.source] = 0;
        queue.clear();
        queue.push(graph.source);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for e in &adj[u] {
                if e.cap > RATE_EPS && level[e.to] == usize::MAX {
                    level[e.to] = level[u] + 1;
                    queue.push(e.to);
                }
            }
        }
        if level[graph.sink] == usize::MAX {
            return total;
        }

        // DFS blocking flow with a current-arc pointer per node.
        let mut iter = vec![0usize; n];
        loop {
            let pushed = dfs(&mut adj, &level, &mut iter, graph.source, graph.sink, f64::INFINITY);
            if pushed <= RATE_EPS {
                break;
            }
            total += pushed;
        }
    }
}

fn dfs(
    adj: &mut [Vec<Residual>],
    level: &[usize],
    iter: &mut [usize],
    u: usize,
    sink: usize,
    limit: f64,
) -> f64 {
    if u == sink {
        return limit;
    }
    while iter[u] < adj[u].len() {
        let (to, cap, rev) = {
            let e = &adj[u][iter[u]];
            (e.to, e.cap, e.rev)
        };
        if cap > RATE_EPS && level[to] == level[u] + 1 {
            let pushed = dfs(adj, level, iter, to, sink, limit.min(cap));
            if pushed > RATE_EPS {
                let idx = iter[u];
                adj[u][idx].cap -= pushed;
                adj[to][rev].cap += pushed;
                return pushed;
            }
        }
        iter[u] += 1;
    }
    0.0
}

/// Whether `demand` req/s can be dispatched through links of capacity `aw`
/// into data centers admitting `ub`, within the [`RATE_EPS`] tolerance.
pub fn feasible(aw: &[f64], ub: &[f64], demand: f64) -> Result<bool, FlowError> {
    if !(demand.is_finite() && demand >= 0.0) {
        return Err(FlowError::BadDemand { value: demand });
    }
    let graph = build_graph(aw, ub)?;
    Ok(max_flow(&graph) >= demand - RATE_EPS)
}

/// One unit of serving capability in the tradeoff LP: up to `limit` req/s
/// at `watts` peak facility power per req/s, drawing green power iff
/// `green`.
struct Segment {
    dc: usize,
    limit: f64,
    watts: f64,
    green: bool,
}

/// A vertex of the power/draw frontier.
#[derive(Debug, Clone, Copy)]
struct Vertex {
    draw: f64,
    power: f64,
}

struct Frontier {
    vertices: Vec<Vertex>,
    /// Σ green power offered at the considered data centers, W.
    available_green: f64,
    /// True when the considered data centers can serve the whole workload.
    serves_all: bool,
}

/// Greedy fill order for multiplier `theta`: ascending Lagrangian key, green
/// segments before brown on ties, higher-draw green segments first, data
/// center index as the final stable tie-break.
fn fill(segments: &[Segment], theta: f64, demand: f64) -> Vertex {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    let key = |s: &Segment| if s.green { (1.0 - theta) * s.watts } else { s.watts };
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&segments[a], &segments[b]);
        key(sa)
            .total_cmp(&key(sb))
            .then_with(|| sb.green.cmp(&sa.green))
            .then_with(|| {
                if sa.green {
                    sb.watts.total_cmp(&sa.watts)
                } else {
                    sa.watts.total_cmp(&sb.watts)
                }
            })
            .then_with(|| sa.dc.cmp(&sb.dc))
    });
    let mut remaining = demand;
    let mut power = 0.0;
    let mut draw = 0.0;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let s = &segments[i];
        let take = remaining.min(s.limit);
        if take > 0.0 {
            power += take * s.watts;
            if s.green {
                draw += take * s.watts;
            }
            remaining -= take;
        }
    }
    Vertex { draw, power }
}

/// Builds the lower frontier of achievable (green draw, total power) pairs
/// for serving the slot's workload on the selected data centers.
///
/// Serving rate x at data center i commits x/eta_i watts; rate placed on
/// green-capable servers draws the same amount from the green supply. The
/// frontier vertices are the greedy fills at every breakpoint of the
/// Lagrangian ordering; between adjacent vertices the frontier is linear,
/// so mixing two fills realizes any intermediate draw optimally.
fn frontier(config: &Config, slot: &SlotInput, selected: &[usize]) -> Frontier {
    let mut segments = Vec::new();
    let mut total_ub = 0.0;
    let mut available_green = 0.0;
    for &i in selected {
        let dc = &config.datacenters()[i];
        available_green += slot.green_power[i];
        let eff = config.efficiency()[i];
        if !eff.usable || dc.max_servers == 0 {
            continue;
        }
        let e = eff.per_server;
        let watts = dc.pue * dc.p_peak / e;
        let green_cap = green_server_capacity(dc, slot.green_power[i]) as f64 * e;
        let ub = dc.max_servers as f64 * e;
        total_ub += ub;
        if green_cap > 0.0 {
            segments.push(Segment { dc: i, limit: green_cap, watts, green: true });
        }
        if ub - green_cap > 0.0 {
            segments.push(Segment { dc: i, limit: ub - green_cap, watts, green: false });
        }
    }

    let serves_all = slot.workload <= total_ub + RATE_EPS;
    let demand = slot.workload.min(total_ub);

    // Breakpoints where a green segment's key crosses a brown segment's.
    let mut thetas = vec![0.0, 1.0];
    for g in segments.iter().filter(|s| s.green) {
        for b in segments.iter().filter(|s| !s.green) {
            if b.watts < g.watts {
                thetas.push(1.0 - b.watts / g.watts);
            }
        }
    }
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();

    let vertices = thetas.iter().map(|&t| fill(&segments, t, demand)).collect();
    Frontier { vertices, available_green, serves_all }
}

fn point_from(frontier: &Frontier, target: f64) -> TradeoffPoint {
    let shape = |draw: f64, power: f64| {
        let achieved = if frontier.available_green > 0.0 {
            draw / frontier.available_green
        } else {
            0.0
        };
        TradeoffPoint {
            target_utilization: target,
            achieved_utilization: achieved,
            total_power: power,
            brown_power: power - draw,
            feasible: frontier.serves_all && achieved >= target - 1e-9,
        }
    };

    let need = target * frontier.available_green;
    let tolerance = 1e-9 * frontier.available_green.max(1.0);
    let found = frontier.vertices.iter().position(|v| v.draw >= need - tolerance);
    match found {
        None => {
            // Not even the max-draw fill reaches the target; report it.
            let last = frontier.vertices.last().expect("frontier has the theta=0 vertex");
            shape(last.draw, last.power)
        }
        Some(0) => {
            let v = frontier.vertices[0];
            shape(v.draw, v.power)
        }
        Some(j) => {
            let lo = frontier.vertices[j - 1];
            let hi = frontier.vertices[j];
            let span = hi.draw - lo.draw;
            if span <= tolerance {
                shape(hi.draw, hi.power)
            } else {
                let t = (need - lo.draw) / span;
                shape(need, lo.power + t * (hi.power - lo.power))
            }
        }
    }
}

/// Cheapest total facility power that serves the entire workload while
/// drawing at least `target * (available green power)` from green supplies.
///
/// When the target cannot be met, the returned point carries the best
/// achievable utilization and `feasible = false`.
pub fn min_power_at_utilization(
    config: &Config,
    slot: &SlotInput,
    target: f64,
) -> Result<TradeoffPoint, TradeoffError> {
    config.validate_slot(slot)?;
    if !(target.is_finite() && (0.0..=1.0).contains(&target)) {
        return Err(TradeoffError::BadTarget { value: target });
    }
    let all: Vec<usize> = (0..config.num_datacenters()).collect();
    Ok(point_from(&frontier(config, slot, &all), target))
}

/// Sweeps [`min_power_at_utilization`] over `grid_points` evenly spaced
/// targets from 0 to 1 inclusive.
pub fn tradeoff_curve(
    config: &Config,
    slot: &SlotInput,
    grid_points: usize,
) -> Result<Vec<TradeoffPoint>, TradeoffError> {
    tradeoff_curve_top_k(config, slot, grid_points, None)
}

/// Like [`tradeoff_curve`], but optionally restricted to the `top_k` data
/// centers by power-normalized efficiency (ties by ascending id). Green
/// power at unselected data centers is out of reach and out of the
/// utilization denominator.
pub fn tradeoff_curve_top_k(
    config: &Config,
    slot: &SlotInput,
    grid_points: usize,
    top_k: Option<usize>,
) -> Result<Vec<TradeoffPoint>, TradeoffError> {
    config.validate_slot(slot)?;
    if grid_points < 2 {
        return Err(TradeoffError::GridTooSmall { points: grid_points });
    }
    let selected = select_top_k(config, top_k)?;
    let frontier = frontier(config, slot, &selected);
    let last = (grid_points - 1) as f64;
    Ok((0..grid_points).map(|k| point_from(&frontier, k as f64 / last)).collect())
}

fn select_top_k(config: &Config, top_k: Option<usize>) -> Result<Vec<usize>, TradeoffError> {
    let n = config.num_datacenters();
    let mut order: Vec<usize> = (0..n).collect();
    match top_k {
        None => Ok(order),
        Some(k) => {
            if k == 0 {
                return Err(TradeoffError::EmptySelection);
            }
            order.sort_by(|&a, &b| {
                config.efficiency()[b]
                    .per_watt
                    .total_cmp(&config.efficiency()[a].per_watt)
                    .then_with(|| {
                        config.datacenters()[a].id.cmp(&config.datacenters()[b].id)
                    })
            });
            order.truncate(k.min(n));
            order.sort_unstable();
            Ok(order)
        }
    }
}
