//! Python bindings for glb-core, exposed as the `glbsim` module.
//!
//! The surface mirrors the Rust library: build a `Config` from `DataCenter`
//! and `Sla` values, then call `simulate`, `allocate_slot`, `tradeoff_curve`,
//! `feasible`, or `mean_delay`. Traces are plain Python lists; per-DC series
//! are lists of per-slot rows in configuration order.

use glb_core::model::{DataCenterSpec, SlaSpec, SlotInput};
use glb_core::queueing::MeanDelay;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One data center site: service rate, fleet size, power model, and the
/// network delay from the front-end.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct DataCenter {
    spec: DataCenterSpec,
}

#[pymethods]
impl DataCenter {
    #[new]
    fn new(
        id: String,
        mu: f64,
        max_servers: u32,
        p_idle_w: f64,
        p_peak_w: f64,
        pue: f64,
        d_net_s: f64,
    ) -> Self {
        DataCenter {
            spec: DataCenterSpec {
                id,
                mu,
                max_servers,
                p_idle: p_idle_w,
                p_peak: p_peak_w,
                pue,
                d_net: d_net_s,
            },
        }
    }

    #[getter]
    fn id(&self) -> String {
        self.spec.id.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "DataCenter(id={:?}, mu={}, max_servers={}, p_idle_w={}, p_peak_w={}, pue={}, d_net_s={})",
            self.spec.id,
            self.spec.mu,
            self.spec.max_servers,
            self.spec.p_idle,
            self.spec.p_peak,
            self.spec.pue,
            self.spec.d_net,
        )
    }
}

/// Service-level agreement: the mean-delay deadline, the slot length, and an
/// optional backlog bound that switches simulation into queue-bound mode.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Sla {
    spec: SlaSpec,
}

#[pymethods]
impl Sla {
    #[new]
    #[pyo3(signature = (deadline_s, slot_s, queue_bound=None))]
    fn new(deadline_s: f64, slot_s: f64, queue_bound: Option<f64>) -> Self {
        Sla { spec: SlaSpec { deadline: deadline_s, slot_seconds: slot_s, queue_bound } }
    }

    fn __repr__(&self) -> String {
        format!(
            "Sla(deadline_s={}, slot_s={}, queue_bound={:?})",
            self.spec.deadline, self.spec.slot_seconds, self.spec.queue_bound
        )
    }
}

/// A validated fleet configuration. Construction checks every parameter and
/// raises ValueError on the first violation.
#[pyclass(frozen)]
struct Config {
    inner: glb_core::Config,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (datacenters, sla, carbon_intensity=None, currency=None))]
    fn new(
        datacenters: Vec<DataCenter>,
        sla: Sla,
        carbon_intensity: Option<f64>,
        currency: Option<String>,
    ) -> PyResult<Self> {
        let specs = datacenters.into_iter().map(|d| d.spec).collect();
        let mut inner = glb_core::validate_config(specs, sla.spec).map_err(to_py_err)?;
        if let Some(ci) = carbon_intensity {
            inner = inner.with_carbon_intensity(ci).map_err(to_py_err)?;
        }
        if let Some(currency) = currency {
            inner = inner.with_currency(currency);
        }
        Ok(Config { inner })
    }

    #[getter]
    fn num_datacenters(&self) -> usize {
        self.inner.num_datacenters()
    }

    #[getter]
    fn dc_ids(&self) -> Vec<String> {
        self.inner.datacenters().iter().map(|d| d.id.clone()).collect()
    }

    /// Deadline-respecting service rate per server for each data center,
    /// req/s; zero when the site cannot meet the deadline at all.
    #[getter]
    fn per_server_rates(&self) -> Vec<f64> {
        self.inner.efficiency().iter().map(|e| e.per_server).collect()
    }

    fn __repr__(&self) -> String {
        format!("Config({} datacenters)", self.inner.num_datacenters())
    }
}

/// Outcome of one allocated slot.
#[pyclass(frozen)]
struct SlotResult {
    inner: glb_core::SlotResult,
}

#[pymethods]
impl SlotResult {
    #[getter]
    fn slot(&self) -> u64 {
        self.inner.slot
    }

    #[getter]
    fn total_power_w(&self) -> f64 {
        self.inner.total_power
    }

    #[getter]
    fn brown_power_w(&self) -> f64 {
        self.inner.brown_power()
    }

    #[getter]
    fn green_power_w(&self) -> f64 {
        self.inner.green_power()
    }

    #[getter]
    fn green_utilization(&self) -> f64 {
        self.inner.green_utilization
    }

    #[getter]
    fn brown_cost(&self) -> f64 {
        self.inner.brown_cost
    }

    #[getter]
    fn unserved(&self) -> f64 {
        self.inner.unserved
    }

    #[getter]
    fn green_rate(&self) -> Vec<f64> {
        self.inner.allocation.green_rate.clone()
    }

    #[getter]
    fn brown_rate(&self) -> Vec<f64> {
        self.inner.allocation.brown_rate.clone()
    }

    #[getter]
    fn green_servers_on(&self) -> Vec<u32> {
        self.inner.allocation.green_servers_on.clone()
    }

    #[getter]
    fn brown_servers_on(&self) -> Vec<u32> {
        self.inner.allocation.brown_servers_on.clone()
    }

    #[getter]
    fn spilled_green_w(&self) -> f64 {
        self.inner.allocation.spilled_green
    }

    fn __repr__(&self) -> String {
        format!(
            "SlotResult(slot={}, total_power_w={:.1}, green_utilization={:.3}, unserved={:.3})",
            self.inner.slot,
            self.inner.total_power,
            self.inner.green_utilization,
            self.inner.unserved,
        )
    }
}

/// One point on the total-power versus green-utilization curve.
#[pyclass(frozen)]
struct TradeoffPoint {
    inner: glb_core::TradeoffPoint,
}

#[pymethods]
impl TradeoffPoint {
    #[getter]
    fn target_utilization(&self) -> f64 {
        self.inner.target_utilization
    }

    #[getter]
    fn achieved_utilization(&self) -> f64 {
        self.inner.achieved_utilization
    }

    #[getter]
    fn total_power_w(&self) -> f64 {
        self.inner.total_power
    }

    #[getter]
    fn brown_power_w(&self) -> f64 {
        self.inner.brown_power
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }

    fn __repr__(&self) -> String {
        format!(
            "TradeoffPoint(target={:.3}, achieved={:.3}, total_power_w={:.1}, feasible={})",
            self.inner.target_utilization,
            self.inner.achieved_utilization,
            self.inner.total_power,
            self.inner.feasible,
        )
    }
}

/// Mean sojourn time in seconds for a processor-sharing site serving `load`
/// req/s on `servers_on` servers; infinity when the load saturates them.
#[pyfunction]
fn mean_delay(dc: &DataCenter, servers_on: u32, load: f64) -> PyResult<f64> {
    match glb_core::mean_delay(&dc.spec, servers_on, load).map_err(to_py_err)? {
        MeanDelay::Bounded(s) => Ok(s),
        MeanDelay::Unbounded => Ok(f64::INFINITY),
    }
}

fn slot_input(slot: u64, workload: f64, green_w: Vec<f64>, price: Vec<f64>) -> SlotInput {
    SlotInput { slot, workload, green_power: green_w, price }
}

/// Allocate a single slot: green stage then brown stage.
#[pyfunction]
#[pyo3(signature = (config, workload, green_w, price, slot=0))]
fn allocate_slot(
    config: &Config,
    workload: f64,
    green_w: Vec<f64>,
    price: Vec<f64>,
    slot: u64,
) -> PyResult<SlotResult> {
    let input = slot_input(slot, workload, green_w, price);
    let inner = glb_core::allocate_slot(&config.inner, &input).map_err(to_py_err)?;
    Ok(SlotResult { inner })
}

/// Run the allocator over a whole horizon. `green_w` and `price` hold one
/// row per slot, one value per data center.
#[pyfunction]
fn simulate(
    config: &Config,
    workload: Vec<f64>,
    green_w: Vec<Vec<f64>>,
    price: Vec<Vec<f64>>,
) -> PyResult<Vec<SlotResult>> {
    if green_w.len() != workload.len() || price.len() != workload.len() {
        return Err(PyValueError::new_err(format!(
            "trace lengths differ: workload {}, green {}, price {}",
            workload.len(),
            green_w.len(),
            price.len()
        )));
    }
    let slots: Vec<SlotInput> = workload
        .into_iter()
        .zip(green_w)
        .zip(price)
        .enumerate()
        .map(|(i, ((w, g), p))| slot_input(i as u64, w, g, p))
        .collect();
    let results = glb_core::simulate(&config.inner, &slots).map_err(to_py_err)?;
    Ok(results.into_iter().map(|inner| SlotResult { inner }).collect())
}

/// Minimum-power allocations for `grid` green-utilization targets in [0, 1].
#[pyfunction]
#[pyo3(signature = (config, workload, green_w, price, grid=21, top_k=None))]
fn tradeoff_curve(
    config: &Config,
    workload: f64,
    green_w: Vec<f64>,
    price: Vec<f64>,
    grid: usize,
    top_k: Option<usize>,
) -> PyResult<Vec<TradeoffPoint>> {
    let input = slot_input(0, workload, green_w, price);
    let points = glb_core::flowgraph::tradeoff_curve_top_k(&config.inner, &input, grid, top_k)
        .map_err(to_py_err)?;
    Ok(points.into_iter().map(|inner| TradeoffPoint { inner }).collect())
}

/// Maximum routable workload (req/s) given per-DC routable limits `aw` and
/// service capacities `ub`.
#[pyfunction]
fn max_flow(aw: Vec<f64>, ub: Vec<f64>) -> PyResult<f64> {
    let graph = glb_core::build_graph(&aw, &ub).map_err(to_py_err)?;
    Ok(glb_core::max_flow(&graph))
}

/// Whether `demand` req/s can be routed within the limits `aw` and `ub`.
#[pyfunction]
fn feasible(aw: Vec<f64>, ub: Vec<f64>, demand: f64) -> PyResult<bool> {
    glb_core::feasible(&aw, &ub, demand).map_err(to_py_err)
}

/// Synthetic aligned traces: (workload, green_w, price), with per-slot rows.
#[pyfunction]
fn gen_traces(seed: u64, slots: usize, dcs: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let t = glb_core::trace::gen_traces(seed, slots, dcs);
    (t.workload, t.green, t.price)
}

#[pymodule]
fn glbsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DataCenter>()?;
    m.add_class::<Sla>()?;
    m.add_class::<Config>()?;
    m.add_class::<SlotResult>()?;
    m.add_class::<TradeoffPoint>()?;
    m.add_function(wrap_pyfunction!(mean_delay, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_slot, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_curve, m)?)?;
    m.add_function(wrap_pyfunction!(max_flow, m)?)?;
    m.add_function(wrap_pyfunction!(feasible, m)?)?;
    m.add_function(wrap_pyfunction!(gen_traces, m)?)?;
    Ok(())
}
