//! Independent oracles and fixture builders for the acceptance suite.
//!
//! Everything here recomputes expected values from first principles (cut
//! enumeration, exhaustive search, direct formula evaluation) without
//! touching the library's solvers, so agreement is meaningful.

use glb_core::model::{DataCenterSpec, SlaSpec};

pub fn dc(
    id: &str,
    mu: f64,
    max_servers: u32,
    p_idle: f64,
    p_peak: f64,
    pue: f64,
    d_net: f64,
) -> DataCenterSpec {
    DataCenterSpec { id: id.to_owned(), mu, max_servers, p_idle, p_peak, pue, d_net }
}

pub fn sla(deadline: f64, slot_seconds: f64) -> SlaSpec {
    SlaSpec { deadline, slot_seconds, queue_bound: None }
}

/// Capacity of the minimum source/sink cut, by enumerating all 2^(2n)
/// placements of the paired per-DC nodes. The graph shape is fixed: source
/// feeds each DC's inner node at capacity `aw[i]`, the inner pair is joined
/// at `ub[i]`, and the outer node reaches the sink at a capacity exceeding
/// any possible flow.
pub fn min_cut_enumeration(aw: &[f64], ub: &[f64]) -> f64 {
    let n = aw.len();
    assert!(n <= 8, "enumeration is exponential");
    let sentinel: f64 = aw.iter().sum::<f64>() + 1.0;
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << (2 * n) {
        let source_side = |node: usize| mask >> node & 1 == 1;
        let mut cut = 0.0;
        for i in 0..n {
            let inner = source_side(2 * i);
            let outer = source_side(2 * i + 1);
            if !inner {
                cut += aw[i];
            }
            if inner && !outer {
                cut += ub[i];
            }
            if outer {
                cut += sentinel;
            }
        }
        if cut < best {
            best = cut;
        }
    }
    best
}

/// The routable workload has a closed form on this graph shape: each DC
/// passes min(aw, ub) independently.
pub fn closed_form_flow(aw: &[f64], ub: &[f64]) -> f64 {
    aw.iter().zip(ub).map(|(&a, &u)| a.min(u)).sum()
}

/// Grid cost of one data center's slot under the even-split convention,
/// recomputed from the definitions: servers count against the deadline
/// capacity `e`, every active server runs at the site's shared utilization,
/// and the first `m_green` of them are paid by the green supply.
#[allow(clippy::too_many_arguments)]
pub fn even_split_brown_cost(
    dc: &DataCenterSpec,
    sla: &SlaSpec,
    e: f64,
    green_servers: u32,
    lg: f64,
    lb: f64,
    price: f64,
) -> f64 {
    let total = lg + lb;
    if total <= 0.0 {
        return 0.0;
    }
    let m_total = ((total / e).ceil() as u32).min(dc.max_servers);
    let m_green = (((lg / e).ceil() as u32).min(green_servers)).min(m_total);
    let m_brown = m_total - m_green;
    let utilization = total / (m_total as f64 * dc.mu);
    let per_server = dc.pue * (dc.p_idle + (dc.p_peak - dc.p_idle) * utilization);
    price * (m_brown as f64 * per_server / 1000.0) * (sla.slot_seconds / 3600.0)
}
