//! Trace files: loading, synthetic generation, and result emission.
//!
//! All traces are small CSV files with a leading `slot` column. The workload
//! file has a single `workload` column; green-power and price files carry
//! one column per data center, named by its id, so several data centers may
//! share one file or each point at their own. Result emission mirrors the
//! same spirit: one row per slot (or per tradeoff target), numbers rounded
//! to six significant digits, and the file written atomically so a failed
//! run never leaves a partial file behind.

use crate::allocator::SlotResult;
use crate::config::FileConfig;
use crate::model::{SlotInput, TradeoffPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// A loaded (or generated) set of aligned traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    /// Slot ids, as found in the workload trace.
    pub slot_ids: Vec<u64>,
    /// Aggregate workload per slot, req/s, already scaled.
    pub workload: Vec<f64>,
    /// Green power per slot and data center, W.
    pub green: Vec<Vec<f64>>,
    /// Electricity price per slot and data center, currency/kWh.
    pub price: Vec<Vec<f64>>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.slot_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_ids.is_empty()
    }

    pub fn dcs(&self) -> usize {
        self.green.first().map_or(0, Vec::len)
    }

    /// The per-slot allocator inputs this trace set describes.
    pub fn slot_inputs(&self) -> Vec<SlotInput> {
        (0..self.len())
            .map(|i| SlotInput {
                slot: self.slot_ids[i],
                workload: self.workload[i],
                green_power: self.green[i].clone(),
                price: self.price[i].clone(),
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("trace {path}: {detail}")]
    BadHeader { path: PathBuf, detail: String },
    #[error("trace {path} has no column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("trace {path} line {line}: cannot parse {value:?}")]
    Parse { path: PathBuf, line: usize, value: String },
    #[error("trace {path} line {line}: value {value} must be finite and >= 0")]
    BadValue { path: PathBuf, line: usize, value: f64 },
    #[error("trace length mismatch: {a_path} has {a_len} slots, {b_path} has {b_len}")]
    Ragged { a_path: PathBuf, a_len: usize, b_path: PathBuf, b_len: usize },
    #[error("trace {a_path} and {b_path} disagree on slot id at row {row}")]
    SlotMismatch { a_path: PathBuf, b_path: PathBuf, row: usize },
}

struct ParsedTrace {
    path: PathBuf,
    slot_ids: Vec<u64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl ParsedTrace {
    fn column(&self, name: &str) -> Result<&[f64], TraceError> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| TraceError::MissingColumn {
                path: self.path.clone(),
                column: name.to_owned(),
            })
    }
}

fn parse_trace(path: &Path) -> Result<ParsedTrace, TraceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| TraceError::Io { path: path.to_owned(), source })?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| TraceError::BadHeader {
        path: path.to_owned(),
        detail: "file is empty".to_owned(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.first() != Some(&"slot") {
        return Err(TraceError::BadHeader {
            path: path.to_owned(),
            detail: format!("first column must be \"slot\", got {:?}", names.first().unwrap_or(&"")),
        });
    }
    if names.len() < 2 {
        return Err(TraceError::BadHeader {
            path: path.to_owned(),
            detail: "expected at least one value column".to_owned(),
        });
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(TraceError::BadHeader {
                path: path.to_owned(),
                detail: format!("duplicate column {n:?}"),
            });
        }
    }

    let mut slot_ids = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> =
        names[1..].iter().map(|n| ((*n).to_owned(), Vec::new())).collect();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(TraceError::BadHeader {
                path: path.to_owned(),
                detail: format!("row {line_no} has {} fields, expected {}", fields.len(), names.len()),
            });
        }
        let slot: u64 = fields[0].parse().map_err(|_| TraceError::Parse {
            path: path.to_owned(),
            line: line_no,
            value: fields[0].to_owned(),
        })?;
        slot_ids.push(slot);
        for (col, field) in columns.iter_mut().zip(&fields[1..]) {
            let value: f64 = field.parse().map_err(|_| TraceError::Parse {
                path: path.to_owned(),
                line: line_no,
                value: (*field).to_owned(),
            })?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(TraceError::BadValue { path: path.to_owned(), line: line_no, value });
            }
            col.1.push(value);
        }
    }
    Ok(ParsedTrace { path: path.to_owned(), slot_ids, columns })
}

/// Loads the workload, green-power, and price traces a configuration points
/// at, checking that all series are aligned slot for slot. The workload is
/// scaled by the configured factor.
pub fn load_traces(cfg: &FileConfig) -> Result<TraceSet, TraceError> {
    // Several data centers may point at the same file; parse each file once.
    fn load<'a>(
        cache: &'a mut HashMap<PathBuf, ParsedTrace>,
        path: &Path,
    ) -> Result<&'a ParsedTrace, TraceError> {
        if !cache.contains_key(path) {
            let parsed = parse_trace(path)?;
            cache.insert(path.to_owned(), parsed);
        }
        Ok(&cache[path])
    }

    let mut cache: HashMap<PathBuf, ParsedTrace> = HashMap::new();
    let workload_trace = load(&mut cache, &cfg.workload_trace)?;
    let slot_ids = workload_trace.slot_ids.clone();
    let workload: Vec<f64> =
        workload_trace.column("workload")?.iter().map(|w| w * cfg.scale).collect();
    let reference = (cfg.workload_trace.clone(), slot_ids.len());

    let n = cfg.green_traces.len();
    let mut green = vec![vec![0.0; n]; slot_ids.len()];
    let mut price = vec![vec![0.0; n]; slot_ids.len()];
    for (i, id) in cfg.dc_ids().iter().enumerate() {
        for (path, target) in
            [(&cfg.green_traces[i], &mut green), (&cfg.price_traces[i], &mut price)]
        {
            let trace = load(&mut cache, path)?;
            if trace.slot_ids.len() != reference.1 {
                return Err(TraceError::Ragged {
                    a_path: reference.0.clone(),
                    a_len: reference.1,
                    b_path: trace.path.clone(),
                    b_len: trace.slot_ids.len(),
                });
            }
            if let Some(row) = (0..slot_ids.len()).find(|&r| trace.slot_ids[r] != slot_ids[r]) {
                return Err(TraceError::SlotMismatch {
                    a_path: reference.0.clone(),
                    b_path: trace.path.clone(),
                    row: row + 2, // header + 1-based data row
                });
            }
            let column = trace.column(id)?;
            for (slot, &value) in column.iter().enumerate() {
                target[slot][i] = value;
            }
        }
    }
    Ok(TraceSet { slot_ids, workload, green, price })
}

/// Shapes of synthetic series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Daily workload rhythm with a single afternoon peak.
    Diurnal,
    /// Bounded random walk, clipped at zero: erratic renewable supply.
    Wind,
    /// Mean-reverting positive series: an electricity spot price.
    Market,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown trace profile {0:?}, expected diurnal, wind, or market")]
pub struct UnknownProfile(String);

impl FromStr for Profile {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "diurnal" => Ok(Profile::Diurnal),
            "wind" => Ok(Profile::Wind),
            "market" => Ok(Profile::Market),
            other => Err(UnknownProfile(other.to_owned())),
        }
    }
}

/// Generates `count` independent non-negative series of `slots` values each.
/// The same seed always produces the same series, on every platform.
pub fn gen_series(seed: u64, slots: usize, count: usize, profile: Profile) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| gen_one(&mut rng, slots, profile)).collect()
}

fn gen_one(rng: &mut ChaCha8Rng, slots: usize, profile: Profile) -> Vec<f64> {
    match profile {
        Profile::Diurnal => {
            let base = 1000.0;
            let mut out = Vec::with_capacity(slots);
            let mut amplitude = 0.0;
            for t in 0..slots {
                let hour = t % 24;
                if hour == 0 || t == 0 {
                    amplitude = base * rng.random_range(0.9..1.1);
                }
                // Afternoon peak at hour 14; the jitter is far smaller than
                // the gap between neighboring hours, so each day keeps a
                // single maximal slot.
                let shape = (-((hour as f64 - 14.0).powi(2)) / 32.0).exp();
                let jitter = amplitude * rng.random_range(-0.005..0.005);
                out.push((amplitude * (0.25 + 0.75 * shape) + jitter).max(0.0));
            }
            out
        }
        Profile::Wind => {
            let cap = 5000.0;
            let step = cap / 6.0;
            let mut level: f64 = rng.random_range(0.0..cap);
            (0..slots)
                .map(|_| {
                    level = (level + step * rng.random_range(-1.0..1.0)).clamp(0.0, cap);
                    level
                })
                .collect()
        }
        Profile::Market => {
            let mean = 0.08;
            let mut price: f64 = mean * rng.random_range(0.8..1.2);
            (0..slots)
                .map(|_| {
                    price += 0.3 * (mean - price) + 0.02 * rng.random_range(-1.0..1.0);
                    price = price.max(0.005);
                    price
                })
                .collect()
        }
    }
}

/// Generates a full aligned trace set: diurnal workload, wind-like green
/// power per data center, market-like prices per data center.
pub fn gen_traces(seed: u64, slots: usize, dcs: usize) -> TraceSet {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..3).map(|_| master.random()).collect();
    let workload = gen_series(seeds[0], slots, 1, Profile::Diurnal).remove(0);
    let green = transpose(gen_series(seeds[1], slots, dcs, Profile::Wind), slots);
    let price = transpose(gen_series(seeds[2], slots, dcs, Profile::Market), slots);
    TraceSet { slot_ids: (0..slots as u64).collect(), workload, green, price }
}

fn transpose(series: Vec<Vec<f64>>, slots: usize) -> Vec<Vec<f64>> {
    (0..slots).map(|t| series.iter().map(|s| s[t]).collect()).collect()
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Output formats for result emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Rounds to six significant digits, the precision of all emitted numbers.
fn round6(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0; // normalizes -0
    }
    if !x.is_finite() {
        return x;
    }
    let mut exp = x.abs().log10().floor() as i32;
    let p = 10f64.powi(exp);
    if x.abs() / p >= 10.0 {
        exp += 1;
    } else if x.abs() / p < 1.0 {
        exp -= 1;
    }
    if !(-300..=300).contains(&exp) {
        return x;
    }
    let scale = 10f64.powi(5 - exp);
    (x * scale).round() / scale
}

fn fmt6(x: f64) -> String {
    format!("{}", round6(x))
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), EmitError> {
    let io_err = |source| EmitError::Io { path: path.to_owned(), source };
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_owned());
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    std::fs::write(&tmp, contents).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Writes per-slot simulation results. The CSV carries one row per slot:
/// totals first, then the served green/brown rate per data center in
/// configuration order (`lg_<id>`, `lb_<id>`). JSON is an array of objects
/// with the same keys.
pub fn emit_slot_results(
    results: &[SlotResult],
    dc_ids: &[String],
    format: OutputFormat,
    path: &Path,
) -> Result<(), EmitError> {
    let contents = match format {
        OutputFormat::Csv => {
            let mut out = String::from("slot,total_power_w,brown_power_w,green_utilization,brown_cost,unserved");
            for id in dc_ids {
                let _ = write!(out, ",lg_{id},lb_{id}");
            }
            out.push('\n');
            for r in results {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{}",
                    r.slot,
                    fmt6(r.total_power),
                    fmt6(r.brown_power()),
                    fmt6(r.green_utilization),
                    fmt6(r.brown_cost),
                    fmt6(r.unserved),
                );
                for i in 0..dc_ids.len() {
                    let _ = write!(
                        out,
                        ",{},{}",
                        fmt6(r.allocation.green_rate[i]),
                        fmt6(r.allocation.brown_rate[i])
                    );
                }
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = results
                .iter()
                .map(|r| {
                    let mut row = serde_json::Map::new();
                    row.insert("slot".into(), r.slot.into());
                    row.insert("total_power_w".into(), round6(r.total_power).into());
                    row.insert("brown_power_w".into(), round6(r.brown_power()).into());
                    row.insert("green_utilization".into(), round6(r.green_utilization).into());
                    row.insert("brown_cost".into(), round6(r.brown_cost).into());
                    row.insert("unserved".into(), round6(r.unserved).into());
                    for (i, id) in dc_ids.iter().enumerate() {
                        row.insert(format!("lg_{id}"), round6(r.allocation.green_rate[i]).into());
                        row.insert(format!("lb_{id}"), round6(r.allocation.brown_rate[i]).into());
                    }
                    serde_json::Value::Object(row)
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rows).expect("plain numbers serialize");
            text.push('\n');
            text
        }
    };
    write_atomic(path, &contents)
}

/// Writes tradeoff curve points, one row per target.
pub fn emit_tradeoff_points(
    points: &[TradeoffPoint],
    format: OutputFormat,
    path: &Path,
) -> Result<(), EmitError> {
    let contents = match format {
        OutputFormat::Csv => {
            let mut out = String::from("target_g,achieved_g,total_power_w,brown_power_w,feasible\n");
            for p in points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt6(p.target_utilization),
                    fmt6(p.achieved_utilization),
                    fmt6(p.total_power),
                    fmt6(p.brown_power),
                    p.feasible,
                );
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    let mut row = serde_json::Map::new();
                    row.insert("target_g".into(), round6(p.target_utilization).into());
                    row.insert("achieved_g".into(), round6(p.achieved_utilization).into());
                    row.insert("total_power_w".into(), round6(p.total_power).into());
                    row.insert("brown_power_w".into(), round6(p.brown_power).into());
                    row.insert("feasible".into(), p.feasible.into());
                    serde_json::Value::Object(row)
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rows).expect("plain numbers serialize");
            text.push('\n');
            text
        }
    };
    write_atomic(path, &contents)
}

/// Writes a trace set as `workload.csv`, `green.csv`, and `price.csv` under
/// `dir`, with one green/price column per id. Values keep full precision so
/// loading them back reproduces the set exactly.
pub fn write_traces(
    traces: &TraceSet,
    dc_ids: &[String],
    dir: &Path,
) -> Result<[PathBuf; 3], EmitError> {
    let workload_path = dir.join("workload.csv");
    let mut out = String::from("slot,workload\n");
    for (i, &slot) in traces.slot_ids.iter().enumerate() {
        let _ = writeln!(out, "{},{}", slot, traces.workload[i]);
    }
    write_atomic(&workload_path, &out)?;

    let table = |values: &[Vec<f64>]| {
        let mut out = String::from("slot");
        for id in dc_ids {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        for (i, &slot) in traces.slot_ids.iter().enumerate() {
            let _ = write!(out, "{slot}");
            for v in &values[i] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    };
    let green_path = dir.join("green.csv");
    write_atomic(&green_path, &table(&traces.green))?;
    let price_path = dir.join("price.csv");
    write_atomic(&price_path, &table(&traces.price))?;
    Ok([workload_path, green_path, price_path])
}
