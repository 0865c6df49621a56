use clap::{Parser, Subcommand, ValueEnum};
use glb_core::config::read_config_file;
use glb_core::flowgraph::{build_graph, max_flow, tradeoff_curve_top_k};
use glb_core::model::{validate_config, Config, RATE_EPS};
use glb_core::trace::{
    emit_slot_results, emit_tradeoff_points, gen_traces, load_traces, write_traces, OutputFormat,
};
use std::error::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "glb",
    version,
    about = "Trace-driven simulator for geographically load-balanced green data centers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the allocator over every slot in the configured traces.
    Simulate {
        /// Configuration file, .toml or .json.
        #[arg(long)]
        config: PathBuf,
        /// Override the allocation mode instead of inferring it from the
        /// config: "queue" requires sla.queue_bound, "ub" ignores it.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output file for per-slot results.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Sweep green-utilization targets for one slot and report the power cost
    /// of each.
    Tradeoff {
        #[arg(long)]
        config: PathBuf,
        /// Slot index into the traces (0-based).
        #[arg(long)]
        slot: usize,
        /// Number of evenly spaced targets between 0 and 1.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        /// Restrict allocation to the k most power-efficient data centers.
        #[arg(long)]
        top_k: Option<usize>,
        /// Output file for the curve points (CSV).
        #[arg(long)]
        out: PathBuf,
    },
    /// Check whether a slot's workload can be routed given per-DC routable
    /// limits, against each data center's deadline-respecting capacity.
    Feasible {
        #[arg(long)]
        config: PathBuf,
        /// Slot index into the traces (0-based).
        #[arg(long)]
        slot: usize,
        /// Comma-separated routable workload limit per data center, req/s,
        /// in configuration order.
        #[arg(long, value_delimiter = ',', required = true)]
        aw: Vec<f64>,
    },
    /// Generate synthetic aligned traces: diurnal workload, per-DC wind
    /// power, per-DC market prices.
    GenTraces {
        /// Seed for the generator; equal seeds give identical files.
        #[arg(long)]
        seed: u64,
        /// Number of slots to generate.
        #[arg(long)]
        slots: usize,
        /// Number of data centers (columns dc1..dcN).
        #[arg(long)]
        dcs: usize,
        /// Directory for workload.csv, green.csv, and price.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ub,
    Queue,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Simulate { config, mode, out, format } => {
            let mut cfg = read_config_file(&config)?;
            match mode {
                Some(ModeArg::Ub) => {
                    let mut sla = cfg.config.sla().clone();
                    sla.queue_bound = None;
                    cfg.config = rebuild(&cfg.config, sla)?;
                }
                Some(ModeArg::Queue) if cfg.config.sla().queue_bound.is_none() => {
                    return Err("--mode queue requires sla.queue_bound in the config".into());
                }
                _ => {}
            }
            let traces = load_traces(&cfg)?;
            let results = glb_core::simulate(&cfg.config, &traces.slot_inputs())?;
            emit_slot_results(&results, &cfg.dc_ids(), format.into(), &out)?;
            let cost: f64 = results.iter().map(|r| r.brown_cost).sum();
            let unserved: f64 = results.iter().map(|r| r.unserved).sum();
            println!(
                "wrote {} slot results to {} (brown cost {:.4} {}, unserved {:.4} req/s)",
                results.len(),
                out.display(),
                cost,
                cfg.config.currency(),
                unserved,
            );
        }
        Command::Tradeoff { config, slot, grid, top_k, out } => {
            let cfg = read_config_file(&config)?;
            let traces = load_traces(&cfg)?;
            let inputs = traces.slot_inputs();
            let input = inputs.get(slot).ok_or_else(|| {
                format!("slot {slot} out of range, traces have {} slots", inputs.len())
            })?;
            let points = tradeoff_curve_top_k(&cfg.config, input, grid, top_k)?;
            emit_tradeoff_points(&points, OutputFormat::Csv, &out)?;
            println!("wrote {} tradeoff points to {}", points.len(), out.display());
        }
        Command::Feasible { config, slot, aw } => {
            let cfg = read_config_file(&config)?;
            let n = cfg.config.num_datacenters();
            if aw.len() != n {
                return Err(
                    format!("--aw needs {n} values (one per data center), got {}", aw.len()).into()
                );
            }
            let traces = load_traces(&cfg)?;
            let demand = *traces.workload.get(slot).ok_or_else(|| {
                format!("slot {slot} out of range, traces have {} slots", traces.len())
            })?;
            let ub: Vec<f64> = cfg
                .config
                .datacenters()
                .iter()
                .zip(cfg.config.efficiency())
                .map(|(dc, eff)| dc.max_servers as f64 * eff.per_server)
                .collect();
            let flow = max_flow(&build_graph(&aw, &ub)?);
            let verdict = flow >= demand - RATE_EPS;
            println!(
                "slot {slot}: demand {demand} req/s, routable {flow} req/s, feasible: {}",
                if verdict { "yes" } else { "no" },
            );
        }
        Command::GenTraces { seed, slots, dcs, out_dir } => {
            if dcs == 0 {
                return Err("--dcs must be at least 1".into());
            }
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
            let traces = gen_traces(seed, slots, dcs);
            let ids: Vec<String> = (1..=dcs).map(|i| format!("dc{i}")).collect();
            let paths = write_traces(&traces, &ids, &out_dir)?;
            println!(
                "wrote {} slots for {} data centers: {}, {}, {}",
                slots,
                dcs,
                paths[0].display(),
                paths[1].display(),
                paths[2].display(),
            );
        }
    }
    Ok(())
}

fn rebuild(config: &Config, sla: glb_core::model::SlaSpec) -> Result<Config, Box<dyn Error>> {
    let rebuilt = validate_config(config.datacenters().to_vec(), sla)?
        .with_carbon_intensity(config.carbon_intensity())?
        .with_currency(config.currency());
    Ok(rebuilt)
}
