//! Command-line front end: analytic cost tables, the decision boundary,
//! single simulations, and parameter sweeps emitted as CSV.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime (I/O) error.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use d2dcache::analytic::{
    best_policy, cost_2rep, cost_bs_only, cost_mbr, cost_simple, redundancy_threshold,
};
use d2dcache::engine::{run_replicated, run_simulation_with_trace, ReplicationSummary};
use d2dcache::population::generate_trajectory;
use d2dcache::seed::derive_seed;
use d2dcache::{ParamError, PolicySpec, SimConfig, SystemParams};

#[derive(Parser)]
#[command(
    name = "d2dcache",
    about = "Energy-cost model and churn simulator for D2D caching policies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic cost of every policy plus the threshold R*
    Analytic {
        #[command(flatten)]
        params: ParamOpts,
        /// Largest regenerating-code k to tabulate
        #[arg(long, default_value_t = 8)]
        k_max: u32,
    },
    /// Emit the decision-boundary curve R*(NωT) as CSV
    Boundary {
        /// Smallest NωT value on the grid
        #[arg(long)]
        from: f64,
        /// Largest NωT value on the grid
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        steps: u32,
        #[arg(long, value_enum, default_value_t = Scale::Linear)]
        scale: Scale,
        /// Output path; stdout if omitted
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run replicated simulations of one policy and print a JSON summary
    Simulate {
        #[command(flatten)]
        params: ParamOpts,
        #[command(flatten)]
        policy: PolicyOpts,
        #[command(flatten)]
        sim: SimOpts,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also dump a per-event trace CSV of the first replication
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep one parameter across a grid and emit analytic + simulated
    /// cost rates as CSV
    Sweep {
        #[command(flatten)]
        params: ParamOpts,
        #[command(flatten)]
        sim: SimOpts,
        /// Swept parameter
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: u32,
        #[arg(long, value_enum, default_value_t = Scale::Linear)]
        scale: Scale,
        /// Comma-separated policies: bs, simple, 2rep, mbr
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// k used by the mbr policy when k itself is not swept
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate an M/M/∞ churn trace as CSV
    Trajectory {
        #[arg(long = "N")]
        n: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, env = "D2DCACHE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// System parameters, either from flags or a key=value config file
/// (flags win).
#[derive(Args)]
struct ParamOpts {
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long = "N")]
    n: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "T")]
    t: Option<f64>,
    /// key=value file supplying defaults for R, N, omega, T, seed, reps
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyOpts {
    /// bs | simple | 2rep | mbr
    #[arg(long)]
    policy: String,
    /// Data blocks k for the mbr policy
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct SimOpts {
    #[arg(long, env = "D2DCACHE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u32>,
    /// Horizon in units of T
    #[arg(long, default_value_t = 2000.0)]
    horizon_mult: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    #[value(name = "R")]
    R,
    #[value(name = "N")]
    N,
    #[value(name = "omega")]
    Omega,
    #[value(name = "T")]
    T,
    #[value(name = "k")]
    K,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::R => "R",
            SweepParam::N => "N",
            SweepParam::Omega => "omega",
            SweepParam::T => "T",
            SweepParam::K => "k",
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn load_config(path: &PathBuf) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {} is not key=value: {line:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl ParamOpts {
    fn resolve(&self) -> Result<SystemParams, CliError> {
        let config = match &self.config {
            Some(path) => load_config(path)?,
            None => HashMap::new(),
        };
        let get = |flag: Option<f64>, key: &str| -> Result<f64, CliError> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match config.get(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| CliError::Usage(format!("config {key}={raw} is not a number"))),
                None => Err(CliError::Usage(format!(
                    "missing parameter --{key} (flag or config file)"
                ))),
            }
        };
        let params = SystemParams::new(
            get(self.r, "R")?,
            get(self.n, "N")?,
            get(self.omega, "omega")?,
            get(self.t, "T")?,
        )?;
        Ok(params)
    }
}

impl SimOpts {
    fn resolve(&self, config: &HashMap<String, String>) -> Result<SimConfig, CliError> {
        let seed = match (self.seed, config.get("seed")) {
            (Some(s), _) => s,
            (None, Some(raw)) => raw
                .parse()
                .map_err(|_| CliError::Usage(format!("config seed={raw} is not an integer")))?,
            (None, None) => 0,
        };
        let replications = match (self.reps, config.get("reps")) {
            (Some(r), _) => r,
            (None, Some(raw)) => raw
                .parse()
                .map_err(|_| CliError::Usage(format!("config reps={raw} is not an integer")))?,
            (None, None) => 20,
        };
        Ok(SimConfig {
            horizon_multiplier: self.horizon_mult,
            seed,
            replications,
        })
    }
}

fn parse_policy(name: &str, k: Option<u32>) -> Result<PolicySpec, CliError> {
    let spec = match name {
        "bs" => PolicySpec::BaseStationOnly,
        "simple" => PolicySpec::SimpleCaching,
        "2rep" => PolicySpec::Replication2,
        "mbr" => PolicySpec::MbrRegenerating {
            k: k.ok_or_else(|| CliError::Usage("policy mbr requires --k".into()))?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown policy {other:?} (expected bs, simple, 2rep or mbr)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn analytic_rate(p: &SystemParams, policy: PolicySpec) -> f64 {
    match policy {
        PolicySpec::BaseStationOnly => cost_bs_only(p),
        PolicySpec::SimpleCaching => cost_simple(p),
        PolicySpec::Replication2 => cost_2rep(p),
        PolicySpec::MbrRegenerating { k } => cost_mbr(p, k),
    }
}

fn emit(output: Option<&PathBuf>, contents: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

fn grid(from: f64, to: f64, steps: u32, scale: Scale) -> Result<Vec<f64>, CliError> {
    if from.is_nan() || to.is_nan() || from >= to {
        return Err(CliError::Usage(format!("--from {from} must be < --to {to}")));
    }
    if steps < 2 {
        return Err(CliError::Usage("--steps must be >= 2".into()));
    }
    if scale == Scale::Log && from <= 0.0 {
        return Err(CliError::Usage("log scale requires --from > 0".into()));
    }
    let n = steps as usize;
    Ok((0..n)
        .map(|i| {
            let frac = i as f64 / (n - 1) as f64;
            match scale {
                Scale::Linear => from + frac * (to - from),
                Scale::Log => (from.ln() + frac * (to.ln() - from.ln())).exp(),
            }
        })
        .collect())
}

fn cmd_analytic(params: &ParamOpts, k_max: u32) -> Result<(), CliError> {
    let p = params.resolve()?;
    if k_max < 1 {
        return Err(CliError::Usage("--k-max must be >= 1".into()));
    }
    let mut out = String::new();
    out.push_str("policy,caching_nodes,cost_rate\n");
    out.push_str(&format!("bs,0,{}\n", cost_bs_only(&p)));
    out.push_str(&format!("simple,1,{}\n", cost_simple(&p)));
    out.push_str(&format!("2rep,2,{}\n", cost_2rep(&p)));
    for k in 1..=k_max {
        out.push_str(&format!("mbr(k={k}),{},{}\n", k + 1, cost_mbr(&p, k)));
    }
    let (best, cost) = best_policy(&p, k_max);
    out.push_str(&format!("# threshold R* = {}\n", redundancy_threshold(&p)));
    out.push_str(&format!("# best policy: {best} at cost rate {cost}\n"));
    emit(None, &out)
}

fn cmd_boundary(
    from: f64,
    to: f64,
    steps: u32,
    scale: Scale,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    if scale == Scale::Linear && from <= 0.0 {
        return Err(CliError::Usage("NωT grid requires --from > 0".into()));
    }
    let mut out = String::from("n_omega_t,r_star\n");
    for x in grid(from, to, steps, scale)? {
        // R* depends only on the product NωT
        let p = SystemParams::new(2.0, x, 1.0, 1.0)?;
        out.push_str(&format!("{x},{}\n", redundancy_threshold(&p)));
    }
    emit(output, &out)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    params: &'a SystemParams,
    policy: PolicySpec,
    horizon_multiplier: f64,
    seed: u64,
    replications: u32,
    summary: &'a ReplicationSummary,
}

fn cmd_simulate(
    params: &ParamOpts,
    policy: &PolicyOpts,
    sim: &SimOpts,
    output: Option<&PathBuf>,
    trace: Option<&PathBuf>,
) -> Result<(), CliError> {
    let p = params.resolve()?;
    let config = match &params.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let cfg = sim.resolve(&config)?;
    let spec = parse_policy(&policy.policy, policy.k)?;
    let summary = run_replicated(&p, spec, &cfg)?;
    let report = SimulateReport {
        params: &p,
        policy: spec,
        horizon_multiplier: cfg.horizon_multiplier,
        seed: cfg.seed,
        replications: cfg.replications,
        summary: &summary,
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    emit(output, &json)?;

    if let Some(path) = trace {
        let first = SimConfig {
            seed: derive_seed(cfg.seed, 0),
            replications: 1,
            ..cfg
        };
        let (_, _, rows) = run_simulation_with_trace(&p, spec, &first)?;
        let mut csv = String::from("time,event_kind,node_id,energy_delta,population\n");
        for row in rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.time, row.event_kind, row.node_id, row.energy_delta, row.population
            ));
        }
        fs::write(path, csv)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    params: &ParamOpts,
    sim: &SimOpts,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: u32,
    scale: Scale,
    policies: &[String],
    k_default: u32,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    let base = params.resolve()?;
    let config = match &params.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let cfg = sim.resolve(&config)?;
    if param != SweepParam::R && from <= 0.0 {
        return Err(CliError::Usage(format!(
            "sweeping {} requires --from > 0",
            param.name()
        )));
    }
    if param == SweepParam::R && from <= 0.0 {
        return Err(CliError::Usage("sweeping R requires --from > 0".into()));
    }
    let specs: Vec<PolicySpec> = policies
        .iter()
        .map(|name| parse_policy(name, Some(k_default)))
        .collect::<Result<_, _>>()?;
    let values = grid(from, to, steps, scale)?;

    struct Row {
        value: f64,
        policy: PolicySpec,
        seed: u64,
    }
    let mut rows = Vec::new();
    for &value in &values {
        for &spec in &specs {
            let row_index = rows.len() as u64;
            rows.push(Row {
                value,
                policy: spec,
                seed: derive_seed(cfg.seed, row_index),
            });
        }
    }

    // grid points fan out across workers; output stays in grid order
    let results: Vec<Result<String, ParamError>> = rows
        .par_iter()
        .map(|row| {
            let mut p = base;
            let mut policy = row.policy;
            let mut value = row.value;
            match param {
                SweepParam::R => p.cost_ratio = value,
                SweepParam::N => p.expected_nodes = value,
                SweepParam::Omega => p.request_rate = value,
                SweepParam::T => p.lifetime = value,
                SweepParam::K => {
                    let k = value.round().max(1.0) as u32;
                    value = k as f64;
                    if let PolicySpec::MbrRegenerating { .. } = policy {
                        policy = PolicySpec::MbrRegenerating { k };
                    }
                }
            }
            let analytic = analytic_rate(&p, policy);
            let cfg_row = SimConfig {
                seed: row.seed,
                ..cfg
            };
            let summary = run_replicated(&p, policy, &cfg_row)?;
            Ok(format!(
                "{},{},{},{},{},{},{},{}\n",
                param.name(),
                value,
                policy_label(policy),
                analytic,
                summary.mean_rate,
                summary.std_error,
                cfg.replications,
                row.seed
            ))
        })
        .collect();

    let mut out =
        String::from("param,value,policy,analytic_rate,sim_mean_rate,sim_stderr,replications,seed\n");
    for line in results {
        out.push_str(&line?);
    }
    emit(output, &out)
}

fn policy_label(policy: PolicySpec) -> String {
    match policy {
        PolicySpec::BaseStationOnly => "bs".into(),
        PolicySpec::SimpleCaching => "simple".into(),
        PolicySpec::Replication2 => "2rep".into(),
        PolicySpec::MbrRegenerating { k } => format!("mbr_k{k}"),
    }
}

fn cmd_trajectory(
    n: f64,
    t: f64,
    horizon: f64,
    seed: u64,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    let traj = generate_trajectory(n, t, horizon, seed)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    emit(output, std::str::from_utf8(&buf).expect("csv is ascii"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analytic { params, k_max } => cmd_analytic(params, *k_max),
        Command::Boundary {
            from,
            to,
            steps,
            scale,
            output,
        } => cmd_boundary(*from, *to, *steps, *scale, output.as_ref()),
        Command::Simulate {
            params,
            policy,
            sim,
            output,
            trace,
        } => cmd_simulate(params, policy, sim, output.as_ref(), trace.as_ref()),
        Command::Sweep {
            params,
            sim,
            param,
            from,
            to,
            steps,
            scale,
            policies,
            k,
            output,
        } => cmd_sweep(
            params,
            sim,
            *param,
            *from,
            *to,
            *steps,
            *scale,
            policies,
            *k,
            output.as_ref(),
        ),
        Command::Trajectory {
            n,
            t,
            horizon,
            seed,
            output,
        } => cmd_trajectory(*n, *t, *horizon, *seed, output.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
