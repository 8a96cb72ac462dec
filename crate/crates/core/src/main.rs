use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mmshare::externality::{
    fit_segmented, sweep_network_size, sweep_xy, MuNormalization, SweepOptions,
};
use mmshare::game::{
    consumer_surplus, equilibrium, numerical_price_equilibrium, sweep_market, MarketGrid,
    MarketParams, OracleSettings, Regime, SupportConvention, SurplusMode,
};
use mmshare::harness::io::{
    read_json, read_sweep_csv, write_json, write_market_csv, write_netsim_csv, write_sweep_csv,
};
use mmshare::harness::{
    audit_consistency, reproduce_fig2, reproduce_fig6, ExperimentFile, ExperimentSpec, FitReport,
};
use mmshare::netsim::{fifth_percentile, simulate, Band, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mmshare", version, about = "Network-effect simulator and resource-sharing duopoly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one network size, or sweep several, and write CSV.
    Netsim(NetsimArgs),
    /// Fit line / hinge to a sweep CSV and extract mu.
    Fit(FitArgs),
    /// Closed-form equilibrium for one market.
    Game(GameArgs),
    /// Closed-form equilibria over a market grid.
    Sweep(SweepArgs),
    /// Sweeps and fits for both bands.
    ReproduceFig2(ExperimentArgs),
    /// Market sweep over the default (or spec) grid.
    ReproduceFig6(ExperimentArgs),
    /// Closed forms against the numerical equilibrium oracle.
    Audit(ExperimentArgs),
}

#[derive(Args)]
struct NetsimArgs {
    /// `mmwave`, `microwave`, or a scenario JSON file.
    #[arg(long, default_value = "mmwave")]
    scenario: String,
    /// Single network size; writes per-UE throughputs.
    #[arg(long, conflicts_with = "n_grid")]
    n: Option<f64>,
    /// Comma-separated network sizes; writes fifth-percentile sweep rows.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    drops: usize,
    #[arg(long, default_value_t = 200)]
    slots: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    bootstrap_resamples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Band label stored in the report.
    #[arg(long, default_value = "mmwave")]
    band: String,
    /// Normalize the slope by the fitted rate at this network size.
    #[arg(long, default_value_t = 1.0, conflicts_with = "reference_rate")]
    mu_at: f64,
    /// Normalize the slope by a fixed rate in bit/s instead.
    #[arg(long)]
    reference_rate: Option<f64>,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long)]
    omega_hat: f64,
    #[arg(long)]
    q_hat: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value = "ns")]
    regime: Regime,
    #[arg(long, default_value = "paper")]
    convention: SupportConvention,
    /// Report consumer surplus weighted by the taste density.
    #[arg(long)]
    normalized_cs: bool,
    /// Also solve the price stage numerically at the closed-form qualities.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Market grid JSON; the default grid when omitted.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec JSON; defaults throughout when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Master seed (overrides the spec's).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self, require_seed: bool) -> Result<ExperimentSpec> {
        let file = match &self.spec {
            Some(p) => ExperimentFile::load(p)?,
            None => ExperimentFile::default(),
        };
        if require_seed && self.seed.is_none() && file.seed.is_none() {
            bail!("--seed is required (or a seed in the spec file)");
        }
        // deterministic commands still carry a seed for reporting
        let fallback = if require_seed { None } else { Some(file.seed.unwrap_or(0)) };
        let mut spec = file.resolve(self.seed.or(fallback))?;
        if let Some(w) = self.workers {
            spec.workers = Some(w);
        }
        if let Some(dir) = &self.out_dir {
            spec.output_dir = dir.clone();
        }
        Ok(spec)
    }
}

fn load_scenario(arg: &str) -> Result<ScenarioConfig> {
    match arg {
        "mmwave" => Ok(ScenarioConfig::mmwave()),
        "microwave" => Ok(ScenarioConfig::microwave()),
        path => ScenarioConfig::load(Path::new(path)).with_context(|| format!("loading scenario {path}")),
    }
}

fn parse_band(s: &str) -> Result<Band> {
    match s {
        "mmwave" => Ok(Band::Mmwave),
        "microwave" => Ok(Band::Microwave),
        other => bail!("unknown band '{other}' (expected mmwave|microwave)"),
    }
}

fn run_netsim(args: &NetsimArgs) -> Result<bool> {
    let config = load_scenario(&args.scenario)?;
    match (args.n, &args.n_grid) {
        (Some(n), None) => {
            let out = simulate(&config, n, args.drops, args.slots, args.seed, args.workers)?;
            write_netsim_csv(&args.out, &out.samples)?;
            let rate5 = fifth_percentile(&out.throughputs())?;
            println!(
                "n={n}: {} UEs, fifth-percentile rate {rate5:.6e} bit/s, {} empty deployments redrawn",
                out.samples.len(),
                out.resampled_drops
            );
        }
        (None, Some(grid)) => {
            let options = SweepOptions {
                bootstrap_resamples: args.bootstrap_resamples,
                workers: args.workers,
                ..SweepOptions::default()
            };
            let points = sweep_network_size(&config, grid, args.drops, args.slots, args.seed, &options)?;
            write_sweep_csv(&args.out, &points)?;
            for p in &points {
                println!("n={:.3}: {:.6e} bit/s [{:.6e}, {:.6e}]", p.n, p.rate5_bps, p.ci_lo_bps, p.ci_hi_bps);
            }
        }
        _ => bail!("give exactly one of --n or --n-grid"),
    }
    Ok(true)
}

fn run_fit(args: &FitArgs) -> Result<bool> {
    let points = read_sweep_csv(&args.input)?;
    let fit = fit_segmented(&sweep_xy(&points))?;
    let normalization = match args.reference_rate {
        Some(rate_bps) => MuNormalization::Reference { rate_bps },
        None => MuNormalization::FittedAt { at: args.mu_at },
    };
    let report = FitReport::new(parse_band(&args.band)?, &fit, normalization);
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(report.mu.is_some())
}

fn run_game(args: &GameArgs) -> Result<bool> {
    let params = MarketParams::new(args.omega_hat, args.q_hat, args.mu, args.convention);
    let mut outcome = equilibrium(&params, args.regime)?;
    if args.normalized_cs {
        outcome.consumer_surplus = consumer_surplus(&outcome, &params, SurplusMode::Normalized);
    }
    let mut value = serde_json::to_value(outcome)?;
    if args.verify {
        let eq = numerical_price_equilibrium(
            outcome.q1,
            outcome.q2,
            &params,
            args.regime,
            None,
            &OracleSettings::default(),
        )?;
        value["numerical"] = serde_json::to_value(eq)?;
    }
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(true)
}

fn run_sweep(args: &SweepArgs) -> Result<bool> {
    let grid: MarketGrid = match &args.grid {
        Some(p) => read_json(p)?,
        None => MarketGrid::default(),
    };
    let rows = sweep_market(&grid)?;
    write_market_csv(&args.out, &rows)?;
    let errors: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
    for r in &errors {
        eprintln!(
            "error row {} {} w={} q={} mu={}: {}",
            r.convention,
            r.regime,
            r.omega_hat,
            r.q_hat,
            r.mu,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("{} rows written to {}", rows.len(), args.out.display());
    Ok(errors.is_empty())
}

fn run_fig2(args: &ExperimentArgs) -> Result<bool> {
    let spec = args.resolve(true)?;
    let result = reproduce_fig2(&spec)?;
    let mut ok = true;
    for band in [&result.mmwave, &result.microwave] {
        let f = &band.fit;
        println!(
            "{:?}: breakpoint {}, slopes {:.6e} / {:.6e}, mu {}  -> {}",
            band.band,
            f.breakpoint.map_or("none".into(), |b| format!("{b:.4}")),
            f.left.slope,
            f.right.slope,
            f.mu.map_or("n/a".into(), |m| format!("{m:.4}")),
            band.sweep_csv.display()
        );
        ok &= f.mu.is_some();
    }
    Ok(ok)
}

fn run_fig6(args: &ExperimentArgs) -> Result<bool> {
    let spec = args.resolve(false)?;
    let (rows, path) = reproduce_fig6(&spec)?;
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows ({} errors) written to {}", rows.len(), errors, path.display());
    Ok(errors == 0)
}

fn run_audit(args: &ExperimentArgs) -> Result<bool> {
    let spec = args.resolve(true)?;
    let report = audit_consistency(&spec)?;
    print!("{}", report.to_text());
    Ok(report.failures() == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Netsim(a) => run_netsim(a),
        Command::Fit(a) => run_fit(a),
        Command::Game(a) => run_game(a),
        Command::Sweep(a) => run_sweep(a),
        Command::ReproduceFig2(a) => run_fig2(a),
        Command::ReproduceFig6(a) => run_fig6(a),
        Command::Audit(a) => run_audit(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
