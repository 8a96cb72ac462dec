use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::externality::{fit_segmented, sweep_network_size, sweep_xy, SweepOptions, SweepPoint};
use crate::game::{
    deviation_gain, equilibrium, numerical_price_equilibrium, numerical_quality_stage, sweep_market,
    MarketParams, MarketRow, Regime, SupportConvention,
};
use crate::harness::io::{write_json, write_market_csv, write_sweep_csv, write_text, FitReport};
use crate::harness::{ExperimentSpec, HarnessError};
use crate::netsim::{with_workers, Band};
use crate::seed::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq)]
pub struct BandResult {
    pub band: Band,
    pub points: Vec<SweepPoint>,
    pub fit: FitReport,
    pub sweep_csv: PathBuf,
    pub fit_json: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Result {
    pub mmwave: BandResult,
    pub microwave: BandResult,
}

fn band_name(band: Band) -> &'static str {
    match band {
        Band::Mmwave => "mmwave",
        Band::Microwave => "microwave",
    }
}

/// Fifth-percentile sweeps and segmented fits for both bands. Each band runs
/// on a seed derived from the master seed and the experiment name; network
/// size and drop indices are mixed in below that.
pub fn reproduce_fig2(spec: &ExperimentSpec) -> Result<Fig2Result, HarnessError> {
    spec.validate()?;
    let options = SweepOptions {
        bootstrap_resamples: spec.bootstrap_resamples,
        workers: spec.workers,
        ..SweepOptions::default()
    };
    let run = |band: Band| -> Result<BandResult, HarnessError> {
        let name = band_name(band);
        let seed = derive_seed(spec.seed, &format!("fig2-{name}"), &[]);
        let points =
            sweep_network_size(spec.scenario(band), &spec.n_grid, spec.drops, spec.slots, seed, &options)?;
        let fit = fit_segmented(&sweep_xy(&points))?;
        let fit = FitReport::new(band, &fit, spec.mu_normalization);
        let sweep_csv = spec.output_dir.join(format!("fig2_{name}_sweep.csv"));
        let fit_json = spec.output_dir.join(format!("fig2_{name}_fit.json"));
        write_sweep_csv(&sweep_csv, &points)?;
        write_json(&fit_json, &fit)?;
        Ok(BandResult {
            band,
            points,
            fit,
            sweep_csv,
            fit_json,
        })
    };
    Ok(Fig2Result {
        mmwave: run(Band::Mmwave)?,
        microwave: run(Band::Microwave)?,
    })
}

/// Closed-form market sweep over the spec's grid, written to
/// `fig6_market.csv`.
pub fn reproduce_fig6(spec: &ExperimentSpec) -> Result<(Vec<MarketRow>, PathBuf), HarnessError> {
    let rows = with_workers(spec.workers, || sweep_market(&spec.market))?;
    let path = spec.output_dir.join("fig6_market.csv");
    write_market_csv(&path, &rows)?;
    Ok((rows, path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceAudit {
    pub omega_hat: f64,
    pub q_hat: f64,
    pub mu: f64,
    pub regime: Regime,
    pub convention: SupportConvention,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub closed_form: Option<(f64, f64)>,
    /// Largest unilateral gain against the closed-form prices, per NSP.
    pub deviation_gain: Option<(f64, f64)>,
    pub numerical: Option<(f64, f64)>,
    /// `max |p_closed - p_numerical|` over both NSPs.
    pub price_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAudit {
    pub omega_hat: f64,
    pub q_hat: f64,
    pub mu: f64,
    pub regime: Regime,
    pub convention: SupportConvention,
    pub q2_closed_form: Option<f64>,
    pub q2_numerical: Option<f64>,
    pub grid_step: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionSummary {
    pub convention: SupportConvention,
    pub price_rows: usize,
    pub max_deviation_gain: Option<f64>,
    pub max_price_gap: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub seed: u64,
    pub prices: Vec<PriceAudit>,
    pub qualities: Vec<QualityAudit>,
    pub summary: Vec<ConventionSummary>,
}

impl AuditReport {
    pub fn failures(&self) -> usize {
        self.prices.iter().filter(|r| r.error.is_some()).count()
            + self.qualities.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "consistency audit (seed {})", self.seed);
        for c in &self.summary {
            let _ = writeln!(
                s,
                "  {}: {} price rows, max deviation gain {}, max price gap {}, {} failures",
                c.convention,
                c.price_rows,
                fmt_opt(c.max_deviation_gain),
                fmt_opt(c.max_price_gap),
                c.failures
            );
        }
        for q in &self.qualities {
            let _ = writeln!(
                s,
                "  quality {} {} w={} q={} mu={}: closed {} numerical {} (step {:.3e}){}",
                q.convention,
                q.regime,
                q.omega_hat,
                q.q_hat,
                q.mu,
                fmt_opt(q.q2_closed_form),
                fmt_opt(q.q2_numerical),
                q.grid_step,
                q.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
            );
        }
        for p in self.prices.iter().filter(|p| p.error.is_some()) {
            let _ = writeln!(
                s,
                "  failed {} {} w={} q={} mu={}: {}",
                p.convention,
                p.regime,
                p.omega_hat,
                p.q_hat,
                p.mu,
                p.error.as_deref().unwrap_or_default()
            );
        }
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

fn audit_price(params: &MarketParams, regime: Regime, spec: &ExperimentSpec) -> PriceAudit {
    let mut row = PriceAudit {
        omega_hat: params.omega_hat,
        q_hat: params.q_hat,
        mu: params.mu,
        regime,
        convention: params.convention,
        q1: None,
        q2: None,
        closed_form: None,
        deviation_gain: None,
        numerical: None,
        price_gap: None,
        error: None,
    };
    let settings = &spec.audit.oracle;
    let outcome = match equilibrium(params, regime) {
        Ok(o) => o,
        Err(e) => {
            row.error = Some(format!("closed form: {e}"));
            return row;
        }
    };
    row.q1 = Some(outcome.q1);
    row.q2 = Some(outcome.q2);
    row.closed_form = Some((outcome.p1, outcome.p2));
    match deviation_gain(outcome.q1, outcome.q2, outcome.p1, outcome.p2, params, regime, settings.deviation_grid) {
        Ok(g) => row.deviation_gain = Some(g),
        Err(e) => row.error = Some(format!("deviation check: {e}")),
    }
    match numerical_price_equilibrium(outcome.q1, outcome.q2, params, regime, None, settings) {
        Ok(eq) => {
            row.numerical = Some((eq.p1, eq.p2));
            row.price_gap = Some((eq.p1 - outcome.p1).abs().max((eq.p2 - outcome.p2).abs()));
        }
        Err(e) => row.error = Some(format!("numerical prices: {e}")),
    }
    row
}

fn audit_quality(params: &MarketParams, regime: Regime, spec: &ExperimentSpec) -> QualityAudit {
    let settings = &spec.audit.oracle;
    let q2_closed_form = equilibrium(params, regime).ok().map(|o| o.q2);
    let (q2_numerical, error) = match numerical_quality_stage(params, regime, settings) {
        Ok(stage) => (Some(stage.q2_best), None),
        Err(e) => (None, Some(e.to_string())),
    };
    QualityAudit {
        omega_hat: params.omega_hat,
        q_hat: params.q_hat,
        mu: params.mu,
        regime,
        convention: params.convention,
        q2_closed_form,
        q2_numerical,
        grid_step: params.q_hat / (settings.quality_grid + 1) as f64,
        error,
    }
}

/// Checks the closed forms against the numerical oracle on a seeded sample
/// of the market grid. The quality stage additionally runs on a
/// network-effect-free control market per convention.
pub fn audit_consistency(spec: &ExperimentSpec) -> Result<AuditReport, HarnessError> {
    let grid = &spec.market;
    let (omegas, q_hats, mus) = (grid.omega_hat.values()?, grid.q_hat.values()?, grid.mu.values()?);
    let mut cells = Vec::new();
    for &convention in &grid.conventions {
        for &q_hat in &q_hats {
            for &mu in &mus {
                for &omega_hat in &omegas {
                    for &regime in &grid.regimes {
                        cells.push((MarketParams::new(omega_hat, q_hat, mu, convention), regime));
                    }
                }
            }
        }
    }
    let pick = |label: &str, pool: &[(MarketParams, Regime)], amount: usize| {
        let mut rng = rng_for(spec.seed, label, &[]);
        let mut idx = sample(&mut rng, pool.len(), amount.min(pool.len())).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i]).collect::<Vec<_>>()
    };
    let price_cells = pick("audit-prices", &cells, spec.audit.price_rows);

    let duopoly: Vec<_> = cells.iter().copied().filter(|(_, r)| *r != Regime::Monopoly).collect();
    let mut quality_cells = pick("audit-qualities", &duopoly, spec.audit.quality_rows);
    for &convention in &grid.conventions {
        for regime in [Regime::NoSharing, Regime::Sharing] {
            quality_cells.push((MarketParams::new(2.0, 1.0, 0.0, convention), regime));
        }
    }

    let (prices, qualities) = with_workers(spec.workers, || {
        let prices: Vec<PriceAudit> =
            price_cells.par_iter().map(|(p, r)| audit_price(p, *r, spec)).collect();
        let qualities: Vec<QualityAudit> =
            quality_cells.iter().map(|(p, r)| audit_quality(p, *r, spec)).collect();
        (prices, qualities)
    });

    let summary = grid
        .conventions
        .iter()
        .map(|&convention| {
            let rows: Vec<&PriceAudit> = prices.iter().filter(|p| p.convention == convention).collect();
            let max = |f: &dyn Fn(&PriceAudit) -> Option<f64>| {
                rows.iter().filter_map(|r| f(r)).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            };
            ConventionSummary {
                convention,
                price_rows: rows.len(),
                max_deviation_gain: max(&|r| r.deviation_gain.map(|(a, b)| a.max(b))),
                max_price_gap: max(&|r| r.price_gap),
                failures: rows.iter().filter(|r| r.error.is_some()).count(),
            }
        })
        .collect();

    let report = AuditReport {
        seed: spec.seed,
        prices,
        qualities,
        summary,
    };
    write_json(&spec.output_dir.join("audit.json"), &report)?;
    write_text(&spec.output_dir.join("audit.txt"), &report.to_text())?;
    Ok(report)
}
