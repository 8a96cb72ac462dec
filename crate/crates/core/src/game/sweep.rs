use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::closed_form::equilibrium;
use crate::game::{EquilibriumOutcome, GameError, MarketParams, Regime, SupportConvention};

/// A list of values, given either explicitly or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, GameError> {
        match self {
            Axis::Values(v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(GameError::InvalidParams(format!(
                        "bad range start={start} stop={stop} step={step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                // integer steps keep the grid free of accumulated rounding
                Ok((0..=count).map(|k| start + k as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketGrid {
    pub omega_hat: Axis,
    pub q_hat: Axis,
    pub mu: Axis,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
    #[serde(default = "all_conventions")]
    pub conventions: Vec<SupportConvention>,
}

fn all_regimes() -> Vec<Regime> {
    Regime::ALL.to_vec()
}

fn all_conventions() -> Vec<SupportConvention> {
    SupportConvention::ALL.to_vec()
}

impl Default for MarketGrid {
    /// omega_hat in [1.5, 6] step 0.05, q_hat in {1, 1.5}, mu in {0.64, 0.05}.
    fn default() -> Self {
        Self {
            omega_hat: Axis::Values((0..=90).map(|k| (150 + 5 * k) as f64 / 100.0).collect()),
            q_hat: Axis::Values(vec![1.0, 1.5]),
            mu: Axis::Values(vec![0.64, 0.05]),
            regimes: all_regimes(),
            conventions: all_conventions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRow {
    pub omega_hat: f64,
    pub q_hat: f64,
    pub mu: f64,
    pub regime: Regime,
    pub convention: SupportConvention,
    pub outcome: Option<EquilibriumOutcome>,
    pub error: Option<String>,
    /// `pi_1 under sharing > pi_1 without`, for this row's market key.
    pub prefers_sharing_1: Option<bool>,
    pub prefers_sharing_2: Option<bool>,
}

impl MarketRow {
    pub fn params(&self) -> MarketParams {
        MarketParams::new(self.omega_hat, self.q_hat, self.mu, self.convention)
    }
}

const PREFERENCE_RTOL: f64 = 1e-12;

/// Strict gain beyond rounding noise.
fn gains(sharing: f64, alone: f64) -> bool {
    sharing - alone > PREFERENCE_RTOL * sharing.abs().max(alone.abs())
}

fn preferences(params: &MarketParams) -> (Option<bool>, Option<bool>) {
    match (equilibrium(params, Regime::NoSharing), equilibrium(params, Regime::Sharing)) {
        (Ok(ns), Ok(s)) => (Some(gains(s.profit1, ns.profit1)), Some(gains(s.profit2, ns.profit2))),
        _ => (None, None),
    }
}

/// One row per (convention, q_hat, mu, omega_hat, regime), in that nesting
/// order. Failed rows carry the error instead of an outcome.
pub fn sweep_market(grid: &MarketGrid) -> Result<Vec<MarketRow>, GameError> {
    let omegas = grid.omega_hat.values()?;
    let q_hats = grid.q_hat.values()?;
    let mus = grid.mu.values()?;
    if omegas.is_empty() || q_hats.is_empty() || mus.is_empty() || grid.regimes.is_empty() || grid.conventions.is_empty() {
        return Err(GameError::InvalidParams("market grid has an empty axis".into()));
    }
    let mut keys = Vec::new();
    for &convention in &grid.conventions {
        for &q_hat in &q_hats {
            for &mu in &mus {
                for &omega_hat in &omegas {
                    keys.push(MarketParams::new(omega_hat, q_hat, mu, convention));
                }
            }
        }
    }
    let rows = keys
        .par_iter()
        .flat_map_iter(|params| {
            let (pref1, pref2) = preferences(params);
            grid.regimes.iter().map(move |&regime| {
                let (outcome, error) = match equilibrium(params, regime) {
                    Ok(o) => (Some(o), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                MarketRow {
                    omega_hat: params.omega_hat,
                    q_hat: params.q_hat,
                    mu: params.mu,
                    regime,
                    convention: params.convention,
                    outcome,
                    error,
                    prefers_sharing_1: pref1,
                    prefers_sharing_2: pref2,
                }
            })
        })
        .collect();
    Ok(rows)
}
