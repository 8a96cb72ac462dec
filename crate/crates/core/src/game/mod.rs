//! Vertically differentiated duopoly with network effects.
//!
//! Two NSPs pick qualities `q1 > q2`, then prices, then consumers of taste
//! `omega` pick at most one NSP, valuing NSP `i` at
//! `omega * q_i + mu * q_i * n_tilde_i - p_i`. Without sharing `n_tilde_i = n_i`;
//! with sharing both NSPs see the pooled size `n1 + n2`. Marginal cost of a
//! subscriber equals the quality it is served at.

pub mod closed_form;
pub mod oracle;
pub mod shares;
pub mod surplus;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use closed_form::{
    check_conditions, equilibrium, equilibrium_monopoly, equilibrium_no_sharing,
    equilibrium_sharing, prices_no_sharing, prices_sharing, quality_low_no_sharing,
    quality_low_sharing,
};
pub use oracle::{
    deviation_gain, numerical_price_equilibrium, numerical_quality_stage, OracleSettings,
    PriceEquilibrium, QualityStage,
};
pub use shares::{fulfilled_demand, market_shares, profits};
pub use surplus::{consumer_surplus, SurplusMode};
pub use sweep::{sweep_market, Axis, MarketGrid, MarketRow};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("qualities must satisfy q1 > q2 > 0 (q1={q1}, q2={q2})")]
    InvalidQualities { q1: f64, q2: f64 },
    #[error("invalid market parameters: {0}")]
    InvalidParams(String),
    #[error("share system is singular")]
    Singular,
    #[error("monopoly price requires omega_hat > 1, got {0}")]
    MonopolyPrice(f64),
    #[error("best-response iteration did not converge after {rounds} rounds; last iterates {trace:?}")]
    NoConvergence { rounds: usize, trace: Vec<(f64, f64)> },
    #[error("no price yields positive demand for NSP {0}")]
    NoDemand(usize),
}

/// Support of the taste parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupportConvention {
    /// Uniform on `[0, omega_hat]`, density `1/omega_hat`.
    #[serde(rename = "paper")]
    ZeroToOmegaHat,
    /// Uniform on `[omega_hat - 1, omega_hat]`, density 1.
    #[serde(rename = "unit")]
    UnitInterval,
}

impl SupportConvention {
    pub const ALL: [SupportConvention; 2] =
        [SupportConvention::ZeroToOmegaHat, SupportConvention::UnitInterval];

    pub fn lower(self, omega_hat: f64) -> f64 {
        match self {
            SupportConvention::ZeroToOmegaHat => 0.0,
            SupportConvention::UnitInterval => omega_hat - 1.0,
        }
    }

    pub fn density(self, omega_hat: f64) -> f64 {
        match self {
            SupportConvention::ZeroToOmegaHat => 1.0 / omega_hat,
            SupportConvention::UnitInterval => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SupportConvention::ZeroToOmegaHat => "paper",
            SupportConvention::UnitInterval => "unit",
        }
    }
}

impl fmt::Display for SupportConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SupportConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(SupportConvention::ZeroToOmegaHat),
            "unit" => Ok(SupportConvention::UnitInterval),
            other => Err(format!("unknown convention '{other}' (expected paper|unit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "ns")]
    NoSharing,
    #[serde(rename = "s")]
    Sharing,
    #[serde(rename = "m")]
    Monopoly,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::NoSharing, Regime::Sharing, Regime::Monopoly];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::NoSharing => "ns",
            Regime::Sharing => "s",
            Regime::Monopoly => "m",
        }
    }

    /// Network sizes `(n_tilde_1, n_tilde_2)` entering the utilities.
    pub fn perceived_sizes(self, n1: f64, n2: f64) -> (f64, f64) {
        match self {
            Regime::Sharing => (n1 + n2, n1 + n2),
            Regime::NoSharing | Regime::Monopoly => (n1, n2),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ns" => Ok(Regime::NoSharing),
            "s" => Ok(Regime::Sharing),
            "m" => Ok(Regime::Monopoly),
            other => Err(format!("unknown regime '{other}' (expected ns|s|m)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub omega_hat: f64,
    pub q_hat: f64,
    pub mu: f64,
    pub convention: SupportConvention,
}

impl MarketParams {
    pub fn new(omega_hat: f64, q_hat: f64, mu: f64, convention: SupportConvention) -> Self {
        Self {
            omega_hat,
            q_hat,
            mu,
            convention,
        }
    }

    pub fn paper(omega_hat: f64, q_hat: f64, mu: f64) -> Self {
        Self::new(omega_hat, q_hat, mu, SupportConvention::ZeroToOmegaHat)
    }

    pub fn lower(&self) -> f64 {
        self.convention.lower(self.omega_hat)
    }

    pub fn density(&self) -> f64 {
        self.convention.density(self.omega_hat)
    }

    /// `0 <= mu < min(1, omega_hat / 2)`.
    pub fn mu_in_region(&self) -> bool {
        self.mu >= 0.0 && self.mu < 1f64.min(self.omega_hat / 2.0)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.omega_hat > 0.0 && self.omega_hat.is_finite()) {
            return Err(GameError::InvalidParams(format!("omega_hat={}", self.omega_hat)));
        }
        if !(self.q_hat > 0.0 && self.q_hat.is_finite()) {
            return Err(GameError::InvalidParams(format!("q_hat={}", self.q_hat)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(GameError::InvalidParams(format!("mu={}", self.mu)));
        }
        Ok(())
    }
}

/// Consumer allocation for given qualities and prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharesSolution {
    pub n1: f64,
    pub n2: f64,
    /// Type indifferent between the two NSPs.
    pub omega_over: f64,
    /// Type indifferent between the low-end NSP and not subscribing.
    pub omega_under: f64,
    /// Both NSPs strictly served with marginal types inside the support.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    /// Quality-ratio condition for an equilibrium with prices above marginal cost.
    pub eq8_ok: bool,
    /// Strictly interior marginal types.
    pub eq9_ok: bool,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.eq8_ok && self.eq9_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub regime: Regime,
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub shares: SharesSolution,
    pub profit1: f64,
    pub profit2: f64,
    pub consumer_surplus: f64,
    pub conditions: Conditions,
}
