//! Monte Carlo downlink simulator over Poisson deployments.
//!
//! A drop places BSs and UEs, fixes link states and shadowing, associates
//! each UE with its strongest BS and then runs slotted opportunistic
//! scheduling with Rayleigh block fading. The output is per-UE long-run
//! throughput at a given normalized network size `n`, which scales BS density,
//! UE density and bandwidth together.

pub mod antenna;
pub mod channel;
pub mod config;
pub mod deployment;
pub mod rate;
pub mod scheduler;
pub mod sim;
pub mod stats;

use thiserror::Error;

pub use antenna::AntennaPattern;
pub use channel::{Band, ChannelModel, LinkState, LinkStateProbs};
pub use config::ScenarioConfig;
pub use deployment::{associate, sample_deployment, Deployment, Point};
pub use rate::shannon_rate;
pub use scheduler::schedule_slot;
pub use sim::{with_workers, simulate, DropContext, RateSample, SimOutput, SlotRealization};
pub use stats::{bootstrap_ci, fifth_percentile};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("network size must be in (0, 1], got {0}")]
    InvalidNetworkSize(f64),
    #[error("drops and slots must be >= 1 (drops={drops}, slots={slots})")]
    InvalidRunLength { drops: usize, slots: usize },
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("no base station drawn after {0} attempts")]
    NoBaseStations(u32),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid bootstrap settings (level={level}, resamples={resamples})")]
    InvalidBootstrap { level: f64, resamples: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
