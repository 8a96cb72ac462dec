//! Network-effect measurement and resource-sharing duopoly workbench.
//!
//! * [`netsim`]: mmWave / microwave downlink Monte Carlo simulator.
//! * [`externality`]: fifth-percentile sweeps over network size and the
//!   (segmented) linear fits that turn them into an externality intensity.
//! * [`game`]: vertically differentiated duopoly with network effects, closed
//!   forms and an independent numerical equilibrium oracle.
//! * [`harness`]: experiment specs, file formats and figure-data reproduction.

pub mod externality;
pub mod game;
pub mod harness;
pub mod netsim;
pub mod seed;
