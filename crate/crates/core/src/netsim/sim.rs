use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::netsim::config::ScenarioConfig;
use crate::netsim::deployment::{sample_deployment, Deployment};
use crate::netsim::rate::shannon_rate;
use crate::netsim::scheduler::schedule_slot;
use crate::netsim::SimError;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub drop: usize,
    pub ue_id: usize,
    /// Mean over slots; unscheduled slots contribute zero.
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Sorted by `(drop, ue_id)`.
    pub samples: Vec<RateSample>,
    /// Zero-BS deployments discarded and redrawn, summed over drops.
    pub resampled_drops: u32,
}

impl SimOutput {
    pub fn throughputs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.throughput_bps).collect()
    }
}

/// Randomness realized in one slot.
#[derive(Debug, Clone)]
pub struct SlotRealization {
    /// Scheduled UE per BS, `None` for a silent BS.
    pub scheduled: Vec<Option<usize>>,
    /// Fading power on each BS's serving link to its scheduled UE.
    pub serving_fading: Vec<f64>,
    /// Fading power from interferer BS (column) to the UE scheduled at the
    /// victim BS (row), row-major `num_bs x num_bs`.
    pub cross_fading: Vec<f64>,
}

/// Per-drop precomputation: mean (fading-free) channel gains, bearings and
/// cell membership.
pub struct DropContext<'a> {
    config: &'a ScenarioConfig,
    deployment: &'a Deployment,
    cells: Vec<Vec<usize>>,
    /// `10^(-(PL+X)/10)`, zero for outage; UE-major.
    mean_gain: Vec<f64>,
    /// Bearing from BS to UE, degrees; UE-major.
    bearing: Vec<f64>,
    bandwidth_hz: f64,
    noise_mw: f64,
    tx_mw: f64,
}

impl<'a> DropContext<'a> {
    pub fn new(config: &'a ScenarioConfig, n: f64, deployment: &'a Deployment) -> Self {
        let nb = deployment.num_bs();
        let mut mean_gain = Vec::with_capacity(deployment.num_ue() * nb);
        let mut bearing = Vec::with_capacity(deployment.num_ue() * nb);
        for ue in 0..deployment.num_ue() {
            for bs in 0..nb {
                mean_gain.push(config.channel.channel_power_gain(
                    deployment.state(ue, bs),
                    deployment.distance(ue, bs),
                    deployment.shadowing(ue, bs),
                    1.0,
                ));
                bearing.push(deployment.bs_positions[bs].bearing_deg(&deployment.ue_positions[ue]));
            }
        }
        let bandwidth_hz = config.effective_bandwidth(n);
        Self {
            config,
            deployment,
            cells: deployment.cells(),
            mean_gain,
            bearing,
            bandwidth_hz,
            noise_mw: config.noise_power_mw(bandwidth_hz),
            tx_mw: config.tx_power_mw(),
        }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    fn idx(&self, ue: usize, bs: usize) -> usize {
        ue * self.deployment.num_bs() + bs
    }

    fn interferes(&self, victim_bs: usize, interferer: usize) -> bool {
        interferer != victim_bs
            && self.deployment.band_of_bs[interferer] == self.deployment.band_of_bs[victim_bs]
    }

    /// Draws serving fading for every UE, runs the per-cell scheduler and
    /// draws cross-link fading for the links that carry interference.
    pub fn realize_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> SlotRealization {
        let nb = self.deployment.num_bs();
        let mut scheduled = vec![None; nb];
        let mut serving_fading = vec![0.0; nb];
        let mut fading = Vec::new();
        for (bs, cell) in self.cells.iter().enumerate() {
            fading.clear();
            fading.extend(cell.iter().map(|_| -> f64 { Exp1.sample(rng) }));
            if let Some(k) = schedule_slot(&fading, rng) {
                scheduled[bs] = Some(cell[k]);
                serving_fading[bs] = fading[k];
            }
        }
        let mut cross_fading = vec![0.0; nb * nb];
        for victim in 0..nb {
            let Some(ue) = scheduled[victim] else { continue };
            for j in 0..nb {
                if scheduled[j].is_some()
                    && self.interferes(victim, j)
                    && self.mean_gain[self.idx(ue, j)] > 0.0
                {
                    cross_fading[victim * nb + j] = Exp1.sample(rng);
                }
            }
        }
        SlotRealization {
            scheduled,
            serving_fading,
            cross_fading,
        }
    }

    /// Received signal and interference (mW) for the UE scheduled at `bs`.
    pub fn signal_and_interference(&self, bs: usize, slot: &SlotRealization) -> Option<(f64, f64)> {
        let ue = slot.scheduled[bs]?;
        let cfg = self.config;
        let nb = self.deployment.num_bs();
        let signal = self.tx_mw
            * cfg.bs_pattern.main_lobe_linear()
            * cfg.ue_pattern.main_lobe_linear()
            * self.mean_gain[self.idx(ue, bs)]
            * slot.serving_fading[bs];
        let mut interference = 0.0;
        for (j, target) in slot.scheduled.iter().enumerate() {
            let Some(target) = *target else { continue };
            if !self.interferes(bs, j) {
                continue;
            }
            let g = self.mean_gain[self.idx(ue, j)];
            if g == 0.0 {
                continue;
            }
            let to_victim = self.bearing[self.idx(ue, j)];
            let off_bs = to_victim - self.bearing[self.idx(target, j)];
            let off_ue = to_victim - self.bearing[self.idx(ue, bs)];
            interference += self.tx_mw
                * cfg.bs_pattern.gain(off_bs)
                * cfg.ue_pattern.gain(off_ue)
                * g
                * slot.cross_fading[bs * nb + j];
        }
        Some((signal, interference))
    }

    /// Rate of `ue` in this slot, `None` if it was not scheduled.
    pub fn slot_rate(&self, ue: usize, slot: &SlotRealization) -> Option<f64> {
        let bs = self.deployment.association[ue]?;
        if slot.scheduled[bs] != Some(ue) {
            return None;
        }
        let (s, i) = self.signal_and_interference(bs, slot)?;
        Some(shannon_rate(
            self.bandwidth_hz,
            self.config.overhead,
            self.config.loss,
            s,
            self.noise_mw,
            i,
        ))
    }

    /// Per-UE mean throughput over `slots` slots.
    pub fn run<R: Rng + ?Sized>(&self, slots: usize, rng: &mut R) -> Vec<f64> {
        let mut total = vec![0.0; self.deployment.num_ue()];
        for _ in 0..slots {
            let slot = self.realize_slot(rng);
            for (bs, ue) in slot.scheduled.iter().enumerate() {
                if let Some(ue) = *ue {
                    let (s, i) = self
                        .signal_and_interference(bs, &slot)
                        .expect("scheduled BS has a UE");
                    total[ue] += shannon_rate(
                        self.bandwidth_hz,
                        self.config.overhead,
                        self.config.loss,
                        s,
                        self.noise_mw,
                        i,
                    );
                }
            }
        }
        total.iter().map(|t| t / slots as f64).collect()
    }
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Monte Carlo over `drops` independent deployments at network size `n`.
pub fn simulate(
    config: &ScenarioConfig,
    n: f64,
    drops: usize,
    slots: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<SimOutput, SimError> {
    if drops == 0 || slots == 0 {
        return Err(SimError::InvalidRunLength { drops, slots });
    }
    config.validate()?;
    let per_drop: Vec<Result<(Vec<f64>, u32), SimError>> = with_workers(workers, || {
        (0..drops)
            .into_par_iter()
            .map(|drop| {
                let mut rng = rng_for(seed, "netsim-deployment", &[drop as u64]);
                let deployment = sample_deployment(config, n, &mut rng)?;
                let ctx = DropContext::new(config, n, &deployment);
                let mut slot_rng = rng_for(seed, "netsim-slots", &[drop as u64]);
                Ok((ctx.run(slots, &mut slot_rng), deployment.resampled))
            })
            .collect()
    });

    let mut samples = Vec::new();
    let mut resampled_drops = 0;
    for (drop, result) in per_drop.into_iter().enumerate() {
        let (throughput, resampled) = result?;
        resampled_drops += resampled;
        samples.extend(throughput.into_iter().enumerate().map(|(ue_id, t)| RateSample {
            drop,
            ue_id,
            throughput_bps: t,
        }));
    }
    Ok(SimOutput {
        samples,
        resampled_drops,
    })
}
