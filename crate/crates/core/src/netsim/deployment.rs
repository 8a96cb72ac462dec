use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::netsim::channel::LinkState;
use crate::netsim::config::ScenarioConfig;
use crate::netsim::SimError;

/// Consecutive zero-BS draws tolerated before giving up on a drop.
const MAX_RESAMPLES: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing from `self` towards `other`, degrees.
    pub fn bearing_deg(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// One Monte Carlo drop. Per-link arrays are UE-major: index `ue * num_bs + bs`.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub bs_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub band_of_bs: Vec<u32>,
    pub link_state: Vec<LinkState>,
    pub shadowing_db: Vec<f64>,
    pub association: Vec<Option<usize>>,
    /// Number of zero-BS draws discarded before this one.
    pub resampled: u32,
}

impl Deployment {
    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_ue(&self) -> usize {
        self.ue_positions.len()
    }

    #[inline]
    pub fn link_index(&self, ue: usize, bs: usize) -> usize {
        ue * self.num_bs() + bs
    }

    pub fn state(&self, ue: usize, bs: usize) -> LinkState {
        self.link_state[self.link_index(ue, bs)]
    }

    pub fn shadowing(&self, ue: usize, bs: usize) -> f64 {
        self.shadowing_db[self.link_index(ue, bs)]
    }

    pub fn distance(&self, ue: usize, bs: usize) -> f64 {
        self.ue_positions[ue].distance(&self.bs_positions[bs])
    }

    /// UEs served by each BS, in ascending UE order.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.num_bs()];
        for (ue, bs) in self.association.iter().enumerate() {
            if let Some(bs) = bs {
                cells[*bs].push(ue);
            }
        }
        cells
    }

    /// Places exactly `num_bs` and `num_ue` nodes uniformly on the square and
    /// draws link states, shadowing, bands and association.
    pub fn with_counts<R: Rng + ?Sized>(
        config: &ScenarioConfig,
        num_bs: usize,
        num_ue: usize,
        rng: &mut R,
    ) -> Self {
        let side = config.side_m();
        let mut place = |count: usize| -> Vec<Point> {
            (0..count)
                .map(|_| Point {
                    x: rng.random::<f64>() * side,
                    y: rng.random::<f64>() * side,
                })
                .collect()
        };
        let bs_positions = place(num_bs);
        let ue_positions = place(num_ue);

        let band_of_bs = (0..num_bs)
            .map(|_| {
                if config.reuse_factor > 1 {
                    rng.random_range(0..config.reuse_factor)
                } else {
                    0
                }
            })
            .collect();

        let channel = &config.channel;
        let los_shadow = Normal::new(0.0, channel.los_pl.shadow_sigma_db).expect("sigma >= 0");
        let nlos_shadow = Normal::new(0.0, channel.nlos_pl.shadow_sigma_db).expect("sigma >= 0");
        let mut link_state = Vec::with_capacity(num_ue * num_bs);
        let mut shadowing_db = Vec::with_capacity(num_ue * num_bs);
        for ue in &ue_positions {
            for bs in &bs_positions {
                let state = channel.sample_state(ue.distance(bs), rng);
                let x = match state {
                    LinkState::Los => los_shadow.sample(rng),
                    LinkState::Nlos => nlos_shadow.sample(rng),
                    LinkState::Outage => 0.0,
                };
                link_state.push(state);
                shadowing_db.push(x);
            }
        }

        let mut deployment = Self {
            bs_positions,
            ue_positions,
            band_of_bs,
            link_state,
            shadowing_db,
            association: Vec::new(),
            resampled: 0,
        };
        deployment.association = associate(&deployment, config);
        deployment
    }
}

/// Draws a PPP deployment at network size `n`: BS and UE counts are Poisson with
/// means `n * density * area`. Drops without any BS are redrawn.
pub fn sample_deployment<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    n: f64,
    rng: &mut R,
) -> Result<Deployment, SimError> {
    if !(n > 0.0 && n <= 1.0) {
        return Err(SimError::InvalidNetworkSize(n));
    }
    let bs_mean = n * config.max_bs_density * config.area;
    let ue_mean = n * config.max_ue_density * config.area;
    let bs_dist = Poisson::new(bs_mean).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let ue_dist = Poisson::new(ue_mean).map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    let mut resampled = 0;
    let num_bs = loop {
        let k: f64 = bs_dist.sample(rng);
        if k >= 1.0 {
            break k as usize;
        }
        resampled += 1;
        if resampled >= MAX_RESAMPLES {
            return Err(SimError::NoBaseStations(resampled));
        }
    };
    let num_ue = ue_dist.sample(rng) as usize;
    let mut deployment = Deployment::with_counts(config, num_bs, num_ue, rng);
    deployment.resampled = resampled;
    Ok(deployment)
}

/// Strongest long-run received power `P * M_B * M_U * 10^(-(PL+X)/10)` over
/// non-outage links; UEs with every link in outage stay unassociated.
pub fn associate(deployment: &Deployment, config: &ScenarioConfig) -> Vec<Option<usize>> {
    let boresight = config.tx_power_mw()
        * config.bs_pattern.main_lobe_linear()
        * config.ue_pattern.main_lobe_linear();
    (0..deployment.num_ue())
        .map(|ue| {
            let mut best: Option<(usize, f64)> = None;
            for bs in 0..deployment.num_bs() {
                let loss = config.channel.loss_db(
                    deployment.state(ue, bs),
                    deployment.distance(ue, bs),
                    deployment.shadowing(ue, bs),
                );
                if let Some(loss) = loss {
                    let power = boresight * 10f64.powf(-loss / 10.0);
                    if best.map_or(true, |(_, p)| power > p) {
                        best = Some((bs, power));
                    }
                }
            }
            best.map(|(bs, _)| bs)
        })
        .collect()
}
