//! Numerical stage-2 and stage-1 equilibria, independent of the closed forms.
//!
//! Prices come from alternating best responses. Each best response scans the
//! own-price range `[q_i, choke]` and then refines with golden-section search
//! around the best scan point. Demand is always recomputed from the share
//! solver, corners included.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::shares::market_shares;
use crate::game::{GameError, MarketParams, Regime};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub scan_points: usize,
    pub golden_tol: f64,
    /// Stop once neither price moves by more than this in a round.
    pub price_tol: f64,
    pub max_rounds: usize,
    pub deviation_grid: usize,
    pub quality_grid: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            scan_points: 200,
            golden_tol: 1e-13,
            price_tol: 1e-9,
            max_rounds: 500,
            deviation_grid: 1000,
            quality_grid: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEquilibrium {
    pub p1: f64,
    pub p2: f64,
    pub rounds: usize,
    /// Largest profit gain from a unilateral grid deviation, per NSP.
    pub deviation_gain: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPoint {
    pub q2: f64,
    /// `None` where the price stage failed to converge.
    pub equilibrium: Option<(f64, f64)>,
    pub profit2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityStage {
    pub q2_best: f64,
    pub profit2_best: f64,
    pub curve: Vec<QualityPoint>,
}

struct Market<'a> {
    q: [f64; 2],
    params: &'a MarketParams,
    regime: Regime,
}

impl Market<'_> {
    fn prices(&self, nsp: usize, own: f64, other: f64) -> (f64, f64) {
        if nsp == 0 {
            (own, other)
        } else {
            (other, own)
        }
    }

    fn share(&self, nsp: usize, own: f64, other: f64) -> f64 {
        let (p1, p2) = self.prices(nsp, own, other);
        let s = market_shares(self.q[0], self.q[1], p1, p2, self.params, self.regime)
            .expect("qualities validated on entry");
        if nsp == 0 {
            s.n1
        } else {
            s.n2
        }
    }

    fn profit(&self, nsp: usize, own: f64, other: f64) -> f64 {
        self.share(nsp, own, other) * (own - self.q[nsp])
    }

    /// Smallest own price at which demand vanishes, by bisection.
    fn choke_price(&self, nsp: usize, other: f64) -> f64 {
        let cost = self.q[nsp];
        if self.share(nsp, cost, other) <= 0.0 {
            return cost;
        }
        let mut lo = cost;
        let mut hi = cost.max(1e-3) * 2.0;
        let mut doublings = 0;
        while self.share(nsp, hi, other) > 0.0 && doublings < 200 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.share(nsp, mid, other) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn best_response(&self, nsp: usize, other: f64, settings: &OracleSettings) -> f64 {
        let cost = self.q[nsp];
        let choke = self.choke_price(nsp, other);
        if choke <= cost {
            return cost;
        }
        let points = settings.scan_points.max(3);
        let step = (choke - cost) / (points - 1) as f64;
        let (best_k, _) = (0..points)
            .map(|k| (k, self.profit(nsp, cost + k as f64 * step, other)))
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        let a = cost + best_k.saturating_sub(1) as f64 * step;
        let b = cost + (best_k + 1).min(points - 1) as f64 * step;
        let scan_best = cost + best_k as f64 * step;
        let refined = golden_max(|p| self.profit(nsp, p, other), a, b, settings.golden_tol);
        if self.profit(nsp, refined, other) >= self.profit(nsp, scan_best, other) {
            refined
        } else {
            scan_best
        }
    }

    fn deviation_gain(&self, nsp: usize, own: f64, other: f64, grid: usize) -> f64 {
        let cost = self.q[nsp];
        let choke = self.choke_price(nsp, other).max(cost);
        let current = self.profit(nsp, own, other);
        let grid = grid.max(2);
        let best = (0..grid)
            .map(|k| cost + (choke - cost) * k as f64 / (grid - 1) as f64)
            .map(|p| self.profit(nsp, p, other))
            .fold(f64::NEG_INFINITY, f64::max);
        best - current
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn market<'a>(q1: f64, q2: f64, params: &'a MarketParams, regime: Regime) -> Result<Market<'a>, GameError> {
    params.validate()?;
    let ok = match regime {
        Regime::Monopoly => q1 > 0.0,
        _ => q1 > q2 && q2 > 0.0,
    };
    if !ok {
        return Err(GameError::InvalidQualities { q1, q2 });
    }
    Ok(Market {
        q: [q1, q2],
        params,
        regime,
    })
}

/// Largest unilateral profit gain over a uniform own-price grid on
/// `[q_i, choke_i]`, for each NSP. The monopoly reports zero for NSP 2.
pub fn deviation_gain(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
    grid: usize,
) -> Result<(f64, f64), GameError> {
    let m = market(q1, q2, params, regime)?;
    let g1 = m.deviation_gain(0, p1, p2, grid);
    let g2 = if regime == Regime::Monopoly {
        0.0
    } else {
        m.deviation_gain(1, p2, p1, grid)
    };
    Ok((g1, g2))
}

/// Best-response iteration for stage-2 prices at fixed qualities.
pub fn numerical_price_equilibrium(
    q1: f64,
    q2: f64,
    params: &MarketParams,
    regime: Regime,
    start: Option<(f64, f64)>,
    settings: &OracleSettings,
) -> Result<PriceEquilibrium, GameError> {
    let m = market(q1, q2, params, regime)?;
    let (mut p1, mut p2) = start.unwrap_or((1.1 * q1, 1.1 * q2));

    if regime == Regime::Monopoly {
        let p1 = m.best_response(0, 0.0, settings);
        let gain = m.deviation_gain(0, p1, 0.0, settings.deviation_grid);
        return Ok(PriceEquilibrium {
            p1,
            p2: 0.0,
            rounds: 1,
            deviation_gain: (gain, 0.0),
        });
    }

    let mut trace = Vec::new();
    for round in 1..=settings.max_rounds {
        let next1 = m.best_response(0, p2, settings);
        let next2 = m.best_response(1, next1, settings);
        let change = (next1 - p1).abs().max((next2 - p2).abs());
        p1 = next1;
        p2 = next2;
        trace.push((p1, p2));
        if trace.len() > 10 {
            trace.remove(0);
        }
        if change < settings.price_tol {
            let gain = (
                m.deviation_gain(0, p1, p2, settings.deviation_grid),
                m.deviation_gain(1, p2, p1, settings.deviation_grid),
            );
            return Ok(PriceEquilibrium {
                p1,
                p2,
                rounds: round,
                deviation_gain: gain,
            });
        }
    }
    Err(GameError::NoConvergence {
        rounds: settings.max_rounds,
        trace,
    })
}

/// Stage-1 search over the low-end quality with `q1 = q_hat`; every grid
/// point is priced by [`numerical_price_equilibrium`].
pub fn numerical_quality_stage(
    params: &MarketParams,
    regime: Regime,
    settings: &OracleSettings,
) -> Result<QualityStage, GameError> {
    if regime == Regime::Monopoly {
        return Err(GameError::InvalidParams("no quality stage for a monopoly".into()));
    }
    params.validate()?;
    let q1 = params.q_hat;
    let points = settings.quality_grid.max(1);
    let curve: Vec<QualityPoint> = (1..=points)
        .into_par_iter()
        .map(|k| {
            let q2 = q1 * k as f64 / (points + 1) as f64;
            match numerical_price_equilibrium(q1, q2, params, regime, None, settings) {
                Ok(eq) => {
                    let s = market_shares(q1, q2, eq.p1, eq.p2, params, regime)
                        .expect("valid qualities");
                    QualityPoint {
                        q2,
                        equilibrium: Some((eq.p1, eq.p2)),
                        profit2: Some(s.n2 * (eq.p2 - q2)),
                    }
                }
                Err(_) => QualityPoint {
                    q2,
                    equilibrium: None,
                    profit2: None,
                },
            }
        })
        .collect();
    let best = curve
        .iter()
        .filter_map(|p| p.profit2.map(|v| (p.q2, v)))
        .fold(None::<(f64, f64)>, |acc, (q, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((q, v)),
        });
    let (q2_best, profit2_best) = best.ok_or(GameError::NoConvergence {
        rounds: settings.max_rounds,
        trace: Vec::new(),
    })?;
    Ok(QualityStage {
        q2_best,
        profit2_best,
        curve,
    })
}
