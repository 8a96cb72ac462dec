//! Network-externality estimation.
//!
//! A sweep measures the fifth-percentile UE throughput at a grid of network
//! sizes. A straight line or a continuous two-segment hinge is fitted to the
//! sweep, and the externality intensity `mu` is read off the right-hand
//! segment as a per-unit-`n` fractional rate gain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::{bootstrap_ci, fifth_percentile, simulate, ScenarioConfig, SimError};
use crate::seed::{derive_seed, rng_for};

/// Uniform breakpoint candidates added on top of the interior grid points.
const UNIFORM_CANDIDATES: usize = 50;

#[derive(Debug, Error)]
pub enum ExternalityError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("need at least two distinct abscissae")]
    DegenerateAbscissae,
    #[error("network-size grid must be ascending within (0, 1]")]
    InvalidGrid,
    #[error("fitted reference rate {0} is not positive")]
    NonPositiveReference(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: f64,
    pub rate5_bps: f64,
    pub ci_lo_bps: f64,
    pub ci_hi_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Single line (`breakpoint == None`, `left == right`) or continuous hinge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentedFit {
    pub breakpoint: Option<f64>,
    pub left: Line,
    pub right: Line,
    /// Residual sum of squares of the selected model.
    pub sse: f64,
    pub line_sse: f64,
    /// Best hinge SSE over all candidates, even when the line was selected.
    pub hinge_sse: Option<f64>,
}

impl SegmentedFit {
    pub fn eval(&self, x: f64) -> f64 {
        match self.breakpoint {
            Some(b) if x > b => self.right.eval(x),
            _ => self.left.eval(x),
        }
    }
}

/// How the right-segment slope is made unitless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuNormalization {
    /// Divide by the fitted rate at network size `at`.
    FittedAt { at: f64 },
    /// Divide by a fixed reference rate in bit/s.
    Reference { rate_bps: f64 },
}

impl Default for MuNormalization {
    fn default() -> Self {
        MuNormalization::FittedAt { at: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub bootstrap_resamples: usize,
    pub level: f64,
    pub workers: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bootstrap_resamples: 1000,
            level: 0.95,
            workers: None,
        }
    }
}

/// One simulated point per network size, each with its own derived seed.
pub fn sweep_network_size(
    config: &ScenarioConfig,
    n_grid: &[f64],
    drops: usize,
    slots: usize,
    seed: u64,
    options: &SweepOptions,
) -> Result<Vec<SweepPoint>, ExternalityError> {
    let ascending = n_grid.windows(2).all(|w| w[0] < w[1]);
    if n_grid.is_empty() || !ascending || n_grid.iter().any(|&n| !(n > 0.0 && n <= 1.0)) {
        return Err(ExternalityError::InvalidGrid);
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sim_seed = derive_seed(seed, "sweep-sim", &[i as u64]);
            let out = simulate(config, n, drops, slots, sim_seed, options.workers)?;
            let rates = out.throughputs();
            let rate5 = fifth_percentile(&rates)?;
            let mut rng = rng_for(seed, "sweep-bootstrap", &[i as u64]);
            let (lo, hi) =
                bootstrap_ci(&rates, options.level, options.bootstrap_resamples, &mut rng)?;
            Ok(SweepPoint {
                n,
                rate5_bps: rate5,
                ci_lo_bps: lo,
                ci_hi_bps: hi,
            })
        })
        .collect()
}

pub fn sweep_xy(points: &[SweepPoint]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.n, p.rate5_bps)).collect()
}

fn distinct_x(points: &[(f64, f64)]) -> usize {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

/// Ordinary least squares via centered moments.
pub fn fit_ols(points: &[(f64, f64)]) -> Result<Line, ExternalityError> {
    if distinct_x(points) < 2 {
        return Err(ExternalityError::DegenerateAbscissae);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    let slope = sxy / sxx;
    Ok(Line {
        slope,
        intercept: my - slope * mx,
    })
}

fn sse_of(points: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|&(x, y)| (y - f(x)).powi(2)).sum()
}

/// Least-squares fit of `y = a + b*x + c*max(0, x - breakpoint)`.
fn fit_hinge(points: &[(f64, f64)], breakpoint: f64) -> Option<(f64, f64, f64)> {
    let rows = points.len();
    let design = DMatrix::from_fn(rows, 3, |r, c| {
        let x = points[r].0;
        match c {
            0 => 1.0,
            1 => x,
            _ => (x - breakpoint).max(0.0),
        }
    });
    let target = DVector::from_iterator(rows, points.iter().map(|p| p.1));
    let qr = design.qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * scale.max(1e-300)) {
        return None;
    }
    let rhs = qr.q().transpose() * target;
    let coef = r.solve_upper_triangular(&rhs)?;
    Some((coef[0], coef[1], coef[2]))
}

fn bic(sse: f64, floor: f64, n: usize, params: usize) -> f64 {
    let n_f = n as f64;
    n_f * (sse.max(floor) / n_f).ln() + params as f64 * n_f.ln()
}

/// Breakpoint candidates: interior distinct abscissae, uniform points, and
/// for every split of the data the crossing of the two per-side OLS lines
/// when it falls inside the gap. Each keeps at least two observations on
/// either side.
fn breakpoint_candidates(points: &[(f64, f64)]) -> Vec<f64> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut distinct = xs.clone();
    distinct.dedup();
    let mut candidates: Vec<f64> = distinct[1..distinct.len() - 1].to_vec();
    candidates.extend(
        (1..=UNIFORM_CANDIDATES).map(|k| lo + (hi - lo) * k as f64 / (UNIFORM_CANDIDATES + 1) as f64),
    );
    for k in 2..distinct.len().saturating_sub(1) {
        let (gap_lo, gap_hi) = (distinct[k - 1], distinct[k]);
        let left: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 <= gap_lo).collect();
        let right: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= gap_hi).collect();
        if let (Ok(l), Ok(r)) = (fit_ols(&left), fit_ols(&right)) {
            let crossing = (r.intercept - l.intercept) / (l.slope - r.slope);
            if crossing.is_finite() && crossing >= gap_lo && crossing <= gap_hi {
                candidates.push(crossing);
            }
        }
    }
    candidates.retain(|&b| {
        let left = xs.iter().filter(|&&x| x <= b).count();
        left >= 2 && xs.len() - left >= 2
    });
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates
}

/// Line-vs-hinge fit; the hinge is kept only when BIC prefers it.
pub fn fit_segmented(points: &[(f64, f64)]) -> Result<SegmentedFit, ExternalityError> {
    if points.len() < 5 {
        return Err(ExternalityError::TooFewPoints {
            needed: 5,
            got: points.len(),
        });
    }
    let line = fit_ols(points)?;
    let line_sse = sse_of(points, |x| line.eval(x));

    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    for b in breakpoint_candidates(points) {
        let Some((a, s, c)) = fit_hinge(points, b) else { continue };
        let sse = sse_of(points, |x| a + s * x + c * (x - b).max(0.0));
        if best.map_or(true, |(_, _, _, _, e)| sse < e) {
            best = Some((b, a, s, c, sse));
        }
    }

    let single = SegmentedFit {
        breakpoint: None,
        left: line,
        right: line,
        sse: line_sse,
        line_sse,
        hinge_sse: best.map(|h| h.4),
    };
    let Some((b, a, s, c, hinge_sse)) = best else {
        return Ok(single);
    };

    let n = points.len();
    let scale = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    // residuals below this are treated as exact fits
    let floor = n as f64 * (1e-10 * scale).powi(2);
    if bic(hinge_sse, floor, n, 4) < bic(line_sse, floor, n, 2) {
        Ok(SegmentedFit {
            breakpoint: Some(b),
            left: Line {
                slope: s,
                intercept: a,
            },
            right: Line {
                slope: s + c,
                intercept: a - c * b,
            },
            sse: hinge_sse,
            line_sse,
            hinge_sse: Some(hinge_sse),
        })
    } else {
        Ok(single)
    }
}

/// Right-segment slope divided by the configured reference rate.
pub fn extract_mu(fit: &SegmentedFit, normalization: MuNormalization) -> Result<f64, ExternalityError> {
    let reference = match normalization {
        MuNormalization::FittedAt { at } => fit.right.eval(at),
        MuNormalization::Reference { rate_bps } => rate_bps,
    };
    if !(reference > 0.0) {
        return Err(ExternalityError::NonPositiveReference(reference));
    }
    Ok(fit.right.slope / reference)
}
