//! Shared oracles for the integration tests. Nothing here calls the share
//! solver's internals; the brute-force market is built from the utilities.

#![allow(dead_code)]

use mmshare::game::{market_shares, MarketParams, Regime, SupportConvention};
use rand::Rng;

pub const CONSUMERS: usize = 100_000;

/// A market together with prices that put both marginal types inside the
/// support.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub params: MarketParams,
    pub regime: Regime,
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub omega_over: f64,
    pub omega_under: f64,
}

/// Shares realized when every discretized consumer best-responds to the
/// expected sizes `(e1, e2)`.
pub fn discrete_response(case: &Case, e1: f64, e2: f64) -> (f64, f64) {
    let p = &case.params;
    let (lo, top, mu) = (p.lower(), p.omega_hat, p.mu);
    let (t1, t2) = match case.regime {
        Regime::Sharing => (e1 + e2, e1 + e2),
        _ => (e1, e2),
    };
    let mass = p.density() * (top - lo);
    let width = (top - lo) / CONSUMERS as f64;
    let (mut c1, mut c2) = (0usize, 0usize);
    for k in 0..CONSUMERS {
        let w = lo + (k as f64 + 0.5) * width;
        let u1 = w * case.q1 + mu * case.q1 * t1 - case.p1;
        let u2 = if case.regime == Regime::Monopoly {
            f64::NEG_INFINITY
        } else {
            w * case.q2 + mu * case.q2 * t2 - case.p2
        };
        if u1 >= u2 && u1 > 0.0 {
            c1 += 1;
        } else if u2 > u1 && u2 > 0.0 {
            c2 += 1;
        }
    }
    let unit = mass / CONSUMERS as f64;
    (c1 as f64 * unit, c2 as f64 * unit)
}

/// Damped fixed point on expected network sizes.
pub fn brute_force_shares(case: &Case, start: (f64, f64)) -> Option<(f64, f64)> {
    let (mut e1, mut e2) = start;
    for _ in 0..5_000 {
        let (n1, n2) = discrete_response(case, e1, e2);
        let delta = (n1 - e1).abs().max((n2 - e2).abs());
        e1 += 0.5 * (n1 - e1);
        e2 += 0.5 * (n2 - e2);
        if delta < 1e-10 {
            return Some((n1, n2));
        }
    }
    None
}

/// Continuous response map, used only for its Jacobian.
fn continuous_response(case: &Case, e1: f64, e2: f64) -> (f64, f64) {
    let p = &case.params;
    let (lo, top, mu, d) = (p.lower(), p.omega_hat, p.mu, p.density());
    let (t1, t2) = match case.regime {
        Regime::Sharing => (e1 + e2, e1 + e2),
        _ => (e1, e2),
    };
    let over = (case.p1 - case.p2 - mu * (case.q1 * t1 - case.q2 * t2)) / (case.q1 - case.q2);
    let under = (case.p2 - mu * case.q2 * t2) / case.q2;
    let over = over.clamp(lo, top);
    let under = under.clamp(lo, over);
    (d * (top - over), d * (over - under))
}

/// Largest eigenvalue modulus of the response Jacobian at `(n1, n2)`.
pub fn response_spectral_radius(case: &Case, n1: f64, n2: f64) -> f64 {
    let h = 1e-7;
    let col = |de1: f64, de2: f64| {
        let a = continuous_response(case, n1 + de1, n2 + de2);
        let b = continuous_response(case, n1 - de1, n2 - de2);
        ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h))
    };
    let (j11, j21) = col(h, 0.0);
    let (j12, j22) = col(0.0, h);
    let tr = j11 + j22;
    let det = j11 * j22 - j12 * j21;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.abs().sqrt()
    }
}

/// Draws a duopoly market with interior marginal types and a stable
/// (locally attracting) consumer equilibrium.
pub fn sample_case<R: Rng>(rng: &mut R, regime: Regime, convention: SupportConvention) -> Case {
    loop {
        let omega_hat = rng.random_range(1.5..6.0);
        let mu = rng.random_range(0.0..0.95) * 1f64.min(omega_hat / 2.0);
        let q1 = rng.random_range(0.5..2.0);
        let q2 = q1 * rng.random_range(0.1..0.9);
        let params = MarketParams::new(omega_hat, q1, mu, convention);
        let (lo, top, d) = (params.lower(), omega_hat, params.density());
        let mut a = lo + (top - lo) * rng.random_range(0.05..0.95);
        let mut b = lo + (top - lo) * rng.random_range(0.05..0.95);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (under, over) = (a, b);
        let n1 = d * (top - over);
        let n2 = d * (over - under);
        if n1 < 0.03 || n2 < 0.03 {
            continue;
        }
        let (t1, t2) = match regime {
            Regime::Sharing => (n1 + n2, n1 + n2),
            _ => (n1, n2),
        };
        let p2 = under * q2 + mu * q2 * t2;
        let p1 = p2 + over * (q1 - q2) + mu * (q1 * t1 - q2 * t2);
        let case = Case {
            params,
            regime,
            q1,
            q2,
            p1,
            p2,
            omega_over: over,
            omega_under: under,
        };
        if response_spectral_radius(&case, n1, n2) < 0.9 {
            return case;
        }
    }
}

/// Smallest own price with zero demand, by bisection on the share solver.
pub fn choke_price(case: &Case, nsp: usize, other: f64) -> f64 {
    let share = |p: f64| own_share(case, nsp, p, other);
    let cost = if nsp == 0 { case.q1 } else { case.q2 };
    let mut lo = cost;
    let mut hi = cost * 2.0 + 1.0;
    if share(lo) <= 0.0 {
        return lo;
    }
    while share(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if share(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn own_share(case: &Case, nsp: usize, own: f64, other: f64) -> f64 {
    let (p1, p2) = if nsp == 0 { (own, other) } else { (other, own) };
    let s = market_shares(case.q1, case.q2, p1, p2, &case.params, case.regime).unwrap();
    if nsp == 0 {
        s.n1
    } else {
        s.n2
    }
}

/// Best profit gain over a uniform grid of own prices on `[q_i, choke]`.
pub fn grid_deviation_gain(case: &Case, nsp: usize, own: f64, other: f64, points: usize) -> f64 {
    let cost = if nsp == 0 { case.q1 } else { case.q2 };
    let profit = |p: f64| own_share(case, nsp, p, other) * (p - cost);
    let choke = choke_price(case, nsp, other);
    let current = profit(own);
    (0..points)
        .map(|k| cost + (choke - cost) * k as f64 / (points - 1) as f64)
        .map(profit)
        .fold(f64::NEG_INFINITY, f64::max)
        - current
}
