//! Market shares under fulfilled expectations.
//!
//! For interior allocations the marginal types and shares solve a linear
//! system (indifference between NSPs, indifference of the low-end buyer with
//! not buying, and the two share identities). Corner allocations come from
//! iterating the exact consumer response until the expected sizes reproduce
//! themselves.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::game::{GameError, MarketParams, Regime, SharesSolution};

const FE_TOL: f64 = 1e-15;
const FE_MAX_ITER: usize = 20_000;

fn check_qualities(q1: f64, q2: f64, regime: Regime) -> Result<(), GameError> {
    let ok = match regime {
        Regime::Monopoly => q1 > 0.0,
        _ => q1 > q2 && q2 > 0.0,
    };
    if ok && q1.is_finite() {
        Ok(())
    } else {
        Err(GameError::InvalidQualities { q1, q2 })
    }
}

/// Solves the share system for `(omega_over, omega_under, n1, n2)`.
///
/// When the solution is not interior it is replaced by the corner allocation
/// from [`fulfilled_demand`] and flagged `valid = false`.
pub fn market_shares(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
) -> Result<SharesSolution, GameError> {
    check_qualities(q1, q2, regime)?;
    let linear = linear_shares(q1, q2, p1, p2, params, regime)?;
    if linear.valid {
        Ok(linear)
    } else {
        Ok(fulfilled_demand(q1, q2, p1, p2, params, regime, Some(&linear)))
    }
}

/// The raw linear-system solution, without corner handling.
pub fn linear_shares(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
) -> Result<SharesSolution, GameError> {
    let mu = params.mu;
    let d = params.density();
    let top = params.omega_hat;
    let lo = params.lower();

    if regime == Regime::Monopoly {
        // omega_over * q1 + mu * q1 * n1 = p1,  n1 = d * (top - omega_over)
        let m = Matrix2::new(q1, mu * q1, d, 1.0);
        let rhs = Vector2::new(p1, d * top);
        let x = m.lu().solve(&rhs).ok_or(GameError::Singular)?;
        let (over, n1) = (x[0], x[1]);
        return Ok(SharesSolution {
            n1,
            n2: 0.0,
            omega_over: over,
            omega_under: over,
            valid: lo < over && over < top,
        });
    }

    let dq = q1 - q2;
    // unknowns: omega_over, omega_under, n1, n2
    let (eq4, eq5) = match regime {
        Regime::Sharing => (
            [dq, 0.0, mu * dq, mu * dq],
            [0.0, q2, mu * q2, mu * q2],
        ),
        _ => ([dq, 0.0, mu * q1, -mu * q2], [0.0, q2, 0.0, mu * q2]),
    };
    #[rustfmt::skip]
    let m = Matrix4::new(
        eq4[0], eq4[1], eq4[2], eq4[3],
        eq5[0], eq5[1], eq5[2], eq5[3],
        d,      0.0,    1.0,    0.0,
        -d,     d,      0.0,    1.0,
    );
    let rhs = Vector4::new(p1 - p2, p2, d * top, 0.0);
    let x = m.lu().solve(&rhs).ok_or(GameError::Singular)?;
    let (over, under, n1, n2) = (x[0], x[1], x[2], x[3]);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(GameError::Singular);
    }
    Ok(SharesSolution {
        n1,
        n2,
        omega_over: over,
        omega_under: under,
        valid: lo < under && under < over && over < top,
    })
}

/// Consumer response to expected network sizes `(e1, e2)`: marginal types
/// clamped to the support, plus the realized shares.
fn respond(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
    e1: f64,
    e2: f64,
) -> (f64, f64, f64, f64) {
    let mu = params.mu;
    let d = params.density();
    let top = params.omega_hat;
    let lo = params.lower();
    let (t1, t2) = regime.perceived_sizes(e1, e2);
    // u1(w) = 0
    let w1 = (p1 - mu * q1 * t1) / q1;
    if regime == Regime::Monopoly {
        let over = w1.clamp(lo, top);
        return (over, over, d * (top - over), 0.0);
    }
    // u1(w) = u2(w) and u2(w) = 0
    let w12 = (p1 - p2 - mu * (q1 * t1 - q2 * t2)) / (q1 - q2);
    let w2 = (p2 - mu * q2 * t2) / q2;
    let (over, under) = if w2 < w12 {
        let over = w12.clamp(lo, top);
        (over, w2.clamp(lo, over))
    } else {
        let w = w1.clamp(lo, top);
        (w, w)
    };
    (over, under, d * (top - over), d * (over - under))
}

/// Fulfilled-expectations allocation including corners (an NSP priced out,
/// full market coverage). Iterates the consumer response from `start`
/// (clamped) or from an empty market.
pub fn fulfilled_demand(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
    start: Option<&SharesSolution>,
) -> SharesSolution {
    let (mut e1, mut e2) = start.map_or((0.0, 0.0), |s| (s.n1.clamp(0.0, 1.0), s.n2.clamp(0.0, 1.0)));
    let mut state = respond(q1, q2, p1, p2, params, regime, e1, e2);
    for damping in [1.0, 0.5] {
        let mut converged = false;
        for _ in 0..FE_MAX_ITER {
            state = respond(q1, q2, p1, p2, params, regime, e1, e2);
            let (n1, n2) = (state.2, state.3);
            let delta = (n1 - e1).abs().max((n2 - e2).abs());
            e1 += damping * (n1 - e1);
            e2 += damping * (n2 - e2);
            if delta <= FE_TOL {
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }
    let (over, under, n1, n2) = state;
    let lo = params.lower();
    let top = params.omega_hat;
    let valid = regime != Regime::Monopoly && lo < under && under < over && over < top;
    SharesSolution {
        n1,
        n2,
        omega_over: over,
        omega_under: under,
        valid: valid && n1 > 0.0 && n2 > 0.0 && linear_agrees(q1, q2, p1, p2, params, regime, n1, n2),
    }
}

fn linear_agrees(
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    params: &MarketParams,
    regime: Regime,
    n1: f64,
    n2: f64,
) -> bool {
    linear_shares(q1, q2, p1, p2, params, regime)
        .map(|l| l.valid && (l.n1 - n1).abs() < 1e-9 && (l.n2 - n2).abs() < 1e-9)
        .unwrap_or(false)
}

/// `pi_i = n_i * (p_i - q_i)`.
pub fn profits(q1: f64, q2: f64, p1: f64, p2: f64, shares: &SharesSolution) -> (f64, f64) {
    (shares.n1 * (p1 - q1), shares.n2 * (p2 - q2))
}
