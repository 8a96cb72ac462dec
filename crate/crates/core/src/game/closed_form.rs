//! Closed-form subgame-perfect outcomes, evaluated exactly as printed for
//! either taste-support convention.

use crate::game::shares::{market_shares, profits};
use crate::game::surplus::{consumer_surplus, SurplusMode};
use crate::game::{Conditions, EquilibriumOutcome, GameError, MarketParams, Regime};

/// Equilibrium low-end quality without sharing.
pub fn quality_low_no_sharing(params: &MarketParams) -> f64 {
    let (w, mu, q) = (params.omega_hat, params.mu, params.q_hat);
    let root = (3.0 * (3.0 * w * w + 28.0 * w * mu - 20.0 * mu * mu)).sqrt();
    q * (w - mu).powi(2) * (11.0 * w - 10.0 * mu - root) / (2.0 * w * w * (7.0 * w - 5.0 * mu))
}

/// Equilibrium low-end quality with sharing.
pub fn quality_low_sharing(params: &MarketParams) -> f64 {
    let (w, mu, q) = (params.omega_hat, params.mu, params.q_hat);
    q * (4.0 * w - 3.0 * mu) / (7.0 * w - 6.0 * mu)
}

/// Stage-2 prices without sharing for qualities `q1 > q2`.
pub fn prices_no_sharing(params: &MarketParams, q1: f64, q2: f64) -> (f64, f64) {
    let (w, mu) = (params.omega_hat, params.mu);
    let den = 4.0 * q1 * (w - mu).powi(2) - q2 * w * w;
    let p1 = q1 * (1.0 + (w - 1.0) * (2.0 * q1 * (w - mu).powi(2) - q2 * w * (2.0 * w - mu)) / den);
    let p2 = q2 * (1.0 + (w - 1.0) * (q1 * (w - mu) * (w - 2.0 * mu) - q2 * w * w) / den);
    (p1, p2)
}

/// Stage-2 prices with sharing for qualities `q1 > q2`.
pub fn prices_sharing(params: &MarketParams, q1: f64, q2: f64) -> (f64, f64) {
    let (w, mu) = (params.omega_hat, params.mu);
    let den = (4.0 * w - 3.0 * mu) * q1 - w * q2;
    let markup = w * (w - 1.0) * (q1 - q2) / den;
    (q1 * (1.0 + 2.0 * markup), q2 * (1.0 + markup))
}

/// Monopoly price `q1 * (omega_hat - 1) / 2`.
pub fn price_monopoly(params: &MarketParams, q1: f64) -> f64 {
    q1 * (params.omega_hat - 1.0) / 2.0
}

fn quality_ratio_ok(params: &MarketParams, q1: f64, q2: f64) -> bool {
    let (w, mu) = (params.omega_hat, params.mu);
    params.mu_in_region() && q1 / q2 > w * w / ((w - mu) * (w - 2.0 * mu))
}

/// `(eq8_ok, eq9_ok)` for qualities `q1 > q2` under `regime`.
///
/// The quality-ratio test is `q1/q2 > w^2 / ((w - mu)(w - 2 mu))` together with
/// `0 <= mu < min(1, w/2)`; interiority is evaluated on the shares induced by
/// the regime's closed-form prices. For the monopoly only the `mu` region
/// applies to the first flag.
pub fn check_conditions(
    params: &MarketParams,
    q1: f64,
    q2: f64,
    regime: Regime,
) -> Result<Conditions, GameError> {
    let (eq8_ok, prices) = match regime {
        Regime::Monopoly => (params.mu_in_region(), (price_monopoly(params, q1), 0.0)),
        Regime::NoSharing | Regime::Sharing => {
            if !(q1 > q2 && q2 > 0.0) {
                return Err(GameError::InvalidQualities { q1, q2 });
            }
            let ok = quality_ratio_ok(params, q1, q2);
            let prices = if regime == Regime::Sharing {
                prices_sharing(params, q1, q2)
            } else {
                prices_no_sharing(params, q1, q2)
            };
            (ok, prices)
        }
    };
    let shares = market_shares(q1, q2, prices.0, prices.1, params, regime)?;
    Ok(Conditions {
        eq8_ok,
        eq9_ok: shares.valid,
    })
}

fn assemble(
    params: &MarketParams,
    regime: Regime,
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
) -> Result<EquilibriumOutcome, GameError> {
    let shares = market_shares(q1, q2, p1, p2, params, regime)?;
    let (profit1, profit2) = profits(q1, q2, p1, p2, &shares);
    let eq8_ok = match regime {
        Regime::Monopoly => params.mu_in_region(),
        _ => quality_ratio_ok(params, q1, q2),
    };
    let mut outcome = EquilibriumOutcome {
        regime,
        q1,
        q2,
        p1,
        p2,
        shares,
        profit1,
        profit2,
        consumer_surplus: 0.0,
        conditions: Conditions {
            eq8_ok,
            eq9_ok: shares.valid,
        },
    };
    outcome.consumer_surplus = consumer_surplus(&outcome, params, SurplusMode::Literal);
    Ok(outcome)
}

pub fn equilibrium_no_sharing(params: &MarketParams) -> Result<EquilibriumOutcome, GameError> {
    params.validate()?;
    let q1 = params.q_hat;
    let q2 = quality_low_no_sharing(params);
    if !(q2 > 0.0 && q2 < q1) {
        return Err(GameError::InvalidQualities { q1, q2 });
    }
    let (p1, p2) = prices_no_sharing(params, q1, q2);
    assemble(params, Regime::NoSharing, q1, q2, p1, p2)
}

pub fn equilibrium_sharing(params: &MarketParams) -> Result<EquilibriumOutcome, GameError> {
    params.validate()?;
    let q1 = params.q_hat;
    let q2 = quality_low_sharing(params);
    if !(q2 > 0.0 && q2 < q1) {
        return Err(GameError::InvalidQualities { q1, q2 });
    }
    let (p1, p2) = prices_sharing(params, q1, q2);
    assemble(params, Regime::Sharing, q1, q2, p1, p2)
}

pub fn equilibrium_monopoly(params: &MarketParams) -> Result<EquilibriumOutcome, GameError> {
    params.validate()?;
    if params.omega_hat <= 1.0 {
        return Err(GameError::MonopolyPrice(params.omega_hat));
    }
    let q1 = params.q_hat;
    assemble(params, Regime::Monopoly, q1, 0.0, price_monopoly(params, q1), 0.0)
}

pub fn equilibrium(params: &MarketParams, regime: Regime) -> Result<EquilibriumOutcome, GameError> {
    match regime {
        Regime::NoSharing => equilibrium_no_sharing(params),
        Regime::Sharing => equilibrium_sharing(params),
        Regime::Monopoly => equilibrium_monopoly(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn no_sharing_reference_point() {
        let o = equilibrium_no_sharing(&MarketParams::paper(2.0, 1.0, 0.0)).unwrap();
        assert!(close(o.q1, 1.0, 1e-12));
        assert!(close(o.q2, 4.0 / 7.0, 1e-12));
        assert!(close(o.p1, 1.25, 1e-12));
        assert!(close(o.p2, 9.0 / 14.0, 1e-12));
        assert!(close(o.shares.omega_under, 9.0 / 8.0, 1e-12));
        assert!(close(o.shares.omega_over, 17.0 / 12.0, 1e-12));
        assert!(close(o.shares.n1, 7.0 / 24.0, 1e-12));
        assert!(close(o.shares.n2, 7.0 / 48.0, 1e-12));
        assert!(close(o.profit1, 7.0 / 96.0, 1e-12));
        assert!(close(o.profit2, 1.0 / 96.0, 1e-12));
        assert!(o.conditions.all());
    }

    #[test]
    fn sharing_matches_no_sharing_without_network_effect() {
        let p = MarketParams::paper(2.0, 1.0, 0.0);
        let s = equilibrium_sharing(&p).unwrap();
        assert!(close(s.q2, 4.0 / 7.0, 1e-12));
        assert!(close(s.p1, 1.25, 1e-12));
        assert!(close(s.p2, 9.0 / 14.0, 1e-12));
    }

    #[test]
    fn sharing_quality_at_mmwave_intensity() {
        let q2 = quality_low_sharing(&MarketParams::paper(4.0, 1.0, 0.64));
        assert!(close(q2, 14.08 / 24.16, 1e-12));
        assert!(close(q2, 0.58278, 1e-5));
    }

    #[test]
    fn monopoly_reference_points() {
        let o = equilibrium_monopoly(&MarketParams::paper(4.0, 1.0, 0.0)).unwrap();
        assert!(close(o.p1, 1.5, 1e-12));
        assert!(close(o.shares.omega_over, 1.5, 1e-12));
        assert!(close(o.shares.n1, 0.625, 1e-12));
        assert!(close(o.profit1, 0.3125, 1e-12));
        assert!(close(o.consumer_surplus, 3.125, 1e-12));

        let o = equilibrium_monopoly(&MarketParams::paper(4.0, 1.0, 0.64)).unwrap();
        assert!(close(o.shares.omega_over, 1.02381, 1e-5));
        assert!(close(o.shares.n1, 0.744048, 1e-6));
        assert!(close(o.consumer_surplus, 4.4288, 1e-4));

        assert!(equilibrium_monopoly(&MarketParams::paper(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn quality_ratio_threshold() {
        let p = MarketParams::paper(2.0, 1.0, 0.64);
        let threshold = 4.0 / (1.36 * 0.72);
        assert!(close(threshold, 4.0849, 1e-4));
        assert!(check_conditions(&p, 1.0, 1.0 / (threshold * 1.001), Regime::NoSharing).unwrap().eq8_ok);
        assert!(!check_conditions(&p, 1.0, 1.0 / (threshold * 0.999), Regime::NoSharing).unwrap().eq8_ok);

        let p0 = MarketParams::paper(2.0, 1.0, 0.0);
        assert!(check_conditions(&p0, 1.0, 0.999, Regime::NoSharing).unwrap().eq8_ok);

        let bad = MarketParams::paper(2.0, 1.0, 1.1);
        assert!(!check_conditions(&bad, 1.0, 0.01, Regime::NoSharing).unwrap().eq8_ok);
    }

    proptest! {
        #[test]
        fn low_quality_below_high(omega_hat in 0.2f64..20.0, frac in 0.0f64..0.999, q_hat in 0.1f64..10.0) {
            let mu = frac * 1f64.min(omega_hat / 2.0);
            let p = MarketParams::paper(omega_hat, q_hat, mu);
            let qs = quality_low_sharing(&p);
            prop_assert!(qs < q_hat && qs > 0.0);
            let qn = quality_low_no_sharing(&p);
            prop_assert!(qn < q_hat);
        }

        #[test]
        fn low_quality_linear_in_q_hat(omega_hat in 1.5f64..6.0, frac in 0.0f64..0.99, c in 0.1f64..10.0) {
            let mu = frac * 1f64.min(omega_hat / 2.0);
            let a = quality_low_no_sharing(&MarketParams::paper(omega_hat, 1.0, mu));
            let b = quality_low_no_sharing(&MarketParams::paper(omega_hat, c, mu));
            prop_assert!((b - c * a).abs() <= 1e-12 * c);
            let m = equilibrium_monopoly(&MarketParams::paper(omega_hat, c, mu)).unwrap();
            prop_assert!((m.p1 - c * (omega_hat - 1.0) / 2.0).abs() <= 1e-12 * c);
        }
    }
}
