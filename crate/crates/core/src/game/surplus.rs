use serde::{Deserialize, Serialize};

use crate::game::{EquilibriumOutcome, MarketParams, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurplusMode {
    /// Plain integral of utility over the buyers' types.
    #[default]
    Literal,
    /// Weighted by the taste density, i.e. surplus per unit consumer mass.
    Normalized,
}

/// `int_a^b (omega * q + c) d omega` for the affine utility.
fn affine_integral(q: f64, c: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    q * (b * b - a * a) / 2.0 + c * (b - a)
}

/// Total consumer surplus: utility integrated over high-end buyers
/// `[omega_over, omega_hat]` and low-end buyers `[omega_under, omega_over]`.
pub fn consumer_surplus(outcome: &EquilibriumOutcome, params: &MarketParams, mode: SurplusMode) -> f64 {
    let s = &outcome.shares;
    let (t1, t2) = outcome.regime.perceived_sizes(s.n1, s.n2);
    let mu = params.mu;
    let high = affine_integral(
        outcome.q1,
        mu * outcome.q1 * t1 - outcome.p1,
        s.omega_over,
        params.omega_hat,
    );
    let low = match outcome.regime {
        Regime::Monopoly => 0.0,
        _ => affine_integral(
            outcome.q2,
            mu * outcome.q2 * t2 - outcome.p2,
            s.omega_under,
            s.omega_over,
        ),
    };
    let total = high + low;
    match mode {
        SurplusMode::Literal => total,
        SurplusMode::Normalized => total * params.density(),
    }
}
