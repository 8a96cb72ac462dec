//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod support;

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mmshare::externality::{extract_mu, fit_segmented, MuNormalization, SegmentedFit};
use mmshare::game::{
    equilibrium, market_shares, numerical_price_equilibrium, sweep_market, EquilibriumOutcome,
    MarketGrid, MarketParams, MarketRow, OracleSettings, Regime, SupportConvention,
};
use mmshare::harness::{reproduce_fig2, ExperimentSpec, Fig2Result};
use mmshare::netsim::deployment::associate;
use mmshare::netsim::{
    schedule_slot, shannon_rate, DropContext, Deployment, LinkState, Point, ScenarioConfig,
    SlotRealization,
};

use support::{brute_force_shares, grid_deviation_gain, sample_case, Case};

type Verdict = (bool, String);

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn outcome_fields(o: &EquilibriumOutcome) -> [f64; 11] {
    [
        o.q1,
        o.q2,
        o.p1,
        o.p2,
        o.shares.n1,
        o.shares.n2,
        o.shares.omega_over,
        o.shares.omega_under,
        o.profit1,
        o.profit2,
        o.consumer_surplus,
    ]
}

fn criterion_1() -> Verdict {
    let o = match equilibrium(&MarketParams::paper(2.0, 1.0, 0.0), Regime::NoSharing) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let checks = [
        ("q2", o.q2, 4.0 / 7.0),
        ("p1", o.p1, 1.25),
        ("p2", o.p2, 9.0 / 14.0),
        ("n1", o.shares.n1, 7.0 / 24.0),
        ("n2", o.shares.n2, 7.0 / 48.0),
        ("profit1", o.profit1, 7.0 / 96.0),
        ("profit2", o.profit2, 1.0 / 96.0),
    ];
    let worst = checks
        .iter()
        .map(|(name, got, want)| (name, (got - want).abs()))
        .fold(("", 0.0f64), |acc, (n, e)| if e > acc.1 { (n, e) } else { acc });
    (worst.1 <= 1e-9, format!("max error {:.2e} ({})", worst.1, worst.0))
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..500 {
        let w = rng.random_range(1.5..6.0);
        let q = rng.random_range(0.5..2.0);
        for conv in SupportConvention::ALL {
            let p = MarketParams::new(w, q, 0.0, conv);
            match (equilibrium(&p, Regime::NoSharing), equilibrium(&p, Regime::Sharing)) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in outcome_fields(&a).iter().zip(outcome_fields(&b)) {
                        worst = worst.max((x - y).abs());
                    }
                    if a.conditions != b.conditions {
                        failures += 1;
                    }
                }
                _ => failures += 1,
            }
        }
    }
    (
        worst <= 1e-12 && failures == 0,
        format!("500 markets x 2 conventions, max field gap {worst:.2e}, {failures} mismatches"),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_scaled = 0.0f64;
    let mut worst_fixed = 0.0f64;
    let mut failures = 0;
    for _ in 0..200 {
        let w = rng.random_range(1.5..6.0);
        let mu = rng.random_range(0.0..0.95) * 1f64.min(w / 2.0);
        let q = rng.random_range(0.5..2.0);
        for conv in SupportConvention::ALL {
            for regime in [Regime::NoSharing, Regime::Sharing] {
                let base = equilibrium(&MarketParams::new(w, q, mu, conv), regime);
                for c in [0.5, 2.0, 10.0] {
                    let scaled = equilibrium(&MarketParams::new(w, c * q, mu, conv), regime);
                    let (Ok(a), Ok(b)) = (&base, scaled) else {
                        failures += 1;
                        continue;
                    };
                    for (x, y) in [(a.p1, b.p1), (a.p2, b.p2), (a.profit1, b.profit1), (a.profit2, b.profit2)] {
                        worst_scaled = worst_scaled.max((c * x - y).abs() / (c * x).abs().max(1.0));
                    }
                    for (x, y) in [
                        (a.shares.n1, b.shares.n1),
                        (a.shares.n2, b.shares.n2),
                        (a.shares.omega_over, b.shares.omega_over),
                        (a.shares.omega_under, b.shares.omega_under),
                    ] {
                        worst_fixed = worst_fixed.max((x - y).abs());
                    }
                }
            }
        }
    }
    (
        worst_scaled <= 1e-10 && worst_fixed <= 1e-10 && failures == 0,
        format!("prices/profits rel gap {worst_scaled:.2e}, shares/types gap {worst_fixed:.2e}, {failures} failures"),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut count = 0;
    for conv in SupportConvention::ALL {
        for regime in [Regime::NoSharing, Regime::Sharing] {
            for _ in 0..25 {
                let case: Case = sample_case(&mut rng, regime, conv);
                count += 1;
                let analytic = market_shares(case.q1, case.q2, case.p1, case.p2, &case.params, regime);
                let oracle = brute_force_shares(&case, (0.25, 0.25));
                match (analytic, oracle) {
                    (Ok(a), Some((n1, n2))) => {
                        let err = (a.n1 - n1).abs().max((a.n2 - n2).abs());
                        worst = worst.max(err);
                        if err > 2e-3 {
                            failures.push(format!("{conv}/{regime} err {err:.2e}"));
                        }
                    }
                    _ => failures.push(format!("{conv}/{regime} no solution")),
                }
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "{count} markets, max share error {worst:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let settings = OracleSettings::default();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut draws = 0;
    while draws < 50 {
        let w = rng.random_range(1.5..6.0);
        let mu = rng.random_range(0.0..0.95) * 1f64.min(w / 2.0);
        let q1 = rng.random_range(0.5..2.0);
        let q2 = q1 * rng.random_range(0.05..0.95);
        let threshold = w * w / ((w - mu) * (w - 2.0 * mu));
        if q1 / q2 <= threshold {
            continue;
        }
        draws += 1;
        let params = MarketParams::paper(w, q1, mu);
        let regime = if draws % 2 == 0 { Regime::Sharing } else { Regime::NoSharing };
        match numerical_price_equilibrium(q1, q2, &params, regime, None, &settings) {
            Ok(eq) => {
                let case = Case {
                    params,
                    regime,
                    q1,
                    q2,
                    p1: eq.p1,
                    p2: eq.p2,
                    omega_over: f64::NAN,
                    omega_under: f64::NAN,
                };
                let g1 = grid_deviation_gain(&case, 0, eq.p1, eq.p2, 1000);
                let g2 = grid_deviation_gain(&case, 1, eq.p2, eq.p1, 1000);
                worst = worst.max(g1.max(g2));
            }
            Err(_) => failures += 1,
        }
    }
    (
        worst <= 1e-6 && failures == 0,
        format!("50 draws, max unilateral gain {worst:.2e}, {failures} non-convergent"),
    )
}

type Key = (SupportConvention, u64, u64, u64);

fn by_key(rows: &[MarketRow]) -> HashMap<Key, HashMap<Regime, &MarketRow>> {
    let mut map: HashMap<Key, HashMap<Regime, &MarketRow>> = HashMap::new();
    for r in rows {
        let key = (r.convention, r.q_hat.to_bits(), r.mu.to_bits(), r.omega_hat.to_bits());
        map.entry(key).or_default().insert(r.regime, r);
    }
    map
}

fn criterion_6() -> Verdict {
    let rows = match sweep_market(&MarketGrid::default()) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let keys = by_key(&rows);
    let both_fraction = |mu: f64| {
        let mut hits = 0;
        let mut total = 0;
        for ((_, _, m, _), regimes) in &keys {
            if f64::from_bits(*m) != mu {
                continue;
            }
            let r = regimes[&Regime::NoSharing];
            total += 1;
            if r.prefers_sharing_1 == Some(true) && r.prefers_sharing_2 == Some(true) {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    };
    let (mm, micro) = (both_fraction(0.64), both_fraction(0.05));
    let a = mm < micro;

    let mut b_rows = 0;
    let mut b_violations = 0;
    let mut c_rows = 0;
    for regimes in keys.values() {
        let (Some(ns), Some(s)) = (
            regimes[&Regime::NoSharing].outcome,
            regimes[&Regime::Sharing].outcome,
        ) else {
            continue;
        };
        if regimes[&Regime::NoSharing].prefers_sharing_1 == Some(false) {
            b_rows += 1;
            if !(s.p1 < ns.p1) {
                b_violations += 1;
            }
        }
        if s.consumer_surplus < ns.consumer_surplus {
            c_rows += 1;
        }
    }
    let b = b_violations == 0 && b_rows > 0;
    let c = c_rows > 0;
    let tag = |ok: bool| if ok { "pass" } else { "FAIL" };
    (
        a && b && c,
        format!(
            "(a) {}: both-prefer fraction {mm:.4} at mu=0.64 vs {micro:.4} at mu=0.05; \
             (b) {}: {b_violations} violations over {b_rows} rows; \
             (c) {}: {c_rows} rows with CS_S < CS_NS",
            tag(a),
            tag(b),
            tag(c)
        ),
    )
}

fn pinned_deployment(config: &ScenarioConfig, bs: Vec<Point>, ue: Vec<Point>, shadow_db: f64) -> Deployment {
    let links = bs.len() * ue.len();
    let mut d = Deployment {
        band_of_bs: vec![0; bs.len()],
        bs_positions: bs,
        ue_positions: ue,
        link_state: vec![LinkState::Los; links],
        shadowing_db: vec![shadow_db; links],
        association: Vec::new(),
        resampled: 0,
    };
    d.association = associate(&d, config);
    d
}

fn criterion_7() -> Verdict {
    // 30 dBm + 20 + 10 dBi - (69.8 + 40 + 20.2) dB = -70 dBm; noise -174 + 7 + 90
    let config = ScenarioConfig::mmwave();
    let d = pinned_deployment(&config, vec![Point { x: 0.0, y: 0.0 }], vec![Point { x: 100.0, y: 0.0 }], 20.2);
    let ctx = DropContext::new(&config, 1.0, &d);
    let slot = SlotRealization {
        scheduled: vec![Some(0)],
        serving_fading: vec![1.0],
        cross_fading: vec![0.0],
    };
    let Some(pipeline) = ctx.slot_rate(0, &slot) else {
        return (false, "UE not associated".into());
    };
    let snr = 10f64.powf(-70.0 / 10.0) / 10f64.powf((-174.0 + 7.0 + 90.0) / 10.0);
    let hand = 0.8 * 1e9 * (1.0 + 0.5 * snr).log2();
    let direct = shannon_rate(1e9, 0.2, 0.5, 1e-7, 10f64.powf(-7.7), 0.0);
    let ok = rel_close(pipeline, hand, 1e-9) && rel_close(direct, hand, 1e-9) && (hand - 1.4478e9).abs() < 1e5;
    (
        ok,
        format!("pipeline {:.6} Gb/s, hand {:.6} Gb/s", pipeline / 1e9, hand / 1e9),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0usize; 4];
    let slots = 100_000;
    let exp = rand_distr::Exp1;
    for _ in 0..slots {
        let fading: Vec<f64> = (0..4).map(|_| Distribution::<f64>::sample(&exp, &mut rng)).collect();
        if let Some(ue) = schedule_slot(&fading, &mut rng) {
            counts[ue] += 1;
        }
    }
    let shares: Vec<f64> = counts.iter().map(|&c| c as f64 / slots as f64).collect();
    let worst = shares.iter().map(|s| (s - 0.25).abs()).fold(0.0, f64::max);
    (
        worst <= 0.02,
        format!("time shares {:.4} {:.4} {:.4} {:.4}", shares[0], shares[1], shares[2], shares[3]),
    )
}

fn fig2_spec(dir: &Path, workers: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::with_seed(20_240_601, dir);
    spec.workers = Some(workers);
    spec
}

fn criterion_9(run: &Result<Fig2Result, String>) -> Verdict {
    let r = match run {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let at = |n: f64| r.mmwave.points.iter().find(|p| (p.n - n).abs() < 1e-9).copied();
    let (Some(half), Some(full)) = (at(0.5), at(1.0)) else {
        return (false, "grid lacks n=0.5 or n=1.0".into());
    };
    let separated = full.rate5_bps > half.rate5_bps && full.ci_lo_bps > half.ci_hi_bps;
    let mu = |fit: &SegmentedFit| extract_mu(fit, MuNormalization::default()).ok();
    let refit = |points: &[mmshare::externality::SweepPoint]| {
        fit_segmented(&points.iter().map(|p| (p.n, p.rate5_bps)).collect::<Vec<_>>()).ok()
    };
    let mu_mm = refit(&r.mmwave.points).as_ref().and_then(mu);
    let mu_micro = refit(&r.microwave.points).as_ref().and_then(mu);
    let slopes = matches!((mu_mm, mu_micro), (Some(a), Some(b)) if a > b);
    (
        separated && slopes,
        format!(
            "mmWave rate5 {:.3e} [{:.3e}, {:.3e}] at n=1 vs {:.3e} [{:.3e}, {:.3e}] at n=0.5; mu mmWave {:?} vs microwave {:?}",
            full.rate5_bps, full.ci_lo_bps, full.ci_hi_bps, half.rate5_bps, half.ci_lo_bps, half.ci_hi_bps,
            mu_mm, mu_micro
        ),
    )
}

fn criterion_10() -> Verdict {
    let hinge = |x: f64| 1.0 + 2.0 * (x - 0.4).max(0.0);
    let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let clean: Vec<(f64, f64)> = xs.iter().map(|&x| (x, hinge(x))).collect();
    let exact = match fit_segmented(&clean) {
        Ok(f) => {
            f.breakpoint.is_some_and(|b| (b - 0.4).abs() <= 1e-9)
                && f.left.slope.abs() <= 1e-9
                && (f.right.slope - 2.0).abs() <= 1e-9
        }
        Err(_) => false,
    };
    // 1% of the response range 1 .. 2.2
    let noise = Normal::new(0.0, 0.012).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, hinge(x) + noise.sample(&mut rng))).collect();
        worst = worst.max(match fit_segmented(&pts).ok().and_then(|f| f.breakpoint) {
            Some(b) => (b - 0.4).abs(),
            None => f64::INFINITY,
        });
    }
    (
        exact && worst <= 0.05,
        format!("noiseless exact: {exact}; noisy max breakpoint error {worst:.4} over 20 seeds"),
    )
}

fn criterion_11(first: &Result<Fig2Result, String>, dir: &Path) -> Verdict {
    let a = match first {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let b = match reproduce_fig2(&fig2_spec(dir, 4)) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let mut identical = true;
    for (x, y) in [
        (&a.mmwave.sweep_csv, &b.mmwave.sweep_csv),
        (&a.microwave.sweep_csv, &b.microwave.sweep_csv),
        (&a.mmwave.fit_json, &b.mmwave.fit_json),
        (&a.microwave.fit_json, &b.microwave.fit_json),
    ] {
        identical &= fs::read(x).ok().is_some() && fs::read(x).ok() == fs::read(y).ok();
    }
    (identical, format!("1 vs 4 workers, outputs byte-identical: {identical}"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(&str, &str, Verdict, f64)> = Vec::new();
    let mut record = |id: &'static str, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {id:>2} {name} ({secs:.1}s): {}",
            if verdict.0 { "PASS" } else { "FAIL" },
            verdict.1
        );
        results.push((id, name, verdict, secs));
    };

    record("1", "closed-form fidelity", &mut criterion_1);
    record("2", "no-network-effect regime equivalence", &mut criterion_2);
    record("3", "quality-scale homogeneity", &mut criterion_3);
    record("4", "share solver vs brute-force consumers", &mut criterion_4);
    record("5", "Nash property of the price oracle", &mut criterion_5);
    record("6", "market-sweep qualitative shape", &mut criterion_6);
    record("7", "rate point check", &mut criterion_7);
    record("8", "scheduler time fairness", &mut criterion_8);

    let mut first = Err("not run".to_string());
    record("9", "network-effect direction", &mut || {
        first = reproduce_fig2(&fig2_spec(&dir.path().join("w1"), 1)).map_err(|e| e.to_string());
        criterion_9(&first)
    });
    record("10", "segmented-fit recovery", &mut criterion_10);
    let second_dir = dir.path().join("w4");
    record("11", "determinism across worker counts", &mut || criterion_11(&first, &second_dir));

    let failed: Vec<&str> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
