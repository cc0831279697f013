//! Acceptance battery. Prints one PASS/FAIL line per criterion, then the
//! independent oracle checks, and exits non-zero on any failure.
//!
//! Set `REFUND_LAB_BLESS=1` to rewrite the figure fixtures instead of
//! comparing against them.

use std::path::PathBuf;

use refund_lab::adversary::{worst_case_oracle, DEFAULT_GRID};
use refund_lab::certify::{self, default_figure_files, CriterionOutcome};
use refund_lab::market::{best_guaranteed_profit, MarketParams};
use refund_lab::policies::{Offer, PricingPolicy, TieRule};

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `V*` from bisection on `V (2 - gamma + ln gamma - ln V) = mu` over
/// `(0, gamma)`, or the low-cost formula.
fn v_star_oracle(mu: f64, gamma: f64) -> f64 {
    let gamma_bar = 1.0 - (1.0 - mu).sqrt();
    if gamma <= gamma_bar {
        return (mu - gamma) / (1.0 - gamma);
    }
    let h = |v: f64| v * (2.0 - gamma + gamma.ln() - v.ln()) - mu;
    let (mut lo, mut hi) = (1e-300, gamma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn report(outcome: &CriterionOutcome) -> bool {
    println!("{outcome}");
    outcome.passed
}

fn acceptance_criteria() {
    if std::env::var_os("REFUND_LAB_BLESS").is_some() {
        std::fs::create_dir_all(fixtures_dir()).unwrap();
        for (name, bytes) in default_figure_files().unwrap() {
            std::fs::write(fixtures_dir().join(name), bytes).unwrap();
        }
    }
    let outcomes = certify::run_all(Some(&fixtures_dir()));
    let failed: Vec<u8> = outcomes
        .iter()
        .filter(|o| !report(o))
        .map(|o| o.id)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn v_star_matches_independent_bisection() {
    for i in 0..50 {
        for j in 0..=50 {
            let mu = (i as f64 + 0.5) / 50.0;
            let gamma = j as f64 / 50.0;
            let v = best_guaranteed_profit(&MarketParams::new(mu, gamma).unwrap()).v_star;
            let oracle = v_star_oracle(mu, gamma);
            assert!(
                (v - oracle).abs() <= 1e-9,
                "({mu}, {gamma}): {v} vs {oracle}"
            );
        }
    }
}

fn deterministic_worst_case_matches_pairwise_oracle() {
    let params = MarketParams::new(0.6, 0.5).unwrap();
    for &(price, mu) in &[(0.3, 0.6), (0.5, 0.75), (0.2, 0.25), (0.7, 0.4)] {
        let profile = PricingPolicy::single(Offer::non_refundable(price).unwrap())
            .profile(&params, TieRule::Adversarial)
            .unwrap();
        let oracle = worst_case_oracle(&profile, mu, 1001).unwrap();
        let hull = refund_lab::adversary::worst_case(&profile, mu, DEFAULT_GRID)
            .unwrap()
            .value;
        let formula = if price < mu {
            price * (mu - price) / (1.0 - price)
        } else {
            0.0
        };
        assert!(
            (oracle - formula).abs() < 1e-12,
            "{price} {mu}: {oracle} vs {formula}"
        );
        assert!((hull - formula).abs() < 1e-12);
    }
}

fn main() {
    let checks: [(&str, fn()); 3] = [
        ("acceptance criteria", acceptance_criteria),
        (
            "V* against independent bisection",
            v_star_matches_independent_bisection,
        ),
        (
            "deterministic worst case against pairwise oracle",
            deterministic_worst_case_matches_pairwise_oracle,
        ),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match std::panic::catch_unwind(check) {
            Ok(()) => println!("[PASS] {name}"),
            Err(_) => {
                println!("[FAIL] {name}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
