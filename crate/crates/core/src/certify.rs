//! The certification battery: each criterion recomputes a published result
//! from several independent routes and reports whether they agree.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::adversary::{self, deterministic_guarantee, robust_price, worst_case};
use crate::distributions::{
    make_full_info, make_point_mass, make_rs, make_worst_case, random_discrete, SignalDistribution,
    DEFAULT_GRID,
};
use crate::error::Result;
use crate::evaluation::{monte_carlo, profit_closed_form, profit_generic};
use crate::figures::{fig1_file_name, fig1_rows, fig2_rows, unit_grid, write_fig1, write_fig2};
use crate::market::{
    best_guaranteed_profit, gamma_bar, v_one_star, v_star_bisection, v_star_closed_form,
    MarketParams,
};
use crate::mechanisms::{
    buyer_optimal_check, exhaustive_vertex_search, optimal_mechanism, verify_indeterminacy,
    worst_case_convergence,
};
use crate::policies::{
    robust_random_pricing, robust_refund_policy, Offer, PolicyKind, PricingPolicy, TieRule,
};
use crate::rng::RngState;

/// Seed for every randomized criterion.
pub const CERTIFY_SEED: u64 = 20_240_601;

/// Prior used for the figure data.
pub const FIGURE_MU: f64 = 0.75;
pub const FIG1_GAMMAS: [f64; 4] = [0.25, 0.5, 0.8, 1.0];
/// `gamma` grid of the second figure: steps of 0.01 on `[0, 1]`.
pub const FIG2_STEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {}: {} ({:.2}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(limit) = self.time_limit {
            write!(f, ", limit {}s", limit.as_secs())?;
        }
        write!(f, ") {}", self.detail)
    }
}

/// Runs `check`, times it, and folds the time limit into the verdict.
fn timed<F>(id: u8, title: &'static str, limit: Option<u64>, check: F) -> CriterionOutcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let time_limit = limit.map(Duration::from_secs);
    let in_time = time_limit.is_none_or(|l| elapsed < l);
    let (passed, detail) = match outcome {
        Ok((ok, detail)) => (ok && in_time, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
        elapsed,
        time_limit,
    }
}

/// `n` points strictly inside `(0, 1)`: `(i + 0.5) / n`.
fn interior_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Named distributions with mean `mu`: the worst cases for the given
/// `gamma`s, `G^RS`, point mass, full information, and `n_random` random
/// discrete distributions.
pub fn distribution_battery(
    mu: f64,
    gammas: &[f64],
    n_random: usize,
    rng: &mut RngState,
) -> Result<Vec<(String, SignalDistribution)>> {
    let mut out = Vec::new();
    for &gamma in gammas {
        out.push((
            format!("worst_case_{gamma}"),
            make_worst_case(&MarketParams::new(mu, gamma)?),
        ));
    }
    out.push(("rs".into(), make_rs(mu)?));
    out.push(("point_mass".into(), make_point_mass(mu)?));
    out.push(("full_info".into(), make_full_info(mu)?));
    for i in 0..n_random {
        out.push((format!("random_{i}"), random_discrete(mu, rng, 8)));
    }
    Ok(out)
}

pub fn criterion_1() -> CriterionOutcome {
    timed(1, "closed form agrees with root finder", Some(5), || {
        let grid = interior_grid(50);
        let mut worst: f64 = 0.0;
        for &mu in &grid {
            for &gamma in &grid {
                let p = MarketParams::new(mu, gamma)?;
                worst = worst.max((v_star_closed_form(&p) - v_star_bisection(&p)).abs());
            }
        }
        let mut edge: f64 = 0.0;
        for &mu in &grid {
            let zero = best_guaranteed_profit(&MarketParams::new(mu, 0.0)?).v_star;
            let gb = gamma_bar(mu)?;
            let at_bar = best_guaranteed_profit(&MarketParams::new(mu, gb)?).v_star;
            edge = edge.max((zero - mu).abs()).max((at_bar - gb).abs());
        }
        Ok((
            worst <= 1e-9 && edge <= 1e-12,
            format!("max |lambert - bisection| = {worst:.2e}; max edge error = {edge:.2e}"),
        ))
    })
}

pub fn criterion_2() -> CriterionOutcome {
    timed(2, "minimax certificate", Some(30), || {
        let mus = interior_grid(10);
        let gammas: Vec<f64> = (1..=10).map(|j| j as f64 / 10.0).collect();
        let cases: Vec<(f64, f64)> = mus
            .iter()
            .flat_map(|&m| gammas.iter().map(move |&g| (m, g)))
            .collect();
        let errors = cases
            .par_iter()
            .map(|&(mu, gamma)| {
                let p = MarketParams::new(mu, gamma)?;
                let v = best_guaranteed_profit(&p).v_star;
                let rrp = robust_refund_policy(&p);
                let max_side = worst_case(
                    &rrp.profile(&p, TieRule::Adversarial)?,
                    mu,
                    adversary::DEFAULT_GRID,
                )?
                .value;
                let min_side =
                    profit_generic(&rrp, &make_worst_case(&p), &p, TieRule::Adversarial)?;
                Ok(((max_side - v).abs(), (min_side - v).abs()))
            })
            .collect::<Result<Vec<_>>>()?;
        let max_err = errors.iter().map(|e| e.0).fold(0.0, f64::max);
        let min_err = errors.iter().map(|e| e.1).fold(0.0, f64::max);
        Ok((
            max_err <= 1e-6 && min_err <= 1e-9,
            format!(
                "{} cases; max |worst_case - V*| = {max_err:.2e}; max |V(P_RRP|F_w) - V*| = {min_err:.2e}",
                cases.len()
            ),
        ))
    })
}

pub fn criterion_3() -> CriterionOutcome {
    timed(3, "refunds strictly dominate random pricing", None, || {
        let cases = [
            (0.75, 0.8),
            (0.75, 0.25),
            (0.5, 0.5),
            (0.3, 0.95),
            (0.9, 0.6),
        ];
        let mut rng = RngState::from_seed(CERTIFY_SEED);
        let mut min_gap = f64::INFINITY;
        for &(mu, gamma) in &cases {
            let p = MarketParams::new(mu, gamma)?;
            let rrp = robust_refund_policy(&p);
            let rp = robust_random_pricing(mu)?;
            for _ in 0..200 {
                let f = random_discrete(mu, &mut rng, 8);
                let gap = profit_generic(&rrp, &f, &p, TieRule::Adversarial)?
                    - profit_generic(&rp, &f, &p, TieRule::Adversarial)?;
                min_gap = min_gap.min(gap);
            }
        }
        let mut min_v_gap = f64::INFINITY;
        for &mu in &interior_grid(10) {
            let v1 = v_one_star(mu)?;
            for gamma in unit_grid(FIG2_STEPS).into_iter().filter(|&g| g < 1.0) {
                let v = best_guaranteed_profit(&MarketParams::new(mu, gamma)?).v_star;
                min_v_gap = min_v_gap.min(v - v1);
            }
        }
        Ok((
            min_gap > 0.0 && min_v_gap > 0.0,
            format!("min V(P_RRP|F) - V(P_RP|F) = {min_gap:.3e}; min V* - V1* = {min_v_gap:.3e}"),
        ))
    })
}

pub fn criterion_4() -> CriterionOutcome {
    timed(4, "deterministic price worst case", None, || {
        let mut rng = RngState::from_seed(CERTIFY_SEED + 4);
        let mut pair_err: f64 = 0.0;
        for _ in 0..100 {
            let mu = 0.02 + 0.96 * rng.uniform();
            let price = 0.01 + 0.98 * rng.uniform();
            let p = MarketParams::new(mu, 0.5)?;
            let profile = PricingPolicy::single(Offer::non_refundable(price)?)
                .profile(&p, TieRule::Adversarial)?;
            let value = worst_case(&profile, mu, adversary::DEFAULT_GRID)?.value;
            pair_err = pair_err.max((value - deterministic_guarantee(price, mu)).abs());
        }
        let mut argmax_err: f64 = 0.0;
        let mut guarantee_err: f64 = 0.0;
        for mu in [0.25, 0.5, 0.75] {
            let rp = robust_price(mu)?;
            let p = MarketParams::new(mu, 0.5)?;
            let prices: Vec<f64> = (1..)
                .map(|i| i as f64 * 1e-4)
                .take_while(|&x| x < mu)
                .collect();
            let (best_price, best_value) = prices
                .par_iter()
                .map(|&price| {
                    let profile = PricingPolicy::single(Offer::non_refundable(price)?)
                        .profile(&p, TieRule::Adversarial)?;
                    Ok((
                        price,
                        worst_case(&profile, mu, adversary::DEFAULT_GRID)?.value,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(
                    (0.0, f64::NEG_INFINITY),
                    |b, c| if c.1 > b.1 { c } else { b },
                );
            argmax_err = argmax_err.max((best_price - rp.price).abs());
            guarantee_err = guarantee_err
                .max((best_value - rp.guarantee).abs())
                .max((rp.grid_guarantee - rp.guarantee).abs());
        }
        Ok((
            pair_err <= 1e-6 && argmax_err <= 1e-3 && guarantee_err <= 1e-6,
            format!(
                "max pair error {pair_err:.2e}; argmax error {argmax_err:.2e}; guarantee error {guarantee_err:.2e}"
            ),
        ))
    })
}

pub fn criterion_5() -> CriterionOutcome {
    timed(5, "random pricing bound and G^RS", None, || {
        let mut rng = RngState::from_seed(CERTIFY_SEED + 5);
        let mut sup_excess = f64::NEG_INFINITY;
        let mut min_margin = f64::INFINITY;
        for mu in [0.25, 0.5, 0.75] {
            let v1 = v_one_star(mu)?;
            let p = MarketParams::new(mu, 1.0)?;
            let rs = make_rs(mu)?;
            let best = (1..10_000)
                .into_par_iter()
                .map(|i| {
                    let policy = PricingPolicy::single(Offer::non_refundable(i as f64 * 1e-4)?);
                    profit_generic(&policy, &rs, &p, TieRule::Adversarial)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            sup_excess = sup_excess.max(best - v1);
            let rp = robust_random_pricing(mu)?;
            for (_, f) in distribution_battery(mu, &[0.0, 0.3, 0.7, 1.0], 50, &mut rng)? {
                min_margin =
                    min_margin.min(profit_generic(&rp, &f, &p, TieRule::Adversarial)? - v1);
            }
        }
        Ok((
            sup_excess <= 1e-6 && min_margin >= -1e-12,
            format!("max sup_p V(p|G^RS) - V1* = {sup_excess:.2e}; min V(P_RP|F) - V1* = {min_margin:.3e}"),
        ))
    })
}

pub fn criterion_6() -> CriterionOutcome {
    timed(
        6,
        "optimal mechanisms against the worst case",
        Some(60),
        || {
            let cases = [(0.75, 0.8), (0.5, 1.0), (0.3, 0.6), (0.75, 0.25)];
            let mut notes = Vec::new();
            let mut ok = true;
            for &(mu, gamma) in &cases {
                let p = MarketParams::new(mu, gamma)?;
                let conv = worst_case_convergence(&p, &[251, 501, 2001])?;
                let errs: Vec<f64> = conv.iter().map(|c| c.2.abs()).collect();
                let shrinking = errs[1] <= errs[0] && errs[2] <= errs[1];
                // O(1/n): going from 251 to 2001 points should cut the error several-fold.
                let rate_ok = errs[0] < 1e-12 || errs[2] * 3.0 <= errs[0];
                let spread = verify_indeterminacy(&p, DEFAULT_GRID, CERTIFY_SEED)?.spread;
                ok &= errs[2] <= 2e-3 && shrinking && rate_ok && spread <= 2e-3;
                notes.push(format!(
                    "({mu},{gamma}): err {:.1e}/{:.1e}/{:.1e} spread {spread:.1e}",
                    errs[0], errs[1], errs[2]
                ));
            }
            let mut rng = RngState::from_seed(CERTIFY_SEED + 6);
            let mut instances = 0;
            let mut scan_err: f64 = 0.0;
            while instances < 300 {
                let mu = 0.05 + 0.9 * rng.uniform();
                let gamma = rng.uniform();
                let f = random_discrete(mu, &mut rng, 10);
                if f.atoms().len() > 12 {
                    continue;
                }
                let p = MarketParams::new(mu, gamma)?;
                let scan = optimal_mechanism(&f, &p)?.value;
                scan_err = scan_err.max((scan - exhaustive_vertex_search(&f, &p)?).abs());
                instances += 1;
            }
            ok &= scan_err <= 1e-12;
            notes.push(format!(
                "scan vs exhaustive over {instances} instances: {scan_err:.1e}"
            ));
            Ok((ok, notes.join("; ")))
        },
    )
}

pub fn criterion_7() -> CriterionOutcome {
    timed(7, "worst case is buyer optimal", None, || {
        let cases = [(0.75, 0.8), (0.75, 0.25), (0.5, 1.0)];
        let mut rng = RngState::from_seed(CERTIFY_SEED + 7);
        let mut ok = true;
        let mut notes = Vec::new();
        for &(mu, gamma) in &cases {
            let p = MarketParams::new(mu, gamma)?;
            let battery: Vec<SignalDistribution> =
                (0..100).map(|_| random_discrete(mu, &mut rng, 8)).collect();
            let r = buyer_optimal_check(&p, &battery)?;
            let attained = (r.worst_case_buyer_payoff - r.payoff_bound).abs() <= 1e-9
                && (r.worst_case_posted_profit - r.v_star).abs() <= 1e-9;
            let seller_ok = r.min_seller_value >= r.v_star - 1e-3;
            let buyer_ok = r.max_buyer_payoff <= r.payoff_bound + 1e-3;
            ok &= attained && seller_ok && buyer_ok;
            notes.push(format!(
                "({mu},{gamma}): U(F_w) - (mu - V*) = {:.1e}, min seller - V* = {:.3e}, max buyer - (mu - V*) = {:.3e}",
                r.worst_case_buyer_payoff - r.payoff_bound,
                r.min_seller_value - r.v_star,
                r.max_buyer_payoff - r.payoff_bound
            ));
        }
        Ok((ok, notes.join("; ")))
    })
}

/// Monte Carlo sample size per policy and distribution.
pub const MC_SAMPLES: usize = 1_000_000;

pub fn criterion_8() -> CriterionOutcome {
    timed(8, "three evaluation routes agree", Some(60), || {
        let cases = [(0.75, 0.8), (0.5, 0.2), (0.6, 1.0)];
        let mut rng = RngState::from_seed(CERTIFY_SEED + 8);
        let mut closed_err: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        let mut comparisons = 0;
        let mut simulated = 0;
        for (case, &(mu, gamma)) in cases.iter().enumerate() {
            let p = MarketParams::new(mu, gamma)?;
            let battery = distribution_battery(mu, &[gamma], 50, &mut rng)?;
            for kind in PolicyKind::ALL {
                let Ok(policy) = kind.build(&p) else { continue };
                let seeds = rng.split(battery.len());
                let rows = battery
                    .par_iter()
                    .zip(seeds)
                    .map(|((name, f), mut stream)| {
                        let generic = profit_generic(&policy, f, &p, TieRule::Adversarial)?;
                        let closed = profit_closed_form(kind, f, &p)?;
                        // The first case simulates the whole battery, the others the named distributions.
                        if case > 0 && name.starts_with("random_") {
                            return Ok(((closed - generic).abs(), None));
                        }
                        let mc = monte_carlo(
                            &policy,
                            f,
                            &p,
                            TieRule::Adversarial,
                            MC_SAMPLES,
                            &mut stream,
                        )?;
                        let z = if mc.std_error > 0.0 {
                            (mc.estimate - generic).abs() / mc.std_error
                        } else if (mc.estimate - generic).abs() <= 1e-12 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        Ok(((closed - generic).abs(), Some(z)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (c, z) in rows {
                    closed_err = closed_err.max(c);
                    comparisons += 1;
                    if let Some(z) = z {
                        worst_z = worst_z.max(z);
                        simulated += 1;
                    }
                }
            }
        }
        Ok((
            closed_err <= 1e-9 && worst_z <= 4.0,
            format!(
                "{comparisons} policy/distribution pairs, {simulated} simulated; max |closed - generic| = {closed_err:.2e}; max |MC - generic| / se = {worst_z:.2}"
            ),
        ))
    })
}

/// Figure CSVs as `(file name, contents)`.
pub fn figure_files(
    mu: f64,
    fig1_gammas: &[f64],
    fig2_gammas: &[f64],
) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for &gamma in fig1_gammas {
        let mut buf = Vec::new();
        write_fig1(&fig1_rows(&MarketParams::new(mu, gamma)?), &mut buf)?;
        files.push((fig1_file_name(gamma), buf));
    }
    let mut buf = Vec::new();
    write_fig2(&fig2_rows(mu, fig2_gammas)?, &mut buf)?;
    files.push(("fig2.csv".into(), buf));
    Ok(files)
}

/// The default figure set.
pub fn default_figure_files() -> Result<Vec<(String, Vec<u8>)>> {
    figure_files(FIGURE_MU, &FIG1_GAMMAS, &unit_grid(FIG2_STEPS))
}

/// Compares regenerated figures with the files in `fixtures` (skipped when
/// `None`) and checks their shape properties.
pub fn criterion_9(fixtures: Option<&Path>) -> CriterionOutcome {
    timed(9, "figure data", None, || {
        let files = default_figure_files()?;
        let again = default_figure_files()?;
        let mut ok = files == again;
        let mut notes = Vec::new();
        if let Some(dir) = fixtures {
            let mut mismatched = Vec::new();
            for (name, bytes) in &files {
                match std::fs::read(dir.join(name)) {
                    Ok(existing) if &existing == bytes => {}
                    _ => mismatched.push(name.clone()),
                }
            }
            ok &= mismatched.is_empty();
            notes.push(if mismatched.is_empty() {
                format!("{} files match fixtures", files.len())
            } else {
                format!("mismatched: {}", mismatched.join(", "))
            });
        }

        let mut fig1_gap = f64::INFINITY;
        let mut eq_err: f64 = 0.0;
        for &gamma in &FIG1_GAMMAS {
            let p = MarketParams::new(FIGURE_MU, gamma)?;
            let v = best_guaranteed_profit(&p).v_star;
            for r in fig1_rows(&p) {
                fig1_gap = fig1_gap.min(r.cdf - r.bound);
                if r.q >= v && r.q < gamma.min(1.0) {
                    eq_err = eq_err.max((r.cdf - r.bound).abs());
                }
            }
        }
        let rows = fig2_rows(FIGURE_MU, &unit_grid(FIG2_STEPS))?;
        let decreasing = rows.windows(2).all(|w| w[1].v_star < w[0].v_star);
        let dominance = rows
            .iter()
            .map(|r| r.v_star - r.v_one.max(r.robust_price).max(r.generous_alone))
            .fold(f64::INFINITY, f64::min);
        ok &= fig1_gap >= -1e-12 && eq_err <= 1e-12 && decreasing && dominance >= -1e-12;
        notes.push(format!(
            "min F_w - (1 - V*/q) = {fig1_gap:.1e}; equality error {eq_err:.1e}; V* decreasing: {decreasing}; min dominance margin {dominance:.1e}"
        ));
        Ok((ok, notes.join("; ")))
    })
}

/// Every criterion in order.
pub fn run_all(fixtures: Option<&Path>) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(fixtures),
    ]
}
