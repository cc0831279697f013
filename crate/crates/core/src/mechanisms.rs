//! Optimal direct mechanisms with refunds against a known discrete signal
//! distribution.
//!
//! A reduced mechanism is a nondecreasing `alpha0(q)`, the probability of
//! receiving the product without a return option. Refundable allocation is
//! pinned down by it: `alpha_r = 0` below `gamma` and `1 - alpha0` from
//! `gamma` on. The buyer's rent is `U(q) = int_0^q alpha0`, and the seller's
//! per-signal profit is
//!
//! ```text
//! v(q) = q alpha0(q) + [q >= gamma] (q - gamma)/(1 - gamma) (1 - alpha0(q)) - U(q).
//! ```
//!
//! On a grid, `alpha0` is a right-continuous step function, so
//! `U(q_i) = sum_{j < i} alpha0(q_j) (q_{j+1} - q_j)`.

use std::io::Write;

use serde::Serialize;

use crate::distributions::{make_worst_case, SignalDistribution, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::evaluation::{buyer_payoff, profit_generic};
use crate::market::{best_guaranteed_profit, MarketParams};
use crate::policies::{Offer, PricingPolicy, TieRule};
use crate::report::fmt_sig;
use crate::rng::RngState;

/// Values within this distance of the optimum count as optimal when the
/// buyer-preferred mechanism is selected.
pub const OPTIMUM_TIE_TOL: f64 = 1e-12;

/// `(q - gamma) / (1 - gamma)` above `gamma`, zero at and below it. At
/// `gamma = 1` the signal `q = 1` keeps the generous-refund limit of 1.
fn refund_margin(q: f64, gamma: f64) -> f64 {
    if gamma >= 1.0 {
        if q >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else if q > gamma {
        (q - gamma) / (1.0 - gamma)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismAllocation {
    grid: Vec<f64>,
    alpha0: Vec<f64>,
    gamma: f64,
}

impl MechanismAllocation {
    /// Requires an ascending grid in `[0, 1]`, `alpha0` in `[0, 1]` and
    /// nondecreasing, and `alpha0 = 0` at `q = 0`.
    pub fn new(grid: Vec<f64>, alpha0: Vec<f64>, gamma: f64) -> Result<Self> {
        if grid.is_empty() || grid.len() != alpha0.len() {
            return Err(Error::InvalidAllocation(
                "grid and alpha0 must be nonempty and of equal length".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] < 0.0 || grid[grid.len() - 1] > 1.0 {
            return Err(Error::InvalidAllocation(
                "grid must ascend within [0, 1]".into(),
            ));
        }
        if alpha0.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidAllocation("alpha0 must lie in [0, 1]".into()));
        }
        if alpha0.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidAllocation(
                "alpha0 must be nondecreasing".into(),
            ));
        }
        if grid[0] == 0.0 && alpha0[0] != 0.0 {
            return Err(Error::InvalidAllocation("alpha0(0) must be 0".into()));
        }
        Ok(Self {
            grid,
            alpha0,
            gamma,
        })
    }

    /// `alpha0 = 1[q >= grid[k]]`; `k = grid.len()` gives `alpha0 = 0` everywhere.
    pub fn threshold(grid: Vec<f64>, k: usize, gamma: f64) -> Result<Self> {
        let alpha0 = (0..grid.len())
            .map(|i| if i >= k { 1.0 } else { 0.0 })
            .collect();
        Self::new(grid, alpha0, gamma)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn alpha0(&self) -> &[f64] {
        &self.alpha0
    }

    pub fn alpha_r(&self) -> Vec<f64> {
        self.grid
            .iter()
            .zip(&self.alpha0)
            .map(|(&q, &a)| if q < self.gamma { 0.0 } else { 1.0 - a })
            .collect()
    }

    /// Buyer rent `U(q_i)` at every grid point.
    pub fn rents(&self) -> Vec<f64> {
        let mut rents = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        for i in 0..self.grid.len() {
            rents.push(acc);
            if i + 1 < self.grid.len() {
                acc += self.alpha0[i] * (self.grid[i + 1] - self.grid[i]);
            }
        }
        rents
    }

    /// Seller profit `v(q_i)` at every grid point.
    pub fn profits(&self) -> Vec<f64> {
        self.rents()
            .iter()
            .enumerate()
            .map(|(i, rent)| self.profit_with_rent(i, *rent))
            .collect()
    }

    fn profit_with_rent(&self, i: usize, rent: f64) -> f64 {
        let (q, a) = (self.grid[i], self.alpha0[i]);
        q * a + refund_margin(q, self.gamma) * (1.0 - a) - rent
    }

    fn masses(&self, dist: &SignalDistribution) -> Result<Vec<f64>> {
        grid_masses(&self.grid, dist)
    }

    pub fn expected_profit(&self, dist: &SignalDistribution) -> Result<f64> {
        let masses = self.masses(dist)?;
        Ok(masses.iter().zip(self.profits()).map(|(m, v)| m * v).sum())
    }

    pub fn expected_buyer_payoff(&self, dist: &SignalDistribution) -> Result<f64> {
        let masses = self.masses(dist)?;
        Ok(masses.iter().zip(self.rents()).map(|(m, u)| m * u).sum())
    }

    /// `q,alpha0,alpha_r` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["q", "alpha0", "alpha_r"])?;
        for ((q, a0), ar) in self.grid.iter().zip(&self.alpha0).zip(self.alpha_r()) {
            w.write_record([fmt_sig(*q), fmt_sig(*a0), fmt_sig(ar)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seller profit `v(q_i)` of the allocation at grid index `i`.
pub fn per_signal_mechanism_profit(alloc: &MechanismAllocation, i: usize) -> f64 {
    let rent = alloc.rents()[i];
    alloc.profit_with_rent(i, rent)
}

/// Masses of `dist` on the points of `grid`; every atom must sit on a grid point.
fn grid_masses(grid: &[f64], dist: &SignalDistribution) -> Result<Vec<f64>> {
    if !dist.is_discrete() {
        return Err(Error::GridMismatch(
            "distribution has a density piece".into(),
        ));
    }
    let mut masses = vec![0.0; grid.len()];
    for (at, mass) in dist.atoms() {
        let i = grid
            .binary_search_by(|g| g.total_cmp(&at))
            .map_err(|_| Error::GridMismatch(format!("atom at {at} is not a grid point")))?;
        masses[i] += mass;
    }
    Ok(masses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalMechanism {
    pub allocation: MechanismAllocation,
    pub value: f64,
    /// Buyer payoff under the selected (buyer-preferred) optimum.
    pub buyer_payoff: f64,
}

/// Seller-optimal reduced mechanism against a discrete distribution, on the
/// distribution's own support.
///
/// The objective is linear in `alpha0` and the vertices of the monotone
/// feasible set are threshold indicators, so an exact scan over thresholds
/// finds the optimum. Among optimal thresholds the one with the highest
/// buyer payoff is returned.
pub fn optimal_mechanism(
    dist: &SignalDistribution,
    params: &MarketParams,
) -> Result<OptimalMechanism> {
    if !dist.is_discrete() {
        return Err(Error::GridMismatch(
            "optimal_mechanism needs a discrete distribution; discretize first".into(),
        ));
    }
    let atoms = dist.atoms();
    let grid: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let gamma = params.gamma();
    let n = grid.len();

    // value(k) = q_k * mass(q >= q_k) + sum_{i < k} m_i (q_i - gamma)^+ / (1 - gamma)
    // rent(k)  = sum_{i >= k} m_i (q_i - q_k)
    let mut tail_mass = vec![0.0; n + 1];
    let mut tail_moment = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail_mass[i] = tail_mass[i + 1] + masses[i];
        tail_moment[i] = tail_moment[i + 1] + masses[i] * grid[i];
    }
    let mut refund_prefix = 0.0;
    let mut candidates: Vec<(usize, f64, f64)> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k < n && grid[k] > 0.0 {
            let value = grid[k] * tail_mass[k] + refund_prefix;
            let rent = tail_moment[k] - grid[k] * tail_mass[k];
            candidates.push((k, value, rent));
        }
        if k == n {
            candidates.push((n, refund_prefix, 0.0));
        } else {
            refund_prefix += masses[k] * refund_margin(grid[k], gamma);
        }
    }
    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let &(k, value, rent) = candidates
        .iter()
        .filter(|c| c.1 >= best - OPTIMUM_TIE_TOL)
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("at least one candidate");
    Ok(OptimalMechanism {
        allocation: MechanismAllocation::threshold(grid, k, gamma)?,
        value,
        buyer_payoff: rent,
    })
}

/// Best value over every monotone 0/1 allocation, found by enumerating all
/// `2^n` binary vectors and evaluating each through the per-signal route.
/// Test-scale only (`n <= 20`).
pub fn exhaustive_vertex_search(dist: &SignalDistribution, params: &MarketParams) -> Result<f64> {
    let grid: Vec<f64> = dist.atoms().iter().map(|a| a.0).collect();
    let n = grid.len();
    if n > 20 {
        return Err(Error::InvalidAllocation(format!(
            "{n} grid points is too many to enumerate"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for bits in 0u32..(1 << n) {
        let alpha0: Vec<f64> = (0..n).map(|i| ((bits >> i) & 1) as f64).collect();
        if let Ok(alloc) = MechanismAllocation::new(grid.clone(), alpha0, params.gamma()) {
            best = best.max(alloc.expected_profit(dist)?);
        }
    }
    Ok(best)
}

/// Expected profit of a battery of allocations against discretized `F_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndeterminacyReport {
    pub v_star: f64,
    pub grid_points: usize,
    pub entries: Vec<(String, f64)>,
    /// `max - min` over the battery.
    pub spread: f64,
}

/// Evaluates several feasible allocations against the worst-case
/// distribution; all earn `V*` in the continuum, so the spread measures
/// discretization error only.
pub fn verify_indeterminacy(
    params: &MarketParams,
    grid_n: usize,
    seed: u64,
) -> Result<IndeterminacyReport> {
    let sol = best_guaranteed_profit(params);
    let dist = make_worst_case(params).discretize(grid_n)?;
    let grid: Vec<f64> = dist.atoms().iter().map(|a| a.0).collect();
    let gamma = params.gamma();
    let first_at_or_above = |x: f64| grid.partition_point(|&q| q < x);

    let mut battery: Vec<(String, MechanismAllocation)> = vec![
        (
            "alpha0=0".into(),
            MechanismAllocation::threshold(grid.clone(), grid.len(), gamma)?,
        ),
        (
            "alpha0=1[q>=gamma]".into(),
            MechanismAllocation::threshold(grid.clone(), first_at_or_above(gamma), gamma)?,
        ),
        (
            "alpha0=1[q>=v_star]".into(),
            MechanismAllocation::threshold(grid.clone(), first_at_or_above(sol.v_star), gamma)?,
        ),
        (
            "alpha0=1".into(),
            MechanismAllocation::threshold(grid.clone(), 0, gamma)?,
        ),
    ];
    let mut rng = RngState::from_seed(seed);
    for r in 0..5 {
        let mut alpha0: Vec<f64> = grid.iter().map(|_| rng.uniform()).collect();
        alpha0.sort_by(f64::total_cmp);
        if grid[0] == 0.0 {
            alpha0[0] = 0.0;
        }
        battery.push((
            format!("random_{r}"),
            MechanismAllocation::new(grid.clone(), alpha0, gamma)?,
        ));
    }

    let entries = battery
        .into_iter()
        .map(|(name, alloc)| Ok((name, alloc.expected_profit(&dist)?)))
        .collect::<Result<Vec<_>>>()?;
    let max = entries
        .iter()
        .map(|e| e.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    Ok(IndeterminacyReport {
        v_star: sol.v_star,
        grid_points: grid.len(),
        entries,
        spread: max - min,
    })
}

/// Optimal value against discretized `F_w` at several grid sizes.
pub fn worst_case_convergence(
    params: &MarketParams,
    sizes: &[usize],
) -> Result<Vec<(usize, f64, f64)>> {
    let v = best_guaranteed_profit(params).v_star;
    let fw = make_worst_case(params);
    sizes
        .iter()
        .map(|&n| {
            let value = optimal_mechanism(&fw.discretize(n)?, params)?.value;
            Ok((n, value, value - v))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuyerOptimalEntry {
    pub seller_value: f64,
    pub buyer_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuyerOptimalReport {
    pub v_star: f64,
    /// `mu - V*`.
    pub payoff_bound: f64,
    /// Buyer payoff from the posted price `(V*, 0)` against `F_w`.
    pub worst_case_buyer_payoff: f64,
    /// Seller profit from the posted price `(V*, 0)` against `F_w`.
    pub worst_case_posted_profit: f64,
    /// Seller-optimal value against discretized `F_w`.
    pub worst_case_optimal_value: f64,
    pub entries: Vec<BuyerOptimalEntry>,
    pub min_seller_value: f64,
    pub max_buyer_payoff: f64,
}

/// Checks that no signal distribution leaves the buyer more than `mu - V*`
/// once the seller best-responds, and that `F_w` attains it.
///
/// Non-discrete battery members are discretized on [`DEFAULT_GRID`] points.
/// The indifferent buyer purchases at the posted price `V*`.
pub fn buyer_optimal_check(
    params: &MarketParams,
    battery: &[SignalDistribution],
) -> Result<BuyerOptimalReport> {
    let sol = best_guaranteed_profit(params);
    let v = sol.v_star;
    let fw = make_worst_case(params);
    let posted = PricingPolicy::single(Offer::non_refundable(v)?);
    let worst_case_posted_profit = profit_generic(&posted, &fw, params, TieRule::Favorable)?;
    let worst_case_buyer_payoff = buyer_payoff(&posted, &fw, params, TieRule::Favorable)?;
    let worst_case_optimal_value = optimal_mechanism(&fw.discretize(DEFAULT_GRID)?, params)?.value;

    let entries = battery
        .iter()
        .map(|f| {
            let f = f.discretize(DEFAULT_GRID)?;
            let opt = optimal_mechanism(&f, params)?;
            Ok(BuyerOptimalEntry {
                seller_value: opt.value,
                buyer_payoff: opt.buyer_payoff,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BuyerOptimalReport {
        v_star: v,
        payoff_bound: params.mu() - v,
        worst_case_buyer_payoff,
        worst_case_posted_profit,
        worst_case_optimal_value,
        min_seller_value: entries
            .iter()
            .map(|e| e.seller_value)
            .fold(f64::INFINITY, f64::min),
        max_buyer_payoff: entries
            .iter()
            .map(|e| e.buyer_payoff)
            .fold(f64::NEG_INFINITY, f64::max),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_discrete, make_full_info, make_point_mass, random_discrete};
    use crate::evaluation::profit_generic;
    use crate::policies::robust_refund_policy;

    fn params(mu: f64, gamma: f64) -> MarketParams {
        MarketParams::new(mu, gamma).unwrap()
    }

    #[test]
    fn per_signal_examples() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let gamma = 0.3;
        let none = MechanismAllocation::threshold(grid.clone(), grid.len(), gamma).unwrap();
        for (i, &q) in grid.iter().enumerate() {
            let expected = if q >= gamma {
                (q - gamma) / (1.0 - gamma)
            } else {
                0.0
            };
            assert!((per_signal_mechanism_profit(&none, i) - expected).abs() < 1e-15);
        }
        // alpha0 = 1 from q = 0.1 on (alpha0(0) must stay 0): a posted price of 0.1
        let all = MechanismAllocation::threshold(grid.clone(), 1, gamma).unwrap();
        for i in 1..grid.len() {
            assert!((per_signal_mechanism_profit(&all, i) - 0.1).abs() < 1e-15);
        }
        let posted = MechanismAllocation::threshold(grid.clone(), 5, gamma).unwrap();
        for i in 5..grid.len() {
            assert!((per_signal_mechanism_profit(&posted, i) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn full_coverage_from_zero_leaves_nothing() {
        let grid = vec![0.2, 0.5, 0.9];
        let all = MechanismAllocation::threshold(grid, 0, 0.4).unwrap();
        // alpha0 = 1 on the whole grid: v(q) = q - (q - q_1) = q_1
        for i in 0..3 {
            assert!((per_signal_mechanism_profit(&all, i) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn allocation_validation() {
        assert!(MechanismAllocation::new(vec![0.0, 0.5], vec![1.0, 1.0], 0.3).is_err());
        assert!(MechanismAllocation::new(vec![0.1, 0.5], vec![0.6, 0.4], 0.3).is_err());
        assert!(MechanismAllocation::new(vec![0.5, 0.1], vec![0.0, 0.0], 0.3).is_err());
        assert!(MechanismAllocation::new(vec![0.1, 0.5], vec![0.0, 1.5], 0.3).is_err());
        let a = MechanismAllocation::new(vec![0.1, 0.3, 0.5], vec![0.0, 0.2, 0.7], 0.3).unwrap();
        assert_eq!(a.alpha_r(), vec![0.0, 0.8, 0.30000000000000004]);
    }

    #[test]
    fn optimal_examples() {
        let pr = params(0.75, 0.5);
        let fi = make_full_info(0.75).unwrap();
        let opt = optimal_mechanism(&fi, &pr).unwrap();
        assert!((opt.value - 0.75).abs() < 1e-15);
        assert!(opt.buyer_payoff.abs() < 1e-15);

        let pm = make_point_mass(0.75).unwrap();
        let opt = optimal_mechanism(&pm, &pr).unwrap();
        assert!((opt.value - 0.75).abs() < 1e-15);

        assert!(optimal_mechanism(&make_worst_case(&params(0.75, 0.8)), &pr).is_err());
    }

    #[test]
    fn scan_matches_exhaustive_search() {
        let mut rng = RngState::from_seed(17);
        for case in 0..200 {
            let mu = 0.1 + 0.8 * rng.uniform();
            let gamma = rng.uniform();
            let pr = params(mu, gamma);
            let f = random_discrete(mu, &mut rng, 9);
            if f.atoms().len() > 12 {
                continue;
            }
            let scan = optimal_mechanism(&f, &pr).unwrap();
            let brute = exhaustive_vertex_search(&f, &pr).unwrap();
            assert!(
                (scan.value - brute).abs() < 1e-12,
                "case {case}: {} vs {brute}",
                scan.value
            );
            // the closed-form scan value agrees with evaluating its allocation
            let direct = scan.allocation.expected_profit(&f).unwrap();
            assert!((direct - scan.value).abs() < 1e-12);
            let rent = scan.allocation.expected_buyer_payoff(&f).unwrap();
            assert!((rent - scan.buyer_payoff).abs() < 1e-12);
            // fractional monotone allocations do no better
            let grid: Vec<f64> = f.atoms().iter().map(|a| a.0).collect();
            for _ in 0..20 {
                let mut a: Vec<f64> = grid.iter().map(|_| rng.uniform()).collect();
                a.sort_by(f64::total_cmp);
                if grid[0] == 0.0 {
                    a[0] = 0.0;
                }
                let alloc = MechanismAllocation::new(grid.clone(), a, gamma).unwrap();
                assert!(alloc.expected_profit(&f).unwrap() <= scan.value + 1e-12);
            }
        }
    }

    #[test]
    fn alpha_r_rule_in_optimal_allocations() {
        let mut rng = RngState::from_seed(4);
        let pr = params(0.5, 0.45);
        for _ in 0..50 {
            let f = random_discrete(0.5, &mut rng, 8);
            let opt = optimal_mechanism(&f, &pr).unwrap();
            let a = &opt.allocation;
            for ((q, a0), ar) in a.grid().iter().zip(a.alpha0()).zip(a.alpha_r()) {
                if *q < 0.45 {
                    assert_eq!(ar, 0.0);
                } else {
                    assert_eq!(ar, 1.0 - a0);
                }
            }
        }
    }

    #[test]
    fn worst_case_optimum_near_v_star() {
        for &(mu, gamma) in &[(0.75, 0.25), (0.75, 0.8), (0.5, 1.0), (0.3, 0.9)] {
            let pr = params(mu, gamma);
            let conv = worst_case_convergence(&pr, &[251, 501, 2001]).unwrap();
            for w in conv.windows(2) {
                assert!(w[1].2 <= w[0].2 + 1e-15, "{conv:?}");
            }
            assert!(conv[2].2 >= -1e-12 && conv[2].2 <= 2e-3, "{conv:?}");
        }
    }

    #[test]
    fn indeterminacy_examples() {
        let low = verify_indeterminacy(&params(0.75, 0.25), DEFAULT_GRID, 1).unwrap();
        for (_, v) in &low.entries {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
        let high = verify_indeterminacy(&params(0.75, 0.8), DEFAULT_GRID, 1).unwrap();
        assert!(high.spread <= 2e-3, "{high:?}");
        let top = verify_indeterminacy(&params(0.5, 1.0), DEFAULT_GRID, 1).unwrap();
        for (_, v) in &top.entries {
            assert!((v - 0.186_682_308_851).abs() < 2e-3, "{top:?}");
        }
    }

    #[test]
    fn buyer_optimal_examples() {
        let pr = params(0.75, 0.8);
        let mut rng = RngState::from_seed(12);
        let battery: Vec<SignalDistribution> = (0..20)
            .map(|_| random_discrete(0.75, &mut rng, 6))
            .collect();
        let rep = buyer_optimal_check(&pr, &battery).unwrap();
        assert!((rep.worst_case_buyer_payoff - rep.payoff_bound).abs() < 1e-12);
        assert!((rep.worst_case_posted_profit - rep.v_star).abs() < 1e-12);
        assert!(rep.min_seller_value >= rep.v_star - 1e-12);
        assert!(rep.max_buyer_payoff <= rep.payoff_bound + 1e-12);

        let fi = buyer_optimal_check(&pr, &[make_full_info(0.75).unwrap()]).unwrap();
        assert!(fi.entries[0].buyer_payoff.abs() < 1e-15);

        // low-cost branch: F_w has an atom exactly at the posted price
        let pr = params(0.75, 0.25);
        let rep = buyer_optimal_check(&pr, &[]).unwrap();
        assert!((rep.worst_case_posted_profit - 2.0 / 3.0).abs() < 1e-12);
        assert!((rep.worst_case_buyer_payoff - (0.75 - 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn optimal_value_dominates_robust_refund_policy() {
        let mut rng = RngState::from_seed(77);
        for &(mu, gamma) in &[(0.75, 0.8), (0.4, 0.3), (0.6, 0.99)] {
            let pr = params(mu, gamma);
            let rrp = robust_refund_policy(&pr);
            for _ in 0..50 {
                let f = random_discrete(mu, &mut rng, 7);
                let opt = optimal_mechanism(&f, &pr).unwrap().value;
                let pol = profit_generic(&rrp, &f, &pr, TieRule::Adversarial).unwrap();
                assert!(opt >= pol - 1e-12, "{opt} < {pol}");
            }
        }
    }

    #[test]
    fn grid_mismatch_detected() {
        let alloc = MechanismAllocation::threshold(vec![0.2, 0.8], 1, 0.3).unwrap();
        let f = make_discrete(&[0.3, 0.8], &[0.5, 0.5], None).unwrap();
        assert!(matches!(
            alloc.expected_profit(&f),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn allocation_csv() {
        let alloc = MechanismAllocation::threshold(vec![0.2, 0.5, 0.8], 2, 0.4).unwrap();
        let mut buf = Vec::new();
        alloc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "q,alpha0,alpha_r\n0.2,0,0\n0.5,0,1\n0.8,1,0\n");
    }
}
