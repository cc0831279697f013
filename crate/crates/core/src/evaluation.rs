//! Expected seller profit and buyer payoff of a pricing policy against a
//! signal distribution, by three routes: closed forms, exact integration
//! of the per-signal profile, and Monte Carlo simulation.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Segment, SignalDistribution};
use crate::error::{Error, Result};
use crate::market::{best_guaranteed_profit, v_one_star, Branch, MarketParams};
use crate::policies::{
    Offer, PerSignalProfile, Piece, PolicyElement, PolicyKind, PricingPolicy, TieRule,
};
use crate::rng::RngState;

/// `E_F[g(q)]` for a per-signal profile `g`.
///
/// Atoms read the profile's value at their location (knot values included),
/// density pieces are integrated in closed form piece by piece.
pub fn expect(profile: &PerSignalProfile, dist: &SignalDistribution) -> f64 {
    dist.segments()
        .iter()
        .map(|seg| match *seg {
            Segment::Atom { at, mass } => mass * profile.eval(at),
            Segment::Pareto { lo, hi, scale } => pareto_expectation(profile, lo, hi, scale),
        })
        .sum()
}

fn pareto_expectation(profile: &PerSignalProfile, lo: f64, hi: f64, scale: f64) -> f64 {
    let mut cuts = vec![lo];
    cuts.extend(
        profile
            .knots()
            .iter()
            .copied()
            .filter(|&k| k > lo && k < hi),
    );
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| {
            let piece = profile.piece_at(0.5 * (w[0] + w[1]));
            scale * piece_moment(&piece, w[0], w[1])
        })
        .sum()
}

/// `int_s^e piece(q) / q^2 dq`.
fn piece_moment(piece: &Piece, s: f64, e: f64) -> f64 {
    let (ls, le) = (s.ln(), e.ln());
    piece.constant * (1.0 / s - 1.0 / e)
        + piece.slope * (le - ls)
        + piece.q_log_q * 0.5 * (le * le - ls * ls)
}

/// `V(P|F)` by exact integration of the policy's profit profile.
pub fn profit_generic(
    policy: &PricingPolicy,
    dist: &SignalDistribution,
    params: &MarketParams,
    tie: TieRule,
) -> Result<f64> {
    Ok(expect(&policy.profile(params, tie)?, dist))
}

/// `U(P|F)`, the buyer's expected payoff.
pub fn buyer_payoff(
    policy: &PricingPolicy,
    dist: &SignalDistribution,
    params: &MarketParams,
    tie: TieRule,
) -> Result<f64> {
    Ok(expect(&policy.buyer_profile(params, tie)?, dist))
}

/// Closed-form profit of a named policy, written in terms of areas under `F`.
pub fn profit_closed_form(
    kind: PolicyKind,
    dist: &SignalDistribution,
    params: &MarketParams,
) -> Result<f64> {
    let gamma = params.gamma();
    let area = |a: f64, b: f64| dist.integral_cdf(a, b);
    match kind {
        PolicyKind::RobustRandomPricing => {
            let v1 = v_one_star(params.mu())?;
            Ok(v1 + area(0.0, v1)? / -v1.ln())
        }
        PolicyKind::GenerousRefund => generous_closed_form(dist, gamma),
        PolicyKind::RandomDiscounting => {
            let sol = best_guaranteed_profit(params);
            if sol.v_star >= gamma {
                return Err(Error::EmptySegment {
                    gamma,
                    gamma_bar: sol.gamma_bar,
                });
            }
            let v = sol.v_star;
            Ok((gamma - v - area(v, gamma)?) / (gamma / v).ln())
        }
        PolicyKind::RobustRefundPolicy => {
            let sol = best_guaranteed_profit(params);
            let v = sol.v_star;
            match sol.branch {
                Branch::LowCost if gamma == 0.0 => Ok(v),
                Branch::LowCost => Ok(v + area(0.0, gamma)? / (1.0 - gamma)),
                Branch::HighCost => Ok(v + area(0.0, v)? / sol.discount_denominator(params)),
            }
        }
        PolicyKind::RobustPrice => {
            let price = params.gamma_bar();
            // p (1 - F(p)) with the atom at p excluded by the adversarial tie
            Ok(price * (1.0 - dist.cdf(price)))
        }
    }
}

fn generous_closed_form(dist: &SignalDistribution, gamma: f64) -> Result<f64> {
    if gamma >= 1.0 {
        // only q = 1 buys, and never returns
        return Ok(dist.atom_mass_at(1.0));
    }
    Ok(1.0 - dist.integral_cdf(gamma, 1.0)? / (1.0 - gamma))
}

/// Simulated profit with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Number of independent streams a simulation is split into. Fixed so that
/// results do not depend on the worker count.
const MC_STREAMS: usize = 64;

/// Simulates `n` rounds: draw an offer, draw a signal, let the buyer decide,
/// draw the fit `v ~ Bernoulli(q)`, and return the product iff `v = 0` and
/// the refund is positive.
pub fn monte_carlo(
    policy: &PricingPolicy,
    dist: &SignalDistribution,
    params: &MarketParams,
    tie: TieRule,
    n: usize,
    rng: &mut RngState,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(crate::error::domain("n", 0.0, "[1, inf)"));
    }
    // Profiles validate the policy against the market (e.g. refunds at gamma = 1).
    policy.profile(params, tie)?;

    let weights: Vec<f64> = policy
        .components()
        .iter()
        .scan(0.0, |acc, (w, _)| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let sampler = dist.sampler();
    let streams = rng.split(MC_STREAMS);
    let chunk = n.div_ceil(MC_STREAMS);

    let parts: Vec<Moments> = streams
        .into_par_iter()
        .enumerate()
        .map(|(i, mut stream)| {
            let count = chunk.min(n.saturating_sub(i * chunk));
            let mut m = Moments::default();
            for _ in 0..count {
                let pick = stream.uniform();
                let idx = weights
                    .partition_point(|&c| c <= pick)
                    .min(weights.len() - 1);
                let offer = match policy.components()[idx].1 {
                    PolicyElement::Offer(o) => o,
                    PolicyElement::LogUniform { lo, hi } => {
                        let p = lo * (hi / lo).powf(stream.uniform());
                        Offer::non_refundable(p.min(hi)).expect("price inside [0, 1]")
                    }
                };
                let q = sampler.quantile(stream.uniform());
                let fit = stream.uniform() < q;
                let profit = if !offer.buys(q, params, tie) {
                    0.0
                } else if fit || !offer.is_refundable() {
                    offer.price()
                } else {
                    offer.price() - offer.refund() - params.cost()
                };
                m.push(profit);
            }
            m
        })
        .collect();

    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = if total.n > 1 {
        total.m2 / (total.n - 1) as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        samples: total.n,
    })
}
