//! Offers, pricing policies, and the per-signal profiles they induce.
//!
//! A profile is the seller's expected profit (or the buyer's expected
//! payoff) as a function of the realized signal `q`, with the policy's own
//! randomization already integrated out.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{best_guaranteed_profit, v_one_star, MarketParams};

/// Signals within this distance of a marginal signal count as ties.
pub const TIE_EPS: f64 = 1e-12;

/// How a buyer who is exactly indifferent between buying and not buying acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// The indifferent buyer acts to minimize the seller's profit.
    #[default]
    Adversarial,
    /// The indifferent buyer acts to maximize the seller's profit.
    Favorable,
}

/// A price-refund pair. The generous refund `(1, 1)` carries its own
/// purchase rule: buy iff `q >= gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    price: f64,
    refund: f64,
    generous: bool,
}

impl Offer {
    /// Requires `0 <= refund <= price <= 1`. The pair `(1, 1)` becomes the
    /// generous refund.
    pub fn new(price: f64, refund: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&price) {
            return Err(Error::InvalidOffer(format!("price {price} outside [0, 1]")));
        }
        if !(0.0..=price).contains(&refund) {
            return Err(Error::InvalidOffer(format!(
                "refund {refund} outside [0, price = {price}]"
            )));
        }
        if price == 1.0 && refund == 1.0 {
            return Ok(Self::generous());
        }
        Ok(Self {
            price,
            refund,
            generous: false,
        })
    }

    pub fn non_refundable(price: f64) -> Result<Self> {
        Self::new(price, 0.0)
    }

    pub fn generous() -> Self {
        Self {
            price: 1.0,
            refund: 1.0,
            generous: true,
        }
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn refund(&self) -> f64 {
        self.refund
    }

    pub fn is_generous(&self) -> bool {
        self.generous
    }

    pub fn is_refundable(&self) -> bool {
        self.refund > 0.0
    }

    /// `(p - r) / (1 - r)`; `gamma` for the generous refund.
    pub fn marginal_signal(&self, gamma: f64) -> f64 {
        if self.generous {
            gamma
        } else {
            (self.price - self.refund) / (1.0 - self.refund)
        }
    }

    /// Seller profit at signal `q` given that the buyer buys.
    fn profit_if_bought(&self, q: f64, params: &MarketParams) -> f64 {
        if !self.is_refundable() || q >= 1.0 {
            self.price
        } else {
            self.price - (1.0 - q) * (params.cost() + self.refund)
        }
    }

    /// Whether a buyer with signal `q` buys.
    pub fn buys(&self, q: f64, params: &MarketParams, tie: TieRule) -> bool {
        if self.generous {
            return q >= params.gamma();
        }
        let m = self.marginal_signal(params.gamma());
        if q > m + TIE_EPS {
            true
        } else if q < m - TIE_EPS {
            false
        } else {
            let profit = self.profit_if_bought(q, params);
            match tie {
                TieRule::Adversarial => profit < 0.0,
                TieRule::Favorable => profit >= 0.0,
            }
        }
    }
}

/// `r(p) = (p - gamma) / (1 - gamma)`, the refund that puts the marginal signal at `gamma`.
pub fn refund_for_price(price: f64, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma >= 1.0 {
        return Err(crate::error::domain("gamma", gamma, "[0, 1)"));
    }
    if !(price >= gamma && price <= 1.0) {
        return Err(crate::error::domain("price", price, "[gamma, 1]"));
    }
    Ok((price - gamma) / (1.0 - gamma))
}

/// Seller profit at signal `q`: 0 without a sale, `p` for a kept product,
/// `p - (1 - q)(c + r)` in expectation for a refundable sale.
///
/// Refundable offers at `gamma = 1` yield `-inf` for any `q < 1` that buys.
pub fn per_signal_profit(offer: &Offer, q: f64, params: &MarketParams, tie: TieRule) -> f64 {
    if !offer.buys(q, params, tie) {
        return 0.0;
    }
    if offer.generous {
        return if q >= 1.0 {
            1.0
        } else {
            (q - params.gamma()) / (1.0 - params.gamma())
        };
    }
    offer.profit_if_bought(q, params)
}

/// Buyer payoff at signal `q`: 0 without a sale, otherwise
/// `q (1 - p) + (1 - q)(r - p)` (keep when `v = 1`, return when `v = 0` and `r > 0`).
pub fn per_signal_buyer_payoff(offer: &Offer, q: f64, params: &MarketParams, tie: TieRule) -> f64 {
    if !offer.buys(q, params, tie) {
        return 0.0;
    }
    q - offer.price + (1.0 - q) * offer.refund
}

/// One mixture component of a pricing policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyElement {
    Offer(Offer),
    /// Non-refundable prices, log-uniform on `[lo, hi]`.
    LogUniform {
        lo: f64,
        hi: f64,
    },
}

/// A finite mixture of offers and log-uniform price segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingPolicy {
    components: Vec<(f64, PolicyElement)>,
}

impl PricingPolicy {
    pub fn new(components: Vec<(f64, PolicyElement)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPolicy("no components".into()));
        }
        let mut total = 0.0;
        for (w, el) in &components {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidPolicy(format!("weight {w} outside (0, 1]")));
            }
            if let PolicyElement::LogUniform { lo, hi } = *el {
                if !(lo > 0.0 && lo < hi && hi <= 1.0) {
                    return Err(Error::InvalidPolicy(format!(
                        "log-uniform segment [{lo}, {hi}] needs 0 < lo < hi <= 1"
                    )));
                }
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPolicy(format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn single(offer: Offer) -> Self {
        Self {
            components: vec![(1.0, PolicyElement::Offer(offer))],
        }
    }

    pub fn components(&self) -> &[(f64, PolicyElement)] {
        &self.components
    }

    /// Parses `{"components": [{"weight", "kind": "offer"|"loguniform"|"generous", "p", "r", "a", "b"}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PolicyDoc::from(self)).expect("policy serializes")
    }

    /// Seller-profit profile.
    pub fn profile(&self, params: &MarketParams, tie: TieRule) -> Result<PerSignalProfile> {
        self.mix(params, tie, Target::SellerProfit)
    }

    /// Buyer-payoff profile.
    pub fn buyer_profile(&self, params: &MarketParams, tie: TieRule) -> Result<PerSignalProfile> {
        self.mix(params, tie, Target::BuyerPayoff)
    }

    fn mix(&self, params: &MarketParams, tie: TieRule, target: Target) -> Result<PerSignalProfile> {
        let parts = self
            .components
            .iter()
            .map(|(w, el)| Ok((*w, element_profile(el, params, tie, target)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PerSignalProfile::weighted_sum(&parts))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    SellerProfit,
    BuyerPayoff,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    components: Vec<ComponentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    weight: f64,
    kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum ComponentKind {
    Offer,
    Loguniform,
    Generous,
}

impl TryFrom<PolicyDoc> for PricingPolicy {
    type Error = Error;

    fn try_from(doc: PolicyDoc) -> Result<Self> {
        let missing = |field: &str| Error::InvalidPolicy(format!("component is missing `{field}`"));
        let components = doc
            .components
            .into_iter()
            .map(|c| {
                let element = match c.kind {
                    ComponentKind::Offer => PolicyElement::Offer(Offer::new(
                        c.p.ok_or_else(|| missing("p"))?,
                        c.r.unwrap_or(0.0),
                    )?),
                    ComponentKind::Generous => PolicyElement::Offer(Offer::generous()),
                    ComponentKind::Loguniform => PolicyElement::LogUniform {
                        lo: c.a.ok_or_else(|| missing("a"))?,
                        hi: c.b.ok_or_else(|| missing("b"))?,
                    },
                };
                Ok((c.weight, element))
            })
            .collect::<Result<Vec<_>>>()?;
        PricingPolicy::new(components)
    }
}

impl From<&PricingPolicy> for PolicyDoc {
    fn from(policy: &PricingPolicy) -> Self {
        let components = policy
            .components
            .iter()
            .map(|(w, el)| match *el {
                PolicyElement::Offer(o) if o.generous => ComponentDoc {
                    weight: *w,
                    kind: ComponentKind::Generous,
                    p: Some(1.0),
                    r: Some(1.0),
                    a: None,
                    b: None,
                },
                PolicyElement::Offer(o) => ComponentDoc {
                    weight: *w,
                    kind: ComponentKind::Offer,
                    p: Some(o.price),
                    r: Some(o.refund),
                    a: None,
                    b: None,
                },
                PolicyElement::LogUniform { lo, hi } => ComponentDoc {
                    weight: *w,
                    kind: ComponentKind::Loguniform,
                    p: None,
                    r: None,
                    a: Some(lo),
                    b: Some(hi),
                },
            })
            .collect();
        PolicyDoc { components }
    }
}

/// Non-refundable prices log-uniform on `[V*, gamma]`. Needs `gamma > gamma_bar`.
pub fn random_discounting(params: &MarketParams) -> Result<PricingPolicy> {
    let sol = best_guaranteed_profit(params);
    if sol.v_star >= params.gamma() {
        return Err(Error::EmptySegment {
            gamma: params.gamma(),
            gamma_bar: sol.gamma_bar,
        });
    }
    PricingPolicy::new(vec![(
        1.0,
        PolicyElement::LogUniform {
            lo: sol.v_star,
            hi: params.gamma(),
        },
    )])
}

/// Non-refundable prices log-uniform on `[V1*, 1]`.
pub fn robust_random_pricing(mu: f64) -> Result<PricingPolicy> {
    let v1 = v_one_star(mu)?;
    PricingPolicy::new(vec![(1.0, PolicyElement::LogUniform { lo: v1, hi: 1.0 })])
}

pub fn generous_refund() -> PricingPolicy {
    PricingPolicy::single(Offer::generous())
}

/// Generous refund with probability `beta*`, random discounting otherwise.
pub fn robust_refund_policy(params: &MarketParams) -> PricingPolicy {
    let sol = best_guaranteed_profit(params);
    let beta = sol.beta_star;
    if beta >= 1.0 || sol.v_star >= params.gamma() {
        return generous_refund();
    }
    let segment = PolicyElement::LogUniform {
        lo: sol.v_star,
        hi: params.gamma(),
    };
    if beta <= 0.0 {
        return PricingPolicy::new(vec![(1.0, segment)]).expect("valid segment");
    }
    PricingPolicy::new(vec![
        (beta, PolicyElement::Offer(Offer::generous())),
        (1.0 - beta, segment),
    ])
    .expect("valid mixture")
}

/// The deterministic robust price `1 - sqrt(1 - mu)` as a non-refundable offer.
pub fn robust_price_policy(mu: f64) -> Result<PricingPolicy> {
    let price = crate::market::gamma_bar(mu)?;
    Ok(PricingPolicy::single(Offer::non_refundable(price)?))
}

/// Policies with names and, for the first four, closed-form profits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    RobustRandomPricing,
    GenerousRefund,
    RandomDiscounting,
    RobustRefundPolicy,
    RobustPrice,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::RobustRandomPricing,
        PolicyKind::GenerousRefund,
        PolicyKind::RandomDiscounting,
        PolicyKind::RobustRefundPolicy,
        PolicyKind::RobustPrice,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::RobustRandomPricing => "robust_random_pricing",
            PolicyKind::GenerousRefund => "generous_refund",
            PolicyKind::RandomDiscounting => "random_discounting",
            PolicyKind::RobustRefundPolicy => "robust_refund_policy",
            PolicyKind::RobustPrice => "robust_price",
        }
    }

    pub fn build(&self, params: &MarketParams) -> Result<PricingPolicy> {
        match self {
            PolicyKind::RobustRandomPricing => robust_random_pricing(params.mu()),
            PolicyKind::GenerousRefund => Ok(generous_refund()),
            PolicyKind::RandomDiscounting => random_discounting(params),
            PolicyKind::RobustRefundPolicy => Ok(robust_refund_policy(params)),
            PolicyKind::RobustPrice => robust_price_policy(params.mu()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidPolicy(format!("unknown policy `{s}`")))
    }
}

/// `constant + slope * q + q_log_q * q ln q` on an open interval between knots.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Piece {
    pub constant: f64,
    pub slope: f64,
    pub q_log_q: f64,
}

impl Piece {
    pub fn affine(constant: f64, slope: f64) -> Self {
        Self {
            constant,
            slope,
            q_log_q: 0.0,
        }
    }

    pub fn eval(&self, q: f64) -> f64 {
        let xlogx = if q > 0.0 { q * q.ln() } else { 0.0 };
        self.constant + self.slope * q + self.q_log_q * xlogx
    }

    fn scaled(&self, w: f64) -> Self {
        Self {
            constant: w * self.constant,
            slope: w * self.slope,
            q_log_q: w * self.q_log_q,
        }
    }

    fn add(&self, other: &Piece) -> Self {
        Self {
            constant: self.constant + other.constant,
            slope: self.slope + other.slope,
            q_log_q: self.q_log_q + other.q_log_q,
        }
    }
}

/// Piecewise description of a function of the signal on `[0, 1]`.
///
/// `knots` ascend from 0 to 1; `pieces[i]` applies on the open interval
/// `(knots[i], knots[i + 1])`, and `at_knots[i]` is the value exactly at
/// `knots[i]`, which may differ from either one-sided limit at a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PerSignalProfile {
    knots: Vec<f64>,
    pieces: Vec<Piece>,
    at_knots: Vec<f64>,
}

impl PerSignalProfile {
    pub fn new(knots: Vec<f64>, pieces: Vec<Piece>, at_knots: Vec<f64>) -> Result<Self> {
        let ok = knots.len() >= 2
            && knots[0] == 0.0
            && *knots.last().unwrap() == 1.0
            && knots.windows(2).all(|w| w[0] < w[1])
            && pieces.len() + 1 == knots.len()
            && at_knots.len() == knots.len()
            && at_knots.iter().all(|v| v.is_finite())
            && pieces
                .iter()
                .all(|p| p.constant.is_finite() && p.slope.is_finite() && p.q_log_q.is_finite());
        if !ok {
            return Err(Error::InvalidPolicy("malformed per-signal profile".into()));
        }
        Ok(Self {
            knots,
            pieces,
            at_knots,
        })
    }

    /// Builds a profile from knots strictly inside `(0, 1)` plus a function
    /// giving the piece on each interval and the value at each knot.
    fn assemble(
        mut inner: Vec<f64>,
        piece_at: impl Fn(f64) -> Piece,
        value_at: impl Fn(f64) -> f64,
    ) -> Self {
        inner.retain(|&k| k > 0.0 && k < 1.0);
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut knots = Vec::with_capacity(inner.len() + 2);
        knots.push(0.0);
        knots.extend(inner);
        knots.push(1.0);
        let pieces = knots
            .windows(2)
            .map(|w| piece_at(0.5 * (w[0] + w[1])))
            .collect();
        let at_knots = knots.iter().map(|&k| value_at(k)).collect();
        Self {
            knots,
            pieces,
            at_knots,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn at_knots(&self) -> &[f64] {
        &self.at_knots
    }

    /// Index of the open interval containing `q`, or `Err(knot index)` when `q` is a knot.
    fn locate(&self, q: f64) -> std::result::Result<usize, usize> {
        match self.knots.binary_search_by(|k| k.total_cmp(&q)) {
            Ok(i) => Err(i),
            Err(i) => Ok(i.clamp(1, self.knots.len() - 1) - 1),
        }
    }

    /// The piece in force on the open interval around `q` (left piece at a knot).
    pub fn piece_at(&self, q: f64) -> Piece {
        match self.locate(q) {
            Ok(i) => self.pieces[i],
            Err(i) => self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)],
        }
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self.locate(q) {
            Ok(i) => self.pieces[i].eval(q),
            Err(i) => self.at_knots[i],
        }
    }

    /// Limit from the left at knot `i` (the knot value at `i = 0`).
    pub fn left_limit(&self, i: usize) -> f64 {
        if i == 0 {
            self.at_knots[0]
        } else {
            self.pieces[i - 1].eval(self.knots[i])
        }
    }

    /// Limit from the right at knot `i` (the knot value at the last knot).
    pub fn right_limit(&self, i: usize) -> f64 {
        if i + 1 == self.knots.len() {
            self.at_knots[i]
        } else {
            self.pieces[i].eval(self.knots[i])
        }
    }

    /// Every piece is affine in `q`.
    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(|p| p.q_log_q == 0.0)
    }

    pub fn weighted_sum(parts: &[(f64, PerSignalProfile)]) -> Self {
        let inner: Vec<f64> = parts.iter().flat_map(|(_, p)| p.knots.clone()).collect();
        Self::assemble(
            inner,
            |mid| {
                parts.iter().fold(Piece::default(), |acc, (w, p)| {
                    acc.add(&p.piece_at(mid).scaled(*w))
                })
            },
            |k| parts.iter().map(|(w, p)| w * p.eval(k)).sum(),
        )
    }
}

fn element_profile(
    element: &PolicyElement,
    params: &MarketParams,
    tie: TieRule,
    target: Target,
) -> Result<PerSignalProfile> {
    match *element {
        PolicyElement::Offer(offer) => offer_profile(&offer, params, tie, target),
        PolicyElement::LogUniform { lo, hi } => Ok(log_uniform_profile(lo, hi, target)),
    }
}

fn offer_profile(
    offer: &Offer,
    params: &MarketParams,
    tie: TieRule,
    target: Target,
) -> Result<PerSignalProfile> {
    let gamma = params.gamma();
    if offer.is_refundable() && !offer.generous && gamma >= 1.0 {
        return Err(Error::InvalidPolicy(
            "refundable offers need a finite restocking cost (gamma < 1)".into(),
        ));
    }
    let m = offer.marginal_signal(gamma);
    let bought = match target {
        Target::BuyerPayoff => {
            // q - p + (1 - q) r
            Piece::affine(offer.refund - offer.price, 1.0 - offer.refund)
        }
        Target::SellerProfit if offer.generous => {
            if gamma >= 1.0 {
                Piece::default()
            } else {
                Piece::affine(-gamma / (1.0 - gamma), 1.0 / (1.0 - gamma))
            }
        }
        Target::SellerProfit if offer.is_refundable() => {
            let k = params.cost() + offer.refund;
            Piece::affine(offer.price - k, k)
        }
        Target::SellerProfit => Piece::affine(offer.price, 0.0),
    };
    let value = |q: f64| match target {
        Target::SellerProfit => per_signal_profit(offer, q, params, tie),
        Target::BuyerPayoff => per_signal_buyer_payoff(offer, q, params, tie),
    };
    Ok(PerSignalProfile::assemble(
        vec![m],
        |mid| if mid > m { bought } else { Piece::default() },
        value,
    ))
}

fn log_uniform_profile(lo: f64, hi: f64, target: Target) -> PerSignalProfile {
    let width = (hi / lo).ln();
    match target {
        // (min(q, hi) - lo) / log(hi / lo) above lo
        Target::SellerProfit => {
            let ramp = Piece::affine(-lo / width, 1.0 / width);
            let flat = Piece::affine((hi - lo) / width, 0.0);
            PerSignalProfile::assemble(
                vec![lo, hi],
                |mid| {
                    if mid < lo {
                        Piece::default()
                    } else if mid < hi {
                        ramp
                    } else {
                        flat
                    }
                },
                |q| {
                    if q <= lo {
                        0.0
                    } else {
                        (q.min(hi) - lo) / width
                    }
                },
            )
        }
        // (q log(min(q, hi) / lo) - (min(q, hi) - lo)) / log(hi / lo) above lo
        Target::BuyerPayoff => {
            let ramp = Piece {
                constant: lo / width,
                slope: (-lo.ln() - 1.0) / width,
                q_log_q: 1.0 / width,
            };
            let flat = Piece::affine(-(hi - lo) / width, 1.0);
            PerSignalProfile::assemble(
                vec![lo, hi],
                |mid| {
                    if mid < lo {
                        Piece::default()
                    } else if mid < hi {
                        ramp
                    } else {
                        flat
                    }
                },
                |q| {
                    if q <= lo {
                        0.0
                    } else {
                        let top = q.min(hi);
                        (q * (top / lo).ln() - (top - lo)) / width
                    }
                },
            )
        }
    }
}
