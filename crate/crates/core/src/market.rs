//! Market parameters and the closed-form robust quantities: the cost
//! threshold `gamma_bar`, the best guaranteed profit `V*`, the generous
//! refund weight `beta*`, and the rescaling map for a general match value.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::lambert_w_minus1;

/// Prior mean `mu = Pr(v = 1)` and normalized restocking cost `gamma = c / (c + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    mu: f64,
    gamma: f64,
}

impl MarketParams {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(domain("mu", mu, "(0, 1)"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(domain("gamma", gamma, "[0, 1]"));
        }
        Ok(Self { mu, gamma })
    }

    /// Builds the parameters from a raw restocking cost `c >= 0` (`c = inf` gives `gamma = 1`).
    pub fn from_cost(mu: f64, cost: f64) -> Result<Self> {
        if cost.is_nan() || cost < 0.0 {
            return Err(domain("c", cost, "[0, inf]"));
        }
        let gamma = if cost.is_infinite() {
            1.0
        } else {
            cost / (cost + 1.0)
        };
        Self::new(mu, gamma)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Raw restocking cost `gamma / (1 - gamma)`; infinite at `gamma = 1`.
    pub fn cost(&self) -> f64 {
        if self.gamma >= 1.0 {
            f64::INFINITY
        } else {
            self.gamma / (1.0 - self.gamma)
        }
    }

    pub fn gamma_bar(&self) -> f64 {
        1.0 - (1.0 - self.mu).sqrt()
    }

    pub fn branch(&self) -> Branch {
        if self.gamma <= self.gamma_bar() {
            Branch::LowCost
        } else {
            Branch::HighCost
        }
    }
}

/// Which side of `gamma_bar` the restocking cost falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `gamma <= gamma_bar`: the robust refund policy is the pure generous refund.
    LowCost,
    /// `gamma > gamma_bar`: generous refund mixed with random discounting.
    HighCost,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::LowCost => f.write_str("low_cost"),
            Branch::HighCost => f.write_str("high_cost"),
        }
    }
}

/// Best guaranteed profit and the weight the robust refund policy puts on
/// the generous refund.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustSolution {
    pub v_star: f64,
    pub gamma_bar: f64,
    pub beta_star: f64,
    pub branch: Branch,
}

impl RobustSolution {
    /// `1 - gamma + log(gamma / V*)`, the common denominator of the high-cost formulas.
    pub fn discount_denominator(&self, params: &MarketParams) -> f64 {
        let gamma = params.gamma();
        1.0 - gamma + (gamma / self.v_star).ln()
    }
}

/// `1 - sqrt(1 - mu)`.
pub fn gamma_bar(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(domain("mu", mu, "(0, 1)"));
    }
    Ok(1.0 - (1.0 - mu).sqrt())
}

/// `V*` from the branch formulas: `(mu - gamma) / (1 - gamma)` on the low-cost
/// branch and `-mu / W_{-1}(-(mu / gamma) e^{gamma - 2})` on the high-cost branch.
pub fn v_star_closed_form(params: &MarketParams) -> f64 {
    let (mu, gamma) = (params.mu(), params.gamma());
    if gamma == 0.0 {
        return mu;
    }
    match params.branch() {
        Branch::LowCost => (mu - gamma) / (1.0 - gamma),
        Branch::HighCost => {
            // Rounding can push the argument a hair past the branch point.
            let x = (-(mu / gamma) * (gamma - 2.0).exp()).max(crate::special::BRANCH_POINT);
            let w = lambert_w_minus1(x).expect("argument lies on the lower branch");
            -mu / w
        }
    }
}

/// `int_0^1 F_w(q; v) dq` for the worst-case CDF built from a candidate value `v`.
pub fn worst_case_cdf_area(v: f64, gamma: f64) -> f64 {
    if v >= gamma {
        (1.0 - gamma) * (1.0 - v)
    } else {
        (gamma - v) - v * (gamma / v).ln() + (1.0 - v) * (1.0 - gamma)
    }
}

/// `V*` as the root of `int_0^1 F_w = 1 - mu`, found by bisection.
///
/// Independent of the branch selection and of the Lambert W evaluation; the
/// area is strictly decreasing in the candidate value.
pub fn v_star_bisection(params: &MarketParams) -> f64 {
    let (mu, gamma) = (params.mu(), params.gamma());
    let target = 1.0 - mu;
    let (mut lo, mut hi) = (1e-15_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if worst_case_cdf_area(mid, gamma) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `beta*` for a given `V*`.
pub fn beta_star(params: &MarketParams, v_star: f64) -> f64 {
    let gamma = params.gamma();
    match params.branch() {
        Branch::LowCost => 1.0,
        Branch::HighCost => (1.0 - gamma) / (1.0 - gamma + (gamma / v_star).ln()),
    }
}

/// Best guaranteed profit `V*`, `gamma_bar`, `beta*` and the active branch.
pub fn best_guaranteed_profit(params: &MarketParams) -> RobustSolution {
    let v_star = v_star_closed_form(params);
    RobustSolution {
        v_star,
        gamma_bar: params.gamma_bar(),
        beta_star: beta_star(params, v_star),
        branch: params.branch(),
    }
}

/// `V*` at `gamma = 1`, the guarantee of robust random pricing.
pub fn v_one_star(mu: f64) -> Result<f64> {
    Ok(best_guaranteed_profit(&MarketParams::new(mu, 1.0)?).v_star)
}

/// A market with match value `v_bar` mapped onto the normalized problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    /// `c * v_bar / (v_bar + c)`.
    pub gamma_tilde: f64,
    /// `gamma_tilde / v_bar`, the `gamma` of the normalized problem.
    pub marginal_signal: f64,
    /// Multiplier for prices and profits of the normalized problem.
    pub scale: f64,
}

pub fn rescale_market(v_bar: f64, cost: f64) -> Result<Rescaled> {
    if !(v_bar > 0.0 && v_bar.is_finite()) {
        return Err(domain("v_bar", v_bar, "(0, inf)"));
    }
    if !(cost >= 0.0 && cost.is_finite()) {
        return Err(domain("c", cost, "[0, inf)"));
    }
    let gamma_tilde = cost * v_bar / (v_bar + cost);
    Ok(Rescaled {
        gamma_tilde,
        marginal_signal: gamma_tilde / v_bar,
        scale: v_bar,
    })
}
