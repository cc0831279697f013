//! Nature's problem: the mean-`mu` signal distribution that minimizes the
//! seller's expected profit under a fixed policy.
//!
//! Minimizing `E_F[g]` over distributions with mean `mu` gives the lower
//! convex envelope of `g` at `mu`, attained by at most two atoms. The
//! envelope is computed with a monotone-chain lower hull over grid points.
//! At a jump of `g` the grid point takes the smallest of the two one-sided
//! limits and the knot value, so an atom can sit on the cheaper side.

use serde::Serialize;

use crate::distributions::{make_discrete, SignalDistribution};
use crate::error::{Error, Result};
use crate::market::gamma_bar;
use crate::policies::PerSignalProfile;

/// Default grid size: spacing `1e-4` on `[0, 1]`.
pub const DEFAULT_GRID: usize = 10_001;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    /// `min_F E_F[g]`.
    pub value: f64,
    /// A minimizing distribution with one or two atoms.
    pub witness: SignalDistribution,
    /// Endpoints of the envelope chord through `mu` (equal when `mu` is a hull vertex).
    pub active_segment: (f64, f64),
}

/// Candidate support points: a uniform grid with every profile knot inserted.
pub fn envelope_points(profile: &PerSignalProfile, grid_n: usize) -> Vec<(f64, f64)> {
    let n = grid_n.max(2);
    let knots = profile.knots();
    let mut pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let q = i as f64 / (n - 1) as f64;
            (q, profile.eval(q))
        })
        .collect();
    for (i, &k) in knots.iter().enumerate() {
        let low = profile.at_knots()[i]
            .min(profile.left_limit(i))
            .min(profile.right_limit(i));
        pts.push((k, low));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    pts
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex hull of points sorted by abscissa.
fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

fn check_mu(mu: f64, points: &[(f64, f64)]) -> Result<()> {
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
    if !(mu >= lo && mu <= hi) {
        return Err(Error::Infeasible { mu, lo, hi });
    }
    Ok(())
}

/// Lower convex envelope of the profile at `mu`, with a minimizing witness.
pub fn worst_case(profile: &PerSignalProfile, mu: f64, grid_n: usize) -> Result<EnvelopeResult> {
    let points = envelope_points(profile, grid_n);
    check_mu(mu, &points)?;
    let hull = lower_hull(&points);

    let j = hull.partition_point(|p| p.0 < mu);
    if j < hull.len() && hull[j].0 == mu {
        let (q, value) = hull[j];
        return Ok(EnvelopeResult {
            value,
            witness: make_discrete(&[q], &[1.0], None)?,
            active_segment: (q, q),
        });
    }
    let (a, b) = (hull[j - 1], hull[j]);
    let t = (mu - a.0) / (b.0 - a.0);
    let value = a.1 + t * (b.1 - a.1);
    let witness = make_discrete(&[a.0, b.0], &[1.0 - t, t], None)?;
    Ok(EnvelopeResult {
        value,
        witness,
        active_segment: (a.0, b.0),
    })
}

/// Exhaustive minimum over all one- and two-atom mean-`mu` distributions on
/// the same candidate points. Quadratic; meant for cross-checking [`worst_case`].
pub fn worst_case_oracle(profile: &PerSignalProfile, mu: f64, grid_n: usize) -> Result<f64> {
    let points = envelope_points(profile, grid_n);
    check_mu(mu, &points)?;
    let split = points.partition_point(|p| p.0 < mu);
    let (left, right) = points.split_at(split);
    let mut best = f64::INFINITY;
    if let Some(&(q, v)) = right.first() {
        if q == mu {
            best = v;
        }
    }
    for &(qa, va) in left {
        for &(qb, vb) in right {
            let t = (mu - qa) / (qb - qa);
            best = best.min(va + t * (vb - va));
        }
    }
    Ok(best)
}

/// Guarantee of the deterministic non-refundable price `p`: `max(0, p (mu - p) / (1 - p))`.
pub fn deterministic_guarantee(price: f64, mu: f64) -> f64 {
    if price >= mu {
        0.0
    } else {
        price * (mu - price) / (1.0 - price)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustPrice {
    /// `1 - sqrt(1 - mu)`.
    pub price: f64,
    /// `(1 - sqrt(1 - mu))^2`.
    pub guarantee: f64,
    /// Best price on a `1e-4` grid of `(0, mu)`.
    pub grid_price: f64,
    pub grid_guarantee: f64,
}

/// Best deterministic non-refundable price and its guarantee.
pub fn robust_price(mu: f64) -> Result<RobustPrice> {
    let price = gamma_bar(mu)?;
    let (grid_price, grid_guarantee) = (1..)
        .map(|i| i as f64 * 1e-4)
        .take_while(|&p| p < mu)
        .map(|p| (p, deterministic_guarantee(p, mu)))
        .fold(
            (0.0, 0.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    Ok(RobustPrice {
        price,
        guarantee: price * price,
        grid_price,
        grid_guarantee,
    })
}
