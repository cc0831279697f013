//! Buyer signal distributions: CDFs on `[0, 1]` whose mean equals the prior `mu`.
//!
//! A distribution is an ordered list of segments, each an atom or a Pareto
//! density `k / q^2` on `[lo, hi)`. Every quantity the rest of the crate
//! needs (CDF, area under the CDF, mean, quantiles) has a closed form per
//! segment. Discrete distributions are the all-atom special case.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{best_guaranteed_profit, Branch, MarketParams};
use crate::rng::RngState;

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on the mean when membership in the mean-`mu` family is checked.
pub const MEAN_TOL: f64 = 1e-10;
/// Default number of support points for [`SignalDistribution::discretize`].
pub const DEFAULT_GRID: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Atom {
        at: f64,
        mass: f64,
    },
    /// Density `scale / q^2` on `[lo, hi)`; contributes `scale/lo - scale/q` to the CDF.
    Pareto {
        lo: f64,
        hi: f64,
        scale: f64,
    },
}

impl Segment {
    pub fn mass(&self) -> f64 {
        match *self {
            Segment::Atom { mass, .. } => mass,
            Segment::Pareto { lo, hi, scale } => scale * (1.0 / lo - 1.0 / hi),
        }
    }

    fn start(&self) -> f64 {
        match *self {
            Segment::Atom { at, .. } => at,
            Segment::Pareto { lo, .. } => lo,
        }
    }

    fn cdf(&self, q: f64) -> f64 {
        match *self {
            Segment::Atom { at, mass } => {
                if at <= q {
                    mass
                } else {
                    0.0
                }
            }
            Segment::Pareto { lo, hi, scale } => {
                if q < lo {
                    0.0
                } else {
                    scale * (1.0 / lo - 1.0 / q.min(hi))
                }
            }
        }
    }

    /// `int_a^b` of this segment's CDF contribution.
    fn area(&self, a: f64, b: f64) -> f64 {
        match *self {
            Segment::Atom { at, mass } => {
                if at <= b {
                    mass * (b - at.max(a))
                } else {
                    0.0
                }
            }
            Segment::Pareto { lo, hi, scale } => {
                let mut area = 0.0;
                let (s, e) = (a.max(lo), b.min(hi));
                if s < e {
                    area += scale * (e - s) / lo - scale * (e / s).ln();
                }
                let tail = a.max(hi);
                if tail < b {
                    area += self.mass() * (b - tail);
                }
                area
            }
        }
    }

    fn first_moment(&self) -> f64 {
        match *self {
            Segment::Atom { at, mass } => at * mass,
            Segment::Pareto { lo, hi, scale } => scale * (hi / lo).ln(),
        }
    }

    /// Inverse of this segment's own CDF for a mass level `u` in `[0, mass)`.
    fn quantile(&self, u: f64) -> f64 {
        match *self {
            Segment::Atom { at, .. } => at,
            Segment::Pareto { lo, hi, scale } => (1.0 / (1.0 / lo - u / scale)).clamp(lo, hi),
        }
    }
}

/// A CDF on `[0, 1]` described by ordered segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDistribution {
    segments: Vec<Segment>,
}

impl SignalDistribution {
    /// Validates and orders the segments.
    ///
    /// Atoms need `at in [0, 1]` and `mass in [0, 1]`; Pareto pieces need
    /// `0 < lo < hi <= 1` and `scale > 0`. Pieces may not overlap each other
    /// and atoms may not sit strictly inside a piece. Total mass must be 1.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidDistribution("no segments".into()));
        }
        for seg in &segments {
            match *seg {
                Segment::Atom { at, mass } => {
                    if !(0.0..=1.0).contains(&at) || !(0.0..=1.0).contains(&mass) {
                        return Err(Error::InvalidDistribution(format!(
                            "atom at {at} with mass {mass}"
                        )));
                    }
                }
                Segment::Pareto { lo, hi, scale } => {
                    if !(lo > 0.0 && lo < hi && hi <= 1.0 && scale > 0.0 && scale.is_finite()) {
                        return Err(Error::InvalidDistribution(format!(
                            "pareto piece [{lo}, {hi}) with scale {scale}"
                        )));
                    }
                }
            }
        }
        // Atoms sort ahead of a piece that starts at the same point.
        segments.sort_by(|a, b| {
            a.start().total_cmp(&b.start()).then_with(|| {
                let rank = |s: &Segment| matches!(s, Segment::Pareto { .. }) as u8;
                rank(a).cmp(&rank(b))
            })
        });
        let pieces: Vec<(f64, f64)> = segments
            .iter()
            .filter_map(|s| match *s {
                Segment::Pareto { lo, hi, .. } => Some((lo, hi)),
                _ => None,
            })
            .collect();
        for w in pieces.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidDistribution(
                    "overlapping pareto pieces".into(),
                ));
            }
        }
        for seg in &segments {
            if let Segment::Atom { at, .. } = *seg {
                if pieces.iter().any(|&(lo, hi)| lo < at && at < hi) {
                    return Err(Error::InvalidDistribution(format!(
                        "atom at {at} lies inside a density piece"
                    )));
                }
            }
        }
        let total: f64 = segments.iter().map(Segment::mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::MassMismatch(total));
        }
        Ok(Self { segments })
    }

    /// Checks membership in the mean-`mu` family.
    pub fn check_mean(&self, mu: f64) -> Result<()> {
        let actual = self.mean();
        if (actual - mu).abs() > MEAN_TOL {
            return Err(Error::MeanMismatch {
                expected: mu,
                actual,
            });
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_discrete(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s, Segment::Atom { .. }))
    }

    /// `(location, mass)` pairs of the atoms, in ascending order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter_map(|s| match *s {
                Segment::Atom { at, mass } => Some((at, mass)),
                _ => None,
            })
            .collect()
    }

    /// Mass sitting exactly at `q`.
    pub fn atom_mass_at(&self, q: f64) -> f64 {
        self.atoms()
            .iter()
            .filter(|(at, _)| *at == q)
            .map(|(_, m)| m)
            .sum()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, q: f64) -> f64 {
        if q < 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return 1.0;
        }
        self.segments.iter().map(|s| s.cdf(q)).sum()
    }

    /// `int_a^b F(q) dq` in closed form.
    pub fn integral_cdf(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::IntervalOrder { a, b });
        }
        Ok(self.segments.iter().map(|s| s.area(a, b)).sum())
    }

    pub fn mean(&self) -> f64 {
        self.segments.iter().map(Segment::first_moment).sum()
    }

    /// Quantile-inversion sampler.
    pub fn sampler(&self) -> Sampler<'_> {
        let mut cumulative = Vec::with_capacity(self.segments.len());
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += seg.mass();
            cumulative.push(acc);
        }
        Sampler {
            segments: &self.segments,
            cumulative,
        }
    }

    /// `n` independent draws.
    pub fn sample(&self, rng: &mut RngState, n: usize) -> Vec<f64> {
        let sampler = self.sampler();
        (0..n).map(|_| sampler.quantile(rng.uniform())).collect()
    }

    /// Mass-preserving projection onto a discrete grid of at most about `n` points.
    ///
    /// Atoms keep their exact locations. Each density piece is cut into
    /// geometric cells whose mass is split between the two cell endpoints so
    /// that the cell's first moment is preserved, which keeps the mean exact.
    pub fn discretize(&self, n: usize) -> Result<Self> {
        if self.is_discrete() {
            return Ok(self.clone());
        }
        let pieces = self
            .segments
            .iter()
            .filter(|s| matches!(s, Segment::Pareto { .. }))
            .count();
        let atoms = self.segments.len() - pieces;
        let cells = (n.saturating_sub(atoms + pieces) / pieces).max(1);

        let mut points: Vec<(f64, f64)> = Vec::new();
        for seg in &self.segments {
            match *seg {
                Segment::Atom { at, mass } => points.push((at, mass)),
                Segment::Pareto { lo, hi, scale } => {
                    let ratio = (hi / lo).ln() / cells as f64;
                    let node = |j: usize| {
                        if j == 0 {
                            lo
                        } else if j == cells {
                            hi
                        } else {
                            lo * (ratio * j as f64).exp()
                        }
                    };
                    for j in 0..cells {
                        let (a, b) = (node(j), node(j + 1));
                        let mass = scale * (1.0 / a - 1.0 / b);
                        let moment = scale * (b / a).ln();
                        let right = ((moment - a * mass) / (b - a)).clamp(0.0, mass);
                        points.push((a, mass - right));
                        points.push((b, right));
                    }
                }
            }
        }
        Self::from_points(points)
    }

    /// Builds a discrete distribution, summing masses at identical locations.
    fn from_points(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (at, mass) in points {
            match merged.last_mut() {
                Some(last) if last.0 == at => last.1 += mass,
                _ => merged.push((at, mass)),
            }
        }
        Self::new(
            merged
                .into_iter()
                .map(|(at, mass)| Segment::Atom { at, mass })
                .collect(),
        )
    }

    /// Writes a discrete distribution as `location,mass` CSV rows.
    ///
    /// Values use the shortest representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        if !self.is_discrete() {
            return Err(Error::InvalidDistribution(
                "only discrete distributions serialize to CSV; discretize first".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["location", "mass"])?;
        for (at, mass) in self.atoms() {
            w.write_record([at.to_string(), mass.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            location: f64,
            mass: f64,
        }
        let mut r = csv::Reader::from_reader(reader);
        let mut locations = Vec::new();
        let mut masses = Vec::new();
        for row in r.deserialize() {
            let row: Row = row?;
            locations.push(row.location);
            masses.push(row.mass);
        }
        make_discrete(&locations, &masses, None)
    }
}

/// Quantile inversion over a distribution's segments.
pub struct Sampler<'a> {
    segments: &'a [Segment],
    cumulative: Vec<f64>,
}

impl Sampler<'_> {
    /// `F^{-1}(u)` for `u in [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.segments.len() - 1);
        let before = if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        };
        self.segments[idx].quantile(u - before)
    }
}

/// Worst-case distribution `F_w` for the given market.
///
/// Low-cost branch: atoms at `V*` (mass `1 - gamma`) and `1` (mass `gamma`).
/// High-cost branch: density `V*/q^2` on `[V*, gamma)`, an atom at `gamma`
/// of mass `V*/gamma - V*`, and an atom at `1` of mass `V*`.
pub fn make_worst_case(params: &MarketParams) -> SignalDistribution {
    let sol = best_guaranteed_profit(params);
    let (v, gamma) = (sol.v_star, params.gamma());
    let mut segments = Vec::with_capacity(3);
    // Rounding just above gamma_bar can leave V* a hair above gamma.
    let low_cost = sol.branch == Branch::LowCost || v >= gamma;
    if low_cost {
        segments.push(Segment::Atom {
            at: v,
            mass: 1.0 - gamma,
        });
        segments.push(Segment::Atom {
            at: 1.0,
            mass: gamma,
        });
    } else {
        segments.push(Segment::Pareto {
            lo: v,
            hi: gamma,
            scale: v,
        });
        segments.push(Segment::Atom {
            at: gamma,
            mass: v / gamma - v,
        });
        segments.push(Segment::Atom { at: 1.0, mass: v });
    }
    segments.retain(|s| s.mass() > 0.0);
    SignalDistribution::new(segments).expect("worst-case construction is valid")
}

/// The worst case at `gamma = 1`: density `V1*/q^2` on `[V1*, 1)` and an atom `V1*` at 1.
pub fn make_rs(mu: f64) -> Result<SignalDistribution> {
    Ok(make_worst_case(&MarketParams::new(mu, 1.0)?))
}

/// Uninformed buyer: a single atom at `mu`.
pub fn make_point_mass(mu: f64) -> Result<SignalDistribution> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(crate::error::domain("mu", mu, "[0, 1]"));
    }
    SignalDistribution::new(vec![Segment::Atom { at: mu, mass: 1.0 }])
}

/// Fully informed buyer: atoms at 0 (mass `1 - mu`) and 1 (mass `mu`).
pub fn make_full_info(mu: f64) -> Result<SignalDistribution> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(crate::error::domain("mu", mu, "(0, 1)"));
    }
    SignalDistribution::new(vec![
        Segment::Atom {
            at: 0.0,
            mass: 1.0 - mu,
        },
        Segment::Atom { at: 1.0, mass: mu },
    ])
}

/// Discrete distribution from ascending locations and masses, with an
/// optional mean check.
pub fn make_discrete(
    locations: &[f64],
    masses: &[f64],
    mu: Option<f64>,
) -> Result<SignalDistribution> {
    if locations.len() != masses.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} locations but {} masses",
            locations.len(),
            masses.len()
        )));
    }
    if locations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidDistribution(
            "locations must be strictly ascending".into(),
        ));
    }
    let dist = SignalDistribution::new(
        locations
            .iter()
            .zip(masses)
            .map(|(&at, &mass)| Segment::Atom { at, mass })
            .collect(),
    )?;
    if let Some(mu) = mu {
        dist.check_mean(mu)?;
    }
    Ok(dist)
}

/// A random discrete distribution with mean exactly `mu` and at most
/// `max_atoms + 1` atoms.
///
/// Draws a random discrete `G` and mixes it with one extra atom placed so
/// that the mixture's mean is `mu`.
pub fn random_discrete(mu: f64, rng: &mut RngState, max_atoms: usize) -> SignalDistribution {
    let k = 1 + rng.below(max_atoms.max(1));
    let mut locs: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    // Occasionally include the endpoints, which carry ties for several policies.
    if rng.uniform() < 0.2 {
        locs.push(0.0);
    }
    if rng.uniform() < 0.2 {
        locs.push(1.0);
    }
    let weights: Vec<f64> = locs.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
    let total: f64 = weights.iter().sum();
    let g_mean: f64 = locs.iter().zip(&weights).map(|(q, w)| q * w).sum::<f64>() / total;

    // Mixture lambda * G + (1 - lambda) * delta_x with x in [0, 1].
    let lambda_max = if g_mean > mu {
        mu / g_mean
    } else if g_mean < mu {
        (1.0 - mu) / (1.0 - g_mean)
    } else {
        1.0
    };
    let lambda = (lambda_max * (0.05 + 0.9 * rng.uniform())).min(1.0);
    let x = ((mu - lambda * g_mean) / (1.0 - lambda)).clamp(0.0, 1.0);

    let mut points: Vec<(f64, f64)> = locs
        .iter()
        .zip(&weights)
        .map(|(&q, &w)| (q, lambda * w / total))
        .collect();
    points.push((x, 1.0 - lambda));
    let dist = SignalDistribution::from_points(points).expect("valid mixture");
    debug_assert!((dist.mean() - mu).abs() < MEAN_TOL);
    dist
}
