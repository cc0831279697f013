//! Scenario files: JSON documents naming the market, the policies and the
//! distributions a command works on. Command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use refund_lab::distributions::{
    make_discrete, make_full_info, make_point_mass, make_rs, make_worst_case, random_discrete,
};
use refund_lab::market::rescale_market;
use refund_lab::{MarketParams, PolicyKind, PricingPolicy, RngState, SignalDistribution, TieRule};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub v_bar: Option<f64>,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub distributions: Vec<DistributionSpec>,
    pub distribution: Option<DistributionSpec>,
    pub tie: Option<String>,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
    pub output: Option<PathBuf>,
}

/// A policy name, `json:PATH`, or an inline policy document.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    Name(String),
    Inline(serde_json::Value),
}

/// A distribution name (`worst_case`, `rs`, `point_mass`, `full_info`,
/// `random:N`, `csv:PATH`) or an inline discrete distribution.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Name(String),
    Discrete(DiscreteSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSpec {
    pub locations: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Flag values that take precedence over the scenario file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub v_bar: Option<f64>,
    pub policies: Vec<String>,
    pub distributions: Vec<String>,
    pub tie: Option<String>,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
    pub output: Option<PathBuf>,
}

/// A scenario with every spec resolved to library values.
pub struct Resolved {
    pub params: MarketParams,
    /// Multiplier for prices and profits when the market was given by `c` and `v_bar`.
    pub scale: f64,
    pub policies: Vec<(String, Option<PolicyKind>, PricingPolicy)>,
    pub distributions: Vec<(String, SignalDistribution)>,
    pub tie: TieRule,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
    pub mc_samples: usize,
    pub output: Option<PathBuf>,
}

pub fn load(path: Option<&Path>) -> Result<Scenario, Failure> {
    let Some(path) = path else {
        return Ok(Scenario::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read scenario {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("invalid scenario {}: {e}", path.display())))
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

/// The market described by `mu` and one of `gamma`, `c`, or `c` with `v_bar`.
pub fn market(
    mu: Option<f64>,
    gamma: Option<f64>,
    c: Option<f64>,
    v_bar: Option<f64>,
) -> Result<(MarketParams, f64), Failure> {
    let mu = mu.ok_or_else(|| Failure::Config("`mu` is required".into()))?;
    match (gamma, c, v_bar) {
        (Some(gamma), None, None) => Ok((MarketParams::new(mu, gamma).map_err(config)?, 1.0)),
        (None, Some(c), None) => Ok((MarketParams::from_cost(mu, c).map_err(config)?, 1.0)),
        (None, Some(c), Some(v_bar)) => {
            let r = rescale_market(v_bar, c).map_err(config)?;
            Ok((
                MarketParams::new(mu, r.marginal_signal).map_err(config)?,
                r.scale,
            ))
        }
        (None, None, None) => Err(Failure::Config("one of `gamma` or `c` is required".into())),
        _ => Err(Failure::Config(
            "give either `gamma`, `c`, or `c` with `v_bar`".into(),
        )),
    }
}

impl Scenario {
    pub fn resolve(self, o: Overrides) -> Result<Resolved, Failure> {
        // A market given on the command line replaces the file's market wholesale.
        let flag_market = o.gamma.is_some() || o.c.is_some();
        let (gamma, c, v_bar) = if flag_market {
            (o.gamma, o.c, o.v_bar)
        } else {
            (self.gamma, self.c, o.v_bar.or(self.v_bar))
        };
        let (params, scale) = market(o.mu.or(self.mu), gamma, c, v_bar)?;
        let seed = o.seed.or(self.seed);

        let policy_specs: Vec<PolicySpec> = if !o.policies.is_empty() {
            o.policies.into_iter().map(PolicySpec::Name).collect()
        } else {
            self.policy.into_iter().chain(self.policies).collect()
        };
        let policies = policy_specs
            .into_iter()
            .enumerate()
            .map(|(i, spec)| resolve_policy(spec, i, &params))
            .collect::<Result<Vec<_>, _>>()?;

        let dist_specs: Vec<DistributionSpec> = if !o.distributions.is_empty() {
            o.distributions
                .into_iter()
                .map(DistributionSpec::Name)
                .collect()
        } else {
            self.distribution
                .into_iter()
                .chain(self.distributions)
                .collect()
        };
        let mut rng = seed.map(RngState::from_seed);
        let mut distributions = Vec::new();
        for (i, spec) in dist_specs.into_iter().enumerate() {
            distributions.extend(resolve_distribution(spec, i, &params, &mut rng)?);
        }

        let tie = match o.tie.or(self.tie).as_deref() {
            None | Some("adversarial") => TieRule::Adversarial,
            Some("favorable") => TieRule::Favorable,
            Some(other) => {
                return Err(Failure::Config(format!(
                    "unknown tie rule `{other}` (expected adversarial or favorable)"
                )))
            }
        };
        Ok(Resolved {
            params,
            scale,
            policies,
            distributions,
            tie,
            grid_n: o.grid_n.or(self.grid_n),
            seed,
            mc_samples: o.mc_samples.or(self.mc_samples).unwrap_or(0),
            output: o.output.or(self.output),
        })
    }
}

fn resolve_policy(
    spec: PolicySpec,
    index: usize,
    params: &MarketParams,
) -> Result<(String, Option<PolicyKind>, PricingPolicy), Failure> {
    match spec {
        PolicySpec::Name(name) => {
            if let Some(path) = name.strip_prefix("json:") {
                let path = Path::new(path);
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
                let label = path.file_stem().map_or_else(
                    || format!("policy_{index}"),
                    |s| s.to_string_lossy().into_owned(),
                );
                return Ok((
                    label,
                    None,
                    PricingPolicy::from_json(&text).map_err(config)?,
                ));
            }
            let kind: PolicyKind = name.parse().map_err(config)?;
            Ok((name, Some(kind), kind.build(params).map_err(config)?))
        }
        PolicySpec::Inline(value) => {
            let policy = PricingPolicy::from_json(&value.to_string()).map_err(config)?;
            Ok((format!("policy_{index}"), None, policy))
        }
    }
}

fn resolve_distribution(
    spec: DistributionSpec,
    index: usize,
    params: &MarketParams,
    rng: &mut Option<RngState>,
) -> Result<Vec<(String, SignalDistribution)>, Failure> {
    let mu = params.mu();
    let name = match spec {
        DistributionSpec::Discrete(d) => {
            let dist = make_discrete(&d.locations, &d.masses, Some(mu)).map_err(config)?;
            return Ok(vec![(format!("discrete_{index}"), dist)]);
        }
        DistributionSpec::Name(name) => name,
    };
    let single = |dist: refund_lab::Result<SignalDistribution>| -> Result<_, Failure> {
        Ok(vec![(name.clone(), dist.map_err(config)?)])
    };
    match name.as_str() {
        "worst_case" => single(Ok(make_worst_case(params))),
        "rs" => single(make_rs(mu)),
        "point_mass" => single(make_point_mass(mu)),
        "full_info" => single(make_full_info(mu)),
        other => {
            if let Some(count) = other.strip_prefix("random:") {
                let count: usize = count
                    .parse()
                    .map_err(|_| Failure::Config(format!("bad count in `{other}`")))?;
                let rng = rng
                    .as_mut()
                    .ok_or_else(|| Failure::Config("random distributions need a `seed`".into()))?;
                return Ok((0..count)
                    .map(|i| (format!("random_{i}"), random_discrete(mu, rng, 8)))
                    .collect());
            }
            if let Some(path) = other.strip_prefix("csv:") {
                let path = Path::new(path);
                let file = fs::File::open(path)
                    .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
                let dist = SignalDistribution::read_csv(file).map_err(config)?;
                dist.check_mean(mu).map_err(config)?;
                let label = path.file_stem().map_or_else(
                    || format!("csv_{index}"),
                    |s| s.to_string_lossy().into_owned(),
                );
                return Ok(vec![(label, dist)]);
            }
            Err(Failure::Config(format!("unknown distribution `{other}`")))
        }
    }
}
