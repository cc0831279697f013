//! Robust pricing with refunds: closed-form guarantees, policy evaluation,
//! worst-case signal distributions, and optimal direct mechanisms.

pub mod adversary;
pub mod certify;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod figures;
pub mod market;
pub mod mechanisms;
pub mod policies;
pub mod report;
pub mod rng;
pub mod special;

pub use distributions::{Segment, SignalDistribution};
pub use error::{Error, Result};
pub use market::{best_guaranteed_profit, Branch, MarketParams, RobustSolution};
pub use mechanisms::MechanismAllocation;
pub use policies::{Offer, PerSignalProfile, PolicyKind, PricingPolicy, TieRule};
pub use rng::RngState;
