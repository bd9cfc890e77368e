//! Best responses of a single strategic leader against truthful rivals.

mod cm;
mod joint;

pub use cm::{
    best_cm_bid, bid_zero_case, cm_bid_oracle, market_power_impact, oracle_slack, CmLeaderStrategy, ImpactReport,
    BidZeroCase, BidZeroReport, StrategyKind, StrategyOutcome, UNDERCUT,
};
pub use joint::{
    best_joint_strategy, capacity_market, compare_settings, CompareConfig, CompareRow, JointOptions, JointOutcome,
    JointStrategy, WithholdingReport,
};
