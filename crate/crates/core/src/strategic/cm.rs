use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::auction::{clear_qc, consumer_surplus, CapacityBid, ClearingResult};
use crate::error::{invalid, Error, Result};
use crate::model::DemandCurve;

/// Amount a leader bids below a rival's price to move ahead of it, $/MW-day.
pub const UNDERCUT: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    BidZero,
    Marginal,
    Truthful,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmLeaderStrategy {
    pub leader_id: String,
    pub offer_price: f64,
    pub offer_qty: f64,
    pub kind: StrategyKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: CmLeaderStrategy,
    pub clearing: ClearingResult,
    pub leader_revenue: f64,
    /// Revenue less the leader's net CONE on its whole offer.
    pub leader_profit: f64,
    pub other_revenue: BTreeMap<String, f64>,
    pub consumer_surplus: f64,
    /// Unconstrained best marginal price for the leader's allocated prefix,
    /// when the leader ends up marginal.
    pub b: Option<f64>,
    /// `|revenue - (B^2 - (w - B)^2) / A|` when the leader is marginal.
    pub quadratic_residual: Option<f64>,
    pub undercut: f64,
    /// Most expensive allocated non-marginal price under truthful bidding.
    pub w_dot: Option<f64>,
    /// Cheapest unallocated price under truthful bidding.
    pub w_ddot: Option<f64>,
}

/// Rivals sorted in merit order, plus the leader's offer.
struct Market<'a> {
    rivals: Vec<&'a CapacityBid>,
    leader: &'a CapacityBid,
    curve: &'a DemandCurve,
}

/// Result of one leader price on the pre-sorted market.
#[derive(Clone, Copy, Debug)]
struct Eval {
    price: f64,
    sold: f64,
    leader_marginal: bool,
    /// Rival capacity ahead of the leader.
    ahead: f64,
}

impl<'a> Market<'a> {
    fn new(leader_id: &str, bids: &'a [CapacityBid], curve: &'a DemandCurve) -> Result<Self> {
        let leader = bids
            .iter()
            .find(|b| b.generator_id == leader_id)
            .ok_or_else(|| Error::UnknownGenerator(leader_id.to_string()))?;
        // Let the auction validate the bid set once.
        clear_qc(bids, curve)?;
        let mut rivals: Vec<&CapacityBid> = bids.iter().filter(|b| b.generator_id != leader_id).collect();
        rivals.sort_by(|a, b| {
            a.offer_price
                .total_cmp(&b.offer_price)
                .then_with(|| a.generator_id.cmp(&b.generator_id))
        });
        Ok(Market { rivals, leader, curve })
    }

    fn ahead_of_leader(&self, rival: &CapacityBid, w: f64) -> bool {
        (rival.offer_price, rival.generator_id.as_str()) < (w, self.leader.generator_id.as_str())
    }

    /// Water-filling clearing with the leader at price `w`; matches
    /// [`clear_qc`] on the same bids.
    fn eval(&self, w: f64) -> Eval {
        let c = self.curve;
        let mut r = 0.0;
        let mut ahead = 0.0;
        let mut placed = false;
        let mut filled = 0.0;
        let mut k = 0;
        loop {
            let (price, qty, is_leader) = if !placed && self.rivals.get(k).is_none_or(|b| !self.ahead_of_leader(b, w)) {
                placed = true;
                (w, self.leader.offer_qty, true)
            } else if let Some(b) = self.rivals.get(k) {
                k += 1;
                (b.offer_price, b.offer_qty, false)
            } else {
                break;
            };
            if !placed {
                ahead += qty;
            }
            let level = (c.pi_max - price) / c.a_slope;
            if level < r - 1e-9 {
                break;
            }
            if level <= r + qty {
                let q = (level - r).max(0.0);
                let sold = if is_leader { q } else { filled };
                return Eval {
                    price,
                    sold,
                    leader_marginal: is_leader,
                    ahead,
                };
            }
            r += qty;
            if is_leader {
                filled = qty;
            }
        }
        Eval {
            price: c.price_at(r),
            sold: filled,
            leader_marginal: false,
            ahead,
        }
    }

    fn revenue(&self, w: f64) -> f64 {
        let e = self.eval(w);
        e.price * e.sold
    }

    fn b_of(&self, ahead: f64) -> f64 {
        0.5 * (self.curve.pi_max - self.curve.a_slope * ahead)
    }

    /// Candidate leader prices: truthful, zero, every valid prefix optimum
    /// and one undercut below every rival.
    fn candidates(&self) -> Vec<f64> {
        let c = self.curve;
        let mut out = vec![self.leader.offer_price, 0.0];
        let mut ahead = 0.0;
        for k in 0..=self.rivals.len() {
            let b = self.b_of(ahead);
            let lower_ok = k == 0 || self.ahead_of_leader(self.rivals[k - 1], b);
            let upper_ok = self.rivals.get(k).is_none_or(|r| !self.ahead_of_leader(r, b));
            let q = (c.pi_max - b) / c.a_slope - ahead;
            if b >= 0.0 && lower_ok && upper_ok && q > 0.0 && q <= self.leader.offer_qty {
                out.push(b);
            }
            if let Some(r) = self.rivals.get(k) {
                ahead += r.offer_qty;
            }
        }
        for r in &self.rivals {
            if r.offer_price - UNDERCUT >= 0.0 {
                out.push(r.offer_price - UNDERCUT);
            }
        }
        out
    }

    fn outcome(&self, bids: &[CapacityBid], w: f64) -> Result<StrategyOutcome> {
        let truthful = clear_qc(bids, self.curve)?;
        let (w_dot, w_ddot) = neighbours(&truthful, bids);
        let mut played: Vec<CapacityBid> = bids.to_vec();
        for b in &mut played {
            if b.generator_id == self.leader.generator_id {
                b.offer_price = w;
            }
        }
        let clearing = clear_qc(&played, self.curve)?;
        let id = &self.leader.generator_id;
        let leader_revenue = clearing.revenue_of(id);
        let e = self.eval(w);
        let (b, quadratic_residual) = if e.leader_marginal {
            let b = self.b_of(e.ahead);
            let a = self.curve.a_slope;
            let identity = (b * b - (w - b) * (w - b)) / a;
            (Some(b), Some((leader_revenue - identity).abs()))
        } else {
            (None, None)
        };
        let kind = if w == self.leader.offer_price {
            StrategyKind::Truthful
        } else if w == 0.0 {
            StrategyKind::BidZero
        } else {
            StrategyKind::Marginal
        };
        Ok(StrategyOutcome {
            strategy: CmLeaderStrategy {
                leader_id: id.clone(),
                offer_price: w,
                offer_qty: self.leader.offer_qty,
                kind,
            },
            leader_profit: leader_revenue - self.leader.offer_price * self.leader.offer_qty,
            leader_revenue,
            other_revenue: played
                .iter()
                .filter(|b| &b.generator_id != id)
                .map(|b| (b.generator_id.clone(), clearing.revenue_of(&b.generator_id)))
                .collect(),
            consumer_surplus: consumer_surplus(&clearing, self.curve),
            clearing,
            b,
            quadratic_residual,
            undercut: UNDERCUT,
            w_dot,
            w_ddot,
        })
    }
}

fn neighbours(result: &ClearingResult, bids: &[CapacityBid]) -> (Option<f64>, Option<f64>) {
    let marginal = result.marginal.as_deref();
    let w_dot = bids
        .iter()
        .filter(|b| result.allocated.contains(&b.generator_id) && Some(b.generator_id.as_str()) != marginal)
        .map(|b| b.offer_price)
        .reduce(f64::max);
    let w_ddot = bids
        .iter()
        .filter(|b| !result.allocated.contains(&b.generator_id))
        .map(|b| b.offer_price)
        .reduce(f64::min);
    (w_dot, w_ddot)
}

fn argmax(prices: impl IntoIterator<Item = f64>, value: impl Fn(f64) -> f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for w in prices {
        let v = value(w);
        if best.is_none_or(|(_, bv)| v > bv + 1e-9 * bv.abs().max(1.0)) {
            best = Some((w, v));
        }
    }
    best.map(|(w, _)| w)
}

/// Revenue-maximizing price for the leader with its quantity held at its
/// truthful offer, found by enumerating the finitely many candidate prices.
/// Ties keep the earlier candidate, so the truthful price wins ties.
pub fn best_cm_bid(leader_id: &str, truthful_bids: &[CapacityBid], curve: &DemandCurve) -> Result<StrategyOutcome> {
    let m = Market::new(leader_id, truthful_bids, curve)?;
    let w = argmax(m.candidates(), |w| m.revenue(w)).expect("candidate set is never empty");
    m.outcome(truthful_bids, w)
}

/// Brute-force sweep of the leader's price over `0, step, 2 step, ..` up to
/// the demand intercept.
pub fn cm_bid_oracle(
    leader_id: &str,
    truthful_bids: &[CapacityBid],
    curve: &DemandCurve,
    price_grid_step: f64,
) -> Result<StrategyOutcome> {
    if !(price_grid_step > 0.0 && price_grid_step.is_finite()) {
        return invalid("price grid step must be positive");
    }
    let m = Market::new(leader_id, truthful_bids, curve)?;
    let n = (curve.pi_max / price_grid_step).floor() as usize;
    let w = argmax((0..=n).map(|k| k as f64 * price_grid_step), |w| m.revenue(w)).unwrap_or(0.0);
    m.outcome(truthful_bids, w)
}

/// Revenue gap allowed between enumeration and a grid of spacing `step`:
/// one step times a Lipschitz bound of price times quantity.
pub fn oracle_slack(leader_qty: f64, curve: &DemandCurve, step: f64) -> f64 {
    step * (leader_qty + curve.pi_max / curve.a_slope)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub price_delta: f64,
    pub consumer_surplus_delta: f64,
    pub rival_revenue_delta: BTreeMap<String, f64>,
    /// Rival revenues and consumer surplus move against and with the price
    /// respectively, as expected from a single-price auction.
    pub comonotone: bool,
}

pub fn market_power_impact(
    truthful_bids: &[CapacityBid],
    curve: &DemandCurve,
    outcome: &StrategyOutcome,
) -> Result<ImpactReport> {
    let base = clear_qc(truthful_bids, curve)?;
    let leader = &outcome.strategy.leader_id;
    let tol = 1e-9 * (1.0 + curve.pi_max * curve.q_zero);
    let price_delta = outcome.clearing.price - base.price;
    let consumer_surplus_delta = outcome.consumer_surplus - consumer_surplus(&base, curve);
    let rival_revenue_delta: BTreeMap<String, f64> = truthful_bids
        .iter()
        .filter(|b| &b.generator_id != leader)
        .map(|b| {
            let id = &b.generator_id;
            (id.clone(), outcome.clearing.revenue_of(id) - base.revenue_of(id))
        })
        .collect();
    let comonotone = if price_delta < 0.0 {
        consumer_surplus_delta >= -tol && rival_revenue_delta.values().all(|d| *d <= tol)
    } else if price_delta > 0.0 {
        consumer_surplus_delta <= tol && rival_revenue_delta.values().all(|d| *d >= -tol)
    } else {
        true
    };
    Ok(ImpactReport {
        price_delta,
        consumer_surplus_delta,
        rival_revenue_delta,
        comonotone,
    })
}

/// The four ways a leader's revenue can respond to bidding zero, keyed by
/// its truthful allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidZeroCase {
    /// Allocated, not marginal.
    Inframarginal,
    /// Marginal, and large enough that bidding zero pulls the price to at most `w_dot`.
    MarginalLarge,
    /// Marginal, small enough that bidding zero pushes the price to at least `w_ddot`.
    MarginalSmall,
    Unallocated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidZeroReport {
    pub case: BidZeroCase,
    pub truthful_price: f64,
    pub zero_price: f64,
    pub truthful_revenue: f64,
    pub zero_revenue: f64,
    pub w_dot: Option<f64>,
    pub w_ddot: Option<f64>,
    /// The price moved in the direction the case predicts.
    pub direction_holds: bool,
}

/// Compares the truthful outcome with the leader bidding zero.
pub fn bid_zero_case(leader_id: &str, truthful_bids: &[CapacityBid], curve: &DemandCurve) -> Result<BidZeroReport> {
    let m = Market::new(leader_id, truthful_bids, curve)?;
    let truthful = clear_qc(truthful_bids, curve)?;
    let (w_dot, w_ddot) = neighbours(&truthful, truthful_bids);
    let zero = m.outcome(truthful_bids, 0.0)?;
    let zero_price = zero.clearing.price;
    let tol = 1e-9 * curve.pi_max.max(1.0);
    let h1 = m.leader.offer_qty;

    let case = if truthful.marginal.as_deref() == Some(leader_id) {
        let others: f64 = truthful_bids
            .iter()
            .filter(|b| truthful.allocated.contains(&b.generator_id) && b.generator_id != leader_id)
            .map(|b| b.offer_qty)
            .sum();
        let threshold = (curve.pi_max - w_dot.unwrap_or(0.0)) / curve.a_slope - others;
        if h1 >= threshold {
            BidZeroCase::MarginalLarge
        } else {
            BidZeroCase::MarginalSmall
        }
    } else if truthful.allocated.contains(leader_id) {
        BidZeroCase::Inframarginal
    } else {
        BidZeroCase::Unallocated
    };
    let direction_holds = match case {
        BidZeroCase::Inframarginal => (zero_price - truthful.price).abs() <= tol,
        BidZeroCase::MarginalLarge => zero_price <= w_dot.unwrap_or(0.0) + tol,
        BidZeroCase::MarginalSmall => w_ddot.is_none_or(|w| zero_price >= w - tol),
        BidZeroCase::Unallocated => zero_price <= truthful.price + tol,
    };
    Ok(BidZeroReport {
        case,
        truthful_price: truthful.price,
        zero_price,
        truthful_revenue: truthful.revenue_of(leader_id),
        zero_revenue: zero.leader_revenue,
        w_dot,
        w_ddot,
        direction_holds,
    })
}
