//! Capacity spot auction: three independent clearing routes (greedy merit
//! order, welfare-maximizing quadratic program, enumerated MIP) and the
//! surplus and profit analytics built on a clearing outcome.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::DemandCurve;

/// Absolute slack used when comparing cumulative quantities against the
/// demand curve.
const QTY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBid {
    pub generator_id: String,
    /// Offer price, $/MW-day.
    pub offer_price: f64,
    /// Offer quantity, MW.
    pub offer_qty: f64,
}

impl CapacityBid {
    pub fn new(id: impl Into<String>, offer_price: f64, offer_qty: f64) -> Self {
        CapacityBid {
            generator_id: id.into(),
            offer_price,
            offer_qty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    /// Clearing price, $/MW-day.
    pub price: f64,
    /// Cleared quantity, MW.
    pub quantity: f64,
    /// Sold capacity per generator (every bidder appears, unsold ones at 0).
    pub sold: BTreeMap<String, f64>,
    /// Marginal supplier that sets the price.
    pub marginal: Option<String>,
    /// True when a marginal supplier exists on the demand curve.
    pub cleared: bool,
    /// Merit-order prefix that sells capacity, marginal supplier included.
    pub allocated: BTreeSet<String>,
}

impl ClearingResult {
    fn not_cleared(bids: &[CapacityBid]) -> Self {
        ClearingResult {
            price: 0.0,
            quantity: 0.0,
            sold: bids.iter().map(|b| (b.generator_id.clone(), 0.0)).collect(),
            marginal: None,
            cleared: false,
            allocated: BTreeSet::new(),
        }
    }

    pub fn sold_of(&self, id: &str) -> f64 {
        self.sold.get(id).copied().unwrap_or(0.0)
    }

    pub fn revenue_of(&self, id: &str) -> f64 {
        self.price * self.sold_of(id)
    }

    /// Largest componentwise gap between two outcomes (price, quantity, sold).
    /// Returns `None` when the outcomes disagree on `cleared` or on the bidder set.
    pub fn max_deviation(&self, other: &ClearingResult) -> Option<f64> {
        if self.cleared != other.cleared || self.sold.len() != other.sold.len() {
            return None;
        }
        if !self.cleared {
            return Some(0.0);
        }
        let mut dev = (self.price - other.price)
            .abs()
            .max((self.quantity - other.quantity).abs());
        for (id, q) in &self.sold {
            let o = other.sold.get(id)?;
            dev = dev.max((q - o).abs());
        }
        Some(dev)
    }
}

/// Decision vectors of the enumerated MIP, in merit order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MipAssignment {
    pub order: Vec<String>,
    pub x: Vec<u8>,
    pub z: Vec<u8>,
    pub big_m: f64,
    /// `(Pi_max - W_g) / A` per generator.
    pub sold_targets: Vec<f64>,
    pub objective: f64,
}

fn validate_bids(bids: &[CapacityBid], curve: &DemandCurve) -> Result<()> {
    if bids.is_empty() {
        return invalid("capacity auction needs at least one bid");
    }
    if !(curve.a_slope > 0.0 && curve.pi_max.is_finite()) {
        return invalid("demand curve slope must be positive");
    }
    let mut ids = HashSet::new();
    for b in bids {
        if !ids.insert(b.generator_id.as_str()) {
            return invalid(format!("duplicate bid for `{}`", b.generator_id));
        }
        if !(b.offer_price >= 0.0 && b.offer_price.is_finite()) {
            return invalid(format!("bid `{}`: offer price must be >= 0", b.generator_id));
        }
        if !(b.offer_qty >= 0.0 && b.offer_qty.is_finite()) {
            return invalid(format!("bid `{}`: offer quantity must be >= 0", b.generator_id));
        }
    }
    Ok(())
}

/// Bid indices sorted ascending by offer price, ties broken by generator id.
pub fn merit_order(bids: &[CapacityBid]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..bids.len()).collect();
    idx.sort_by(|&a, &b| {
        bids[a]
            .offer_price
            .total_cmp(&bids[b].offer_price)
            .then_with(|| bids[a].generator_id.cmp(&bids[b].generator_id))
    });
    idx
}

fn assemble(
    bids: &[CapacityBid],
    order: &[usize],
    marginal_pos: usize,
    marginal_qty: f64,
    price: f64,
) -> ClearingResult {
    let mut sold: BTreeMap<String, f64> = bids.iter().map(|b| (b.generator_id.clone(), 0.0)).collect();
    let mut allocated = BTreeSet::new();
    let mut quantity = 0.0;
    for (pos, &i) in order.iter().enumerate().take(marginal_pos + 1) {
        let q = if pos == marginal_pos {
            marginal_qty
        } else {
            bids[i].offer_qty
        };
        quantity += q;
        sold.insert(bids[i].generator_id.clone(), q);
        allocated.insert(bids[i].generator_id.clone());
    }
    ClearingResult {
        price,
        quantity,
        sold,
        marginal: Some(bids[order[marginal_pos]].generator_id.clone()),
        cleared: true,
        allocated,
    }
}

/// Merit-order greedy clearing: walk bids from cheapest, the marginal
/// supplier is the first whose cumulative offer reaches the demanded
/// quantity at its own price.
pub fn clear_greedy(bids: &[CapacityBid], curve: &DemandCurve) -> Result<ClearingResult> {
    validate_bids(bids, curve)?;
    let order = merit_order(bids);
    let target = |i: usize| (curve.pi_max - bids[i].offer_price) / curve.a_slope;

    let mut pos = 0;
    let mut cum = bids[order[0]].offer_qty;
    while target(order[pos]) > cum && pos + 1 < order.len() {
        pos += 1;
        cum += bids[order[pos]].offer_qty;
    }
    let g = order[pos];
    if target(g) > cum {
        return Ok(ClearingResult::not_cleared(bids));
    }
    let before = cum - bids[g].offer_qty;
    let r = target(g);
    // The demand curve crosses a vertical step below the marginal price:
    // no supplier sits on the curve.
    if r < before - QTY_TOL {
        return Ok(ClearingResult::not_cleared(bids));
    }
    Ok(assemble(bids, &order, pos, (r - before).max(0.0), bids[g].offer_price))
}

/// Welfare-maximizing clearing, solved by water-filling the KKT conditions of
/// `max -(A/2) r^2 + sum (Pi_max - W_g) q_g  s.t. r = sum q, 0 <= q <= h`.
///
/// The returned quantities are the welfare optimum even when no supplier is
/// marginal; in that case the price is read off the demand curve and
/// `cleared` is false.
pub fn clear_qc(bids: &[CapacityBid], curve: &DemandCurve) -> Result<ClearingResult> {
    validate_bids(bids, curve)?;
    let order = merit_order(bids);
    let mut sold: BTreeMap<String, f64> = bids.iter().map(|b| (b.generator_id.clone(), 0.0)).collect();
    let mut allocated = BTreeSet::new();
    let mut r = 0.0;
    for &i in &order {
        let b = &bids[i];
        // Quantity at which this bid's marginal welfare Pi_max - W - A r hits zero.
        let level = (curve.pi_max - b.offer_price) / curve.a_slope;
        if level < r - QTY_TOL {
            break;
        }
        if level <= r + b.offer_qty {
            let q = (level - r).max(0.0);
            r += q;
            sold.insert(b.generator_id.clone(), q);
            allocated.insert(b.generator_id.clone());
            return Ok(ClearingResult {
                price: b.offer_price,
                quantity: r,
                sold,
                marginal: Some(b.generator_id.clone()),
                cleared: true,
                allocated,
            });
        }
        r += b.offer_qty;
        sold.insert(b.generator_id.clone(), b.offer_qty);
        allocated.insert(b.generator_id.clone());
    }
    Ok(ClearingResult {
        price: curve.price_at(r),
        quantity: r,
        sold,
        marginal: None,
        cleared: false,
        allocated,
    })
}

/// KKT residuals of a clearing outcome viewed as a solution of the
/// welfare-maximizing quadratic program. All residuals are scaled by
/// `(1 + Pi_max)(1 + max offer)` so they are comparable across instances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QcCertificate {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl QcCertificate {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

pub fn qc_certificate(result: &ClearingResult, bids: &[CapacityBid], curve: &DemandCurve) -> QcCertificate {
    let max_h = bids.iter().map(|b| b.offer_qty).fold(0.0, f64::max);
    let scale = (1.0 + curve.pi_max.abs()) * (1.0 + max_h);
    let pi = result.price;
    let total: f64 = bids.iter().map(|b| result.sold_of(&b.generator_id)).sum();
    let stationarity = (pi - curve.price_at(result.quantity)).abs() / (1.0 + curve.pi_max.abs());
    let mut primal = (result.quantity - total).abs() / (1.0 + max_h);
    let mut complementarity: f64 = 0.0;
    for b in bids {
        let q = result.sold_of(&b.generator_id);
        primal = primal.max((-q).max(q - b.offer_qty).max(0.0) / (1.0 + max_h));
        // Multipliers of q <= h and q >= 0 implied by the price.
        let upper = (pi - b.offer_price).max(0.0);
        let lower = (b.offer_price - pi).max(0.0);
        complementarity = complementarity
            .max(upper * (b.offer_qty - q).abs() / scale)
            .max(lower * q.abs() / scale);
    }
    QcCertificate {
        stationarity,
        primal,
        dual: 0.0,
        complementarity,
    }
}

/// Enumerated solution of the MIP clearing model: `sum z = 1` leaves one
/// candidate per marginal supplier, each checked against every constraint.
pub fn clear_mip_detailed(
    bids: &[CapacityBid],
    curve: &DemandCurve,
) -> Result<(ClearingResult, Option<MipAssignment>)> {
    validate_bids(bids, curve)?;
    let order = merit_order(bids);
    let n = order.len();
    let targets: Vec<f64> = order
        .iter()
        .map(|&i| (curve.pi_max - bids[i].offer_price) / curve.a_slope)
        .collect();
    let caps: Vec<f64> = order.iter().map(|&i| bids[i].offer_qty).collect();
    let big_m = targets[0];

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for k in 0..n {
        let z: Vec<f64> = (0..n).map(|g| if g == k { 1.0 } else { 0.0 }).collect();
        let x: Vec<f64> = (0..n).map(|g| if g <= k { 1.0 } else { 0.0 }).collect();
        let before: f64 = caps[..k].iter().sum();
        let mut q = vec![0.0; n];
        q[..k].copy_from_slice(&caps[..k]);
        q[k] = targets[k] - before;
        if mip_feasible(&q, &x, &z, &caps, &targets, big_m) {
            let obj = bids[order[k]].offer_price;
            if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
                best = Some((obj, k, q));
            }
        }
    }
    let Some((objective, k, q)) = best else {
        return Ok((ClearingResult::not_cleared(bids), None));
    };
    let result = assemble(bids, &order, k, q[k].max(0.0), objective);
    let assignment = MipAssignment {
        order: order.iter().map(|&i| bids[i].generator_id.clone()).collect(),
        x: (0..n).map(|g| u8::from(g <= k)).collect(),
        z: (0..n).map(|g| u8::from(g == k)).collect(),
        big_m,
        sold_targets: targets,
        objective,
    };
    Ok((result, Some(assignment)))
}

fn mip_feasible(q: &[f64], x: &[f64], z: &[f64], h: &[f64], target: &[f64], big_m: f64) -> bool {
    let n = q.len();
    let tol = QTY_TOL;
    if (z.iter().sum::<f64>() - 1.0).abs() > 0.0 {
        return false;
    }
    let mut cum = 0.0;
    for g in 0..n {
        // Offers are taken as given, so the offer-cap row reduces to q <= h.
        if q[g] < -tol || q[g] > h[g] + tol {
            return false;
        }
        if q[g] > h[g] * x[g] + tol {
            return false;
        }
        if q[g] < h[g] * (x[g] - z[g]) - tol {
            return false;
        }
        cum += q[g];
        if cum < target[g] * z[g] - tol {
            return false;
        }
        if cum > target[g] * z[g] + big_m * (1.0 - z[g]) + tol {
            return false;
        }
        let tail: f64 = z[g..].iter().sum();
        if x[g] != tail {
            return false;
        }
    }
    true
}

pub fn clear_mip(bids: &[CapacityBid], curve: &DemandCurve) -> Result<ClearingResult> {
    clear_mip_detailed(bids, curve).map(|(r, _)| r)
}

/// `-(A/2) r^2 + sum (Pi_max - W_g) q_g` for any allocation, cleared or not.
pub fn welfare_value(result: &ClearingResult, bids: &[CapacityBid], curve: &DemandCurve) -> f64 {
    let r = result.quantity;
    -0.5 * curve.a_slope * r * r
        + bids
            .iter()
            .map(|b| (curve.pi_max - b.offer_price) * result.sold_of(&b.generator_id))
            .sum::<f64>()
}

pub fn social_welfare(result: &ClearingResult, bids: &[CapacityBid], curve: &DemandCurve) -> Result<f64> {
    if !result.cleared {
        return Err(Error::NotCleared);
    }
    Ok(welfare_value(result, bids, curve))
}

pub fn consumer_surplus(result: &ClearingResult, curve: &DemandCurve) -> f64 {
    (curve.pi_max - result.price) / 2.0 * result.quantity
}

pub fn producer_surplus(result: &ClearingResult, bids: &[CapacityBid]) -> f64 {
    bids.iter()
        .map(|b| (result.price - b.offer_price) * result.sold_of(&b.generator_id))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcessCapacity {
    /// `(r* - Q_cap) / Q_cap` measured on the outcome.
    pub ratio: f64,
    /// `(1 - W_marginal / C_cone) F_E`.
    pub closed_form: f64,
}

impl ExcessCapacity {
    pub fn residual(&self) -> f64 {
        (self.ratio - self.closed_form).abs()
    }
}

pub fn excess_capacity_ratio(result: &ClearingResult, curve: &DemandCurve) -> Result<ExcessCapacity> {
    if !result.cleared {
        return Err(Error::NotCleared);
    }
    Ok(ExcessCapacity {
        ratio: (result.quantity - curve.q_cap) / curve.q_cap,
        closed_form: (1.0 - result.price / curve.c_cone) * curve.f_excess,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationClass {
    Inframarginal,
    Marginal,
    Unallocated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupplierProfit {
    pub class: AllocationClass,
    /// Closed-form profit for the supplier's allocation class.
    pub profit: f64,
    /// Capacity revenue minus net CONE charged on full qualified capacity.
    pub realized: f64,
}

/// Capacity-market profit of every supplier, assuming each bid truthfully at
/// its net CONE with its full qualified capacity (the bid quantity).
pub fn supplier_profit(
    result: &ClearingResult,
    bids: &[CapacityBid],
    net_cones: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, SupplierProfit>> {
    if !result.cleared {
        return Err(Error::NotCleared);
    }
    let marginal = result.marginal.as_deref().ok_or(Error::NotCleared)?;
    let w_marg = result.price;
    let allocated_cap: f64 = bids
        .iter()
        .filter(|b| result.allocated.contains(&b.generator_id))
        .map(|b| b.offer_qty)
        .sum();
    let mut out = BTreeMap::new();
    for b in bids {
        let id = &b.generator_id;
        let w = *net_cones.get(id).ok_or_else(|| Error::UnknownGenerator(id.clone()))?;
        let cap = b.offer_qty;
        let (class, profit) = if id == marginal {
            (AllocationClass::Marginal, w_marg * (result.quantity - allocated_cap))
        } else if result.allocated.contains(id) {
            (AllocationClass::Inframarginal, (w_marg - w) * cap)
        } else {
            (AllocationClass::Unallocated, -w * cap)
        };
        let realized = result.price * result.sold_of(id) - w * cap;
        out.insert(
            id.clone(),
            SupplierProfit {
                class,
                profit,
                realized,
            },
        );
    }
    Ok(out)
}
