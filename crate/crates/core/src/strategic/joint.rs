use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::auction::{clear_qc, CapacityBid};
use crate::energy::{dispatch, truthful_offers, NetCone, DEFAULT_VOLL};
use crate::error::{invalid, Result};
use crate::model::{
    build_demand_curve, peaker_levelized_cost, DemandCurve, Generator, SystemNetwork, TimeSeries,
    DEFAULT_FULL_OUTPUT_HOURS,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointOptions {
    pub voll: f64,
    /// Capacity grid is `p_max / grid_steps`.
    pub grid_steps: usize,
    /// Let the leader bid above its variable cost in the energy market.
    pub allow_price_bid: bool,
    /// Leader offers at its net CONE in the capacity market instead of 0.
    pub cm_price_truthful: bool,
    /// Strategic energy bids stay at least this far below VOLL, $/MWh.
    pub price_cap_margin: f64,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            voll: DEFAULT_VOLL,
            grid_steps: 50,
            allow_price_bid: false,
            cm_price_truthful: false,
            price_cap_margin: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy {
    pub leader_id: String,
    /// Physical capacity offered in the capacity market, MW.
    pub cm_offer_qty: f64,
    /// Capacity offered in the energy market on top of the committed amount, MW.
    pub em_extra: f64,
    pub em_bid_price: f64,
    /// Physical capacity the capacity market committed, MW.
    pub cm_sold: f64,
    pub cm_price: f64,
}

impl JointStrategy {
    pub fn energy_capacity(&self) -> f64 {
        self.cm_sold + self.em_extra
    }
}

/// Decomposition of the leader's profit change from withholding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WithholdingReport {
    pub gain: f64,
    pub loss: f64,
    /// Loss without the capacity-market term.
    pub loss_no_cm: f64,
    /// Hours with LMP above variable cost under truthful offers.
    pub profitable_truthful: Vec<usize>,
    /// Same under the chosen strategy.
    pub profitable_strategic: Vec<usize>,
    pub truthful_profit: f64,
    pub strategic_profit: f64,
    /// No extra energy capacity, unchanged capacity price and every
    /// truthfully profitable hour still profitable.
    pub identity_applies: bool,
    /// `|(strategic - truthful) - (gain - loss)|`.
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointOutcome {
    pub strategy: JointStrategy,
    /// Capacity revenue plus energy profit, $.
    pub profit: f64,
    pub cm_revenue: f64,
    pub em_profit: f64,
    pub truthful: JointStrategy,
    pub truthful_profit: f64,
    pub report: WithholdingReport,
}

#[derive(Clone, Debug)]
struct EmEval {
    profit: f64,
    lmp: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    h: f64,
    v: f64,
    c: f64,
    cm_price: f64,
    cm_sold: f64,
    cm_revenue: f64,
    em_profit: f64,
}

struct Game<'a> {
    net: &'a SystemNetwork,
    ts: &'a TimeSeries,
    leader: &'a Generator,
    bus: usize,
    bids: Vec<CapacityBid>,
    leader_bid: usize,
    curve: &'a DemandCurve,
    opts: &'a JointOptions,
    cache: HashMap<(i64, u64), EmEval>,
}

impl<'a> Game<'a> {
    fn new(
        leader_id: &str,
        net: &'a SystemNetwork,
        ts: &'a TimeSeries,
        cm_bids: &[CapacityBid],
        curve: &'a DemandCurve,
        opts: &'a JointOptions,
    ) -> Result<Self> {
        let leader = net.generator(leader_id)?;
        if !leader.dispatchable {
            return invalid(format!("leader {leader_id} is not dispatchable"));
        }
        if opts.grid_steps == 0 {
            return invalid("joint search needs at least one grid step");
        }
        let leader_bid = cm_bids
            .iter()
            .position(|b| b.generator_id == leader_id)
            .ok_or_else(|| crate::Error::UnknownGenerator(leader_id.to_string()))?;
        let bus = net.bus_index(&leader.zone).expect("validated network");
        ts.validate(net)?;
        Ok(Game {
            net,
            ts,
            leader,
            bus,
            bids: cm_bids.to_vec(),
            leader_bid,
            curve,
            opts,
            cache: HashMap::new(),
        })
    }

    /// Capacity price and committed physical capacity for offer `h`.
    fn capacity(&mut self, h: f64) -> Result<(f64, f64)> {
        let f_u = self.leader.unforced_pct;
        let price = if self.opts.cm_price_truthful {
            self.bids[self.leader_bid].offer_price
        } else {
            0.0
        };
        let mut bids = self.bids.clone();
        bids[self.leader_bid].offer_price = price;
        bids[self.leader_bid].offer_qty = f_u * h;
        let res = clear_qc(&bids, self.curve)?;
        Ok((res.price, res.sold_of(&self.leader.id) / f_u))
    }

    fn energy(&mut self, capacity: f64, bid: f64) -> Result<&EmEval> {
        let key = ((capacity * 1e6).round() as i64, bid.to_bits());
        if !self.cache.contains_key(&key) {
            let mut offers = truthful_offers(self.net, None);
            for o in &mut offers {
                if o.generator_id == self.leader.id {
                    o.capacity_from_cm = capacity.min(self.leader.p_max);
                    o.extra_capacity = 0.0;
                    o.bid_price = bid;
                }
            }
            let em = dispatch(self.net, self.ts, &offers, self.opts.voll)?;
            let eval = EmEval {
                profit: em.profit[&self.leader.id],
                lmp: em.hours.iter().map(|h| h.lmp[self.bus]).collect(),
            };
            self.cache.insert(key, eval);
        }
        Ok(&self.cache[&key])
    }

    fn bid_prices(&self) -> Vec<f64> {
        let own = self.leader.var_cost;
        let mut out = vec![own];
        if self.opts.allow_price_bid {
            let cap = self.opts.voll - self.opts.price_cap_margin;
            let mut rivals: Vec<f64> = self
                .net
                .generators
                .iter()
                .filter(|g| g.id != self.leader.id && g.var_cost > own && g.var_cost <= cap)
                .map(|g| g.var_cost)
                .collect();
            rivals.sort_by(f64::total_cmp);
            rivals.dedup();
            out.extend(rivals);
            if cap > own {
                out.push(cap);
            }
        }
        out
    }

    /// Every grid candidate, truthful first.
    fn candidates(&mut self) -> Result<Vec<Candidate>> {
        let n = self.opts.grid_steps;
        let p_max = self.leader.p_max;
        let grid = |j: usize| if j == n { p_max } else { p_max * j as f64 / n as f64 };
        let cm: Vec<(f64, f64)> = (0..=n).map(|j| self.capacity(grid(j))).collect::<Result<_>>()?;
        let prices = self.bid_prices();
        let mut out = Vec::new();
        let mut push = |game: &mut Self, j: usize, i: usize, c: f64| -> Result<()> {
            let (h, v) = (grid(j), grid(i));
            let (cm_price, cm_sold) = cm[j];
            let em_profit = game.energy(cm_sold + v, c)?.profit;
            out.push(Candidate {
                h,
                v,
                c,
                cm_price,
                cm_sold,
                cm_revenue: cm_price * cm_sold * game.leader.unforced_pct,
                em_profit,
            });
            Ok(())
        };
        push(self, n, 0, self.leader.var_cost)?;
        for j in 0..=n {
            for i in 0..=(n - j) {
                for &c in &prices {
                    push(self, j, i, c)?;
                }
            }
        }
        Ok(out)
    }

    fn strategy(&self, c: &Candidate) -> JointStrategy {
        JointStrategy {
            leader_id: self.leader.id.clone(),
            cm_offer_qty: c.h,
            em_extra: c.v,
            em_bid_price: c.c,
            cm_sold: c.cm_sold,
            cm_price: c.cm_price,
        }
    }

    fn report(&mut self, truthful: &Candidate, chosen: &Candidate) -> Result<WithholdingReport> {
        let cost = self.leader.var_cost;
        let p_max = self.leader.p_max;
        let lam = self.energy(truthful.cm_sold + truthful.v, truthful.c)?.lmp.clone();
        let lam2 = self.energy(chosen.cm_sold + chosen.v, chosen.c)?.lmp.clone();
        let hours = &self.ts.horizon;
        let tol = 1e-9;
        let t_hat: Vec<usize> = (0..lam.len()).filter(|&t| lam[t] > cost + tol).collect();
        let t_hat2: Vec<usize> = (0..lam2.len()).filter(|&t| lam2[t] > cost + tol).collect();
        let q = chosen.cm_sold;
        let pi = truthful.cm_price;
        let mut gain = 0.0;
        for &t in &t_hat2 {
            if !t_hat.contains(&t) {
                gain += (lam2[t] - cost) * q;
            }
        }
        let mut loss_no_cm = 0.0;
        for &t in &t_hat {
            gain += (lam2[t] - lam[t]) * q;
            loss_no_cm += (lam[t] - cost) * (p_max - q);
        }
        let loss = pi * (p_max - q) * self.leader.unforced_pct + loss_no_cm;
        let truthful_profit = truthful.cm_revenue + truthful.em_profit;
        let strategic_profit = chosen.cm_revenue + chosen.em_profit;
        let identity_applies = chosen.v == 0.0
            && (chosen.cm_price - truthful.cm_price).abs() <= 1e-9 * truthful.cm_price.abs().max(1.0)
            && t_hat.iter().all(|t| t_hat2.contains(t));
        Ok(WithholdingReport {
            gain,
            loss,
            loss_no_cm,
            profitable_truthful: t_hat.iter().map(|&t| hours[t]).collect(),
            profitable_strategic: t_hat2.iter().map(|&t| hours[t]).collect(),
            truthful_profit,
            strategic_profit,
            identity_applies,
            identity_residual: ((strategic_profit - truthful_profit) - (gain - loss)).abs(),
        })
    }
}

fn pick(cands: &[Candidate], value: impl Fn(&Candidate) -> f64) -> Candidate {
    let mut best = cands[0];
    let mut best_v = value(&best);
    for c in &cands[1..] {
        let v = value(c);
        if v > best_v + 1e-9 * best_v.abs().max(1.0) {
            best = *c;
            best_v = v;
        }
    }
    best
}

/// Grid search over the leader's capacity-market quantity, extra energy
/// capacity and (optionally) energy bid price, maximizing capacity revenue
/// plus energy profit. The leader's capacity offer price is 0 unless
/// `cm_price_truthful` is set. Rivals offer truthfully in both markets.
pub fn best_joint_strategy(
    leader_id: &str,
    net: &SystemNetwork,
    ts: &TimeSeries,
    cm_bids: &[CapacityBid],
    curve: &DemandCurve,
    opts: &JointOptions,
) -> Result<JointOutcome> {
    let mut game = Game::new(leader_id, net, ts, cm_bids, curve, opts)?;
    let cands = game.candidates()?;
    let truthful = cands[0];
    let best = pick(&cands, |c| c.cm_revenue + c.em_profit);
    let report = game.report(&truthful, &best)?;
    Ok(JointOutcome {
        strategy: game.strategy(&best),
        profit: best.cm_revenue + best.em_profit,
        cm_revenue: best.cm_revenue,
        em_profit: best.em_profit,
        truthful: game.strategy(&truthful),
        truthful_profit: truthful.cm_revenue + truthful.em_profit,
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub joint: JointOptions,
    pub reserve_margin: f64,
    pub translation_factor: f64,
    pub f_excess: f64,
    pub full_output_hours: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            joint: JointOptions::default(),
            reserve_margin: 0.2070,
            translation_factor: 0.0856,
            f_excess: 0.18,
            full_output_hours: DEFAULT_FULL_OUTPUT_HOURS,
        }
    }
}

/// Leader energy profit under the three settings and their differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub leader: String,
    pub fuel: String,
    pub demand_scale: f64,
    pub congestion_scale: f64,
    /// Best response with both markets.
    pub em_both: f64,
    /// Best response when only energy profit counts.
    pub em_no_cm: f64,
    /// Full capacity offered at variable cost.
    pub em_truthful: f64,
    pub both_vs_no_cm: f64,
    pub both_vs_truthful: f64,
    pub no_cm_vs_truthful: f64,
    pub both: JointStrategy,
    pub no_cm: JointStrategy,
    pub report: WithholdingReport,
}

/// Truthful capacity bids (net CONE from `nc`, full qualified capacity; units
/// missing from `nc` bid their investment cost) and the demand curve for the
/// peak load of `ts`, anchored on the peaker in `nc`.
pub fn capacity_market(
    net: &SystemNetwork,
    ts: &TimeSeries,
    nc: &NetCone,
    cfg: &CompareConfig,
) -> Result<(Vec<CapacityBid>, DemandCurve)> {
    let peaker = net.generator(&nc.peaker)?;
    let curve = build_demand_curve(
        nc.c_cone,
        ts.peak_load(),
        cfg.reserve_margin,
        cfg.translation_factor,
        cfg.f_excess,
        peaker_levelized_cost(peaker, cfg.full_output_hours),
    )?;
    let bids = net
        .generators
        .iter()
        .map(|g| {
            let w = nc.net_cone.get(&g.id).copied().unwrap_or(g.invest_cost);
            CapacityBid::new(g.id.clone(), w, g.qualified_capacity())
        })
        .collect();
    Ok((bids, curve))
}

/// Runs the three settings for one leader at one demand and congestion
/// level. Capacity offers use the net CONE values in `base`; the demand
/// curve follows the scaled peak load.
pub fn compare_settings(
    leader_id: &str,
    net: &SystemNetwork,
    ts: &TimeSeries,
    base: &NetCone,
    demand_scale: f64,
    congestion_scale: f64,
    cfg: &CompareConfig,
) -> Result<CompareRow> {
    if !(demand_scale > 0.0 && congestion_scale > 0.0) {
        return invalid("demand and congestion scales must be positive");
    }
    let net = net.with_line_scale(congestion_scale);
    let ts = ts.with_load_scale(demand_scale);
    let (bids, curve) = capacity_market(&net, &ts, base, cfg)?;
    let mut game = Game::new(leader_id, &net, &ts, &bids, &curve, &cfg.joint)?;
    let cands = game.candidates()?;
    let truthful = cands[0];
    let both = pick(&cands, |c| c.cm_revenue + c.em_profit);
    let no_cm = pick(&cands, |c| c.em_profit);
    let report = game.report(&truthful, &both)?;
    Ok(CompareRow {
        leader: leader_id.to_string(),
        fuel: game.leader.fuel.clone(),
        demand_scale,
        congestion_scale,
        em_both: both.em_profit,
        em_no_cm: no_cm.em_profit,
        em_truthful: truthful.em_profit,
        both_vs_no_cm: both.em_profit - no_cm.em_profit,
        both_vs_truthful: both.em_profit - truthful.em_profit,
        no_cm_vs_truthful: no_cm.em_profit - truthful.em_profit,
        both: game.strategy(&both),
        no_cm: game.strategy(&no_cm),
        report,
    })
}
