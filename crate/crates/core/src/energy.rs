//! Hourly DC optimal power flow, locational prices and energy-market profits.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lp::{check_kkt, solve, KktReport, LinearProgram, Relation};
use crate::model::{SystemNetwork, TimeSeries};

/// Value of lost load, $/MWh.
pub const DEFAULT_VOLL: f64 = 1000.0;

/// Smallest gap a strategic bid must keep below the value of lost load.
pub const BID_CAP_MARGIN: f64 = 1e-6;

const KKT_TOL: f64 = 1e-6;

/// What one generator offers into the energy market.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyOffer {
    pub generator_id: String,
    /// Capacity committed through the capacity market, MW.
    pub capacity_from_cm: f64,
    /// Capacity offered on top of the committed amount, MW.
    pub extra_capacity: f64,
    /// $/MWh.
    pub bid_price: f64,
}

impl EnergyOffer {
    pub fn capacity(&self) -> f64 {
        self.capacity_from_cm + self.extra_capacity
    }
}

/// Every unit offers its whole nameplate at variable cost. `committed`
/// sets the capacity-market share of each unit (clipped to `p_max`); the
/// remainder is offered as extra capacity.
pub fn truthful_offers(net: &SystemNetwork, committed: Option<&BTreeMap<String, f64>>) -> Vec<EnergyOffer> {
    net.generators
        .iter()
        .map(|g| {
            let q = committed
                .and_then(|m| m.get(&g.id))
                .copied()
                .unwrap_or(0.0)
                .clamp(0.0, g.p_max);
            EnergyOffer {
                generator_id: g.id.clone(),
                capacity_from_cm: q,
                extra_capacity: g.p_max - q,
                bid_price: g.var_cost,
            }
        })
        .collect()
}

/// Offers aligned with `net.generators`.
#[derive(Clone, Debug)]
struct Resolved {
    cap: Vec<f64>,
    bid: Vec<f64>,
}

fn resolve(net: &SystemNetwork, offers: &[EnergyOffer], voll: f64) -> Result<Resolved> {
    let mut by_id: HashMap<&str, &EnergyOffer> = HashMap::with_capacity(offers.len());
    for o in offers {
        if by_id.insert(o.generator_id.as_str(), o).is_some() {
            return invalid(format!("duplicate energy offer for {}", o.generator_id));
        }
        net.generator(&o.generator_id)?;
    }
    let mut cap = Vec::with_capacity(net.generators.len());
    let mut bid = Vec::with_capacity(net.generators.len());
    for g in &net.generators {
        let Some(o) = by_id.get(g.id.as_str()) else {
            return invalid(format!("no energy offer for generator {}", g.id));
        };
        if !(o.capacity_from_cm >= 0.0 && o.extra_capacity >= 0.0) {
            return invalid(format!("offer for {}: capacities must be non-negative", g.id));
        }
        if o.capacity() > g.p_max * (1.0 + 1e-12) {
            return invalid(format!(
                "offer for {}: {} MW exceeds p_max {}",
                g.id,
                o.capacity(),
                g.p_max
            ));
        }
        if !o.bid_price.is_finite() || o.bid_price > voll - BID_CAP_MARGIN {
            return invalid(format!("offer for {}: bid {} must stay below VOLL", g.id, o.bid_price));
        }
        cap.push(o.capacity().min(g.p_max));
        bid.push(o.bid_price);
    }
    Ok(Resolved { cap, bid })
}

/// Column and row positions inside an hourly LP.
#[derive(Clone, Debug)]
struct Layout {
    p: usize,
    unmet: usize,
    theta: usize,
    flow: usize,
    balance_row: usize,
    flow_row: usize,
}

fn reference_bus(net: &SystemNetwork) -> usize {
    (0..net.buses.len())
        .min_by(|&a, &b| net.buses[a].cmp(&net.buses[b]))
        .unwrap_or(0)
}

fn bus_of_generators(net: &SystemNetwork) -> Vec<usize> {
    let idx: HashMap<&str, usize> = net.buses.iter().enumerate().map(|(i, b)| (b.as_str(), i)).collect();
    net.generators.iter().map(|g| idx[g.zone.as_str()]).collect()
}

fn line_ends(net: &SystemNetwork) -> Vec<(usize, usize)> {
    let idx: HashMap<&str, usize> = net.buses.iter().enumerate().map(|(i, b)| (b.as_str(), i)).collect();
    net.lines
        .iter()
        .map(|l| (idx[l.from.as_str()], idx[l.to.as_str()]))
        .collect()
}

fn build(
    net: &SystemNetwork,
    ts: &TimeSeries,
    offers: &Resolved,
    t: usize,
    voll: f64,
) -> Result<(LinearProgram, Layout)> {
    let nb = net.buses.len();
    let gen_bus = bus_of_generators(net);
    let ends = line_ends(net);
    let reference = reference_bus(net);
    let mut lp = LinearProgram::new();

    let p = 0;
    for (k, g) in net.generators.iter().enumerate() {
        let cap = offers.cap[k];
        let (lo, hi) = if g.dispatchable {
            (0.0, cap)
        } else {
            let Some(cf) = ts.capacity_factors.get(&g.id) else {
                return invalid(format!("renewable generator {} has no capacity-factor series", g.id));
            };
            let out = cf[t] * cap;
            (out, out)
        };
        lp.add_column(format!("p[{}]", g.id), offers.bid[k], lo, hi);
    }
    let unmet = lp.num_columns();
    for b in &net.buses {
        lp.add_column(format!("unmet[{b}]"), voll, 0.0, f64::INFINITY);
    }
    let theta = lp.num_columns();
    for (i, b) in net.buses.iter().enumerate() {
        let (lo, hi) = if i == reference {
            (0.0, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        lp.add_column(format!("theta[{b}]"), 0.0, lo, hi);
    }
    let flow = lp.num_columns();
    for (k, l) in net.lines.iter().enumerate() {
        lp.add_column(format!("f[{k}:{}-{}]", l.from, l.to), 0.0, l.f_min, l.f_max);
    }

    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (k, &b) in gen_bus.iter().enumerate() {
        balance[b].push((p + k, 1.0));
    }
    for (i, row) in balance.iter_mut().enumerate() {
        row.push((unmet + i, 1.0));
    }
    for (k, &(from, to)) in ends.iter().enumerate() {
        balance[from].push((flow + k, -1.0));
        balance[to].push((flow + k, 1.0));
    }
    let balance_row = lp.num_rows();
    for (i, coeffs) in balance.into_iter().enumerate() {
        lp.add_row(
            format!("balance[{}]", net.buses[i]),
            coeffs,
            Relation::Eq,
            ts.loads[i][t],
        );
    }
    let flow_row = lp.num_rows();
    for (k, (l, &(from, to))) in net.lines.iter().zip(&ends).enumerate() {
        let b = l.susceptance;
        lp.add_row(
            format!("flow[{k}]"),
            vec![(flow + k, 1.0), (theta + from, -b), (theta + to, b)],
            Relation::Eq,
            0.0,
        );
    }
    Ok((
        lp,
        Layout {
            p,
            unmet,
            theta,
            flow,
            balance_row,
            flow_row,
        },
    ))
}

/// Builds the DCOPF for hour index `t`: production, unmet load, bus angles
/// and line flows, with one balance row per bus and one flow-definition row
/// per line. The first bus in sorted order is the angle reference.
pub fn build_hourly_lp(
    net: &SystemNetwork,
    ts: &TimeSeries,
    offers: &[EnergyOffer],
    t: usize,
    voll: f64,
) -> Result<LinearProgram> {
    ts.validate(net)?;
    if t >= ts.num_hours() {
        return invalid(format!("hour index {t} outside a {}-hour horizon", ts.num_hours()));
    }
    let resolved = resolve(net, offers, voll)?;
    Ok(build(net, ts, &resolved, t, voll)?.0)
}

/// Solution of one hour. Vectors follow the network's generator, bus and
/// line order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyDispatch {
    /// Hour label from the time series.
    pub hour: usize,
    pub production: Vec<f64>,
    pub unmet: Vec<f64>,
    pub flows: Vec<f64>,
    pub angles: Vec<f64>,
    /// Locational marginal price per bus, $/MWh.
    pub lmp: Vec<f64>,
    /// Multiplier of each unit's offered-capacity bound, >= 0.
    pub capacity_dual: Vec<f64>,
    /// Multiplier of each unit's non-negativity bound, >= 0.
    pub floor_dual: Vec<f64>,
    /// Multiplier of each line's upper flow limit, >= 0.
    pub flow_upper_dual: Vec<f64>,
    /// Multiplier of each line's lower flow limit, >= 0.
    pub flow_lower_dual: Vec<f64>,
    /// Dual of each line's flow-definition row.
    pub flow_def_dual: Vec<f64>,
    /// Offered capacity each unit was dispatched against, MW.
    pub capacity: Vec<f64>,
    /// Price each unit was dispatched at, $/MWh.
    pub bid: Vec<f64>,
    /// Objective value: bids times output plus VOLL times unmet load.
    pub cost: f64,
    pub kkt: KktReport,
}

impl HourlyDispatch {
    pub fn shed(&self) -> f64 {
        self.unmet.iter().sum()
    }
}

fn solve_hour(net: &SystemNetwork, ts: &TimeSeries, offers: &Resolved, t: usize, voll: f64) -> Result<HourlyDispatch> {
    let (lp, lay) = build(net, ts, offers, t, voll)?;
    let sol = solve(&lp);
    if !sol.is_optimal() {
        return Err(Error::Dispatch {
            hour: ts.horizon[t],
            status: sol.status.to_string(),
        });
    }
    let ng = net.generators.len();
    let nb = net.buses.len();
    let nl = net.lines.len();
    let d = &sol.reduced_costs;
    let pos = |v: f64| v.max(0.0);
    let kkt = check_kkt(&lp, &sol, KKT_TOL);
    Ok(HourlyDispatch {
        hour: ts.horizon[t],
        production: sol.x[lay.p..lay.p + ng].to_vec(),
        unmet: sol.x[lay.unmet..lay.unmet + nb].to_vec(),
        angles: sol.x[lay.theta..lay.theta + nb].to_vec(),
        flows: sol.x[lay.flow..lay.flow + nl].to_vec(),
        lmp: sol.duals[lay.balance_row..lay.balance_row + nb].to_vec(),
        capacity_dual: (0..ng).map(|k| pos(-d[lay.p + k])).collect(),
        floor_dual: (0..ng).map(|k| pos(d[lay.p + k])).collect(),
        flow_upper_dual: (0..nl).map(|k| pos(-d[lay.flow + k])).collect(),
        flow_lower_dual: (0..nl).map(|k| pos(d[lay.flow + k])).collect(),
        flow_def_dual: sol.duals[lay.flow_row..lay.flow_row + nl].to_vec(),
        capacity: offers.cap.clone(),
        bid: offers.bid.clone(),
        cost: sol.objective,
        kkt,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyMarketResult {
    pub hours: Vec<HourlyDispatch>,
    /// Sum of hourly objectives, $.
    pub total_cost: f64,
    /// Realized profit `sum_t (lmp - var_cost) * p`, $, keyed by generator.
    pub profit: BTreeMap<String, f64>,
    /// Unserved energy per bus, MWh.
    pub shed: BTreeMap<String, f64>,
}

impl EnergyMarketResult {
    pub fn total_shed(&self) -> f64 {
        self.shed.values().sum()
    }
}

/// Solves every hour of the horizon.
pub fn dispatch(net: &SystemNetwork, ts: &TimeSeries, offers: &[EnergyOffer], voll: f64) -> Result<EnergyMarketResult> {
    ts.validate(net)?;
    let resolved = resolve(net, offers, voll)?;
    let hours = (0..ts.num_hours())
        .map(|t| solve_hour(net, ts, &resolved, t, voll))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(net, hours))
}

/// Solves a single hour index.
pub fn dispatch_hour(
    net: &SystemNetwork,
    ts: &TimeSeries,
    offers: &[EnergyOffer],
    t: usize,
    voll: f64,
) -> Result<HourlyDispatch> {
    ts.validate(net)?;
    if t >= ts.num_hours() {
        return invalid(format!("hour index {t} outside a {}-hour horizon", ts.num_hours()));
    }
    let resolved = resolve(net, offers, voll)?;
    solve_hour(net, ts, &resolved, t, voll)
}

fn summarize(net: &SystemNetwork, hours: Vec<HourlyDispatch>) -> EnergyMarketResult {
    let gen_bus = bus_of_generators(net);
    let mut profit: BTreeMap<String, f64> = net.generators.iter().map(|g| (g.id.clone(), 0.0)).collect();
    let mut shed: BTreeMap<String, f64> = net.buses.iter().map(|b| (b.clone(), 0.0)).collect();
    let mut total_cost = 0.0;
    for h in &hours {
        total_cost += h.cost;
        for (k, g) in net.generators.iter().enumerate() {
            *profit.get_mut(&g.id).unwrap() += (h.lmp[gen_bus[k]] - g.var_cost) * h.production[k];
        }
        for (i, b) in net.buses.iter().enumerate() {
            *shed.get_mut(b).unwrap() += h.unmet[i];
        }
    }
    EnergyMarketResult {
        hours,
        total_cost,
        profit,
        shed,
    }
}

/// Closed-form energy profit of a truthfully offering unit over the horizon:
/// `(lmp - var_cost)^+ * p_max` per hour for dispatchable units and
/// `lmp * cf * p_max` for renewables.
pub fn generator_energy_profit(
    result: &EnergyMarketResult,
    net: &SystemNetwork,
    ts: &TimeSeries,
    id: &str,
) -> Result<f64> {
    let k = net.generator_index(id)?;
    let g = &net.generators[k];
    let bus = bus_of_generators(net)[k];
    let mut total = 0.0;
    for (t, h) in result.hours.iter().enumerate() {
        let lmp = h.lmp[bus];
        total += if g.dispatchable {
            (lmp - g.var_cost).max(0.0) * g.p_max
        } else {
            let cf = ts
                .capacity_factors
                .get(id)
                .ok_or_else(|| Error::Validation(format!("no capacity factors for {id}")))?;
            lmp * cf[t] * g.p_max
        };
    }
    Ok(total)
}

/// Net cost of new entry for every unit, from a truthful dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetCone {
    /// $/MW-day.
    pub net_cone: BTreeMap<String, f64>,
    /// Energy profit over the horizon, $.
    pub energy_profit: BTreeMap<String, f64>,
    pub peaker: String,
    /// Largest net CONE, $/MW-day.
    pub c_cone: f64,
    pub days: f64,
}

/// `W_g = max(0, invest - profit / (p_max * days))` for every unit.
/// Ties for the peaker go to the smallest id.
pub fn compute_net_cone(net: &SystemNetwork, ts: &TimeSeries, voll: f64, days_in_horizon: f64) -> Result<NetCone> {
    if !(days_in_horizon > 0.0 && days_in_horizon.is_finite()) {
        return invalid("net CONE needs a positive horizon length");
    }
    if ts.num_hours() == 0 {
        return invalid("net CONE needs at least one hour");
    }
    let em = dispatch(net, ts, &truthful_offers(net, None), voll)?;
    net_cone_from(&em, net, days_in_horizon)
}

/// Net CONE from an existing truthful dispatch.
pub fn net_cone_from(em: &EnergyMarketResult, net: &SystemNetwork, days_in_horizon: f64) -> Result<NetCone> {
    if !(days_in_horizon > 0.0 && days_in_horizon.is_finite()) {
        return invalid("net CONE needs a positive horizon length");
    }
    let mut w = BTreeMap::new();
    let mut peaker: Option<(&str, f64)> = None;
    for g in &net.generators {
        let profit = em.profit[&g.id];
        let v = (g.invest_cost - profit / (g.p_max * days_in_horizon)).max(0.0);
        w.insert(g.id.clone(), v);
        let better = match peaker {
            None => true,
            Some((id, best)) => v > best || (v == best && g.id.as_str() < id),
        };
        if better {
            peaker = Some((g.id.as_str(), v));
        }
    }
    let Some((peaker, c_cone)) = peaker else {
        return invalid("network has no generators");
    };
    Ok(NetCone {
        peaker: peaker.to_string(),
        c_cone,
        net_cone: w,
        energy_profit: em.profit.clone(),
        days: days_in_horizon,
    })
}

/// Horizon length in days for `hours` hourly periods.
pub fn days_in_horizon(hours: usize) -> f64 {
    hours as f64 / 24.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub hour: usize,
    pub congested: bool,
    /// Largest minus smallest LMP across buses.
    pub spread: f64,
    /// True for congested hours, otherwise `spread <= tol`.
    pub pass: bool,
}

/// A line binds when its flow sits within `1e-6 * max(1, limit)` of a limit.
pub fn line_binding(flow: f64, f_min: f64, f_max: f64) -> bool {
    flow >= f_max - 1e-6 * f_max.abs().max(1.0) || flow <= f_min + 1e-6 * f_min.abs().max(1.0)
}

pub fn hour_congested(h: &HourlyDispatch, net: &SystemNetwork) -> bool {
    h.flows
        .iter()
        .zip(&net.lines)
        .any(|(&f, l)| line_binding(f, l.f_min, l.f_max))
}

pub fn uniform_lmp_check(result: &EnergyMarketResult, net: &SystemNetwork, tol: f64) -> Vec<UniformityReport> {
    result
        .hours
        .iter()
        .map(|h| {
            let congested = hour_congested(h, net);
            let hi = h.lmp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = h.lmp.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = if h.lmp.is_empty() { 0.0 } else { hi - lo };
            UniformityReport {
                hour: h.hour,
                congested,
                spread,
                pass: congested || spread <= tol,
            }
        })
        .collect()
}

/// Residuals of the market-specific optimality conditions of one hour.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketKkt {
    /// The generic LP certificate.
    pub lp: KktReport,
    /// `max(lmp - VOLL, 0)` over buses.
    pub price_cap: f64,
    /// `lmp - alpha - bid <= 0` violations of dispatchable units.
    pub dual_feasibility: f64,
    /// `|(lmp - alpha - bid) * p|` of dispatchable units.
    pub dispatch_complementarity: f64,
    /// `|(lmp - VOLL) * unmet|` over buses.
    pub shed_complementarity: f64,
    /// `|alpha * (capacity - p)|` of dispatchable units.
    pub capacity_complementarity: f64,
    pub pass: bool,
}

impl MarketKkt {
    pub fn max_residual(&self) -> f64 {
        self.lp
            .max_residual()
            .max(self.price_cap)
            .max(self.dual_feasibility)
            .max(self.dispatch_complementarity)
            .max(self.shed_complementarity)
            .max(self.capacity_complementarity)
    }
}

pub fn market_kkt(h: &HourlyDispatch, net: &SystemNetwork, voll: f64, tol: f64) -> MarketKkt {
    let gen_bus = bus_of_generators(net);
    let mut r = MarketKkt {
        lp: h.kkt.clone(),
        ..Default::default()
    };
    for (i, &lmp) in h.lmp.iter().enumerate() {
        r.price_cap = r.price_cap.max(lmp - voll);
        r.shed_complementarity = r.shed_complementarity.max(((lmp - voll) * h.unmet[i]).abs());
    }
    for (k, g) in net.generators.iter().enumerate() {
        if !g.dispatchable {
            continue;
        }
        let p = h.production[k];
        let alpha = h.capacity_dual[k];
        let margin = h.lmp[gen_bus[k]] - alpha - h.bid[k];
        r.dual_feasibility = r.dual_feasibility.max(margin);
        r.dispatch_complementarity = r.dispatch_complementarity.max((margin * p).abs());
        r.capacity_complementarity = r.capacity_complementarity.max((alpha * (h.capacity[k] - p)).abs());
    }
    r.pass = r.lp.pass && r.max_residual() <= tol;
    r
}

/// Largest departure from price-taking behaviour in one hour: a unit priced
/// strictly in the money (by more than `margin`) must run at capacity, one
/// strictly out of the money must be off. Units within `margin` of their bid
/// are not assessed.
pub fn equilibrium_violation(h: &HourlyDispatch, net: &SystemNetwork, margin: f64) -> f64 {
    let gen_bus = bus_of_generators(net);
    let mut worst: f64 = 0.0;
    for (k, g) in net.generators.iter().enumerate() {
        if !g.dispatchable {
            continue;
        }
        let gap = h.lmp[gen_bus[k]] - h.bid[k];
        let p = h.production[k];
        if gap > margin {
            worst = worst.max(h.capacity[k] - p);
        } else if gap < -margin {
            worst = worst.max(p);
        }
    }
    worst
}

/// `|cost(no committed capacity) - cost(committed)|` for truthful offers.
pub fn split_invariance_gap(
    net: &SystemNetwork,
    ts: &TimeSeries,
    committed: &BTreeMap<String, f64>,
    voll: f64,
) -> Result<f64> {
    let a = dispatch(net, ts, &truthful_offers(net, None), voll)?;
    let b = dispatch(net, ts, &truthful_offers(net, Some(committed)), voll)?;
    Ok((a.total_cost - b.total_cost).abs())
}
