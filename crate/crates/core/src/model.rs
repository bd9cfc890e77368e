//! Domain types shared by the capacity and energy markets, and the
//! demand-curve arithmetic of the capacity auction.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Hours of full output per day assumed by [`peaker_levelized_cost`].
pub const DEFAULT_FULL_OUTPUT_HOURS: f64 = 24.0;

/// Unforced capacity percentage applied to wind rows that omit it.
pub const WIND_UNFORCED_PCT: f64 = 0.24;

/// One supplier: physical capacity, costs, and capacity-market accreditation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    /// Bus the unit is connected to.
    pub zone: String,
    pub fuel: String,
    /// Nameplate capacity, MW.
    pub p_max: f64,
    /// Variable cost, $/MWh.
    pub var_cost: f64,
    /// Investment cost, $/MW-day.
    pub invest_cost: f64,
    /// Fraction of nameplate that counts as unforced capacity.
    pub unforced_pct: f64,
    /// Thermal-like unit that can be dispatched anywhere in `[0, capacity]`.
    /// Non-dispatchable units follow a capacity-factor series.
    pub dispatchable: bool,
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return invalid(format!("generator {}: p_max must be positive", self.id));
        }
        if !(self.var_cost >= 0.0 && self.var_cost.is_finite()) {
            return invalid(format!("generator {}: var_cost must be >= 0", self.id));
        }
        if !(self.invest_cost >= 0.0 && self.invest_cost.is_finite()) {
            return invalid(format!("generator {}: invest_cost must be >= 0", self.id));
        }
        if !(self.unforced_pct > 0.0 && self.unforced_pct <= 1.0) {
            return invalid(format!(
                "generator {}: unforced_pct {} outside (0, 1]",
                self.id, self.unforced_pct
            ));
        }
        if !self.dispatchable && self.var_cost != 0.0 {
            return invalid(format!(
                "generator {}: renewable units must have zero variable cost",
                self.id
            ));
        }
        Ok(())
    }

    pub fn qualified_capacity(&self) -> f64 {
        qualified_capacity(self)
    }
}

/// Unforced capacity a generator may sell in the capacity auction.
pub fn qualified_capacity(g: &Generator) -> f64 {
    g.unforced_pct * g.p_max
}

/// Daily levelized cost of a unit running `full_output_hours` per day,
/// in $/MW-day: investment plus variable cost over those hours.
pub fn peaker_levelized_cost(g: &Generator, full_output_hours: f64) -> f64 {
    g.invest_cost + g.var_cost * full_output_hours
}

/// Linear capacity demand curve `P = -A Q + Pi_max` together with the
/// anchors it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandCurve {
    pub a_slope: f64,
    pub pi_max: f64,
    /// Capacity requirement (reference point quantity), MW.
    pub q_cap: f64,
    /// Zero-crossing quantity, MW.
    pub q_zero: f64,
    /// Net CONE of the peaker (reference point price), $/MW-day.
    pub c_cone: f64,
    /// Maximum clearing price of the flat segment, $/MW-day.
    pub p1: f64,
    pub f_excess: f64,
    pub reserve_margin: f64,
    pub translation_factor: f64,
    pub d_peak: f64,
}

impl DemandCurve {
    /// Price on the curve at quantity `q`.
    pub fn price_at(&self, q: f64) -> f64 {
        -self.a_slope * q + self.pi_max
    }

    /// Quantity demanded at price `p` (unbounded above `q_zero` for negative prices).
    pub fn quantity_at(&self, p: f64) -> f64 {
        (self.pi_max - p) / self.a_slope
    }

    /// Build a curve directly from slope and intercept. The anchor fields are
    /// back-filled so the curve stays self-consistent (`f_excess` defaults to 0.18).
    pub fn from_slope_intercept(a_slope: f64, pi_max: f64) -> Result<Self> {
        if !(a_slope > 0.0 && pi_max > 0.0) {
            return invalid("demand curve slope and intercept must be positive");
        }
        let f_excess = 0.18;
        let c_cone = pi_max * f_excess / (1.0 + f_excess);
        let q_cap = c_cone / (f_excess * a_slope);
        Ok(DemandCurve {
            a_slope,
            pi_max,
            q_cap,
            q_zero: (1.0 + f_excess) * q_cap,
            c_cone,
            p1: pi_max,
            f_excess,
            reserve_margin: 0.0,
            translation_factor: 0.0,
            d_peak: q_cap,
        })
    }
}

/// Build the capacity demand curve from the peaker's net CONE and the
/// installed-capacity requirement.
pub fn build_demand_curve(
    c_cone: f64,
    d_peak: f64,
    reserve_margin: f64,
    translation_factor: f64,
    f_excess: f64,
    peaker_levelized_cost: f64,
) -> Result<DemandCurve> {
    let positive = [
        ("c_cone", c_cone),
        ("d_peak", d_peak),
        ("reserve_margin", reserve_margin),
        ("translation_factor", translation_factor),
        ("f_excess", f_excess),
        ("peaker_levelized_cost", peaker_levelized_cost),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    for (name, v) in [
        ("reserve_margin", reserve_margin),
        ("translation_factor", translation_factor),
        ("f_excess", f_excess),
    ] {
        if v >= 1.0 {
            return invalid(format!("{name} must lie in (0, 1), got {v}"));
        }
    }
    let q_cap = (1.0 - translation_factor) * (1.0 + reserve_margin) * d_peak;
    Ok(DemandCurve {
        a_slope: c_cone / (f_excess * q_cap),
        pi_max: (1.0 + f_excess) / f_excess * c_cone,
        q_cap,
        q_zero: (1.0 + f_excess) * q_cap,
        c_cone,
        p1: 1.5 * peaker_levelized_cost,
        f_excess,
        reserve_margin,
        translation_factor,
        d_peak,
    })
}

/// Transmission line between two buses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: String,
    pub to: String,
    /// Susceptance, p.u.
    pub susceptance: f64,
    /// Lower flow limit, MW (negative for reverse flow).
    pub f_min: f64,
    /// Upper flow limit, MW.
    pub f_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemNetwork {
    pub buses: Vec<String>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

impl SystemNetwork {
    pub fn new(buses: Vec<String>, lines: Vec<Line>, generators: Vec<Generator>) -> Result<Self> {
        let net = SystemNetwork {
            buses,
            lines,
            generators,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return invalid("network has no buses");
        }
        let mut seen = HashMap::new();
        for (i, b) in self.buses.iter().enumerate() {
            if seen.insert(b.as_str(), i).is_some() {
                return invalid(format!("duplicate bus `{b}`"));
            }
        }
        for (k, l) in self.lines.iter().enumerate() {
            for end in [&l.from, &l.to] {
                if !seen.contains_key(end.as_str()) {
                    return invalid(format!("line {k} references unknown bus `{end}`"));
                }
            }
            if l.from == l.to {
                return invalid(format!("line {k} is a self-loop at `{}`", l.from));
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return invalid(format!("line {k}: susceptance must be positive"));
            }
            if !(l.f_min < l.f_max) {
                return invalid(format!("line {k}: f_min must be below f_max"));
            }
        }
        let mut ids = HashMap::new();
        for g in &self.generators {
            g.validate()?;
            if !seen.contains_key(g.zone.as_str()) {
                return invalid(format!("generator {} sits at unknown bus `{}`", g.id, g.zone));
            }
            if ids.insert(g.id.as_str(), ()).is_some() {
                return invalid(format!("duplicate generator id `{}`", g.id));
            }
        }
        Ok(())
    }

    pub fn bus_index(&self, bus: &str) -> Option<usize> {
        self.buses.iter().position(|b| b == bus)
    }

    pub fn generator(&self, id: &str) -> Result<&Generator> {
        self.generators
            .iter()
            .find(|g| g.id == id)
            .ok_or_else(|| Error::UnknownGenerator(id.to_string()))
    }

    pub fn generator_index(&self, id: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.id == id)
            .ok_or_else(|| Error::UnknownGenerator(id.to_string()))
    }

    /// Copy with every line limit multiplied by `scale`.
    pub fn with_line_scale(&self, scale: f64) -> SystemNetwork {
        let mut out = self.clone();
        for l in &mut out.lines {
            l.f_min *= scale;
            l.f_max *= scale;
        }
        out
    }

    /// Total qualified capacity of all generators.
    pub fn total_qualified_capacity(&self) -> f64 {
        self.generators.iter().map(qualified_capacity).sum()
    }
}

/// Hourly loads per bus and capacity factors per renewable unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Hour labels, in order.
    pub horizon: Vec<usize>,
    /// `loads[bus][t]`, MW, aligned with `SystemNetwork::buses`.
    pub loads: Vec<Vec<f64>>,
    /// Capacity factor series keyed by generator id.
    pub capacity_factors: BTreeMap<String, Vec<f64>>,
}

impl TimeSeries {
    pub fn num_hours(&self) -> usize {
        self.horizon.len()
    }

    pub fn validate(&self, net: &SystemNetwork) -> Result<()> {
        let t = self.horizon.len();
        if self.loads.len() != net.buses.len() {
            return invalid(format!(
                "load table has {} buses, network has {}",
                self.loads.len(),
                net.buses.len()
            ));
        }
        for (b, row) in self.loads.iter().enumerate() {
            if row.len() != t {
                return invalid(format!(
                    "bus {} has {} load hours, expected {t}",
                    net.buses[b],
                    row.len()
                ));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return invalid(format!("bus {}: negative or non-finite load {v}", net.buses[b]));
            }
        }
        for (id, cf) in &self.capacity_factors {
            let g = net.generator(id)?;
            if g.dispatchable {
                return invalid(format!(
                    "generator {id} has a capacity-factor series but is dispatchable"
                ));
            }
            if cf.len() != t {
                return invalid(format!(
                    "generator {id} has {} capacity factors, expected {t}",
                    cf.len()
                ));
            }
            if let Some(v) = cf.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return invalid(format!("generator {id}: capacity factor {v} outside [0, 1]"));
            }
        }
        for g in net.generators.iter().filter(|g| !g.dispatchable) {
            if !self.capacity_factors.contains_key(&g.id) {
                return invalid(format!("renewable generator {} has no capacity-factor series", g.id));
            }
        }
        Ok(())
    }

    /// System load in hour index `t`.
    pub fn system_load(&self, t: usize) -> f64 {
        self.loads.iter().map(|row| row[t]).sum()
    }

    /// Highest system load over the horizon.
    pub fn peak_load(&self) -> f64 {
        (0..self.num_hours()).map(|t| self.system_load(t)).fold(0.0, f64::max)
    }

    /// Copy with every load multiplied by `scale`.
    pub fn with_load_scale(&self, scale: f64) -> TimeSeries {
        let mut out = self.clone();
        for row in &mut out.loads {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thermal(id: &str, p_max: f64, var_cost: f64, invest: f64) -> Generator {
        Generator {
            id: id.into(),
            zone: "A".into(),
            fuel: "NG".into(),
            p_max,
            var_cost,
            invest_cost: invest,
            unforced_pct: 1.0,
            dispatchable: true,
        }
    }

    #[test]
    fn demand_curve_reference_values() {
        let c = build_demand_curve(1246.5, 10000.0, 0.2070, 0.0856, 0.18, 1.0).unwrap();
        assert!((c.q_cap - 11036.8).abs() < 0.05, "{}", c.q_cap);
        assert!((c.a_slope - 0.62745).abs() < 1e-5, "{}", c.a_slope);
        assert!((c.pi_max - 8171.5).abs() < 0.05, "{}", c.pi_max);
        assert_eq!(c.q_zero, (1.0 + c.f_excess) * c.q_cap);
        assert!((c.price_at(c.q_cap) - c.c_cone).abs() <= 1e-9);
        assert!(c.price_at(c.q_zero).abs() <= 1e-9);
    }

    #[test]
    fn demand_curve_rejects_degenerate_inputs() {
        assert!(build_demand_curve(0.0, 10000.0, 0.2, 0.08, 0.18, 1.0).is_err());
        assert!(build_demand_curve(100.0, -1.0, 0.2, 0.08, 0.18, 1.0).is_err());
        assert!(build_demand_curve(100.0, 1.0, 1.2, 0.08, 0.18, 1.0).is_err());
        assert!(build_demand_curve(100.0, 1.0, 0.2, 0.08, 0.0, 1.0).is_err());
    }

    #[test]
    fn qualified_capacity_examples() {
        let ng = thermal("ng", 621.0, 21.1, 199.6);
        assert_eq!(qualified_capacity(&ng), 621.0);
        let unit = thermal("u", 100.0, 0.0, 0.0);
        assert_eq!(qualified_capacity(&unit), 100.0);
        let wind = Generator {
            unforced_pct: WIND_UNFORCED_PCT,
            p_max: 149.58,
            var_cost: 0.0,
            dispatchable: false,
            ..thermal("w", 1.0, 0.0, 0.0)
        };
        assert!((qualified_capacity(&wind) - 35.9).abs() < 0.05);
    }

    #[test]
    fn levelized_cost_convention() {
        assert_eq!(peaker_levelized_cost(&thermal("a", 1.0, 0.0, 1200.0), 7.0), 1200.0);
        assert_eq!(peaker_levelized_cost(&thermal("b", 1.0, 10.0, 1000.0), 24.0), 1240.0);
        let rfo = thermal("rfo", 901.8, 67.6, 1246.5);
        let lc = peaker_levelized_cost(&rfo, DEFAULT_FULL_OUTPUT_HOURS);
        let c = build_demand_curve(1246.5, 10000.0, 0.207, 0.0856, 0.18, lc).unwrap();
        assert_eq!(c.p1, 1.5 * lc);
    }

    #[test]
    fn generator_validation() {
        assert!(thermal("a", 10.0, 1.0, 1.0).validate().is_ok());
        assert!(thermal("a", 0.0, 1.0, 1.0).validate().is_err());
        let mut g = thermal("a", 10.0, 1.0, 1.0);
        g.unforced_pct = 1.5;
        assert!(g.validate().is_err());
        g.unforced_pct = 1.0;
        g.dispatchable = false;
        assert!(g.validate().is_err(), "renewable with variable cost");
    }

    #[test]
    fn network_rejects_dangling_line() {
        let r = SystemNetwork::new(
            vec!["A".into()],
            vec![Line {
                from: "A".into(),
                to: "B".into(),
                susceptance: 1.0,
                f_min: -1.0,
                f_max: 1.0,
            }],
            vec![],
        );
        assert!(r.is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn curve_passes_through_anchors(
                c_cone in 1.0f64..5000.0,
                d_peak in 10.0f64..50000.0,
                gamma in 0.01f64..0.9,
                tf in 0.01f64..0.9,
                fe in 0.01f64..0.9,
            ) {
                let c = build_demand_curve(c_cone, d_peak, gamma, tf, fe, 1.0).unwrap();
                let scale = 1.0 + c.pi_max;
                prop_assert!((c.price_at(c.q_cap) - c_cone).abs() <= 1e-9 * scale);
                prop_assert!(c.price_at(c.q_zero).abs() <= 1e-9 * scale);
            }

            #[test]
            fn qualified_capacity_is_monotone(p in 1.0f64..1000.0, dp in 0.0f64..100.0, u in 0.01f64..0.99, du in 0.0f64..0.01) {
                let mut g = thermal("g", p, 0.0, 0.0);
                g.unforced_pct = u;
                let base = qualified_capacity(&g);
                g.p_max = p + dp;
                prop_assert!(qualified_capacity(&g) >= base);
                g.unforced_pct = u + du;
                prop_assert!(qualified_capacity(&g) >= base);
            }
        }
    }
}
