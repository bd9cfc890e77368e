//! Synthetic 12-zone system used by the examples, tests and benchmarks.
//!
//! Zones `A`..`L` form a spanning tree plus two loops (13 lines). Zones `J`
//! and `K` are a load pocket fed through limited corridors. Seven leader
//! units carry fixed parameters; everything else (rivals, line data, load
//! and wind shapes) is drawn from a seeded ChaCha generator. Leader
//! investment costs are back-computed from a truthful 24-hour dispatch so
//! that their net CONE hits the target values at 100% demand.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{dispatch, truthful_offers, DEFAULT_VOLL};
use crate::error::Result;
use crate::model::{Generator, Line, SystemNetwork, TimeSeries, WIND_UNFORCED_PCT};

pub const FIXTURE_SEED: u64 = 20_240_611;

/// Leader unit: id, fuel, zone, variable cost, target net CONE, qualified MW.
pub const LEADERS: [(&str, &str, &str, f64, f64, f64); 7] = [
    ("L_NG", "NG", "J", 21.1, 199.6, 621.0),
    ("L_COAL", "Coal", "A", 13.1, 540.2, 655.1),
    ("L_NUC", "Nuclear", "C", 4.1, 810.6, 1299.0),
    ("L_RFO", "RFO", "K", 67.6, 1246.5, 901.8),
    ("L_HYDRO", "Hydro", "D", 14.9, 420.9, 250.0),
    ("L_WOOD", "Wood", "H", 35.0, 752.1, 42.1),
    ("L_WIND", "Wind", "B", 0.0, 0.0, 35.9),
];

/// Peak system load at 100% demand, MW.
pub const PEAK_LOAD: f64 = 10_000.0;

const ZONES: [&str; 12] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"];
const LOAD_SHARE: [f64; 12] = [0.05, 0.04, 0.07, 0.03, 0.05, 0.06, 0.06, 0.02, 0.04, 0.34, 0.19, 0.05];

/// from, to, nominal limit MW.
const LINES: [(&str, &str, f64); 13] = [
    ("A", "B", 3000.0),
    ("B", "C", 3500.0),
    ("C", "E", 5000.0),
    ("D", "E", 2500.0),
    ("E", "F", 6000.0),
    ("F", "G", 6000.0),
    ("G", "H", 5000.0),
    ("H", "I", 5000.0),
    ("I", "J", 3400.0),
    ("J", "K", 1200.0),
    ("I", "L", 3500.0),
    ("C", "F", 4000.0),
    ("L", "K", 2600.0),
];

/// fuel, count, MW range, variable cost range, invest range.
const RIVALS: [(&str, usize, (f64, f64), (f64, f64), (f64, f64)); 7] = [
    ("NG", 20, (50.0, 200.0), (18.0, 48.0), (150.0, 360.0)),
    ("Coal", 5, (200.0, 400.0), (10.0, 17.0), (400.0, 650.0)),
    ("Nuclear", 3, (600.0, 900.0), (3.0, 5.5), (600.0, 900.0)),
    ("RFO", 9, (60.0, 180.0), (50.0, 66.0), (800.0, 1150.0)),
    ("Hydro", 9, (30.0, 180.0), (5.0, 16.0), (300.0, 520.0)),
    ("Wood", 5, (15.0, 50.0), (30.0, 40.0), (600.0, 800.0)),
    ("Wind", 12, (60.0, 220.0), (0.0, 0.0), (40.0, 140.0)),
];

/// Zones rivals may be placed in, per fuel. Pocket zones get gas and oil only.
fn zones_for(fuel: &str) -> &'static [&'static str] {
    match fuel {
        "NG" => &["A", "C", "E", "F", "G", "I", "J", "J", "J", "K", "K", "L"],
        "RFO" => &["J", "K", "K", "L", "F"],
        "Coal" => &["A", "B", "D", "E"],
        "Nuclear" => &["B", "C", "G"],
        "Hydro" => &["A", "D", "D", "E", "H"],
        "Wood" => &["A", "B", "H", "I"],
        _ => &["A", "B", "D", "H"],
    }
}

/// Hourly demand multiplier, peaking at hour 17.
fn load_shape(t: usize) -> f64 {
    let x = (t as f64 - 17.0) / 24.0 * std::f64::consts::TAU;
    0.70 + 0.30 * (0.5 + 0.5 * x.cos()).powf(1.5)
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

/// Network and 24-hour series without leader investment costs calibrated.
fn raw(seed: u64) -> Result<(SystemNetwork, TimeSeries)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buses: Vec<String> = ZONES.iter().map(|z| z.to_string()).collect();
    let lines: Vec<Line> = LINES
        .iter()
        .map(|&(from, to, limit)| {
            let b = round_to(rng.gen_range(8.0..25.0), 3);
            Line {
                from: from.into(),
                to: to.into(),
                susceptance: b,
                f_min: -limit,
                f_max: limit,
            }
        })
        .collect();

    let mut generators = Vec::new();
    let mut capacity_factors = BTreeMap::new();
    let hours: Vec<usize> = (1..=24).collect();
    let wind_series = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let base = rng.gen_range(0.25..0.45);
        let phase = rng.gen_range(0.0..24.0);
        hours
            .iter()
            .map(|&t| {
                let x = (t as f64 - phase) / 24.0 * std::f64::consts::TAU;
                round_to(
                    (base + 0.15 * x.cos() + rng.gen_range(-0.05..0.05)).clamp(0.02, 0.95),
                    4,
                )
            })
            .collect()
    };

    for &(id, fuel, zone, var_cost, _, qualified) in &LEADERS {
        let wind = fuel == "Wind";
        let (p_max, unforced_pct) = if wind {
            (149.58, WIND_UNFORCED_PCT)
        } else {
            (qualified, 1.0)
        };
        if wind {
            capacity_factors.insert(id.to_string(), wind_series(&mut rng));
        }
        generators.push(Generator {
            id: id.into(),
            zone: zone.into(),
            fuel: fuel.into(),
            p_max,
            var_cost,
            invest_cost: 0.0,
            unforced_pct,
            dispatchable: !wind,
        });
    }
    for &(fuel, count, size, cost, invest) in &RIVALS {
        let zones = zones_for(fuel);
        for k in 0..count {
            let wind = fuel == "Wind";
            let id = format!("{}_{:02}", fuel.to_uppercase(), k + 1);
            let zone = zones[rng.gen_range(0..zones.len())];
            let p_max = round_to(rng.gen_range(size.0..size.1), 1);
            let var_cost = if wind {
                0.0
            } else {
                round_to(rng.gen_range(cost.0..cost.1), 2)
            };
            let invest_cost = round_to(rng.gen_range(invest.0..invest.1), 1);
            if wind {
                capacity_factors.insert(id.clone(), wind_series(&mut rng));
            }
            generators.push(Generator {
                id,
                zone: zone.into(),
                fuel: fuel.into(),
                p_max,
                var_cost,
                invest_cost,
                unforced_pct: if wind { WIND_UNFORCED_PCT } else { 1.0 },
                dispatchable: !wind,
            });
        }
    }

    let loads: Vec<Vec<f64>> = LOAD_SHARE
        .iter()
        .map(|share| {
            let tilt = rng.gen_range(-0.02..0.02);
            hours
                .iter()
                .map(|&t| {
                    let noise = 1.0 + tilt * ((t as f64) / 24.0 - 0.5);
                    round_to(PEAK_LOAD * share * load_shape(t - 1) * noise, 2)
                })
                .collect()
        })
        .collect();

    let net = SystemNetwork::new(buses, lines, generators)?;
    let ts = TimeSeries {
        horizon: hours,
        loads,
        capacity_factors,
    };
    ts.validate(&net)?;
    Ok((net, ts))
}

/// Builds the fixture. Leader investment costs are set to
/// `target + profit / p_max` (one-day horizon); the wind leader gets half its
/// daily energy profit per MW so its net CONE is zero.
pub fn synthetic_fixture(seed: u64) -> Result<(SystemNetwork, TimeSeries)> {
    let (mut net, ts) = raw(seed)?;
    let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL)?;
    for &(id, fuel, _, _, target, _) in &LEADERS {
        let k = net.generator_index(id)?;
        let g = &mut net.generators[k];
        let per_mw = em.profit[id] / g.p_max;
        g.invest_cost = if fuel == "Wind" {
            round_to(0.5 * per_mw, 4)
        } else {
            target + per_mw
        };
    }
    Ok((net, ts))
}

/// Directory of the fixture shipped with the crate sources.
pub fn bundled_fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("synthetic")
}

/// Writes the fixture tables and a default `scenario.cfg` into `dir`.
/// Returns the config path.
pub fn write_fixture(dir: &std::path::Path, seed: u64) -> Result<std::path::PathBuf> {
    use crate::error::Error;
    use crate::io::{tables, ScenarioConfig};

    let (net, ts) = synthetic_fixture(seed)?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    tables::write_generators(&dir.join(&cfg.generators), &net.generators)?;
    tables::write_lines(&dir.join(&cfg.lines), &net.lines)?;
    tables::write_loads(&dir.join(&cfg.loads), &net, &ts)?;
    tables::write_capacity_factors(&dir.join(&cfg.capacity_factors), &ts)?;
    let path = dir.join("scenario.cfg");
    cfg.write(&path)?;
    Ok(path)
}
