use std::collections::BTreeMap;

use approx::assert_relative_eq;
use capmkt::energy::{
    compute_net_cone, dispatch, equilibrium_violation, generator_energy_profit, hour_congested, market_kkt,
    split_invariance_gap, truthful_offers, uniform_lmp_check, EnergyOffer, DEFAULT_VOLL,
};
use capmkt::io::fixture::{synthetic_fixture, FIXTURE_SEED, LEADERS};
use capmkt::model::{Generator, Line, SystemNetwork, TimeSeries};
use proptest::prelude::*;

fn thermal(id: &str, zone: &str, p_max: f64, var_cost: f64) -> Generator {
    Generator {
        id: id.into(),
        zone: zone.into(),
        fuel: "NG".into(),
        p_max,
        var_cost,
        invest_cost: 100.0,
        unforced_pct: 1.0,
        dispatchable: true,
    }
}

fn wind(id: &str, zone: &str, p_max: f64) -> Generator {
    Generator {
        id: id.into(),
        zone: zone.into(),
        fuel: "Wind".into(),
        p_max,
        var_cost: 0.0,
        invest_cost: 50.0,
        unforced_pct: 0.24,
        dispatchable: false,
    }
}

fn series(loads: Vec<Vec<f64>>, cf: BTreeMap<String, Vec<f64>>) -> TimeSeries {
    let n = loads[0].len();
    TimeSeries {
        horizon: (1..=n).collect(),
        loads,
        capacity_factors: cf,
    }
}

/// Single-bus merit-order dispatch: cheapest first, shortfall at VOLL.
fn merit_order_cost(gens: &[(f64, f64)], load: f64, voll: f64) -> (f64, f64) {
    let mut sorted = gens.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (mut left, mut cost, mut price) = (load, 0.0, 0.0);
    for (cap, c) in sorted {
        if left <= 0.0 {
            break;
        }
        let q = cap.min(left);
        cost += q * c;
        left -= q;
        price = c;
    }
    if left > 1e-12 {
        cost += left * voll;
        price = voll;
    }
    (cost, price)
}

#[test]
fn single_bus_hand_cases() {
    let net = SystemNetwork::new(vec!["b".into()], vec![], vec![thermal("ng", "b", 621.0, 21.1)]).unwrap();
    let ts = series(vec![vec![400.0, 700.0]], BTreeMap::new());
    let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL).unwrap();
    assert_relative_eq!(em.hours[0].production[0], 400.0, epsilon = 1e-9);
    assert_relative_eq!(em.hours[0].lmp[0], 21.1, epsilon = 1e-9);
    assert_relative_eq!(em.hours[1].production[0], 621.0, epsilon = 1e-9);
    assert_relative_eq!(em.hours[1].unmet[0], 79.0, epsilon = 1e-9);
    assert_relative_eq!(em.hours[1].lmp[0], 1000.0, epsilon = 1e-9);
    assert_relative_eq!(em.profit["ng"], (1000.0 - 21.1) * 621.0, max_relative = 1e-12);
    let closed = generator_energy_profit(&em, &net, &ts, "ng").unwrap();
    assert_relative_eq!(closed, em.profit["ng"], max_relative = 1e-9);
}

#[test]
fn renewable_at_zero_price_earns_nothing() {
    let gens = vec![wind("w", "b", 100.0), thermal("hydro", "b", 200.0, 0.0)];
    let net = SystemNetwork::new(vec!["b".into()], vec![], gens).unwrap();
    let cf = BTreeMap::from([("w".to_string(), vec![0.5, 0.8])]);
    let ts = series(vec![vec![60.0, 120.0]], cf);
    let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL).unwrap();
    for h in &em.hours {
        assert!(h.lmp[0].abs() <= 1e-9);
    }
    assert_eq!(generator_energy_profit(&em, &net, &ts, "w").unwrap(), 0.0);
    let nc = compute_net_cone(&net, &ts, DEFAULT_VOLL, 1.0).unwrap();
    assert_eq!(nc.net_cone["w"], 50.0);
}

#[test]
fn tight_line_separates_prices() {
    let lines = vec![Line {
        from: "a".into(),
        to: "b".into(),
        susceptance: 10.0,
        f_min: -50.0,
        f_max: 50.0,
    }];
    let gens = vec![thermal("cheap", "a", 500.0, 10.0), thermal("dear", "b", 500.0, 40.0)];
    let net = SystemNetwork::new(vec!["a".into(), "b".into()], lines, gens).unwrap();
    let ts = series(vec![vec![20.0], vec![200.0]], BTreeMap::new());
    let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL).unwrap();
    let h = &em.hours[0];
    assert!(hour_congested(h, &net));
    assert_relative_eq!(h.lmp[0], 10.0, epsilon = 1e-9);
    assert_relative_eq!(h.lmp[1], 40.0, epsilon = 1e-9);
    assert_relative_eq!(h.flows[0], 50.0, epsilon = 1e-9);
    assert_relative_eq!(h.flow_upper_dual[0], 30.0, epsilon = 1e-9);
    assert!(uniform_lmp_check(&em, &net, 1e-7)[0].pass);
    assert!(market_kkt(h, &net, DEFAULT_VOLL, 1e-6).pass);
}

#[test]
fn fixture_dispatch_is_reproducible() {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).unwrap();
    let offers = truthful_offers(&net, None);
    let a = dispatch(&net, &ts, &offers, DEFAULT_VOLL).unwrap();
    let b = dispatch(&net, &ts, &offers, DEFAULT_VOLL).unwrap();
    assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits());
    assert_eq!(a, b);
}

#[test]
fn fixture_net_cone_targets() {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).unwrap();
    let nc = compute_net_cone(&net, &ts, DEFAULT_VOLL, 1.0).unwrap();
    for &(id, _, _, _, target, qualified) in &LEADERS {
        assert_relative_eq!(nc.net_cone[id], target, epsilon = 1e-6);
        assert_relative_eq!(
            net.generator(id).unwrap().qualified_capacity(),
            qualified,
            epsilon = 0.05
        );
    }
    assert_eq!(nc.peaker, "L_RFO");
    assert_eq!(nc.c_cone, 1246.5);
}

#[test]
fn committed_split_does_not_change_cost_on_fixture() {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).unwrap();
    let committed: BTreeMap<String, f64> = net
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| (g.id.clone(), g.p_max * (k % 4) as f64 / 3.0))
        .collect();
    assert!(split_invariance_gap(&net, &ts, &committed, DEFAULT_VOLL).unwrap() <= 1e-6);
}

#[derive(Debug, Clone)]
struct Case {
    net: SystemNetwork,
    ts: TimeSeries,
}

fn random_case() -> impl Strategy<Value = Case> {
    (2usize..5, 1usize..4)
        .prop_flat_map(|(nb, hours)| {
            (
                Just(nb),
                proptest::collection::vec((0..nb, 10.0f64..300.0, 0.0f64..80.0), 1..8),
                proptest::collection::vec((1.0f64..30.0, 5.0f64..400.0), nb - 1),
                proptest::collection::vec(proptest::option::of((0..nb, 0..nb, 1.0f64..30.0, 5.0f64..400.0)), 2),
                proptest::collection::vec(proptest::collection::vec(0.0f64..250.0, hours), nb),
                proptest::option::of((0..nb, 10.0f64..200.0, proptest::collection::vec(0.0f64..=1.0, hours))),
            )
        })
        .prop_map(|(nb, gens, tree, extra, loads, w)| {
            let buses: Vec<String> = (0..nb).map(|i| format!("n{i}")).collect();
            let mut lines: Vec<Line> = tree
                .iter()
                .enumerate()
                .map(|(i, &(b, lim))| Line {
                    from: buses[i].clone(),
                    to: buses[i + 1].clone(),
                    susceptance: b,
                    f_min: -lim,
                    f_max: lim,
                })
                .collect();
            for (a, c, b, lim) in extra.into_iter().flatten() {
                if a != c {
                    lines.push(Line {
                        from: buses[a].clone(),
                        to: buses[c].clone(),
                        susceptance: b,
                        f_min: -lim,
                        f_max: lim,
                    });
                }
            }
            let mut generators: Vec<Generator> = gens
                .iter()
                .enumerate()
                .map(|(k, &(bus, cap, cost))| {
                    thermal(&format!("g{k}"), &buses[bus], cap, (cost * 100.0).round() / 100.0)
                })
                .collect();
            let mut cf = BTreeMap::new();
            let mut loads = loads;
            if let Some((bus, cap, series)) = w {
                generators.push(wind("w", &buses[bus], cap));
                for (load, f) in loads[bus].iter_mut().zip(&series) {
                    *load += f * cap;
                }
                cf.insert("w".to_string(), series);
            }
            let hours = loads[0].len();
            Case {
                net: SystemNetwork::new(buses, lines, generators).unwrap(),
                ts: TimeSeries {
                    horizon: (1..=hours).collect(),
                    loads,
                    capacity_factors: cf,
                },
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn dispatch_satisfies_market_conditions(c in random_case()) {
        let em = dispatch(&c.net, &c.ts, &truthful_offers(&c.net, None), DEFAULT_VOLL).unwrap();
        for h in &em.hours {
            let k = market_kkt(h, &c.net, DEFAULT_VOLL, 1e-6);
            prop_assert!(k.pass, "{:?}", k);
            for (i, &lmp) in h.lmp.iter().enumerate() {
                prop_assert!(lmp <= DEFAULT_VOLL + 1e-6);
                if h.unmet[i] > 1e-6 {
                    prop_assert!((lmp - DEFAULT_VOLL).abs() <= 1e-6);
                }
            }
            prop_assert!(equilibrium_violation(h, &c.net, 1e-4) <= 1e-6);
        }
        for u in uniform_lmp_check(&em, &c.net, 1e-7) {
            prop_assert!(u.pass, "{:?}", u);
        }
    }

    #[test]
    fn closed_form_profit_matches_realized(c in random_case()) {
        let em = dispatch(&c.net, &c.ts, &truthful_offers(&c.net, None), DEFAULT_VOLL).unwrap();
        for g in &c.net.generators {
            let closed = generator_energy_profit(&em, &c.net, &c.ts, &g.id).unwrap();
            let realized = em.profit[&g.id];
            prop_assert!((closed - realized).abs() <= 1e-6 * closed.abs().max(1.0), "{}: {} vs {}", g.id, closed, realized);
        }
    }

    #[test]
    fn committed_split_is_irrelevant(c in random_case(), shares in proptest::collection::vec(0.0f64..=1.0, 9)) {
        let committed: BTreeMap<String, f64> = c.net.generators.iter().zip(&shares)
            .map(|(g, s)| (g.id.clone(), g.p_max * s))
            .collect();
        prop_assert!(split_invariance_gap(&c.net, &c.ts, &committed, DEFAULT_VOLL).unwrap() <= 1e-6);
    }

    #[test]
    fn withholding_never_lowers_uncongested_prices(c in random_case(), leader in 0usize..8, keep in 0.0f64..1.0) {
        let net = c.net.with_line_scale(1e6);
        let k = leader % net.generators.len();
        prop_assume!(net.generators[k].dispatchable);
        let truthful = truthful_offers(&net, None);
        let mut withheld = truthful.clone();
        withheld[k] = EnergyOffer { extra_capacity: net.generators[k].p_max * keep, ..withheld[k].clone() };
        let a = dispatch(&net, &c.ts, &truthful, DEFAULT_VOLL).unwrap();
        let b = dispatch(&net, &c.ts, &withheld, DEFAULT_VOLL).unwrap();
        for (ha, hb) in a.hours.iter().zip(&b.hours) {
            prop_assume!(!hour_congested(ha, &net) && !hour_congested(hb, &net));
            for (la, lb) in ha.lmp.iter().zip(&hb.lmp) {
                prop_assert!(*lb >= *la - 1e-9, "{} < {}", lb, la);
            }
        }
    }

    #[test]
    fn single_bus_matches_merit_order(
        gens in proptest::collection::vec((1.0f64..200.0, 0.0f64..90.0), 1..10),
        load in 0.0f64..800.0,
    ) {
        let generators: Vec<Generator> = gens.iter().enumerate()
            .map(|(k, &(cap, cost))| thermal(&format!("g{k}"), "b", cap, cost))
            .collect();
        let net = SystemNetwork::new(vec!["b".into()], vec![], generators).unwrap();
        let ts = series(vec![vec![load]], BTreeMap::new());
        let em = dispatch(&net, &ts, &truthful_offers(&net, None), DEFAULT_VOLL).unwrap();
        let (cost, _) = merit_order_cost(&gens, load, DEFAULT_VOLL);
        prop_assert!((em.total_cost - cost).abs() <= 1e-7 * cost.max(1.0));
    }
}
