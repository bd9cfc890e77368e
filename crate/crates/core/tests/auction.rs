use std::collections::BTreeMap;

use approx::assert_relative_eq;
use capmkt::auction::{
    clear_greedy, clear_mip, clear_mip_detailed, clear_qc, consumer_surplus, excess_capacity_ratio, producer_surplus,
    qc_certificate, social_welfare, supplier_profit, welfare_value, AllocationClass, CapacityBid, ClearingResult,
};
use capmkt::model::{build_demand_curve, DemandCurve};
use proptest::prelude::*;

/// Independent clearing oracle: try every supplier as the marginal one and
/// keep the cheapest whose offer window contains the demanded quantity at
/// its own price.
fn oracle(bids: &[CapacityBid], curve: &DemandCurve) -> Option<(f64, f64, String)> {
    let mut sorted: Vec<&CapacityBid> = bids.iter().collect();
    sorted.sort_by(|a, b| {
        a.offer_price
            .total_cmp(&b.offer_price)
            .then(a.generator_id.cmp(&b.generator_id))
    });
    let mut before = 0.0;
    for b in sorted {
        let demand = (curve.pi_max - b.offer_price) / curve.a_slope;
        if demand >= before - 1e-9 && demand <= before + b.offer_qty + 1e-9 {
            return Some((b.offer_price, demand, b.generator_id.clone()));
        }
        before += b.offer_qty;
    }
    None
}

fn random_market() -> impl Strategy<Value = (Vec<CapacityBid>, DemandCurve)> {
    (3usize..50)
        .prop_flat_map(|n| {
            (
                proptest::collection::btree_set(1u32..100_000, n),
                proptest::collection::vec(1.0f64..500.0, n),
                0.01f64..2.0,
                100.0f64..2000.0,
            )
        })
        .prop_map(|(prices, qty, a, pi_max)| {
            let bids = prices
                .into_iter()
                .zip(qty)
                .enumerate()
                .map(|(k, (p, q))| CapacityBid::new(format!("g{k:02}"), p as f64 / 100.0, q))
                .collect();
            (bids, DemandCurve::from_slope_intercept(a, pi_max).unwrap())
        })
}

fn assert_same(a: &ClearingResult, b: &ClearingResult) {
    let dev = a.max_deviation(b).expect("both paths agree on cleared");
    assert!(dev <= 1e-9, "deviation {dev}: {a:?} vs {b:?}");
}

fn golden() -> (Vec<CapacityBid>, DemandCurve) {
    (
        vec![
            CapacityBid::new("g1", 100.0, 50.0),
            CapacityBid::new("g2", 200.0, 50.0),
            CapacityBid::new("g3", 300.0, 50.0),
        ],
        DemandCurve::from_slope_intercept(1.0, 260.0).unwrap(),
    )
}

#[test]
fn golden_instance_all_paths() {
    let (bids, curve) = golden();
    let (p, q, m) = oracle(&bids, &curve).unwrap();
    assert_eq!((p, q, m.as_str()), (200.0, 60.0, "g2"));
    for r in [
        clear_greedy(&bids, &curve).unwrap(),
        clear_qc(&bids, &curve).unwrap(),
        clear_mip(&bids, &curve).unwrap(),
    ] {
        assert_eq!(r.price, 200.0);
        assert_eq!(r.quantity, 60.0);
        assert_eq!(r.marginal.as_deref(), Some("g2"));
        assert_eq!([r.sold_of("g1"), r.sold_of("g2"), r.sold_of("g3")], [50.0, 10.0, 0.0]);
    }
    let (_, mip) = clear_mip_detailed(&bids, &curve).unwrap();
    let mip = mip.unwrap();
    assert_eq!(mip.z, vec![0, 1, 0]);
    assert_eq!(mip.objective, 200.0);
}

#[test]
fn golden_welfare_surplus_profits() {
    let (bids, curve) = golden();
    let r = clear_greedy(&bids, &curve).unwrap();
    assert_eq!(
        social_welfare(&r, &bids, &curve).unwrap(),
        -0.5 * 3600.0 + 160.0 * 50.0 + 60.0 * 10.0
    );
    assert_eq!(consumer_surplus(&r, &curve), 1800.0);
    let w: BTreeMap<String, f64> = bids.iter().map(|b| (b.generator_id.clone(), b.offer_price)).collect();
    let p = supplier_profit(&r, &bids, &w).unwrap();
    assert_eq!(p["g1"].profit, 5000.0);
    assert_eq!(p["g2"].profit, -8000.0);
    assert_eq!(p["g3"].profit, -15000.0);
    assert_eq!(p["g2"].class, AllocationClass::Marginal);
}

#[test]
fn everything_above_intercept_clears_nothing() {
    let bids = vec![CapacityBid::new("a", 300.0, 10.0), CapacityBid::new("b", 400.0, 10.0)];
    let curve = DemandCurve::from_slope_intercept(1.0, 260.0).unwrap();
    for r in [clear_greedy(&bids, &curve).unwrap(), clear_mip(&bids, &curve).unwrap()] {
        assert!(!r.cleared);
    }
    let qc = clear_qc(&bids, &curve).unwrap();
    assert_eq!(qc.quantity, 0.0);
    assert_eq!(welfare_value(&qc, &bids, &curve), 0.0);
}

#[test]
fn shortage_clears_on_no_path() {
    let bids = vec![CapacityBid::new("a", 10.0, 5.0), CapacityBid::new("b", 20.0, 5.0)];
    let curve = DemandCurve::from_slope_intercept(1.0, 260.0).unwrap();
    assert!(!clear_greedy(&bids, &curve).unwrap().cleared);
    assert!(!clear_qc(&bids, &curve).unwrap().cleared);
    assert!(!clear_mip(&bids, &curve).unwrap().cleared);
}

#[test]
fn single_peaker_clears_at_requirement() {
    let curve = build_demand_curve(1246.5, 10_000.0, 0.2070, 0.0856, 0.18, 1246.5).unwrap();
    let bids = vec![CapacityBid::new("peaker", 1246.5, curve.q_cap)];
    let r = clear_greedy(&bids, &curve).unwrap();
    assert_relative_eq!(r.quantity, curve.q_cap, max_relative = 1e-12);
    assert_eq!(excess_capacity_ratio(&r, &curve).unwrap().closed_form, 0.0);
}

#[test]
fn zero_offer_ratio_is_f_excess() {
    let curve = build_demand_curve(1000.0, 5000.0, 0.2, 0.1, 0.18, 1000.0).unwrap();
    let bids = vec![CapacityBid::new("free", 0.0, 1e6)];
    let r = clear_qc(&bids, &curve).unwrap();
    let ex = excess_capacity_ratio(&r, &curve).unwrap();
    assert_relative_eq!(ex.ratio, 0.18, max_relative = 1e-12);
    assert_relative_eq!(ex.closed_form, 0.18, max_relative = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clearing_paths_agree((bids, curve) in random_market()) {
        let g = clear_greedy(&bids, &curve).unwrap();
        let q = clear_qc(&bids, &curve).unwrap();
        let m = clear_mip(&bids, &curve).unwrap();
        prop_assert_eq!(g.cleared, q.cleared);
        prop_assert_eq!(g.cleared, m.cleared);
        if g.cleared {
            assert_same(&g, &q);
            assert_same(&g, &m);
            let (p, r, marg) = oracle(&bids, &curve).unwrap();
            prop_assert!((g.price - p).abs() <= 1e-9);
            prop_assert!((g.quantity - r).abs() <= 1e-9 * r.max(1.0));
            prop_assert_eq!(g.marginal.as_deref(), Some(marg.as_str()));
        }
    }

    #[test]
    fn qc_outcome_is_kkt_optimal((bids, curve) in random_market()) {
        let q = clear_qc(&bids, &curve).unwrap();
        prop_assert!(qc_certificate(&q, &bids, &curve).max_residual() <= 1e-9);
    }

    #[test]
    fn excess_capacity_identity(
        (bids, _) in random_market(),
        c_cone in 100.0f64..2000.0,
        d_peak in 500.0f64..20000.0,
        f_excess in 0.05f64..0.5,
    ) {
        let curve = build_demand_curve(c_cone, d_peak, 0.2070, 0.0856, f_excess, c_cone).unwrap();
        let r = clear_greedy(&bids, &curve).unwrap();
        if r.cleared {
            let ex = excess_capacity_ratio(&r, &curve).unwrap();
            prop_assert!(ex.residual() <= 1e-9, "{:?}", ex);
            // Offers at or below c_cone cannot leave capacity short.
            if r.price <= c_cone {
                prop_assert!(ex.ratio >= -1e-12);
            }
        }
    }

    #[test]
    fn welfare_bilinear_form((bids, curve) in random_market()) {
        let r = clear_qc(&bids, &curve).unwrap();
        let direct = welfare_value(&r, &bids, &curve);
        let split = producer_surplus(&r, &bids) + consumer_surplus(&r, &curve);
        let tol = 1e-9 * (1.0 + curve.pi_max * r.quantity);
        prop_assert!((direct - split).abs() <= tol, "{} vs {}", direct, split);
    }

    #[test]
    fn full_offers_dominate_withheld_ones(
        (bids, curve) in random_market(),
        cuts in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 50), 100),
    ) {
        let full = welfare_value(&clear_qc(&bids, &curve).unwrap(), &bids, &curve);
        for cut in &cuts {
            let reduced: Vec<CapacityBid> = bids
                .iter()
                .zip(cut)
                .map(|(b, f)| CapacityBid::new(b.generator_id.clone(), b.offer_price, b.offer_qty * f))
                .collect();
            let r = clear_qc(&reduced, &curve).unwrap();
            // Welfare of the reduced solution, scored against the true offers.
            let w = welfare_value(&r, &bids, &curve);
            prop_assert!(w <= full + 1e-9 * full.abs().max(1.0), "{} > {}", w, full);
        }
    }

    #[test]
    fn supplier_profits_match_closed_forms((bids, curve) in random_market()) {
        let r = clear_greedy(&bids, &curve).unwrap();
        prop_assume!(r.cleared);
        let w: BTreeMap<String, f64> = bids.iter().map(|b| (b.generator_id.clone(), b.offer_price)).collect();
        let profits = supplier_profit(&r, &bids, &w).unwrap();
        for b in &bids {
            let p = &profits[&b.generator_id];
            let expected = match p.class {
                AllocationClass::Inframarginal => (r.price - b.offer_price) * b.offer_qty,
                AllocationClass::Marginal => r.price * (r.sold_of(&b.generator_id) - b.offer_qty),
                AllocationClass::Unallocated => -b.offer_price * b.offer_qty,
            };
            let tol = 1e-6 * expected.abs().max(1.0);
            prop_assert!((p.profit - expected).abs() <= tol);
            prop_assert!((p.realized - (r.price * r.sold_of(&b.generator_id) - b.offer_price * b.offer_qty)).abs() <= tol);
        }
    }

    #[test]
    fn consumer_surplus_falls_as_price_rises((bids, curve) in random_market(), bump in 0.01f64..50.0) {
        let r = clear_qc(&bids, &curve).unwrap();
        let mut dearer = r.clone();
        dearer.price += bump;
        dearer.quantity = curve.quantity_at(dearer.price);
        prop_assume!(r.quantity > 0.0 && dearer.price < curve.pi_max);
        prop_assert!(consumer_surplus(&dearer, &curve) < consumer_surplus(&r, &curve));
    }
}
