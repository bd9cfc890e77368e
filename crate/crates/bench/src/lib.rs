//! Benchmark inputs.

use capmkt::auction::CapacityBid;
use capmkt::model::{build_demand_curve, DemandCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` truthful offers with distinct prices and a demand curve that clears
/// somewhere inside the supply stack.
pub fn capacity_market(n: usize, seed: u64) -> (Vec<CapacityBid>, DemandCurve) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_cone = 1246.5;
    let bids: Vec<CapacityBid> = (0..n)
        .map(|k| {
            let price = c_cone * (k as f64 + rng.gen_range(0.0..0.5)) / n as f64;
            CapacityBid::new(format!("g{k:03}"), price, rng.gen_range(20.0..800.0))
        })
        .collect();
    let total: f64 = bids.iter().map(|b| b.offer_qty).sum();
    let d_peak = 0.8 * total / ((1.0 - 0.0856) * (1.0 + 0.2070));
    let curve = build_demand_curve(c_cone, d_peak, 0.2070, 0.0856, 0.18, c_cone).expect("valid curve");
    (bids, curve)
}

/// Leader id for [`capacity_market`]: a unit in the middle of the stack.
pub fn middle_leader(n: usize) -> String {
    format!("g{:03}", n / 2)
}
