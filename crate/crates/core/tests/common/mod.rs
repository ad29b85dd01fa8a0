#![allow(dead_code)]

use bessbid_core::scenario::{BessParams, BessPriceBids, GeneratorParams, IntervalData, MarketMask, Scenario, SCHEMA};
use rand::{Rng, SeedableRng};

pub fn interval(index: usize, load: f64, alpha_s: &[f64]) -> IntervalData {
    IntervalData {
        index,
        delta_t: 1.0,
        load,
        reserve_req: 0.0,
        regcap_req: 0.0,
        mileage_req: 0.0,
        alpha_s: alpha_s.to_vec(),
        alpha_rs: alpha_s.iter().map(|a| 0.15 * a).collect(),
        alpha_rgc: alpha_s.iter().map(|a| 0.4 * a).collect(),
        alpha_rgm: alpha_s.iter().map(|a| 0.07 * a).collect(),
        beta: BessPriceBids::default(),
    }
}

pub fn scenario(generators: Vec<GeneratorParams>, bess: BessParams, intervals: Vec<IntervalData>) -> Scenario {
    Scenario {
        schema: SCHEMA.into(),
        name: "test".into(),
        terminal_soc_equals_init: false,
        market_mask: MarketMask::ALL,
        bess,
        generators,
        intervals,
    }
}

/// Random feasible market with `ng` generators and `nt` intervals.
pub fn random_scenario(seed: u64, ng: usize, nt: usize) -> Scenario {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gens: Vec<GeneratorParams> = (0..ng)
        .map(|j| {
            let p_max = rng.gen_range(50.0..300.0f64).round();
            let mut g = GeneratorParams::new(
                format!("G{}", j + 1),
                rng.gen_range(5.0..50.0f64).round(),
                p_max,
                (0.2 * p_max).round(),
                (0.1 * p_max).round(),
            );
            g.mileage_multiplier = rng.gen_range(1.0..12.0f64).round();
            if rng.gen_bool(0.3) {
                g.p_min = (0.1 * p_max).round();
            }
            g
        })
        .collect();
    let cap: f64 = gens.iter().map(|g| g.p_max).sum();
    let min_gen: f64 = gens.iter().map(|g| g.p_min).sum();
    let rs_cap: f64 = gens.iter().map(|g| g.reserve_ramp).sum();
    let rg_cap: f64 = gens.iter().map(|g| g.regulation_ramp).sum();
    let intervals = (0..nt)
        .map(|t| {
            let load = rng.gen_range(min_gen.max(1.0)..(0.8 * cap).max(min_gen + 2.0)).round();
            let alpha_s: Vec<f64> = gens.iter().map(|g| g.base_price_bid * rng.gen_range(0.5..1.5)).collect();
            let mut iv = interval(t + 1, load, &alpha_s);
            iv.reserve_req = (rng.gen_range(0.0..0.12) * load).min(0.9 * rs_cap).min(0.1 * cap);
            iv.regcap_req = (rng.gen_range(0.0..0.05) * load).min(0.45 * rg_cap).min(0.05 * cap);
            iv.mileage_req = iv.regcap_req * rng.gen_range(1.0..2.0);
            iv.beta.demand = 100.0;
            iv
        })
        .collect();
    let mut bess = BessParams::new(rng.gen_range(10.0..60.0f64).round(), rng.gen_range(2.0..20.0f64).round());
    bess.mileage_multiplier = 10.0;
    scenario(gens, bess, intervals)
}
