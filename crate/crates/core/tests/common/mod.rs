#![allow(dead_code)]

use adrank_sim::{AdvertiserDraw, PositionBias};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHAS: [f64; 6] = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random decreasing bias with `x[0] <= 1`.
pub fn random_bias(rng: &mut impl Rng, slots: usize) -> PositionBias {
    let mut x = Vec::with_capacity(slots);
    let mut cur: f64 = rng.random_range(0.6..=1.0);
    for _ in 0..slots {
        x.push(cur);
        cur *= rng.random_range(0.3..1.0);
    }
    PositionBias::new(x).unwrap()
}

pub fn random_draws(rng: &mut impl Rng, n: usize) -> Vec<AdvertiserDraw> {
    (0..n)
        .map(|_| {
            let value = (rng.random_range(-2.5f64..3.0)).exp();
            let ctr = rng.random_range(0.005..0.6);
            AdvertiserDraw::new(value, ctr).unwrap()
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1e-12)
}
