//! Random valid games for sweeps and property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{OneSidedGame, TwoSidedGame};

/// Seeded generator used by all samplers.
pub struct GameRng(ChaCha8Rng);

impl GameRng {
    pub fn new(seed: u64) -> GameRng {
        GameRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

struct Court {
    c: f64,
    k: f64,
    w: f64,
}

fn court(rng: &mut GameRng) -> Court {
    let w = rng.uniform(0.0, 0.4);
    let c = rng.uniform(w + 0.05, 0.95);
    let k = rng.uniform(0.05, 0.95) * (1.0 - w);
    Court { c, k, w }
}

fn demands(rng: &mut GameRng) -> (f64, f64) {
    let a1 = rng.uniform(0.3, 0.9);
    let a2 = rng.uniform((1.05 - a1).max(0.2), 0.95);
    (a1, a2)
}

/// Valid one-sided game with moderate rates and priors.
pub fn random_one_sided(rng: &mut GameRng) -> OneSidedGame {
    let (a1, a2) = demands(rng);
    let court = court(rng);
    OneSidedGame {
        a1,
        a2,
        z1: rng.uniform(0.01, 0.6),
        z2: rng.uniform(0.01, 0.6),
        r1: rng.uniform(0.3, 3.0),
        r2: rng.uniform(0.3, 3.0),
        gamma1: rng.uniform(0.1, 4.0),
        c1: court.c,
        k2: court.k,
        w1: court.w,
    }
}

/// Valid two-sided game; `gamma_scale` multiplies both arrival rates.
pub fn random_two_sided(rng: &mut GameRng, gamma_scale: f64) -> TwoSidedGame {
    let (a1, a2) = demands(rng);
    let one = court(rng);
    let two = court(rng);
    TwoSidedGame {
        a1,
        a2,
        z1: rng.uniform(0.01, 0.6),
        z2: rng.uniform(0.01, 0.6),
        r1: rng.uniform(0.3, 3.0),
        r2: rng.uniform(0.3, 3.0),
        gamma1: gamma_scale * rng.uniform(0.1, 4.0),
        gamma2: gamma_scale * rng.uniform(0.1, 4.0),
        c1: one.c,
        c2: two.c,
        k1: two.k,
        k2: one.k,
        w1: one.w,
        w2: two.w,
    }
}
