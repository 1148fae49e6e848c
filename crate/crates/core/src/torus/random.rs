use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Field, TorusGrid};

/// Seeded trigonometric polynomial `sum_j a_j cos(k_j.x + phi_j)` with
/// `terms` modes drawn from `|k_i| <= kmax` and `|a_j| <= amplitude`.
pub fn random_trig(grid: TorusGrid, kmax: i64, terms: usize, amplitude: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 2], f64, f64)> = (0..terms)
        .map(|_| {
            let k0 = rng.gen_range(-kmax..=kmax) as f64;
            let k1 = if grid.d() == 2 { rng.gen_range(-kmax..=kmax) as f64 } else { 0.0 };
            let a = amplitude * rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            ([k0, k1], a, phase)
        })
        .collect();
    grid.sample(|x| {
        modes
            .iter()
            .map(|(k, a, ph)| a * (k[0] * x[0] + k[1] * x[1] + ph).cos())
            .sum()
    })
}
