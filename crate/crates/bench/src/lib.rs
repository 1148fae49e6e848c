//! Benchmark fixtures shared by the criterion targets.

use fks_core::constants::ModelParams;
use fks_core::dynamics::SolverConfig;
use fks_core::torus::random_trig;
use fks_core::{Field, TorusGrid};

/// Seeded band-limited field on an `n`-point grid, modes up to `n / 4`.
pub fn field(d: usize, n: usize, seed: u64) -> Field {
    let grid = TorusGrid::new(d, n).expect("benchmark grid");
    random_trig(grid, (n / 4) as i64, 8, 1.0, seed)
}

/// Positive datum `1 + 0.3 cos x_1` with the demo parameters.
pub fn solver_case(d: usize, n: usize) -> (Field, SolverConfig) {
    let grid = TorusGrid::new(d, n).expect("benchmark grid");
    let params = ModelParams::new(d, 1.0, 1.0, 0.6, 0.1).expect("demo parameters");
    let mut cfg = SolverConfig::new(grid, params, 1.0);
    cfg.dt = Some(1e-3);
    (grid.sample(|x| 1.0 + 0.3 * x[0].cos()), cfg)
}
