use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{Field, SpectralField, TorusError, TorusGrid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// In-place d-dimensional FFT over a row-major buffer, no normalization.
pub(crate) fn fft_nd(grid: TorusGrid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // rows are contiguous in both layouts
    fft.process_with_scratch(data, &mut scratch);
    if grid.d() == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            fft.process_with_scratch(&mut column, &mut scratch);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }
}

/// `(-1)^(k_1 + k_2)`: the phase from placing node 0 at `-pi`.
fn phase(grid: TorusGrid, index: usize) -> f64 {
    let [a, b] = grid.wavevector(index);
    if (a + b).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn forward(f: &Field) -> Result<SpectralField, TorusError> {
    f.check_finite()?;
    let grid = f.grid();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(grid, &mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    for (i, c) in data.iter_mut().enumerate() {
        *c *= scale * phase(grid, i);
    }
    SpectralField::new(grid, data)
}

pub(crate) fn inverse(spec: &SpectralField) -> Field {
    let grid = spec.grid();
    let mut data: Vec<Complex64> = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * phase(grid, i))
        .collect();
    fft_nd(grid, &mut data, FftDirection::Inverse);
    Field::new(grid, data.into_iter().map(|c| c.re).collect()).expect("length preserved")
}
