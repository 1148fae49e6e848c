//! Uniform grids on the torus [-pi, pi]^d, sampled fields and their Fourier
//! coefficients.

mod interp;
mod norms;
mod operators;
mod random;
mod singular;
mod transform;

pub use interp::{Extrema, TrigInterpolant};
pub use norms::{integral, lp_norm, mean, oscillation, sobolev_seminorm};
pub use operators::{
    b_operator, dealias_mask, divergence, elliptic_solve, elliptic_solve_spectral,
    frac_laplacian, frac_laplacian_spectral, gradient, laplacian,
};
pub use random::random_trig;
pub use singular::{OracleOptions, SingularOracle, DEFAULT_LATTICE_TOLERANCE};

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("grid needs d in {{1, 2}} and an even n >= 8 that is a power of two (got d = {d}, n = {n})")]
    InvalidGrid { d: usize, n: usize },
    #[error("field has {got} samples, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at flat index {index}")]
    NonFinite { index: usize },
    #[error("fractional order {0} outside the admissible range")]
    InvalidOrder(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(
        "lattice truncation K = {k_lat} leaves an estimated remainder {estimate:e} above {tolerance:e}"
    )]
    LatticeTruncation {
        k_lat: usize,
        estimate: f64,
        tolerance: f64,
    },
    #[error("field bandwidth {field:.3} exceeds the oracle design bandwidth {design:.3}")]
    Bandwidth { field: f64, design: f64 },
    #[error("node index {index} out of range for {len} grid points")]
    NodeOutOfRange { index: usize, len: usize },
}

/// Uniform tensor grid with `n` points per axis, nodes `x_j = -pi + j h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self, TorusError> {
        if !(d == 1 || d == 2) || n < 8 || !n.is_power_of_two() {
            return Err(TorusError::InvalidGrid { d, n });
        }
        Ok(Self { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lebesgue measure of a grid cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    /// Measure of the torus, `(2 pi)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }

    pub fn node(&self, j: usize) -> f64 {
        -PI + j as f64 * self.h()
    }

    /// Coordinates of the sample with flat (row-major) index `index`.
    pub fn point(&self, index: usize) -> [f64; 2] {
        match self.d {
            1 => [self.node(index), 0.0],
            _ => [self.node(index / self.n), self.node(index % self.n)],
        }
    }

    /// Integer wavenumber stored at FFT position `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavevector of the coefficient with flat index `index` (second entry is
    /// zero when d = 1).
    pub fn wavevector(&self, index: usize) -> [i64; 2] {
        match self.d {
            1 => [self.wavenumber(index), 0],
            _ => [
                self.wavenumber(index / self.n),
                self.wavenumber(index % self.n),
            ],
        }
    }

    /// Squared Euclidean norm of the wavevector at flat index `index`.
    pub fn k_squared(&self, index: usize) -> f64 {
        let [a, b] = self.wavevector(index);
        (a * a + b * b) as f64
    }

    /// True when some component of the wavevector sits on the Nyquist index
    /// `-n/2`, which has no symmetric partner.
    pub fn is_nyquist(&self, index: usize) -> bool {
        let half = -(self.n as i64) / 2;
        let [a, b] = self.wavevector(index);
        a == half || (self.d == 2 && b == half)
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Field {
        let values = (0..self.len()).map(|i| f(self.point(i))).collect();
        Field {
            grid: *self,
            values,
        }
    }
}

/// Real samples on a torus grid, row-major over dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, TorusError> {
        if values.len() != grid.len() {
            return Err(TorusError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<(), TorusError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(TorusError::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Smallest and largest sample values (no interpolation).
    pub fn sample_range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field, TorusError> {
        if self.grid != other.grid {
            return Err(TorusError::GridMismatch);
        }
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Shifts samples by `shift` grid points along each axis (periodically):
    /// the result at node `j` holds the input at node `j - shift`.
    pub fn roll(&self, shift: [usize; 2]) -> Field {
        let n = self.grid.n;
        let mut out = vec![0.0; self.values.len()];
        match self.grid.d {
            1 => {
                for (j, v) in self.values.iter().enumerate() {
                    out[(j + shift[0]) % n] = *v;
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        out[((i + shift[0]) % n) * n + (j + shift[1]) % n] = self.values[i * n + j];
                    }
                }
            }
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    pub fn transform(&self) -> Result<SpectralField, TorusError> {
        transform::forward(self)
    }
}

/// Mean-normalized Fourier coefficients, stored in FFT order along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self, TorusError> {
        if coeffs.len() != grid.len() {
            return Err(TorusError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at wavevector `k` (components taken modulo n).
    pub fn at(&self, k: [i64; 2]) -> Complex64 {
        self.coeffs[self.index_of(k)]
    }

    pub fn index_of(&self, k: [i64; 2]) -> usize {
        let n = self.grid.n as i64;
        let wrap = |v: i64| v.rem_euclid(n) as usize;
        match self.grid.d {
            1 => wrap(k[0]),
            _ => wrap(k[0]) * self.grid.n + wrap(k[1]),
        }
    }

    /// Multiplies each coefficient by `symbol(index)`.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * symbol(i))
                .collect(),
        }
    }

    /// Sum of squared coefficient moduli, equal to the mean of |f|^2.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inverse(&self) -> Field {
        transform::inverse(self)
    }
}
