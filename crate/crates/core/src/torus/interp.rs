//! Trigonometric interpolation of grid data and refined extrema.

use num_complex::Complex64;

use super::{Field, SpectralField, TorusError, TorusGrid};

/// The band-limited interpolant `sum_k c_k e^{i k.x}` of a field. Nyquist
/// coefficients are split evenly between `+n/2` and `-n/2` so the interpolant
/// is real.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: TorusGrid,
    terms: Vec<([i64; 2], Complex64)>,
}

impl TrigInterpolant {
    pub fn new(spec: &SpectralField) -> Self {
        let grid = spec.grid();
        let half = grid.n() as i64 / 2;
        let mut terms = Vec::with_capacity(spec.coeffs().len());
        for (i, &c) in spec.coeffs().iter().enumerate() {
            let k = grid.wavevector(i);
            let mut expanded = vec![(k, c)];
            for axis in 0..grid.d() {
                if k[axis] == -half {
                    expanded = expanded
                        .into_iter()
                        .flat_map(|(k, c)| {
                            let mut flipped = k;
                            flipped[axis] = half;
                            [(k, 0.5 * c), (flipped, 0.5 * c)]
                        })
                        .collect();
                }
            }
            terms.extend(expanded);
        }
        Self { grid, terms }
    }

    pub fn from_field(f: &Field) -> Result<Self, TorusError> {
        Ok(Self::new(&f.transform()?))
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Terms `(k, c_k)` of the interpolant.
    pub fn terms(&self) -> &[([i64; 2], Complex64)] {
        &self.terms
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let theta = k[0] as f64 * x[0] + k[1] as f64 * x[1];
                c.re * theta.cos() - c.im * theta.sin()
            })
            .sum()
    }

    /// Samples on a grid refined by `factor` (zero padding in Fourier space).
    pub fn refine(&self, factor: usize) -> Field {
        let fine = TorusGrid::new(self.grid.d(), self.grid.n() * factor)
            .expect("refined grid stays valid");
        let mut spec = SpectralField::zeros(fine);
        for &(k, c) in &self.terms {
            let idx = spec.index_of(k);
            spec.coeffs_mut()[idx] += c;
        }
        spec.inverse()
    }

    /// 1D restriction along `axis` through the point `x`.
    fn line(&self, axis: usize, x: [f64; 2]) -> Vec<(f64, Complex64)> {
        if self.grid.d() == 1 {
            return self.terms.iter().map(|(k, c)| (k[0] as f64, *c)).collect();
        }
        let other = 1 - axis;
        let mut acc: std::collections::BTreeMap<i64, Complex64> = Default::default();
        for (k, c) in &self.terms {
            let phase = Complex64::from_polar(1.0, k[other] as f64 * x[other]);
            *acc.entry(k[axis]).or_default() += c * phase;
        }
        acc.into_iter().map(|(k, c)| (k as f64, c)).collect()
    }
}

fn eval_line(line: &[(f64, Complex64)], t: f64) -> f64 {
    line.iter()
        .map(|(k, c)| c.re * (k * t).cos() - c.im * (k * t).sin())
        .sum()
}

/// Maximizes `f` on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Extremal values of the trigonometric interpolant and their locations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
    pub argmin: [f64; 2],
    pub argmax: [f64; 2],
}

impl Extrema {
    /// Zero-pads by 4, then polishes the best fine-grid candidates by
    /// golden-section search on the interpolant (coordinate-wise in 2D).
    pub fn of(f: &Field) -> Result<Self, TorusError> {
        let interp = TrigInterpolant::from_field(f)?;
        Ok(Self::of_interpolant(&interp, f))
    }

    pub fn of_interpolant(interp: &TrigInterpolant, f: &Field) -> Self {
        const PAD: usize = 4;
        let fine = interp.refine(PAD);
        let fg = fine.grid();
        let (mut imin, mut imax) = (0, 0);
        for (i, &v) in fine.values().iter().enumerate() {
            if v < fine.values()[imin] {
                imin = i;
            }
            if v > fine.values()[imax] {
                imax = i;
            }
        }
        let spacing = fg.h();
        let (argmax, max) = polish(interp, fg.point(imax), spacing, 1.0);
        let (argmin, neg_min) = polish(interp, fg.point(imin), spacing, -1.0);
        // the polished values can never be worse than the raw samples
        let (smin, smax) = f.sample_range();
        let (fmin, fmax) = fine.sample_range();
        Self {
            min: (-neg_min).min(smin).min(fmin),
            max: max.max(smax).max(fmax),
            argmin,
            argmax,
        }
    }
}

fn polish(interp: &TrigInterpolant, start: [f64; 2], spacing: f64, sign: f64) -> ([f64; 2], f64) {
    const POSITION_TOL: f64 = 1e-10;
    let d = interp.grid().d();
    let mut x = start;
    let mut best = sign * interp.eval(x);
    let sweeps = if d == 1 { 1 } else { 3 };
    for _ in 0..sweeps {
        for axis in 0..d {
            let line = interp.line(axis, x);
            let (t, v) = golden_max(
                |t| sign * eval_line(&line, t),
                x[axis] - spacing,
                x[axis] + spacing,
                POSITION_TOL,
            );
            if v > best {
                best = v;
                x[axis] = t;
            }
        }
    }
    (x, best)
}
