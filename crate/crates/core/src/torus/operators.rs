//! Fourier multipliers: fractional Laplacian, the chemotactic operator
//! B(u) = grad (Laplacian - 1)^{-1} u and the elliptic solve for v.

use num_complex::Complex64;

use super::{Field, SpectralField, TorusError, TorusGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multiplies by `|k|^alpha` (Euclidean norm of the integer wavevector).
pub fn frac_laplacian_spectral(f: &SpectralField, alpha: f64) -> Result<SpectralField, TorusError> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(TorusError::InvalidOrder(alpha));
    }
    let grid = f.grid();
    Ok(f.apply_symbol(|i| Complex64::new(grid.k_squared(i).powf(0.5 * alpha), 0.0)))
}

pub fn frac_laplacian(f: &Field, alpha: f64) -> Result<Field, TorusError> {
    Ok(frac_laplacian_spectral(&f.transform()?, alpha)?.inverse())
}

/// Spectral Laplacian, symbol `-|k|^2`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    f.apply_symbol(|i| Complex64::new(-grid.k_squared(i), 0.0))
}

/// Component `axis` of the gradient. The Nyquist mode of an odd multiplier is
/// dropped so real fields stay real.
fn partial(f: &SpectralField, axis: usize, scale: impl Fn(usize) -> f64) -> SpectralField {
    let grid = f.grid();
    let half = -(grid.n() as i64) / 2;
    f.apply_symbol(|i| {
        let k = grid.wavevector(i)[axis];
        if k == half {
            ZERO
        } else {
            Complex64::new(0.0, k as f64 * scale(i))
        }
    })
}

pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    (0..f.grid().d()).map(|axis| partial(f, axis, |_| 1.0)).collect()
}

/// Divergence of a vector field given component-wise in Fourier space.
pub fn divergence(components: &[SpectralField]) -> Result<SpectralField, TorusError> {
    let grid = components.first().ok_or(TorusError::GridMismatch)?.grid();
    if components.len() != grid.d() || components.iter().any(|c| c.grid() != grid) {
        return Err(TorusError::GridMismatch);
    }
    let mut out = SpectralField::zeros(grid);
    for (axis, comp) in components.iter().enumerate() {
        let d = partial(comp, axis, |_| 1.0);
        for (o, c) in out.coeffs_mut().iter_mut().zip(d.coeffs()) {
            *o += c;
        }
    }
    Ok(out)
}

/// B(u) component-wise: `i k_j / (-|k|^2 - 1) * u_hat(k)`.
pub fn b_operator(f: &SpectralField) -> Vec<SpectralField> {
    let grid = f.grid();
    (0..grid.d())
        .map(|axis| partial(f, axis, |i| -1.0 / (grid.k_squared(i) + 1.0)))
        .collect()
}

/// Solves `Laplacian v - v = u` mode by mode.
pub fn elliptic_solve_spectral(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    u.apply_symbol(|i| Complex64::new(-1.0 / (grid.k_squared(i) + 1.0), 0.0))
}

pub fn elliptic_solve(u: &Field) -> Result<Field, TorusError> {
    Ok(elliptic_solve_spectral(&u.transform()?).inverse())
}

/// Two-thirds rule: keeps modes with every `|k_j| <= (n - 1) / 3`.
pub fn dealias_mask(grid: TorusGrid) -> Vec<bool> {
    let cutoff = ((grid.n() - 1) / 3) as i64;
    (0..grid.len())
        .map(|i| {
            let [a, b] = grid.wavevector(i);
            a.abs() <= cutoff && b.abs() <= cutoff
        })
        .collect()
}
