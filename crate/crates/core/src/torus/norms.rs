use super::{Extrema, Field};

/// Grid quadrature of `f` over the torus, `h^d sum f`.
pub fn integral(f: &Field) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

pub fn mean(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() / f.values().len() as f64
}

/// `L^p` norm by grid quadrature for finite `p >= 1`; for `p = inf` the
/// refined maximum of `|f|`. Non-finite samples give `NaN`.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1, got {p}");
    if p.is_infinite() {
        return match Extrema::of(f) {
            Ok(e) => e.max.abs().max(e.min.abs()),
            Err(_) => f64::NAN,
        };
    }
    let h = f.grid().cell_volume();
    let sum: f64 = if p == 1.0 {
        f.values().iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        f.values().iter().map(|v| v * v).sum()
    } else {
        f.values().iter().map(|v| v.abs().powf(p)).sum()
    };
    (h * sum).powf(1.0 / p)
}

/// `max f - min f` using refined extrema.
pub fn oscillation(f: &Field) -> f64 {
    match Extrema::of(f) {
        Ok(e) => e.max - e.min,
        Err(_) => f64::NAN,
    }
}

/// Homogeneous Sobolev seminorm `||Lambda^s f||_{L^2}` via Parseval.
pub fn sobolev_seminorm(f: &Field, s: f64) -> f64 {
    let Ok(spec) = f.transform() else {
        return f64::NAN;
    };
    let grid = f.grid();
    let sum: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k2 = grid.k_squared(i);
            if k2 == 0.0 {
                0.0
            } else {
                k2.powf(s) * c.norm_sqr()
            }
        })
        .sum();
    (grid.volume() * sum).sqrt()
}
