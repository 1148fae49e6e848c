//! Constants tied to the fractional Laplacian: its normalization, the
//! Poincare constant, the pointwise dichotomy constants and the entropy
//! constant.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use super::ConstantsError;
use crate::quadrature::adaptive;

/// Absolute tolerance for every constant integral.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

fn check_order(d: usize, alpha: f64) -> Result<(), ConstantsError> {
    if !(d == 1 || d == 2) {
        return Err(ConstantsError::InvalidParams(format!("d = {d} (expected 1 or 2)")));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(ConstantsError::InvalidParams(format!("alpha = {alpha} outside (0, 2)")));
    }
    Ok(())
}

/// `int_0^inf 4 sin^2(x/2) x^{-1-alpha} dx`.
fn radial_integral(alpha: f64) -> Result<f64, ConstantsError> {
    // [0, 1]: termwise from 2 - 2cos x = sum 2(-1)^{j+1} x^{2j} / (2j)!
    let mut head = 0.0;
    let mut fact = 1.0;
    for j in 1..40 {
        let jf = j as f64;
        fact *= (2.0 * jf - 1.0) * (2.0 * jf);
        let term = 2.0 / (fact * (2.0 * jf - alpha));
        head += if j % 2 == 1 { term } else { -term };
        if term < 1e-20 {
            break;
        }
    }
    // [1, X]: oscillatory but smooth
    let x_end = 2.0 * PI * 64.0;
    let mid = adaptive(
        |x| {
            let s = (0.5 * x).sin();
            4.0 * s * s * x.powf(-1.0 - alpha)
        },
        1.0,
        x_end,
        0.1 * QUADRATURE_TOLERANCE,
    )?;
    // [X, inf): 2 x^{-1-alpha} integrates exactly; the cosine part by its
    // asymptotic expansion
    let tail = 2.0 * x_end.powf(-alpha) / alpha - 2.0 * cosine_tail(1.0 + alpha, x_end, 4);
    Ok(head + mid.value + tail)
}

/// `int_X^inf cos(x) x^{-m} dx` by repeated integration by parts.
fn cosine_tail(m: f64, x: f64, depth: usize) -> f64 {
    let (s, c) = x.sin_cos();
    let leading = -s * x.powf(-m) + m * c * x.powf(-m - 1.0);
    if depth == 0 {
        leading
    } else {
        leading - m * (m + 1.0) * cosine_tail(m + 2.0, x, depth - 1)
    }
}

fn cache() -> &'static RwLock<HashMap<(usize, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Normalization `C_{d,alpha} = 2 / int_{R^d} 4 sin^2(x_1/2) |x|^{-d-alpha} dx`.
///
/// The radial integral in `x_1` factors out; in 2D the remaining angular
/// factor is `int_0^{2pi} |cos theta|^alpha dtheta`.
pub fn compute_c(d: usize, alpha: f64) -> Result<f64, ConstantsError> {
    check_order(d, alpha)?;
    let key = (d, alpha.to_bits());
    if let Some(&c) = cache().read().expect("cache lock").get(&key) {
        return Ok(c);
    }
    let radial = radial_integral(alpha)?;
    let c = if d == 1 {
        1.0 / radial
    } else {
        let angular = 4.0
            * adaptive(
                |t| t.cos().max(0.0).powf(alpha),
                0.0,
                0.5 * PI,
                0.1 * QUADRATURE_TOLERANCE,
            )?
            .value;
        2.0 / (radial * angular)
    };
    cache().write().expect("cache lock").insert(key, c);
    Ok(c)
}

/// Poincare constant `2 C / ((2 pi)^alpha d^{(d+alpha)/2})`.
pub fn compute_p(d: usize, alpha: f64) -> Result<f64, ConstantsError> {
    let c = compute_c(d, alpha)?;
    Ok(2.0 * c / ((2.0 * PI).powf(alpha) * (d as f64).powf(0.5 * (d as f64 + alpha))))
}

/// The improved Poincare constant available when `d = alpha = 1`.
pub fn sharp_p11() -> f64 {
    1.0
}

/// `int_0^inf z^{d/2} e^{-z} dz = Gamma(d/2 + 1)`.
fn gamma_half_d_plus_one(d: usize) -> f64 {
    match d {
        1 => 0.5 * PI.sqrt(),
        2 => 1.0,
        _ => unreachable!("d checked by caller"),
    }
}

pub fn compute_m1(d: usize, p: f64, alpha: f64) -> Result<f64, ConstantsError> {
    check_order(d, alpha)?;
    check_p(p)?;
    let inner = PI.powf(0.5 * d as f64) / 2f64.powf(1.0 + p) * gamma_half_d_plus_one(d);
    Ok(inner.powf(1.0 / p))
}

pub fn compute_m2(d: usize, p: f64, alpha: f64) -> Result<f64, ConstantsError> {
    check_order(d, alpha)?;
    check_p(p)?;
    let df = d as f64;
    let c = compute_c(d, alpha)?;
    let base = PI.powf(0.5 * df) / gamma_half_d_plus_one(d);
    Ok(c * base.powf(1.0 + alpha / df) / (4.0 * 2f64.powf((p + 1.0) * alpha / df)))
}

/// Dichotomy constants available for `(d, p, alpha) = (1, 1, 1)`.
pub fn sharp_m_11() -> (f64, f64) {
    (2.0 / PI, 1.0 / (4.0 * PI))
}

fn check_p(p: f64) -> Result<(), ConstantsError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(ConstantsError::InvalidParams(format!("p = {p} must be >= 1")))
    }
}

/// Largest admissible `delta` (exclusive) for the entropy estimate at `s`.
pub fn entropy_delta_bound(alpha: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.5 * alpha
    } else {
        alpha / (2.0 + 2.0 * s)
    }
}

/// `sup_x int_T |x - y|^{beta - d} dy`, attained at the centre of the cell.
fn centred_potential(d: usize, beta: f64) -> Result<f64, ConstantsError> {
    if d == 1 {
        return Ok(2.0 * PI.powf(beta) / beta);
    }
    // square in polar coordinates, eight congruent triangles
    let v = adaptive(
        |t| (PI / t.cos()).powf(beta) / beta,
        0.0,
        0.25 * PI,
        0.01 * QUADRATURE_TOLERANCE,
    )?;
    Ok(8.0 * v.value)
}

/// Entropy constant `S(alpha, s, delta, d)`; `s = 0` selects the logarithmic
/// variant.
pub fn entropy_s(alpha: f64, s: f64, delta: f64, d: usize) -> Result<f64, ConstantsError> {
    check_order(d, alpha)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(ConstantsError::InvalidParams(format!("s = {s} outside [0, 1]")));
    }
    let bound = entropy_delta_bound(alpha, s);
    if !(delta > 0.0 && delta < bound) {
        return Err(ConstantsError::Inadmissible(format!(
            "delta = {delta} outside (0, {bound})"
        )));
    }
    let c = compute_c(d, alpha)?;
    let (prefactor, beta) = if s == 0.0 {
        (2.0 / c, 2.0 * delta)
    } else {
        (2f64.powf(2.0 * s + 1.0) / (c * s), 2.0 * (1.0 + s) * delta)
    };
    Ok(prefactor * centred_potential(d, beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    /// Closed form of the normalization via Gamma functions.
    fn c_closed(d: usize, alpha: f64) -> f64 {
        let df = d as f64;
        alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (df + alpha))
            / (PI.powf(0.5 * df) * gamma(1.0 - 0.5 * alpha))
    }

    #[test]
    fn c_matches_analytic_values() {
        assert!((compute_c(1, 1.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!((compute_c(2, 1.0).unwrap() - 0.5 / PI).abs() < 1e-12);
        for &alpha in &[0.1, 0.5, 1.3, 1.9] {
            for d in [1, 2] {
                let got = compute_c(d, alpha).unwrap();
                let want = c_closed(d, alpha);
                assert!((got - want).abs() < 1e-10 * want.max(1.0), "d={d} a={alpha}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn c_vanishes_as_alpha_goes_to_zero() {
        let small = compute_c(1, 1e-3).unwrap();
        let smaller = compute_c(1, 1e-4).unwrap();
        assert!(smaller < small && small < 1e-3);
    }

    #[test]
    fn monte_carlo_agrees_in_two_dimensions() {
        // importance sampling of the radial integral with density on (0, inf)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let alpha = 1.0;
        let samples = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            // theta uniform, r from density (1/(1+r))^2
            let theta: f64 = rng.gen_range(0.0..2.0 * PI);
            let u: f64 = rng.gen_range(0.0..1.0);
            let r = u / (1.0 - u);
            let pdf = 1.0 / ((1.0 + r) * (1.0 + r) * 2.0 * PI);
            let x1 = r * theta.cos();
            let val = 4.0 * (0.5 * x1).sin().powi(2) * r.powf(-1.0 - alpha) / pdf;
            sum += val;
            sum_sq += val * val;
        }
        let n = samples as f64;
        let mean = sum / n;
        let se = ((sum_sq / n - mean * mean) / n).sqrt();
        let c_mc = 2.0 / mean;
        let c = compute_c(2, alpha).unwrap();
        let c_se = 2.0 * se / (mean * mean);
        assert!((c - c_mc).abs() < 3.0 * c_se + 1e-12, "{c} vs {c_mc} +- {c_se}");
    }

    #[test]
    fn poincare_examples() {
        let p = compute_p(1, 1.0).unwrap();
        assert!((p - 1.0 / (PI * PI)).abs() < 1e-12);
        assert_eq!(sharp_p11(), 1.0);
        // P < C exactly when (2 pi)^alpha d^{(d+alpha)/2} > 2
        for d in [1, 2] {
            for &a in &[0.2, 0.3, 0.5, 1.0, 1.8] {
                let factor = (2.0 * PI).powf(a) * (d as f64).powf(0.5 * (d as f64 + a));
                let smaller = compute_p(d, a).unwrap() < compute_c(d, a).unwrap();
                assert_eq!(smaller, factor > 2.0, "d={d} a={a}");
            }
        }
        assert!(compute_p(1, 0.3).unwrap() > compute_c(1, 0.3).unwrap());
    }

    #[test]
    #[allow(clippy::approx_constant)] // decimal digits as the oracle
    fn dichotomy_constants() {
        assert!((compute_m1(1, 1.0, 1.0).unwrap() - PI / 8.0).abs() < 1e-14);
        assert!((compute_m1(2, 2.0, 1.0).unwrap() - (PI / 8.0).sqrt()).abs() < 1e-14);
        let (m1, m2) = sharp_m_11();
        assert!((m1 - 0.636_619_772_367_581_4).abs() < 1e-15);
        assert!((m2 - 0.079_577_471_545_947_67).abs() < 1e-15);
        // independent closed form with statrs Gamma
        let (d, p, a) = (2usize, 1.7, 0.6);
        let g = gamma(0.5 * d as f64 + 1.0);
        let m2 = c_closed(d, a) * (PI / g).powf(1.0 + a / 2.0) / (4.0 * 2f64.powf((p + 1.0) * a / 2.0));
        assert!((compute_m2(d, p, a).unwrap() - m2).abs() < 1e-10 * m2);
    }

    #[test]
    fn entropy_constant_examples() {
        let (a, s, delta) = (1.0, 1.0, 0.1);
        let beta = 2.0 * (1.0 + s) * delta;
        let c = compute_c(1, a).unwrap();
        let expect = 2f64.powf(3.0) / (c * s) * 2.0 * PI.powf(beta) / beta;
        assert!((entropy_s(a, s, delta, 1).unwrap() - expect).abs() < 1e-10 * expect);
        // s = 0 branch
        let c2 = compute_c(2, a).unwrap();
        let direct = {
            // disk of radius pi in closed form, the four corners by a midpoint sum
            let beta = 2.0 * delta;
            let m = 1000;
            let h = 2.0 * PI / m as f64;
            let mut corners = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let y1 = -PI + (i as f64 + 0.5) * h;
                    let y2 = -PI + (j as f64 + 0.5) * h;
                    let q = y1 * y1 + y2 * y2;
                    if q > PI * PI {
                        corners += q.powf(0.5 * beta - 1.0);
                    }
                }
            }
            2.0 * PI * PI.powf(beta) / beta + corners * h * h
        };
        let got = entropy_s(a, 0.0, delta, 2).unwrap();
        assert!((got - 2.0 / c2 * direct).abs() < 2e-3 * got);
        assert!(entropy_s(a, s, 0.3, 1).is_err());
        assert!(entropy_s(a, s, 1e-4, 1).unwrap() > entropy_s(a, s, 1e-2, 1).unwrap());
    }
}
