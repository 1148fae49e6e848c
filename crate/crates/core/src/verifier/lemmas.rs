//! Certificates for the functional inequalities on sampled positive fields.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Certificate, ClaimId, Tally};
use crate::constants::{
    compute_m1, compute_m2, compute_p, entropy_delta_bound, entropy_s, sharp_m_11, sharp_p11,
    ConstantsError,
};
use crate::quadrature::GaussLegendre;
use crate::torus::{
    frac_laplacian, gradient, integral, lp_norm, random_trig, Extrema, Field, TorusGrid,
    TrigInterpolant,
};

/// Largest grid for the `O(N^2)` seminorm sums.
const MAX_SEMINORM_N: [usize; 2] = [512, 64];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSettings {
    pub alpha: f64,
    pub s: f64,
    pub delta: f64,
}

/// `count` seeded fields `w^2 + 0.1` with `w` a random trigonometric
/// polynomial of degree at most 4.
pub fn positive_sample_fields(d: usize, n: usize, count: usize, seed: u64) -> Vec<Field> {
    let grid = TorusGrid::new(d, n).expect("sample grid");
    (0..count as u64)
        .map(|i| random_trig(grid, 4, 6, 1.0, seed.wrapping_add(i)).map(|w| w * w + 0.1))
        .collect()
}

/// `int_T int_T |u(x) - u(y)|^q / |x - y|^{d + a q}` with the periodic
/// distance. Off-diagonal cells use the midpoint rule; the diagonal cell uses
/// `u(y) - u(x) ~ grad u(x).(y - x)`.
fn gagliardo(u: &Field, grad: &[Field], a: f64, q: f64, diag: &DiagonalCell) -> f64 {
    let g = u.grid();
    let (d, n) = (g.d(), g.n());
    let h = g.h();
    let power = d as f64 + a * q;
    let wrap = |j: usize| {
        let j = j.min(n - j) as f64;
        j * h
    };
    let weights: Vec<f64> = (0..g.len())
        .map(|off| {
            let (i, j) = (off % n, off / n);
            let r2 = wrap(i).powi(2) + if d == 2 { wrap(j).powi(2) } else { 0.0 };
            if off == 0 {
                0.0
            } else {
                g.cell_volume() / r2.powf(0.5 * power)
            }
        })
        .collect();
    let vals = u.values();
    let sum: f64 = (0..g.len())
        .into_par_iter()
        .map(|x| {
            let (xi, xj) = (x % n, x / n);
            let mut acc = 0.0;
            for (off, w) in weights.iter().enumerate().skip(1) {
                let (oi, oj) = (off % n, off / n);
                let y = (xi + oi) % n + if d == 2 { ((xj + oj) % n) * n } else { 0 };
                acc += (vals[x] - vals[y]).abs().powf(q) * w;
            }
            let gx = [grad[0].values()[x], grad.get(1).map_or(0.0, |f| f.values()[x])];
            acc + diag.eval(gx, q, a)
        })
        .sum();
    sum * g.cell_volume()
}

/// `int_cell |g.z|^q |z|^{-d - a q} dz` over the grid cell centred at 0.
struct DiagonalCell {
    d: usize,
    half: f64,
    angles: Vec<f64>,
    weights: Vec<f64>,
}

impl DiagonalCell {
    fn new(grid: TorusGrid) -> Self {
        let rule = GaussLegendre::new(16);
        let breaks: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25 * PI).collect();
        let (angles, weights) = rule.composite(&breaks);
        Self { d: grid.d(), half: 0.5 * grid.h(), angles, weights }
    }

    fn eval(&self, g: [f64; 2], q: f64, a: f64) -> f64 {
        let e = q * (1.0 - a);
        if self.d == 1 {
            return g[0].abs().powf(q) * 2.0 * self.half.powf(e) / e;
        }
        let norm = g[0].hypot(g[1]);
        if norm == 0.0 {
            return 0.0;
        }
        let phi = g[1].atan2(g[0]);
        let radial: f64 = self
            .angles
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| {
                let r = self.half / t.cos().abs().max(t.sin().abs());
                w * (t - phi).cos().abs().powf(q) * r.powf(e) / e
            })
            .sum();
        norm.powf(q) * radial
    }
}

fn pointwise(u: &Field, v: &Field, f: impl Fn(f64, f64) -> f64) -> f64 {
    integral(&u.zip_with(v, f).expect("same grid"))
}

/// Lemmas on functional inequalities over `fields`, one certificate per
/// inequality. The dichotomy is checked with the sharp constants at
/// `d = alpha = 1` and with the general ones at `p = 1 + s`.
pub fn certify_lemmas_static(
    fields: &[Field],
    settings: LemmaSettings,
) -> Result<Vec<Certificate>, ConstantsError> {
    let LemmaSettings { alpha, s, delta } = settings;
    let Some(first) = fields.first() else {
        return Err(ConstantsError::InvalidParams("no sample fields".into()));
    };
    let grid = first.grid();
    let d = grid.d();
    if fields.iter().any(|f| f.grid() != grid) {
        return Err(ConstantsError::InvalidParams("sample fields on different grids".into()));
    }
    if s.is_nan() || s <= 0.0 {
        return Err(ConstantsError::InvalidParams(format!("s = {s} must be positive")));
    }
    if !(delta > 0.0 && delta < entropy_delta_bound(alpha, s)) {
        return Err(ConstantsError::Inadmissible(format!(
            "delta = {delta} outside (0, {})",
            entropy_delta_bound(alpha, s)
        )));
    }
    let sharp = d == 1 && alpha == 1.0;
    let vol = grid.volume();
    let p_used = if sharp { sharp_p11() } else { compute_p(d, alpha)? };
    let s_b = (s <= 1.0).then(|| entropy_s(alpha, s, delta, d)).transpose()?;
    let s_c = entropy_s(alpha, 0.0, delta, d)?;
    let p_gen = 1.0 + s;
    let (m1, m2) = (compute_m1(d, p_gen, alpha)?, compute_m2(d, p_gen, alpha)?);
    let diag = DiagonalCell::new(grid);

    let mut a1a = Tally::new(ClaimId::LemA1Entropy, Some("a"));
    let mut a1b = Tally::new(ClaimId::LemA1Entropy, Some("b"));
    let mut a1c = Tally::new(ClaimId::LemA1Entropy, Some("c"));
    let mut a2 = Tally::new(ClaimId::LemA2Poincare, None);
    let mut a3s = Tally::new(ClaimId::LemA3Dichotomy, Some("sharp"));
    let mut a3g = Tally::new(ClaimId::LemA3Dichotomy, Some("general"));
    let mut exhaustive = [0usize; 2];

    if grid.n() > MAX_SEMINORM_N[d - 1] {
        for t in [&mut a1b, &mut a1c] {
            t.inconclusive(format!("seminorm sums limited to n <= {}", MAX_SEMINORM_N[d - 1]));
        }
    }
    if s > 1.0 {
        a1b.outside(format!("s = {s} > 1"));
    }
    let positive = fields.iter().all(|f| f.sample_range().0 > 0.0);
    if !positive {
        for t in [&mut a1a, &mut a1b, &mut a1c, &mut a2] {
            t.outside("a sample field is not positive");
        }
    }

    for (idx, u) in fields.iter().enumerate() {
        let at = idx as f64;
        let lu = frac_laplacian(u, alpha).map_err(|e| ConstantsError::InvalidParams(e.to_string()))?;
        let us = u.map(|x| x.max(0.0).powf(s));
        let dissipation = pointwise(&lu, &us, |a, b| a * b);

        let w = u.map(|x| x.max(0.0).powf(0.5 * (s + 1.0)));
        let lw = frac_laplacian(&w, 0.5 * alpha)
            .map_err(|e| ConstantsError::InvalidParams(e.to_string()))?;
        let energy = integral(&lw.map(|x| x * x));
        a1a.check(at, dissipation, 4.0 * s / (1.0 + s).powi(2) * energy);

        let norm_q = lp_norm(u, 1.0 + s).powf(1.0 + s);
        let small_n = grid.n() <= MAX_SEMINORM_N[d - 1];
        if small_n {
            let spec = u.transform().map_err(|e| ConstantsError::InvalidParams(e.to_string()))?;
            let grad: Vec<Field> = gradient(&spec).iter().map(|g| g.inverse()).collect();
            if let Some(sb) = s_b {
                let q = 1.0 + s;
                let semi = gagliardo(u, &grad, alpha / (2.0 + 2.0 * s) - delta, q, &diag);
                a1b.check(at, sb * norm_q * dissipation, semi * semi);
            }
            let semi = gagliardo(u, &grad, 0.5 * alpha - delta, 1.0, &diag);
            let log_dissipation = pointwise(&lu, u, |a, b| a * b.max(f64::MIN_POSITIVE).ln());
            a1c.check(at, s_c * lp_norm(u, 1.0) * log_dissipation, semi * semi);
        }

        let mass = integral(u);
        let mass_s = integral(&us);
        a2.check(at, dissipation + p_used / vol * mass * mass_s, p_used * norm_q);

        let ext = Extrema::of(u).map_err(|e| ConstantsError::InvalidParams(e.to_string()))?;
        let lu_interp = TrigInterpolant::from_field(&lu)
            .map_err(|e| ConstantsError::InvalidParams(e.to_string()))?;
        let lu_max = lu_interp.eval(ext.argmax);
        let hmax = ext.max;
        let mut dichotomy = |t: &mut Tally, slot: usize, p: f64, m1: f64, m2: f64| {
            let norm = lp_norm(u, p);
            let e = alpha * p / d as f64;
            let i = (m1 * norm, hmax);
            let ii = (lu_max, m2 * hmax.powf(1.0 + e) / norm.powf(e));
            let ok = |(hi, lo): (f64, f64)| t.tolerances().accepts(hi, lo);
            if !ok(i) && !ok(ii) {
                exhaustive[slot] += 1;
            }
            // the branch with the larger margin decides
            let (hi, lo) = if i.0 - i.1 >= ii.0 - ii.1 { i } else { ii };
            t.check(at, hi, lo);
        };
        if sharp {
            let (s1, s2) = sharp_m_11();
            dichotomy(&mut a3s, 0, 1.0, s1, s2);
        }
        dichotomy(&mut a3g, 1, p_gen, m1, m2);
    }

    for (t, count) in [(&mut a3s, exhaustive[0]), (&mut a3g, exhaustive[1])] {
        t.note(format!("exhaustiveness violations: {count}"));
    }
    a2.note(format!("Poincare constant {p_used}"));
    if let Some(sb) = s_b {
        a1b.note(format!("S = {sb}"));
    }
    a1c.note(format!("S = {s_c}"));
    a3g.note(format!("p = {p_gen}, M1 = {m1}, M2 = {m2}"));
    let mut out = vec![a1a.finish(), a1b.finish(), a1c.finish(), a2.finish()];
    if sharp {
        out.push(a3s.finish());
    }
    out.push(a3g.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::Status;

    fn settings() -> LemmaSettings {
        LemmaSettings { alpha: 1.0, s: 1.0, delta: 0.1 }
    }

    #[test]
    fn constant_field_saturates_poincare() {
        let g = TorusGrid::new(1, 32).unwrap();
        let certs = certify_lemmas_static(&[Field::constant(g, 2.0)], settings()).unwrap();
        let a2 = certs.iter().find(|c| c.claim_id == ClaimId::LemA2Poincare).unwrap();
        assert_eq!(a2.status, Status::Pass);
        assert!(a2.worst_margin.abs() < 1e-12, "{}", a2.worst_margin);
    }

    #[test]
    fn cosine_bump_takes_first_branch() {
        // h = 1 + cos x: M1 ||h||_1 = (2/pi) 2 pi = 4 >= 2 = h(x*)
        let g = TorusGrid::new(1, 64).unwrap();
        let h = g.sample(|x| 1.0 + x[0].cos() + 1e-3);
        let certs = certify_lemmas_static(&[h], settings()).unwrap();
        let c = certs.iter().find(|c| c.label() == "LEM_A3_DICHOTOMY[sharp]").unwrap();
        assert_eq!(c.status, Status::Pass);
        assert!((c.worst_margin - (4.0 + 2e-3 * 2.0 - 2.001)).abs() < 1e-6, "{}", c.worst_margin);
    }

    #[test]
    fn seminorm_converges_under_refinement() {
        // q = 1, 1D, u = cos x
        let a = 0.3;
        let coarse = TorusGrid::new(1, 256).unwrap();
        let fine = TorusGrid::new(1, 512).unwrap();
        let value = |g: TorusGrid| {
            let u = g.sample(|x| x[0].cos());
            let grad = vec![g.sample(|x| -x[0].sin())];
            gagliardo(&u, &grad, a, 1.0, &DiagonalCell::new(g))
        };
        let (c, f) = (value(coarse), value(fine));
        assert!(((c - f) / f).abs() < 1e-3, "{c} vs {f}");
    }

    #[test]
    fn diagonal_cell_matches_quadrature() {
        let g = TorusGrid::new(2, 16).unwrap();
        let cell = DiagonalCell::new(g);
        let (q, a) = (2.0, 0.2);
        let grad = [0.6, -0.8];
        // direct tensor Gauss rule on the square, away from the origin by symmetry
        let rule = GaussLegendre::new(16);
        let half = 0.5 * g.h();
        // graded towards the singular point
        let mut breaks: Vec<f64> = (0..40).map(|k| half * 0.5f64.powi(k)).collect();
        breaks.push(0.0);
        breaks.extend((0..40).rev().map(|k| -half * 0.5f64.powi(k)));
        breaks.reverse();
        let (xs, ws) = rule.composite(&breaks);
        let mut direct = 0.0;
        for (x, wx) in xs.iter().zip(&ws) {
            for (y, wy) in xs.iter().zip(&ws) {
                let r2 = x * x + y * y;
                direct += wx * wy * (grad[0] * x + grad[1] * y).abs().powf(q) * r2.powf(-0.5 * (2.0 + a * q));
            }
        }
        let fast = cell.eval(grad, q, a);
        assert!(((fast - direct) / direct).abs() < 1e-6, "{fast} vs {direct}");
    }

    #[test]
    fn inadmissible_delta_is_rejected() {
        let fields = positive_sample_fields(1, 32, 1, 0);
        let bad = LemmaSettings { delta: 0.3, ..settings() };
        assert!(matches!(certify_lemmas_static(&fields, bad), Err(ConstantsError::Inadmissible(_))));
    }

    #[test]
    fn random_positive_fields_pass_in_1d() {
        let fields = positive_sample_fields(1, 64, 10, 7);
        for c in certify_lemmas_static(&fields, settings()).unwrap() {
            assert_eq!(c.status, Status::Pass, "{} {:?}", c.label(), c.notes);
            if c.claim_id == ClaimId::LemA3Dichotomy {
                assert!(c.notes.iter().any(|n| n == "exhaustiveness violations: 0"), "{:?}", c.notes);
            }
        }
    }
}
