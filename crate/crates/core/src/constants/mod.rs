//! Explicit constants, exponents and time-dependent bound envelopes of the
//! model, evaluated in closed form or by deterministic quadrature.

mod envelope;
mod kernel;

pub use envelope::{BoundEnvelope, EnvelopeKind, RestartNorms};
pub use kernel::{
    compute_c, compute_m1, compute_m2, compute_p, entropy_delta_bound, entropy_s, sharp_m_11,
    sharp_p11, QUADRATURE_TOLERANCE,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::torus::{lp_norm, oscillation, Extrema, Field};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inadmissible exponent: {0}")]
    Inadmissible(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("restart envelope evaluated at t = {t} before t0 = {t0}")]
    RestartBeforeT0 { t: f64, t0: f64 },
    #[error("restart envelope needs the norms of u(t0)")]
    MissingRestart,
    #[error("no decay rate: the smallness condition fails")]
    NoRate,
}

/// `(d, alpha, chi, r, eps)` with `chi > r > eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub chi: f64,
    pub r: f64,
    pub eps: f64,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, chi: f64, r: f64, eps: f64) -> Result<Self, ConstantsError> {
        let p = Self { d, alpha, chi, r, eps };
        p.validate()?;
        Ok(p)
    }

    /// Picks `eps` at the midpoint of the interval on which the slack keeps
    /// the problem supercritical. When that interval is empty the midpoint of
    /// `(0, r)` is used and the returned flag is `false`.
    pub fn with_default_eps(d: usize, alpha: f64, chi: f64, r: f64) -> Result<(Self, bool), ConstantsError> {
        let upper = r.min(r - chi * (1.0 - alpha / d as f64));
        let (eps, inside) = if upper > 0.0 {
            (0.5 * upper, true)
        } else {
            (0.5 * r, false)
        };
        Ok((Self::new(d, alpha, chi, r, eps)?, inside))
    }

    pub fn validate(&self) -> Result<(), ConstantsError> {
        let bad = |m: String| Err(ConstantsError::InvalidParams(m));
        if !(self.d == 1 || self.d == 2) {
            return bad(format!("d = {} (expected 1 or 2)", self.d));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad(format!("alpha = {} outside (0, 2)", self.alpha));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r = {} must be positive", self.r));
        }
        if !(self.chi > self.r && self.chi.is_finite()) {
            return bad(format!("chi = {} must exceed r = {}", self.chi, self.r));
        }
        if !(self.eps > 0.0 && self.eps < self.r) {
            return bad(format!("eps = {} outside (0, r)", self.eps));
        }
        Ok(())
    }

    pub fn s(&self) -> f64 {
        (self.r - self.eps) / (self.chi - self.r + self.eps)
    }

    /// The Lebesgue exponent `chi / (chi - r + eps) = 1 + s`.
    pub fn p(&self) -> f64 {
        self.chi / (self.chi - self.r + self.eps)
    }

    pub fn sigma(&self) -> f64 {
        self.alpha / self.d as f64 * self.p() - 1.0
    }

    /// `alpha > d (1 - r / chi)`, the standing assumption of the bounds.
    pub fn is_supercritical(&self) -> bool {
        self.alpha > self.d as f64 * (1.0 - self.r / self.chi)
    }

    /// Same condition with `r` replaced by `r - eps`, equivalent to `sigma > 0`.
    pub fn is_supercritical_with_slack(&self) -> bool {
        self.alpha > self.d as f64 * (1.0 - (self.r - self.eps) / self.chi)
    }

    pub fn sigma_in_unit_interval(&self) -> bool {
        let s = self.sigma();
        s > 0.0 && s <= 1.0
    }

    pub fn is_sharp_case(&self) -> bool {
        self.d == 1 && self.alpha == 1.0
    }

    /// Reasons the uniform bounds are not covered by the hypotheses; empty
    /// when they are.
    pub fn bound_hypothesis_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.is_supercritical() {
            out.push(format!(
                "alpha = {} <= d (1 - r/chi) = {}",
                self.alpha,
                self.d as f64 * (1.0 - self.r / self.chi)
            ));
        }
        if !self.is_supercritical_with_slack() {
            out.push(format!("eps = {} leaves sigma = {} <= 0", self.eps, self.sigma()));
        } else if !self.sigma_in_unit_interval() {
            out.push(format!("sigma = {} > 1", self.sigma()));
        }
        out
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }
}

/// Norms of the initial datum that the envelopes depend on. `lp` is taken
/// with the exponent `p` of the parameters it was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub l1: f64,
    pub lp: f64,
    pub linf: f64,
    pub osc: f64,
    pub min: f64,
}

impl DataNorms {
    pub fn of(u: &Field, p: f64) -> Self {
        let (min, linf) = match Extrema::of(u) {
            Ok(e) => (e.min, e.max.abs().max(e.min.abs())),
            Err(_) => (f64::NAN, f64::NAN),
        };
        Self {
            l1: lp_norm(u, 1.0),
            lp: lp_norm(u, p),
            linf,
            osc: oscillation(u),
            min,
        }
    }

    /// Norms of the constant field `c` on the torus of dimension `d`.
    pub fn constant(d: usize, p: f64, c: f64) -> Self {
        let vol = (2.0 * PI).powi(d as i32);
        Self {
            l1: c.abs() * vol,
            lp: c.abs() * vol.powf(1.0 / p),
            linf: c.abs(),
            osc: 0.0,
            min: c,
        }
    }
}

/// Every constant and data-dependent amplitude entering the envelopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperConstants {
    pub params: ModelParams,
    pub data: DataNorms,
    pub c_d_alpha: f64,
    pub p_d_alpha: f64,
    pub p_sharp: Option<f64>,
    /// Poincare constant used in the envelopes: the sharp one when available.
    pub p_used: f64,
    pub m1: f64,
    pub m2: f64,
    pub m1_sharp: Option<f64>,
    pub m2_sharp: Option<f64>,
    pub s: f64,
    pub p: f64,
    pub sigma: f64,
    /// `r / P (r chi / (eps (2 chi - r + eps)))^p`.
    pub a0: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r2_tilde: f64,
    /// `M1 + (4 chi / M2)^{1/2 + 1/sigma} + 1`.
    pub phi: f64,
    /// Time-independent bound `max(||u0||_p, R0)` of the `L^p` envelope.
    pub q_bar: f64,
    pub r3_bar: f64,
    pub r_inf_tilde: f64,
    pub k: f64,
    pub k_tilde: f64,
    /// Dissipation term of the smallness condition, sharp when available.
    pub dissipation: f64,
    pub dissipation_general: f64,
    /// Left side of the smallness condition (equal to `-gamma`).
    pub gamma_lhs: f64,
    pub gamma: Option<f64>,
    /// Smallness condition with the data-independent bound in place of the
    /// data-dependent one; holds only after a transient.
    pub gamma_tilde_lhs: f64,
    pub gamma_tilde: Option<f64>,
    pub s_entropy: Option<f64>,
    pub t0: f64,
    pub delta_thm2b: f64,
    pub thm2b_threshold: f64,
}

impl PaperConstants {
    pub fn compute(params: &ModelParams, data: &DataNorms) -> Result<Self, ConstantsError> {
        params.validate()?;
        let ModelParams { d, alpha, chi, r, eps } = *params;
        let df = d as f64;
        let vol = params.volume();
        let (s, p, sigma) = (params.s(), params.p(), params.sigma());

        let c_d_alpha = compute_c(d, alpha)?;
        let p_d_alpha = compute_p(d, alpha)?;
        let p_sharp = params.is_sharp_case().then(sharp_p11);
        let p_used = p_sharp.unwrap_or(p_d_alpha);
        let m1 = compute_m1(d, p, alpha)?;
        let m2 = compute_m2(d, p, alpha)?;
        let (m1_sharp, m2_sharp) = if params.is_sharp_case() {
            let (a, b) = sharp_m_11();
            (Some(a), Some(b))
        } else {
            (None, None)
        };

        let a0 = r / p_used * (r / eps * chi / (2.0 * chi - r + eps)).powf(p);
        let r1 = data.l1.max(vol);
        let r2 = (a0 + r1 * r1 / vol + r1).powf(1.0 / p);
        let r2_tilde = (a0 + 3.0 * vol).powf(1.0 / p);
        let r0 = (a0 + (data.l1 * data.l1 / vol).max(vol)).powf(1.0 / p);

        let phi = m1 + (4.0 * chi / m2).powf(0.5 + 1.0 / sigma) + 1.0;
        let q_bar = data.lp.max(r0);
        let r3_bar = 2.0 * data.linf + 2.0 * q_bar.powf(3.0 / sigma) * phi;
        let r_inf_tilde = 2.0 * r2_tilde.powf(3.0 / sigma) * phi;
        let k = m2 / q_bar.powf(alpha / df * p);
        let k_tilde = m2 / r2_tilde.powf(alpha / df * p);

        let dissipation_general = vol * c_d_alpha / (2.0 * PI * df.sqrt()).powf(df + alpha);
        // at d = alpha = 1 the closed kernel is bounded below by 1/(4 pi)
        let dissipation = if params.is_sharp_case() { 0.5 } else { dissipation_general };
        let gamma_lhs = 2.0 * chi - r + 2.0 * (chi - r) * (r3_bar - 1.0) - dissipation;
        let gamma = (gamma_lhs < 0.0 && gamma_lhs.is_finite()).then_some(-gamma_lhs);
        let gamma_tilde_lhs = 2.0 * chi - r + 2.0 * (chi - r) * (r_inf_tilde - 1.0) - dissipation;
        let gamma_tilde = (gamma_tilde_lhs < 0.0 && gamma_tilde_lhs.is_finite()).then_some(-gamma_tilde_lhs);

        let s_ent = s.min(1.0);
        let s_entropy = entropy_s(alpha, s_ent, 0.5 * entropy_delta_bound(alpha, s_ent), d).ok();

        Ok(Self {
            params: *params,
            data: *data,
            c_d_alpha,
            p_d_alpha,
            p_sharp,
            p_used,
            m1,
            m2,
            m1_sharp,
            m2_sharp,
            s,
            p,
            sigma,
            a0,
            r0,
            r1,
            r2,
            r2_tilde,
            phi,
            q_bar,
            r3_bar,
            r_inf_tilde,
            k,
            k_tilde,
            dissipation,
            dissipation_general,
            gamma_lhs,
            gamma,
            gamma_tilde_lhs,
            gamma_tilde,
            s_entropy,
            t0: restart_time(r),
            delta_thm2b: delta_thm2b(chi),
            thm2b_threshold: thm2b_threshold(),
        })
    }
}

/// Restart time `ln 2 / r`.
pub fn restart_time(r: f64) -> f64 {
    std::f64::consts::LN_2 / r
}

/// Upper limit on `chi` for convergence to the constant state, `1 / (8 pi^2)`.
pub fn thm2b_threshold() -> f64 {
    1.0 / (8.0 * PI * PI)
}

/// `min(1, 1/(4 pi chi) - 2 pi)`; positive exactly below the threshold.
pub fn delta_thm2b(chi: f64) -> f64 {
    (1.0 / (4.0 * PI * chi) - 2.0 * PI).min(1.0)
}

/// Decay rate `gamma` of the oscillation, if the smallness condition holds.
pub fn gamma_rate(params: &ModelParams, data: &DataNorms) -> Result<Option<f64>, ConstantsError> {
    Ok(PaperConstants::compute(params, data)?.gamma)
}

/// Integrated mass envelope `m0 / (e^{-rt} + (1 - e^{-rt}) m0 / V)`.
pub fn bernoulli_l1(m0: f64, r: f64, d: usize, t: f64) -> f64 {
    let vol = (2.0 * PI).powi(d as i32);
    let e = (-r * t).exp();
    m0 / (e + (1.0 - e) * m0 / vol)
}

/// First time the mass envelope started at `m0` is at most `level`.
/// `None` when the envelope never gets there (`level <= (2 pi)^d < m0`).
pub fn bernoulli_crossing_time(m0: f64, r: f64, d: usize, level: f64) -> Option<f64> {
    if m0 <= level {
        return Some(0.0);
    }
    let vol = (2.0 * PI).powi(d as i32);
    if level <= vol {
        return None;
    }
    let e = (m0 / level - m0 / vol) / (1.0 - m0 / vol);
    Some(-e.ln() / r)
}

/// Scans `(chi, r)` pairs with the given `(d, alpha)` and initial datum for
/// the largest positive decay rate. `eps` takes its default value.
pub fn search_decay_point(
    d: usize,
    alpha: f64,
    u0: &Field,
    chis: &[f64],
    gaps: &[f64],
) -> Result<Option<(ModelParams, f64)>, ConstantsError> {
    let mut best: Option<(ModelParams, f64)> = None;
    for &chi in chis {
        for &gap in gaps {
            let r = chi * (1.0 - gap);
            let (params, inside) = ModelParams::with_default_eps(d, alpha, chi, r)?;
            if !inside {
                continue;
            }
            let data = DataNorms::of(u0, params.p());
            if let Some(g) = PaperConstants::compute(&params, &data)?.gamma {
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((params, g));
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGrid;

    fn demo() -> ModelParams {
        ModelParams::new(1, 1.0, 1.0, 0.6, 0.1).unwrap()
    }

    #[test]
    fn derived_exponents() {
        let m = demo();
        assert!((m.s() - 1.0).abs() < 1e-15);
        assert!((m.p() - 2.0).abs() < 1e-15);
        assert!((m.sigma() - 1.0).abs() < 1e-15);
        assert!(m.is_supercritical() && m.sigma_in_unit_interval());
        assert!(m.bound_hypothesis_failures().is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(1, 1.0, 0.5, 0.6, 0.1).is_err());
        assert!(ModelParams::new(1, 1.0, 1.0, 0.6, 0.6).is_err());
        assert!(ModelParams::new(3, 1.0, 1.0, 0.6, 0.1).is_err());
        assert!(ModelParams::new(1, 2.0, 1.0, 0.6, 0.1).is_err());
    }

    #[test]
    fn default_eps_is_midpoint_of_admissible_interval() {
        let (m, inside) = ModelParams::with_default_eps(1, 1.0, 1.0, 0.6).unwrap();
        assert!(inside && (m.eps - 0.3).abs() < 1e-15);
        // alpha = 0.5: need eps < r - chi/2 = 0.1
        let (m, inside) = ModelParams::with_default_eps(1, 0.5, 1.0, 0.6).unwrap();
        assert!(inside && (m.eps - 0.05).abs() < 1e-15);
        assert!(m.is_supercritical_with_slack());
        let (m, inside) = ModelParams::with_default_eps(1, 0.3, 1.0, 0.1).unwrap();
        assert!(!inside && !m.is_supercritical());
        assert!(!m.bound_hypothesis_failures().is_empty());
    }

    #[test]
    fn r1_takes_the_larger_value() {
        let m = demo();
        let vol = 2.0 * PI;
        let data = DataNorms::constant(1, m.p(), 1.0);
        let k = PaperConstants::compute(&m, &data).unwrap();
        assert_eq!(k.r1, vol);
        let big = DataNorms { l1: 3.0 * vol, ..data };
        assert_eq!(PaperConstants::compute(&m, &big).unwrap().r1, 3.0 * vol);
    }

    #[test]
    fn r2_through_ode_coefficients() {
        // mass ODI y' <= -A y^p + B with A = p P and
        // B = p (A0 P + P V^{-1} R1 (R1 + V)); the level set is (B/A)^{1/p}
        let m = demo();
        let data = DataNorms::constant(1, m.p(), 1.0);
        let k = PaperConstants::compute(&m, &data).unwrap();
        let vol = 2.0 * PI;
        let (p, pc) = (m.p(), k.p_used);
        let r = m.r;
        let growth = r / m.eps * m.chi / (2.0 * m.chi - r + m.eps);
        let a = p * pc;
        let b = p * (r * growth.powf(p) + pc / vol * k.r1 * (k.r1 + vol));
        assert!(((b / a).powf(1.0 / p) - k.r2).abs() < 1e-12 * k.r2);
    }

    #[test]
    fn data_independent_quantities() {
        let m = demo();
        let a = PaperConstants::compute(&m, &DataNorms::constant(1, m.p(), 1.0)).unwrap();
        let b = PaperConstants::compute(&m, &DataNorms::constant(1, m.p(), 7.5)).unwrap();
        assert_eq!(a.r2_tilde, b.r2_tilde);
        assert_eq!(a.r_inf_tilde, b.r_inf_tilde);
        assert_eq!(a.thm2b_threshold, b.thm2b_threshold);
        assert!(b.r2 > a.r2 && b.r0 > a.r0);
    }

    #[test]
    fn sharp_values_reported_next_to_general_ones() {
        let m = demo();
        let k = PaperConstants::compute(&m, &DataNorms::constant(1, 2.0, 1.0)).unwrap();
        assert_eq!(k.p_sharp, Some(1.0));
        assert_eq!(k.p_used, 1.0);
        assert!((k.p_d_alpha - 1.0 / (PI * PI)).abs() < 1e-12);
        assert!((k.m1_sharp.unwrap() - 2.0 / PI).abs() < 1e-15);
        let m2 = ModelParams::new(2, 1.0, 1.0, 0.6, 0.1).unwrap();
        let k2 = PaperConstants::compute(&m2, &DataNorms::constant(2, m2.p(), 1.0)).unwrap();
        assert!(k2.p_sharp.is_none() && k2.m1_sharp.is_none());
        assert!(k2.p_d_alpha < k2.c_d_alpha);
    }

    #[test]
    fn threshold_and_delta() {
        assert!((thm2b_threshold() - 0.012665147955292222).abs() < 1e-15);
        assert!(delta_thm2b(0.012) > 0.0 && delta_thm2b(0.012) <= 1.0);
        assert!(delta_thm2b(0.013) < 0.0);
        assert_eq!(delta_thm2b(1e-4), 1.0);
    }

    #[test]
    fn gamma_matches_direct_evaluation() {
        let m = ModelParams::new(1, 1.0, 0.01, 0.0099, 0.00495).unwrap();
        let g = TorusGrid::new(1, 64).unwrap();
        let u0 = g.sample(|x| 1.0 + 1e-3 * x[0].cos());
        let data = DataNorms::of(&u0, m.p());
        let k = PaperConstants::compute(&m, &data).unwrap();
        let lhs = 2.0 * m.chi - m.r + 2.0 * (m.chi - m.r) * (k.r3_bar - 1.0) - 0.5;
        assert_eq!(k.gamma, Some(-lhs));
        assert!(k.gamma.unwrap() > 0.4);
        // far from the diagonal the condition fails
        let wide = ModelParams::new(1, 1.0, 1.0, 0.6, 0.1).unwrap();
        let kw = PaperConstants::compute(&wide, &DataNorms::of(&u0, wide.p())).unwrap();
        assert!(kw.gamma.is_none() && kw.gamma_lhs > 0.0);
    }

    #[test]
    fn gamma_limit_on_the_diagonal() {
        // as chi - r -> 0 the left side tends to chi - D
        let g = TorusGrid::new(1, 32).unwrap();
        let u0 = Field::constant(g, 1.0);
        let chi = 0.3;
        let m = ModelParams::new(1, 1.5, chi, chi * (1.0 - 1e-9), 0.1 * chi).unwrap();
        let k = PaperConstants::compute(&m, &DataNorms::of(&u0, m.p())).unwrap();
        let limit = chi - 2.0 * PI * k.c_d_alpha / (2.0 * PI).powf(2.5);
        assert!((k.gamma_lhs - limit).abs() < 1e-5 * (1.0 + k.r3_bar));
        assert_eq!(k.gamma.is_some(), limit < 0.0);
    }

    #[test]
    fn mass_envelope_and_crossing_time() {
        let vol = 2.0 * PI;
        for t in [0.0, 1.0, 100.0] {
            assert!((bernoulli_l1(vol, 0.3, 1, t) - vol).abs() < 1e-12);
        }
        assert!((bernoulli_l1(2.0 * vol, 0.3, 1, 1e4) - vol).abs() < 1e-9);
        assert!((bernoulli_l1(0.1, 0.3, 1, 1e4) - vol).abs() < 1e-9);
        let level = vol + 0.5;
        let t = bernoulli_crossing_time(2.0 * vol, 0.01, 1, level).unwrap();
        assert!((bernoulli_l1(2.0 * vol, 0.01, 1, t) - level).abs() < 1e-10);
        assert_eq!(bernoulli_crossing_time(1.0, 0.01, 1, level), Some(0.0));
        assert_eq!(bernoulli_crossing_time(2.0 * vol, 0.01, 1, vol), None);
    }

    #[test]
    fn decay_search_finds_positive_rate() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u0 = g.sample(|x| 1.0 + 1e-3 * x[0].cos());
        let (m, gamma) = search_decay_point(1, 1.0, &u0, &[0.01, 0.1, 1.0], &[1e-2, 1e-4])
            .unwrap()
            .unwrap();
        assert!(gamma > 0.0);
        let k = PaperConstants::compute(&m, &DataNorms::of(&u0, m.p())).unwrap();
        assert_eq!(k.gamma, Some(gamma));
    }
}
