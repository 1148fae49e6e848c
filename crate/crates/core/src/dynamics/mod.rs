//! Time integration of `u_t = -Lambda^alpha u + chi div(u grad v) + r u (1 - u)`
//! with `Laplacian v - v = u`.
//!
//! The fractional diffusion is diagonal in Fourier space and is treated
//! implicitly; transport and reaction are explicit. `Imex1` is backward/forward
//! Euler, `Imex2` the two-step backward differentiation formula with linear
//! extrapolation of the explicit terms, started by one `Imex1` step.

mod twin;

pub use twin::{twin_run, TwinError, TwinSample};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{
    BoundEnvelope, ConstantsError, DataNorms, EnvelopeKind, ModelParams, PaperConstants,
};
use crate::torus::{
    dealias_mask, divergence, elliptic_solve_spectral, gradient, lp_norm, sobolev_seminorm,
    Extrema, Field, SpectralField, TorusError, TorusGrid,
};

/// Relative slack of the envelope checks recorded in the flags.
pub const ENVELOPE_FLAG_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite value after step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("min u = {min:e} at step {step} (t = {t}) is below the abort level {threshold:e}")]
    Negativity {
        step: usize,
        t: f64,
        min: f64,
        threshold: f64,
    },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "IMEX1")]
    Imex1,
    #[serde(rename = "IMEX2")]
    Imex2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub grid: TorusGrid,
    pub params: ModelParams,
    /// Requested step; `None` selects the CFL-type default from the data.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub record_every: usize,
    /// Negativity tolerance relative to `||u||_inf`.
    pub neg_tol_rel: f64,
}

impl SolverConfig {
    pub fn new(grid: TorusGrid, params: ModelParams, t_end: f64) -> Self {
        Self {
            grid,
            params,
            dt: None,
            t_end,
            scheme: Scheme::Imex2,
            dealias: true,
            record_every: 1,
            neg_tol_rel: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::Config(m.to_string()));
        if self.grid.d() != self.params.d {
            return bad("grid dimension differs from the model dimension");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt must be positive");
            }
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if self.neg_tol_rel.is_nan() || self.neg_tol_rel < 0.0 {
            return bad("neg_tol must be nonnegative");
        }
        self.params.validate()?;
        Ok(())
    }

    /// `0.5 min(h / (chi max|grad v| + 1), 0.1 / r)` for the datum `u0`.
    pub fn default_dt(&self, u0: &Field) -> Result<f64, DynamicsError> {
        let v = elliptic_solve_spectral(&u0.transform()?);
        let grad_max = gradient(&v)
            .iter()
            .map(|g| g.inverse().max_abs())
            .fold(0.0, f64::max);
        let h = self.grid.h();
        Ok(0.5 * (h / (self.params.chi * grad_max + 1.0)).min(0.1 / self.params.r))
    }

    /// Fixed step actually used: the requested (or default) step shrunk so
    /// that an integer number of steps lands on `t_end`.
    pub fn effective_dt(&self, u0: &Field) -> Result<(f64, usize), DynamicsError> {
        let dt = match self.dt {
            Some(dt) => dt,
            None => self.default_dt(u0)?,
        };
        let steps = (self.t_end / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok((self.t_end / steps as f64, steps))
    }
}

/// Conditions flagged on a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordFlag {
    NegativityBreach,
    EnvelopeL1,
    EnvelopeLp,
    EnvelopeLinf,
}

impl RecordFlag {
    pub fn label(self) -> &'static str {
        match self {
            RecordFlag::NegativityBreach => "negativity_breach",
            RecordFlag::EnvelopeL1 => "env_L1",
            RecordFlag::EnvelopeLp => "env_Lp",
            RecordFlag::EnvelopeLinf => "env_Linf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub l1: f64,
    pub lp: f64,
    pub l2: f64,
    pub linf: f64,
    /// `||Lambda^{alpha/2} u||_{L^2}`.
    pub h_alpha2: f64,
    pub min_u: f64,
    pub osc: f64,
    pub mean: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub env_l1: f64,
    pub env_lp: f64,
    pub env_linf: f64,
    pub flags: Vec<RecordFlag>,
}

/// Output of a run: the records, the constants the envelopes were built
/// from, and the reason for stopping early if any. Records written before an
/// abort are kept.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub dt: f64,
    pub constants: PaperConstants,
    pub records: Vec<TrajectoryRecord>,
    pub abort: Option<DynamicsError>,
    pub final_state: Field,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    /// First record at or after `t`.
    pub fn first_record_from(&self, t: f64) -> Option<&TrajectoryRecord> {
        self.records.iter().find(|r| r.t >= t * (1.0 - 1e-12))
    }
}

/// Fourier-space stepper holding the state and the previous explicit term.
pub struct Stepper {
    grid: TorusGrid,
    params: ModelParams,
    dt: f64,
    scheme: Scheme,
    mask: Option<Vec<bool>>,
    symbol: Vec<f64>,
    u_hat: SpectralField,
    u: Field,
    history: Option<(SpectralField, SpectralField)>,
    step: usize,
    t: f64,
}

impl Stepper {
    pub fn new(u0: &Field, cfg: &SolverConfig, dt: f64) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        if u0.grid() != cfg.grid {
            return Err(TorusError::GridMismatch.into());
        }
        let grid = cfg.grid;
        let alpha = cfg.params.alpha;
        let symbol = (0..grid.len())
            .map(|i| grid.k_squared(i).powf(0.5 * alpha))
            .collect();
        Ok(Self {
            grid,
            params: cfg.params,
            dt,
            scheme: cfg.scheme,
            mask: cfg.dealias.then(|| dealias_mask(grid)),
            symbol,
            u_hat: u0.transform()?,
            u: u0.clone(),
            history: None,
            step: 0,
            t: 0.0,
        })
    }

    pub fn state(&self) -> &Field {
        &self.u
    }

    pub fn spectrum(&self) -> &SpectralField {
        &self.u_hat
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    fn truncate(&self, f: &mut SpectralField) {
        if let Some(mask) = &self.mask {
            for (c, &keep) in f.coeffs_mut().iter_mut().zip(mask) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Explicit part `chi div(u grad v) + r (u - u^2)` in Fourier space.
    pub fn nonlinear(&self) -> Result<SpectralField, DynamicsError> {
        let ModelParams { chi, r, .. } = self.params;
        let v_hat = elliptic_solve_spectral(&self.u_hat);
        let mut fluxes = Vec::with_capacity(self.grid.d());
        for g in gradient(&v_hat) {
            let product = self.u.zip_with(&g.inverse(), |a, b| a * b)?;
            let mut f = product.transform()?;
            self.truncate(&mut f);
            fluxes.push(f);
        }
        let div = divergence(&fluxes)?;
        let mut square = self.u.map(|a| a * a).transform()?;
        self.truncate(&mut square);
        let coeffs = div
            .coeffs()
            .iter()
            .zip(self.u_hat.coeffs())
            .zip(square.coeffs())
            .map(|((d, u), q)| chi * d + r * (u - q))
            .collect();
        Ok(SpectralField::new(self.grid, coeffs)?)
    }

    pub fn step(&mut self) -> Result<(), DynamicsError> {
        let n_hat = self.nonlinear()?;
        let dt = self.dt;
        let next: Vec<Complex64> = match (self.scheme, &self.history) {
            (Scheme::Imex2, Some((prev_u, prev_n))) => self
                .u_hat
                .coeffs()
                .iter()
                .zip(prev_u.coeffs())
                .zip(n_hat.coeffs().iter().zip(prev_n.coeffs()))
                .zip(&self.symbol)
                .map(|(((u, um), (n, nm)), lam)| {
                    (4.0 * u - um + 2.0 * dt * (2.0 * n - nm)) / (3.0 + 2.0 * dt * lam)
                })
                .collect(),
            _ => self
                .u_hat
                .coeffs()
                .iter()
                .zip(n_hat.coeffs())
                .zip(&self.symbol)
                .map(|((u, n), lam)| (u + dt * n) / (1.0 + dt * lam))
                .collect(),
        };
        let next = SpectralField::new(self.grid, next)?;
        let u_next = next.inverse();
        self.step += 1;
        self.t = self.step as f64 * dt;
        if u_next.check_finite().is_err() {
            return Err(DynamicsError::NonFinite {
                step: self.step,
                t: self.t,
            });
        }
        let previous = std::mem::replace(&mut self.u_hat, next);
        if self.scheme == Scheme::Imex2 {
            self.history = Some((previous, n_hat));
        }
        self.u = u_next;
        Ok(())
    }
}

/// One first-order step of size `dt` from `u`.
pub fn step(u: &Field, cfg: &SolverConfig, dt: f64) -> Result<Field, DynamicsError> {
    let cfg = SolverConfig {
        scheme: Scheme::Imex1,
        ..*cfg
    };
    let mut s = Stepper::new(u, &cfg, dt)?;
    s.step()?;
    Ok(s.u)
}

fn record(
    stepper: &Stepper,
    consts: &PaperConstants,
    envelopes: &[BoundEnvelope; 3],
    neg_tol: f64,
) -> Result<TrajectoryRecord, DynamicsError> {
    let u = stepper.state();
    let t = stepper.time();
    let ext = Extrema::of(u)?;
    let v = elliptic_solve_spectral(stepper.spectrum()).inverse();
    let vext = Extrema::of(&v)?;
    let linf = ext.max.abs().max(ext.min.abs());
    let l1 = lp_norm(u, 1.0);
    let lp = lp_norm(u, consts.p);
    let [e1, ep, einf] = envelopes;
    let (env_l1, env_lp, env_linf) = (e1.eval(t)?, ep.eval(t)?, einf.eval(t)?);
    let mut flags = Vec::new();
    if ext.min < -neg_tol {
        flags.push(RecordFlag::NegativityBreach);
    }
    let slack = |env: f64| env * (1.0 + ENVELOPE_FLAG_TOL) + 1e-8;
    if l1 > slack(env_l1) {
        flags.push(RecordFlag::EnvelopeL1);
    }
    if lp > slack(env_lp) {
        flags.push(RecordFlag::EnvelopeLp);
    }
    if linf > slack(env_linf) {
        flags.push(RecordFlag::EnvelopeLinf);
    }
    Ok(TrajectoryRecord {
        step: stepper.steps_taken(),
        t,
        l1,
        lp,
        l2: lp_norm(u, 2.0),
        linf,
        h_alpha2: sobolev_seminorm(u, 0.5 * consts.params.alpha),
        min_u: ext.min,
        osc: ext.max - ext.min,
        mean: crate::torus::mean(u),
        v_min: vext.min,
        v_max: vext.max,
        env_l1,
        env_lp,
        env_linf,
        flags,
    })
}

/// Runs to `t_end`, calling `observe` with every recorded state.
pub fn run_with(
    u0: &Field,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&TrajectoryRecord, &Field),
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let (dt, steps) = cfg.effective_dt(u0)?;
    let consts = PaperConstants::compute(&cfg.params, &DataNorms::of(u0, cfg.params.p()))?;
    let envelopes = [
        BoundEnvelope::new(EnvelopeKind::L1Bernoulli, &consts),
        BoundEnvelope::new(EnvelopeKind::LpQ0, &consts),
        BoundEnvelope::new(EnvelopeKind::LinfR3, &consts),
    ];
    let mut stepper = Stepper::new(u0, cfg, dt)?;
    let mut records = Vec::new();
    let mut abort = None;
    log::debug!("run: dt = {dt:e}, {steps} steps, scheme {:?}", cfg.scheme);

    let first = record(&stepper, &consts, &envelopes, cfg.neg_tol_rel * consts.data.linf)?;
    observe(&first, stepper.state());
    records.push(first);
    for n in 1..=steps {
        if let Err(e) = stepper.step() {
            abort = Some(e);
            break;
        }
        let (lo, hi) = stepper.state().sample_range();
        let neg_tol = cfg.neg_tol_rel * hi.abs().max(lo.abs());
        if lo < -1e3 * neg_tol {
            abort = Some(DynamicsError::Negativity {
                step: n,
                t: stepper.time(),
                min: lo,
                threshold: -1e3 * neg_tol,
            });
            break;
        }
        if n % cfg.record_every == 0 || n == steps {
            let rec = record(&stepper, &consts, &envelopes, neg_tol)?;
            observe(&rec, stepper.state());
            records.push(rec);
        }
    }
    if let Some(e) = &abort {
        log::warn!("run stopped early: {e}");
    }
    Ok(Trajectory {
        config: *cfg,
        dt,
        constants: consts,
        records,
        abort,
        final_state: stepper.state().clone(),
    })
}

pub fn run(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory, DynamicsError> {
    run_with(u0, cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::integral;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1, 1.0, 1.0, 0.6, 0.1).unwrap()
    }

    fn logistic(c: f64, r: f64, t: f64) -> f64 {
        c * (r * t).exp() / (1.0 - c + c * (r * t).exp())
    }

    #[test]
    fn constant_data_follow_the_logistic_ode() {
        let g = TorusGrid::new(1, 64).unwrap();
        let mut cfg = SolverConfig::new(g, params(), 1.0);
        cfg.dt = Some(1e-3);
        cfg.record_every = 1000;
        for c in [0.2, 1.0, 3.0] {
            let traj = run(&Field::constant(g, c), &cfg).unwrap();
            let want = logistic(c, 0.6, 1.0);
            let u = &traj.final_state;
            assert!(u.values().iter().all(|v| (v - want).abs() < 1e-6), "c = {c}");
            let spec = u.transform().unwrap();
            assert!(spec.coeffs()[1..].iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn steady_states_are_preserved() {
        let g = TorusGrid::new(2, 16).unwrap();
        let p = ModelParams::new(2, 1.5, 1.0, 0.6, 0.1).unwrap();
        let mut cfg = SolverConfig::new(g, p, 0.5);
        cfg.dt = Some(1e-2);
        let one = run(&Field::constant(g, 1.0), &cfg).unwrap();
        assert!(one.records.iter().all(|r| r.linf == 1.0 && r.osc == 0.0));
        assert!(one.records.iter().all(|r| (r.v_min + 1.0).abs() < 1e-15 && (r.v_max + 1.0).abs() < 1e-15));
        let zero = run(&Field::constant(g, 0.0), &cfg).unwrap();
        assert!(zero.final_state.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_order_mass_identity_is_exact() {
        // the mean mode sees only the reaction term
        let g = TorusGrid::new(1, 64).unwrap();
        let cfg = SolverConfig::new(g, params(), 1.0);
        let u = g.sample(|x| 1.0 + 0.5 * x[0].cos() + 0.2 * (3.0 * x[0]).sin());
        let dt = 1e-3;
        let next = step(&u, &cfg, dt).unwrap();
        let lhs = (integral(&next) - integral(&u)) / dt;
        let rhs = 0.6 * integral(&u.map(|a| a * (1.0 - a)));
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn mass_stays_under_bernoulli_envelope() {
        let g = TorusGrid::new(1, 64).unwrap();
        let mut cfg = SolverConfig::new(g, params(), 5.0);
        cfg.record_every = 10;
        let u0 = g.sample(|x| 1.0 + x[0].cos());
        let traj = run(&u0, &cfg).unwrap();
        assert!(traj.completed());
        for r in &traj.records {
            assert!(r.l1 <= r.env_l1 * (1.0 + 1e-6), "t = {}", r.t);
            assert!(r.v_max <= 1e-10 && r.v_max <= -r.min_u + 1e-8 * r.linf);
            assert!(r.v_min >= -r.linf - 1e-8 * r.linf);
        }
        assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
        assert!((traj.records.last().unwrap().t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn effective_dt_divides_the_horizon() {
        let g = TorusGrid::new(1, 32).unwrap();
        let mut cfg = SolverConfig::new(g, params(), 1.0);
        cfg.dt = Some(0.3);
        let (dt, steps) = cfg.effective_dt(&Field::constant(g, 1.0)).unwrap();
        assert_eq!(steps, 4);
        assert_eq!(dt, 0.25);
        cfg.dt = None;
        let (dt, _) = cfg.effective_dt(&g.sample(|x| 1.0 + x[0].cos())).unwrap();
        assert!(dt > 0.0 && dt <= 0.5 * 2.0 * PI / 32.0);
    }

    #[test]
    fn second_order_in_time() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u0 = g.sample(|x| 1.0 + 0.5 * x[0].cos());
        let at = |dt: f64, scheme| {
            let mut cfg = SolverConfig::new(g, params(), 0.5);
            cfg.dt = Some(dt);
            cfg.scheme = scheme;
            cfg.record_every = usize::MAX;
            run(&u0, &cfg).unwrap().final_state
        };
        let diff = |a: &Field, b: &Field| a.zip_with(b, |x, y| x - y).unwrap().max_abs();
        let reference = at(1.25e-4, Scheme::Imex2);
        let e1 = diff(&at(4e-3, Scheme::Imex2), &reference);
        let e2 = diff(&at(2e-3, Scheme::Imex2), &reference);
        assert!((e1 / e2).log2() > 1.8, "ratio {}", e1 / e2);
        let f1 = diff(&at(4e-3, Scheme::Imex1), &reference);
        let f2 = diff(&at(2e-3, Scheme::Imex1), &reference);
        assert!(((f1 / f2).log2() - 1.0).abs() < 0.2);
    }

    #[test]
    fn rejects_mismatched_configuration() {
        let g = TorusGrid::new(2, 16).unwrap();
        let cfg = SolverConfig::new(g, params(), 1.0);
        assert!(matches!(run(&Field::constant(g, 1.0), &cfg), Err(DynamicsError::Config(_))));
    }
}
