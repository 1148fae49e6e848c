//! Time-dependent envelopes that dominate trajectory norms.

use serde::{Deserialize, Serialize};

use super::{bernoulli_l1, ConstantsError, PaperConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    L1Bernoulli,
    LpQ0,
    LpQ2Tilde,
    LinfR3,
    LinfR3Tilde,
    LinfRinf,
    OscDecay,
}

impl EnvelopeKind {
    pub const ALL: [EnvelopeKind; 7] = [
        EnvelopeKind::L1Bernoulli,
        EnvelopeKind::LpQ0,
        EnvelopeKind::LpQ2Tilde,
        EnvelopeKind::LinfR3,
        EnvelopeKind::LinfR3Tilde,
        EnvelopeKind::LinfRinf,
        EnvelopeKind::OscDecay,
    ];

    pub fn needs_restart(self) -> bool {
        matches!(self, EnvelopeKind::LpQ2Tilde | EnvelopeKind::LinfR3Tilde)
    }
}

/// Norms of the solution at the restart time `t0 = ln 2 / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartNorms {
    pub lp: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEnvelope {
    pub kind: EnvelopeKind,
    consts: PaperConstants,
    restart: Option<RestartNorms>,
}

impl BoundEnvelope {
    pub fn new(kind: EnvelopeKind, consts: &PaperConstants) -> Self {
        Self {
            kind,
            consts: consts.clone(),
            restart: None,
        }
    }

    pub fn with_restart(mut self, restart: RestartNorms) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn constants(&self) -> &PaperConstants {
        &self.consts
    }

    /// First time at which the envelope applies.
    pub fn start_time(&self) -> f64 {
        if self.kind.needs_restart() {
            self.consts.t0
        } else {
            0.0
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, ConstantsError> {
        let k = &self.consts;
        let decay = (-k.p_used * t).exp();
        let lp_q0 = || k.data.lp * decay + (1.0 - decay) * k.r0;
        let linf = |lp_env: f64, linf0: f64| {
            2.0 * (-t).exp() * linf0 + 2.0 * lp_env.powf(3.0 / k.sigma) * k.phi
        };
        let restart = || -> Result<RestartNorms, ConstantsError> {
            if t < k.t0 {
                return Err(ConstantsError::RestartBeforeT0 { t, t0: k.t0 });
            }
            self.restart.ok_or(ConstantsError::MissingRestart)
        };
        // the restart envelopes keep the absolute time in the exponentials
        let q2_tilde = |lp: f64| lp * decay + (1.0 - decay) * k.r2_tilde;
        Ok(match self.kind {
            EnvelopeKind::L1Bernoulli => bernoulli_l1(k.data.l1, k.params.r, k.params.d, t),
            EnvelopeKind::LpQ0 => lp_q0(),
            EnvelopeKind::LpQ2Tilde => q2_tilde(restart()?.lp),
            EnvelopeKind::LinfR3 => linf(lp_q0(), k.data.linf),
            EnvelopeKind::LinfR3Tilde => {
                let rs = restart()?;
                linf(q2_tilde(rs.lp), rs.linf)
            }
            EnvelopeKind::LinfRinf => k.r_inf_tilde,
            EnvelopeKind::OscDecay => k.data.osc * (-k.gamma.ok_or(ConstantsError::NoRate)? * t).exp(),
        })
    }
}
