//! Certificates: each checks one inequality of the theory on computed data
//! and reports the worst margin `bound - quantity` over its samples.

mod lemmas;
mod trajectory;
mod twin;

pub use lemmas::{certify_lemmas_static, positive_sample_fields, LemmaSettings};
pub use trajectory::{
    certify_cor1, certify_l1_bernoulli, certify_lemma_lp, certify_sign_v, certify_thm1,
    certify_thm2, certify_thm2b, certify_trajectory, THM2B_TARGET,
};
pub use twin::{certify_twin, fitted_order, TwinStudy, TwinStudyError};

use serde::{Deserialize, Serialize};

/// Claims covered by the certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClaimId {
    Thm1Linf,
    Thm1Limsup,
    L1Bernoulli,
    LemmaLp,
    Thm2OscDecay,
    Cor1OscDecay,
    Thm2bConvergence,
    Thm3Twin,
    LemA1Entropy,
    LemA2Poincare,
    LemA3Dichotomy,
    SignV,
    ComparisonV,
}

impl ClaimId {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::Thm1Linf => "THM1_LINF",
            ClaimId::Thm1Limsup => "THM1_LIMSUP",
            ClaimId::L1Bernoulli => "L1_BERNOULLI",
            ClaimId::LemmaLp => "LEMMA_LP",
            ClaimId::Thm2OscDecay => "THM2_OSC_DECAY",
            ClaimId::Cor1OscDecay => "COR1_OSC_DECAY",
            ClaimId::Thm2bConvergence => "THM2B_CONVERGENCE",
            ClaimId::Thm3Twin => "THM3_TWIN",
            ClaimId::LemA1Entropy => "LEM_A1_ENTROPY",
            ClaimId::LemA2Poincare => "LEM_A2_POINCARE",
            ClaimId::LemA3Dichotomy => "LEM_A3_DICHOTOMY",
            ClaimId::SignV => "SIGN_V",
            ClaimId::ComparisonV => "COMPARISON_V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    OutsideHypotheses,
    /// Not enough data to decide (e.g. a run shorter than a required transient).
    Inconclusive,
}

/// Comparisons accept `quantity <= bound (1 + rel) + abs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-6, abs: 1e-8 }
    }
}

impl Tolerance {
    pub fn accepts(&self, bound: f64, quantity: f64) -> bool {
        quantity <= bound + self.rel * bound.abs() + self.abs
    }
}

/// One sample whose quantity exceeded its bound beyond tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breach {
    /// Time for trajectory samples, index for static ones.
    pub at: f64,
    pub bound: f64,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub claim_id: ClaimId,
    /// Which inequality of a claim with several parts.
    pub variant: Option<String>,
    pub status: Status,
    /// `min (bound - quantity)`; `+inf` when nothing was sampled.
    pub worst_margin: f64,
    pub samples: usize,
    pub tolerances: Tolerance,
    pub breaches: Vec<Breach>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    pub fn label(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}[{v}]", self.claim_id.as_str()),
            None => self.claim_id.as_str().to_string(),
        }
    }
}

/// Breaches kept per certificate; the count is always in `notes`.
const MAX_BREACHES: usize = 20;

/// Accumulates samples of one inequality.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    claim: ClaimId,
    variant: Option<String>,
    tol: Tolerance,
    samples: usize,
    worst: f64,
    breach_count: usize,
    breaches: Vec<Breach>,
    notes: Vec<String>,
    outside: Vec<String>,
    inconclusive: Vec<String>,
    vacuous: bool,
}

impl Tally {
    pub(crate) fn new(claim: ClaimId, variant: Option<&str>) -> Self {
        Self {
            claim,
            variant: variant.map(str::to_string),
            tol: Tolerance::default(),
            samples: 0,
            worst: f64::INFINITY,
            breach_count: 0,
            breaches: Vec::new(),
            notes: Vec::new(),
            outside: Vec::new(),
            inconclusive: Vec::new(),
            vacuous: false,
        }
    }

    pub(crate) fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    /// Records `quantity <= bound`; non-finite values count as breaches.
    pub(crate) fn check(&mut self, at: f64, bound: f64, quantity: f64) {
        self.samples += 1;
        let margin = bound - quantity;
        let ok = margin.is_finite() && self.tol.accepts(bound, quantity);
        self.worst = if margin.is_nan() { f64::NEG_INFINITY } else { self.worst.min(margin) };
        if !ok {
            self.breach_count += 1;
            if self.breaches.len() < MAX_BREACHES {
                self.breaches.push(Breach { at, bound, quantity });
            }
        }
    }

    pub(crate) fn tolerances(&self) -> Tolerance {
        self.tol
    }

    pub(crate) fn samples_taken(&self) -> usize {
        self.samples
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Marks a failed precondition; the inequality is still evaluated.
    pub(crate) fn outside(&mut self, reason: impl Into<String>) {
        self.outside.push(reason.into());
    }

    pub(crate) fn inconclusive(&mut self, reason: impl Into<String>) {
        self.inconclusive.push(reason.into());
    }

    /// Lets a certificate with no samples pass (the premise never occurred).
    pub(crate) fn vacuous(&mut self, reason: impl Into<String>) {
        self.vacuous = true;
        self.notes.push(reason.into());
    }

    pub(crate) fn finish(mut self) -> Certificate {
        let status = if !self.outside.is_empty() {
            Status::OutsideHypotheses
        } else if self.breach_count > 0 {
            Status::Fail
        } else if !self.inconclusive.is_empty() || (self.samples == 0 && !self.vacuous) {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        if self.breach_count > 0 {
            self.notes.push(format!("{} breaches", self.breach_count));
        }
        let mut notes = std::mem::take(&mut self.notes);
        notes.extend(self.outside.into_iter().map(|s| format!("outside hypotheses: {s}")));
        notes.extend(self.inconclusive.into_iter().map(|s| format!("inconclusive: {s}")));
        Certificate {
            claim_id: self.claim,
            variant: self.variant,
            status,
            worst_margin: self.worst,
            samples: self.samples,
            tolerances: self.tol,
            breaches: self.breaches,
            notes,
        }
    }
}
