//! Refinement study standing in for uniqueness: runs that differ only in
//! resolution should approach one limit trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Certificate, ClaimId, Tally, Tolerance};

/// Minimum fitted order in `dt`.
const MIN_ORDER: f64 = 0.9;

/// Largest accepted distance between grid levels.
const GRID_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwinStudyError {
    #[error("need at least 3 refinement levels, got {0}")]
    TooFewLevels(usize),
    #[error("{dts} time steps but {distances} distances")]
    LengthMismatch { dts: usize, distances: usize },
}

/// Distances from runs at each `dt` to a common reference run, plus the
/// distance between two grid levels at equal `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinStudy {
    pub dts: Vec<f64>,
    pub distances: Vec<f64>,
    pub grid_distance: Option<f64>,
    pub alpha: f64,
}

/// Least-squares slope of `ln distance` against `ln dt` over positive pairs.
pub fn fitted_order(dts: &[f64], distances: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(distances)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn certify_twin(study: &TwinStudy) -> Result<Certificate, TwinStudyError> {
    if study.dts.len() != study.distances.len() {
        return Err(TwinStudyError::LengthMismatch {
            dts: study.dts.len(),
            distances: study.distances.len(),
        });
    }
    if study.dts.len() < 3 {
        return Err(TwinStudyError::TooFewLevels(study.dts.len()));
    }
    let mut t = Tally::new(ClaimId::Thm3Twin, None).with_tolerance(Tolerance { rel: 0.0, abs: 0.0 });
    if study.alpha <= 1.0 {
        t.outside(format!("alpha = {} <= 1", study.alpha));
    }
    if study.distances.iter().all(|&e| e == 0.0) {
        t.vacuous("all distances are zero");
    } else {
        match fitted_order(&study.dts, &study.distances) {
            Some(order) => {
                t.note(format!("fitted order {order}"));
                // margin is order - MIN_ORDER
                t.check(0.0, order, MIN_ORDER);
            }
            None => t.inconclusive("fewer than 2 positive distances"),
        }
    }
    if let Some(g) = study.grid_distance {
        t.note(format!("grid distance {g:e}"));
        t.check(1.0, GRID_TOLERANCE, g);
    }
    Ok(t.finish())
}
