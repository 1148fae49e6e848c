//! Two runs from the same datum, compared on the coarser grid.

use thiserror::Error;

use super::{run_with, DynamicsError, SolverConfig};
use crate::torus::{lp_norm, Field, TorusGrid, TrigInterpolant};

#[derive(Debug, Error)]
pub enum TwinError {
    #[error("incompatible configurations: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinSample {
    pub t: f64,
    /// `||u_A(t) - u_B(t)||_{L^2}` on the coarser grid.
    pub distance: f64,
}

fn ratio(coarse: TorusGrid, fine: TorusGrid) -> Option<usize> {
    (coarse.d() == fine.d() && fine.n().is_multiple_of(coarse.n())).then(|| fine.n() / coarse.n())
}

/// Samples of `f` at the nodes of the coarser grid `coarse`.
fn restrict(f: &Field, coarse: TorusGrid) -> Field {
    let factor = f.grid().n() / coarse.n();
    if factor == 1 {
        return f.clone();
    }
    let n = f.grid().n();
    let values = (0..coarse.len())
        .map(|i| match coarse.d() {
            1 => f.values()[i * factor],
            _ => {
                let (a, b) = (i / coarse.n(), i % coarse.n());
                f.values()[a * factor * n + b * factor]
            }
        })
        .collect();
    Field::new(coarse, values).expect("restricted length matches")
}

/// Transfers `u0` to `grid` by restriction or trigonometric interpolation.
fn transfer(u0: &Field, grid: TorusGrid) -> Result<Field, TwinError> {
    let src = u0.grid();
    if ratio(grid, src).is_some() {
        return Ok(restrict(u0, grid));
    }
    if let Some(k) = ratio(src, grid) {
        let interp = TrigInterpolant::from_field(u0).map_err(DynamicsError::from)?;
        return Ok(interp.refine(k));
    }
    Err(TwinError::Incompatible(format!(
        "datum on n = {} cannot be moved to n = {}",
        src.n(),
        grid.n()
    )))
}

pub fn twin_run(u0: &Field, a: &SolverConfig, b: &SolverConfig) -> Result<Vec<TwinSample>, TwinError> {
    if a.params != b.params {
        return Err(TwinError::Incompatible("model parameters differ".into()));
    }
    let coarse = if a.grid.n() <= b.grid.n() { a.grid } else { b.grid };
    let fine = if a.grid.n() <= b.grid.n() { b.grid } else { a.grid };
    if ratio(coarse, fine).is_none() {
        return Err(TwinError::Incompatible(format!(
            "grids n = {} and n = {} have no common refinement",
            a.grid.n(),
            b.grid.n()
        )));
    }
    let collect = |cfg: &SolverConfig| -> Result<Vec<(f64, Field)>, TwinError> {
        let start = transfer(u0, cfg.grid)?;
        let mut states = Vec::new();
        let traj = run_with(&start, cfg, |rec, u| states.push((rec.t, restrict(u, coarse))))?;
        if let Some(e) = traj.abort {
            return Err(e.into());
        }
        Ok(states)
    };
    let (sa, sb) = (collect(a)?, collect(b)?);
    let mut out = Vec::new();
    let mut j = 0;
    for (t, ua) in &sa {
        while j < sb.len() && sb[j].0 < t - 1e-9 * t.max(1.0) {
            j += 1;
        }
        if j < sb.len() && (sb[j].0 - t).abs() <= 1e-9 * t.max(1.0) {
            let diff = ua.zip_with(&sb[j].1, |x, y| x - y).map_err(DynamicsError::from)?;
            out.push(TwinSample {
                t: *t,
                distance: lp_norm(&diff, 2.0),
            });
        }
    }
    Ok(out)
}
