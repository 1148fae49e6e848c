//! Certificates evaluated on the records of a single run.

use std::f64::consts::PI;

use super::{Certificate, ClaimId, Tally, Tolerance};
use crate::constants::{
    bernoulli_crossing_time, BoundEnvelope, EnvelopeKind, PaperConstants, RestartNorms,
};
use crate::dynamics::{Trajectory, TrajectoryRecord};

/// Target for `||u - 1||_inf` at the end of a run in the second stability check.
pub const THM2B_TARGET: f64 = 1e-3;

/// Fraction of the run treated as its tail in the limsup checks.
const TAIL_FRACTION: f64 = 0.1;

/// Records before this fraction of the run are left out of the rate fit.
const FIT_SKIP_FRACTION: f64 = 0.05;

fn horizon(traj: &Trajectory) -> f64 {
    if traj.completed() {
        traj.config.t_end
    } else {
        traj.records.last().map_or(0.0, |r| r.t)
    }
}

fn tail(traj: &Trajectory) -> impl Iterator<Item = &TrajectoryRecord> {
    let from = (1.0 - TAIL_FRACTION) * horizon(traj);
    traj.records.iter().filter(move |r| r.t >= from)
}

/// Notes shared by every trajectory certificate.
fn start(claim: ClaimId, variant: Option<&str>, traj: &Trajectory) -> Tally {
    let mut t = Tally::new(claim, variant);
    if let Some(e) = &traj.abort {
        t.note(format!("run stopped early: {e}"));
    }
    let data = &traj.constants.data;
    // the interpolant minimum of a field touching 0 can be off by roundoff
    if data.min < -1e-12 * data.linf.max(1.0) {
        t.outside(format!("initial datum has min {:e} < 0", traj.constants.data.min));
    }
    t
}

fn bound_hypotheses(t: &mut Tally, k: &PaperConstants) {
    for reason in k.params.bound_hypothesis_failures() {
        t.outside(reason);
    }
}

/// Restart norms from the first record at or after `t0`.
fn restart(traj: &Trajectory) -> Option<(f64, RestartNorms)> {
    traj.first_record_from(traj.constants.t0)
        .map(|r| (r.t, RestartNorms { lp: r.lp, linf: r.linf }))
}

fn envelope(kind: EnvelopeKind, k: &PaperConstants) -> BoundEnvelope {
    BoundEnvelope::new(kind, k)
}

/// Mass stays under the integrated Bernoulli envelope.
pub fn certify_l1_bernoulli(traj: &Trajectory) -> Certificate {
    let mut t = start(ClaimId::L1Bernoulli, None, traj);
    let env = envelope(EnvelopeKind::L1Bernoulli, &traj.constants);
    for r in &traj.records {
        t.check(r.t, env.eval(r.t).unwrap_or(f64::NAN), r.l1);
    }
    t.finish()
}

/// `max v <= 0` and `-max u <= v <= -min u` at every record, to
/// `1e-8 ||u||_inf`.
pub fn certify_sign_v(traj: &Trajectory) -> Vec<Certificate> {
    let tol = Tolerance { rel: 0.0, abs: 0.0 };
    let mut sign = start(ClaimId::SignV, None, traj).with_tolerance(tol);
    let mut cmp = start(ClaimId::ComparisonV, None, traj).with_tolerance(tol);
    for r in &traj.records {
        let slack = 1e-8 * r.linf;
        sign.check(r.t, slack, r.v_max);
        cmp.check(r.t, -r.min_u + slack, r.v_max);
        cmp.check(r.t, r.v_min + slack, -r.linf);
    }
    sign.note("tolerance 1e-8 ||u||_inf per record");
    cmp.note("tolerance 1e-8 ||u||_inf per record");
    vec![sign.finish(), cmp.finish()]
}

/// Uniform `L^inf` bound: the data-dependent envelope at all times, the
/// restarted one after `t0`, and the data-independent limit on the tail.
pub fn certify_thm1(traj: &Trajectory) -> Vec<Certificate> {
    let k = &traj.constants;
    let mut main = start(ClaimId::Thm1Linf, None, traj);
    bound_hypotheses(&mut main, k);
    let env = envelope(EnvelopeKind::LinfR3, k);
    for r in &traj.records {
        main.check(r.t, env.eval(r.t).unwrap_or(f64::NAN), r.linf);
    }

    let mut again = start(ClaimId::Thm1Linf, Some("restart"), traj);
    bound_hypotheses(&mut again, k);
    match restart(traj) {
        Some((t_r, norms)) => {
            again.note(format!("restart norms taken at t = {t_r}"));
            let env = envelope(EnvelopeKind::LinfR3Tilde, k).with_restart(norms);
            for r in traj.records.iter().filter(|r| r.t >= t_r) {
                again.check(r.t, env.eval(r.t).unwrap_or(f64::NAN), r.linf);
            }
        }
        None => again.inconclusive(format!("run ends before t0 = {}", k.t0)),
    }

    let mut limsup = start(ClaimId::Thm1Limsup, None, traj);
    bound_hypotheses(&mut limsup, k);
    if !traj.completed() {
        limsup.inconclusive("run did not reach t_end");
    }
    for r in tail(traj) {
        limsup.check(r.t, k.r_inf_tilde, r.linf);
    }
    vec![main.finish(), again.finish(), limsup.finish()]
}

/// `L^p` bound with `p = chi / (chi - r + eps)`.
pub fn certify_lemma_lp(traj: &Trajectory) -> Vec<Certificate> {
    let k = &traj.constants;
    let mut main = start(ClaimId::LemmaLp, None, traj);
    let env = envelope(EnvelopeKind::LpQ0, k);
    for r in &traj.records {
        main.check(r.t, env.eval(r.t).unwrap_or(f64::NAN), r.lp);
    }

    let mut again = start(ClaimId::LemmaLp, Some("restart"), traj);
    match restart(traj) {
        Some((t_r, norms)) => {
            again.note(format!("restart norms taken at t = {t_r}"));
            let env = envelope(EnvelopeKind::LpQ2Tilde, k).with_restart(norms);
            for r in traj.records.iter().filter(|r| r.t >= t_r) {
                again.check(r.t, env.eval(r.t).unwrap_or(f64::NAN), r.lp);
            }
        }
        None => again.inconclusive(format!("run ends before t0 = {}", k.t0)),
    }

    let mut limsup = start(ClaimId::LemmaLp, Some("limsup"), traj);
    if !traj.completed() {
        limsup.inconclusive("run did not reach t_end");
    }
    for r in tail(traj) {
        limsup.check(r.t, k.r2_tilde, r.lp);
    }
    for t in [&mut main, &mut again, &mut limsup] {
        if k.p_sharp.is_some() {
            t.note("Poincare constant 1 (d = alpha = 1)");
        }
    }
    vec![main.finish(), again.finish(), limsup.finish()]
}

/// Least-squares slope of `ln y` against `t`.
fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in points {
        sxy += (t - mt) * (y.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Exponential decay of the oscillation at the rate of the smallness
/// condition, plus a fit of the observed rate.
pub fn certify_thm2(traj: &Trajectory) -> Vec<Certificate> {
    let k = &traj.constants;
    let hyp = |t: &mut Tally| {
        if !k.params.is_supercritical() {
            t.outside("alpha <= d (1 - r/chi)");
        }
        if k.data.l1 == 0.0 {
            t.outside("initial datum vanishes");
        }
        match k.gamma {
            Some(g) => t.note(format!("gamma = {g}")),
            None => t.outside(format!("smallness condition fails: left side = {}", k.gamma_lhs)),
        }
    };
    let mut env = start(ClaimId::Thm2OscDecay, None, traj);
    hyp(&mut env);
    let mut fit = start(ClaimId::Thm2OscDecay, Some("fit"), traj);
    hyp(&mut fit);
    let Some(rate) = k.gamma else {
        return vec![env.finish(), fit.finish()];
    };
    for r in &traj.records {
        env.check(r.t, k.data.osc * (-rate * r.t).exp(), r.osc);
    }

    let from = FIT_SKIP_FRACTION * horizon(traj);
    let pts: Vec<(f64, f64)> = traj
        .records
        .iter()
        .filter(|r| r.t >= from && r.osc > 1e-13 * r.linf.max(1.0))
        .map(|r| (r.t, r.osc))
        .collect();
    match log_slope(&pts) {
        Some(slope) => {
            fit.note(format!("fitted slope {slope} over {} records", pts.len()));
            fit.check(from, -0.95 * rate, slope);
        }
        None if k.data.osc == 0.0 => fit.vacuous("zero initial oscillation"),
        None => fit.inconclusive("fewer than 3 records above the noise floor"),
    }
    if let Some(last) = traj.records.last() {
        if last.mean < 0.5 * (k.data.l1 / k.params.volume()).min(1.0) {
            fit.note(format!("mean drifts toward 0: {}", last.mean));
        }
    }
    vec![env.finish(), fit.finish()]
}

/// Oscillation decay with the data-independent rate, from the first record
/// after which `||u||_inf` stays under its data-independent limit.
pub fn certify_cor1(traj: &Trajectory) -> Certificate {
    let k = &traj.constants;
    let mut t = start(ClaimId::Cor1OscDecay, None, traj);
    if !k.params.is_supercritical() {
        t.outside("alpha <= d (1 - r/chi)");
    }
    let Some(rate) = k.gamma_tilde else {
        t.outside(format!("smallness condition fails: left side = {}", k.gamma_tilde_lhs));
        return t.finish();
    };
    let tol = Tolerance::default();
    let entry = traj
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.t >= k.t0)
        .find(|(i, _)| traj.records[*i..].iter().all(|r| tol.accepts(k.r_inf_tilde, r.linf)));
    match entry {
        Some((i, r0)) => {
            t.note(format!("anchored at t = {}", r0.t));
            for r in &traj.records[i..] {
                t.check(r.t, r0.osc * (-rate * (r.t - r0.t)).exp(), r.osc);
            }
        }
        None => t.inconclusive("no anchor time found"),
    }
    t.finish()
}

/// Second stability result (`d = alpha = 1`, `chi < 1/(8 pi^2)`): mass after
/// the predicted transient, convergence to 1, and the `L^inf` differential
/// inequality above the level `4 + 2 delta / pi`.
pub fn certify_thm2b(traj: &Trajectory) -> Vec<Certificate> {
    let k = &traj.constants;
    let m = &k.params;
    let delta = k.delta_thm2b;
    let hyp = |t: &mut Tally| {
        if !m.is_sharp_case() {
            t.outside(format!("needs d = alpha = 1 (d = {}, alpha = {})", m.d, m.alpha));
        }
        if m.chi >= k.thm2b_threshold {
            t.outside(format!("chi = {} >= 1/(8 pi^2)", m.chi));
        }
        if k.data.l1 == 0.0 {
            t.outside("initial datum vanishes");
        }
    };
    let level = m.volume() + delta;
    let crossing = bernoulli_crossing_time(k.data.l1, m.r, m.d, level);
    let end = horizon(traj);

    let mut mass = start(ClaimId::Thm2bConvergence, Some("mass"), traj);
    hyp(&mut mass);
    match crossing {
        Some(tc) if tc <= end => {
            mass.note(format!("predicted crossing time {tc}, level {level}"));
            let observed = match traj.records.iter().rposition(|r| r.l1 > level) {
                None => 0.0,
                Some(i) => traj.records.get(i + 1).map_or(f64::INFINITY, |r| r.t),
            };
            mass.note(format!("observed entry time {observed}"));
            for r in traj.records.iter().filter(|r| r.t >= tc) {
                mass.check(r.t, level, r.l1);
            }
        }
        Some(tc) => mass.inconclusive(format!("run ends before the transient time {tc}")),
        None => mass.inconclusive("mass envelope never reaches the level"),
    }

    let mut conv = start(ClaimId::Thm2bConvergence, Some("convergence"), traj);
    hyp(&mut conv);
    if !traj.completed() {
        conv.inconclusive("run did not reach t_end");
    }
    let dist = |r: &TrajectoryRecord| ((r.min_u + r.osc) - 1.0).abs().max((r.min_u - 1.0).abs());
    if let Some(r) = traj.records.last() {
        conv.check(r.t, THM2B_TARGET, dist(r));
    }
    if let Some(r) = traj.records.iter().find(|r| dist(r) < THM2B_TARGET) {
        conv.note(format!("||u - 1||_inf below {THM2B_TARGET} from t = {}", r.t));
    }

    let mut ode = start(ClaimId::Thm2bConvergence, Some("linf_ode"), traj);
    hyp(&mut ode);
    let threshold = 4.0 + 2.0 * delta.max(0.0) / PI;
    let after = crossing.unwrap_or(f64::INFINITY);
    for w in traj.records.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        if b.t < after || b.linf <= threshold {
            continue;
        }
        let slope = (c.linf - a.linf) / (c.t - a.t);
        let dead_band = 1e-6 * b.linf / (0.5 * (c.t - a.t));
        let l = b.linf;
        ode.check(b.t, m.r * l * (1.0 - l) + dead_band, slope);
    }
    if ode.samples_taken() == 0 {
        ode.vacuous(format!("||u||_inf never above {threshold} after the transient"));
    }
    vec![mass.finish(), conv.finish(), ode.finish()]
}

/// Every trajectory certificate, in a fixed order.
pub fn certify_trajectory(traj: &Trajectory) -> Vec<Certificate> {
    let mut out = vec![certify_l1_bernoulli(traj)];
    out.extend(certify_sign_v(traj));
    out.extend(certify_thm1(traj));
    out.extend(certify_lemma_lp(traj));
    out.extend(certify_thm2(traj));
    out.push(certify_cor1(traj));
    out.extend(certify_thm2b(traj));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ModelParams;
    use crate::dynamics::{run, SolverConfig};
    use crate::torus::{Field, TorusGrid};
    use crate::verifier::Status;

    fn demo_run(u0: impl Fn(TorusGrid) -> Field, t_end: f64) -> Trajectory {
        let g = TorusGrid::new(1, 64).unwrap();
        let m = ModelParams::new(1, 1.0, 1.0, 0.6, 0.1).unwrap();
        let mut cfg = SolverConfig::new(g, m, t_end);
        cfg.dt = Some(1e-2);
        cfg.record_every = 10;
        run(&u0(g), &cfg).unwrap()
    }

    #[test]
    fn steady_state_passes_everything_applicable() {
        let traj = demo_run(|g| Field::constant(g, 1.0), 3.0);
        for c in certify_trajectory(&traj) {
            assert!(!c.failed(), "{} failed: {:?}", c.label(), c.notes);
        }
        let thm1 = certify_thm1(&traj);
        assert_eq!(thm1[0].status, Status::Pass);
        let thm2 = certify_thm2(&traj);
        assert_eq!(thm2[0].status, Status::OutsideHypotheses);
        assert_eq!(thm2[0].samples, 0);
        assert!(thm2[0].notes.iter().any(|n| n.contains("left side")));
    }

    #[test]
    fn bump_respects_uniform_bounds() {
        let traj = demo_run(|g| g.sample(|x| 1.0 + x[0].cos()), 5.0);
        for c in certify_thm1(&traj).iter().chain(&certify_lemma_lp(&traj)) {
            assert_eq!(c.status, Status::Pass, "{} {:?}", c.label(), c.notes);
            assert!(c.worst_margin >= 0.0, "{} {}", c.label(), c.worst_margin);
        }
        for c in certify_sign_v(&traj) {
            assert_eq!(c.status, Status::Pass, "{}", c.label());
        }
        assert_eq!(certify_l1_bernoulli(&traj).status, Status::Pass);
    }

    #[test]
    fn subcritical_configuration_is_gated() {
        let g = TorusGrid::new(1, 32).unwrap();
        let (m, inside) = ModelParams::with_default_eps(1, 0.3, 1.0, 0.1).unwrap();
        assert!(!inside);
        let mut cfg = SolverConfig::new(g, m, 1.0);
        cfg.dt = Some(1e-2);
        let traj = run(&g.sample(|x| 1.0 + 0.2 * x[0].cos()), &cfg).unwrap();
        let c = certify_thm1(&traj);
        assert_eq!(c[0].status, Status::OutsideHypotheses);
        assert!(c[0].samples > 0);
    }

    #[test]
    fn short_run_leaves_restart_clause_inconclusive() {
        let traj = demo_run(|g| g.sample(|x| 1.0 + x[0].cos()), 0.5);
        let c = certify_thm1(&traj);
        assert_eq!(c[1].status, Status::Inconclusive);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, (-0.7 * i as f64).exp())).collect();
        assert!((log_slope(&pts).unwrap() + 0.7).abs() < 1e-12);
        assert!(log_slope(&pts[..2]).is_none());
    }
}
