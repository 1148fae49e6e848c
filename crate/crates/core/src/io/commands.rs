//! Orchestration behind the command-line subcommands.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{write_certificates, write_trajectory_csv, Checkpoint, IoError, RunConfig};
use crate::constants::{DataNorms, ModelParams, PaperConstants};
use crate::dynamics::{run, twin_run, Trajectory, TwinSample};
use crate::torus::{frac_laplacian, random_trig, SingularOracle, TorusGrid};
use crate::verifier::{
    certify_lemmas_static, certify_trajectory, positive_sample_fields, Certificate, LemmaSettings,
    Status, TwinStudy,
};

/// Exit status of a run: 0 when nothing failed, 1 when a certificate failed,
/// 2 when the solver stopped early.
pub fn exit_code(certs: &[Certificate], completed: bool) -> i32 {
    if !completed {
        2
    } else if certs.iter().any(Certificate::failed) {
        1
    } else {
        0
    }
}

pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub certificates: Vec<Certificate>,
    pub digest: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.certificates, self.trajectory.completed())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| IoError::at(path, e))?))
}

/// Runs `cfg`, certifies the trajectory and writes the configured outputs.
/// Relative output paths are taken against `base`.
pub fn execute_run(cfg: &RunConfig, base: &Path) -> Result<RunOutcome, IoError> {
    let (params, inside) = cfg.params()?;
    if !inside {
        log::warn!("no eps keeps the problem supercritical; using eps = {}", params.eps);
    }
    let u0 = cfg.initial_field()?;
    let solver = cfg.solver_config()?;
    let trajectory = run(&u0, &solver)?;
    let certificates = certify_trajectory(&trajectory);
    let digest = cfg.digest();
    let out = &cfg.outputs;
    if let Some(p) = &out.trajectory_csv_path {
        let p = resolve(base, p);
        write_trajectory_csv(create(&p)?, &trajectory.records).map_err(|e| e.with_path(&p))?;
    }
    if let Some(p) = &out.certificates_ndjson_path {
        let p = resolve(base, p);
        write_certificates(create(&p)?, &certificates, &digest).map_err(|e| e.with_path(&p))?;
    }
    if let Some(p) = &out.checkpoint_path {
        let last = trajectory.records.last().map_or(0.0, |r| r.t);
        let ck = Checkpoint {
            t: last,
            dt: trajectory.dt,
            params,
            field: trajectory.final_state.clone(),
        };
        ck.save(&resolve(base, p))?;
    }
    for c in &certificates {
        log::info!("{} {:?} margin {:e}", c.label(), c.status, c.worst_margin);
    }
    Ok(RunOutcome { trajectory, certificates, digest })
}

/// Constants as a JSON object with stable key names.
pub fn constants_report(params: &ModelParams, data: &DataNorms) -> Result<Value, IoError> {
    let k = PaperConstants::compute(params, data)?;
    Ok(json!({
        "d": params.d,
        "alpha": params.alpha,
        "chi": params.chi,
        "r": params.r,
        "eps": params.eps,
        "s": k.s,
        "p": k.p,
        "sigma": k.sigma,
        "C_d_alpha": k.c_d_alpha,
        "P_d_alpha": k.p_d_alpha,
        "P_sharp": k.p_sharp,
        "P_used": k.p_used,
        "M1": k.m1,
        "M2": k.m2,
        "M1_sharp": k.m1_sharp,
        "M2_sharp": k.m2_sharp,
        "A0": k.a0,
        "R0": k.r0,
        "R1": k.r1,
        "R2": k.r2,
        "R2_tilde": k.r2_tilde,
        "Phi": k.phi,
        "Q_bar": k.q_bar,
        "R3_bar": k.r3_bar,
        "R_inf_tilde": k.r_inf_tilde,
        "K": k.k,
        "K_tilde": k.k_tilde,
        "dissipation": k.dissipation,
        "gamma_lhs": k.gamma_lhs,
        "gamma": k.gamma,
        "gamma_tilde_lhs": k.gamma_tilde_lhs,
        "gamma_tilde": k.gamma_tilde,
        "S_entropy": k.s_entropy,
        "t0": k.t0,
        "delta_thm2b": k.delta_thm2b,
        "thm2b_threshold": k.thm2b_threshold,
        "supercritical": params.is_supercritical(),
        "bound_hypothesis_failures": params.bound_hypothesis_failures(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    /// `max |spectral - singular| / max |spectral|` per field.
    pub discrepancies: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Compares the Fourier multiplier with the singular-integral quadrature on
/// `count` seeded trigonometric polynomials with modes up to `n / 4`.
pub fn oracle_check(d: usize, alpha: f64, n: usize, seed: u64, count: usize) -> Result<OracleReport, IoError> {
    let grid = TorusGrid::new(d, n)?;
    let kmax = (n / 4) as i64;
    let oracle = SingularOracle::new(d, alpha, kmax as f64 * (d as f64).sqrt())?;
    let nodes: Vec<usize> = (0..grid.len()).collect();
    let mut discrepancies = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let f = random_trig(grid, kmax, 8, 1.0, seed.wrapping_add(i));
        let spectral = frac_laplacian(&f, alpha)?;
        let singular = oracle.apply_nodes(&f, &nodes)?;
        let diff = spectral
            .values()
            .iter()
            .zip(&singular)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        discrepancies.push(diff / spectral.max_abs().max(f64::MIN_POSITIVE));
    }
    let max_discrepancy = discrepancies.iter().cloned().fold(0.0, f64::max);
    Ok(OracleReport { d, alpha, n, discrepancies, max_discrepancy })
}

/// Twin run of two configurations from the first one's initial datum.
pub fn twin_compare(a: &RunConfig, b: &RunConfig) -> Result<Vec<TwinSample>, IoError> {
    let u0 = a.initial_field()?;
    Ok(twin_run(&u0, &a.solver_config()?, &b.solver_config()?)?)
}

fn final_distance(samples: &[TwinSample]) -> f64 {
    samples.last().map_or(f64::NAN, |s| s.distance)
}

/// Refinement study on `cfg`: for each `dt` the final distance between runs
/// at `dt` and `dt / 2`, and the final distance between grids `n` and `2n`
/// at the smallest `dt`.
pub fn refinement_study(cfg: &RunConfig, dts: &[f64]) -> Result<TwinStudy, IoError> {
    let u0 = cfg.initial_field()?;
    let base = cfg.solver_config()?;
    let distances = dts
        .par_iter()
        .map(|&dt| {
            let (mut a, mut b) = (base, base);
            a.dt = Some(dt);
            b.dt = Some(0.5 * dt);
            Ok(final_distance(&twin_run(&u0, &a, &b)?))
        })
        .collect::<Result<Vec<f64>, IoError>>()?;
    let finest = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut coarse = base;
    coarse.dt = Some(finest);
    let mut fine = coarse;
    fine.grid = TorusGrid::new(base.grid.d(), 2 * base.grid.n())?;
    let grid_distance = final_distance(&twin_run(&u0, &coarse, &fine)?);
    Ok(TwinStudy {
        dts: dts.to_vec(),
        distances,
        grid_distance: Some(grid_distance),
        alpha: base.params.alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRequest {
    pub d: usize,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub alpha: f64,
    pub s: f64,
    pub delta: f64,
}

impl LemmaRequest {
    pub fn digest(&self) -> String {
        super::digest_of(&json!(self))
    }
}

pub fn lemma_suite(req: &LemmaRequest) -> Result<Vec<Certificate>, IoError> {
    let fields = positive_sample_fields(req.d, req.n, req.count, req.seed);
    let settings = LemmaSettings { alpha: req.alpha, s: req.s, delta: req.delta };
    Ok(certify_lemmas_static(&fields, settings)?)
}

/// A grid of runs: every combination of the listed values replaces the
/// corresponding entry of `base.model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub chi: Vec<f64>,
    #[serde(default)]
    pub r: Vec<f64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub digest: String,
    pub alpha: f64,
    pub chi: f64,
    pub r: f64,
    pub exit_code: i32,
    pub failed: Vec<String>,
    pub outside: usize,
    pub error: Option<String>,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Configurations in a fixed order (alpha outermost, r innermost), each
    /// writing `<digest>.csv` and `<digest>.ndjson` under `out_dir`.
    pub fn expand(&self) -> Vec<RunConfig> {
        let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
        let m = self.base.model;
        let mut out = Vec::new();
        for &alpha in &or_base(&self.alpha, m.alpha) {
            for &chi in &or_base(&self.chi, m.chi) {
                for &r in &or_base(&self.r, m.r) {
                    let mut cfg = self.base.clone();
                    cfg.model.alpha = alpha;
                    cfg.model.chi = chi;
                    cfg.model.r = r;
                    let digest = cfg.digest();
                    cfg.outputs.trajectory_csv_path = Some(self.out_dir.join(format!("{digest}.csv")));
                    cfg.outputs.certificates_ndjson_path =
                        Some(self.out_dir.join(format!("{digest}.ndjson")));
                    cfg.outputs.checkpoint_path = None;
                    out.push(cfg);
                }
            }
        }
        out
    }
}

/// Runs the sweep on `jobs` threads and writes `sweep.ndjson` with one
/// summary line per configuration, in expansion order.
pub fn run_sweep(spec: &SweepSpec, base: &Path, jobs: usize) -> Result<Vec<SweepEntry>, IoError> {
    let out_dir = resolve(base, &spec.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| IoError::at(&out_dir, e))?;
    let configs = spec.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| IoError::Config(format!("thread pool: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let mut entry = SweepEntry {
                    digest: cfg.digest(),
                    alpha: cfg.model.alpha,
                    chi: cfg.model.chi,
                    r: cfg.model.r,
                    exit_code: 3,
                    failed: Vec::new(),
                    outside: 0,
                    error: None,
                };
                match cfg.validate().and_then(|_| execute_run(cfg, base)) {
                    Ok(o) => {
                        entry.exit_code = o.exit_code();
                        entry.failed = o.certificates.iter().filter(|c| c.failed()).map(|c| c.label()).collect();
                        entry.outside = o
                            .certificates
                            .iter()
                            .filter(|c| c.status == Status::OutsideHypotheses)
                            .count();
                    }
                    Err(e) => entry.error = Some(e.to_string()),
                }
                entry
            })
            .collect()
    });
    let summary = out_dir.join("sweep.ndjson");
    let mut w = create(&summary)?;
    for e in &entries {
        use std::io::Write;
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(kind: &str, t_end: f64) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{
                "model": {{"d": 1, "alpha": 1.0, "chi": 1.0, "r": 0.6, "eps": 0.1}},
                "grid": {{"d": 1, "n": 32}},
                "solver": {{"dt": 0.01, "t_end": {t_end}}},
                "initial_data": {{"kind": "{kind}"}},
                "outputs": {{"trajectory_csv_path": "traj.csv", "certificates_ndjson_path": "certs.ndjson",
                             "checkpoint_path": "final.fksl", "record_every": 5}}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn constant_run_writes_flat_oscillation() {
        let dir = tempfile::tempdir().unwrap();
        let out = execute_run(&demo("constant", 1.0), dir.path()).unwrap();
        assert_eq!(out.exit_code(), 0);
        let rows = super::super::read_trajectory_csv(std::io::BufReader::new(
            File::open(dir.path().join("traj.csv")).unwrap(),
        ))
        .unwrap();
        assert_eq!(rows.len(), 21);
        assert!(rows.iter().all(|(n, _)| n[7] == 0.0));
        let ck = Checkpoint::load(&dir.path().join("final.fksl")).unwrap();
        assert!((ck.t - 1.0).abs() < 1e-12);
        let lines = std::fs::read_to_string(dir.path().join("certs.ndjson")).unwrap();
        assert_eq!(lines.lines().count(), out.certificates.len());
    }

    #[test]
    fn bump_run_is_reproducible() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = demo("cosine_bump", 2.0);
        execute_run(&cfg, a.path()).unwrap();
        execute_run(&cfg, b.path()).unwrap();
        for f in ["traj.csv", "certs.ndjson", "final.fksl"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn sharp_constants_in_report() {
        let p = ModelParams::new(1, 1.0, 1.0, 0.6, 0.1).unwrap();
        let v = constants_report(&p, &DataNorms::constant(1, p.p(), 1.0)).unwrap();
        assert_eq!(v["P_sharp"], 1.0);
        assert_eq!(v["M1_sharp"], 2.0 / std::f64::consts::PI);
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"M1_sharp\":0.6366197723675814"));
    }

    #[test]
    fn oracle_agrees_on_a_small_grid() {
        let rep = oracle_check(1, 1.0, 64, 7, 3).unwrap();
        assert!(rep.max_discrepancy < 1e-5, "{:?}", rep.discrepancies);
    }

    #[test]
    fn sweep_expansion_is_ordered_and_keyed() {
        let spec = SweepSpec {
            base: demo("cosine_bump", 0.1),
            alpha: vec![0.5, 1.0],
            chi: vec![],
            r: vec![0.3, 0.6],
            out_dir: "out".into(),
        };
        let cfgs = spec.expand();
        assert_eq!(cfgs.len(), 4);
        assert_eq!((cfgs[1].model.alpha, cfgs[1].model.r), (0.5, 0.6));
        let p = cfgs[3].outputs.trajectory_csv_path.clone().unwrap();
        assert_eq!(p, PathBuf::from("out").join(format!("{}.csv", cfgs[3].digest())));
    }

    #[test]
    fn sweep_runs_and_summarizes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            base: demo("cosine_bump", 0.2),
            alpha: vec![],
            chi: vec![1.0, 0.5],
            r: vec![0.6],
            out_dir: "out".into(),
        };
        let entries = run_sweep(&spec, dir.path(), 2).unwrap();
        assert_eq!(entries.len(), 2);
        // chi = 0.5 < r + eps is rejected per entry, not for the whole sweep
        assert!(entries[1].error.is_some());
        assert_eq!(entries[0].exit_code, 0);
        let summary = std::fs::read_to_string(dir.path().join("out/sweep.ndjson")).unwrap();
        assert_eq!(summary.lines().count(), 2);
        assert!(dir.path().join("out").join(format!("{}.csv", entries[0].digest)).exists());
    }
}
