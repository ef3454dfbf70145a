use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HarnessError, Scene};
use crate::baselines::{dbmp_build, dbmp_plan, pmp_plan, CompositeMetricConfig, DbmpConfig, RegraspGraph};
use crate::gp_table::{build_table, GpTable};
use crate::paths::ManipulationPath;
use crate::planner::{plan, PlannerConfig, PlanningError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Guided,
    Pmp,
    Dbmp,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Guided, PlannerKind::Pmp, PlannerKind::Dbmp];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Guided => "guided",
            PlannerKind::Pmp => "pmp",
            PlannerKind::Dbmp => "dbmp",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown planner '{s}' (guided, pmp, dbmp)"))
    }
}

/// Per-scene preprocessing shared by every query of one planner.
pub enum Prepared {
    Guided(GpTable),
    Pmp,
    Dbmp(RegraspGraph),
}

/// Builds what `kind` needs before planning: the grasp-placement table, or
/// the regrasp graph with the query placements added.
pub fn prepare(kind: PlannerKind, scene: &Scene, seed: u64) -> Result<Prepared, PlanningError> {
    let w = &scene.world;
    Ok(match kind {
        PlannerKind::Guided => Prepared::Guided(build_table(&w.object, &w.gripper, &w.table)?),
        PlannerKind::Pmp => Prepared::Pmp,
        PlannerKind::Dbmp => {
            let cfg = DbmpConfig {
                ik: scene.planner.ik,
                seed,
                ..Default::default()
            };
            Prepared::Dbmp(dbmp_build(w, &cfg, &[scene.start.object_pose, scene.goal.object_pose])?)
        }
    })
}

/// Runs one query of the scene with the prepared planner.
pub fn run_planner(prepared: &Prepared, scene: &Scene, cfg: &PlannerConfig) -> Result<ManipulationPath, PlanningError> {
    let (w, s, g) = (&scene.world, &scene.start, &scene.goal);
    match prepared {
        Prepared::Guided(t) => plan(w, t, s, g, cfg).map(|r| r.path),
        Prepared::Pmp => pmp_plan(w, s, g, cfg, &CompositeMetricConfig::default()),
        Prepared::Dbmp(graph) => dbmp_plan(graph, w, s, g, cfg),
    }
}

/// One benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub planner: PlannerKind,
    pub seed: u64,
    pub prep_time_s: f64,
    pub plan_time_s: f64,
    /// Present iff the run succeeded.
    pub transitions: Option<usize>,
    pub success: bool,
    pub path_file: Option<String>,
}

impl RunRecord {
    /// The record without its timings, for reproducibility checks.
    pub fn untimed(&self) -> RunRecord {
        RunRecord {
            prep_time_s: 0.0,
            plan_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// Means over successful runs, as in a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub planner: PlannerKind,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_prep_time_s: Option<f64>,
    pub mean_plan_time_s: Option<f64>,
    pub mean_transitions: Option<f64>,
}

pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut kinds: Vec<PlannerKind> = Vec::new();
    for r in records {
        if !kinds.contains(&r.planner) {
            kinds.push(r.planner);
        }
    }
    kinds
        .into_iter()
        .map(|k| {
            let all: Vec<&RunRecord> = records.iter().filter(|r| r.planner == k).collect();
            let ok: Vec<&RunRecord> = all.iter().copied().filter(|r| r.success).collect();
            let mean = |f: &dyn Fn(&RunRecord) -> f64| {
                (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
            };
            Summary {
                planner: k,
                runs: all.len(),
                successes: ok.len(),
                success_rate: ok.len() as f64 / all.len() as f64,
                mean_prep_time_s: mean(&|r| r.prep_time_s),
                mean_plan_time_s: mean(&|r| r.plan_time_s),
                mean_transitions: mean(&|r| r.transitions.unwrap_or(0) as f64),
            }
        })
        .collect()
}

/// Seed of trial `i`, derived from the master seed. Every planner sees the
/// same trial seeds.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.next_u64()).collect()
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub trials: usize,
    pub budget_s: f64,
    pub seed: u64,
    /// Where solution paths are written, if anywhere.
    pub path_dir: Option<std::path::PathBuf>,
}

/// Runs every planner `trials` times on the scene. Trials run in parallel;
/// records come back in planner order, then trial order.
pub fn run_benchmark(
    scene: &Scene,
    planners: &[PlannerKind],
    opts: &BenchOptions,
) -> Result<(Vec<RunRecord>, Vec<Summary>), HarnessError> {
    if opts.trials < 1 {
        return Err(HarnessError::Validation {
            field: "trials".into(),
            message: "must be at least 1".into(),
        });
    }
    if !(opts.budget_s > 0.0) {
        return Err(HarnessError::Validation {
            field: "budget_s".into(),
            message: "must be positive".into(),
        });
    }
    if let Some(d) = &opts.path_dir {
        std::fs::create_dir_all(d).map_err(|e| HarnessError::Io(format!("{}: {e}", d.display())))?;
    }
    let seeds = trial_seeds(opts.seed, opts.trials);
    let mut records = Vec::new();
    for &kind in planners {
        let clock = Instant::now();
        let prepared = prepare(kind, scene, opts.seed).map_err(|e| HarnessError::Validation {
            field: "scene".into(),
            message: e.to_string(),
        })?;
        let prep = clock.elapsed().as_secs_f64();
        let batch: Result<Vec<RunRecord>, HarnessError> = seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                let cfg = PlannerConfig {
                    seed,
                    t_max_s: opts.budget_s,
                    ..scene.planner.clone()
                };
                let clock = Instant::now();
                let out = run_planner(&prepared, scene, &cfg);
                let plan_time = clock.elapsed();
                record(kind, seed, i, prep, plan_time, out, opts.path_dir.as_deref())
            })
            .collect();
        records.extend(batch?);
    }
    let summary = summarize(&records);
    Ok((records, summary))
}

fn record(
    kind: PlannerKind,
    seed: u64,
    trial: usize,
    prep_time_s: f64,
    plan_time: Duration,
    out: Result<ManipulationPath, PlanningError>,
    path_dir: Option<&Path>,
) -> Result<RunRecord, HarnessError> {
    let path = out.ok();
    let transitions = path.as_ref().and_then(|p| p.transitions().ok());
    let path_file = match (&path, path_dir) {
        (Some(p), Some(dir)) => {
            let name = format!("{kind}-{trial:03}.json");
            let full = dir.join(&name);
            std::fs::write(&full, p.to_json()).map_err(|e| HarnessError::Io(format!("{}: {e}", full.display())))?;
            Some(name)
        }
        _ => None,
    };
    Ok(RunRecord {
        planner: kind,
        seed,
        prep_time_s,
        plan_time_s: plan_time.as_secs_f64(),
        transitions,
        success: transitions.is_some(),
        path_file,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format '{other}' (csv, markdown)")),
        }
    }
}

/// Raw records as csv, or the per-planner summary as a markdown table.
pub fn emit_report(records: &[RunRecord], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("planner,seed,prep_time_s,plan_time_s,transitions,success\n");
            for r in records {
                let t = r.transitions.map(|t| t.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{:.6},{:.6},{},{}",
                    r.planner, r.seed, r.prep_time_s, r.plan_time_s, t, r.success
                );
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| planner | prep. time (s) | plan. time (s) | # transitions | success rate |\n");
            out.push_str("|---|---|---|---|---|\n");
            let fmt = |v: Option<f64>, digits: usize| v.map_or("n/a".to_string(), |x| format!("{x:.digits$}"));
            for s in summarize(records) {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {:.0}% |",
                    s.planner,
                    fmt(s.mean_prep_time_s, 2),
                    fmt(s.mean_plan_time_s, 2),
                    fmt(s.mean_transitions, 2),
                    100.0 * s.success_rate
                );
            }
        }
    }
    out
}
