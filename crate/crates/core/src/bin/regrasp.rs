#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use regrasp::baselines::{dbmp_build, dbmp_plan, pmp_plan, CompositeMetricConfig, DbmpConfig};
use regrasp::gp_table::{build_table, export_table, TableFormat};
use regrasp::harness::{
    emit_report, load_scene, run_benchmark, BenchOptions, EndpointSpec, HarnessError, PlannerKind, ReportFormat, Scene,
};
use regrasp::paths::ManipulationPath;
use regrasp::planner::{dry_run, plan, PlanningError};

const SEED_VAR: &str = "REGRASP_SEED";

#[derive(Parser)]
#[command(name = "regrasp", version, about = "Pick-and-place regrasp planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the grasp-placement table of a scene.
    Table {
        scene: PathBuf,
        #[arg(long, default_value = "grid")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the scene's query and write the path as json.
    Plan {
        scene: PathBuf,
        /// Time budget in seconds.
        #[arg(long, allow_negative_numbers = true)]
        tmax: Option<f64>,
        /// Failures before a guidance edge is removed.
        #[arg(long)]
        threshold_n: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "guided")]
        algo: PlannerKind,
        /// Print the task plans and guidance graph, then stop.
        #[arg(long)]
        dry_run: bool,
        /// Output format of a dry run.
        #[arg(long, value_enum, default_value_t = DryRunFormat::Text)]
        dry_run_format: DryRunFormat,
        /// Endpoint json replacing the scene's start.
        #[arg(long)]
        start: Option<String>,
        /// Endpoint json replacing the scene's goal.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Run seeded trials of several planners and report the results.
    Bench {
        scene: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Per-trial time budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_value = "guided,pmp,dbmp")]
        planners: Vec<PlannerKind>,
        #[arg(long, value_enum, default_value_t = BenchFormat::Markdown)]
        format: BenchFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving one json file per solution.
        #[arg(long)]
        paths_dir: Option<PathBuf>,
    },
    /// Sample a saved path at a fixed step for replay.
    Export {
        path: PathBuf,
        /// Spacing of samples along the path domain.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DryRunFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFormat {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

enum Failure {
    NoSolution,
    Invalid(String),
    Io(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<PlanningError> for Failure {
    fn from(e: PlanningError) -> Self {
        match e {
            PlanningError::NoSolution => Failure::NoSolution,
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoSolution) => {
            eprintln!("no solution found");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The seed in effect: the flag, else the environment, else the scene.
fn effective_seed(flag: Option<u64>, scene_seed: u64) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Invalid(format!("invalid {SEED_VAR}: '{v}' is not an unsigned integer"))),
        Err(_) => Ok(scene_seed),
    }
}

fn override_endpoint(scene: &mut Scene, json: Option<&str>, field: &str) -> Result<(), Failure> {
    let Some(json) = json else {
        return Ok(());
    };
    let spec: EndpointSpec =
        serde_json::from_str(json).map_err(|e| Failure::Invalid(format!("invalid {field}: {e}")))?;
    let config = spec.resolve(&scene.world, field)?;
    if field == "start" {
        scene.start = config;
    } else {
        scene.goal = config;
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Table { scene, format, out } => {
            let scene = load_scene(&scene)?;
            let w = &scene.world;
            let table = build_table(&w.object, &w.gripper, &w.table).map_err(PlanningError::from)?;
            emit(out.as_deref(), &export_table(&table, format))
        }
        Command::Plan {
            scene,
            tmax,
            threshold_n,
            seed,
            out,
            algo,
            dry_run: dry,
            dry_run_format,
            start,
            goal,
        } => {
            let mut scene = load_scene(&scene)?;
            override_endpoint(&mut scene, start.as_deref(), "start")?;
            override_endpoint(&mut scene, goal.as_deref(), "goal")?;
            let mut cfg = scene.planner.clone();
            if let Some(t) = tmax {
                cfg.t_max_s = t;
            }
            if let Some(n) = threshold_n {
                cfg.threshold_n = n;
            }
            cfg.seed = effective_seed(seed, cfg.seed)?;
            cfg.validate()?;
            let w = &scene.world;
            if dry {
                let table = build_table(&w.object, &w.gripper, &w.table).map_err(PlanningError::from)?;
                let (plans, q) = dry_run(w, &table, &scene.start, &scene.goal)?;
                let text = match dry_run_format {
                    DryRunFormat::Text => {
                        let mut s = String::new();
                        let _ = writeln!(s, "task plans: {}", plans.len());
                        for p in &plans {
                            let _ = writeln!(s, "  {p}");
                        }
                        let _ = write!(s, "{q}");
                        s
                    }
                    DryRunFormat::Json => {
                        let doc = serde_json::json!({ "plans": plans, "guidance": q });
                        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
                    }
                };
                return emit(out.as_deref(), &text);
            }
            let path = match algo {
                PlannerKind::Guided => {
                    let table = build_table(&w.object, &w.gripper, &w.table).map_err(PlanningError::from)?;
                    plan(w, &table, &scene.start, &scene.goal, &cfg)?.path
                }
                PlannerKind::Pmp => pmp_plan(w, &scene.start, &scene.goal, &cfg, &CompositeMetricConfig::default())?,
                PlannerKind::Dbmp => {
                    let dcfg = DbmpConfig {
                        ik: cfg.ik,
                        seed: cfg.seed,
                        ..Default::default()
                    };
                    let graph = dbmp_build(w, &dcfg, &[scene.start.object_pose, scene.goal.object_pose])?;
                    dbmp_plan(&graph, w, &scene.start, &scene.goal, &cfg)?
                }
            };
            let transitions = path.transitions().map_err(PlanningError::from)?;
            eprintln!("{algo}: {transitions} transitions, {} segments", path.domain_length());
            emit(out.as_deref(), &path.to_json())
        }
        Command::Bench {
            scene,
            trials,
            budget,
            seed,
            planners,
            format,
            out,
            paths_dir,
        } => {
            let scene = load_scene(&scene)?;
            let opts = BenchOptions {
                trials,
                budget_s: budget,
                seed: effective_seed(seed, scene.planner.seed)?,
                path_dir: paths_dir,
            };
            let (records, _) = run_benchmark(&scene, &planners, &opts)?;
            let format = match format {
                BenchFormat::Csv => ReportFormat::Csv,
                BenchFormat::Markdown => ReportFormat::Markdown,
            };
            emit(out.as_deref(), &emit_report(&records, format))
        }
        Command::Export {
            path,
            step,
            format,
            out,
        } => {
            if !(step > 0.0) {
                return Err(Failure::Invalid("invalid step: must be positive".into()));
            }
            let text =
                std::fs::read_to_string(&path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            let mp = ManipulationPath::from_json(&text, None)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            emit(out.as_deref(), &sample_path(&mp, step, format)?)
        }
    }
}

fn sample_path(path: &ManipulationPath, step: f64, format: ExportFormat) -> Result<String, Failure> {
    let len = path.domain_length() as f64;
    let n = (len / step).ceil() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = (i as f64 * step).min(len);
        let c = path.evaluate(s).map_err(|e| Failure::Invalid(e.to_string()))?;
        let t = c.object_pose.translation();
        let r = c.object_pose.rotation();
        rows.push((s, c.q_rad.clone(), [t.x, t.y, t.z], [r.w, r.i, r.j, r.k]));
    }
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            let dof = rows.first().map_or(0, |r| r.1.len());
            out.push('s');
            for j in 0..dof {
                let _ = write!(out, ",q{j}");
            }
            out.push_str(",x,y,z,qw,qx,qy,qz\n");
            for (s, q, t, r) in &rows {
                let _ = write!(out, "{s}");
                for v in q.iter().chain(t).chain(r) {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        ExportFormat::Json => {
            let doc: Vec<_> = rows
                .iter()
                .map(|(s, q, t, r)| serde_json::json!({ "s": s, "q_rad": q, "position_m": t, "quaternion_wxyz": r }))
                .collect();
            out = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        }
    }
    Ok(out)
}
