//! Canned experiments. Each produces one CSV table and a JSON report.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use steerlab_core::closed_form::{
    berry_phase_closed, berry_phase_numeric, five_level_coherence, loop_prediction,
    polarization_state, relative_phase,
};
use steerlab_core::engine::{run_loop, LoopSchedule, LoopSystem, RecordMode, StepControl};
use steerlab_core::squeeze::{derive, SqueezeDerived, SqueezeParams};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::criteria::{self, RunContext, VerifyGrid, SEED};
use crate::format::{Cell, Table};
use crate::report::{PointFailure, Report, Runtime};

const GAMMA: f64 = 1.0;

pub const LOOP_COLUMNS: &[&str] = &[
    "r",
    "xi",
    "phase_sim",
    "phase_closed",
    "phase_delta",
    "visibility_sim",
    "visibility_closed",
    "visibility_delta",
    "steps",
];

pub const FIVE_LEVEL_COLUMNS: &[&str] = &[
    "r1",
    "r2",
    "xi",
    "phase_sim",
    "phase_closed",
    "phase_delta",
    "visibility_sim",
    "visibility_closed",
    "visibility_delta",
    "steps",
];

pub const BERRY_COLUMNS: &[&str] = &[
    "r",
    "n_steps",
    "berry_numeric",
    "berry_closed",
    "berry_delta",
];

pub const POLARIZATION_COLUMNS: &[&str] =
    &["r1", "r2", "delta", "s0", "s1", "s2", "s3", "plane_angle"];

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub report: Report,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }

    /// Writes `results.csv` and `report.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        self.table.write(&dir.join("results.csv"))?;
        self.report.write(&dir.join("report.json"))
    }
}

#[derive(Debug, Clone, Serialize)]
struct LoopRecord {
    r: f64,
    r2: Option<f64>,
    xi: f64,
    phase_sim: f64,
    phase_closed: f64,
    phase_delta: f64,
    visibility_sim: f64,
    visibility_closed: f64,
    visibility_delta: f64,
    steps: usize,
    wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BerryRecord {
    r: f64,
    n_steps: usize,
    berry_numeric: f64,
    berry_closed: f64,
    berry_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PolarizationRecord {
    r1: f64,
    r2: f64,
    delta: f64,
    jones: [[f64; 2]; 2],
    stokes: [f64; 4],
    plane_angle: f64,
}

struct Collected {
    table: Table,
    runs: Vec<serde_json::Value>,
    failures: Vec<PointFailure>,
    criteria: Vec<criteria::CheckRow>,
    seed: Option<u64>,
    timings: Vec<(String, f64)>,
}

impl Collected {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            table: Table::new(columns),
            runs: Vec::new(),
            failures: Vec::new(),
            criteria: Vec::new(),
            seed: None,
            timings: Vec::new(),
        }
    }
}

fn to_value<T: Serialize>(record: &T) -> serde_json::Value {
    serde_json::to_value(record).expect("records serialize")
}

fn derived(r: f64) -> steerlab_core::Result<SqueezeDerived> {
    derive(&SqueezeParams::new(r, 0.0)?, GAMMA)
}

fn control_for(
    cfg: &ExperimentConfig,
    system: &LoopSystem,
    schedule: &LoopSchedule,
) -> steerlab_core::Result<StepControl> {
    let control = match cfg.steps_per_period {
        Some(n) => StepControl::with_step(schedule.period / n as f64),
        None => system.step_control(schedule)?,
    };
    Ok(control.recording(RecordMode::Observables, cfg.record_stride))
}

/// One loop at `xi`, compared with the closed-form prediction.
fn loop_point(
    cfg: &ExperimentConfig,
    xi: f64,
    five_level: bool,
) -> steerlab_core::Result<LoopRecord> {
    let start = Instant::now();
    let phi_rate = xi * GAMMA;
    let schedule = LoopSchedule::new(cfg.phi0, phi_rate, cfg.frame.into())?;
    let (system, phase_closed, visibility_closed) = if five_level {
        let (d1, d2) = (derived(cfg.r)?, derived(cfg.r2)?);
        let fc = five_level_coherence(&d1, &d2, phi_rate, schedule.period);
        let system = LoopSystem::FiveLevel {
            r1: cfg.r,
            r2: cfg.r2,
            gamma1: GAMMA,
            gamma2: GAMMA,
        };
        (system, relative_phase(&d1, &d2), fc.norm() / 0.5)
    } else {
        let prediction = loop_prediction(&derived(cfg.r)?, phi_rate);
        let system = LoopSystem::ThreeLevel {
            r: cfg.r,
            gamma: GAMMA,
        };
        (system, prediction.phase, prediction.visibility)
    };
    let control = control_for(cfg, &system, &schedule)?;
    let result = run_loop(&system, &schedule, None, Some(control))?;
    Ok(LoopRecord {
        r: cfg.r,
        r2: five_level.then_some(cfg.r2),
        xi,
        phase_sim: result.phase,
        phase_closed,
        phase_delta: (result.phase - phase_closed).abs(),
        visibility_sim: result.visibility,
        visibility_closed,
        visibility_delta: (result.visibility - visibility_closed).abs(),
        steps: result.trajectory.steps,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn loops(cfg: &ExperimentConfig, five_level: bool) -> Collected {
    let columns = if five_level {
        FIVE_LEVEL_COLUMNS
    } else {
        LOOP_COLUMNS
    };
    let mut out = Collected::new(columns);
    // `cfg.xi` is sorted ascending and `collect` keeps input order, so rows
    // come out sorted however the points were scheduled.
    let results: Vec<_> = cfg
        .xi
        .par_iter()
        .map(|&xi| (xi, loop_point(cfg, xi, five_level)))
        .collect();
    for (xi, result) in results {
        match result {
            Ok(rec) => {
                let mut row: Vec<Cell> = vec![rec.r.into()];
                if let Some(r2) = rec.r2 {
                    row.push(r2.into());
                }
                row.extend([
                    rec.xi.into(),
                    rec.phase_sim.into(),
                    rec.phase_closed.into(),
                    rec.phase_delta.into(),
                    rec.visibility_sim.into(),
                    rec.visibility_closed.into(),
                    rec.visibility_delta.into(),
                    rec.steps.into(),
                ]);
                out.table.push(row);
                out.timings.push((format!("xi={xi:e}"), rec.wall_ms));
                out.runs.push(to_value(&rec));
            }
            Err(e) => out.failures.push(PointFailure {
                point: if five_level {
                    format!("r1={}, r2={}, xi={xi:e}", cfg.r, cfg.r2)
                } else {
                    format!("r={}, xi={xi:e}", cfg.r)
                },
                error: e.to_string(),
            }),
        }
    }
    out
}

fn berry(cfg: &ExperimentConfig) -> Collected {
    let mut out = Collected::new(BERRY_COLUMNS);
    for &r in &cfg.r_values {
        let result = berry_phase_numeric(r, cfg.berry_steps)
            .and_then(|numeric| Ok((numeric, berry_phase_closed(&derived(r)?))));
        match result {
            Ok((numeric, closed)) => {
                let rec = BerryRecord {
                    r,
                    n_steps: cfg.berry_steps,
                    berry_numeric: numeric,
                    berry_closed: closed,
                    berry_delta: (numeric - closed).abs(),
                };
                out.table.push(vec![
                    r.into(),
                    rec.n_steps.into(),
                    numeric.into(),
                    closed.into(),
                    rec.berry_delta.into(),
                ]);
                out.runs.push(to_value(&rec));
            }
            Err(e) => out.failures.push(PointFailure {
                point: format!("r={r}"),
                error: e.to_string(),
            }),
        }
    }
    out
}

fn polarization(cfg: &ExperimentConfig) -> Collected {
    let mut out = Collected::new(POLARIZATION_COLUMNS);
    match derived(cfg.r).and_then(|d1| Ok((d1, derived(cfg.r2)?))) {
        Ok((d1, d2)) => {
            let delta = relative_phase(&d1, &d2);
            let p = polarization_state(delta);
            let rec = PolarizationRecord {
                r1: cfg.r,
                r2: cfg.r2,
                delta,
                jones: p.jones.map(|z| [z.re, z.im]),
                stokes: p.stokes,
                plane_angle: p.plane_angle(),
            };
            let mut row: Vec<Cell> = vec![cfg.r.into(), cfg.r2.into(), delta.into()];
            row.extend(p.stokes.map(Cell::from));
            row.push(rec.plane_angle.into());
            out.table.push(row);
            out.runs.push(to_value(&rec));
        }
        Err(e) => out.failures.push(PointFailure {
            point: format!("r1={}, r2={}", cfg.r, cfg.r2),
            error: e.to_string(),
        }),
    }
    out
}

fn verify(cfg: &ExperimentConfig) -> Collected {
    let ctx = RunContext::compute(VerifyGrid::from(cfg));
    let rows = ctx.evaluate();
    Collected {
        table: criteria::table(&rows),
        runs: Vec::new(),
        failures: Vec::new(),
        criteria: rows,
        seed: Some(SEED),
        timings: ctx.timings.clone(),
    }
}

/// Runs the configured experiment on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let collected = match cfg.experiment {
        ExperimentKind::Loop | ExperimentKind::Sweep => loops(cfg, false),
        ExperimentKind::Fivelevel => loops(cfg, true),
        ExperimentKind::Berry => berry(cfg),
        ExperimentKind::Polarization => polarization(cfg),
        ExperimentKind::Verify => verify(cfg),
    };
    let passed = collected.failures.is_empty() && collected.criteria.iter().all(|c| c.passed);
    let report = Report {
        inputs: cfg.clone(),
        runs: collected.runs,
        failures: collected.failures,
        criteria: collected.criteria,
        passed,
        runtime: Runtime {
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            workers: rayon::current_num_threads(),
            seed: collected.seed,
            runs: collected.timings,
        },
    };
    Outcome {
        table: collected.table,
        report,
    }
}
