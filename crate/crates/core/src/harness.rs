//! Trial execution and experiment batches.
//!
//! A trial is: fill the bowl, plan the blade path, co-step granular and
//! blade mechanics through the whole path, measure where the mass ended
//! up, then scale by lateral coverage. Batches fan trials out over a
//! bounded thread pool and reduce to a CSV plus a summary table, byte
//! deterministic regardless of parallelism.

use std::path::Path;
use std::time::Instant;

use serde::Deserialize;

use crate::capture::{self, ScoopOutcome};
use crate::config::{ConfigError, EffectorKind, RunConfig};
use crate::engine::{measure, Boundary, EngineError, Guard, Regions};
use crate::math::{vec2, Pose2, Vec2};
use crate::scene::{fill_and_settle_with, ContainerSpec, SceneError};
use crate::sheet::{cone_blade, ladle_blade};
use crate::trajectory::{plan_scoop, EffectorShape, GuardPlan, TrajectoryError};

/// Bottom edges wider than this multiple of the bowl diameter cannot be
/// forced in even with sheet deformation.
pub const INSERTABILITY_LIMIT: f64 = 1.25;

const TABLE_DROP: f64 = 15.0;
const PLATE_GAP: f64 = 20.0;
const PLATE_LEN: f64 = 160.0;
const PLATE_RADIUS: f64 = 6.0;
const PLATE_MU: f64 = 0.5;
const TABLE_MU: f64 = 0.6;
const CARRY_CAPTURE: f64 = 1.2;
const PLATE_CAPTURE_H: f64 = 60.0;

/// Stable per-trial seed: FNV-1a over (base_seed, scenario, trial_index).
pub fn trial_seed(base_seed: u64, scenario: &str, trial_index: u32) -> u64 {
    fn eat(mut h: u64, bytes: &[u8]) -> u64 {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    h = eat(h, &base_seed.to_le_bytes());
    h = eat(h, scenario.as_bytes());
    h = eat(h, &trial_index.to_le_bytes());
    h
}

#[derive(Clone, Debug)]
pub struct ScoopTrialResult {
    pub trial_index: u32,
    pub seed: u64,
    pub delivered_fraction: f64,
    pub residue_fraction: f64,
    pub spilled_fraction: f64,
    pub carried_end_fraction: f64,
    pub lateral_coverage: f64,
    pub max_penetration_ratio: f64,
    pub wall_time_s: f64,
    pub aborted: bool,
    pub reason: String,
}

impl ScoopTrialResult {
    /// An aborted trial leaves everything in the bowl, so the mass split
    /// stays a valid partition.
    fn aborted(trial_index: u32, seed: u64, reason: &str, wall_time_s: f64) -> ScoopTrialResult {
        ScoopTrialResult {
            trial_index,
            seed,
            delivered_fraction: 0.0,
            residue_fraction: 1.0,
            spilled_fraction: 0.0,
            carried_end_fraction: 0.0,
            lateral_coverage: 0.0,
            max_penetration_ratio: 0.0,
            wall_time_s,
            aborted: true,
            reason: reason.to_string(),
        }
    }
}

/// Table surface and dump plate around the bowl. The plate is a rounded
/// slab to the bowl's upper-rim side with its top at the plate height the
/// planner assumes.
fn scene_extras(container: &ContainerSpec) -> (Vec<Boundary>, Regions) {
    let rho = container.inner_radius();
    let (_, rim_hi) = container.rim_points();
    let plate_x = (rim_hi.x + PLATE_GAP, rim_hi.x + PLATE_GAP + PLATE_LEN);
    let table_y = -(rho + TABLE_DROP);
    let bounds = vec![
        Boundary::half_plane(vec2(0.0, table_y), vec2(0.0, 1.0), TABLE_MU),
        Boundary::Capsule {
            a: vec2(plate_x.0 + PLATE_RADIUS, -PLATE_RADIUS),
            b: vec2(plate_x.1 - PLATE_RADIUS, -PLATE_RADIUS),
            radius: PLATE_RADIUS,
            mu: PLATE_MU,
        },
    ];
    let regions = Regions {
        bowl: *container,
        plate_x,
        plate_top_y: 0.0,
        plate_capture_height: PLATE_CAPTURE_H,
        carry_capture: CARRY_CAPTURE,
    };
    (bounds, regions)
}

fn guard_segment(pose: &Pose2, plan: &GuardPlan) -> (Vec2, Vec2) {
    let dir = Vec2::from_angle(pose.angle + plan.angle_offset);
    (pose.pos, pose.pos + dir * plan.length)
}

fn plan_error_reason(err: &TrajectoryError) -> String {
    match err {
        TrajectoryError::FrameCollision { .. } => "frame_collision".to_string(),
        other => format!("plan: {other}"),
    }
}

pub fn run_trial(cfg: &RunConfig, trial_index: u32) -> ScoopTrialResult {
    run_trial_traced(cfg, trial_index, None, None)
}

/// Like [`run_trial`], optionally streaming a kinematic trace and a
/// particle-position dump (both at 5 ms cadence) to the given writers.
pub fn run_trial_traced(
    cfg: &RunConfig,
    trial_index: u32,
    mut trace: Option<&mut dyn std::io::Write>,
    mut particles: Option<&mut dyn std::io::Write>,
) -> ScoopTrialResult {
    let t0 = Instant::now();
    let seed = trial_seed(cfg.scenario.base_seed, &cfg.scenario.name, trial_index);
    let fail = |reason: &str, t0: Instant| {
        ScoopTrialResult::aborted(trial_index, seed, reason, t0.elapsed().as_secs_f64())
    };

    let container = cfg.container_spec();
    let cone = match cfg.cone_config() {
        Ok(c) => c,
        Err(e) => return fail(&format!("config: {e}"), t0),
    };
    if let Some(c) = &cone {
        if c.bottom_diameter > INSERTABILITY_LIMIT * container.inner_diameter {
            return fail("not_insertable", t0);
        }
    }
    let (sheet_spec, granular, traj) = match (
        cfg.sheet_spec(),
        cfg.granular_spec(),
        cfg.trajectory_params(),
    ) {
        (Ok(s), Ok(g), Ok(t)) => (s, g, t),
        _ => return fail("config: unresolved preset", t0),
    };
    let params = cfg.sim_params();

    let segments = cfg.effector.segments as usize;
    let (shape, mut blade) = match (cfg.effector.kind, &cone) {
        (EffectorKind::Cone, Some(c)) => {
            (EffectorShape::Cone(*c), cone_blade(&sheet_spec, c, segments))
        }
        (EffectorKind::Ladle, _) => {
            let b = ladle_blade(&sheet_spec, cfg.effector.ladle_length_mm, segments);
            (
                EffectorShape::Ladle {
                    shape: b.rest_shape.clone(),
                },
                b,
            )
        }
        (EffectorKind::Cone, None) => return fail("config: cone without size", t0),
    };

    let plan = match plan_scoop(&container, &shape, &traj) {
        Ok(p) => p,
        Err(e) => return fail(&plan_error_reason(&e), t0),
    };

    let model = cfg.coverage_model();
    let coverage = match &shape {
        EffectorShape::Cone(c) => {
            let press_eff = traj.press_depth.max(0.0) * sheet_spec.widening_scale;
            let w = capture::effective_width(c, press_eff, &model);
            capture::lateral_coverage(w, c.bottom_diameter, &container, container.rim_depth, &model)
        }
        EffectorShape::Ladle { shape } => {
            let w = ladle_lateral_width(shape);
            capture::lateral_coverage(w, w, &container, container.rim_depth, &model)
        }
    };

    let mut world = match fill_and_settle_with(&container, &granular, seed, &params) {
        Ok(w) => w,
        Err(SceneError::SettleDidNotConverge { .. }) => return fail("settle_timeout", t0),
        Err(e) => return fail(&format!("fill: {e}"), t0),
    };
    let (extras, regions) = scene_extras(&container);
    world.boundaries.extend(extras);

    if world.pos.is_empty() {
        // Nothing to move; the trajectory is irrelevant.
        return ScoopTrialResult {
            trial_index,
            seed,
            delivered_fraction: 0.0,
            residue_fraction: 0.0,
            spilled_fraction: 0.0,
            carried_end_fraction: 0.0,
            lateral_coverage: coverage,
            max_penetration_ratio: 0.0,
            wall_time_s: t0.elapsed().as_secs_f64(),
            aborted: false,
            reason: String::new(),
        };
    }

    let start = plan.pose_at(0.0).expect("plan starts at zero");
    blade.set_base(start.pos, start.angle, Vec2::ZERO, 0.0);
    blade.snap_to_base();
    world.sheet = Some(blade);
    if let Some(gp) = plan.guard {
        let (a, b) = guard_segment(&start, &gp);
        world.guard = Some(Guard {
            a,
            b,
            vel_a: Vec2::ZERO,
            vel_b: Vec2::ZERO,
        });
    }

    let duration = plan.duration();
    let total = duration + cfg.simulation.post_dump_settle_s;
    let dt = params.dt;
    let n_steps = (total / dt).ceil() as u64;
    let trace_every = (0.005 / dt).round().max(1.0) as u64;
    let mut prev = start;
    if let Some(w) = trace.as_deref_mut() {
        let _ = writeln!(
            w,
            "t_s,phase,base_x_mm,base_y_mm,angle_deg,tip_x_mm,tip_y_mm,ke_uj,plate_frac,carried_frac,bowl_frac,lost_frac"
        );
    }
    for k in 0..n_steps {
        let t = ((k + 1) as f64 * dt).min(duration);
        let pose = plan.pose_at(t).expect("clamped inside plan");
        let vel = (pose.pos - prev.pos) / dt;
        let ang_vel = crate::math::wrap_angle(pose.angle - prev.angle) / dt;
        let sheet = world.sheet.as_mut().expect("sheet attached");
        sheet.set_base(pose.pos, pose.angle, vel, ang_vel);
        if let Some(gp) = plan.guard {
            let (a, b) = guard_segment(&pose, &gp);
            let old = world.guard.expect("guard attached");
            world.guard = Some(Guard {
                a,
                b,
                vel_a: (a - old.a) / dt,
                vel_b: (b - old.b) / dt,
            });
        }
        if let Err(e) = world.step() {
            let reason = match e {
                EngineError::Instability { .. } => "particle_instability",
                EngineError::SheetInstability { .. } => "sheet_instability",
            };
            return fail(reason, t0);
        }
        prev = pose;
        if let Some(w) = particles.as_deref_mut() {
            if k % trace_every == 0 {
                for (i, p) in world.pos.iter().enumerate() {
                    let _ = writeln!(
                        w,
                        "{:.4},{},{:.3},{:.3},{:.3}",
                        world.sim_time, i, p.x, p.y, world.radius[i]
                    );
                }
                // Sheet nodes ride along as negative indices.
                for (i, p) in world.sheet.as_ref().unwrap().nodes.iter().enumerate() {
                    let _ = writeln!(
                        w,
                        "{:.4},{},{:.3},{:.3},0",
                        world.sim_time,
                        -(i as i64) - 1,
                        p.x,
                        p.y
                    );
                }
            }
        }
        if let Some(w) = trace.as_deref_mut() {
            if k % trace_every == 0 {
                let tip = world.sheet.as_ref().unwrap().tip();
                let snap = measure(&world, &regions);
                let (pf, bf, lf, cf) = snap.fractions();
                let _ = writeln!(
                    w,
                    "{:.4},{:?},{:.3},{:.3},{:.2},{:.3},{:.3},{:.3},{:.4},{:.4},{:.4},{:.4}",
                    world.sim_time,
                    plan.phase_at(t),
                    pose.pos.x,
                    pose.pos.y,
                    pose.angle.to_degrees(),
                    tip.x,
                    tip.y,
                    world.kinetic_energy(),
                    pf,
                    cf,
                    bf,
                    lf
                );
            }
        }
    }

    let acc = measure(&world, &regions);
    let (d_ip, r_ip, s_ip, c_ip) = acc.fractions();
    let out = capture::apply_coverage(
        ScoopOutcome {
            delivered: d_ip,
            residue: r_ip,
            spilled: s_ip,
            carried_end: c_ip,
        },
        coverage,
    );
    ScoopTrialResult {
        trial_index,
        seed,
        delivered_fraction: out.delivered,
        residue_fraction: out.residue,
        spilled_fraction: out.spilled,
        carried_end_fraction: out.carried_end,
        lateral_coverage: coverage,
        max_penetration_ratio: world.max_penetration_ratio,
        wall_time_s: t0.elapsed().as_secs_f64(),
        aborted: false,
        reason: String::new(),
    }
}

/// In-plane footprint of the ladle cup, used as its lateral width.
fn ladle_lateral_width(shape: &[Vec2]) -> f64 {
    let cup_from = (shape.len() as f64 * 0.7).round() as usize;
    let cup = &shape[cup_from.min(shape.len() - 1)..];
    let mut w = 0.0f64;
    for a in cup {
        for b in cup {
            w = w.max(a.distance(*b));
        }
    }
    w
}

// ---------------------------------------------------------------------------
// Batches

/// One emitted result row: cell metadata plus the trial outcome.
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub scenario: String,
    pub container_d: f64,
    pub effector: String,
    pub effector_d: f64,
    pub material: String,
    pub result: ScoopTrialResult,
}

pub const CSV_HEADER: &str = "scenario,container_D_mm,effector,effector_d_mm,material,trial,seed,delivered_fraction,residue_fraction,spilled_fraction,carried_end_fraction,lateral_coverage,max_penetration_ratio,aborted,reason";

/// Attach the cell metadata a result row needs for CSV emission.
pub fn result_row(cfg: &RunConfig, result: ScoopTrialResult) -> ResultRow {
    ResultRow {
        scenario: cfg.scenario.name.clone(),
        container_d: cfg.container.inner_diameter_mm,
        effector: cfg.effector_label(),
        effector_d: cfg.effector_d(),
        material: cfg
            .granular_spec()
            .map(|g| g.material_name)
            .unwrap_or_default(),
        result,
    }
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let r = &self.result;
        format!(
            "{},{:.2},{},{:.2},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.scenario,
            self.container_d,
            self.effector,
            self.effector_d,
            self.material,
            r.trial_index,
            r.seed,
            r.delivered_fraction,
            r.residue_fraction,
            r.spilled_fraction,
            r.carried_end_fraction,
            r.lateral_coverage,
            r.max_penetration_ratio,
            r.aborted,
            r.reason
        )
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Per-cell aggregate over non-aborted trials.
#[derive(Clone, Debug)]
pub struct CellSummary {
    pub scenario: String,
    pub container_d: f64,
    pub effector: String,
    pub effector_d: f64,
    pub material: String,
    pub completed: u32,
    pub mean_delivered: f64,
    pub std_delivered: f64,
    pub mean_coverage: f64,
    /// Reason shared by aborted trials, if the whole cell died one way.
    pub marker: Option<String>,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut order: Vec<String> = Vec::new();
    for row in rows {
        if !order.contains(&row.scenario) {
            order.push(row.scenario.clone());
        }
    }
    order
        .into_iter()
        .map(|name| {
            let cell: Vec<&ResultRow> = rows.iter().filter(|r| r.scenario == name).collect();
            let done: Vec<&ResultRow> = cell
                .iter()
                .copied()
                .filter(|r| !r.result.aborted)
                .collect();
            let n = done.len() as f64;
            let mean = if n > 0.0 {
                done.iter().map(|r| r.result.delivered_fraction).sum::<f64>() / n
            } else {
                0.0
            };
            let var = if n > 1.0 {
                done.iter()
                    .map(|r| (r.result.delivered_fraction - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            let cov = if n > 0.0 {
                done.iter().map(|r| r.result.lateral_coverage).sum::<f64>() / n
            } else {
                0.0
            };
            let marker = if done.is_empty() {
                cell.first().map(|r| r.result.reason.clone())
            } else {
                None
            };
            let head = cell.first().expect("cell has rows");
            CellSummary {
                scenario: name,
                container_d: head.container_d,
                effector: head.effector.clone(),
                effector_d: head.effector_d,
                material: head.material.clone(),
                completed: done.len() as u32,
                mean_delivered: mean,
                std_delivered: var.sqrt(),
                mean_coverage: cov,
                marker,
            }
        })
        .collect()
}

pub fn summary_table(cells: &[CellSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:>6} {:<8} {:>7} {:<8} {:>3} {:>10} {:>8} {:>9}\n",
        "scenario", "D_mm", "effector", "d_mm", "material", "n", "delivered", "sigma", "coverage"
    ));
    for c in cells {
        if let Some(marker) = &c.marker {
            out.push_str(&format!(
                "{:<22} {:>6.1} {:<8} {:>7.2} {:<8} {:>3} {}\n",
                c.scenario, c.container_d, c.effector, c.effector_d, c.material, 0, marker
            ));
        } else {
            out.push_str(&format!(
                "{:<22} {:>6.1} {:<8} {:>7.2} {:<8} {:>3} {:>10.4} {:>8.4} {:>9.4}\n",
                c.scenario,
                c.container_d,
                c.effector,
                c.effector_d,
                c.material,
                c.completed,
                c.mean_delivered,
                c.std_delivered,
                c.mean_coverage
            ));
        }
    }
    out
}

/// Run every configured cell. Impossible cells produce one marker row;
/// everything else produces one row per trial, in configuration order.
pub fn run_sweep(configs: &[RunConfig], jobs: usize) -> Vec<ResultRow> {
    use rayon::prelude::*;

    enum Job<'a> {
        Marker(&'a RunConfig),
        Trial(&'a RunConfig, u32),
    }

    let mut queue: Vec<Job> = Vec::new();
    for cfg in configs {
        let skip = cfg
            .cone_config()
            .ok()
            .flatten()
            .map(|c| c.bottom_diameter > INSERTABILITY_LIMIT * cfg.container.inner_diameter_mm)
            .unwrap_or(false);
        if skip {
            queue.push(Job::Marker(cfg));
        } else {
            for trial in 0..cfg.scenario.trials {
                queue.push(Job::Trial(cfg, trial));
            }
        }
    }

    let row_of = |job: &Job| -> ResultRow {
        match job {
            Job::Marker(cfg) => {
                result_row(cfg, ScoopTrialResult::aborted(0, 0, "not_insertable", 0.0))
            }
            Job::Trial(cfg, trial) => result_row(cfg, run_trial(cfg, *trial)),
        }
    };

    if jobs == 1 {
        queue.iter().map(row_of).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| queue.par_iter().map(row_of).collect())
    }
}

// ---------------------------------------------------------------------------
// Experiment presets

fn cell_toml(name: &str, bowl_d: f64, effector_fragment: &str, material: &str) -> String {
    format!(
        "[[cell]]\n\n[cell.scenario]\nname = \"{name}\"\n\n[cell.container]\ninner_diameter_mm = {bowl_d:.1}\n\n[cell.effector]\n{effector_fragment}\n\n[cell.granular]\npreset = \"{material}\"\n\n"
    )
}

fn cone_fragment(preset: Option<&str>, d: &str) -> String {
    match preset {
        Some(p) => format!("kind = \"cone\"\npreset = \"{p}\"\nbottom_diameter_mm = {d}"),
        None => format!("kind = \"cone\"\nbottom_diameter_mm = {d}"),
    }
}

/// The shipped experiment matrices as a matrix-file document.
pub fn experiment_matrix_toml(which: u8) -> String {
    let mut out = String::new();
    match which {
        1 => {
            for &bowl in &[110.0, 93.0, 80.0, 67.0] {
                for d in ["90.0", "80.0", "70.71"] {
                    let label = d.trim_end_matches(".0");
                    out.push_str(&cell_toml(
                        &format!("exp1_D{bowl:.0}_d{label}"),
                        bowl,
                        &cone_fragment(None, d),
                        "flour",
                    ));
                }
            }
        }
        2 => {
            for &bowl in &[83.0, 67.0] {
                let d = if bowl > 80.0 { "80.0" } else { "70.71" };
                out.push_str(&cell_toml(
                    &format!("exp2_D{bowl:.0}_pp"),
                    bowl,
                    &cone_fragment(None, d),
                    "flour",
                ));
                out.push_str(&cell_toml(
                    &format!("exp2_D{bowl:.0}_sus304"),
                    bowl,
                    &cone_fragment(Some("sus304_sheet"), d),
                    "flour",
                ));
                out.push_str(&cell_toml(
                    &format!("exp2_D{bowl:.0}_ladle"),
                    bowl,
                    "kind = \"ladle\"",
                    "flour",
                ));
            }
        }
        3 => {
            for material in ["flour", "coffee", "rice"] {
                out.push_str(&cell_toml(
                    &format!("exp3_{material}"),
                    110.0,
                    &cone_fragment(None, "90.0"),
                    material,
                ));
            }
        }
        other => panic!("no experiment preset {other}"),
    }
    out
}

#[derive(Deserialize)]
struct MatrixFile {
    cell: Vec<RunConfig>,
}

pub fn parse_matrix_str(text: &str, label: &str) -> Result<Vec<RunConfig>, ConfigError> {
    let parsed: MatrixFile = toml::from_str(text).map_err(|source| ConfigError::Parse {
        path: label.to_string(),
        source: Box::new(source),
    })?;
    for cfg in &parsed.cell {
        cfg.validate()?;
    }
    Ok(parsed.cell)
}

pub fn parse_matrix_file(path: &Path) -> Result<Vec<RunConfig>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix_str(&text, &path.display().to_string())
}

pub fn experiment_matrix(which: u8) -> Vec<RunConfig> {
    parse_matrix_str(&experiment_matrix_toml(which), "builtin")
        .expect("builtin experiment matrices parse")
}
