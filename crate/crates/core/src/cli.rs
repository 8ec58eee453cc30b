//! Command-line surface.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use crate::config::{EffectorKind, RunConfig};
use crate::cone::{self, ConeConfig};
use crate::harness::{self, ResultRow};
use crate::sheet::ladle_blade;
use crate::trajectory::{plan_scoop, EffectorShape};

#[derive(Parser)]
#[command(
    name = "scoopsim",
    about = "Cone end-effector design calculator and 2D scooping simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the cone design table for a sheet radius, optionally checked
    /// against a container diameter.
    Cone {
        #[arg(long, default_value_t = 50.0)]
        sheet_radius_mm: f64,
        #[arg(long)]
        container_diameter_mm: Option<f64>,
    },
    /// Run a single trial from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Trial index within the scenario (decides the seed).
        #[arg(long, default_value_t = 0)]
        trial: u32,
        /// Override the scenario's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write a kinematic trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write a particle position dump (t,index,x,y,r rows) here.
        #[arg(long)]
        particles: Option<PathBuf>,
        /// Write the one-row results CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment preset or a matrix file of cells.
    Sweep {
        /// Builtin experiment preset (1, 2 or 3).
        #[arg(long)]
        experiment: Option<u8>,
        /// Matrix file with [[cell]] entries.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (default: $SCOOPSIM_OUT_DIR or ./results).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sample the planned blade path for a config without simulating.
    ExportPlan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        step_ms: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn cli_main<I>(argv: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = String>,
{
    match Cli::parse_from(argv).cmd {
        Cmd::Cone {
            sheet_radius_mm,
            container_diameter_mm,
        } => cone_table(sheet_radius_mm, container_diameter_mm),
        Cmd::Run {
            config,
            trial,
            seed,
            trace,
            particles,
            out,
        } => run_one(
            &config,
            trial,
            seed,
            trace.as_deref(),
            particles.as_deref(),
            out.as_deref(),
        ),
        Cmd::Sweep {
            experiment,
            matrix,
            jobs,
            out_dir,
        } => sweep(experiment, matrix.as_deref(), jobs, out_dir),
        Cmd::ExportPlan {
            config,
            step_ms,
            out,
        } => export_plan(&config, step_ms, out.as_deref()),
    }
}

fn cone_table(sheet_radius: f64, container_d: Option<f64>) -> anyhow::Result<()> {
    if sheet_radius <= 0.0 {
        bail!("sheet radius must be > 0 mm");
    }
    println!("sheet radius R = {sheet_radius:.1} mm");
    match container_d {
        None => {
            println!("{:>9}  {:>11}  {:>10}", "slide_deg", "bottom_d_mm", "vertex_deg");
            for theta_deg in [0.0f64, 36.0, 72.0, 105.0] {
                let c = ConeConfig::from_slide_angle(sheet_radius, theta_deg.to_radians())?;
                println!(
                    "{:>9.1}  {:>11.2}  {:>10.2}",
                    theta_deg,
                    c.bottom_diameter,
                    c.vertex_angle.to_degrees()
                );
            }
        }
        Some(d_cont) => {
            if d_cont <= 0.0 {
                bail!("container diameter must be > 0 mm");
            }
            println!(
                "{:>9}  {:>11}  {:>10}  {:>16}",
                "slide_deg", "bottom_d_mm", "vertex_deg", "rigid_insertable"
            );
            for theta_deg in [0.0f64, 36.0, 72.0, 105.0] {
                let c = ConeConfig::from_slide_angle(sheet_radius, theta_deg.to_radians())?;
                let verdict = cone::insertability(&c, d_cont)?;
                println!(
                    "{:>9.1}  {:>11.2}  {:>10.2}  {:>16}",
                    theta_deg,
                    c.bottom_diameter,
                    c.vertex_angle.to_degrees(),
                    if verdict.rigid_insertable { "yes" } else { "no" }
                );
            }
            let min_theta = cone::min_insertion_angle(sheet_radius, d_cont)?;
            println!(
                "container D = {:.1} mm: min_slide_angle_deg = {:.2}",
                d_cont,
                min_theta.to_degrees()
            );
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    Ok(RunConfig::from_path(path)?)
}

fn run_one(
    config: &Path,
    trial: u32,
    seed: Option<u64>,
    trace: Option<&Path>,
    particles: Option<&Path>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.scenario.base_seed = s;
    }
    let open = |p: Option<&Path>| -> anyhow::Result<Option<fs::File>> {
        p.map(|path| {
            fs::File::create(path)
                .with_context(|| format!("cannot create output file {}", path.display()))
        })
        .transpose()
    };
    let result = if trace.is_none() && particles.is_none() {
        harness::run_trial(&cfg, trial)
    } else {
        let mut tf = open(trace)?;
        let mut pf = open(particles)?;
        let r = harness::run_trial_traced(
            &cfg,
            trial,
            tf.as_mut().map(|f| f as &mut dyn std::io::Write),
            pf.as_mut().map(|f| f as &mut dyn std::io::Write),
        );
        if let Some(f) = tf.as_mut() {
            f.flush()?;
        }
        if let Some(f) = pf.as_mut() {
            f.flush()?;
        }
        r
    };
    let row = harness::result_row(&cfg, result);
    let r = &row.result;
    if r.aborted {
        println!("{}: trial {} ABORTED ({})", row.scenario, r.trial_index, r.reason);
    } else {
        println!(
            "{}: trial {} seed {} delivered {:.4} residue {:.4} spilled {:.4} carried {:.4} coverage {:.4} ({:.1}s wall)",
            row.scenario,
            r.trial_index,
            r.seed,
            r.delivered_fraction,
            r.residue_fraction,
            r.spilled_fraction,
            r.carried_end_fraction,
            r.lateral_coverage,
            r.wall_time_s
        );
    }
    if let Some(path) = out {
        let csv = harness::results_csv(std::slice::from_ref(&row));
        fs::write(path, csv)
            .with_context(|| format!("cannot write results to {}", path.display()))?;
    }
    if row.result.aborted {
        bail!("trial aborted: {}", row.result.reason);
    }
    Ok(())
}

fn sweep(
    experiment: Option<u8>,
    matrix: Option<&Path>,
    jobs: usize,
    out_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    let configs = match (experiment, matrix) {
        (Some(n), None) => {
            if !(1..=3).contains(&n) {
                bail!("experiment preset must be 1, 2 or 3");
            }
            harness::experiment_matrix(n)
        }
        (None, Some(path)) => harness::parse_matrix_file(path)?,
        _ => bail!("give exactly one of --experiment or --matrix"),
    };
    let dir = out_dir
        .or_else(|| std::env::var_os("SCOOPSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;

    let rows: Vec<ResultRow> = harness::run_sweep(&configs, jobs.max(1));
    let csv = harness::results_csv(&rows);
    let cells = harness::summarize(&rows);
    let table = harness::summary_table(&cells);

    let csv_path = dir.join("results.csv");
    fs::write(&csv_path, &csv)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, &table)
        .with_context(|| format!("cannot write {}", summary_path.display()))?;

    print!("{table}");
    println!("rows: {} -> {}", rows.len(), csv_path.display());
    Ok(())
}

fn export_plan(config: &Path, step_ms: f64, out: Option<&Path>) -> anyhow::Result<()> {
    if step_ms <= 0.0 {
        bail!("step_ms must be > 0");
    }
    let cfg = load_config(config)?;
    let container = cfg.container_spec();
    let shape = match (cfg.effector.kind, cfg.cone_config()?) {
        (EffectorKind::Cone, Some(c)) => EffectorShape::Cone(c),
        (EffectorKind::Ladle, _) => {
            let blade = ladle_blade(
                &cfg.sheet_spec()?,
                cfg.effector.ladle_length_mm,
                cfg.effector.segments as usize,
            );
            EffectorShape::Ladle {
                shape: blade.rest_shape,
            }
        }
        (EffectorKind::Cone, None) => bail!("cone effector without a size"),
    };
    let plan = plan_scoop(&container, &shape, &cfg.trajectory_params()?)?;
    let mut text = String::from("t_s,x_mm,y_mm,angle_deg,phase\n");
    let dt = step_ms / 1000.0;
    let n = (plan.duration() / dt).ceil() as u64;
    for k in 0..=n {
        let t = (k as f64 * dt).min(plan.duration());
        let pose = plan.pose_at(t).expect("sampled inside duration");
        text.push_str(&format!(
            "{:.4},{:.3},{:.3},{:.3},{:?}\n",
            t,
            pose.pos.x,
            pose.pos.y,
            pose.angle.to_degrees(),
            plan.phase_at(t)
        ));
    }
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write plan to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
