//! `dnls`: periodic orbits, resonances, and choreographies of the discrete
//! nonlinear Schrödinger lattice.
//!
//! Exit codes: 0 success, 2 numerical failure, 3 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnls_core::bvp::{newton_solve, ConstraintSet, FreeParam, Target};
use dnls_core::choreography::{
    build_nonrotating, choreography_residual, classify_orbit, cluster_curves, frame_winding,
    orbit_label, rotation_symmetry_error, subgroup_residual, winding_number, OrbitClass,
};
use dnls_core::continuation::{
    continue_branch, detect_resonances, locate_amplitude, locate_resonance, lock_ratio_continue,
    ContinuationSettings, StopPredicate,
};
use dnls_core::floquet::{integrate_verify, monodromy, multipliers, MonodromyMethod};
use dnls_core::io::{self, RunConfig};
use dnls_core::lattice::LatticeParams;
use dnls_core::pipeline;
use dnls_core::spectral::{lyapunov_starter, mode_hypothesis_ok, normal_modes};
use dnls_core::Error;

#[derive(Parser)]
#[command(name = "dnls", version, about = "Periodic orbits and choreographies of the DNLS lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    /// Number of lattice sites.
    #[arg(long)]
    n: usize,
    /// Equilibrium amplitude a.
    #[arg(long)]
    a: f64,
    /// Wave index α of the polygonal equilibrium.
    #[arg(long, default_value_t = 1)]
    alpha: usize,
}

#[derive(Args, Clone)]
struct MeshArgs {
    /// Mesh intervals of the collocation grid.
    #[arg(long, default_value_t = 100)]
    n_intervals: usize,
    /// Collocation degree (Gauss points per interval).
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Newton tolerance (max norm).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Newton iteration cap.
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
}

#[derive(Args, Clone)]
struct StepArgs {
    #[arg(long, default_value_t = 0.01)]
    ds0: f64,
    #[arg(long, default_value_t = 1e-6)]
    ds_min: f64,
    #[arg(long, default_value_t = 0.05)]
    ds_max: f64,
    #[arg(long, default_value_t = 2000)]
    max_steps: usize,
    /// Re-mesh cadence in accepted steps (0 disables).
    #[arg(long, default_value_t = 0)]
    adapt_every: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Normal-mode table of the polygonal equilibrium (CSV: k, nu, admissible).
    Spectrum {
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Build and refine a small-amplitude starting orbit of mode k.
    Start {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        k: usize,
        /// Starter amplitude (default 1e-4·a).
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output orbit file.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Follow the family from a starting orbit until x_n(0) hits a target.
    Continue {
        /// Input orbit (a refined starter).
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        xn0_target: f64,
        #[command(flatten)]
        step: StepArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output directory (branch CSV + landed orbit).
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Main continuation in the amplitude from an orbit pinned at x_n(0),
    /// locating a resonance ratio ℓ:m.
    Locate {
        #[arg(long)]
        orbit: PathBuf,
        /// Resonance as `ell:m`, e.g. `1:10` or `-8:9`.
        #[arg(long, allow_hyphen_values = true)]
        ratio: String,
        /// Continuation direction in a (+1/-1).
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        direction: f64,
        #[arg(long)]
        a_max: Option<f64>,
        #[arg(long)]
        a_min: Option<f64>,
        #[command(flatten)]
        step: StepArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Continue a located resonant orbit with the ratio locked, stopping at
    /// amplitude targets.
    Lock {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        ratio: String,
        /// Amplitude targets to land on (repeatable).
        #[arg(long = "a-target", allow_negative_numbers = true)]
        a_targets: Vec<f64>,
        #[command(flatten)]
        step: StepArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Floquet multipliers and stability classification of an orbit.
    Floquet {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tol_unit: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol_stab: f64,
        /// Cross-check the collocation monodromy against variational integration.
        #[arg(long)]
        cross_check: bool,
        /// Multipliers CSV output (stdout if omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// A-posteriori integration check of a computed orbit.
    Verify {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, default_value_t = 100)]
        periods: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Resonance arithmetic and choreography verification of an orbit.
    Classify {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        ratio: String,
        /// Mode index override (defaults to the orbit's family index).
        #[arg(long)]
        k: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render an orbit as SVG.
    Render {
        #[arg(long)]
        orbit: PathBuf,
        /// `rotating` or `nonrotating` (the latter needs --ratio).
        #[arg(long, default_value = "rotating")]
        frame: String,
        #[arg(long)]
        ratio: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Full staged pipeline from a preset or a JSON config.
    Run {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// List shipped presets.
    Presets,
}

fn parse_ratio(s: &str) -> Result<(i64, i64), Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("ratio `{s}` is not of the form ell:m")));
    }
    let ell = parts[0]
        .parse::<i64>()
        .map_err(|e| Error::Config(format!("ratio numerator: {e}")))?;
    let m = parts[1]
        .parse::<i64>()
        .map_err(|e| Error::Config(format!("ratio denominator: {e}")))?;
    Ok((ell, m))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidLattice(_)
        | Error::Format { .. }
        | Error::UnbalancedConstraints { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Spectrum { lattice } => {
            let p = LatticeParams::from_dispersion(lattice.n, lattice.a, lattice.alpha)?;
            let spec = normal_modes(&p)?;
            let note = if mode_hypothesis_ok(&p) { "" } else { "outside-In-hypothesis" };
            println!("k,nu,admissible,note");
            for mode in &spec.modes {
                let nu = mode.nu.map(io::fmt_f64).unwrap_or_default();
                println!("{},{},{},{}", mode.k, nu, mode.admissible, note);
            }
            Ok(())
        }
        Command::Start { lattice, k, eps, mesh, out } => {
            let p = LatticeParams::from_dispersion(lattice.n, lattice.a, lattice.alpha)?;
            let eps = eps.unwrap_or(1e-4 * lattice.a);
            let starter = lyapunov_starter(&p, k, eps, mesh.n_intervals, mesh.degree)?;
            let cs = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
                .with_pin(Target::Fixed(starter.xn0));
            let (orbit, report) = newton_solve(&starter, &cs, None, mesh.tol, mesh.max_iter)?;
            write_out(&out, &io::orbit_to_json(&orbit))?;
            println!(
                "starter mode k={k}: T = {}, refined in {} iterations, residual {:.3e}",
                orbit.t_period, report.iterations, report.residual
            );
            Ok(())
        }
        Command::Continue { orbit, xn0_target, step, tol, out_dir } => {
            let start = io::read_orbit(&orbit)?;
            let cs = pipeline::start_stage_set();
            let dir = (xn0_target - start.xn0).signum();
            let mut settings = step_settings(&step, FreeParam::Xn0, dir, tol);
            settings.stop = vec![StopPredicate::Xn0Reaches(xn0_target)];
            let branch = continue_branch(&start, &cs, &settings, "start")?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.display().to_string(),
                source: e,
            })?;
            io::write_branch_csv(&out_dir.join("branch_start.csv"), &branch)?;
            io::write_orbit(&out_dir.join("landed.json"), &branch.last().orbit)?;
            println!(
                "{} points, status {:?}, landed at x_n(0) = {}",
                branch.points.len(),
                branch.status,
                branch.last().monitors.xn0
            );
            Ok(())
        }
        Command::Locate { orbit, ratio, direction, a_max, a_min, step, tol, out_dir } => {
            let start = io::read_orbit(&orbit)?;
            let (ell, m) = parse_ratio(&ratio)?;
            let cs = pipeline::main_stage_set(start.xn0);
            let mut settings = step_settings(&step, FreeParam::Amplitude, direction, tol);
            settings.stop.push(StopPredicate::RatioReaches(ell as f64 / m as f64));
            if let Some(a) = a_max {
                settings.stop.push(StopPredicate::AmplitudeReaches(a));
            }
            if let Some(a) = a_min {
                settings.stop.push(StopPredicate::AmplitudeReaches(a));
            }
            let branch = continue_branch(&start, &cs, &settings, "main")?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.display().to_string(),
                source: e,
            })?;
            io::write_branch_csv(&out_dir.join("branch_main.csv"), &branch)?;
            let hits = detect_resonances(&branch, m.max(32));
            let rows: Vec<(dnls_core::continuation::ResonanceHit, String)> = hits
                .iter()
                .map(|h| (*h, String::new()))
                .collect();
            io::write_events_csv(&out_dir.join("events.csv"), &rows)?;
            let located = if (branch.last().monitors.ratio - ell as f64 / m as f64).abs() <= 1e-10 {
                branch.last().orbit.clone()
            } else {
                locate_resonance(&branch, &cs, &settings, ell, m)?
            };
            let mon = located.monitors();
            io::write_orbit(&out_dir.join(format!("orbit_{ell}_{m}.json")), &located)?;
            println!(
                "located {ell}:{m} at a = {}, T = {}, ratio = {}",
                mon.a, mon.t_period, mon.ratio
            );
            Ok(())
        }
        Command::Lock { orbit, ratio, a_targets, step, tol, out_dir } => {
            let start = io::read_orbit(&orbit)?;
            let (ell, m) = parse_ratio(&ratio)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.display().to_string(),
                source: e,
            })?;
            let a0 = start.params.a;
            let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
            let up: Vec<f64> = a_targets.iter().copied().filter(|a| *a > a0).collect();
            let down: Vec<f64> = a_targets.iter().copied().filter(|a| *a <= a0).collect();
            if !up.is_empty() {
                groups.push((1.0, up));
            }
            if !down.is_empty() {
                groups.push((-1.0, down));
            }
            for (dir, mut list) in groups {
                list.sort_by(|x, y| {
                    if dir > 0.0 {
                        x.total_cmp(y)
                    } else {
                        y.total_cmp(x)
                    }
                });
                let extreme = *list.last().unwrap();
                let mut settings = step_settings(&step, FreeParam::Amplitude, dir, tol);
                settings.stop = vec![StopPredicate::AmplitudeReaches(extreme)];
                let branch = lock_ratio_continue(&start, ell, m, &settings)?;
                let tag = if dir > 0.0 { "up" } else { "down" };
                io::write_branch_csv(&out_dir.join(format!("branch_lock_{ell}_{m}_{tag}.csv")), &branch)?;
                let cs_locked = ConstraintSet::basic(&[
                    FreeParam::Period,
                    FreeParam::Amplitude,
                    FreeParam::P1,
                    FreeParam::P2,
                ])
                .with_ratio(Target::Fixed(ell as f64 / m as f64));
                for a_target in list {
                    let found = if (branch.last().monitors.a - a_target).abs() <= 1e-12 {
                        Ok(branch.last().orbit.clone())
                    } else {
                        locate_amplitude(&branch, &cs_locked, &settings, a_target)
                    };
                    match found {
                        Ok(o) => {
                            let path = out_dir.join(format!("orbit_{ell}_{m}_a{a_target:.6}.json"));
                            io::write_orbit(&path, &o)?;
                            println!("a = {a_target}: T = {}, ratio = {}", o.t_period, o.monitors().ratio);
                        }
                        Err(e) => println!("a = {a_target}: {e}"),
                    }
                }
            }
            Ok(())
        }
        Command::Floquet { orbit, tol_unit, tol_stab, cross_check, out } => {
            let o = io::read_orbit(&orbit)?;
            let mono = monodromy(&o, MonodromyMethod::Collocation)?;
            if cross_check {
                let mv = monodromy(&o, MonodromyMethod::Variational)?;
                let gap = (mono.clone() - mv).amax();
                println!("monodromy cross-check: max entry difference {:.3e}", gap);
            }
            let spec = multipliers(&mono, tol_unit, tol_stab)?;
            let mut csv = String::from("re,im,modulus\n");
            for l in &spec.multipliers {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    io::fmt_f64(l.re),
                    io::fmt_f64(l.im),
                    io::fmt_f64(l.norm())
                ));
            }
            match out {
                Some(path) => write_out(&path, &csv)?,
                None => print!("{csv}"),
            }
            println!(
                "classification: {:?} (n_trivial = {}, n_unstable = {})",
                spec.classification, spec.n_trivial, spec.n_unstable
            );
            Ok(())
        }
        Command::Verify { orbit, periods, tol } => {
            let o = io::read_orbit(&orbit)?;
            let rep = integrate_verify(&o, periods, tol)?;
            println!(
                "{}",
                serde_json::json!({
                    "n_periods": rep.n_periods,
                    "max_distance": rep.max_distance,
                    "de_rel": rep.de_rel,
                    "da_rel": rep.da_rel,
                })
            );
            Ok(())
        }
        Command::Classify { orbit, ratio, k, out } => {
            let o = io::read_orbit(&orbit)?;
            let (ell, m) = parse_ratio(&ratio)?;
            let n = o.params.n;
            let k = k.or(o.mode_k).ok_or_else(|| {
                Error::Config("orbit carries no mode index; pass --k".into())
            })?;
            let label = orbit_label(n, k, o.params.alpha, ell, m)?;
            let trace = build_nonrotating(&o, &label, 8192)?;
            let class = classify_orbit(n, k, o.params.alpha, ell, m)?;
            let residual = match class {
                OrbitClass::Full => choreography_residual(&trace),
                OrbitClass::Partial { curves } => subgroup_residual(&trace, curves),
            };
            let winding = winding_number(&trace, trace.centroid(n - 1))?;
            let cls = io::ClassificationFile::new(
                class,
                n,
                winding,
                residual,
                rotation_symmetry_error(&trace),
                label,
            );
            let mut v = serde_json::to_value(&cls).expect("classification");
            v["geometric_curves"] =
                serde_json::json!(cluster_curves(&trace, 1e-4 * o.params.a));
            v["frame_winding"] = serde_json::json!(frame_winding(&o, 4096).ok());
            let text = serde_json::to_string_pretty(&v).expect("classification");
            match out {
                Some(path) => write_out(&path, &text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Render { orbit, frame, ratio, out } => {
            let o = io::read_orbit(&orbit)?;
            let svg = match frame.as_str() {
                "rotating" => dnls_core::render::render_rotating_svg(&o, 2048)?,
                "nonrotating" => {
                    let ratio = ratio.ok_or_else(|| {
                        Error::Config("--ratio ell:m is required for the non-rotating frame".into())
                    })?;
                    let (ell, m) = parse_ratio(&ratio)?;
                    let k = o.mode_k.unwrap_or(1);
                    let label = orbit_label(o.params.n, k, o.params.alpha, ell, m)?;
                    let trace = build_nonrotating(&o, &label, 8192)?;
                    dnls_core::render::render_nonrotating_svg(&trace)
                }
                other => return Err(Error::Config(format!("unknown frame `{other}`"))),
            };
            write_out(&out, &svg)?;
            Ok(())
        }
        Command::Run { preset, config, out_dir } => {
            let text = match (&preset, &config) {
                (Some(name), None) => pipeline::preset(name)
                    .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?
                    .to_string(),
                (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })?,
                _ => return Err(Error::Config("pass exactly one of --preset/--config".into())),
            };
            let cfg = RunConfig::from_json(&text)?;
            let out = pipeline::run_and_write(&cfg, &out_dir)?;
            for s in &out.stages {
                println!(
                    "[{}] {}: {}",
                    if s.status == pipeline::StageStatus::Ok { "ok" } else { "failed" },
                    s.name,
                    s.detail
                );
            }
            for o in &out.orbits {
                let m = o.orbit.monitors();
                println!(
                    "orbit {}: a = {:.6}, T = {:.6}, T/T0 = {:.9}, stability {:?}",
                    o.name,
                    m.a,
                    m.t_period,
                    m.ratio,
                    o.floquet.as_ref().map(|f| f.classification)
                );
            }
            if out.all_ok() {
                Ok(())
            } else {
                let failed: Vec<String> = out
                    .stages
                    .iter()
                    .filter(|s| s.status != pipeline::StageStatus::Ok)
                    .map(|s| s.name.clone())
                    .collect();
                Err(Error::Stage(failed.join(", ")))
            }
        }
        Command::Presets => {
            for name in pipeline::PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn step_settings(step: &StepArgs, primary: FreeParam, direction: f64, tol: f64) -> ContinuationSettings {
    let mut s = ContinuationSettings::new(primary, direction);
    s.ds0 = step.ds0;
    s.ds_min = step.ds_min;
    s.ds_max = step.ds_max;
    s.max_steps = step.max_steps;
    s.adapt_every = step.adapt_every;
    s.tol = tol;
    s
}
