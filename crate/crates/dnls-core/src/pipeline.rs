//! The staged end-to-end run: spectrum → starter → follow to the `x_n(0)`
//! target → main continuation in `a` monitoring `T/T₀` → locate and lock
//! resonances → stability, verification, classification, rendering.

use std::path::Path;

use crate::bvp::{newton_solve, ConstraintSet, FreeParam, RotatingOrbit, Target};
use crate::choreography::{
    build_nonrotating, choreography_residual, classify_orbit, cluster_curves,
    resonance_admissible, rotation_symmetry_error, subgroup_residual, winding_number,
    NonrotatingTrace, OrbitClass, ResonanceLabel,
};
use crate::continuation::{
    continue_branch, locate_amplitude, locate_resonance, Branch, BranchStatus,
    ContinuationSettings, ResonanceHit, StopPredicate,
};
use crate::floquet::{integrate_verify, monodromy, multipliers, FloquetSpectrum, MonodromyMethod, VerifyReport};
use crate::io::{ModeSelect, ResonanceTarget, RunConfig};
use crate::spectral::{lyapunov_starter, normal_modes, ModeSpectrum};
use crate::{Error, Result};

/// Everything known about one located orbit after post-processing.
#[derive(Debug, Clone)]
pub struct LocatedOrbit {
    /// e.g. `res_1_10` or `lock_1_10_a0.647930`
    pub name: String,
    pub orbit: RotatingOrbit,
    pub label: Option<ResonanceLabel>,
    pub class: Option<OrbitClass>,
    pub geometric_curves: Option<usize>,
    pub floquet: Option<FloquetSpectrum>,
    pub verify: Option<VerifyReport>,
    pub choreography_residual: Option<f64>,
    pub subgroup_residual: Option<f64>,
    pub winding: Option<i64>,
    /// Winding of the rotating-frame loop of site `n` about the origin.
    pub frame_winding: Option<i64>,
    pub symmetry_error: Option<f64>,
    pub trace: Option<NonrotatingTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mode_k: usize,
    pub spectrum: ModeSpectrum,
    pub stages: Vec<StageReport>,
    pub start_branch: Option<Branch>,
    pub main_branch: Option<Branch>,
    pub lock_branches: Vec<(String, Branch)>,
    pub orbits: Vec<LocatedOrbit>,
    pub events: Vec<ResonanceHit>,
}

impl RunOutput {
    pub fn all_ok(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Ok)
    }

    pub fn orbit(&self, name: &str) -> Option<&LocatedOrbit> {
        self.orbits.iter().find(|o| o.name == name)
    }
}

fn stage_ok(stages: &mut Vec<StageReport>, name: &str, detail: impl Into<String>) {
    stages.push(StageReport {
        name: name.into(),
        status: StageStatus::Ok,
        detail: detail.into(),
    });
}

fn stage_failed(stages: &mut Vec<StageReport>, name: &str, detail: impl Into<String>) {
    stages.push(StageReport {
        name: name.into(),
        status: StageStatus::Failed,
        detail: detail.into(),
    });
}

fn settings_from(config: &RunConfig, primary: FreeParam, direction: f64) -> ContinuationSettings {
    let mut s = ContinuationSettings::new(primary, direction);
    s.ds0 = config.continuation.ds0;
    s.ds_min = config.continuation.ds_min;
    s.ds_max = config.continuation.ds_max;
    s.max_steps = config.continuation.max_steps;
    s.adapt_every = config.continuation.adapt_every;
    s.period_metric_weight = config.continuation.period_metric_weight;
    s.tol = config.solver.tol;
    s.max_iter = config.solver.max_iter;
    s
}

/// Candidate mode indices for the starting stage: admissible modes, with those
/// whose resonance arithmetic matches a requested target tried first.
fn candidate_modes(config: &RunConfig, spectrum: &ModeSpectrum) -> Vec<usize> {
    let admissible = spectrum.admissible_ks();
    match config.mode_k {
        ModeSelect::K(k) => admissible.into_iter().filter(|kk| *kk == k).collect(),
        ModeSelect::Scan => {
            // both families of the ±k Fourier block can carry either
            // effective shift, so k and n−k are equally promising
            let compatible = |k: usize| {
                config.resonances.iter().any(|r| {
                    let direct = resonance_admissible(config.n, k, config.alpha, r.ell, r.m)
                        .map(|o| o.is_some())
                        .unwrap_or(false);
                    let mirror =
                        resonance_admissible(config.n, config.n - k, config.alpha, r.ell, r.m)
                            .map(|o| o.is_some())
                            .unwrap_or(false);
                    direct || mirror
                })
            };
            let mut first: Vec<usize> = admissible.iter().copied().filter(|k| compatible(*k)).collect();
            let rest: Vec<usize> = admissible.into_iter().filter(|k| !compatible(*k)).collect();
            first.extend(rest);
            first
        }
    }
}

/// The start constraint stage: phase + rotation lock with `x_n⁰` tracked,
/// free `{T, x_n⁰, p₁, p₂}`.
pub fn start_stage_set() -> ConstraintSet {
    ConstraintSet::basic(&[
        FreeParam::Period,
        FreeParam::Xn0,
        FreeParam::P1,
        FreeParam::P2,
    ])
    .with_pin(Target::Tracked)
}

/// The main constraint stage: `x_n⁰` pinned, free `{T, a, p₁, p₂}`.
pub fn main_stage_set(xn0: f64) -> ConstraintSet {
    ConstraintSet::basic(&[
        FreeParam::Period,
        FreeParam::Amplitude,
        FreeParam::P1,
        FreeParam::P2,
    ])
    .with_pin(Target::Fixed(xn0))
}

/// Post-process one located orbit: stability, verification, resonance label,
/// classification, and the non-rotating trace.
pub fn process_orbit(
    name: &str,
    orbit: &RotatingOrbit,
    ell: i64,
    m: i64,
    config: &RunConfig,
) -> LocatedOrbit {
    let mut rec = LocatedOrbit {
        name: name.into(),
        orbit: orbit.clone(),
        label: None,
        class: None,
        geometric_curves: None,
        floquet: None,
        verify: None,
        choreography_residual: None,
        subgroup_residual: None,
        winding: None,
        frame_winding: None,
        symmetry_error: None,
        trace: None,
    };

    if let Ok(mono) = monodromy(orbit, MonodromyMethod::Collocation) {
        if let Ok(spec) = multipliers(&mono, config.stability.tol_unit, config.stability.tol_stab)
        {
            rec.floquet = Some(spec);
        }
    }
    if let Some(f) = &rec.floquet {
        if f.classification.is_stable_like() && config.verify_periods > 0 {
            rec.verify = integrate_verify(orbit, config.verify_periods, 1e-10).ok();
        }
    }

    // Resolve the effective mode label: the stored family index or its
    // conjugate, whichever the non-rotating geometry verifies. Full labels are
    // checked by the choreography identity over all sites, partial ones over
    // their site subgroup.
    let n = orbit.params.n;
    let alpha = orbit.params.alpha;
    let k_family = orbit.mode_k.unwrap_or(1).clamp(1, n - 1);
    let mut candidates: Vec<usize> = vec![k_family, n - k_family];
    candidates.dedup();
    // the geometric curve count arbitrates between the candidates (a partial
    // label with as many curves as sites has a vacuous subgroup identity)
    let mut geo: Option<usize> = None;
    let mut best: Option<(bool, f64, OrbitClass, ResonanceLabel, NonrotatingTrace)> = None;
    for k in candidates {
        let label = match crate::choreography::orbit_label(n, k, alpha, ell, m) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let trace = match build_nonrotating(orbit, &label, 8192) {
            Ok(t) => t,
            Err(_) => continue,
        };
        if geo.is_none() {
            geo = Some(cluster_curves(&trace, 1e-4 * orbit.params.a));
        }
        let class = classify_orbit(n, k, alpha, ell, m).expect("coprime checked");
        let curves = match class {
            OrbitClass::Full => 1,
            OrbitClass::Partial { curves } => curves,
        };
        let geometry_matches = Some(curves) == geo;
        let res = match class {
            OrbitClass::Full => choreography_residual(&trace),
            OrbitClass::Partial { curves } => subgroup_residual(&trace, curves),
        };
        let better = match &best {
            None => true,
            Some((gm, b, _, _, _)) => {
                if geometry_matches != *gm {
                    geometry_matches
                } else {
                    res < *b
                }
            }
        };
        if better {
            best = Some((geometry_matches, res, class, label, trace));
        }
    }

    if let Some((_, _, class, label, mut trace)) = best {
        // refine sampling until the verifying residual stabilizes
        let residual_of = |t: &NonrotatingTrace| match class {
            OrbitClass::Full => choreography_residual(t),
            OrbitClass::Partial { curves } => subgroup_residual(t, curves),
        };
        let mut res = residual_of(&trace);
        let mut samples = 8192usize;
        while samples < 32768 {
            samples *= 2;
            let finer = match build_nonrotating(orbit, &label, samples) {
                Ok(t) => t,
                Err(_) => break,
            };
            let res2 = residual_of(&finer);
            let stable = (res - res2).abs() <= 0.05 * res2.max(1e-14);
            trace = finer;
            res = res2;
            if stable {
                break;
            }
        }
        rec.class = Some(class);
        rec.choreography_residual = Some(match class {
            OrbitClass::Full => res,
            OrbitClass::Partial { .. } => choreography_residual(&trace),
        });
        if let OrbitClass::Partial { curves } = class {
            rec.subgroup_residual = Some(subgroup_residual(&trace, curves));
        }
        rec.symmetry_error = Some(rotation_symmetry_error(&trace));
        rec.geometric_curves = Some(cluster_curves(&trace, 1e-4 * orbit.params.a));
        let slot = n - 1;
        rec.winding = winding_number(&trace, trace.centroid(slot)).ok();
        rec.frame_winding = crate::choreography::frame_winding(orbit, 4096).ok();
        rec.label = Some(label);
        rec.trace = Some(trace);
    }
    rec
}

/// Run the full pipeline for one configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let params = crate::lattice::LatticeParams::from_dispersion(config.n, config.a_init, config.alpha)?;
    let spectrum = normal_modes(&params)?;
    let candidates = candidate_modes(config, &spectrum);
    if candidates.is_empty() {
        return Err(Error::Config(format!(
            "no admissible mode matches the request at a = {}",
            config.a_init
        )));
    }

    let mut last_err: Option<Error> = None;
    for k in candidates {
        match run_with_mode(config, &spectrum, k) {
            Ok(out) => return Ok(out),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Config("mode scan exhausted".into())))
}

/// Candidate mode indices in scan order for a configuration (admissible
/// modes, resonance-arithmetic-compatible candidates first).
pub fn scan_candidates(config: &RunConfig) -> Result<Vec<usize>> {
    let params =
        crate::lattice::LatticeParams::from_dispersion(config.n, config.a_init, config.alpha)?;
    let spectrum = normal_modes(&params)?;
    let mut cfg = config.clone();
    cfg.mode_k = ModeSelect::Scan;
    Ok(candidate_modes(&cfg, &spectrum))
}

/// Run the pipeline with an explicit starting mode (used by mode scans).
pub fn run_with_mode_k(config: &RunConfig, k: usize) -> Result<RunOutput> {
    config.validate()?;
    let params =
        crate::lattice::LatticeParams::from_dispersion(config.n, config.a_init, config.alpha)?;
    let spectrum = normal_modes(&params)?;
    if !spectrum.admissible_ks().contains(&k) {
        return Err(Error::InadmissibleMode { k });
    }
    run_with_mode(config, &spectrum, k)
}

fn run_with_mode(config: &RunConfig, spectrum: &ModeSpectrum, k: usize) -> Result<RunOutput> {
    let params = spectrum.params;
    let mut stages = Vec::new();
    let mut out_orbits = Vec::new();
    let mut lock_branches = Vec::new();
    let mut events = Vec::new();

    // starter + square refinement
    let eps = config.eps.unwrap_or(1e-4 * config.a_init);
    let starter = lyapunov_starter(&params, k, eps, config.solver.n_intervals, config.solver.degree)?;
    let refine_cs = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
        .with_pin(Target::Fixed(starter.xn0));
    let (refined, rep) = newton_solve(&starter, &refine_cs, None, config.solver.tol, config.solver.max_iter)?;
    stage_ok(
        &mut stages,
        "starter",
        format!("mode k={k}, eps={eps:.3e}, {} Newton iterations", rep.iterations),
    );

    // stage 1: follow the family until x_n(0) reaches the target
    let cs_start = start_stage_set();
    let dir = (config.xn0_target - refined.xn0).signum();
    let mut settings = settings_from(config, FreeParam::Xn0, dir);
    settings.stop = vec![StopPredicate::Xn0Reaches(config.xn0_target)];
    let start_branch = continue_branch(&refined, &cs_start, &settings, "start")?;
    let landed = match &start_branch.status {
        BranchStatus::StopHit(_) => start_branch.last().orbit.clone(),
        other => {
            stage_failed(
                &mut stages,
                "start",
                format!("did not reach x_n(0) = {} ({:?})", config.xn0_target, other),
            );
            return Err(Error::Stalled {
                steps: start_branch.points.len(),
                ds_min: settings.ds_min,
            });
        }
    };
    stage_ok(
        &mut stages,
        "start",
        format!(
            "{} points to x_n(0) = {}",
            start_branch.points.len(),
            config.xn0_target
        ),
    );

    // stage 2: main continuation in the amplitude
    let cs_main = main_stage_set(config.xn0_target);
    let mut settings = settings_from(config, FreeParam::Amplitude, config.main_direction);
    let r_start = landed.monitors().ratio;
    let extreme = config
        .resonances
        .iter()
        .map(|r| r.ell as f64 / r.m as f64)
        .max_by(|a, b| (a - r_start).abs().total_cmp(&(b - r_start).abs()));
    if let Some(r) = extreme {
        settings.stop.push(StopPredicate::RatioReaches(r));
    }
    if let Some(a) = config.a_max {
        settings.stop.push(StopPredicate::AmplitudeReaches(a));
    }
    if let Some(a) = config.a_min {
        settings.stop.push(StopPredicate::AmplitudeReaches(a));
    }
    let main_branch = continue_branch(&landed, &cs_main, &settings, "main")?;
    stage_ok(
        &mut stages,
        "main",
        format!(
            "{} points, a in [{:.6}, {:.6}], ratio in [{:.6}, {:.6}] ({:?})",
            main_branch.points.len(),
            main_branch.points.iter().map(|p| p.monitors.a).fold(f64::INFINITY, f64::min),
            main_branch.points.iter().map(|p| p.monitors.a).fold(f64::NEG_INFINITY, f64::max),
            main_branch.points.iter().map(|p| p.monitors.ratio).fold(f64::INFINITY, f64::min),
            main_branch.points.iter().map(|p| p.monitors.ratio).fold(f64::NEG_INFINITY, f64::max),
            main_branch.status,
        ),
    );
    events.extend(crate::continuation::detect_resonances(&main_branch, config.max_den));

    // stage 3: locate each requested resonance, then the ratio-locked branches
    for target in &config.resonances {
        match locate_or_landed(&main_branch, &cs_main, &settings_from(config, FreeParam::Amplitude, 1.0), target) {
            Ok(located) => {
                let name = format!("res_{}_{}", target.ell, target.m);
                stage_ok(
                    &mut stages,
                    &format!("locate {}:{}", target.ell, target.m),
                    format!("a = {:.6}, T = {:.6}", located.params.a, located.t_period),
                );
                out_orbits.push(process_orbit(&name, &located, target.ell, target.m, config));

                if !target.lock_a_targets.is_empty() {
                    match run_locks(config, &located, target, &mut stages) {
                        Ok((branches, orbits)) => {
                            lock_branches.extend(branches);
                            out_orbits.extend(orbits);
                        }
                        Err(e) => stage_failed(
                            &mut stages,
                            &format!("lock {}:{}", target.ell, target.m),
                            e.to_string(),
                        ),
                    }
                }
            }
            Err(e) => {
                stage_failed(
                    &mut stages,
                    &format!("locate {}:{}", target.ell, target.m),
                    e.to_string(),
                );
            }
        }
    }

    Ok(RunOutput {
        mode_k: k,
        spectrum: spectrum.clone(),
        stages,
        start_branch: Some(start_branch),
        main_branch: Some(main_branch),
        lock_branches,
        orbits: out_orbits,
        events,
    })
}

/// Use the branch's landing point when it already sits on the target ratio,
/// otherwise locate the bracketed crossing.
fn locate_or_landed(
    branch: &Branch,
    cs: &ConstraintSet,
    settings: &ContinuationSettings,
    target: &ResonanceTarget,
) -> Result<RotatingOrbit> {
    let want = target.ell as f64 / target.m as f64;
    let last = branch.last();
    if (last.monitors.ratio - want).abs() <= 1e-10 {
        return Ok(last.orbit.clone());
    }
    locate_resonance(branch, cs, settings, target.ell, target.m)
}

fn run_locks(
    config: &RunConfig,
    located: &RotatingOrbit,
    target: &ResonanceTarget,
    stages: &mut Vec<StageReport>,
) -> Result<(Vec<(String, Branch)>, Vec<LocatedOrbit>)> {
    let mut branches = Vec::new();
    let mut orbits = Vec::new();
    let a0 = located.params.a;
    let mut up: Vec<f64> = target.lock_a_targets.iter().copied().filter(|a| *a > a0).collect();
    let mut down: Vec<f64> = target.lock_a_targets.iter().copied().filter(|a| *a <= a0).collect();
    up.sort_by(f64::total_cmp);
    down.sort_by(|x, y| y.total_cmp(x));

    for (dir, list) in [(1.0, up), (-1.0, down)] {
        if list.is_empty() {
            continue;
        }
        let extreme = *list.last().unwrap();
        let mut settings = settings_from(config, FreeParam::Amplitude, dir);
        settings.stop = vec![StopPredicate::AmplitudeReaches(extreme)];
        let branch = crate::continuation::lock_ratio_continue(located, target.ell, target.m, &settings)?;
        if !matches!(branch.status, BranchStatus::StopHit(_)) {
            stage_failed(
                stages,
                &format!("lock {}:{} dir {dir:+}", target.ell, target.m),
                format!("stopped early: {:?}", branch.status),
            );
        }
        let cs_locked = ConstraintSet::basic(&[
            FreeParam::Period,
            FreeParam::Amplitude,
            FreeParam::P1,
            FreeParam::P2,
        ])
        .with_ratio(Target::Fixed(target.ell as f64 / target.m as f64));
        for a_target in &list {
            let found = if (branch.last().monitors.a - a_target).abs() <= 1e-12 {
                Ok(branch.last().orbit.clone())
            } else {
                locate_amplitude(&branch, &cs_locked, &settings, *a_target)
            };
            match found {
                Ok(orbit) => {
                    let name = format!("lock_{}_{}_a{:.6}", target.ell, target.m, a_target);
                    stage_ok(
                        stages,
                        &name,
                        format!("T = {:.6}, ratio = {:.9}", orbit.t_period, orbit.monitors().ratio),
                    );
                    orbits.push(process_orbit(&name, &orbit, target.ell, target.m, config));
                }
                Err(e) => stage_failed(
                    stages,
                    &format!("lock {}:{} a={a_target}", target.ell, target.m),
                    e.to_string(),
                ),
            }
        }
        let tag = format!("lock_{}_{}_{}", target.ell, target.m, if dir > 0.0 { "up" } else { "down" });
        branches.push((tag, branch));
    }
    Ok((branches, orbits))
}

/// Run and write all artifacts under the configured output directory.
pub fn run_and_write(config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let out = run(config)?;
    write_artifacts(config, &out, out_dir)?;
    Ok(out)
}

pub fn write_artifacts(config: &RunConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    let mk = |p: &Path| -> Result<()> {
        std::fs::create_dir_all(p).map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        })
    };
    mk(dir)?;
    let orbits_dir = dir.join("orbits");
    let svg_dir = dir.join("svg");
    mk(&orbits_dir)?;
    mk(&svg_dir)?;

    if let Some(b) = &out.start_branch {
        crate::io::write_branch_csv(&dir.join("branch_start.csv"), b)?;
    }
    if let Some(b) = &out.main_branch {
        crate::io::write_branch_csv(&dir.join("branch_main.csv"), b)?;
    }
    for (tag, b) in &out.lock_branches {
        crate::io::write_branch_csv(&dir.join(format!("branch_{tag}.csv")), b)?;
    }

    let mut event_rows = Vec::new();
    for o in &out.orbits {
        let opath = orbits_dir.join(format!("{}.json", o.name));
        crate::io::write_orbit(&opath, &o.orbit)?;
        if let (Some(label), Some(class)) = (&o.label, &o.class) {
            let cls = crate::io::ClassificationFile::new(
                *class,
                config.n,
                o.winding.unwrap_or(0),
                o.choreography_residual.unwrap_or(f64::NAN),
                o.symmetry_error.unwrap_or(f64::NAN),
                *label,
            );
            crate::io::write_classification(&dir.join(format!("classify_{}.json", o.name)), &cls)?;
            event_rows.push((
                ResonanceHit {
                    ell: label.ell,
                    m: label.m,
                    lo: 0,
                    hi: 0,
                },
                opath.display().to_string(),
            ));
        }
        let svg = crate::render::render_rotating_svg(&o.orbit, 1024)?;
        std::fs::write(svg_dir.join(format!("{}_rotating.svg", o.name)), svg).map_err(|e| {
            Error::Io {
                path: svg_dir.display().to_string(),
                source: e,
            }
        })?;
        if let Some(trace) = &o.trace {
            let svg = crate::render::render_nonrotating_svg(trace);
            std::fs::write(svg_dir.join(format!("{}_nonrotating.svg", o.name)), svg).map_err(
                |e| Error::Io {
                    path: svg_dir.display().to_string(),
                    source: e,
                },
            )?;
        }
    }
    crate::io::write_events_csv(&dir.join("events.csv"), &event_rows)?;

    let summary = summary_json(config, out);
    std::fs::write(dir.join("summary.json"), summary).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn summary_json(config: &RunConfig, out: &RunOutput) -> String {
    let stages: Vec<serde_json::Value> = out
        .stages
        .iter()
        .map(|s| {
            serde_json::json!({
                "name": s.name,
                "status": if s.status == StageStatus::Ok { "ok" } else { "failed" },
                "detail": s.detail,
            })
        })
        .collect();
    let orbits: Vec<serde_json::Value> = out
        .orbits
        .iter()
        .map(|o| {
            let mon = o.orbit.monitors();
            serde_json::json!({
                "name": o.name,
                "a": mon.a,
                "T": mon.t_period,
                "T0": mon.t0,
                "ratio": mon.ratio,
                "xn0": mon.xn0,
                "p1": mon.p1,
                "p2": mon.p2,
                "stability": o.floquet.as_ref().map(|f| f.classification.flag()),
                "n_unstable": o.floquet.as_ref().map(|f| f.n_unstable),
                "class": o.class.map(|c| match c {
                    OrbitClass::Full => "Full".to_string(),
                    OrbitClass::Partial { curves } => format!("Partial({curves})"),
                }),
                "winding": o.winding,
                "frame_winding": o.frame_winding,
                "choreography_residual": o.choreography_residual,
                "symmetry_error": o.symmetry_error,
                "verify": o.verify.map(|v| serde_json::json!({
                    "n_periods": v.n_periods,
                    "max_distance": v.max_distance,
                    "de_rel": v.de_rel,
                    "da_rel": v.da_rel,
                })),
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "n": config.n,
        "alpha": config.alpha,
        "mode_k": out.mode_k,
        "a_init": config.a_init,
        "xn0_target": config.xn0_target,
        "ok": out.all_ok(),
        "stages": stages,
        "orbits": orbits,
    }))
    .expect("summary serialization")
}

/// Shipped preset configurations reproducing the tabulated orbits.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "table1-row1" | "table1-orbit1" => Some(include_str!("../presets/table1-row1.json")),
        "table1-orbit3" => Some(include_str!("../presets/table1-orbit3.json")),
        "table1-orbit5" => Some(include_str!("../presets/table1-orbit5.json")),
        "table1-orbit6" => Some(include_str!("../presets/table1-orbit6.json")),
        "table1-fig2-row1" => Some(include_str!("../presets/table1-fig2-row1.json")),
        "table1-fig2-row2" => Some(include_str!("../presets/table1-fig2-row2.json")),
        "table1-fig2-row2b" => Some(include_str!("../presets/table1-fig2-row2b.json")),
        "table1-orbit13" => Some(include_str!("../presets/table1-orbit13.json")),
        "table1-orbit15" => Some(include_str!("../presets/table1-orbit15.json")),
        "table1-orbit16" => Some(include_str!("../presets/table1-orbit16.json")),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 10] = [
    "table1-row1",
    "table1-orbit3",
    "table1-orbit5",
    "table1-orbit6",
    "table1-fig2-row1",
    "table1-fig2-row2",
    "table1-fig2-row2b",
    "table1-orbit13",
    "table1-orbit15",
    "table1-orbit16",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let text = preset(name).unwrap();
            let cfg = RunConfig::from_json(text)
                .unwrap_or_else(|e| panic!("preset {name} invalid: {e}"));
            assert!(cfg.n >= 3);
        }
        assert!(preset("nonsense").is_none());
    }
}
