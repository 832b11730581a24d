//! End-to-end convergence study: one perturbed-domain spectrum per ε,
//! compared against the limit spectrum of the regime.

pub mod config;

pub use config::{
    load_config, parse_config, parse_config_with, preset, ConfigError, Overrides, Preset, StudyConfig, PRESETS,
};

use crate::analysis::{
    check_threshold, convergence_table, fem_slack_for_mesh, hausdorff_distance, place_cutoff, threshold_bound,
    write_spectrum_csv, write_trend_plot, AnalysisError, ConvergenceReport, ConvergenceRow, Interval, ThresholdCheck,
    ThresholdSummary, TrendVerdict,
};
use crate::assembly::{assemble_mass, assemble_stiffness, AssemblyError, DensityField};
use crate::eigen::spectrum::{SpectralTag, Spectrum};
use crate::eigen::{EigenError, Pencil};
use crate::geometry::{
    build_perturbed_domain, compute_scaling, GeometryError, PerturbationParams, QLimit, ScalingNumbers,
};
use crate::limit::{LimitError, LimitProblem, LimitSolver, DEFAULT_Q_WINDOW, SPECTRUM_FLOOR};
use crate::mesh::{mesh_perturbed_domain, mesh_rectangle, write_mesh, MeshError, MeshOptions, TriMesh};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// σ₀ is computed up to this multiple of Λ so the cutoff can be placed in
/// `[0.9Λ, 1.1Λ]` with the neighbouring eigenvalues known.
const SIGMA0_REACH: f64 = 1.375;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` failed{}: {source}", .eps.map(|e| format!(" at eps = {e}")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        eps: Option<f64>,
        #[source]
        source: StageError,
    },
    #[error("cannot write {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("the study has no eps rows to report")]
    EmptyStudy,
    #[error("worker pool: {0}")]
    Pool(String),
}

fn stage<E: Into<StageError>>(stage: &'static str, eps: Option<f64>) -> impl FnOnce(E) -> StudyError {
    move |e| StudyError::Stage {
        stage,
        eps,
        source: e.into(),
    }
}

/// Everything computed for one ε.
#[derive(Debug, Clone)]
pub struct EpsResult {
    pub params: PerturbationParams,
    pub scaling: ScalingNumbers,
    pub mesh_size: f64,
    pub mesh: TriMesh,
    pub spectrum: Spectrum,
    pub certified_count: usize,
    pub threshold: Option<ThresholdCheck>,
    pub dist_h: f64,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub config: StudyConfig,
    /// σ₀ truncated to `[0, Λ_used]`.
    pub sigma0: Spectrum,
    pub results: Vec<EpsResult>,
    pub report: ConvergenceReport,
    pub log: Vec<String>,
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyArtifacts {
    pub report: PathBuf,
    pub sigma0: PathBuf,
    pub spectra: Vec<PathBuf>,
    pub meshes: Vec<PathBuf>,
    pub plot: PathBuf,
    pub log: PathBuf,
}

pub fn spectrum_file_name(eps: f64) -> String {
    format!("spectrum_eps_{eps:?}.csv")
}

pub fn mesh_file_name(eps: f64) -> String {
    format!("mesh_eps_{eps:?}.txt")
}

pub const SIGMA0_FILE: &str = "sigma0.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "dist_h.dat";
pub const LOG_FILE: &str = "study.log";

/// Largest relative move of a value of `new` to the nearest value of `old`,
/// skipping the plus-branch cluster and `q` itself.
fn refinement_change(old: &Spectrum, new: &Spectrum, upto: f64) -> f64 {
    let keep = |s: &Spectrum| -> Vec<f64> {
        (0..s.len())
            .filter(|&i| {
                !s.has_tag(i, SpectralTag::EssentialLimitCluster)
                    && !s.has_tag(i, SpectralTag::EssentialLimit)
                    && s.values()[i] <= upto
            })
            .map(|i| s.values()[i])
            .collect()
    };
    let (a, b) = (keep(old), keep(new));
    b.iter()
        .map(|v| {
            a.iter()
                .map(|u| (u - v).abs() / v.abs().max(1.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

struct Sigma0 {
    spectrum: Spectrum,
    mesh_size: f64,
    change: Option<f64>,
}

fn compute_sigma0(config: &StudyConfig, upper: f64, log: &mut Vec<String>) -> Result<Sigma0, StudyError> {
    let problem = LimitProblem::for_regime(&config.regime);
    let solve = |h: f64| -> Result<Spectrum, StudyError> {
        let mesh = mesh_rectangle(&config.base, h).map_err(stage("sigma0 mesh", None))?;
        let solver = LimitSolver::new(&mesh, config.solver.clone()).map_err(stage("sigma0", None))?;
        solver.sigma0_for_problem(&problem, upper).map_err(stage("sigma0", None))
    };
    let mut h = config.sigma0_h;
    let mut spectrum = solve(h)?;
    log.push(format!(
        "sigma0 {} h={h:?} values={}",
        problem.name(),
        spectrum.total_count()
    ));
    let mut change = None;
    for _ in 0..config.sigma0_refinements {
        let finer = solve(h / 2.0)?;
        let c = refinement_change(&spectrum, &finer, 1.1 * config.lambda);
        h /= 2.0;
        spectrum = finer;
        change = Some(c);
        log.push(format!("sigma0 refined h={h:?} change={c:e}"));
        if c < config.sigma0_change_tol {
            break;
        }
    }
    Ok(Sigma0 {
        spectrum,
        mesh_size: h,
        change,
    })
}

fn solve_eps(
    config: &StudyConfig,
    index: usize,
    cutoff: f64,
    sigma0: &Spectrum,
) -> Result<EpsResult, StudyError> {
    let params = config.params[index];
    let eps = Some(params.eps);
    let mesh_size = config.mesh_h[index];
    let domain = build_perturbed_domain(&config.base, &params, &config.shape).map_err(stage("domain", eps))?;
    let scaling = compute_scaling(&params, &config.shape, &config.base);
    let mesh = mesh_perturbed_domain(&domain, &MeshOptions::new(mesh_size)).map_err(stage("mesh", eps))?;
    let k = assemble_stiffness(&mesh).map_err(stage("assembly", eps))?;
    let density = DensityField::with_room_density(params.rho).map_err(stage("assembly", eps))?;
    let m = assemble_mass(&mesh, &density).map_err(stage("assembly", eps))?;
    let pencil = Pencil::new(&k, &m, config.solver.clone()).map_err(stage("eigensolve", eps))?;
    let solution = pencil
        .eigs_in_interval(SPECTRUM_FLOOR, cutoff)
        .map_err(stage("eigensolve", eps))?;
    let spectrum = solution.spectrum();

    let threshold = match config.regime.q {
        QLimit::Infinite => None,
        QLimit::Zero | QLimit::FinitePositive(_) => {
            let n = scaling.room_count;
            let lowest = if spectrum.total_count() >= n {
                spectrum.clone()
            } else {
                pencil.eigs_smallest(n).map_err(stage("threshold", eps))?.spectrum()
            };
            let bound = threshold_bound(&scaling, &params);
            Some(check_threshold(&lowest, bound, n, fem_slack_for_mesh(mesh_size)).map_err(stage("threshold", eps))?)
        }
    };
    let window = Interval::new(SPECTRUM_FLOOR, cutoff).map_err(stage("distance", eps))?;
    let dist_h = hausdorff_distance(&spectrum, sigma0, &window).map_err(stage("distance", eps))?;
    Ok(EpsResult {
        params,
        scaling,
        mesh_size,
        mesh,
        certified_count: solution.certified_count,
        spectrum,
        threshold,
        dist_h,
    })
}

/// Runs every stage in memory. `jobs` bounds the number of ε solved at
/// once; results do not depend on it.
pub fn compute_study(config: &StudyConfig, jobs: Option<usize>) -> Result<StudyOutcome, StudyError> {
    if config.params.is_empty() {
        return Err(StudyError::EmptyStudy);
    }
    let mut log = Vec::new();
    let problem = LimitProblem::for_regime(&config.regime);
    log.push(format!(
        "study preset={} alpha={:?} beta={:?} operator={} eps={:?}",
        config.preset.as_deref().unwrap_or("-"),
        config.alpha,
        config.beta,
        problem.name(),
        config.eps()
    ));
    let upper = SIGMA0_REACH * config.lambda;
    let sigma0 = compute_sigma0(config, upper, &mut log)?;
    let cutoff = place_cutoff(&sigma0.spectrum, config.lambda, upper);
    log.push(format!("cutoff requested={:?} used={cutoff:?}", config.lambda));
    let sigma0_cut = sigma0.spectrum.truncated(SPECTRUM_FLOOR, cutoff);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| StudyError::Pool(e.to_string()))?;
    let results: Vec<EpsResult> = pool.install(|| {
        (0..config.params.len())
            .into_par_iter()
            .map(|i| solve_eps(config, i, cutoff, &sigma0_cut))
            .collect::<Result<_, _>>()
    })?;

    let mut rows = Vec::new();
    for r in &results {
        let eps = r.params.eps;
        log.push(format!(
            "eps={eps:?} vertices={} triangles={} rooms={} q_eps={:?} r_eps={:?} eigenvalues={} certified={} dist_h={:?}",
            r.mesh.vertex_count(),
            r.mesh.triangle_count(),
            r.scaling.room_count,
            r.scaling.q_eps,
            r.scaling.r_eps,
            r.spectrum.total_count(),
            r.certified_count,
            r.dist_h
        ));
        if let Some(t) = &r.threshold {
            log.push(format!(
                "eps={eps:?} threshold bound={:?} slack={:?} passed={}/{}",
                t.bound,
                t.slack,
                t.pass_count(),
                t.rows.len()
            ));
        }
        rows.push(ConvergenceRow {
            eps,
            mesh_size: r.mesh_size,
            dof_count: r.mesh.vertex_count(),
            q_eps: r.scaling.q_eps,
            r_eps: r.scaling.r_eps,
            room_count: r.scaling.room_count,
            spectrum_file: spectrum_file_name(eps),
            eigenvalue_count: r.spectrum.total_count(),
            certified_count: r.certified_count,
            dist_h: r.dist_h,
            threshold: r.threshold.as_ref().map(ThresholdSummary::from),
        });
    }

    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.dist_h)).collect();
    let verdict = match convergence_table(&pairs) {
        Ok(v) => v,
        Err(e) => TrendVerdict {
            passed: false,
            reduction: f64::NAN,
            worst_increase: f64::NAN,
            reason: e.to_string(),
        },
    };
    log.push(format!("verdict passed={} {}", verdict.passed, verdict.reason));
    let threshold_passed = results
        .iter()
        .all(|r| r.threshold.as_ref().is_none_or(|t| t.all_passed()));

    let mut notes = vec!["the trend verdict (halving with 10% jitter) is a heuristic; no rate is implied".to_string()];
    if cutoff != config.lambda {
        notes.push(format!(
            "cutoff moved from {:?} to {cutoff:?} to sit in a gap of the limit spectrum",
            config.lambda
        ));
    }
    if let LimitProblem::Aqr { q, .. } | LimitProblem::Aq { q } = problem {
        notes.push(format!(
            "q = {q:?} is a point of the limit spectrum; the window |lambda - q| <= {DEFAULT_Q_WINDOW:?}*q is only excluded from per-eigenvalue matching, not from dist_H"
        ));
    }
    match sigma0.change {
        Some(c) if c >= config.sigma0_change_tol => notes.push(format!(
            "limit spectrum changed by {c:.2e} over its last refinement (target {:.0e}); refinement capped at {} levels",
            config.sigma0_change_tol, config.sigma0_refinements
        )),
        None => notes.push("limit spectrum was not refined".to_string()),
        _ => {}
    }

    let report = ConvergenceReport {
        preset: config.preset.clone(),
        alpha: config.alpha,
        beta: config.beta,
        regime: config.regime,
        limit_operator: problem.name().to_string(),
        lambda_requested: config.lambda,
        lambda_used: cutoff,
        sigma0_file: SIGMA0_FILE.to_string(),
        sigma0_mesh_size: sigma0.mesh_size,
        sigma0_refinement_change: sigma0.change,
        rows,
        verdict,
        threshold_passed,
        notes,
    };
    Ok(StudyOutcome {
        config: config.clone(),
        sigma0: sigma0_cut,
        results,
        report,
        log,
    })
}

fn create(path: PathBuf) -> Result<(BufWriter<File>, PathBuf), StudyError> {
    match File::create(&path) {
        Ok(f) => Ok((BufWriter::new(f), path)),
        Err(source) => Err(StudyError::Io { path, source }),
    }
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), StudyError> {
    w.flush().map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(AnalysisError) -> StudyError + '_ {
    move |e| match e {
        AnalysisError::Io(source) => StudyError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => StudyError::Stage {
            stage: "report",
            eps: None,
            source: other.into(),
        },
    }
}

/// Writes the report, spectra, mesh dumps, plot data and log into `dir`.
pub fn emit_report(outcome: &StudyOutcome, dir: &Path) -> Result<StudyArtifacts, StudyError> {
    if outcome.results.is_empty() || outcome.report.rows.is_empty() {
        return Err(StudyError::EmptyStudy);
    }
    std::fs::create_dir_all(dir).map_err(|source| StudyError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut spectra = Vec::new();
    let mut meshes = Vec::new();
    for r in &outcome.results {
        let (w, path) = create(dir.join(spectrum_file_name(r.params.eps)))?;
        let mut w = w;
        write_spectrum_csv(&mut w, Some(r.params.eps), &r.spectrum).map_err(io_err(&path))?;
        finish(w, &path)?;
        spectra.push(path);

        let (mut w, path) = create(dir.join(mesh_file_name(r.params.eps)))?;
        write_mesh(&r.mesh, &mut w).map_err(|e| match e {
            MeshError::Io(source) => StudyError::Io {
                path: path.clone(),
                source,
            },
            other => StudyError::Stage {
                stage: "report",
                eps: Some(r.params.eps),
                source: other.into(),
            },
        })?;
        finish(w, &path)?;
        meshes.push(path);
    }

    let (mut w, sigma0) = create(dir.join(SIGMA0_FILE))?;
    write_spectrum_csv(&mut w, None, &outcome.sigma0).map_err(io_err(&sigma0))?;
    finish(w, &sigma0)?;

    let (mut w, plot) = create(dir.join(PLOT_FILE))?;
    write_trend_plot(&mut w, &outcome.report.rows).map_err(io_err(&plot))?;
    finish(w, &plot)?;

    let (mut w, report) = create(dir.join(REPORT_FILE))?;
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    writeln!(w, "{json}").map_err(|source| StudyError::Io {
        path: report.clone(),
        source,
    })?;
    finish(w, &report)?;

    let (mut w, log) = create(dir.join(LOG_FILE))?;
    for line in &outcome.log {
        writeln!(w, "{line}").map_err(|source| StudyError::Io {
            path: log.clone(),
            source,
        })?;
    }
    finish(w, &log)?;

    Ok(StudyArtifacts {
        report,
        sigma0,
        spectra,
        meshes,
        plot,
        log,
    })
}

/// [`compute_study`] followed by [`emit_report`].
pub fn run_study(
    config: &StudyConfig,
    dir: &Path,
    jobs: Option<usize>,
) -> Result<(StudyArtifacts, ConvergenceReport), StudyError> {
    let outcome = compute_study(config, jobs)?;
    let artifacts = emit_report(&outcome, dir)?;
    Ok((artifacts, outcome.report))
}
