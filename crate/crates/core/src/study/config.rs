//! Study configuration: a flat TOML document.
//!
//! ```toml
//! preset = "coupled"            # or give alpha/beta explicitly
//! eps = [0.25, 0.125, 0.0625]
//! lambda = 30.0
//! mesh_h = 0.015625             # one value, or one per eps
//! ```
//!
//! The full key list lives in `docs/config.md`.

use crate::eigen::EigSolveOptions;
use crate::geometry::{
    classify_regime, exponents_to_params, BaseDomain, GeometryError, PerturbationParams, RegimeClass, ShapeSpec,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("unknown preset `{0}` (expected one of: coupled, courant-hilbert, steklov, neumann)")]
    UnknownPreset(String),
    #[error("field `{field}`: {source}")]
    Geometry {
        field: &'static str,
        #[source]
        source: GeometryError,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

/// Exponents of the four reproduction presets, one per limit operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub alpha: f64,
    pub beta: f64,
}

pub const PRESETS: [Preset; 4] = [
    // q = |D|/|B|, r = |B|: coupled two-field limit
    Preset {
        name: "coupled",
        alpha: 2.0,
        beta: -1.0,
    },
    // q = 0, r = 0: low eigenvalues collapse to zero
    Preset {
        name: "courant-hilbert",
        alpha: 4.0,
        beta: 0.0,
    },
    // q = ∞, r = |B|: mass on the boundary
    Preset {
        name: "steklov",
        alpha: 1.0,
        beta: -1.0,
    },
    // q = ∞, r = 0: plain Neumann limit
    Preset {
        name: "neumann",
        alpha: 1.0,
        beta: 1.0,
    },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name == name)
}

pub const DEFAULT_EPS: [f64; 3] = [0.25, 0.125, 0.0625];
pub const DEFAULT_LAMBDA: f64 = 30.0;
pub const DEFAULT_MESH_H: f64 = 1.0 / 64.0;
pub const DEFAULT_SIGMA0_REFINEMENTS: usize = 1;
pub const DEFAULT_SIGMA0_CHANGE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    eps: f64,
    b: f64,
    d: f64,
    h: f64,
    rho: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    alpha: Option<f64>,
    beta: Option<f64>,
    eps: Option<Vec<f64>>,
    params: Option<Vec<RawParams>>,
    width: Option<f64>,
    depth: Option<f64>,
    room_width: Option<f64>,
    room_height: Option<f64>,
    passage_width: Option<f64>,
    gluing_radius: Option<f64>,
    mesh_h: Option<OneOrMany>,
    lambda: Option<f64>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    block_size: Option<usize>,
    seed: Option<u64>,
    sigma0_h: Option<f64>,
    sigma0_refinements: Option<usize>,
    sigma0_change_tol: Option<f64>,
    output_dir: Option<PathBuf>,
}

/// Validated study configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub preset: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub regime: RegimeClass,
    pub base: BaseDomain,
    pub shape: ShapeSpec,
    /// One entry per ε, strictly decreasing in ε.
    pub params: Vec<PerturbationParams>,
    /// Mesh size for each ε.
    pub mesh_h: Vec<f64>,
    pub lambda: f64,
    pub solver: EigSolveOptions,
    pub sigma0_h: f64,
    pub sigma0_refinements: usize,
    pub sigma0_change_tol: f64,
    pub output_dir: Option<PathBuf>,
}

impl StudyConfig {
    /// Configuration of a named preset with every default applied.
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig {
            preset: Some(name.to_string()),
            ..RawConfig::default()
        };
        validate(raw)
    }

    pub fn eps(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.eps).collect()
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub lambda: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<StudyConfig, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<StudyConfig, ConfigError> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if let Some(p) = &overrides.preset {
        raw.preset = Some(p.clone());
    }
    if let Some(l) = overrides.lambda {
        raw.lambda = Some(l);
    }
    validate(raw)
}

pub fn load_config(path: &std::path::Path, overrides: &Overrides) -> Result<StudyConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_with(&text, overrides)
}

fn positive(name: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn validate(raw: RawConfig) -> Result<StudyConfig, ConfigError> {
    let preset = match &raw.preset {
        Some(name) => Some(preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?),
        None => None,
    };
    let alpha = raw
        .alpha
        .or(preset.map(|p| p.alpha))
        .ok_or_else(|| field("alpha", "required unless a preset is given"))?;
    let beta = raw
        .beta
        .or(preset.map(|p| p.beta))
        .ok_or_else(|| field("beta", "required unless a preset is given"))?;

    let canonical = ShapeSpec::canonical();
    let shape = ShapeSpec::new(
        raw.room_width.unwrap_or(canonical.room_width),
        raw.room_height.unwrap_or(canonical.room_height),
        raw.passage_width.unwrap_or(canonical.passage_width),
        raw.gluing_radius.unwrap_or(canonical.gluing_radius),
    )
    .map_err(|source| ConfigError::Geometry { field: "shape", source })?;
    let regime = classify_regime(alpha, beta, &shape).map_err(|source| ConfigError::Geometry {
        field: "alpha/beta",
        source,
    })?;
    let base = BaseDomain::new(raw.width.unwrap_or(1.0), raw.depth.unwrap_or(1.0))
        .map_err(|source| ConfigError::Geometry {
            field: "width/depth",
            source,
        })?;

    let params: Vec<PerturbationParams> = match (raw.params, raw.eps) {
        (Some(_), Some(_)) => return Err(field("params", "give either `eps` or explicit `params`, not both")),
        (Some(list), None) => list
            .into_iter()
            .map(|p| {
                let p = PerturbationParams {
                    eps: p.eps,
                    b: p.b,
                    d: p.d,
                    h: p.h,
                    rho: p.rho,
                };
                p.check().map(|_| p)
            })
            .collect::<Result<_, _>>()
            .map_err(|source| ConfigError::Geometry { field: "params", source })?,
        (None, eps) => eps
            .unwrap_or_else(|| DEFAULT_EPS.to_vec())
            .into_iter()
            .map(|e| exponents_to_params(e, alpha, beta))
            .collect::<Result<_, _>>()
            .map_err(|source| ConfigError::Geometry { field: "eps", source })?,
    };
    if params.is_empty() {
        return Err(field("eps", "at least one value is required"));
    }
    if params.windows(2).any(|w| !(w[1].eps < w[0].eps)) {
        return Err(field("eps", "values must be strictly decreasing"));
    }

    let mesh_h = match raw.mesh_h {
        None => vec![DEFAULT_MESH_H; params.len()],
        Some(OneOrMany::One(h)) => vec![positive("mesh_h", h)?; params.len()],
        Some(OneOrMany::Many(list)) => {
            if list.len() != params.len() {
                return Err(field(
                    "mesh_h",
                    format!("list has {} entries for {} eps values", list.len(), params.len()),
                ));
            }
            list.into_iter().map(|h| positive("mesh_h", h)).collect::<Result<_, _>>()?
        }
    };

    let lambda = positive("lambda", raw.lambda.unwrap_or(DEFAULT_LAMBDA))?;
    let mut solver = EigSolveOptions::default();
    if let Some(t) = raw.tolerance {
        solver.tolerance = t;
    }
    if let Some(m) = raw.max_iterations {
        solver.max_iterations = m;
    }
    if let Some(b) = raw.block_size {
        solver.block_size = b;
    }
    if let Some(s) = raw.seed {
        solver.seed = s;
    }
    solver.validate().map_err(|e| field("solver", e.to_string()))?;

    let sigma0_change_tol = positive("sigma0_change_tol", raw.sigma0_change_tol.unwrap_or(DEFAULT_SIGMA0_CHANGE_TOL))?;
    Ok(StudyConfig {
        preset: raw.preset,
        alpha,
        beta,
        regime,
        base,
        shape,
        params,
        mesh_h,
        lambda,
        solver,
        sigma0_h: positive("sigma0_h", raw.sigma0_h.unwrap_or(DEFAULT_MESH_H))?,
        sigma0_refinements: raw.sigma0_refinements.unwrap_or(DEFAULT_SIGMA0_REFINEMENTS),
        sigma0_change_tol,
        output_dir: raw.output_dir,
    })
}
