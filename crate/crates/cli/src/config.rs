//! JSON run configuration: parsing, validation, and translation into the
//! solver types.
//!
//! Unknown keys are rejected everywhere so that typos surface as errors
//! naming the offending key instead of silently running a default.

use std::fmt;
use std::path::{Path, PathBuf};

use biot_split_core::analytic::lame_from_young_poisson;
use biot_split_core::fespace::DirichletMode;
use biot_split_core::schemes::{BiotParams, ElementPair, SchemeConfig, SchemeKind};
use serde::Deserialize;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Converge,
    BarryMercer,
    SingleRun,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::BarryMercer => "barry_mercer",
            Experiment::SingleRun => "single_run",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ElementName {
    Mini,
    P1p1Stabilized,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SchemeName {
    Monolithic,
    ExplicitNaive,
    ExplicitFixedStress,
    ExplicitStabilizedP1p1,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeSection {
    kind: SchemeName,
    omega: Option<f64>,
    inner_tol: Option<f64>,
    inner_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicsSection {
    mu: Option<f64>,
    lambda: Option<f64>,
    e: Option<f64>,
    nu: Option<f64>,
    alpha: f64,
    c0: f64,
    k: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelSection {
    nx: usize,
    tau: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BarryMercerSection {
    x0: f64,
    y0: f64,
    n_modes: usize,
    n_steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    output: Option<PathBuf>,
    discretization: ElementName,
    scheme: SchemeSection,
    physics: PhysicsSection,
    t_final: Option<f64>,
    levels: Vec<LevelSection>,
    barry_mercer: Option<BarryMercerSection>,
}

/// One mesh level of an experiment with its resolved time step.
#[derive(Debug, Clone, Copy)]
pub struct Level {
    pub nx: usize,
    pub tau: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BarryMercerSettings {
    pub x0: f64,
    pub y0: f64,
    pub n_modes: usize,
    pub n_steps: usize,
}

/// Fully validated configuration in solver terms.
#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: Experiment,
    pub output: Option<PathBuf>,
    pub element: ElementPair,
    pub scheme: SchemeConfig,
    pub params: BiotParams,
    pub t_final: f64,
    pub levels: Vec<Level>,
    pub barry_mercer: Option<BarryMercerSettings>,
}

impl Config {
    /// The displacement boundary condition implied by the experiment: the
    /// point-source benchmark clamps tangential components only, everything
    /// else is fully clamped.
    pub fn dirichlet_mode(&self) -> DirichletMode {
        match self.experiment {
            Experiment::BarryMercer => DirichletMode::Tangential,
            _ => DirichletMode::Full,
        }
    }
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(ConfigError::Parse)?;
    validate(raw)
}

fn invalid(msg: String) -> ConfigError {
    ConfigError::Invalid(msg)
}

fn validate(raw: RawConfig) -> Result<Config, ConfigError> {
    let params = resolve_physics(&raw.physics)?;
    params
        .validate()
        .map_err(|e| invalid(format!("physics: {e}")))?;

    let element = match raw.discretization {
        ElementName::Mini => ElementPair::Mini,
        ElementName::P1p1Stabilized => ElementPair::P1P1,
    };
    let kind = match raw.scheme.kind {
        SchemeName::Monolithic => SchemeKind::Monolithic,
        SchemeName::ExplicitNaive => SchemeKind::ExplicitNaive,
        SchemeName::ExplicitFixedStress => SchemeKind::ExplicitFixedStress,
        SchemeName::ExplicitStabilizedP1p1 => SchemeKind::ExplicitStabilizedP1P1,
    };
    let mut scheme = SchemeConfig::new(kind);
    if let Some(omega) = raw.scheme.omega {
        if !(omega >= 0.0) {
            return Err(invalid("scheme.omega must be nonnegative".into()));
        }
        scheme.omega = omega;
    }
    if let Some(tol) = raw.scheme.inner_tol {
        if !(tol > 0.0) {
            return Err(invalid("scheme.inner_tol must be positive".into()));
        }
        scheme.inner_tol = tol;
    }
    if let Some(cap) = raw.scheme.inner_max {
        if cap == 0 {
            return Err(invalid("scheme.inner_max must be at least 1".into()));
        }
        scheme.inner_max = cap;
    }

    if raw.levels.is_empty() {
        return Err(invalid("levels must not be empty".into()));
    }

    let config = match raw.experiment {
        Experiment::Converge | Experiment::SingleRun => {
            validate_manufactured(raw, element, scheme, params)?
        }
        Experiment::BarryMercer => validate_barry_mercer(raw, element, scheme, params)?,
    };
    Ok(config)
}

fn resolve_physics(p: &PhysicsSection) -> Result<BiotParams, ConfigError> {
    let (lambda, mu) = match (p.mu, p.lambda, p.e, p.nu) {
        (Some(mu), Some(lambda), None, None) => (lambda, mu),
        (None, None, Some(e), Some(nu)) => {
            lame_from_young_poisson(e, nu).map_err(|e| invalid(format!("physics: {e}")))?
        }
        _ => {
            return Err(invalid(
                "physics must set exactly one of (mu, lambda) or (e, nu)".into(),
            ))
        }
    };
    Ok(BiotParams {
        mu,
        lambda,
        alpha: p.alpha,
        c0: p.c0,
        k: p.k,
    })
}

fn check_scheme_element(kind: SchemeKind, element: ElementPair) -> Result<(), ConfigError> {
    match (kind, element) {
        (SchemeKind::ExplicitStabilizedP1P1, ElementPair::Mini) => Err(invalid(
            "scheme explicit_stabilized_p1p1 requires discretization p1p1_stabilized".into(),
        )),
        (SchemeKind::ExplicitFixedStress | SchemeKind::ExplicitNaive, ElementPair::P1P1) => {
            Err(invalid(
                "schemes explicit_fixed_stress and explicit_naive require discretization mini \
                 (equal-order elements need the stabilized variant)"
                    .into(),
            ))
        }
        _ => Ok(()),
    }
}

fn validate_manufactured(
    raw: RawConfig,
    element: ElementPair,
    scheme: SchemeConfig,
    params: BiotParams,
) -> Result<Config, ConfigError> {
    check_scheme_element(scheme.kind, element)?;
    if raw.barry_mercer.is_some() {
        return Err(invalid(format!(
            "barry_mercer section is only valid for the barry_mercer experiment, not {}",
            raw.experiment.name()
        )));
    }
    if raw.experiment == Experiment::Converge && scheme.kind == SchemeKind::Monolithic {
        return Err(invalid(
            "converge compares an explicit scheme against the monolithic reference; \
             pick an explicit scheme.kind"
                .into(),
        ));
    }
    if raw.experiment == Experiment::SingleRun && raw.levels.len() != 1 {
        return Err(invalid(format!(
            "single_run takes exactly one level, got {}",
            raw.levels.len()
        )));
    }
    let t_final = raw.t_final.unwrap_or(1.0);
    if !(t_final > 0.0) {
        return Err(invalid("t_final must be positive".into()));
    }
    let mut levels = Vec::with_capacity(raw.levels.len());
    for (i, level) in raw.levels.iter().enumerate() {
        if level.nx == 0 {
            return Err(invalid(format!("levels[{i}].nx must be at least 1")));
        }
        let tau = level
            .tau
            .ok_or_else(|| invalid(format!("levels[{i}].tau is required")))?;
        if !(tau > 0.0) {
            return Err(invalid(format!("levels[{i}].tau must be positive")));
        }
        let n_steps = (t_final / tau).round();
        if n_steps < 1.0 || (n_steps * tau - t_final).abs() > 1e-9 * t_final {
            return Err(invalid(format!(
                "levels[{i}].tau = {tau} does not divide t_final = {t_final}"
            )));
        }
        levels.push(Level {
            nx: level.nx,
            tau,
            n_steps: n_steps as usize,
        });
    }
    Ok(Config {
        experiment: raw.experiment,
        output: raw.output,
        element,
        scheme,
        params,
        t_final,
        levels,
        barry_mercer: None,
    })
}

fn validate_barry_mercer(
    raw: RawConfig,
    element: ElementPair,
    scheme: SchemeConfig,
    params: BiotParams,
) -> Result<Config, ConfigError> {
    check_scheme_element(scheme.kind, element)?;
    if scheme.kind == SchemeKind::Monolithic {
        return Err(invalid(
            "barry_mercer compares an explicit scheme against the monolithic reference; \
             pick an explicit scheme.kind"
                .into(),
        ));
    }
    let bm = raw
        .barry_mercer
        .ok_or_else(|| invalid("barry_mercer experiment needs a barry_mercer section".into()))?;
    if raw.t_final.is_some() {
        return Err(invalid(
            "t_final is derived for barry_mercer (a quarter source period); remove it".into(),
        ));
    }
    if raw.levels.len() != 1 {
        return Err(invalid(format!(
            "barry_mercer takes exactly one level, got {}",
            raw.levels.len()
        )));
    }
    if raw.levels[0].nx == 0 {
        return Err(invalid("levels[0].nx must be at least 1".into()));
    }
    if raw.levels[0].tau.is_some() {
        return Err(invalid(
            "levels[0].tau is derived for barry_mercer from n_steps; remove it".into(),
        ));
    }
    if !(bm.x0 > 0.0 && bm.x0 < 1.0 && bm.y0 > 0.0 && bm.y0 < 1.0) {
        return Err(invalid(
            "barry_mercer source location must lie strictly inside the unit square".into(),
        ));
    }
    if bm.n_modes == 0 {
        return Err(invalid("barry_mercer.n_modes must be at least 1".into()));
    }
    if bm.n_steps == 0 {
        return Err(invalid("barry_mercer.n_steps must be at least 1".into()));
    }
    // The series requires alpha = 1, c0 = 0; upsilon = (lambda + 2 mu) k.
    let upsilon = (params.lambda + 2.0 * params.mu) * params.k;
    let t_final = std::f64::consts::PI / (2.0 * upsilon);
    let tau = t_final / bm.n_steps as f64;
    Ok(Config {
        experiment: Experiment::BarryMercer,
        output: raw.output,
        element,
        scheme,
        params,
        t_final,
        levels: vec![Level {
            nx: raw.levels[0].nx,
            tau,
            n_steps: bm.n_steps,
        }],
        barry_mercer: Some(BarryMercerSettings {
            x0: bm.x0,
            y0: bm.y0,
            n_modes: bm.n_modes,
            n_steps: bm.n_steps,
        }),
    })
}
