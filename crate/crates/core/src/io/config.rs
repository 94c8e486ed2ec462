//! Run configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! case = "traction"          # surfing | traction | thermal_shock
//! output_dir = "out"         # optional
//! snapshot_stride = 5        # optional, 0 disables snapshots
//! seed = 7                   # optional, only consumed by tests
//!
//! [material]                 # every key optional
//! ell = 0.1
//!
//! [solver]                   # every key optional
//! method = "oram"            # am | oram | oram_n | newton_only
//! omega = 1.4
//! elastic_solver = { kind = "cg", precond = { kind = "ssor", omega = 1.0 } }
//! coupled_solver = { kind = "minres_fieldsplit", inner_a = { kind = "direct" } }
//!
//! [traction]                 # section named after the case, optional
//! increments = 30
//! ```
//!
//! Unknown keys anywhere in the document are reported together.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cases::{
    setup_surfing, setup_thermal_shock, setup_traction, CaseKind, ProblemSetup, SurfingParams,
    ThermalParams, TractionParams,
};
use crate::error::{Error, Result};
use crate::model::{Material, Regime};
use crate::solver::{CoupledSolverKind, LinearSolverKind, Method, SolverConfig};

pub const DEFAULT_SNAPSHOT_STRIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseParams {
    Surfing(SurfingParams),
    Traction(TractionParams),
    ThermalShock(ThermalParams),
}

impl CaseParams {
    pub fn defaults(case: CaseKind) -> Self {
        match case {
            CaseKind::Surfing => CaseParams::Surfing(SurfingParams::default()),
            CaseKind::Traction => CaseParams::Traction(TractionParams::default()),
            CaseKind::ThermalShock => CaseParams::ThermalShock(ThermalParams::default()),
        }
    }

    pub fn kind(&self) -> CaseKind {
        match self {
            CaseParams::Surfing(_) => CaseKind::Surfing,
            CaseParams::Traction(_) => CaseKind::Traction,
            CaseParams::ThermalShock(_) => CaseKind::ThermalShock,
        }
    }

    pub fn h(&self) -> Option<f64> {
        match self {
            CaseParams::Surfing(p) => p.h,
            CaseParams::Traction(p) => p.h,
            CaseParams::ThermalShock(p) => p.h,
        }
    }

    pub fn set_h(&mut self, h: f64) {
        match self {
            CaseParams::Surfing(p) => p.h = Some(h),
            CaseParams::Traction(p) => p.h = Some(h),
            CaseParams::ThermalShock(p) => p.h = Some(h),
        }
    }
}

/// Material defaults of a case: the thermal slab uses `ℓ = 1`.
pub fn default_material(case: CaseKind) -> Material {
    match case {
        CaseKind::ThermalShock => Material::with_ell(1.0),
        _ => Material::default(),
    }
}

/// A fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub material: Material,
    pub params: CaseParams,
    pub solver: SolverConfig,
    pub output_dir: Option<PathBuf>,
    pub snapshot_stride: usize,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Defaults of `case`, with `h` left to the case rule.
    pub fn new(case: CaseKind) -> Self {
        RunConfig {
            material: default_material(case),
            params: CaseParams::defaults(case),
            solver: SolverConfig::default(),
            output_dir: None,
            snapshot_stride: DEFAULT_SNAPSHOT_STRIDE,
            seed: None,
        }
    }

    pub fn case(&self) -> CaseKind {
        self.params.kind()
    }

    /// Element size after applying the case default.
    pub fn mesh_size(&self) -> f64 {
        let default = match self.case() {
            CaseKind::ThermalShock => self.material.ell / 4.0,
            _ => self.material.ell / 5.0,
        };
        self.params.h().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate().map_err(as_config)?;
        self.solver.validate().map_err(as_config)?;
        if !(self.mesh_size() > 0.0) {
            return Err(Error::Config(format!("element size must be positive, got {}", self.mesh_size())));
        }
        match &self.params {
            CaseParams::Surfing(p) => {
                positive(&[("length", p.length), ("height", p.height), ("t_end", p.t_end), ("coarse_factor", p.coarse_factor)])?;
                if p.increments == 0 {
                    return Err(Error::Config("surfing.increments must be at least 1".into()));
                }
            }
            CaseParams::Traction(p) => {
                positive(&[("length", p.length), ("height", p.height), ("t_max_factor", p.t_max_factor)])?;
                if p.increments == 0 {
                    return Err(Error::Config("traction.increments must be at least 1".into()));
                }
            }
            CaseParams::ThermalShock(p) => {
                positive(&[("length", p.length), ("height", p.height), ("shock_ratio", p.shock_ratio), ("tau_start", p.tau_start)])?;
                if !(p.tau_end > p.tau_start) || p.steps < 2 {
                    return Err(Error::Config("thermal_shock needs tau_end > tau_start and at least 2 steps".into()));
                }
                if !(self.material.expansion > 0.0) {
                    return Err(Error::Config("thermal_shock needs a positive material.expansion".into()));
                }
            }
        }
        Ok(())
    }

    /// Builds the benchmark problem described by this configuration.
    pub fn setup(&self) -> Result<ProblemSetup> {
        match &self.params {
            CaseParams::Surfing(p) => setup_surfing(self.material, p),
            CaseParams::Traction(p) => setup_traction(self.material, p),
            CaseParams::ThermalShock(p) => setup_thermal_shock(self.material, p),
        }
    }

    /// Canonical TOML text of the resolved configuration; parsing it back
    /// yields an equal configuration.
    pub fn echo(&self) -> String {
        let mut file = ConfigFile {
            case: Some(self.case()),
            output_dir: self.output_dir.clone(),
            snapshot_stride: Some(self.snapshot_stride),
            seed: self.seed,
            material: MaterialSection::from(self.material),
            solver: SolverSection::from(&self.solver),
            ..Default::default()
        };
        match self.params {
            CaseParams::Surfing(p) => file.surfing = Some(p),
            CaseParams::Traction(p) => file.traction = Some(p),
            CaseParams::ThermalShock(p) => file.thermal_shock = Some(p),
        }
        toml::to_string(&file).expect("configuration serializes to TOML")
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

fn positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(*v > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ConfigFile {
    case: Option<CaseKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    material: MaterialSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    surfing: Option<SurfingParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    traction: Option<TractionParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thermal_shock: Option<ThermalParams>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct MaterialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    young: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    poisson: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    toughness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<Regime>,
}

impl From<Material> for MaterialSection {
    fn from(m: Material) -> Self {
        MaterialSection {
            young: Some(m.young),
            poisson: Some(m.poisson),
            toughness: Some(m.toughness),
            ell: Some(m.ell),
            k_ell: Some(m.k_ell),
            expansion: Some(m.expansion),
            regime: Some(m.regime),
        }
    }
}

impl MaterialSection {
    fn resolve(&self, mut m: Material) -> Material {
        m.young = self.young.unwrap_or(m.young);
        m.poisson = self.poisson.unwrap_or(m.poisson);
        m.toughness = self.toughness.unwrap_or(m.toughness);
        m.ell = self.ell.unwrap_or(m.ell);
        m.k_ell = self.k_ell.unwrap_or(m.k_ell);
        m.expansion = self.expansion.unwrap_or(m.expansion);
        m.regime = self.regime.unwrap_or(m.regime);
        m
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    am_rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outer_atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_am_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_newton_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    damage_atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elastic_solver: Option<LinearSolverKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    damage_solver: Option<LinearSolverKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupled_solver: Option<CoupledSolverKind>,
}

impl From<&SolverConfig> for SolverSection {
    fn from(c: &SolverConfig) -> Self {
        SolverSection {
            method: Some(c.method),
            omega: Some(c.omega()),
            am_rtol: Some(c.am_rtol),
            outer_atol: Some(c.outer_atol),
            max_am_iterations: Some(c.max_am_iterations),
            max_newton_iterations: Some(c.max_newton_iterations),
            damage_atol: Some(c.damage_atol),
            elastic_solver: Some(c.elastic_solver),
            damage_solver: Some(c.damage_solver),
            coupled_solver: Some(c.coupled_solver),
        }
    }
}

impl SolverSection {
    fn resolve(&self) -> Result<SolverConfig> {
        let method = self.method.unwrap_or_default();
        let omega = self.omega.unwrap_or(1.0);
        let mut c = SolverConfig::new(method, omega).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Config(format!("solver.{m}")),
            other => other,
        })?;
        if method == Method::Am && omega != 1.0 {
            return Err(Error::Config(format!("solver.omega = {omega} requires a method other than am")));
        }
        c.am_rtol = self.am_rtol.unwrap_or(c.am_rtol);
        c.outer_atol = self.outer_atol.unwrap_or(c.outer_atol);
        c.max_am_iterations = self.max_am_iterations.unwrap_or(c.max_am_iterations);
        c.max_newton_iterations = self.max_newton_iterations.unwrap_or(c.max_newton_iterations);
        c.damage_atol = self.damage_atol.unwrap_or(c.damage_atol);
        c.elastic_solver = self.elastic_solver.unwrap_or(c.elastic_solver);
        c.damage_solver = self.damage_solver.unwrap_or(c.damage_solver);
        c.coupled_solver = self.coupled_solver.unwrap_or(c.coupled_solver);
        Ok(c)
    }
}

/// Deserializes `T` from a TOML document, failing with the full list of
/// keys that `T` does not recognize.
pub(crate) fn from_toml_strict<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut unknown = Vec::new();
    let value: T = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| Error::Config(e.to_string()))?;
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok(value)
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile = from_toml_strict(text)?;
    resolve(file)
}

fn resolve(file: ConfigFile) -> Result<RunConfig> {
    let case = file
        .case
        .ok_or_else(|| Error::Config("missing `case` (surfing, traction or thermal_shock)".into()))?;
    let foreign: Vec<&str> = [
        ("surfing", file.surfing.is_some(), CaseKind::Surfing),
        ("traction", file.traction.is_some(), CaseKind::Traction),
        ("thermal_shock", file.thermal_shock.is_some(), CaseKind::ThermalShock),
    ]
    .into_iter()
    .filter(|&(_, present, kind)| present && kind != case)
    .map(|(name, _, _)| name)
    .collect();
    if !foreign.is_empty() {
        return Err(Error::Config(format!(
            "sections [{}] do not apply to case {case}",
            foreign.join("], [")
        )));
    }
    let params = match case {
        CaseKind::Surfing => CaseParams::Surfing(file.surfing.unwrap_or_default()),
        CaseKind::Traction => CaseParams::Traction(file.traction.unwrap_or_default()),
        CaseKind::ThermalShock => CaseParams::ThermalShock(file.thermal_shock.unwrap_or_default()),
    };
    let config = RunConfig {
        material: file.material.resolve(default_material(case)),
        params,
        solver: file.solver.resolve()?,
        output_dir: file.output_dir,
        snapshot_stride: file.snapshot_stride.unwrap_or(DEFAULT_SNAPSHOT_STRIDE),
        seed: file.seed,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_traction_gets_defaults() {
        let c = parse_config("case = \"traction\"\n[material]\nell = 0.05\n").unwrap();
        assert_eq!(c.material.ell, 0.05);
        assert!((c.mesh_size() - 0.01).abs() < 1e-15);
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.snapshot_stride, 5);
    }

    #[test]
    fn thermal_defaults() {
        let c = parse_config("case = \"thermal_shock\"").unwrap();
        assert_eq!(c.material.ell, 1.0);
        assert_eq!(c.mesh_size(), 0.25);
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let err = parse_config("case = \"traction\"\nfoo = 1\n[material]\nyoung = 2.0\nbar = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("foo") && err.contains("material.bar"), "{err}");
    }

    #[test]
    fn omega_out_of_range() {
        for w in ["0.0", "2.0", "2.5", "-1.0"] {
            let err = parse_config(&format!("case = \"surfing\"\n[solver]\nomega = {w}\n")).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
            assert!(err.to_string().contains("(0, 2)"), "{err}");
        }
    }

    #[test]
    fn echo_round_trip() {
        let text = "case = \"surfing\"\nseed = 3\n[solver]\nmethod = \"oram_n\"\nomega = 1.6\n\
                    elastic_solver = { kind = \"cg\", precond = { kind = \"chebyshev\", degree = 4 } }\n\
                    [surfing]\nh = 0.025\nincrements = 10\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.echo()).unwrap(), c);
    }

    #[test]
    fn foreign_section_rejected() {
        assert!(parse_config("case = \"traction\"\n[surfing]\nspeed = 2.0\n").is_err());
    }

    #[test]
    fn am_with_omega_rejected() {
        assert!(parse_config("case = \"traction\"\n[solver]\nmethod = \"am\"\nomega = 1.5\n").is_err());
    }
}
