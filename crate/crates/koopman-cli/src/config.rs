//! Experiment configuration files (TOML, `spec_version = 1`).

use std::path::{Path, PathBuf};

use koopman::dynamics::{SystemDescriptor, TrigDensity};
use koopman::C64;
use serde::Deserialize;

use crate::error::CliError;

pub const SPEC_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Decompose,
    BuildSections,
    BuildPolar,
    BuildTransfer,
    VerifyAll,
    PairingStudy,
    SymbolicSuite,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Decompose => "decompose",
            Stage::BuildSections => "build-sections",
            Stage::BuildPolar => "build-polar",
            Stage::BuildTransfer => "build-transfer",
            Stage::VerifyAll => "verify-all",
            Stage::PairingStudy => "pairing-study",
            Stage::SymbolicSuite => "symbolic-suite",
        }
    }

    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Decompose | Stage::SymbolicSuite => &[],
            Stage::BuildSections | Stage::BuildPolar => &[Stage::Decompose],
            Stage::BuildTransfer => &[Stage::BuildPolar],
            Stage::VerifyAll | Stage::PairingStudy => &[Stage::BuildSections],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    FullShift { branches: usize },
    CircleMonomial { branches: usize },
    BlaschkeCover { zeros: Vec<[f64; 2]> },
    WeightedCircleMonomial { branches: usize, density: TrigDensity },
    ProductShiftRotation { branches: usize, tau: f64 },
}

impl SystemConfig {
    pub fn descriptor(&self) -> koopman::Result<SystemDescriptor> {
        match self {
            SystemConfig::FullShift { branches } => SystemDescriptor::full_shift(*branches),
            SystemConfig::CircleMonomial { branches } => SystemDescriptor::circle_monomial(*branches),
            SystemConfig::BlaschkeCover { zeros } => {
                SystemDescriptor::blaschke(zeros.iter().map(|z| C64::new(z[0], z[1])).collect())
            }
            SystemConfig::WeightedCircleMonomial { branches, density } => {
                SystemDescriptor::weighted_monomial(*branches, density.clone())
            }
            SystemConfig::ProductShiftRotation { branches, tau } => SystemDescriptor::product_rotation(*branches, *tau),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub stages: Vec<Stage>,
}

/// Sizes are cylinder depths for symbolic systems and Fourier cutoffs K for
/// circle systems.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub schedule: Vec<usize>,
    /// K_out = factor · K for the sections and lifted families (circle kinds).
    #[serde(default = "default_factor")]
    pub out_factor: usize,
    /// K_out for the composition operator and its polar decomposition.
    #[serde(default)]
    pub polar_factor: Option<usize>,
    /// Fourier cutoff in the rotation factor (product kind).
    #[serde(default = "default_modes")]
    pub product_modes: usize,
    #[serde(default)]
    pub quadrature_panels: Option<usize>,
}

fn default_factor() -> usize {
    2
}

fn default_modes() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub exact: f64,
    #[serde(default = "closed_form")]
    pub closed_form: f64,
    #[serde(default = "quadrature")]
    pub quadrature: f64,
}

fn closed_form() -> f64 {
    koopman::verify::CLOSED_FORM
}

fn quadrature() -> f64 {
    koopman::verify::QUADRATURE
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 0.0, closed_form: closed_form(), quadrature: quadrature() }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Self {
        Tolerances { exact: self.exact * k, closed_form: self.closed_form * k, quadrature: self.quadrature * k }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Txt,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Json, Format::Txt]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, formats: all_formats() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Random operators per extension comparison.
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub system: SystemConfig,
    pub pipeline: PipelineConfig,
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_trials() -> usize {
    4
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            CliError::Config { field: "toml".into(), line, message: e.message().to_string() }
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text)
    }

    fn validate(&self, text: &str) -> Result<(), CliError> {
        let err = |field: &str, message: String| CliError::Config {
            field: field.into(),
            line: find_key(text, field.rsplit('.').next().unwrap()),
            message,
        };
        if self.spec_version != SPEC_VERSION {
            return Err(err("spec_version", format!("unsupported version {}, expected {SPEC_VERSION}", self.spec_version)));
        }
        let sched = &self.truncation.schedule;
        if sched.is_empty() {
            return Err(err("truncation.schedule", "empty truncation schedule".into()));
        }
        if sched.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("truncation.schedule", "truncation sizes strictly increasing".into()));
        }
        if sched[0] == 0 {
            return Err(err("truncation.schedule", "truncation sizes must be positive".into()));
        }
        if self.truncation.out_factor < 2 || self.truncation.polar_factor.is_some_and(|f| f < 2) {
            return Err(err("truncation.out_factor", "output factor must be at least 2".into()));
        }
        for (i, stage) in self.pipeline.stages.iter().enumerate() {
            if self.pipeline.stages[..i].contains(stage) {
                return Err(err("pipeline.stages", format!("stage {} listed twice", stage.name())));
            }
            for need in stage.requires() {
                if !self.pipeline.stages[..i].contains(need) {
                    return Err(err(
                        "pipeline.stages",
                        format!("stage {} requires {} earlier in the pipeline", stage.name(), need.name()),
                    ));
                }
            }
        }
        let t = &self.tolerances;
        if [t.exact, t.closed_form, t.quadrature].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(err("tolerances", "tolerances must be finite and nonnegative".into()));
        }
        self.system.descriptor().map_err(|e| err("system", e.to_string()))?;
        Ok(())
    }

    pub fn branch_count(&self) -> usize {
        match &self.system {
            SystemConfig::BlaschkeCover { zeros } => zeros.len(),
            SystemConfig::FullShift { branches }
            | SystemConfig::CircleMonomial { branches }
            | SystemConfig::WeightedCircleMonomial { branches, .. }
            | SystemConfig::ProductShiftRotation { branches, .. } => *branches,
        }
    }
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].matches('\n').count() + 1
}

/// First line assigning `key` (or opening a `[key]` table).
fn find_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
            || l.trim() == format!("[{key}]")
    })
    .map(|i| i + 1)
}
