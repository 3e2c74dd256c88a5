//! Scenario files.
//!
//! ```toml
//! [source]
//! wavelength = 0.01
//! chi = 1.0
//! x_c = 6.0
//!
//! [surface]
//! side = 3.0
//!
//! [noise]
//! sigma2 = 10.0
//!
//! [sweep]
//! variable = "surface_area"
//! min = 1.0
//! max = 25.0
//! points = 25
//! log = false
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nearfield_crb::fieldmodel::DipoleScenario;
use nearfield_crb::montecarlo::{ObservationModel, SearchConfig};
use nearfield_crb::quadrature::QuadratureConfig;
use nearfield_crb::sweep::SweepGrid;
use nearfield_crb::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub source: SourceSection,
    pub surface: SurfaceSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub sweep: Option<SweepSection>,
    pub montecarlo: Option<MonteCarloSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Metres.
    pub wavelength: f64,
    /// Magnitude of the source amplitude, volts.
    pub chi: f64,
    /// Phase of the source amplitude, radians.
    #[serde(default)]
    pub chi_phase: f64,
    pub x_c: f64,
    #[serde(default)]
    pub y_c: f64,
    #[serde(default)]
    pub z_c: f64,
    #[serde(default)]
    pub dipole_length: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// Side `L` of the square surface, metres.
    pub side: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma2: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub nodes_per_panel: usize,
    pub panels_per_axis: usize,
    pub target_rel_tol: f64,
    pub max_refinements: usize,
    pub graded: bool,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let d = QuadratureConfig::default();
        QuadratureSection {
            nodes_per_panel: d.nodes_per_panel,
            panels_per_axis: d.panels_per_axis,
            target_rel_tol: d.target_rel_tol,
            max_refinements: d.max_refinements,
            graded: d.graded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SurfaceArea,
    Distance,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
    /// Wavelengths for a distance sweep; defaults to the source wavelength.
    pub wavelengths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    Vector,
    Scalar,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelName,
    /// Stopping size of the refinement simplex, metres.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_grid() -> usize {
    32
}

fn default_trials() -> usize {
    500
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            grid: default_grid(),
            trials: default_trials(),
            seed: 0,
            model: ModelName::Vector,
            tolerance: default_tolerance(),
        }
    }
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ScenarioFile,
    pub scenario: DipoleScenario,
    pub quadrature: QuadratureConfig,
    /// SHA-256 of the file contents.
    pub hash: String,
}

impl Loaded {
    pub fn sweep_grid(&self) -> Option<SweepGrid> {
        self.file.sweep.as_ref().map(|s| SweepGrid {
            min: s.min,
            max: s.max,
            points: s.points,
            log: s.log,
        })
    }

    pub fn montecarlo(&self) -> MonteCarloSection {
        self.file.montecarlo.clone().unwrap_or_default()
    }

    pub fn search(&self, tolerance: f64) -> SearchConfig {
        SearchConfig {
            tolerance,
            ..SearchConfig::for_scenario(&self.scenario)
        }
    }
}

impl From<ModelName> for ObservationModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Vector => ObservationModel::Vector,
            ModelName::Scalar => ObservationModel::Scalar,
        }
    }
}

fn line_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Parses scenario text. `origin` names the source in error messages.
pub fn parse(text: &str, origin: &str) -> Result<Loaded> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_of(text, span.start);
                anyhow::anyhow!("{origin}:{line}:{col}: {msg}")
            }
            None => anyhow::anyhow!("{origin}: {msg}"),
        }
    })?;
    validate(file, text, origin)
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text, &path.display().to_string())
}

fn validate(file: ScenarioFile, text: &str, origin: &str) -> Result<Loaded> {
    let src = &file.source;
    let scenario = DipoleScenario::new(
        src.wavelength,
        Complex64::from_polar(src.chi, src.chi_phase),
        [src.x_c, src.y_c, src.z_c],
        file.surface.side,
        file.noise.sigma2,
    )
    .and_then(|s| s.with_dipole_length(src.dipole_length))
    .with_context(|| format!("{origin}: invalid scenario"))?;
    if !(src.chi > 0.0) {
        bail!("{origin}: invalid scenario: source amplitude chi must be positive");
    }

    let q = &file.quadrature;
    let quadrature = QuadratureConfig {
        nodes_per_panel: q.nodes_per_panel,
        panels_per_axis: q.panels_per_axis,
        target_rel_tol: q.target_rel_tol,
        max_refinements: q.max_refinements,
        graded: q.graded,
    };
    quadrature
        .validate()
        .with_context(|| format!("{origin}: invalid [quadrature] section"))?;

    if let Some(sweep) = &file.sweep {
        SweepGrid {
            min: sweep.min,
            max: sweep.max,
            points: sweep.points,
            log: sweep.log,
        }
        .validate()
        .with_context(|| format!("{origin}: invalid [sweep] section"))?;
        if sweep.min <= 0.0 {
            bail!("{origin}: invalid [sweep] section: values must be positive");
        }
        if let Some(ls) = &sweep.wavelengths {
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                bail!("{origin}: invalid [sweep] section: wavelengths must be a non-empty list of positive values");
            }
        }
    }
    if let Some(mc) = &file.montecarlo {
        if !(mc.tolerance > 0.0) {
            bail!("{origin}: invalid [montecarlo] section: tolerance must be positive");
        }
    }

    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    Ok(Loaded {
        file,
        scenario,
        quadrature,
        hash,
    })
}
