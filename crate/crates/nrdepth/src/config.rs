//! JSON run configuration shared by all subcommands.
//!
//! Unknown keys are rejected, every range is validated before any
//! computation starts, and command-line flags override file values.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::solver::SolverConfig;
use crate::synth::Scenario;

/// Which prior drives the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorName {
    Rigid,
    Isometric,
    Arap,
}

impl std::str::FromStr for PriorName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(PriorName::Rigid),
            "isometric" => Ok(PriorName::Isometric),
            "arap" => Ok(PriorName::Arap),
            other => Err(Error::Config(format!(
                "unknown prior {other:?}; expected rigid, isometric or arap"
            ))),
        }
    }
}

/// Parameters of the `synth` subcommand.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub scenario: Scenario,
    /// Point count of a rigid scene.
    pub n_points: usize,
    pub n_views: usize,
    /// Multibody scenes.
    pub bodies: usize,
    pub points_per_body: usize,
    pub rigid_instant: Option<(usize, usize)>,
    /// Isometric sheet grid.
    pub rows: usize,
    pub cols: usize,
    /// Total bend angle in radians reached at the last view.
    pub bend_amplitude: f64,
    /// Optional Gaussian pixel noise on the generated tracks.
    pub noise_sigma: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            scenario: Scenario::Rigid,
            n_points: 200,
            n_views: 5,
            bodies: 2,
            points_per_body: 60,
            rigid_instant: Some((0, 1)),
            rows: 20,
            cols: 20,
            bend_amplitude: 1.2,
            noise_sigma: 0.0,
        }
    }
}

/// Full run configuration: solver knobs plus prior selection, scene source,
/// output directory and evaluation/segmentation parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub prior: PriorName,
    /// Neighborhood radius in pixels for the isometric prior.
    pub isometric_radius_px: f64,
    pub solver: SolverConfig,
    pub synth: SynthParams,
    /// Exclude ground-truth depths at or beyond this value from evaluation.
    pub depth_cap: Option<f64>,
    pub segmentation_threshold: f64,
    /// Border band width in pixels for the static background embedding.
    pub border_width: f64,
    /// Compute the static embedding per pair instead of over the whole
    /// sequence.
    pub per_pair_static: bool,
    pub scene_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prior: PriorName::Rigid,
            isometric_radius_px: 20.0,
            solver: SolverConfig::default(),
            synth: SynthParams::default(),
            depth_cap: None,
            segmentation_threshold: 0.1,
            border_width: 4.0,
            per_pair_static: false,
            scene_dir: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Parse a JSON config file; unknown keys are rejected by the parser.
    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.isometric_radius_px > 0.0) {
            return Err(Error::Config(format!(
                "isometric radius must be positive, got {}",
                self.isometric_radius_px
            )));
        }
        if !(self.segmentation_threshold > 0.0) {
            return Err(Error::Config(format!(
                "segmentation threshold must be positive, got {}",
                self.segmentation_threshold
            )));
        }
        if !(self.border_width > 0.0) {
            return Err(Error::Config(format!(
                "border width must be positive, got {}",
                self.border_width
            )));
        }
        if let Some(cap) = self.depth_cap {
            if !(cap > 0.0) {
                return Err(Error::Config(format!("depth cap must be positive, got {cap}")));
            }
        }
        if !(self.synth.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise sigma must be nonnegative, got {}",
                self.synth.noise_sigma
            )));
        }
        Ok(())
    }
}
