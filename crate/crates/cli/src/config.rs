//! Run configuration: JSON config file, model files and flag overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use exciton_fcs::bath::BathSpec;
use exciton_fcs::model::{couplings_from_rows, couplings_to_rows};
use exciton_fcs::{preset, ChannelSelector, SGrid, SiteModel};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError};

/// Temperatures used when nothing else names one.
pub const DEFAULT_TEMPERATURES: [f64; 3] = [77.0, 150.0, 300.0];
/// Default ensemble size for trajectory runs.
pub const DEFAULT_TRAJECTORIES: usize = 10_000;
/// Expected counted jumps per trajectory when `t_max` is not given.
pub const TARGET_JUMPS: f64 = 200.0;

/// Output file kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated table.
    Csv,
    /// JSON document.
    Json,
    /// SVG line plot.
    Svg,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(config(format!(
                "unknown format '{other}' (expected csv, json or svg)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        })
    }
}

/// Where the site model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    /// Built-in preset.
    Preset(String),
    /// JSON model file.
    File(PathBuf),
}

/// Bath block of a model or config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathFile {
    /// Reorganization energy, cm⁻¹.
    pub reorg_energy_cm1: Option<f64>,
    /// Cutoff frequency, cm⁻¹.
    pub cutoff_cm1: Option<f64>,
    /// Temperature, K.
    #[serde(rename = "temperature_K")]
    pub temperature_k: Option<f64>,
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    /// Site energies, cm⁻¹.
    pub energies: Vec<f64>,
    /// Symmetric coupling matrix, cm⁻¹.
    pub couplings: Vec<Vec<f64>>,
    /// Optional site labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Optional bath parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathFile>,
}

impl ModelFile {
    /// Serializable form of an in-memory model.
    pub fn from_model(model: &SiteModel, bath: Option<BathFile>) -> Self {
        Self {
            energies: model.energies().to_vec(),
            couplings: couplings_to_rows(model),
            labels: model.labels().map(<[String]>::to_vec),
            bath,
        }
    }
}

/// `--s-min/--s-max/--s-points` in file form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    /// First `s`.
    pub min: Option<f64>,
    /// Last `s`.
    pub max: Option<f64>,
    /// Number of points.
    pub points: Option<usize>,
}

/// Partial configuration; the file and the command line each supply one and
/// the command line wins.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    /// Preset name.
    pub preset: Option<String>,
    /// Model file path.
    pub model: Option<PathBuf>,
    /// Bath parameters.
    pub bath: Option<BathFile>,
    /// Temperatures in K.
    pub temperatures: Option<Vec<f64>>,
    /// Counted-channel selectors.
    pub channels: Option<Vec<String>>,
    /// Selectors for the trajectory side of an oracle check.
    pub trajectory_channels: Option<Vec<String>>,
    /// Counting-field grid.
    pub s_grid: Option<GridFile>,
    /// Output directory.
    pub out: Option<PathBuf>,
    /// Output formats.
    pub formats: Option<Vec<Format>>,
    /// RNG seed.
    pub seed: Option<u64>,
    /// Number of trajectories.
    pub trajectories: Option<usize>,
    /// Trajectory length in ps.
    pub t_max_ps: Option<f64>,
    /// Worker threads.
    pub threads: Option<usize>,
}

impl PartialConfig {
    /// Reads a JSON config file.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // model paths are relative to the config file
        if let (Some(model), Some(dir)) = (&cfg.model, path.parent()) {
            if model.is_relative() {
                cfg.model = Some(dir.join(model));
            }
        }
        Ok(cfg)
    }

    /// `self` with every value present in `over` replaced.
    pub fn overridden_by(self, over: PartialConfig) -> Self {
        // a model source from the command line replaces either kind in the file
        let source_in_over = over.preset.is_some() || over.model.is_some();
        let (preset, model) = if source_in_over {
            (over.preset, over.model)
        } else {
            (self.preset, self.model)
        };
        let s_grid = match (self.s_grid, over.s_grid) {
            (Some(a), Some(b)) => Some(GridFile {
                min: b.min.or(a.min),
                max: b.max.or(a.max),
                points: b.points.or(a.points),
            }),
            (a, b) => b.or(a),
        };
        let bath = match (self.bath, over.bath) {
            (Some(a), Some(b)) => Some(merge_bath(a, b)),
            (a, b) => b.or(a),
        };
        Self {
            preset,
            model,
            bath,
            temperatures: over.temperatures.or(self.temperatures),
            channels: over.channels.or(self.channels),
            trajectory_channels: over.trajectory_channels.or(self.trajectory_channels),
            s_grid,
            out: over.out.or(self.out),
            formats: over.formats.or(self.formats),
            seed: over.seed.or(self.seed),
            trajectories: over.trajectories.or(self.trajectories),
            t_max_ps: over.t_max_ps.or(self.t_max_ps),
            threads: over.threads.or(self.threads),
        }
    }
}

fn merge_bath(base: BathFile, over: BathFile) -> BathFile {
    BathFile {
        reorg_energy_cm1: over.reorg_energy_cm1.or(base.reorg_energy_cm1),
        cutoff_cm1: over.cutoff_cm1.or(base.cutoff_cm1),
        temperature_k: over.temperature_k.or(base.temperature_k),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Model source.
    pub source: ModelSource,
    /// Loaded site model.
    pub model: SiteModel,
    /// Reorganization energy, cm⁻¹.
    pub reorg_energy: f64,
    /// Cutoff, cm⁻¹.
    pub cutoff: f64,
    /// Temperatures in K, in the given order.
    pub temperatures: Vec<f64>,
    /// Counted-channel selectors; each gets its own output.
    pub channels: Vec<ChannelSelector>,
    /// Selectors for the trajectory pipeline, when given separately.
    pub trajectory_channels: Option<Vec<ChannelSelector>>,
    /// Counting-field grid.
    pub grid: SGrid,
    /// Output directory.
    pub out: PathBuf,
    /// Output formats.
    pub formats: BTreeSet<Format>,
    /// RNG seed.
    pub seed: u64,
    /// Number of trajectories.
    pub trajectories: usize,
    /// Trajectory length in ps; `None` targets ⟨K⟩ ≈ 200.
    pub t_max_ps: Option<f64>,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Validates `partial` and loads the model, falling back to
    /// `default_formats` when no format is given.
    pub fn resolve(partial: PartialConfig, default_formats: &[Format]) -> Result<Self, CliError> {
        let (source, model, file_bath) = match (partial.preset, partial.model) {
            (Some(_), Some(_)) => {
                return Err(config("--preset and --model are mutually exclusive"))
            }
            (Some(name), None) => {
                let model = preset(&name)?;
                (ModelSource::Preset(name), model, None)
            }
            (None, Some(path)) => {
                let (model, bath) = load_model(&path)?;
                (ModelSource::File(path), model, bath)
            }
            (None, None) => (
                ModelSource::Preset(String::from("fmo2")),
                preset("fmo2")?,
                None,
            ),
        };
        let bath = match (file_bath, partial.bath) {
            (Some(a), Some(b)) => merge_bath(a, b),
            (a, b) => b.or(a).unwrap_or_default(),
        };
        let reorg_energy = bath.reorg_energy_cm1.unwrap_or(BathSpec::FMO_REORG_ENERGY);
        let cutoff = bath.cutoff_cm1.unwrap_or(BathSpec::FMO_CUTOFF);
        BathSpec::new(reorg_energy, cutoff, 300.0)?;

        let temperatures = partial
            .temperatures
            .or(bath.temperature_k.map(|t| vec![t]))
            .unwrap_or_else(|| DEFAULT_TEMPERATURES.to_vec());
        if temperatures.is_empty() {
            return Err(config("temperature list is empty"));
        }
        for &t in &temperatures {
            if !(t.is_finite() && t > 0.0) {
                return Err(config(format!("temperature {t} K must be positive")));
            }
        }

        let channels = parse_selectors(
            partial
                .channels
                .as_deref()
                .unwrap_or(&[String::from("all-down")]),
        )?;
        if channels.is_empty() {
            return Err(config("channel list is empty"));
        }
        let trajectory_channels = partial
            .trajectory_channels
            .as_deref()
            .map(parse_selectors)
            .transpose()?;

        let g = partial.s_grid.unwrap_or_default();
        let d = SGrid::default();
        let grid = SGrid::new(
            g.min.unwrap_or(d.min),
            g.max.unwrap_or(d.max),
            g.points.unwrap_or(d.points),
        )
        .map_err(|e| config(e.to_string()))?;

        let formats: BTreeSet<Format> = partial
            .formats
            .unwrap_or_else(|| default_formats.to_vec())
            .into_iter()
            .collect();
        if formats.is_empty() {
            return Err(config("format list is empty"));
        }

        let trajectories = partial.trajectories.unwrap_or(DEFAULT_TRAJECTORIES);
        if trajectories == 0 {
            return Err(config("--traj must be at least 1"));
        }
        if let Some(t) = partial.t_max_ps {
            if !(t.is_finite() && t > 0.0) {
                return Err(config(format!("--t-max-ps must be positive, got {t}")));
            }
        }
        if partial.threads == Some(0) {
            return Err(config("--threads must be at least 1"));
        }

        Ok(Self {
            source,
            model,
            reorg_energy,
            cutoff,
            temperatures,
            channels,
            trajectory_channels,
            grid,
            out: partial.out.unwrap_or_else(|| PathBuf::from("out")),
            formats,
            seed: partial.seed.unwrap_or(1),
            trajectories,
            t_max_ps: partial.t_max_ps,
            threads: partial.threads,
        })
    }

    /// Bath at temperature `t`.
    pub fn bath(&self, t: f64) -> Result<BathSpec, CliError> {
        Ok(BathSpec::new(self.reorg_energy, self.cutoff, t)?)
    }

    /// Short model name for headers and file names.
    pub fn model_name(&self) -> String {
        match &self.source {
            ModelSource::Preset(name) => name.clone(),
            ModelSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| String::from("model")),
        }
    }
}

fn parse_selectors(texts: &[String]) -> Result<Vec<ChannelSelector>, CliError> {
    let mut out = Vec::new();
    for text in texts {
        let sel: ChannelSelector = text
            .parse()
            .map_err(|e: exciton_fcs::GeneratorError| config(e.to_string()))?;
        if !out.contains(&sel) {
            out.push(sel);
        }
    }
    Ok(out)
}

/// Reads a model file and its optional bath block.
pub fn load_model(path: &Path) -> Result<(SiteModel, Option<BathFile>), CliError> {
    let text = read(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let couplings = couplings_from_rows(&file.couplings)?;
    let model = SiteModel::new(file.energies, couplings, file.labels)?;
    Ok((model, file.bath))
}
