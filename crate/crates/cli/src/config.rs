//! Scenario files: TOML with one section per model type.

use std::fs;
use std::path::Path;

use rpsquash::model::{MechanicalModel, Spectrum, Table};
use rpsquash::oracle::SimulationConfig;
use rpsquash::{
    CavityParams, Complex, DetectorParams, DriveField, FrequencyGrid, LoopFilter,
    MechanicalResponse,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_GRID_POINTS: usize = 400;
const DEFAULT_GRID_LOW: f64 = 1e-3;
const DEFAULT_GRID_HIGH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub cavity: CavitySection,
    pub drive: DriveSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanical: Option<MechanicalSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub kappa_in: f64,
    pub kappa_out: f64,
    pub kappa_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub amplitude: f64,
    #[serde(default)]
    pub amp_noise: NoiseSection,
    #[serde(default)]
    pub phase_noise: NoiseSection,
}

/// Quadrature noise spectrum, in units of the vacuum level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    Constant { value: f64 },
    Lorentzian { floor: f64, peak: f64, corner: f64 },
    Tabulated { omegas: Vec<f64>, values: Vec<f64> },
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub eta: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { eta: 1.0 }
    }
}

/// Zeros and poles are `[re, im]` pairs in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub gain: f64,
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    #[serde(default)]
    pub poles: Vec<[f64; 2]>,
    #[serde(default)]
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanicalSection {
    Constant {
        coupling: f64,
        thermal: f64,
    },
    Harmonic {
        coupling: f64,
        omega_m: f64,
        q_factor: f64,
        thermal: f64,
    },
    Tabulated {
        omegas: Vec<f64>,
        transfer: Vec<f64>,
        thermal: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

/// Missing bounds default to `1e-3·κ` and `10·κ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub burn_in: f64,
    pub welch_segment: usize,
    #[serde(default = "default_overlap")]
    pub welch_overlap: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_overlap() -> f64 {
    0.5
}

fn default_record_every() -> usize {
    1
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Copy with every defaulted grid field written out.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        let kappa = self.cavity.kappa_in + self.cavity.kappa_out + self.cavity.kappa_loss;
        let g = &mut out.grid;
        g.min.get_or_insert(DEFAULT_GRID_LOW * kappa);
        g.max.get_or_insert(DEFAULT_GRID_HIGH * kappa);
        g.points.get_or_insert(DEFAULT_GRID_POINTS);
        g.spacing.get_or_insert(Spacing::Log);
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable")
    }

    pub fn build(&self) -> Result<Scenario, CliError> {
        let resolved = self.resolved();
        let c = &resolved.cavity;
        let cavity = CavityParams::new(c.kappa_in, c.kappa_out, c.kappa_loss)
            .map_err(|e| CliError::section("cavity", e))?;
        let drive = DriveField::new(
            resolved.drive.amplitude,
            resolved.drive.amp_noise.to_spectrum()?,
            resolved.drive.phase_noise.to_spectrum()?,
        )
        .map_err(|e| CliError::section("drive", e))?;
        let det =
            DetectorParams::new(resolved.detector.eta).map_err(|e| CliError::section("detector", e))?;
        let filter = resolved.filter.as_ref().map(FilterSection::to_filter).transpose()?;
        let mech = resolved
            .mechanical
            .as_ref()
            .map(MechanicalSection::to_response)
            .transpose()?;
        let grid = resolved.grid.to_grid()?;
        let sim = resolved.simulation.as_ref().map(SimulationSection::to_config);
        Ok(Scenario {
            cavity,
            drive,
            det,
            filter,
            mech,
            grid,
            sim,
        })
    }
}

fn complex(pairs: &[[f64; 2]]) -> Vec<Complex<f64>> {
    pairs.iter().map(|&[re, im]| Complex::new(re, im)).collect()
}

fn table(omegas: &[f64], values: &[f64], section: &'static str) -> Result<Table<f64>, CliError> {
    Table::new(omegas.to_vec(), values.to_vec()).map_err(|e| CliError::section(section, e))
}

impl NoiseSection {
    fn to_spectrum(&self) -> Result<Spectrum<f64>, CliError> {
        Ok(match self {
            NoiseSection::Constant { value } => Spectrum::Constant(*value),
            NoiseSection::Lorentzian {
                floor,
                peak,
                corner,
            } => Spectrum::Lorentzian {
                floor: *floor,
                peak: *peak,
                corner: *corner,
            },
            NoiseSection::Tabulated { omegas, values } => {
                Spectrum::Tabulated(table(omegas, values, "drive")?)
            }
        })
    }
}

impl FilterSection {
    fn to_filter(&self) -> Result<LoopFilter, CliError> {
        LoopFilter::new(self.gain, complex(&self.zeros), complex(&self.poles), self.delay)
            .map_err(|e| CliError::section("filter", e))
    }
}

impl MechanicalSection {
    fn to_response(&self) -> Result<MechanicalResponse, CliError> {
        let model = match self {
            MechanicalSection::Constant { coupling, thermal } => MechanicalModel::Constant {
                coupling: *coupling,
                thermal: *thermal,
            },
            MechanicalSection::Harmonic {
                coupling,
                omega_m,
                q_factor,
                thermal,
            } => MechanicalModel::HarmonicOscillator {
                coupling: *coupling,
                omega_m: *omega_m,
                q_factor: *q_factor,
                thermal: *thermal,
            },
            MechanicalSection::Tabulated {
                omegas,
                transfer,
                thermal,
            } => MechanicalModel::Tabulated {
                transfer: table(omegas, transfer, "mechanical")?,
                thermal: table(omegas, thermal, "mechanical")?,
            },
        };
        MechanicalResponse::new(model).map_err(|e| CliError::section("mechanical", e))
    }
}

impl GridSection {
    fn to_grid(&self) -> Result<FrequencyGrid, CliError> {
        let (min, max, points) = (
            self.min.unwrap_or(DEFAULT_GRID_LOW),
            self.max.unwrap_or(DEFAULT_GRID_HIGH),
            self.points.unwrap_or(DEFAULT_GRID_POINTS),
        );
        match self.spacing.unwrap_or(Spacing::Log) {
            Spacing::Log => FrequencyGrid::log(min, max, points),
            Spacing::Linear => FrequencyGrid::linear(min, max, points),
        }
        .map_err(|e| CliError::section("grid", e))
    }
}

impl SimulationSection {
    fn to_config(&self) -> SimulationConfig<f64> {
        let mut cfg =
            SimulationConfig::new(self.dt, self.duration, self.seed, self.burn_in, self.welch_segment);
        cfg.welch_overlap = self.welch_overlap;
        cfg.record_every = self.record_every;
        cfg
    }
}

/// Validated model objects for one config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cavity: CavityParams,
    pub drive: DriveField,
    pub det: DetectorParams,
    pub filter: Option<LoopFilter>,
    pub mech: Option<MechanicalResponse>,
    pub grid: FrequencyGrid,
    pub sim: Option<SimulationConfig<f64>>,
}

impl Scenario {
    pub fn filter(&self, command: &'static str) -> Result<&LoopFilter, CliError> {
        self.filter.as_ref().ok_or(CliError::MissingFilter(command))
    }
}
