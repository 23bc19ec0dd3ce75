//! Run configuration: strict JSON in human units, resolved to SI model types.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use ringsq::model::{ModeLabel, ModeParams, PumpPulseSpec, RingConfig, DEFAULT_ROUND_TRIPS, SPEED_OF_LIGHT};
use ringsq::sweep::{DetuningSpec, Objective, PipelineSettings, SweepSpec, Toggles};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::units::{self, Dim};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ring: RingSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    pub radius: String,
    pub fsr: String,
    /// Power coupling ρ² of the bus coupler.
    pub power_coupling: f64,
    pub loss: String,
    pub pump_wavelength: String,
    /// Signal and idler sit this many FSRs above and below the pump.
    #[serde(default = "default_fsr_offset")]
    pub fsr_offset: u32,
    pub gamma_sfwm: String,
    pub gamma_spm: String,
    pub gamma_xpm: String,
    #[serde(default = "default_channels")]
    pub phantom_channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(default = "default_shape")]
    pub shape: String,
    #[serde(default = "default_fwhm")]
    pub intensity_fwhm: String,
    #[serde(default = "default_round_trips")]
    pub round_trips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_span")]
    pub span_fwhm: f64,
    #[serde(default = "default_z_steps")]
    pub z_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// List or range, e.g. "1pJ..600pJ:25".
    pub energies: String,
    /// List or range of detunings, or "auto" to track the optimum.
    #[serde(default = "default_detunings")]
    pub detunings: String,
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default = "default_bracket")]
    pub bracket: [String; 2],
    #[serde(default)]
    pub toggles: ToggleSection,
    /// Escape efficiencies; empty keeps the configured loss.
    #[serde(default)]
    pub loss_scenarios: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToggleSection {
    #[serde(default = "yes")]
    pub spm: bool,
    #[serde(default = "yes")]
    pub xpm: bool,
}

impl Default for ToggleSection {
    fn default() -> Self {
        Self { spm: true, xpm: true }
    }
}

fn default_fsr_offset() -> u32 {
    3
}
fn default_channels() -> usize {
    1
}
fn default_shape() -> String {
    "gaussian".into()
}
fn default_fwhm() -> String {
    "283 MHz".into()
}
fn default_round_trips() -> usize {
    DEFAULT_ROUND_TRIPS
}
fn default_points() -> usize {
    ringsq::model::DEFAULT_GRID_POINTS
}
fn default_span() -> f64 {
    ringsq::model::DEFAULT_SPAN_FWHM
}
fn default_z_steps() -> usize {
    ringsq::pair::DEFAULT_Z_STEPS
}
fn default_detunings() -> String {
    "0 GHz".into()
}
fn default_objective() -> Objective {
    Objective::Purity
}
fn default_bracket() -> [String; 2] {
    ["-0.8 GHz".into(), "0 GHz".into()]
}
fn yes() -> bool {
    true
}

impl Default for PulseSection {
    fn default() -> Self {
        Self { shape: default_shape(), intensity_fwhm: default_fwhm(), round_trips: default_round_trips() }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self { points: default_points(), span_fwhm: default_span(), z_steps: default_z_steps() }
    }
}

/// Everything the pipeline needs, in SI.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: RingConfig,
    pub pulse: PumpPulseSpec,
    pub settings: PipelineSettings,
    pub sweep: Option<SweepSpec>,
}

pub fn load(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_str(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_str(text: &str) -> anyhow::Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{}: {}", if path == "." { "config".into() } else { path }, e.inner())
    })
}

impl ConfigFile {
    /// Compact JSON with defaults filled in; the hashing input.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let cfg = self.ring.resolve()?;
        if self.pulse.shape != "gaussian" {
            bail!("pulse.shape: only \"gaussian\" is supported, got {:?}", self.pulse.shape);
        }
        let fwhm = field("pulse.intensity_fwhm", units::parse(&self.pulse.intensity_fwhm, Dim::Frequency))?;
        if !(fwhm > 0.0) {
            bail!("pulse.intensity_fwhm must be positive");
        }
        if self.pulse.round_trips == 0 {
            bail!("pulse.round_trips must be >= 1");
        }
        let mut pulse = PumpPulseSpec::gaussian(&cfg, 0.0, fwhm, 0.0);
        pulse.n_round_trips = self.pulse.round_trips;
        let g = &self.grid;
        if g.points < 3 || g.points.is_multiple_of(2) {
            bail!("grid.points must be odd and >= 3, got {}", g.points);
        }
        if !(g.span_fwhm > 0.0) {
            bail!("grid.span_fwhm must be positive");
        }
        if g.z_steps == 0 {
            bail!("grid.z_steps must be >= 1");
        }
        let settings = PipelineSettings {
            grid_points: g.points,
            span_fwhm: g.span_fwhm,
            z_steps: g.z_steps,
            ..PipelineSettings::default()
        };
        let sweep = self.sweep.as_ref().map(SweepSection::resolve).transpose()?;
        Ok(Resolved { cfg, pulse, settings, sweep })
    }
}

fn field<T>(name: &str, r: Result<T, String>) -> anyhow::Result<T> {
    r.map_err(|e| anyhow!("{name}: {e}"))
}

impl RingSection {
    pub fn resolve(&self) -> anyhow::Result<RingConfig> {
        let radius = field("ring.radius", units::parse(&self.radius, Dim::Length))?;
        let fsr = field("ring.fsr", units::parse(&self.fsr, Dim::Frequency))?;
        let alpha = field("ring.loss", units::parse(&self.loss, Dim::Loss))?;
        let lambda = field("ring.pump_wavelength", units::parse(&self.pump_wavelength, Dim::Length))?;
        let g_sfwm = field("ring.gamma_sfwm", units::parse(&self.gamma_sfwm, Dim::Nonlinear))?;
        let g_spm = field("ring.gamma_spm", units::parse(&self.gamma_spm, Dim::Nonlinear))?;
        let g_xpm = field("ring.gamma_xpm", units::parse(&self.gamma_xpm, Dim::Nonlinear))?;
        if !(radius > 0.0) || !(fsr > 0.0) || !(lambda > 0.0) {
            bail!("ring: radius, fsr and pump_wavelength must be positive");
        }
        if !(self.power_coupling > 0.0 && self.power_coupling < 1.0) {
            bail!("ring.power_coupling: rho^2 must lie in (0, 1), got {}", self.power_coupling);
        }
        if alpha < 0.0 {
            bail!("ring.loss: must be >= 0, got {}", self.loss);
        }
        if self.phantom_channels == 0 {
            bail!("ring.phantom_channels must be >= 1");
        }
        let length = 2.0 * PI * radius;
        let v = length * fsr;
        let rho = self.power_coupling.sqrt();
        let wp = 2.0 * PI * SPEED_OF_LIGHT / lambda;
        let shift = self.fsr_offset as f64 * 2.0 * PI * fsr;
        let mut pump = ModeParams::new(ModeLabel::Pump, wp, v, length, rho, alpha);
        pump.gamma_spm = g_spm;
        let mut signal = ModeParams::new(ModeLabel::Signal, wp + shift, v, length, rho, alpha);
        signal.gamma_xpm = g_xpm;
        let mut idler = ModeParams::new(ModeLabel::Idler, wp - shift, v, length, rho, alpha);
        idler.gamma_xpm = g_xpm;
        let cfg = RingConfig {
            length,
            pump,
            signal,
            idler,
            gamma_sfwm: g_sfwm,
            phase_mismatch: 0.0,
            freq_mismatch: 0.0,
            phantom_channels: self.phantom_channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_objective(s: &str) -> anyhow::Result<Objective> {
    match s {
        "purity" => Ok(Objective::Purity),
        "photon_number" | "photon-number" => Ok(Objective::PhotonNumber),
        other => bail!("unknown objective {other:?} (photon_number or purity)"),
    }
}

pub fn parse_bracket(pair: &[String; 2]) -> anyhow::Result<(f64, f64)> {
    Ok((field("sweep.bracket[0]", units::angular(&pair[0]))?, field("sweep.bracket[1]", units::angular(&pair[1]))?))
}

impl SweepSection {
    pub fn resolve(&self) -> anyhow::Result<SweepSpec> {
        let energies = field("sweep.energies", units::parse_values(&self.energies, Dim::Energy))?;
        let detunings = if self.detunings.trim() == "auto" {
            DetuningSpec::AutoOptimal { objective: self.objective, bracket: parse_bracket(&self.bracket)? }
        } else {
            let d = field("sweep.detunings", units::parse_values(&self.detunings, Dim::Frequency))?;
            DetuningSpec::Fixed(d.into_iter().map(|f| 2.0 * PI * f).collect())
        };
        for &eta in &self.loss_scenarios {
            if !(eta > 0.0 && eta <= 1.0) {
                bail!("sweep.loss_scenarios: {eta} outside (0, 1]");
            }
        }
        Ok(SweepSpec {
            energies,
            detunings,
            toggles: Toggles { spm: self.toggles.spm, xpm: self.toggles.xpm },
            loss_scenarios: self.loss_scenarios.clone(),
        })
    }
}
