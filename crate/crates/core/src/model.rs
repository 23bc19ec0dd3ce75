//! Physical configuration, frequency grids and unit conventions.
//!
//! Everything is SI internally: angular frequencies in rad/s, times in s,
//! lengths in m, energies in J, powers in W.

use std::f64::consts::PI;

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default number of pump round trips simulated by the Ikeda map.
pub const DEFAULT_ROUND_TRIPS: usize = 1 << 14;

/// Default grid size and span (in units of the signal resonance FWHM).
pub const DEFAULT_GRID_POINTS: usize = 201;
pub const DEFAULT_SPAN_FWHM: f64 = 32.0;

pub mod units {
    //! Conversions between human units and SI.
    use std::f64::consts::{E, PI};

    /// Cyclic frequency (Hz) to angular frequency (rad/s).
    pub fn hz_to_rad(f: f64) -> f64 {
        2.0 * PI * f
    }

    pub fn rad_to_hz(w: f64) -> f64 {
        w / (2.0 * PI)
    }

    pub fn rad_to_ghz(w: f64) -> f64 {
        w / (2.0 * PI * 1e9)
    }

    /// Power attenuation in dB/m to the field-intensity loss coefficient
    /// α in 1/m, i.e. α = α_dB / (10 log10 e).
    pub fn db_per_m_to_alpha(db: f64) -> f64 {
        db / (10.0 * E.log10())
    }

    pub fn alpha_to_db_per_m(alpha: f64) -> f64 {
        alpha * 10.0 * E.log10()
    }

    /// Vacuum wavelength (m) to angular frequency (rad/s).
    pub fn wavelength_to_rad(lambda: f64) -> f64 {
        2.0 * PI * super::SPEED_OF_LIGHT / lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeLabel {
    Pump,
    Signal,
    Idler,
}

/// Linear and nonlinear parameters of one ring resonance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeParams {
    pub label: ModeLabel,
    /// ω⁰, rad/s.
    pub resonance_freq: f64,
    /// ω̄, the simulation center, rad/s.
    pub center_freq: f64,
    pub group_velocity: f64,
    pub round_trip_time: f64,
    /// Point-coupler reflection ρ (into/out of the bus).
    pub rho: f64,
    /// Point-coupler transmission τ = sqrt(1 - ρ²).
    pub tau: f64,
    /// Propagation loss α, 1/m.
    pub alpha: f64,
    /// XPM coefficient from the pump (signal/idler only), 1/(W m).
    pub gamma_xpm: f64,
    /// SPM coefficient (pump only), 1/(W m).
    pub gamma_spm: f64,
}

impl ModeParams {
    /// A mode centred on its own resonance with no nonlinear coefficients.
    pub fn new(label: ModeLabel, resonance_freq: f64, group_velocity: f64, length: f64, rho: f64, alpha: f64) -> Self {
        Self {
            label,
            resonance_freq,
            center_freq: resonance_freq,
            group_velocity,
            round_trip_time: length / group_velocity,
            rho,
            tau: (1.0 - rho * rho).max(0.0).sqrt(),
            alpha,
            gamma_xpm: 0.0,
            gamma_spm: 0.0,
        }
    }

    pub fn fsr_hz(&self) -> f64 {
        1.0 / self.round_trip_time
    }

    /// Sets ρ and keeps τ on the unit circle.
    pub fn set_rho(&mut self, rho: f64) {
        self.rho = rho;
        self.tau = (1.0 - rho * rho).max(0.0).sqrt();
    }

    fn validate(&self, length: f64) -> Result<()> {
        let name = format!("{:?}", self.label).to_lowercase();
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{name}: {msg}")));
        for (what, v) in [
            ("resonance_freq", self.resonance_freq),
            ("center_freq", self.center_freq),
            ("group_velocity", self.group_velocity),
            ("alpha", self.alpha),
            ("gamma_xpm", self.gamma_xpm),
            ("gamma_spm", self.gamma_spm),
        ] {
            if !v.is_finite() {
                return bad(format!("{what} is not finite"));
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho = {} outside (0, 1)", self.rho));
        }
        if (self.tau * self.tau + self.rho * self.rho - 1.0).abs() > 1e-12 {
            return bad("tau^2 + rho^2 != 1".into());
        }
        if self.alpha < 0.0 {
            return bad(format!("alpha = {} < 0", self.alpha));
        }
        if self.group_velocity <= 0.0 {
            return bad("group velocity must be positive".into());
        }
        let t = length / self.group_velocity;
        if (self.round_trip_time - t).abs() > 1e-12 * t {
            return bad("round_trip_time != L / v".into());
        }
        Ok(())
    }
}

/// Ring geometry, the three interacting modes and the SFWM coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingConfig {
    /// Circumference L, m.
    pub length: f64,
    pub pump: ModeParams,
    pub signal: ModeParams,
    pub idler: ModeParams,
    pub gamma_sfwm: f64,
    /// Δk̄ = k̄_s + k̄_i - 2k̄_p, 1/m.
    pub phase_mismatch: f64,
    /// Δω̄ = ω̄_s + ω̄_i - 2ω̄_p, rad/s. Stored so it can be pinned to zero.
    pub freq_mismatch: f64,
    /// Number of phantom loss channels M.
    pub phantom_channels: usize,
}

impl RingConfig {
    /// The reference SiN device: 200 µm radius, 117 GHz FSR, 0.1 dB/cm,
    /// ρ² = 0.01, pump at 1554.2 nm with signal and idler three FSRs away,
    /// every nonlinear coefficient 1 /(W m).
    pub fn reference_device() -> Self {
        let length = 2.0 * PI * 200e-6;
        let fsr = 117e9;
        let v = length * fsr;
        let rho = 0.01_f64.sqrt();
        let alpha = units::db_per_m_to_alpha(10.0);
        let wp = units::wavelength_to_rad(1554.2e-9);
        let ws = wp + 3.0 * units::hz_to_rad(fsr);
        let wi = wp - 3.0 * units::hz_to_rad(fsr);
        let mut pump = ModeParams::new(ModeLabel::Pump, wp, v, length, rho, alpha);
        pump.gamma_spm = 1.0;
        let mut signal = ModeParams::new(ModeLabel::Signal, ws, v, length, rho, alpha);
        signal.gamma_xpm = 1.0;
        let mut idler = ModeParams::new(ModeLabel::Idler, wi, v, length, rho, alpha);
        idler.gamma_xpm = 1.0;
        Self {
            length,
            pump,
            signal,
            idler,
            gamma_sfwm: 1.0,
            phase_mismatch: 0.0,
            freq_mismatch: 0.0,
            phantom_channels: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidConfig("circumference must be positive".into()));
        }
        for m in [&self.pump, &self.signal, &self.idler] {
            m.validate(self.length)?;
        }
        if self.phantom_channels < 1 {
            return Err(Error::InvalidConfig("phantom_channels must be >= 1".into()));
        }
        if !self.gamma_sfwm.is_finite() || !self.phase_mismatch.is_finite() {
            return Err(Error::InvalidConfig("non-finite nonlinear parameters".into()));
        }
        let implied = self.signal.center_freq + self.idler.center_freq - 2.0 * self.pump.center_freq;
        // Centers are ~1e15 rad/s, so compare at a few ulps of that scale.
        let tol = 16.0 * f64::EPSILON * self.pump.center_freq.abs().max(1.0);
        if (implied - self.freq_mismatch).abs() > tol {
            return Err(Error::InvalidConfig(format!(
                "freq_mismatch {} inconsistent with mode centers ({implied})",
                self.freq_mismatch
            )));
        }
        Ok(())
    }

    /// Switches SPM and XPM on or off; SFWM is always kept.
    pub fn with_toggles(&self, spm: bool, xpm: bool) -> Self {
        let mut c = self.clone();
        if !spm {
            c.pump.gamma_spm = 0.0;
        }
        if !xpm {
            c.signal.gamma_xpm = 0.0;
            c.idler.gamma_xpm = 0.0;
        }
        c
    }

    pub fn with_channels(&self, m: usize) -> Self {
        let mut c = self.clone();
        c.phantom_channels = m;
        c
    }

    /// Chooses α for every mode so that κ_ex/(κ_ex + κ_in) = η with the
    /// couplings unchanged.
    pub fn with_escape_efficiency(&self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidConfig(format!("escape efficiency {eta} outside (0, 1]")));
        }
        let mut c = self.clone();
        let len = c.length;
        for m in [&mut c.pump, &mut c.signal, &mut c.idler] {
            m.alpha = m.rho * m.rho * (1.0 - eta) / (eta * len);
        }
        Ok(c)
    }

    /// Rescales coupling and loss together to reach the given finesse at
    /// fixed escape efficiency.
    pub fn with_finesse(&self, finesse: f64, eta: f64) -> Result<Self> {
        if !(finesse > 2.0 * PI * eta) {
            return Err(Error::InvalidConfig(format!("finesse {finesse} too low")));
        }
        let mut c = self.clone();
        // F = π / (T κ_tot) and κ_tot T = ρ² / (2η).
        let rho2 = 2.0 * PI * eta / finesse;
        for m in [&mut c.pump, &mut c.signal, &mut c.idler] {
            m.set_rho(rho2.sqrt());
        }
        c.with_escape_efficiency(eta)
    }
}

/// Decay rates of one mode in the high-Q convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeRates {
    /// κ_ex = ρ²/(2T), 1/s.
    pub kappa_ex: f64,
    /// κ_in = αL/(2T), 1/s.
    pub kappa_in: f64,
    pub kappa_tot: f64,
    pub eta_esc: f64,
    /// Resonance FWHM κ_tot/π, Hz.
    pub fwhm_hz: f64,
    pub finesse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    pub pump: ModeRates,
    pub signal: ModeRates,
    pub idler: ModeRates,
}

pub fn mode_rates(mode: &ModeParams, length: f64) -> ModeRates {
    let t = mode.round_trip_time;
    let kappa_ex = mode.rho * mode.rho / (2.0 * t);
    let kappa_in = mode.alpha * length / (2.0 * t);
    let kappa_tot = kappa_ex + kappa_in;
    let eta_esc = if kappa_in == 0.0 { 1.0 } else { kappa_ex / kappa_tot };
    let fwhm_hz = kappa_tot / PI;
    ModeRates { kappa_ex, kappa_in, kappa_tot, eta_esc, fwhm_hz, finesse: mode.fsr_hz() / fwhm_hz }
}

pub fn derive_rates(cfg: &RingConfig) -> DerivedRates {
    DerivedRates {
        pump: mode_rates(&cfg.pump, cfg.length),
        signal: mode_rates(&cfg.signal, cfg.length),
        idler: mode_rates(&cfg.idler, cfg.length),
    }
}

/// Uniform signal and idler grids, both centred on their ω̄.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub n_points: usize,
    /// Δω, rad/s.
    pub spacing: f64,
    /// Offsets x_n = ω_n - ω̄ shared by both grids, rad/s.
    pub offsets: Vec<f64>,
    pub signal_freqs: Vec<f64>,
    pub idler_freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Index of the center point.
    pub fn center(&self) -> usize {
        self.n_points / 2
    }
}

/// Span equal to `multiple` signal linewidths (FWHM), rad/s.
pub fn span_in_fwhm(cfg: &RingConfig, multiple: f64) -> f64 {
    multiple * 2.0 * mode_rates(&cfg.signal, cfg.length).kappa_tot
}

pub fn default_span(cfg: &RingConfig) -> f64 {
    span_in_fwhm(cfg, DEFAULT_SPAN_FWHM)
}

pub fn build_grid(cfg: &RingConfig, n: usize, span: f64) -> Result<FrequencyGrid> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("N = {n}; need an odd N >= 3")));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidGrid(format!("span = {span}")));
    }
    let spacing = span / (n - 1) as f64;
    if span < 2.0 * spacing {
        return Err(Error::InvalidGrid("span smaller than two grid steps".into()));
    }
    let half = (n / 2) as f64;
    let offsets: Vec<f64> = (0..n).map(|k| (k as f64 - half) * spacing).collect();
    Ok(FrequencyGrid {
        n_points: n,
        spacing,
        signal_freqs: offsets.iter().map(|x| cfg.signal.center_freq + x).collect(),
        idler_freqs: offsets.iter().map(|x| cfg.idler.center_freq + x).collect(),
        offsets,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Transform-limited Gaussian.
    Gaussian,
    /// Input samples β̃_in(t_k) at the round-trip clock, rescaled to the
    /// requested energy; the intensity-weighted centroid is the time origin.
    Samples(Vec<c64>),
}

/// The pump pulse launched into the bus waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpPulseSpec {
    pub shape: PulseShape,
    /// E_p, J.
    pub energy: f64,
    /// Spectral intensity FWHM, Hz.
    pub intensity_fwhm: f64,
    /// Center offset from the pump resonance, rad/s (negative = red).
    pub detuning: f64,
    /// Must equal the pump round-trip time.
    pub time_step: f64,
    pub n_round_trips: usize,
}

impl PumpPulseSpec {
    pub fn gaussian(cfg: &RingConfig, energy: f64, intensity_fwhm: f64, detuning: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            energy,
            intensity_fwhm,
            detuning,
            time_step: cfg.pump.round_trip_time,
            n_round_trips: DEFAULT_ROUND_TRIPS,
        }
    }

    /// The reference 283 MHz pulse.
    pub fn reference(cfg: &RingConfig, energy: f64, detuning: f64) -> Self {
        Self::gaussian(cfg, energy, 283e6, detuning)
    }

    /// RMS width σ_ω of the spectral amplitude-squared, rad/s.
    pub fn spectral_sigma(&self) -> f64 {
        units::hz_to_rad(self.intensity_fwhm) / (2.0 * (2.0 * 2f64.ln()).sqrt())
    }

    /// RMS width σ_t of the temporal intensity, s.
    pub fn temporal_sigma(&self) -> f64 {
        1.0 / (2.0 * self.spectral_sigma())
    }
}
