//! Classical intracavity pump: Ikeda map with SPM, spectra and the
//! E_p / B_p kernels consumed by the pair solver.

use std::f64::consts::PI;

use faer::c64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{PulseShape, PumpPulseSpec, RingConfig};

/// Lead-in before the pulse centre, in temporal standard deviations.
const LEAD_IN_SIGMAS: f64 = 12.0;

/// Ring-down criterion: terminal over peak intracavity power.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// L_eff = (1 - e^{-αL})/α, tending to L as α → 0.
pub fn effective_length(alpha: f64, length: f64) -> f64 {
    let x = alpha * length;
    if x.abs() < 1e-8 {
        length * (1.0 - 0.5 * x)
    } else {
        -(-x).exp_m1() / alpha
    }
}

/// One round trip of loss and exact SPM phase.
pub fn spm_roundtrip(field: c64, alpha: f64, gamma_spm: f64, length: f64) -> c64 {
    let leff = effective_length(alpha, length);
    field * (-alpha * length / 2.0).exp() * c64::cis(gamma_spm * leff * field.norm_sqr())
}

/// Intracavity pump at z = 0 sampled once per round trip.
#[derive(Debug, Clone)]
pub struct PumpField {
    /// Round-trip time T_p, s.
    pub time_step: f64,
    /// Sample index taken as t = 0 (the input pulse centre).
    pub center_index: usize,
    pub input_samples: Vec<c64>,
    /// β̃_p(0, t_k), sqrt(W).
    pub time_samples: Vec<c64>,
    /// β_p(0, Ω_j) on the ascending grid Ω_j = (j - n/2) Δω_pump.
    pub spectrum: Vec<c64>,
    pub spectral_spacing: f64,
    pub warnings: Vec<String>,
}

impl PumpField {
    /// Wraps intracavity samples directly (no Ikeda iteration).
    pub fn from_samples(samples: Vec<c64>, center_index: usize, time_step: f64) -> Self {
        let n = samples.len();
        let spectrum = time_to_spectrum(&samples, center_index, time_step);
        Self {
            time_step,
            center_index,
            input_samples: vec![c64::new(0.0, 0.0); n],
            time_samples: samples,
            spectrum,
            spectral_spacing: 2.0 * PI / (n as f64 * time_step),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.center_index as f64) * self.time_step
    }

    /// Relative pump frequency Ω_j (offset from ω̄_p), rad/s.
    pub fn frequency(&self, j: usize) -> f64 {
        (j as f64 - (self.len() / 2) as f64) * self.spectral_spacing
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.frequency(j)).collect()
    }

    /// Σ|β̃|² T (J-equivalent circulating energy per unit time window).
    pub fn temporal_energy(&self) -> f64 {
        self.time_samples.iter().map(|b| b.norm_sqr()).sum::<f64>() * self.time_step
    }

    pub fn spectral_energy(&self) -> f64 {
        self.spectrum.iter().map(|b| b.norm_sqr()).sum::<f64>() * self.spectral_spacing
    }

    pub fn input_energy(&self) -> f64 {
        self.input_samples.iter().map(|b| b.norm_sqr()).sum::<f64>() * self.time_step
    }

    pub fn peak_index(&self) -> usize {
        argmax(self.time_samples.iter().map(|b| b.norm_sqr()))
    }

    pub fn is_truncated(&self) -> bool {
        !self.warnings.is_empty()
    }
}

fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Σ_k s_k e^{iΩ_j (k - c) T} on the ascending grid Ω_j = (j - n/2) 2π/(nT).
fn dtft_grid(samples: &[c64], center: usize, planner: &mut FftPlanner<f64>) -> Vec<c64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    planner.plan_fft_inverse(n).process(&mut buf);
    let half = n / 2;
    (0..n)
        .map(|j| {
            let m = j as i64 - half as i64;
            let idx = m.rem_euclid(n as i64) as usize;
            let ph = -2.0 * PI * ((m * center as i64).rem_euclid(n as i64)) as f64 / n as f64;
            buf[idx] * c64::cis(ph)
        })
        .collect()
}

/// Unitary spectrum β(Ω) = (T/√2π) Σ_k β̃_k e^{iΩ t_k}.
pub fn time_to_spectrum(samples: &[c64], center: usize, time_step: f64) -> Vec<c64> {
    let mut planner = FftPlanner::new();
    let scale = time_step / (2.0 * PI).sqrt();
    dtft_grid(samples, center, &mut planner).into_iter().map(|v| v * scale).collect()
}

/// Inverse of [`time_to_spectrum`].
pub fn spectrum_to_time(spectrum: &[c64], center: usize, time_step: f64) -> Vec<c64> {
    let n = spectrum.len();
    let half = n / 2;
    let mut buf = vec![c64::new(0.0, 0.0); n];
    for (j, v) in spectrum.iter().enumerate() {
        let m = j as i64 - half as i64;
        let ph = 2.0 * PI * ((m * center as i64).rem_euclid(n as i64)) as f64 / n as f64;
        buf[m.rem_euclid(n as i64) as usize] = *v * c64::cis(ph);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = (2.0 * PI).sqrt() / (n as f64 * time_step);
    buf.into_iter().map(|v| v * scale).collect()
}

/// Input samples at the round-trip clock and the index of t = 0.
pub fn input_samples(spec: &PumpPulseSpec) -> Result<(Vec<c64>, usize)> {
    let n = spec.n_round_trips;
    let dt = spec.time_step;
    if n < 2 || !(dt > 0.0) {
        return Err(Error::InvalidConfig("pump window needs >= 2 round trips and dt > 0".into()));
    }
    if !(spec.energy >= 0.0 && spec.energy.is_finite()) {
        return Err(Error::InvalidConfig(format!("pump energy {} invalid", spec.energy)));
    }
    let (mut samples, center) = match &spec.shape {
        PulseShape::Gaussian => {
            if !(spec.intensity_fwhm > 0.0) {
                return Err(Error::InvalidConfig("pulse FWHM must be positive".into()));
            }
            let sigma_t = spec.temporal_sigma();
            let center = (LEAD_IN_SIGMAS * sigma_t / dt).ceil() as usize;
            if center >= n {
                return Err(Error::InvalidConfig(format!(
                    "window of {n} round trips shorter than pulse lead-in ({center})"
                )));
            }
            let s: Vec<c64> = (0..n)
                .map(|k| {
                    let t = (k as f64 - center as f64) * dt;
                    c64::cis(-spec.detuning * t) * (-t * t / (4.0 * sigma_t * sigma_t)).exp()
                })
                .collect();
            (s, center)
        }
        PulseShape::Samples(given) => {
            if given.len() > n {
                return Err(Error::InvalidConfig("more input samples than round trips".into()));
            }
            let mut s = given.clone();
            s.resize(n, c64::new(0.0, 0.0));
            let w: f64 = s.iter().map(|b| b.norm_sqr()).sum();
            let c = if w > 0.0 {
                (s.iter().enumerate().map(|(k, b)| k as f64 * b.norm_sqr()).sum::<f64>() / w).round() as usize
            } else {
                0
            };
            (s, c)
        }
    };
    let e: f64 = samples.iter().map(|b| b.norm_sqr()).sum::<f64>() * dt;
    let scale = if e > 0.0 { (spec.energy / e).sqrt() } else { 0.0 };
    for s in &mut samples {
        *s *= scale;
    }
    Ok((samples, center))
}

/// Runs the Ikeda map over the whole window.
pub fn run_ikeda(spec: &PumpPulseSpec, cfg: &RingConfig) -> Result<PumpField> {
    let p = &cfg.pump;
    if (spec.time_step - p.round_trip_time).abs() > 1e-9 * p.round_trip_time {
        return Err(Error::InvalidConfig("pump time step must equal the pump round-trip time".into()));
    }
    let (input, center) = input_samples(spec)?;
    let dt = spec.time_step;
    let atten = (-p.alpha * cfg.length / 2.0).exp();
    let nl = p.gamma_spm * effective_length(p.alpha, cfg.length);
    let phase = c64::cis((p.center_freq - p.resonance_freq) * dt);
    let coupling = c64::new(0.0, p.rho);

    let mut field = Vec::with_capacity(input.len());
    let mut prev = c64::new(0.0, 0.0);
    for (k, inp) in input.iter().enumerate() {
        let next = prev * c64::cis(nl * prev.norm_sqr()) * (p.tau * atten) * phase + coupling * inp;
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(Error::PumpDiverged { round_trip: k });
        }
        field.push(next);
        prev = next;
    }

    let peak = field.iter().map(|b| b.norm_sqr()).fold(0.0, f64::max);
    let last = field.last().map_or(0.0, |b| b.norm_sqr());
    let mut warnings = Vec::new();
    if peak > 0.0 && last > TRUNCATION_THRESHOLD * peak {
        warnings.push(format!(
            "pump window truncated: terminal/peak intracavity power = {:.3e} (> {TRUNCATION_THRESHOLD:e}); \
             increase n_round_trips",
            last / peak
        ));
    }
    let mut out = PumpField::from_samples(field, center, dt);
    out.input_samples = input;
    out.warnings = warnings;
    Ok(out)
}

/// Field leaving the coupler into the bus, from the second row of the
/// coupler matrix.
pub fn bus_output(field: &PumpField, cfg: &RingConfig) -> Vec<c64> {
    let p = &cfg.pump;
    let phase = c64::cis((p.center_freq - p.resonance_freq) * field.time_step);
    let mut prev = c64::new(0.0, 0.0);
    field
        .time_samples
        .iter()
        .zip(&field.input_samples)
        .map(|(b, inp)| {
            let back = spm_roundtrip(prev, p.alpha, p.gamma_spm, cfg.length) * phase;
            prev = *b;
            c64::new(0.0, p.rho) * back + inp * p.tau
        })
        .collect()
}

/// Autocorrelation E_p and effective pump B_p.
///
/// The arrays hold both kernels on the pump frequency lattice
/// (j - n/2) Δω_pump; `*_at` interpolate linearly and vanish outside it.
/// The `*_lattice` evaluators sum the defining time-domain series
/// T Σ_k w_k e^{iΩ t_k} directly and are exact at any frequency.
#[derive(Debug, Clone)]
pub struct PumpKernels {
    pub spacing: f64,
    pub autocorr: Vec<c64>,
    pub effective_pump: Vec<c64>,
    time_step: f64,
    /// (t_k, |β̃_k|², β̃_k²) for the nonzero samples.
    terms: Vec<(f64, f64, c64)>,
}

pub fn build_kernels(field: &PumpField) -> PumpKernels {
    let n = field.len();
    let dt = field.time_step;
    let power: Vec<c64> = field.time_samples.iter().map(|b| c64::new(b.norm_sqr(), 0.0)).collect();
    let square: Vec<c64> = field.time_samples.iter().map(|b| b * b).collect();
    let mut planner = FftPlanner::new();
    let autocorr = dtft_grid(&power, field.center_index, &mut planner).into_iter().map(|v| v * dt).collect();
    let effective_pump = dtft_grid(&square, field.center_index, &mut planner).into_iter().map(|v| v * dt).collect();
    let terms = (0..n)
        .filter(|&k| field.time_samples[k].norm_sqr() > 0.0)
        .map(|k| (field.time(k), power[k].re, square[k]))
        .collect();
    PumpKernels { spacing: 2.0 * PI / (n as f64 * dt), autocorr, effective_pump, time_step: dt, terms }
}

impl PumpKernels {
    fn interp(&self, values: &[c64], x: f64) -> c64 {
        let n = values.len();
        let pos = x / self.spacing + (n / 2) as f64;
        if !(pos >= 0.0 && pos <= (n - 1) as f64) {
            return c64::new(0.0, 0.0);
        }
        let i = (pos.floor() as usize).min(n - 2);
        let f = pos - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }

    /// E_p(Δ) by linear interpolation.
    pub fn autocorr_at(&self, delta: f64) -> c64 {
        self.interp(&self.autocorr, delta)
    }

    /// B_p(Σ) by linear interpolation; Σ is relative to 2ω̄_p.
    pub fn effective_pump_at(&self, sigma: f64) -> c64 {
        self.interp(&self.effective_pump, sigma)
    }

    fn lattice(&self, start: f64, step: f64, count: usize, pick: impl Fn(&(f64, f64, c64)) -> c64) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); count];
        for term in &self.terms {
            let t = term.0;
            let mut z = pick(term) * c64::cis(start * t);
            let rot = c64::cis(step * t);
            for o in out.iter_mut() {
                *o += z;
                z *= rot;
            }
        }
        for o in &mut out {
            *o *= self.time_step;
        }
        out
    }

    /// Exact E_p at start + j·step, j = 0..count.
    pub fn autocorr_lattice(&self, start: f64, step: f64, count: usize) -> Vec<c64> {
        self.lattice(start, step, count, |t| c64::new(t.1, 0.0))
    }

    /// Exact B_p at start + j·step, j = 0..count.
    pub fn effective_pump_lattice(&self, start: f64, step: f64, count: usize) -> Vec<c64> {
        self.lattice(start, step, count, |t| t.2)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{units, RingConfig};
    use proptest::prelude::*;

    fn reference() -> RingConfig {
        RingConfig::reference_device()
    }

    #[test]
    fn spm_linear_and_lossless_limits() {
        let f = c64::new(0.3, -0.4);
        let a = spm_roundtrip(f, 1.5, 0.0, 2e-3);
        assert!((a - f * (-1.5e-3f64).exp()).norm() < 1e-15);
        let b = spm_roundtrip(f, 0.0, 2.0, 1e-3);
        assert!((b.norm() - f.norm()).abs() < 1e-15);
        assert!((b - f * c64::cis(2.0 * 1e-3 * 0.25)).norm() < 1e-15);
    }

    #[test]
    #[allow(clippy::approx_constant)] // the rounded α of the 0.1 dB/cm device
    fn attenuation_factor_reference() {
        let g = spm_roundtrip(c64::new(1.0, 0.0), 2.3026, 0.0, 1.2566e-3);
        assert!((g.re - 0.998554).abs() < 1e-6, "{}", g.re);
    }

    #[test]
    fn zero_input_gives_zero_field() {
        let cfg = reference();
        let spec = PumpPulseSpec::reference(&cfg, 0.0, 0.0);
        let f = run_ikeda(&spec, &cfg).unwrap();
        assert!(f.time_samples.iter().all(|b| b.norm() == 0.0));
        let k = build_kernels(&f);
        assert!(k.autocorr.iter().chain(&k.effective_pump).all(|b| b.norm() == 0.0));
        assert!(k.autocorr_lattice(-1e9, 1e8, 5).iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn cw_enhancement_fixed_point() {
        let mut cfg = reference();
        cfg.pump.gamma_spm = 0.0;
        let mut spec = PumpPulseSpec::reference(&cfg, 1.0, 0.0);
        spec.shape = PulseShape::Samples(vec![c64::new(1.0, 0.0); spec.n_round_trips]);
        let f = run_ikeda(&spec, &cfg).unwrap();
        let k = f.len() - 1;
        let ratio = (f.time_samples[k] / f.input_samples[k]).norm_sqr();
        let p = &cfg.pump;
        let d = 1.0 - p.tau * (-p.alpha * cfg.length / 2.0).exp();
        let expect = p.rho * p.rho / (d * d);
        assert!((ratio - expect).abs() < 1e-9 * expect, "{ratio} vs {expect}");
        assert!((expect - 240.3).abs() < 0.2, "{expect}");
    }

    #[test]
    fn lossless_cw_matches_enhancement_function() {
        let mut cfg = reference();
        cfg.pump.gamma_spm = 0.0;
        cfg.pump.alpha = 0.0;
        for detune_mhz in [0.0, 150.0, -400.0] {
            let w = units::hz_to_rad(detune_mhz * 1e6);
            let mut spec = PumpPulseSpec::reference(&cfg, 1.0, 0.0);
            let dt = spec.time_step;
            spec.shape = PulseShape::Samples((0..spec.n_round_trips).map(|k| c64::cis(-w * k as f64 * dt)).collect());
            let f = run_ikeda(&spec, &cfg).unwrap();
            let k = f.len() - 1;
            let got = f.time_samples[k] / f.input_samples[k];
            let p = &cfg.pump;
            let expect = c64::new(0.0, p.rho) / (1.0 - c64::cis(w * dt) * p.tau);
            assert!((got - expect).norm() < 1e-8 * expect.norm(), "{detune_mhz}: {got} {expect}");
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let cfg = reference();
        let spec = PumpPulseSpec::reference(&cfg, 5e-12, units::hz_to_rad(-0.3e9));
        let f = run_ikeda(&spec, &cfg).unwrap();
        let (et, ew) = (f.temporal_energy(), f.spectral_energy());
        assert!((et - ew).abs() < 1e-10 * et);
        let back = spectrum_to_time(&f.spectrum, f.center_index, f.time_step);
        let scale = f.time_samples.iter().map(|b| b.norm()).fold(0.0, f64::max);
        for (a, b) in back.iter().zip(&f.time_samples) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
        assert!((f.input_energy() - 5e-12).abs() < 1e-24);
    }

    #[test]
    fn lossless_energy_conservation_with_spm() {
        let mut cfg = reference();
        cfg.pump.alpha = 0.0;
        cfg.pump.gamma_spm = 5.0;
        let spec = PumpPulseSpec::reference(&cfg, 200e-12, 0.0);
        let f = run_ikeda(&spec, &cfg).unwrap();
        let out = bus_output(&f, &cfg);
        let eo: f64 = out.iter().map(|b| b.norm_sqr()).sum::<f64>() * f.time_step;
        let ei = f.input_energy();
        // Energy still stored in the ring at the end of the window.
        let stored = f.time_samples.last().unwrap().norm_sqr() * f.time_step / (cfg.pump.rho.powi(2));
        assert!(((eo - ei) / ei).abs() < 1e-8 + stored / ei, "{eo} {ei}");
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn low_gain_spectrum_is_enhancement_times_input() {
        let mut cfg = reference();
        cfg.pump.gamma_spm = 0.0;
        let spec = PumpPulseSpec::reference(&cfg, 1e-12, 0.0);
        let f = run_ikeda(&spec, &cfg).unwrap();
        let input = time_to_spectrum(&f.input_samples, f.center_index, f.time_step);
        let p = &cfg.pump;
        let peak = f.spectrum.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let jmax = argmax(f.spectrum.iter().map(|b| b.norm()));
        assert_eq!(f.frequency(jmax), 0.0);
        for (j, &x) in input.iter().enumerate() {
            let w = f.frequency(j);
            let l = c64::new(0.0, p.rho)
                / (1.0 - c64::cis(w * p.round_trip_time) * p.tau * (-p.alpha * cfg.length / 2.0).exp());
            let expect = l * x;
            if expect.norm() > 1e-3 * peak {
                assert!((f.spectrum[j] - expect).norm() < 1e-6 * expect.norm(), "j = {j}");
            }
        }
    }

    #[test]
    fn gaussian_self_convolution_width() {
        let cfg = reference();
        let spec = PumpPulseSpec::reference(&cfg, 1e-12, units::hz_to_rad(0.2e9));
        let (s, c) = input_samples(&spec).unwrap();
        let f = PumpField::from_samples(s, c, spec.time_step);
        let k = build_kernels(&f);
        let sigma = spec.spectral_sigma();
        let center = 2.0 * spec.detuning;
        // |B_p| peaks at the pulse energy for a transform-limited Gaussian.
        let peak = spec.energy;
        for j in 0..f.len() {
            let x = f.frequency(j);
            let expect = peak * (-(x - center).powi(2) / (4.0 * 2.0 * sigma * sigma)).exp();
            assert!((k.effective_pump[j].norm() - expect).abs() < 1e-6 * peak, "j = {j}");
        }
    }

    #[test]
    fn autocorr_zero_lag_is_spectral_energy() {
        let cfg = reference();
        let spec = PumpPulseSpec::reference(&cfg, 3e-12, 0.0);
        let f = run_ikeda(&spec, &cfg).unwrap();
        let k = build_kernels(&f);
        let e0 = k.autocorr_at(0.0);
        assert!((e0.re - f.spectral_energy()).abs() < 1e-12 * e0.re);
        assert!(e0.im.abs() < 1e-12 * e0.re);
        let ex = k.autocorr_lattice(0.0, 1.0, 1)[0];
        assert!((ex - e0).norm() < 1e-12 * e0.re);
    }

    #[test]
    fn exact_and_interpolated_kernels_agree() {
        let cfg = reference();
        let spec = PumpPulseSpec::reference(&cfg, 100e-12, units::hz_to_rad(-0.3e9));
        let f = run_ikeda(&spec, &cfg).unwrap();
        let k = build_kernels(&f);
        // On-lattice the two evaluations coincide.
        let bmax = k.effective_pump.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let start = -120.0 * k.spacing;
        let on = k.effective_pump_lattice(start, k.spacing, 41);
        for (j, v) in on.iter().enumerate() {
            let w = k.effective_pump_at(start + j as f64 * k.spacing);
            assert!((v - w).norm() < 1e-10 * bmax);
        }
        // Off-lattice the interpolation error stays small.
        let scale = k.autocorr_at(0.0).norm();
        let ex = k.autocorr_lattice(-1.3e9, 0.37e8, 60);
        for (j, v) in ex.iter().enumerate() {
            let w = k.autocorr_at(-1.3e9 + j as f64 * 0.37e8);
            assert!((v - w).norm() < 2e-3 * scale);
        }
    }

    #[test]
    fn diverging_field_reports_round_trip() {
        let mut cfg = reference();
        // SPM alone preserves |β|, so only a non-finite phase can blow up.
        cfg.pump.gamma_spm = f64::INFINITY;
        let spec = PumpPulseSpec::reference(&cfg, 1e-12, 0.0);
        match run_ikeda(&spec, &cfg) {
            Err(Error::PumpDiverged { .. }) => {}
            other => panic!("expected divergence, got ok = {}", other.is_ok()),
        }
    }

    #[test]
    fn short_window_is_flagged() {
        let cfg = reference();
        let mut spec = PumpPulseSpec::reference(&cfg, 1e-12, 0.0);
        spec.n_round_trips = 1500;
        let f = run_ikeda(&spec, &cfg).unwrap();
        assert!(f.is_truncated());
        spec.n_round_trips = 1 << 14;
        assert!(!run_ikeda(&spec, &cfg).unwrap().is_truncated());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn autocorr_is_hermitian(energy in 0.1f64..50.0, det in -0.8f64..0.8, x in 0.0f64..3e9) {
            let cfg = reference();
            let mut spec = PumpPulseSpec::reference(&cfg, energy * 1e-12, units::hz_to_rad(det * 1e9));
            spec.n_round_trips = 4096;
            let f = run_ikeda(&spec, &cfg).unwrap();
            let k = build_kernels(&f);
            let v = k.autocorr_lattice(-x, 2.0 * x, 2);
            let scale = k.autocorr_at(0.0).norm();
            prop_assert!((v[0] - v[1].conj()).norm() < 1e-12 * scale);
            let (a, b) = (k.autocorr_at(x), k.autocorr_at(-x));
            prop_assert!((a - b.conj()).norm() < 1e-12 * scale);
        }

        #[test]
        fn effective_pump_exchange_symmetric(w1 in -2e9f64..2e9, w2 in -2e9f64..2e9) {
            let cfg = reference();
            let mut spec = PumpPulseSpec::reference(&cfg, 1e-12, 0.0);
            spec.n_round_trips = 4096;
            let f = run_ikeda(&spec, &cfg).unwrap();
            let k = build_kernels(&f);
            prop_assert_eq!(k.effective_pump_at(w1 + w2), k.effective_pump_at(w2 + w1));
        }
    }
}
