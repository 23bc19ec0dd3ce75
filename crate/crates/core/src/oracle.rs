//! Closed-form low-gain transfer functions and the high-Q coupled-mode
//! reduction of Q. These are written from scratch and share no code with
//! the pair solver, so they can be used to check it.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::linalg::CMat;
use crate::model::{mode_rates, FrequencyGrid, ModeParams, PumpPulseSpec, RingConfig};
use crate::pump::PumpKernels;

fn round_trip_factor(mode: &ModeParams, length: f64, detune: f64) -> c64 {
    c64::from_polar((-mode.alpha * length / 2.0).exp(), detune * mode.round_trip_time)
}

/// Cavity enhancement L_m(ω) = iρ / (1 - τ e^{-αL/2} e^{i(ω-ω⁰)T}).
pub fn enhancement(mode: &ModeParams, length: f64, omega: f64) -> c64 {
    enhancement_at_detuning(mode, length, omega - mode.resonance_freq)
}

/// L_m as a function of ω - ω⁰ (avoids cancellation in absolute frequencies).
pub fn enhancement_at_detuning(mode: &ModeParams, length: f64, detune: f64) -> c64 {
    let d = c64::new(1.0, 0.0) - round_trip_factor(mode, length, detune) * mode.tau;
    c64::new(0.0, mode.rho) / d
}

/// All-pass transmission H_m(ω) = (τ - e^{-αL/2}e^{iθ}) / (1 - τ e^{-αL/2}e^{iθ}).
pub fn transmission(mode: &ModeParams, length: f64, omega: f64) -> c64 {
    transmission_at_detuning(mode, length, omega - mode.resonance_freq)
}

pub fn transmission_at_detuning(mode: &ModeParams, length: f64, detune: f64) -> c64 {
    let g = round_trip_factor(mode, length, detune);
    (c64::new(mode.tau, 0.0) - g) / (c64::new(1.0, 0.0) - g * mode.tau)
}

/// ω - ω⁰ on a grid, from the exact offsets.
fn grid_detunings(mode: &ModeParams, grid: &FrequencyGrid) -> Vec<f64> {
    let base = mode.center_freq - mode.resonance_freq;
    grid.offsets.iter().map(|x| base + x).collect()
}

/// High-Q Lorentzian 2κ_ex / (T (κ_tot² + (ω-ω⁰)²)) approximating |L_m|².
pub fn lorentzian_enhancement(mode: &ModeParams, length: f64, omega: f64) -> f64 {
    let r = mode_rates(mode, length);
    let d = omega - mode.resonance_freq;
    2.0 * r.kappa_ex / (mode.round_trip_time * (r.kappa_tot * r.kappa_tot + d * d))
}

/// Bus input spectrum of a Gaussian pulse, relative to the pump resonance,
/// together with an integration window outside which it is below 1e-16.
pub fn gaussian_input_spectrum(spec: &PumpPulseSpec) -> (impl Fn(f64) -> c64, (f64, f64)) {
    let st = spec.temporal_sigma();
    let amp = (spec.energy / ((2.0 * PI).sqrt() * st)).sqrt();
    let peak = amp * 2f64.sqrt() * st;
    let delta = spec.detuning;
    let reach = 6.2 / st;
    (
        move |nu: f64| {
            let u = st * (nu - delta);
            c64::new(peak * (-u * u).exp(), 0.0)
        },
        (delta - reach, delta + reach),
    )
}

/// Low-gain effective pump B(Σ) = ∫ β_in(Σ-ν) β_in(ν) L_p(Σ-ν) L_p(ν) dν,
/// Σ relative to twice the pump resonance, by composite Simpson on `window`.
pub fn low_gain_effective_pump(
    input: &impl Fn(f64) -> c64,
    window: (f64, f64),
    cfg: &RingConfig,
    sigma: f64,
    panels: usize,
) -> c64 {
    let panels = panels + panels % 2;
    let (a, b) = window;
    let h = (b - a) / panels as f64;
    let f = |nu: f64| {
        let mu = sigma - nu;
        input(nu)
            * input(mu)
            * enhancement_at_detuning(&cfg.pump, cfg.length, nu)
            * enhancement_at_detuning(&cfg.pump, cfg.length, mu)
    };
    let mut s = f(a) + f(b);
    for k in 1..panels {
        let wgt = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + k as f64 * h) * wgt;
    }
    s * (h / 3.0)
}

/// JSA_{nm} = i (γL/2π) B(ω_{s,n}+ω_{i,m}) L_s(ω_{s,n}) L_i*(ω_{i,m}) Δω for an
/// arbitrary effective-pump function of Σ (relative to 2ω_p⁰).
pub fn jsa_from_pump_function(bp: impl Fn(f64) -> c64, cfg: &RingConfig, grid: &FrequencyGrid) -> CMat {
    let n = grid.n_points;
    let ds = grid_detunings(&cfg.signal, grid);
    let di = grid_detunings(&cfg.idler, grid);
    let ls: Vec<c64> = ds.iter().map(|&d| enhancement_at_detuning(&cfg.signal, cfg.length, d)).collect();
    let li: Vec<c64> = di.iter().map(|&d| enhancement_at_detuning(&cfg.idler, cfg.length, d).conj()).collect();
    // ω_s⁰ + ω_i⁰ - 2ω_p⁰, zero when the resonances are equally spaced.
    let res_mismatch =
        (cfg.signal.resonance_freq - cfg.pump.resonance_freq) + (cfg.idler.resonance_freq - cfg.pump.resonance_freq);
    // Σ depends only on n + m.
    let sums: Vec<c64> = (0..2 * n - 1)
        .map(|s| {
            let (i, j) = if s < n { (s, 0) } else { (n - 1, s - n + 1) };
            bp(ds[i] + di[j] + res_mismatch)
        })
        .collect();
    let pre = c64::new(0.0, cfg.gamma_sfwm * cfg.length / (2.0 * PI) * grid.spacing);
    Mat::from_fn(n, n, |r, c| pre * sums[r + c] * ls[r] * li[c])
}

/// First-order S^{aa}_si for a Gaussian input pulse; SPM and XPM ignored.
pub fn first_order_jsa(spec: &PumpPulseSpec, cfg: &RingConfig, grid: &FrequencyGrid) -> CMat {
    let (input, window) = gaussian_input_spectrum(spec);
    jsa_from_pump_function(|s| low_gain_effective_pump(&input, window, cfg, s, 4000), cfg, grid)
}

/// The high-Q approximation of Q in the (a_s, a_i†) storage layout:
/// Q_ss = [κ_tot - i(ω-ω⁰)]T - iL(Δk_s + 2γ_xpm E_p Δω/2π),
/// Q_si = -i(γL/2π) B_p Δω, with the idler blocks of the same form.
pub fn tcmt_q(kernels: &PumpKernels, cfg: &RingConfig, grid: &FrequencyGrid) -> CMat {
    let n = grid.n_points;
    let l = cfg.length;
    let dw = grid.spacing;
    let vp = cfg.pump.group_velocity;
    let i = c64::new(0.0, 1.0);
    let x = &grid.offsets;
    let same = |mode: &ModeParams, r: usize, c: usize| -> c64 {
        let rates = mode_rates(mode, l);
        let mut v = -i * (2.0 * mode.gamma_xpm * l / (2.0 * PI)) * kernels.autocorr_at(x[r] - x[c]) * dw;
        if r == c {
            let walk = x[r] * (1.0 / mode.group_velocity - 1.0 / vp);
            let detune = (mode.center_freq - mode.resonance_freq) + x[r];
            v += c64::new(rates.kappa_tot, -detune) * mode.round_trip_time;
            v -= i * walk * l;
        }
        v
    };
    let cross = |r: usize, c: usize| -> c64 {
        let s = x[r] + x[c] + cfg.freq_mismatch;
        -i * (cfg.gamma_sfwm * l / (2.0 * PI)) * kernels.effective_pump_at(s) * dw
    };
    Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => same(&cfg.signal, r, c),
        (true, false) => cross(r, c - n),
        (false, true) => cross(c, r - n).conj(),
        (false, false) => same(&cfg.idler, r - n, c - n).conj(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, span_in_fwhm, ModeLabel};
    use proptest::prelude::*;

    fn cfg() -> RingConfig {
        RingConfig::reference_device()
    }

    #[test]
    fn on_resonance_transmission() {
        let c = cfg();
        let h = transmission(&c.signal, c.length, c.signal.resonance_freq).norm_sqr();
        assert!((h - 0.3057).abs() < 1e-4, "{h}");
        let lp = enhancement(&c.pump, c.length, c.pump.resonance_freq).norm_sqr();
        assert!((lp - 240.3).abs() < 0.1, "{lp}");
    }

    #[test]
    fn zero_pump_jsa_vanishes() {
        let c = cfg();
        let g = build_grid(&c, 21, span_in_fwhm(&c, 8.0)).unwrap();
        let spec = PumpPulseSpec::reference(&c, 0.0, 0.0);
        let j = first_order_jsa(&spec, &c, &g);
        assert_eq!(crate::linalg::max_abs(j.as_ref()), 0.0);
    }

    #[test]
    fn jsa_is_linear_in_energy() {
        let c = cfg();
        let g = build_grid(&c, 15, span_in_fwhm(&c, 8.0)).unwrap();
        let a = first_order_jsa(&PumpPulseSpec::reference(&c, 1e-12, 0.0), &c, &g);
        let b = first_order_jsa(&PumpPulseSpec::reference(&c, 2e-12, 0.0), &c, &g);
        for r in 0..15 {
            for k in 0..15 {
                assert!((b[(r, k)] - a[(r, k)] * 2.0).norm() <= 1e-12 * b[(r, k)].norm());
            }
        }
    }

    #[test]
    fn flat_pump_gives_separable_jsa() {
        let c = cfg();
        let g = build_grid(&c, 31, span_in_fwhm(&c, 10.0)).unwrap();
        let j = jsa_from_pump_function(|_| c64::new(1e-3, 0.0), &c, &g);
        let s = j.svd().unwrap();
        let sv = s.S();
        assert!(sv[1].re < 1e-12 * sv[0].re);
    }

    #[test]
    fn gaussian_input_has_requested_energy() {
        let c = cfg();
        let spec = PumpPulseSpec::reference(&c, 3e-12, -2e9);
        let (f, (a, b)) = gaussian_input_spectrum(&spec);
        let n = 20000;
        let h = (b - a) / n as f64;
        let e: f64 = (0..=n).map(|k| f(a + k as f64 * h).norm_sqr()).sum::<f64>() * h;
        assert!((e / spec.energy - 1.0).abs() < 1e-6);
        assert!(f(spec.detuning).norm() > f(spec.detuning + 1e8).norm());
    }

    #[test]
    fn lorentzian_limit_within_three_linewidths() {
        let c = cfg();
        let k = mode_rates(&c.signal, c.length).kappa_tot;
        for j in -30..=30 {
            let w = c.signal.resonance_freq + j as f64 * 0.1 * k;
            let exact = enhancement(&c.signal, c.length, w).norm_sqr();
            let approx = lorentzian_enhancement(&c.signal, c.length, w);
            assert!((exact / approx - 1.0).abs() < 0.01, "{j}: {exact} {approx}");
        }
    }

    #[test]
    fn zero_pump_tcmt_is_diagonal() {
        let c = cfg();
        let g = build_grid(&c, 11, span_in_fwhm(&c, 6.0)).unwrap();
        let spec = PumpPulseSpec::reference(&c, 0.0, 0.0);
        let k = crate::pump::build_kernels(&crate::pump::run_ikeda(&spec, &c).unwrap());
        let q = tcmt_q(&k, &c, &g);
        let kt = mode_rates(&c.signal, c.length).kappa_tot;
        for r in 0..22 {
            for col in 0..22 {
                if r != col {
                    assert_eq!(q[(r, col)].norm(), 0.0);
                }
            }
            let x = g.offsets[r % 11];
            let want = c64::new(kt, -x) * c.signal.round_trip_time;
            let want = if r < 11 { want } else { want.conj() };
            assert!((q[(r, r)] - want).norm() < 1e-12 * want.norm());
        }
    }

    proptest! {
        #[test]
        fn transmission_identity(rho2 in 0.001f64..0.5, alpha in 0.0f64..200.0, det in -1e12f64..1e12) {
            let mut m = ModeParams::new(ModeLabel::Signal, 1.2e15, 1.4e8, 1.2566e-3, rho2.sqrt(), alpha);
            m.set_rho(rho2.sqrt());
            let w = m.resonance_freq + det;
            let h = transmission(&m, 1.2566e-3, w);
            let l = enhancement(&m, 1.2566e-3, w);
            let via_l = (c64::new(1.0, 0.0) + c64::new(0.0, m.rho) * l) / m.tau;
            prop_assert!((h - via_l).norm() < 1e-9 * (1.0 + h.norm()));
            prop_assert!(h.norm() <= 1.0 + 1e-12);
            let period = 2.0 * PI / m.round_trip_time;
            let l2 = enhancement(&m, 1.2566e-3, w + period);
            prop_assert!((l - l2).norm() < 1e-6 * l.norm());
        }
    }
}
