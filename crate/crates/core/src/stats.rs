//! Photon-number moments from the blocks of S.
//!
//! With every input port in vacuum, a_s^out = A a + B b† and
//! a_i^out = C b + D a†, where A, B, C, D concatenate the ss, si, ii and is
//! blocks over the bus and all phantom ports.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::modal;
use crate::pair::{ScatteringMatrix, Sub};

/// Ensemble statistics of one configuration. Ratios are None when the
/// photon numbers they divide by vanish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonStatistics {
    pub n_s: f64,
    pub n_i: f64,
    pub g2_s: Option<f64>,
    pub g2_si: Option<f64>,
    pub heralding_i: Option<f64>,
    pub schmidt_k: Option<f64>,
    pub purity_p: Option<f64>,
}

fn concat(s: &ScatteringMatrix, which: Sub) -> CMat {
    let n = s.n;
    let blocks: Vec<CMat> =
        std::iter::once(s.aa_sub(which)).chain((0..s.channels).map(|l| s.af_sub(l, which))).collect();
    Mat::from_fn(n, n * blocks.len(), |r, c| blocks[c / n][(r, c % n)])
}

/// Tr[B B†] = Σ_l ‖S_si^{(l)}‖_F² over bus and phantom inputs.
pub fn mean_photon(s: &ScatteringMatrix) -> f64 {
    linalg::frobenius(concat(s, Sub::Si).as_ref()).powi(2)
}

pub fn mean_photon_idler(s: &ScatteringMatrix) -> f64 {
    linalg::frobenius(concat(s, Sub::Is).as_ref()).powi(2)
}

/// ⟨n_s²⟩ - ⟨n_s⟩ = ⟨n_s⟩² + Tr[(BB†)²].
pub fn self_correlation(s: &ScatteringMatrix) -> f64 {
    let b = concat(s, Sub::Si);
    let bb = &b * b.adjoint();
    let n = linalg::trace(bb.as_ref()).re;
    n * n + linalg::frobenius(bb.as_ref()).powi(2)
}

pub fn g2_self(s: &ScatteringMatrix) -> Result<f64> {
    let n = mean_photon(s);
    if n <= 0.0 {
        return Err(Error::Undefined("g2_s needs a nonzero signal photon number".into()));
    }
    Ok(self_correlation(s) / (n * n))
}

/// The connected part |⟨a_s a_i⟩|² summed over frequencies, ‖A Dᵀ‖_F².
pub fn pair_term(s: &ScatteringMatrix) -> f64 {
    let a = concat(s, Sub::Ss);
    let d = concat(s, Sub::Is);
    linalg::frobenius((&a * d.transpose()).as_ref()).powi(2)
}

/// ⟨n_s n_i⟩ = ⟨n_s⟩⟨n_i⟩ + ‖A Dᵀ‖_F².
pub fn cross_correlation(s: &ScatteringMatrix) -> f64 {
    mean_photon(s) * mean_photon_idler(s) + pair_term(s)
}

pub fn g2_cross(s: &ScatteringMatrix) -> Result<f64> {
    let (ns, ni) = (mean_photon(s), mean_photon_idler(s));
    if ns <= 0.0 || ni <= 0.0 {
        return Err(Error::Undefined("g2_si needs nonzero signal and idler photon numbers".into()));
    }
    Ok(cross_correlation(s) / (ns * ni))
}

/// Moment-ratio heralding efficiency ⟨n_s n_i⟩/⟨n_s⟩ of the idler.
pub fn heralding(s: &ScatteringMatrix) -> Result<f64> {
    let ns = mean_photon(s);
    if ns <= 0.0 {
        return Err(Error::Undefined("heralding needs a nonzero signal photon number".into()));
    }
    Ok(cross_correlation(s) / ns)
}

/// Spectral purity and Schmidt number. With one phantom channel these come
/// from the squeezing parameters of C^{aa}; otherwise from the singular
/// values of S^{aa}_si.
pub fn schmidt(s: &ScatteringMatrix) -> Result<Option<f64>> {
    if s.channels == 1 {
        let sw = modal::sandwich_decompose(s)?;
        Ok(modal::squeezer_decompose(&sw.c_aa)?.schmidt_number)
    } else {
        modal::schmidt_from_cross(&s.aa_sub(Sub::Si))
    }
}

pub fn photon_statistics(s: &ScatteringMatrix) -> Result<PhotonStatistics> {
    let k = schmidt(s)?;
    Ok(PhotonStatistics {
        n_s: mean_photon(s),
        n_i: mean_photon_idler(s),
        g2_s: g2_self(s).ok(),
        g2_si: g2_cross(s).ok(),
        heralding_i: heralding(s).ok(),
        schmidt_k: k,
        purity_p: k.map(|k| 1.0 / k),
    })
}

/// Per-mode slopes c_l = r_l/E_p fitted at low gain.
pub fn fit_simplified_model(r_c_low: &[f64], energy: f64) -> Vec<f64> {
    r_c_low.iter().map(|r| r / energy).collect()
}

/// ⟨n^c⟩ = Σ sinh²(c_l E_p); multiply by η_esc for the bus prediction.
pub fn simplified_sfwm_model(slopes: &[f64], energy: f64) -> f64 {
    slopes.iter().map(|c| (c * energy).sinh().powi(2)).sum()
}

/// Same cross term written as Re Tr[(Σ_l B_l* C_l†)(Σ_l D_l A_lᵀ)].
pub fn pair_term_trace_form(s: &ScatteringMatrix) -> f64 {
    let (a, b, c, d) = (concat(s, Sub::Ss), concat(s, Sub::Si), concat(s, Sub::Ii), concat(s, Sub::Is));
    let left = linalg::conj(b.as_ref()) * c.adjoint();
    let right = &d * a.transpose();
    linalg::trace((&left * &right).as_ref()).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, default_span, PumpPulseSpec, RingConfig};
    use crate::pair::{solve_scattering, SolverOptions};
    use crate::pump::{build_kernels, run_ikeda};

    fn solve(cfg: &RingConfig, energy: f64, n: usize) -> ScatteringMatrix {
        let grid = build_grid(cfg, n, default_span(cfg)).unwrap();
        let k = build_kernels(&run_ikeda(&PumpPulseSpec::reference(cfg, energy, 0.0), cfg).unwrap());
        solve_scattering(&k, cfg, &grid, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn zero_pump_is_dark() {
        let s = solve(&RingConfig::reference_device(), 0.0, 21);
        assert_eq!(mean_photon(&s), 0.0);
        assert!(g2_self(&s).is_err());
        assert!(heralding(&s).is_err());
        let st = photon_statistics(&s).unwrap();
        assert_eq!(st.n_i, 0.0);
        assert!(st.purity_p.is_none());
    }

    #[test]
    fn trace_form_of_cross_term() {
        let s = solve(&RingConfig::reference_device(), 30e-12, 41);
        let a = pair_term(&s);
        let b = pair_term_trace_form(&s);
        assert!((a - b).abs() < 1e-10 * a, "{a} {b}");
    }

    #[test]
    fn quadratic_below_one_pj() {
        let cfg = RingConfig::reference_device();
        let a = mean_photon(&solve(&cfg, 0.25e-12, 61));
        let b = mean_photon(&solve(&cfg, 0.5e-12, 61));
        assert!((b / a - 4.0).abs() < 0.05, "{}", b / a);
    }

    #[test]
    fn photon_number_through_c() {
        let cfg = RingConfig::reference_device();
        let s = solve(&cfg, 40e-12, 61);
        let sw = modal::sandwich_decompose(&s).unwrap();
        let sq = modal::squeezer_decompose(&sw.c_aa).unwrap();
        let nc: f64 = sq.r_c.iter().map(|r| r.sinh().powi(2)).sum();
        let n = mean_photon(&s);
        assert!((sw.eta[0] * nc / n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn simplified_model_small_argument() {
        let c = [2e9, 1e9];
        let e = 1e-15;
        let exact = simplified_sfwm_model(&c, e);
        let quad: f64 = c.iter().map(|x| (x * e).powi(2)).sum();
        assert!((exact / quad - 1.0).abs() < 1e-10);
        assert_eq!(fit_simplified_model(&[0.2, 0.1], 2.0), vec![0.1, 0.05]);
    }
}
