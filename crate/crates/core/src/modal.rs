//! Loss sandwich S = U2 C U1, two-mode-squeezer (Schmidt) structure of C^{aa}
//! and temporal mode profiles.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg::{self, czero, CMat};
use crate::model::FrequencyGrid;
use crate::pair::ScatteringMatrix;

/// Defect above which a decomposition is rejected.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SandwichDecomposition {
    /// 4N×4N, ports (a, f).
    pub u1: CMat,
    pub u2: CMat,
    /// Active block of C; the phantom block of C is the identity.
    pub c_aa: CMat,
    /// Normalizer n = sqrt(ρ² + κ²/γ²) per (a_s, a_i†) index.
    pub n: Vec<f64>,
    /// Exact beam-splitter reflectivity ρ²/n² per index.
    pub eta: Vec<f64>,
    /// max |U2 C U1 - S| over the blocks present in S.
    pub reconstruction_error: f64,
}

impl SandwichDecomposition {
    pub fn c_full(&self) -> CMat {
        let n2 = self.c_aa.nrows();
        let mut c = Mat::<c64>::identity(2 * n2, 2 * n2);
        c.as_mut().submatrix_mut(0, 0, n2, n2).copy_from(&self.c_aa);
        c
    }
}

fn two_by_two(a: &[c64], b: &[c64], c: &[c64], d: &[c64]) -> CMat {
    let n = a.len();
    Mat::from_fn(2 * n, 2 * n, |r, col| {
        let (i, j) = (r % n, col % n);
        if i != j {
            return czero();
        }
        match (r < n, col < n) {
            (true, true) => a[i],
            (true, false) => b[i],
            (false, true) => c[i],
            (false, false) => d[i],
        }
    })
}

/// Splits a single-phantom S into input/output beam splitters around a
/// lossless amplifier.
pub fn sandwich_decompose(s: &ScatteringMatrix) -> Result<SandwichDecomposition> {
    if s.channels != 1 {
        return Err(Error::Decomposition(format!("sandwich form needs one phantom channel, got {}", s.channels)));
    }
    let b = &s.bounds;
    let n2 = 2 * s.n;
    let nrm: Vec<f64> =
        (0..n2).map(|i| (b.r[i].norm_sqr() + b.k[i].norm_sqr() / b.gamma[i].norm_sqr()).sqrt()).collect();
    let cn = |i: usize| c64::new(nrm[i], 0.0);
    let col = |f: &dyn Fn(usize) -> c64| (0..n2).map(f).collect::<Vec<_>>();

    let r_n = col(&|i| b.r[i] / cn(i));
    let kg_n = col(&|i| b.k[i] / (b.gamma[i] * cn(i)));
    let u2 = two_by_two(&r_n, &kg_n, &kg_n, &r_n.iter().map(|v| -v).collect::<Vec<_>>());
    let rg_n = col(&|i| b.r[i] / (b.gamma[i] * cn(i)));
    let ktg_n = col(&|i| -b.k[i] * b.t[i] / (b.gamma[i] * cn(i)));
    let u1 = two_by_two(&rg_n.iter().map(|v| -v).collect::<Vec<_>>(), &ktg_n, &ktg_n, &rg_n);

    let q = &s.q_inv;
    let c_aa = Mat::from_fn(n2, n2, |i, j| {
        let d = if i == j { c64::new(1.0, 0.0) / (b.gamma[i] * b.t[i]) } else { czero() };
        d - cn(i) / b.t[i] * q[(i, j)] * b.gamma[j] * cn(j)
    });

    let mut dec = SandwichDecomposition {
        u1,
        u2,
        c_aa,
        eta: (0..n2).map(|i| b.r[i].norm_sqr() / (nrm[i] * nrm[i])).collect(),
        n: nrm,
        reconstruction_error: 0.0,
    };
    let rebuilt = &(&dec.u2 * &dec.c_full()) * &dec.u1;
    let mut err = 0.0f64;
    let mut cmp = |r: usize, c: usize, m: &CMat| {
        let blk = rebuilt.as_ref().submatrix(r * n2, c * n2, n2, n2);
        err = err.max(linalg::max_abs((blk.to_owned() - m).as_ref()));
    };
    cmp(0, 0, &s.aa);
    cmp(0, 1, &s.af[0]);
    if let (Some(fa), Some(ff)) = (&s.fa, &s.ff) {
        cmp(1, 0, &fa[0]);
        cmp(1, 1, &ff[0][0]);
    }
    dec.reconstruction_error = err;
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::Decomposition(format!("sandwich reconstruction defect {err:.3e}")));
    }
    Ok(dec)
}

/// Schmidt structure C^{aa} = diag(P_s, P_i*) [[ch, sh], [sh, ch]] diag(Q_s, Q_i*)†.
#[derive(Debug, Clone)]
pub struct SqueezerSpectrum {
    pub p_s: CMat,
    pub p_i: CMat,
    pub q_s: CMat,
    pub q_i: CMat,
    /// Squeezing parameters r^c, descending.
    pub r_c: Vec<f64>,
    /// None when every r^c vanishes.
    pub schmidt_number: Option<f64>,
    pub spectral_purity: Option<f64>,
    pub reconstruction_error: f64,
}

/// K = (Σ sinh² r)² / Σ sinh⁴ r; None if nothing is squeezed.
pub fn schmidt_number(r_c: &[f64]) -> Option<f64> {
    schmidt_number_from_weights(&r_c.iter().map(|r| r.sinh().powi(2)).collect::<Vec<_>>())
}

/// K from mode weights w_l (e.g. sinh² r_l or squared singular values).
pub fn schmidt_number_from_weights(w: &[f64]) -> Option<f64> {
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    (s2 > 0.0).then(|| s1 * s1 / s2)
}

/// Schmidt number from the singular values of a cross-mode block, e.g.
/// S^{aa}_si when no sandwich form is available.
pub fn schmidt_from_cross(block: &CMat) -> Result<Option<f64>> {
    let sv = singular_values(block)?;
    Ok(schmidt_number_from_weights(&sv.iter().map(|s| s * s).collect::<Vec<_>>()))
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    let svd = m.svd().map_err(|e| Error::Decomposition(format!("SVD failed: {e:?}")))?;
    let s = svd.S();
    let mut v: Vec<f64> = (0..m.nrows().min(m.ncols())).map(|i| s[i].re).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

pub fn squeezer_decompose(c_aa: &CMat) -> Result<SqueezerSpectrum> {
    let n2 = c_aa.nrows();
    let n = n2 / 2;
    let defect = linalg::symplectic_defect(c_aa.as_ref(), &linalg::ladder_signs(n, 1));
    if !(defect < 1e-6) {
        return Err(Error::Decomposition(format!("C^aa not symplectic (defect {defect:.3e})")));
    }
    let blk = |r0: usize, c0: usize| c_aa.as_ref().submatrix(r0, c0, n, n).to_owned();
    let (css, csi, lr) = (blk(0, 0), blk(0, n), blk(n, n));
    let svd = csi.svd().map_err(|e| Error::Decomposition(format!("SVD failed: {e:?}")))?;
    let (u0, v0, s0) = (svd.U(), svd.V(), svd.S());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s0[b].re.total_cmp(&s0[a].re));
    let sh: Vec<f64> = order.iter().map(|&k| s0[k].re.max(0.0)).collect();
    let mut u = Mat::from_fn(n, n, |r, c| u0[(r, order[c])]);
    let mut v = Mat::from_fn(n, n, |r, c| v0[(r, order[c])]);
    for c in 0..n {
        let big = (0..n).map(|r| u[(r, c)].norm()).fold(0.0, f64::max);
        if let Some(r) = (0..n).find(|&r| u[(r, c)].norm() > 1e-8 * big) {
            let ph = u[(r, c)].conj() / u[(r, c)].norm();
            for k in 0..n {
                u[(k, c)] *= ph;
                v[(k, c)] *= ph;
            }
        }
    }
    let ch: Vec<f64> = sh.iter().map(|s| (1.0 + s * s).sqrt()).collect();
    let inv_ch: Vec<c64> = ch.iter().map(|c| c64::new(1.0 / c, 0.0)).collect();
    let q_s = linalg::diag_left(&inv_ch, (u.adjoint() * &css).as_ref()).adjoint().to_owned();
    let p_i_conj = linalg::diag_right((&lr * &v).as_ref(), &inv_ch);
    let p_i = linalg::conj(p_i_conj.as_ref());
    let q_i = linalg::conj(v.as_ref());

    let r_c: Vec<f64> = sh.iter().map(|s| s.asinh()).collect();
    let k = schmidt_number(&r_c);
    let mut spec = SqueezerSpectrum {
        p_s: u,
        p_i,
        q_s,
        q_i,
        spectral_purity: k.map(|k| 1.0 / k),
        schmidt_number: k,
        r_c,
        reconstruction_error: 0.0,
    };
    let err = linalg::max_abs((&reconstruct_c(&spec) - c_aa).as_ref());
    spec.reconstruction_error = err;
    if !(err <= RECONSTRUCTION_TOL * (1.0 + ch[0])) {
        return Err(Error::Decomposition(format!("squeezer reconstruction defect {err:.3e}")));
    }
    Ok(spec)
}

/// Rebuilds C^{aa} from its Schmidt form.
pub fn reconstruct_c(s: &SqueezerSpectrum) -> CMat {
    let n = s.r_c.len();
    let ch: Vec<c64> = s.r_c.iter().map(|r| c64::new(r.cosh(), 0.0)).collect();
    let sh: Vec<c64> = s.r_c.iter().map(|r| c64::new(r.sinh(), 0.0)).collect();
    let pi_c = linalg::conj(s.p_i.as_ref());
    let qi_c = linalg::conj(s.q_i.as_ref());
    let left = |p: &CMat, d: &[c64], q: &CMat| linalg::diag_right(p.as_ref(), d) * q.adjoint();
    let ss = left(&s.p_s, &ch, &s.q_s);
    let si = left(&s.p_s, &sh, &qi_c);
    let is = left(&pi_c, &sh, &s.q_s);
    let ii = left(&pi_c, &ch, &qi_c);
    Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => ss[(r, c)],
        (true, false) => si[(r, c - n)],
        (false, true) => is[(r - n, c)],
        (false, false) => ii[(r - n, c - n)],
    })
}

/// Column `which` of P_s on the conjugate time grid t_k = (k - N/2)·2π/(NΔω),
/// by a unitary DFT. Returns (t_k, p(t_k)).
pub fn temporal_schmidt_mode(spec: &SqueezerSpectrum, which: usize, grid: &FrequencyGrid) -> Result<Vec<(f64, c64)>> {
    let n = grid.n_points;
    if which >= spec.p_s.ncols() {
        return Err(Error::InvalidConfig(format!("mode index {which} >= {}", spec.p_s.ncols())));
    }
    let dt = 2.0 * PI / (n as f64 * grid.spacing);
    let c = (n / 2) as f64;
    let norm = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|k| {
            let t = (k as f64 - c) * dt;
            let v: c64 = (0..n).map(|j| spec.p_s[(j, which)] * c64::cis(-grid.offsets[j] * t)).sum();
            (t, v * norm)
        })
        .collect())
}

/// Bus-waveguide squeezing parameter r = -½ ln(1 - η + η e^{-2r_c}).
pub fn effective_squeezing(r_c: f64, eta_esc: f64) -> f64 {
    -0.5 * (1.0 - eta_esc + eta_esc * (-2.0 * r_c).exp()).ln()
}

/// Squeezing in dB for a squeezing parameter r.
pub fn squeezing_db(r: f64) -> f64 {
    20.0 * r * std::f64::consts::LOG10_E
}

/// Number of 4-connected regions of `|m|` at or above `frac` of its
/// maximum. Used to read island structure off |S_si|.
pub fn count_islands(m: &CMat, frac: f64) -> usize {
    let (r, c) = (m.nrows(), m.ncols());
    let top = linalg::max_abs(m.as_ref());
    if top == 0.0 {
        return 0;
    }
    let on = |i: usize, j: usize| m[(i, j)].norm() >= frac * top;
    let mut seen = vec![false; r * c];
    let mut count = 0;
    for start in 0..r * c {
        if seen[start] || !on(start / c, start % c) {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(k) = stack.pop() {
            let (i, j) = (k / c, k % c);
            let mut visit = |ii: usize, jj: usize| {
                let kk = ii * c + jj;
                if !seen[kk] && on(ii, jj) {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < r {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < c {
                visit(i, j + 1);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        a.qr().compute_Q()
    }

    fn squeezer(r: &[f64], seed: u64) -> (CMat, SqueezerSpectrum) {
        let n = r.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = SqueezerSpectrum {
            p_s: random_unitary(n, &mut rng),
            p_i: random_unitary(n, &mut rng),
            q_s: random_unitary(n, &mut rng),
            q_i: random_unitary(n, &mut rng),
            r_c: r.to_vec(),
            schmidt_number: None,
            spectral_purity: None,
            reconstruction_error: 0.0,
        };
        (reconstruct_c(&spec), spec)
    }

    #[test]
    fn single_mode_squeezer() {
        let (c, _) = squeezer(&[0.8, 0.0, 0.0, 0.0], 1);
        let s = squeezer_decompose(&c).unwrap();
        assert!((s.r_c[0] - 0.8).abs() < 1e-12);
        assert!(s.r_c[1..].iter().all(|r| r.abs() < 1e-12));
        assert!((s.schmidt_number.unwrap() - 1.0).abs() < 1e-12);
        assert!(s.reconstruction_error < 1e-12);
    }

    #[test]
    fn two_equal_modes() {
        let (c, _) = squeezer(&[0.5, 0.5, 0.0], 2);
        let s = squeezer_decompose(&c).unwrap();
        assert!((s.schmidt_number.unwrap() - 2.0).abs() < 1e-10);
        assert!((s.spectral_purity.unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn random_spectrum_roundtrip() {
        let r = [1.7, 1.1, 0.4, 0.2, 0.05];
        let (c, _) = squeezer(&r, 3);
        let s = squeezer_decompose(&c).unwrap();
        for (a, b) in s.r_c.iter().zip(r) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(s.reconstruction_error < 1e-10);
        let id = linalg::identity(5);
        for m in [&s.p_s, &s.p_i, &s.q_s, &s.q_i] {
            assert!(linalg::max_abs((m.adjoint() * m - &id).as_ref()) < 1e-10);
        }
        // Phase convention: the first entry of every P_s column is real positive.
        for c in 0..5 {
            assert!(s.p_s[(0, c)].im.abs() < 1e-12 && s.p_s[(0, c)].re > 0.0);
        }
    }

    #[test]
    fn non_symplectic_rejected() {
        let c = Mat::from_fn(4, 4, |i, j| c64::new(if i == j { 2.0 } else { 0.0 }, 0.0));
        assert!(squeezer_decompose(&c).is_err());
    }

    #[test]
    fn zero_squeezing_has_no_schmidt_number() {
        assert!(schmidt_number(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn effective_squeezing_limits() {
        assert_eq!(effective_squeezing(0.0, 0.776), 0.0);
        assert!((effective_squeezing(0.9, 1.0) - 0.9).abs() < 1e-14);
        let inf = effective_squeezing(50.0, 0.97);
        assert!((squeezing_db(inf) - 15.2).abs() < 0.05);
        assert!((squeezing_db(-0.5 * 0.03f64.ln()) - 15.23).abs() < 0.01);
    }

    #[test]
    fn temporal_modes_are_orthonormal() {
        let (c, _) = squeezer(&[0.9, 0.3, 0.1, 0.0, 0.0], 4);
        let s = squeezer_decompose(&c).unwrap();
        let cfg = crate::model::RingConfig::reference_device();
        let g = crate::model::build_grid(&cfg, 5, 1e10).unwrap();
        let a = temporal_schmidt_mode(&s, 0, &g).unwrap();
        let b = temporal_schmidt_mode(&s, 1, &g).unwrap();
        let na: f64 = a.iter().map(|(_, v)| v.norm_sqr()).sum();
        let ab: c64 = a.iter().zip(&b).map(|((_, x), (_, y))| x.conj() * y).sum();
        assert!((na - 1.0).abs() < 1e-12);
        assert!(ab.norm() < 1e-12);
        assert!(temporal_schmidt_mode(&s, 5, &g).is_err());
    }

    #[test]
    fn islands_by_connectivity() {
        let mut m = Mat::from_fn(6, 6, |_, _| czero());
        m[(0, 0)] = c64::new(1.0, 0.0);
        m[(0, 1)] = c64::new(0.9, 0.0);
        m[(4, 4)] = c64::new(0.0, 0.8);
        m[(5, 5)] = c64::new(0.7, 0.0);
        assert_eq!(count_islands(&m, 0.5), 3);
        assert_eq!(count_islands(&m, 0.85), 1);
        assert_eq!(count_islands(&Mat::from_fn(3, 3, |_, _| czero()), 0.5), 0);
    }
}
