//! Gaussian-state layer: complex symplectic matrix over all ports, vacuum
//! covariance evolution, threshold-detector probabilities, Williamson and
//! Bloch-Messiah decompositions.
//!
//! Operator ordering is (annihilators of every mode, then creators in the
//! same order). A mode is (port, species, frequency) with port 0 the bus and
//! ports 1..=M the phantom channels; index = port·2N + species·N + n.
//! The complex covariance is σ = ⟨{ξ, ξ†}⟩ so that vacuum is σ = I. Real
//! quadratures are ordered [x…, p…] with Ω = [[0, I], [-I, 0]].

use faer::{c64, Mat, Side};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, czero, CMat};
use crate::pair::ScatteringMatrix;

pub type RMat = Mat<f64>;

#[derive(Debug, Clone)]
pub struct ComplexSymplectic {
    pub m: CMat,
    /// Number of modes P = 2N(1+M).
    pub modes: usize,
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct CovarianceState {
    pub sigma: CMat,
    pub modes: usize,
}

fn port_block(s: &ScatteringMatrix, p: usize, q: usize) -> Option<&CMat> {
    match (p, q) {
        (0, 0) => Some(&s.aa),
        (0, q) => s.af.get(q - 1),
        (p, 0) => s.fa.as_ref().and_then(|v| v.get(p - 1)),
        (p, q) => s.ff.as_ref().and_then(|v| v.get(p - 1)).and_then(|r| r.get(q - 1)),
    }
}

/// Rows of the symplectic matrix belonging to `ports`, over all columns.
/// Row order: annihilators of the listed ports, then their creators.
fn rows_for_ports(s: &ScatteringMatrix, ports: &[usize]) -> Result<CMat> {
    let n = s.n;
    let ports_total = s.channels + 1;
    let p_all = 2 * n * ports_total;
    let p_rows = 2 * n * ports.len();
    let mut m = Mat::<c64>::zeros(2 * p_rows, 2 * p_all);
    for (pi, &p) in ports.iter().enumerate() {
        for q in 0..ports_total {
            let x = port_block(s, p, q)
                .ok_or_else(|| Error::NumericalIntegrity("phantom rows of S were not computed".into()))?;
            let (r0, c0) = (pi * 2 * n, q * 2 * n);
            for r in 0..n {
                for c in 0..n {
                    let (ss, si, is, ii) = (x[(r, c)], x[(r, n + c)], x[(n + r, c)], x[(n + r, n + c)]);
                    // a_s row
                    m[(r0 + r, c0 + c)] = ss;
                    m[(r0 + r, p_all + c0 + n + c)] = si;
                    // a_i row
                    m[(r0 + n + r, c0 + n + c)] = ii.conj();
                    m[(r0 + n + r, p_all + c0 + c)] = is.conj();
                    // creators
                    m[(p_rows + r0 + r, p_all + c0 + c)] = ss.conj();
                    m[(p_rows + r0 + r, c0 + n + c)] = si.conj();
                    m[(p_rows + r0 + n + r, p_all + c0 + n + c)] = ii;
                    m[(p_rows + r0 + n + r, c0 + c)] = is;
                }
            }
        }
    }
    Ok(m)
}

pub fn build_symplectic(s: &ScatteringMatrix) -> Result<ComplexSymplectic> {
    let ports: Vec<usize> = (0..=s.channels).collect();
    let m = rows_for_ports(s, &ports)?;
    let modes = m.nrows() / 2;
    let signs: Vec<f64> = (0..2 * modes).map(|i| if i < modes { 1.0 } else { -1.0 }).collect();
    let defect = linalg::symplectic_defect(m.as_ref(), &signs);
    if !(defect < 1e-8) {
        return Err(Error::NumericalIntegrity(format!("symplectic defect {defect:.3e}")));
    }
    Ok(ComplexSymplectic { m, modes, defect })
}

/// σ = M M† for vacuum inputs.
pub fn vacuum_covariance(m: &ComplexSymplectic) -> CovarianceState {
    CovarianceState { sigma: &m.m * m.m.adjoint(), modes: m.modes }
}

/// Reduced vacuum-input state of the 2N bus modes (a_s…, a_i…); does not
/// need the phantom rows of S.
pub fn bus_covariance(s: &ScatteringMatrix) -> Result<CovarianceState> {
    let rows = rows_for_ports(s, &[0])?;
    Ok(CovarianceState { sigma: &rows * rows.adjoint(), modes: 2 * s.n })
}

impl CovarianceState {
    pub fn vacuum(modes: usize) -> Self {
        Self { sigma: linalg::identity(2 * modes), modes }
    }

    /// Keeps the listed modes (and their creators).
    pub fn reduced(&self, subset: &[usize]) -> CovarianceState {
        let idx: Vec<usize> = subset.iter().copied().chain(subset.iter().map(|j| j + self.modes)).collect();
        let sigma = Mat::from_fn(idx.len(), idx.len(), |r, c| self.sigma[(idx[r], idx[c])]);
        CovarianceState { sigma, modes: subset.len() }
    }

    /// Σ_j ⟨a_j† a_j⟩ over the listed modes.
    pub fn mean_photon(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&j| (self.sigma[(j, j)].re - 1.0) / 2.0).sum()
    }
}

/// Signal and idler bus mode indices of a bus-only state with N frequencies.
pub fn bus_signal_modes(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn bus_idler_modes(n: usize) -> Vec<usize> {
    (n..2 * n).collect()
}

fn log_det_hermitian_pd(a: &CMat) -> Result<f64> {
    if let Ok(llt) = a.llt(Side::Lower) {
        let l = llt.L();
        return Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum());
    }
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalIntegrity(format!("eigendecomposition failed: {e:?}")))?;
    let s = eig.S();
    let scale = (0..a.nrows()).map(|i| s[i].re.abs()).fold(0.0, f64::max);
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        let v = s[i].re;
        if v < -1e-10 * scale.max(1.0) {
            return Err(Error::NumericalIntegrity(format!("reduced covariance not positive (eigenvalue {v:.3e})")));
        }
        acc += v.max(f64::MIN_POSITIVE).ln();
    }
    Ok(acc)
}

/// Probability that threshold detectors on `subset` all stay dark,
/// det[(I + σ_S)/2]^{-1/2}.
pub fn p_no_click(state: &CovarianceState, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("empty detector subset".into()));
    }
    let red = state.reduced(subset);
    let k = red.sigma.nrows();
    let a = Mat::from_fn(k, k, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        (red.sigma[(r, c)] + c64::new(id, 0.0)) * 0.5
    });
    Ok((-0.5 * log_det_hermitian_pd(&a)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickProbabilities {
    pub p_s: f64,
    pub p_i: f64,
    pub p_si: f64,
}

pub fn click_probabilities(state: &CovarianceState, s: &[usize], i: &[usize]) -> Result<ClickProbabilities> {
    if s.iter().any(|x| i.contains(x)) {
        return Err(Error::InvalidConfig("detector subsets overlap".into()));
    }
    let off_s = p_no_click(state, s)?;
    let off_i = p_no_click(state, i)?;
    let both: Vec<usize> = s.iter().chain(i).copied().collect();
    let off_si = p_no_click(state, &both)?;
    Ok(ClickProbabilities { p_s: 1.0 - off_s, p_i: 1.0 - off_i, p_si: 1.0 - off_s - off_i + off_si })
}

/// Real quadrature covariance V = ℝ σ ℝ†, ℝ = (1/√2)[[I, I], [-iI, iI]].
pub fn real_covariance(state: &CovarianceState) -> Result<RMat> {
    let n = state.modes;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = Mat::from_fn(2 * n, 2 * n, |a, b| {
        if a % n != b % n {
            return czero();
        }
        match (a < n, b < n) {
            (true, _) => c64::new(h, 0.0),
            (false, true) => c64::new(0.0, -h),
            (false, false) => c64::new(0.0, h),
        }
    });
    let v = &(&r * &state.sigma) * r.adjoint();
    let scale = linalg::max_abs(v.as_ref()).max(1.0);
    let im =
        (0..2 * n).flat_map(|a| (0..2 * n).map(move |b| (a, b))).map(|(a, b)| v[(a, b)].im.abs()).fold(0.0, f64::max);
    if im > 1e-8 * scale {
        return Err(Error::NumericalIntegrity(format!("quadrature covariance has imaginary part {im:.3e}")));
    }
    Ok(Mat::from_fn(2 * n, 2 * n, |a, b| 0.5 * (v[(a, b)].re + v[(b, a)].re)))
}

pub fn omega(n: usize) -> RMat {
    Mat::from_fn(2 * n, 2 * n, |a, b| {
        if a + n == b {
            1.0
        } else if b + n == a {
            -1.0
        } else {
            0.0
        }
    })
}

fn apply_omega(v: &[f64]) -> Vec<f64> {
    let n = v.len() / 2;
    (0..2 * n).map(|a| if a < n { v[a + n] } else { -v[a - n] }).collect()
}

fn rmax_abs(m: &RMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct WilliamsonResult {
    /// Symplectic eigenvalues ν_j ≥ 1, one per mode, in Williamson order.
    pub nu: Vec<f64>,
    pub s_w: RMat,
    /// Bloch-Messiah stretch factors λ_j ≥ 1 (Λ = diag(λ, 1/λ)), descending.
    pub lambda: Vec<f64>,
    pub o_l: RMat,
    pub o_r: RMat,
    /// Σ_w = Λ O_r D O_rᵀ Λ.
    pub sigma_w: RMat,
    pub squeezing_db: Vec<f64>,
    pub antisqueezing_db: Vec<f64>,
    pub state_purity: f64,
    /// max |S_w D S_wᵀ - V| / max(1, max|V|).
    pub williamson_error: f64,
    /// max |O_l Λ O_r - S_w| / max(1, max|S_w|).
    pub bloch_messiah_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SqueezingSummary {
    pub squeezing_db: Vec<f64>,
    pub antisqueezing_db: Vec<f64>,
    pub nu: Vec<f64>,
    pub state_purity: f64,
}

impl WilliamsonResult {
    /// The first `modes` entries of the per-mode arrays.
    pub fn summary(&self, modes: usize) -> SqueezingSummary {
        let k = modes.min(self.lambda.len());
        SqueezingSummary {
            squeezing_db: self.squeezing_db[..k].to_vec(),
            antisqueezing_db: self.antisqueezing_db[..k].to_vec(),
            nu: self.nu[..k].to_vec(),
            state_purity: self.state_purity,
        }
    }
}

pub fn williamson(state: &CovarianceState) -> Result<WilliamsonResult> {
    let v = real_covariance(state)?;
    williamson_real(&v)
}

/// Williamson and Bloch-Messiah decompositions of a real covariance matrix.
pub fn williamson_real(v: &RMat) -> Result<WilliamsonResult> {
    let dim = v.nrows();
    let n = dim / 2;
    let dec = |e| Error::Decomposition(format!("eigendecomposition failed: {e:?}"));

    // W = V^{1/2}
    let ev = v.self_adjoint_eigen(Side::Lower).map_err(dec)?;
    let (q, s) = (ev.U(), ev.S());
    let mut qs = q.to_owned();
    for c in 0..dim {
        let w = s[c];
        if w <= 0.0 {
            return Err(Error::Unphysical { nu: w });
        }
        let r = w.sqrt();
        for i in 0..dim {
            qs[(i, c)] *= r;
        }
    }
    let w = &qs * q.transpose();

    // Positive spectrum of iWΩW gives ν and the normal-mode basis.
    let om = omega(n);
    let a = &(&w * &om) * &w;
    let ia = Mat::from_fn(dim, dim, |r, c| c64::new(0.0, a[(r, c)]));
    let eh = ia.self_adjoint_eigen(Side::Lower).map_err(dec)?;
    let (u, sh) = (eh.U(), eh.S());
    let mut k = RMat::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    for j in 0..n {
        let col = dim - 1 - j;
        let nu_j = sh[col].re;
        if nu_j < 1.0 - 1e-8 {
            return Err(Error::Unphysical { nu: nu_j });
        }
        nu.push(nu_j);
        for i in 0..dim {
            k[(i, j)] = std::f64::consts::SQRT_2 * u[(i, col)].re;
            k[(i, n + j)] = -std::f64::consts::SQRT_2 * u[(i, col)].im;
        }
    }
    let mut s_w = &w * &k;
    for j in 0..n {
        let f = 1.0 / nu[j].sqrt();
        for i in 0..dim {
            s_w[(i, j)] *= f;
            s_w[(i, n + j)] *= f;
        }
    }
    let d: Vec<f64> = nu.iter().chain(nu.iter()).copied().collect();
    let mut rebuilt = s_w.clone();
    for c in 0..dim {
        for i in 0..dim {
            rebuilt[(i, c)] *= d[c];
        }
    }
    let rebuilt = &rebuilt * s_w.transpose();
    let williamson_error = rmax_abs(&(&rebuilt - v)) / rmax_abs(v).max(1.0);

    // Bloch-Messiah: S_w = U Σ Vᵀ; symplectic-orthogonal eigenbasis of the
    // positive factor P = V Σ Vᵀ.
    let svd = s_w.svd().map_err(|e| Error::Decomposition(format!("SVD failed: {e:?}")))?;
    let (su, ss, sv) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| ss[y].total_cmp(&ss[x]));
    let mut p = sv.to_owned();
    for c in 0..dim {
        for i in 0..dim {
            p[(i, c)] *= ss[c];
        }
    }
    let p = &p * sv.transpose();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &c in &order {
        if basis.len() == n {
            break;
        }
        let mut x: Vec<f64> = (0..dim).map(|i| sv[(i, c)]).collect();
        for _ in 0..2 {
            for b in &basis {
                let ob = apply_omega(b);
                let (c1, c2) = (dot(b, &x), dot(&ob, &x));
                for i in 0..dim {
                    x[i] -= c1 * b[i] + c2 * ob[i];
                }
            }
        }
        let norm = dot(&x, &x).sqrt();
        if norm > 1e-3 {
            x.iter_mut().for_each(|e| *e /= norm);
            basis.push(x);
        }
    }
    if basis.len() != n {
        return Err(Error::Decomposition("Bloch-Messiah basis incomplete".into()));
    }
    let mut o = RMat::zeros(dim, dim);
    let mut lambda = Vec::with_capacity(n);
    for (j, b) in basis.iter().enumerate() {
        let ob = apply_omega(b);
        for i in 0..dim {
            o[(i, j)] = b[i];
            o[(i, n + j)] = -ob[i];
        }
        let pb: Vec<f64> = (0..dim).map(|r| (0..dim).map(|c| p[(r, c)] * b[c]).sum()).collect();
        lambda.push(dot(b, &pb));
    }
    let o_l = &(su * sv.transpose()) * &o;
    let o_r = o.transpose().to_owned();
    let lam: Vec<f64> = lambda.iter().copied().chain(lambda.iter().map(|l| 1.0 / l)).collect();
    let mut bm = o_l.clone();
    for c in 0..dim {
        for i in 0..dim {
            bm[(i, c)] *= lam[c];
        }
    }
    let bm = &bm * &o_r;
    let bloch_messiah_error = rmax_abs(&(&bm - &s_w)) / rmax_abs(&s_w).max(1.0);

    let sigma_w = &(o_l.transpose() * v) * &o_l;
    let squeezing_db = (0..n).map(|j| -10.0 * sigma_w[(n + j, n + j)].log10()).collect();
    let antisqueezing_db = (0..n).map(|j| 10.0 * sigma_w[(j, j)].log10()).collect();
    let state_purity = 1.0 / (sigma_w[(0, 0)] * sigma_w[(n, n)]).sqrt();

    // ν in the order of the Bloch-Messiah modes is not defined in general;
    // report them descending.
    nu.sort_by(|a, b| b.total_cmp(a));
    Ok(WilliamsonResult {
        nu,
        s_w,
        lambda,
        o_l,
        o_r,
        sigma_w,
        squeezing_db,
        antisqueezing_db,
        state_purity,
        williamson_error,
        bloch_messiah_error,
    })
}

/// Purity (V_sq V_asq)^{-1/2} of the first Williamson mode.
pub fn state_purity(result: &WilliamsonResult) -> f64 {
    result.state_purity
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-mode squeezer on modes (0, 1) of a 2-mode system.
    fn tms(r: f64) -> ComplexSymplectic {
        let (c, s) = (c64::new(r.cosh(), 0.0), c64::new(r.sinh(), 0.0));
        let mut m = Mat::<c64>::zeros(4, 4);
        // a0 → c a0 + s a1†, a1 → c a1 + s a0†
        m[(0, 0)] = c;
        m[(0, 3)] = s;
        m[(1, 1)] = c;
        m[(1, 2)] = s;
        m[(2, 2)] = c;
        m[(2, 1)] = s;
        m[(3, 3)] = c;
        m[(3, 0)] = s;
        ComplexSymplectic { m, modes: 2, defect: 0.0 }
    }

    #[test]
    fn vacuum_is_identity() {
        let st = CovarianceState::vacuum(3);
        assert_eq!(p_no_click(&st, &[0, 2]).unwrap(), 1.0);
        let c = click_probabilities(&st, &[0], &[1]).unwrap();
        assert!(c.p_s.abs() < 1e-15 && c.p_si.abs() < 1e-15);
        let w = williamson(&st).unwrap();
        assert!(w.nu.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(w.lambda.iter().all(|l| (l - 1.0).abs() < 1e-10));
        assert!((w.state_purity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_mode_squeezed_covariance() {
        let r = 0.7;
        let st = vacuum_covariance(&tms(r));
        let (c2, s2) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        assert!((st.sigma[(0, 0)].re - c2).abs() < 1e-12);
        assert!((st.sigma[(0, 3)].re - s2).abs() < 1e-12);
        assert!(st.sigma[(0, 1)].norm() < 1e-12);
        // Each arm is thermal with n = sinh² r.
        let nbar = r.sinh().powi(2);
        assert!((p_no_click(&st, &[0]).unwrap() - 1.0 / (1.0 + nbar)).abs() < 1e-12);
        assert!((st.mean_photon(&[0]) - nbar).abs() < 1e-12);
        let w = williamson(&st).unwrap();
        let db = 20.0 * r * std::f64::consts::LOG10_E;
        assert!((w.squeezing_db[0] - db).abs() < 1e-9);
        assert!((w.antisqueezing_db[0] - db).abs() < 1e-9);
        assert!(w.williamson_error < 1e-10 && w.bloch_messiah_error < 1e-10);
        // Adding detectors never raises the no-click probability.
        assert!(p_no_click(&st, &[0, 1]).unwrap() <= p_no_click(&st, &[0]).unwrap());
    }

    #[test]
    fn thermal_single_mode() {
        let nbar = 0.37;
        let sigma = Mat::from_fn(2, 2, |r, c| c64::new(if r == c { 2.0 * nbar + 1.0 } else { 0.0 }, 0.0));
        let st = CovarianceState { sigma, modes: 1 };
        assert!((p_no_click(&st, &[0]).unwrap() - 1.0 / (1.0 + nbar)).abs() < 1e-14);
        let w = williamson(&st).unwrap();
        assert!((w.state_purity - 1.0 / (2.0 * nbar + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn overlapping_detectors_rejected() {
        let st = CovarianceState::vacuum(2);
        assert!(click_probabilities(&st, &[0, 1], &[1]).is_err());
    }

    #[test]
    fn unphysical_state_rejected() {
        let sigma = Mat::from_fn(2, 2, |r, c| c64::new(if r == c { 0.5 } else { 0.0 }, 0.0));
        match williamson(&CovarianceState { sigma, modes: 1 }) {
            Err(Error::Unphysical { .. }) => {}
            other => panic!("{:?}", other.map(|w| w.nu)),
        }
    }

    fn random_passive(n: usize, rng: &mut ChaCha8Rng) -> RMat {
        let a = Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let u = a.qr().compute_Q();
        Mat::from_fn(2 * n, 2 * n, |r, c| {
            let (x, y) = (u[(r % n, c % n)].re, u[(r % n, c % n)].im);
            match (r < n, c < n) {
                (true, true) | (false, false) => x,
                (true, false) => -y,
                (false, true) => y,
            }
        })
    }

    #[test]
    fn nu_invariant_under_passive_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Mixed state: a squeezer followed by loss into a third mode.
        let r = 0.9;
        let mut st = vacuum_covariance(&tms(r));
        let eta: f64 = 0.8;
        for j in 0..4 {
            for k in 0..4 {
                let id = if j == k { 1.0 - eta } else { 0.0 };
                st.sigma[(j, k)] = st.sigma[(j, k)] * eta + c64::new(id, 0.0);
            }
        }
        let v = real_covariance(&st).unwrap();
        let w0 = williamson_real(&v).unwrap();
        let o = random_passive(2, &mut rng);
        let v2 = &(&o * &v) * o.transpose();
        let w1 = williamson_real(&v2).unwrap();
        for (a, b) in w0.nu.iter().zip(&w1.nu) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(w0.nu[0] > 1.0 + 1e-3);
        assert!(w1.williamson_error < 1e-10 && w1.bloch_messiah_error < 1e-10);
        let sq_bound = -10.0 * (1.0 - eta).log10();
        assert!(w0.squeezing_db[0] < sq_bound);
        assert!(w0.antisqueezing_db[0] > w0.squeezing_db[0]);
        // Σ_w is V in the O_l basis.
        let om = omega(2);
        let sym = &(&w1.s_w * &om) * w1.s_w.transpose();
        assert!(rmax_abs(&(&sym - &om)) < 1e-10);
    }
}
