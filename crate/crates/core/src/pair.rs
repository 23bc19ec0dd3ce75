//! Photon-pair round-trip propagation and the bus/phantom scattering matrix.
//!
//! Vectors use the (a_s, a_i†) layout: N signal annihilators followed by N
//! idler creators. Matrices acting on that layout store their lower blocks
//! conjugated, e.g. S^{aa} = [[S_ss, S_si], [S_is*, S_ii*]].

use std::f64::consts::PI;

use faer::{c64, Mat, Scale};

use crate::error::{Error, Result};
use crate::linalg::{self, czero, diag_left, diag_right, CMat};
use crate::model::{FrequencyGrid, RingConfig};
use crate::pump::PumpKernels;

/// Default RK4 steps per segment.
pub const DEFAULT_Z_STEPS: usize = 64;

/// ‖Q⁻¹‖_max beyond which the loop is treated as oscillating.
pub const THRESHOLD_INVERSE_NORM: f64 = 1e12;

/// Symplectic defect of U that aborts the run.
pub const MAX_ROUNDTRIP_DEFECT: f64 = 1e-6;

/// Blocks of the z-dependent generator
/// A(z) = i [[G, F e^{-iφz}], [-F† e^{iφz}, -H†]].
#[derive(Debug, Clone)]
pub struct GeneratorParts {
    pub g: CMat,
    pub f: CMat,
    pub h: CMat,
    /// φ = Δk̄ - Δω̄/v_p, 1/m.
    pub phase_rate: f64,
}

impl GeneratorParts {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn at(&self, z: f64) -> CMat {
        let n = self.n();
        let i = c64::new(0.0, 1.0);
        let ph = c64::cis(-self.phase_rate * z);
        Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
            (true, true) => i * self.g[(r, c)],
            (true, false) => i * self.f[(r, c - n)] * ph,
            (false, true) => -i * self.f[(c, r - n)].conj() * ph.conj(),
            (false, false) => -i * self.h[(c - n, r - n)].conj(),
        })
    }

    /// True when A(z) does not depend on z.
    pub fn is_z_independent(&self) -> bool {
        self.phase_rate == 0.0 || linalg::max_abs(self.f.as_ref()) == 0.0
    }
}

pub fn generator_parts(kernels: &PumpKernels, cfg: &RingConfig, grid: &FrequencyGrid) -> GeneratorParts {
    let n = grid.n_points;
    let dw = grid.spacing;
    let x = &grid.offsets;
    let vp = cfg.pump.group_velocity;
    let walk_s = 1.0 / cfg.signal.group_velocity - 1.0 / vp;
    let walk_i = 1.0 / cfg.idler.group_velocity - 1.0 / vp;
    let lag0 = -((n - 1) as f64) * dw;
    let c = (n - 1) as i64;

    let xpm = |gamma: f64| -> Option<Vec<c64>> {
        (gamma != 0.0).then(|| {
            let e = kernels.autocorr_lattice(lag0, dw, 2 * n - 1);
            e.into_iter().map(|v| v * (2.0 * gamma / (2.0 * PI) * dw)).collect()
        })
    };
    let es = xpm(cfg.signal.gamma_xpm);
    let ei = xpm(cfg.idler.gamma_xpm);
    let diag_plus = |walk: f64, table: &Option<Vec<c64>>, conjugate: bool| {
        Mat::from_fn(n, n, |r, col| {
            let mut v = if r == col { c64::new(walk * x[r], 0.0) } else { czero() };
            if let Some(t) = table {
                let e = t[(r as i64 - col as i64 + c) as usize];
                v += if conjugate { e.conj() } else { e };
            }
            v
        })
    };
    let g = diag_plus(walk_s, &es, false);
    let h = diag_plus(walk_i, &ei, true);

    let b = kernels.effective_pump_lattice(cfg.freq_mismatch + lag0, dw, 2 * n - 1);
    let scale = cfg.gamma_sfwm / (2.0 * PI) * dw;
    let f = Mat::from_fn(n, n, |r, col| b[r + col] * scale);

    GeneratorParts { g, f, h, phase_rate: cfg.phase_mismatch - cfg.freq_mismatch / vp }
}

/// The 2N×2N generator of the pair dynamics at position z.
pub fn build_generator(kernels: &PumpKernels, cfg: &RingConfig, grid: &FrequencyGrid, z: f64) -> CMat {
    generator_parts(kernels, cfg, grid).at(z)
}

#[derive(Debug, Clone)]
pub struct RoundTripMatrix {
    pub u: CMat,
    pub z_steps: usize,
    pub segment_length: f64,
    /// max |U Ĵ U† - Ĵ|.
    pub defect: f64,
}

/// (I + E)^e, returned as I + E'. The identity is kept implicit so the
/// small increments are not rounded against it.
fn power_near_identity(mut base: CMat, mut e: usize) -> CMat {
    let compose = |a: &CMat, b: &CMat| &(a + b) + a * b;
    let mut acc: Option<CMat> = None;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => compose(&a, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = compose(&base, &base);
        }
    }
    let n = base.nrows();
    acc.map_or_else(|| linalg::identity(n), |a| &linalg::identity(n) + &a)
}

/// Fixed-step RK4 for dY/dz = A(z) Y, Y(z0) = I.
///
/// For a z-independent generator one RK4 step is exactly the degree-4
/// Taylor polynomial of hA, so the whole segment is that polynomial raised
/// to the step count.
pub fn integrate_roundtrip(
    parts: &GeneratorParts,
    segment_length: f64,
    z0: f64,
    z_steps: usize,
) -> Result<RoundTripMatrix> {
    if z_steps == 0 {
        return Err(Error::InvalidConfig("z_steps must be >= 1".into()));
    }
    let n2 = 2 * parts.n();
    let h = segment_length / z_steps as f64;
    let id = linalg::identity(n2);
    let u = if parts.is_z_independent() {
        let ha = parts.at(z0) * Scale(c64::new(h, 0.0));
        // hA (I + hA/2 (I + hA/3 (I + hA/4))), one step minus the identity
        let mut p = &id + &ha * Scale(c64::new(0.25, 0.0));
        for k in [3.0, 2.0] {
            p = &id + (&ha * &p) * Scale(c64::new(1.0 / k, 0.0));
        }
        power_near_identity(&ha * &p, z_steps)
    } else {
        let half = Scale(c64::new(h / 2.0, 0.0));
        let mut y = id.clone();
        for s in 0..z_steps {
            let z = z0 + s as f64 * h;
            let a0 = parts.at(z);
            let am = parts.at(z + h / 2.0);
            let a1 = parts.at(z + h);
            let k1 = &a0 * &y;
            let k2 = &am * &(&y + &k1 * half);
            let k3 = &am * &(&y + &k2 * half);
            let k4 = &a1 * &(&y + &k3 * Scale(c64::new(h, 0.0)));
            let sum = &(&k1 + &k4) + (&k2 + &k3) * Scale(c64::new(2.0, 0.0));
            y = &y + &sum * Scale(c64::new(h / 6.0, 0.0));
        }
        y
    };
    let defect = linalg::symplectic_defect(u.as_ref(), &linalg::ladder_signs(parts.n(), 1));
    if !(defect <= MAX_ROUNDTRIP_DEFECT) {
        return Err(Error::IntegrationAccuracy { defect, z_steps });
    }
    Ok(RoundTripMatrix { u, z_steps, segment_length, defect })
}

/// Diagonal coupler, phantom and phase matrices, each of length 2N.
#[derive(Debug, Clone)]
pub struct BoundaryMatrices {
    pub t: Vec<c64>,
    pub r: Vec<c64>,
    /// Per-channel phantom transmission γ̃ = e^{-αL/2M}.
    pub gamma: Vec<c64>,
    /// Per-channel phantom coupling ±iκ̃.
    pub k: Vec<c64>,
    /// Full round-trip phase E.
    pub e: Vec<c64>,
    /// Per-segment phase E^{1/M}.
    pub e_segment: Vec<c64>,
    pub channels: usize,
}

pub fn boundary_matrices(cfg: &RingConfig, grid: &FrequencyGrid, channels: usize) -> BoundaryMatrices {
    let n = grid.n_points;
    let m = channels as f64;
    let tp = cfg.pump.round_trip_time;
    let mut b = BoundaryMatrices {
        t: Vec::with_capacity(2 * n),
        r: Vec::with_capacity(2 * n),
        gamma: Vec::with_capacity(2 * n),
        k: Vec::with_capacity(2 * n),
        e: Vec::with_capacity(2 * n),
        e_segment: Vec::with_capacity(2 * n),
        channels,
    };
    for (mode, sign) in [(&cfg.signal, 1.0), (&cfg.idler, -1.0)] {
        let al = mode.alpha * cfg.length / m;
        let g = (-al / 2.0).exp();
        let kappa = (-(-al).exp_m1()).sqrt();
        let base = (mode.center_freq - mode.resonance_freq) * mode.round_trip_time;
        for &x in &grid.offsets {
            let theta = sign * (base + x * tp);
            b.t.push(c64::new(mode.tau, 0.0));
            b.r.push(c64::new(0.0, sign * mode.rho));
            b.gamma.push(c64::new(g, 0.0));
            b.k.push(c64::new(0.0, sign * kappa));
            b.e.push(c64::cis(theta));
            b.e_segment.push(c64::cis(theta / m));
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    Ss,
    Si,
    Is,
    Ii,
}

/// Input-output matrix of the bus (a) and phantom (f) ports.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub n: usize,
    pub channels: usize,
    pub aa: CMat,
    /// S^{af,(l)}, l = 1..M.
    pub af: Vec<CMat>,
    /// S^{fa,(l)} when phantom rows were requested.
    pub fa: Option<Vec<CMat>>,
    /// S^{ff,(l,l')} when phantom rows were requested.
    pub ff: Option<Vec<Vec<CMat>>>,
    pub q_inv: CMat,
    pub bounds: BoundaryMatrices,
}

/// Physical N×N block of a stored 2N×2N matrix (lower blocks un-conjugated).
pub fn sub_block(m: &CMat, which: Sub) -> CMat {
    let n = m.nrows() / 2;
    let (r0, c0, cj) = match which {
        Sub::Ss => (0, 0, false),
        Sub::Si => (0, n, false),
        Sub::Is => (n, 0, true),
        Sub::Ii => (n, n, true),
    };
    let b = m.as_ref().submatrix(r0, c0, n, n);
    if cj {
        linalg::conj(b)
    } else {
        b.to_owned()
    }
}

impl ScatteringMatrix {
    pub fn aa_sub(&self, which: Sub) -> CMat {
        sub_block(&self.aa, which)
    }

    pub fn af_sub(&self, l: usize, which: Sub) -> CMat {
        sub_block(&self.af[l], which)
    }

    pub fn has_phantom_rows(&self) -> bool {
        self.fa.is_some() && self.ff.is_some()
    }

    /// The whole 2N(1+M) square matrix, ports ordered (a, f1, .., fM).
    pub fn full(&self) -> Option<CMat> {
        let (fa, ff) = (self.fa.as_ref()?, self.ff.as_ref()?);
        let b = 2 * self.n;
        let p = self.channels + 1;
        let mut s = Mat::<c64>::zeros(b * p, b * p);
        let mut put = |r: usize, c: usize, m: &CMat| s.as_mut().submatrix_mut(r * b, c * b, b, b).copy_from(m);
        put(0, 0, &self.aa);
        for l in 0..self.channels {
            put(0, l + 1, &self.af[l]);
            put(l + 1, 0, &fa[l]);
            for (lp, m) in ff[l].iter().enumerate() {
                put(l + 1, lp + 1, m);
            }
        }
        Some(s)
    }

    /// max |S Ĵ S† - Ĵ| over all ports, if phantom rows are present.
    pub fn symplectic_defect(&self) -> Option<f64> {
        let s = self.full()?;
        Some(linalg::symplectic_defect(s.as_ref(), &linalg::ladder_signs(self.n, self.channels + 1)))
    }
}

fn check_threshold(q_inv: &CMat) -> Result<()> {
    let norm = linalg::max_abs(q_inv.as_ref());
    if !(norm.is_finite() && norm <= THRESHOLD_INVERSE_NORM) {
        return Err(Error::AboveThreshold { inverse_norm: norm, energy_pj: f64::NAN });
    }
    Ok(())
}

/// Solves the boundary conditions for S.
///
/// `segments` holds either one round-trip matrix per phantom channel or a
/// single matrix shared by all segments. With one channel the closed
/// single-phantom expressions are used.
pub fn assemble_s(segments: &[RoundTripMatrix], bounds: &BoundaryMatrices, full: bool) -> Result<ScatteringMatrix> {
    let m = bounds.channels;
    if segments.is_empty() || !(segments.len() == 1 || segments.len() == m) {
        return Err(Error::InvalidConfig(format!("{} segments for {m} channels", segments.len())));
    }
    if m == 1 {
        assemble_single(&segments[0].u, bounds, full)
    } else {
        assemble_general(segments, bounds, full)
    }
}

fn assemble_single(u: &CMat, b: &BoundaryMatrices, full: bool) -> Result<ScatteringMatrix> {
    let n2 = u.nrows();
    let tge: Vec<c64> = (0..n2).map(|i| b.t[i] * b.gamma[i] * b.e[i]).collect();
    let q = &linalg::identity(n2) - &diag_left(&tge, u.as_ref());
    let q_inv = linalg::inverse(q.as_ref());
    check_threshold(&q_inv)?;
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let (t, r, g, k) = (&b.t, &b.r, &b.gamma, &b.k);
    let aa = Mat::from_fn(n2, n2, |i, j| (r[i] / t[i]) * q_inv[(i, j)] * r[j] + delta(i, j) / t[i]);
    let af = Mat::from_fn(n2, n2, |i, j| (r[i] / t[i]) * q_inv[(i, j)] * k[j] * t[j]);
    let (fa, ff) = if full {
        let fa = Mat::from_fn(n2, n2, |i, j| k[i] / (t[i] * g[i]) * (q_inv[(i, j)] - delta(i, j)) * r[j]);
        let ff = Mat::from_fn(n2, n2, |i, j| k[i] / (g[i] * t[i]) * q_inv[(i, j)] * k[j] * t[j] + delta(i, j) / g[i]);
        (Some(vec![fa]), Some(vec![vec![ff]]))
    } else {
        (None, None)
    };
    Ok(ScatteringMatrix { n: n2 / 2, channels: 1, aa, af: vec![af], fa, ff, q_inv, bounds: b.clone() })
}

/// Multi-phantom assembly; also valid (and tested) for one channel.
pub fn assemble_general(segments: &[RoundTripMatrix], b: &BoundaryMatrices, full: bool) -> Result<ScatteringMatrix> {
    let m = b.channels;
    let n2 = segments[0].u.nrows();
    let u_of = |l: usize| &segments[if segments.len() == 1 { 0 } else { l }].u;
    let ge: Vec<c64> = (0..n2).map(|i| b.gamma[i] * b.e_segment[i]).collect();
    let phis: Vec<CMat> = (0..m).map(|l| diag_left(&ge, u_of(l).as_ref())).collect();

    // suffix[l] = Φ_M ⋯ Φ_{l+2} (0-based l), i.e. the map from just after
    // channel l+1 to the end of the loop.
    let mut suffix = vec![linalg::identity(n2); m];
    for l in (0..m - 1).rev() {
        suffix[l] = &suffix[l + 1] * &phis[l + 1];
    }
    let phi = &suffix[0] * &phis[0];
    let q = &linalg::identity(n2) - &diag_left(&b.t, phi.as_ref());
    let q_inv = linalg::inverse(q.as_ref());
    check_threshold(&q_inv)?;

    let (t, r, g, k) = (&b.t, &b.r, &b.gamma, &b.k);
    let aa =
        Mat::from_fn(n2, n2, |i, j| (r[i] / t[i]) * q_inv[(i, j)] * r[j] + if i == j { 1.0 / t[i] } else { czero() });
    let x = Mat::from_fn(n2, n2, |i, j| (r[i] / t[i]) * q_inv[(i, j)] * t[j]);
    let af: Vec<CMat> = suffix.iter().map(|p| diag_right((&x * p).as_ref(), k)).collect();

    let (fa, ff) = if full {
        // State response C (a(z) just after channel l) to all inputs
        // [a_in | f_1 | .. | f_M].
        let cols = n2 * (m + 1);
        let mut drive = Mat::<c64>::zeros(n2, cols);
        for i in 0..n2 {
            drive[(i, i)] = r[i];
        }
        for (l, p) in suffix.iter().enumerate() {
            let tp = diag_sandwich_owned(t, p, k);
            drive.as_mut().submatrix_mut(0, (l + 1) * n2, n2, n2).copy_from(&tp);
        }
        let mut state = &q_inv * &drive;
        let mut fa = Vec::with_capacity(m);
        let mut ff = Vec::with_capacity(m);
        for l in 0..m {
            let prop = diag_left(&b.e_segment, (u_of(l) * &state).as_ref());
            let out = diag_left(k, prop.as_ref());
            fa.push(out.as_ref().submatrix(0, 0, n2, n2).to_owned());
            let mut row = Vec::with_capacity(m);
            for lp in 0..m {
                let mut blk = out.as_ref().submatrix(0, (lp + 1) * n2, n2, n2).to_owned();
                if lp == l {
                    for i in 0..n2 {
                        blk[(i, i)] += g[i];
                    }
                }
                row.push(blk);
            }
            ff.push(row);
            state = diag_left(g, prop.as_ref());
            for i in 0..n2 {
                state[(i, (l + 1) * n2 + i)] += k[i];
            }
        }
        (Some(fa), Some(ff))
    } else {
        (None, None)
    };
    Ok(ScatteringMatrix { n: n2 / 2, channels: m, aa, af, fa, ff, q_inv, bounds: b.clone() })
}

fn diag_sandwich_owned(l: &[c64], m: &CMat, r: &[c64]) -> CMat {
    linalg::diag_sandwich(l, m.as_ref(), r)
}

/// Knobs of the pair solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub z_steps: usize,
    /// Also compute the phantom-port rows S^{fa}, S^{ff}.
    pub phantom_rows: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { z_steps: DEFAULT_Z_STEPS, phantom_rows: false }
    }
}

/// Generator, per-segment propagation and boundary solve in one call.
pub fn solve_scattering(
    kernels: &PumpKernels,
    cfg: &RingConfig,
    grid: &FrequencyGrid,
    opts: &SolverOptions,
) -> Result<ScatteringMatrix> {
    let m = cfg.phantom_channels;
    let parts = generator_parts(kernels, cfg, grid);
    let seg = cfg.length / m as f64;
    let segments = if parts.is_z_independent() {
        vec![integrate_roundtrip(&parts, seg, 0.0, opts.z_steps)?]
    } else {
        (0..m).map(|l| integrate_roundtrip(&parts, seg, l as f64 * seg, opts.z_steps)).collect::<Result<Vec<_>>>()?
    };
    let bounds = boundary_matrices(cfg, grid, m);
    assemble_s(&segments, &bounds, opts.phantom_rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, default_span, PumpPulseSpec, RingConfig};
    use crate::oracle;
    use crate::pump::{build_kernels, run_ikeda};

    fn setup(energy: f64, n: usize) -> (RingConfig, FrequencyGrid, PumpKernels) {
        let cfg = RingConfig::reference_device();
        let grid = build_grid(&cfg, n, default_span(&cfg)).unwrap();
        let pulse = PumpPulseSpec::reference(&cfg, energy, 0.0);
        let k = build_kernels(&run_ikeda(&pulse, &cfg).unwrap());
        (cfg, grid, k)
    }

    #[test]
    fn zero_pump_generator_is_walk_off_only() {
        let (mut cfg, grid, k) = setup(0.0, 7);
        cfg.signal.group_velocity *= 1.01;
        cfg.idler.group_velocity *= 0.98;
        let a = build_generator(&k, &cfg, &grid, 0.3e-3);
        let vp = cfg.pump.group_velocity;
        for r in 0..14 {
            for c in 0..14 {
                let expect = if r != c {
                    czero()
                } else if r < 7 {
                    c64::new(0.0, grid.offsets[r] * (1.0 / cfg.signal.group_velocity - 1.0 / vp))
                } else {
                    c64::new(0.0, -grid.offsets[r - 7] * (1.0 / cfg.idler.group_velocity - 1.0 / vp))
                };
                assert!((a[(r, c)] - expect).norm() < 1e-15, "{r},{c}");
            }
        }
    }

    #[test]
    fn matched_generator_is_z_independent() {
        let (mut cfg, grid, k) = setup(1e-12, 9);
        cfg.signal.gamma_xpm = 0.0;
        cfg.idler.gamma_xpm = 0.0;
        let a0 = build_generator(&k, &cfg, &grid, 0.0);
        let a1 = build_generator(&k, &cfg, &grid, 0.7e-3);
        assert_eq!(linalg::max_abs((&a0 - &a1).as_ref()), 0.0);
        let mut mis = cfg.clone();
        mis.phase_mismatch = 50.0;
        assert!(!generator_parts(&k, &mis, &grid).is_z_independent());
    }

    #[test]
    fn equal_velocities_leave_only_xpm_on_diagonal() {
        let (cfg, grid, k) = setup(1e-12, 9);
        let p = generator_parts(&k, &cfg, &grid);
        let e0 = k.autocorr_lattice(0.0, 1.0, 1)[0] * (2.0 / (2.0 * PI) * grid.spacing);
        for r in 0..9 {
            assert!((p.g[(r, r)] - e0).norm() < 1e-12 * e0.norm());
            assert!((p.h[(r, r)] - e0.conj()).norm() < 1e-12 * e0.norm());
        }
    }

    #[test]
    fn zero_pump_round_trip_is_identity() {
        let (cfg, grid, k) = setup(0.0, 11);
        let p = generator_parts(&k, &cfg, &grid);
        let u = integrate_roundtrip(&p, cfg.length, 0.0, 64).unwrap();
        assert_eq!(linalg::max_abs((&u.u - linalg::identity(22)).as_ref()), 0.0);
    }

    fn toy(g: f64, phi: f64, rate: f64) -> GeneratorParts {
        let one = |v: c64| Mat::from_fn(1, 1, |_, _| v);
        GeneratorParts { g: one(czero()), f: one(c64::from_polar(g, phi)), h: one(czero()), phase_rate: rate }
    }

    #[test]
    fn single_mode_two_mode_squeezer() {
        let (g, phi, len) = (800.0, 0.7, 1.2e-3);
        let u = integrate_roundtrip(&toy(g, phi, 0.0), len, 0.0, 64).unwrap().u;
        let (ch, sh) = ((g * len).cosh(), (g * len).sinh());
        let i = c64::new(0.0, 1.0);
        let expect = [[c64::new(ch, 0.0), i * c64::cis(phi) * sh], [-i * c64::cis(-phi) * sh, c64::new(ch, 0.0)]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((u[(r, c)] - expect[r][c]).norm() < 1e-9, "{r}{c}: {}", u[(r, c)]);
            }
        }
        // The stepwise path agrees with the propagator power.
        let tiny_rate = toy(g, phi, 1e-300);
        assert!(!tiny_rate.is_z_independent());
        let v = integrate_roundtrip(&tiny_rate, len, 0.0, 64).unwrap().u;
        assert!(linalg::max_abs((&u - &v).as_ref()) < 1e-12);
    }

    #[test]
    fn low_energy_round_trip_is_near_identity_and_symplectic() {
        let (cfg, grid, k) = setup(1e-12, 201);
        let p = generator_parts(&k, &cfg, &grid);
        let u = integrate_roundtrip(&p, cfg.length, 0.0, DEFAULT_Z_STEPS).unwrap();
        let dev = linalg::max_abs((&u.u - linalg::identity(402)).as_ref());
        assert!(dev < 0.05, "{dev}");
        assert!(u.defect < 1e-10, "{}", u.defect);
    }

    #[test]
    fn phase_mismatch_path_stays_symplectic() {
        let (mut cfg, grid, k) = setup(50e-12, 41);
        cfg.phase_mismatch = 300.0;
        let p = generator_parts(&k, &cfg, &grid);
        let u = integrate_roundtrip(&p, cfg.length, 0.0, 64).unwrap();
        assert!(u.defect < 1e-10);
    }

    #[test]
    fn zero_pump_transmission_is_airy() {
        let (cfg, grid, k) = setup(0.0, 201);
        let s = solve_scattering(&k, &cfg, &grid, &SolverOptions::default()).unwrap();
        let ss = s.aa_sub(Sub::Ss);
        let si = s.aa_sub(Sub::Si);
        for r in 0..201 {
            for c in 0..201 {
                if r == c {
                    let h = oracle::transmission_at_detuning(&cfg.signal, cfg.length, grid.offsets[r]);
                    assert!((ss[(r, c)] - h).norm() < 1e-10, "{r}: {} vs {h}", ss[(r, c)]);
                } else {
                    assert_eq!(ss[(r, c)].norm(), 0.0);
                }
                assert_eq!(si[(r, c)].norm(), 0.0);
            }
        }
        let h0 = ss[(100, 100)].norm_sqr();
        assert!((h0 - 0.3057).abs() < 1e-4, "{h0}");
    }

    #[test]
    fn closed_form_equals_general_single_channel() {
        let (cfg, grid, k) = setup(50e-12, 61);
        let p = generator_parts(&k, &cfg, &grid);
        let u = integrate_roundtrip(&p, cfg.length, 0.0, 64).unwrap();
        let b = boundary_matrices(&cfg, &grid, 1);
        let a = assemble_s(std::slice::from_ref(&u), &b, true).unwrap();
        let g = assemble_general(&[u], &b, true).unwrap();
        let d = linalg::max_abs((&a.full().unwrap() - &g.full().unwrap()).as_ref());
        assert!(d < 1e-10, "{d}");
        assert!(a.symplectic_defect().unwrap() < 1e-10);
    }

    #[test]
    fn multi_channel_is_symplectic() {
        let (cfg, grid, k) = setup(100e-12, 41);
        let cfg = cfg.with_channels(4);
        let opts = SolverOptions { phantom_rows: true, ..Default::default() };
        let s = solve_scattering(&k, &cfg, &grid, &opts).unwrap();
        assert!(s.symplectic_defect().unwrap() < 1e-9);
        // Without phantom rows the bus blocks are unchanged.
        let s2 = solve_scattering(&k, &cfg, &grid, &SolverOptions::default()).unwrap();
        assert_eq!(linalg::max_abs((&s.aa - &s2.aa).as_ref()), 0.0);
    }

    #[test]
    fn oscillation_threshold_is_reported() {
        let (mut cfg, grid, k) = setup(100e-12, 21);
        cfg.gamma_sfwm = 1e4;
        match solve_scattering(&k, &cfg, &grid, &SolverOptions::default()) {
            Err(Error::AboveThreshold { .. }) | Err(Error::IntegrationAccuracy { .. }) => {}
            other => panic!("expected threshold error, got {:?}", other.map(|s| s.n)),
        }
    }
}
