//! End-to-end pipeline per (energy, detuning) point, parameter sweeps and
//! the optimal-detuning search.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, ClickProbabilities, SqueezingSummary};
use crate::model::{self, FrequencyGrid, PumpPulseSpec, RingConfig};
use crate::pair::{self, ScatteringMatrix, SolverOptions};
use crate::pump::{self, PumpField};
use crate::stats::{self, PhotonStatistics};

/// Golden-section stopping width, rad/s.
pub const DETUNING_TOLERANCE: f64 = 2.0 * PI * 5e6;
/// Points in the coarse scan preceding the golden-section refinement.
pub const COARSE_POINTS: usize = 17;
/// Williamson modes kept in records.
pub const SUMMARY_MODES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSettings {
    pub grid_points: usize,
    /// Grid span in units of the signal FWHM.
    pub span_fwhm: f64,
    pub z_steps: usize,
    /// Also compute the Williamson squeezing summary.
    pub squeezing: bool,
    /// Also compute threshold-detector click probabilities.
    pub clicks: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            grid_points: model::DEFAULT_GRID_POINTS,
            span_fwhm: model::DEFAULT_SPAN_FWHM,
            z_steps: pair::DEFAULT_Z_STEPS,
            squeezing: false,
            clicks: false,
        }
    }
}

/// Device, pulse template and numerical knobs. The pulse energy and
/// detuning are overridden per point.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cfg: RingConfig,
    pub pulse: PumpPulseSpec,
    pub settings: PipelineSettings,
}

/// Everything computed for one point.
#[derive(Debug, Clone)]
pub struct Solved {
    pub grid: FrequencyGrid,
    pub field: PumpField,
    pub s: ScatteringMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub energy: f64,
    pub detuning: f64,
    pub eta_esc: f64,
    pub stats: Option<PhotonStatistics>,
    pub clicks: Option<ClickProbabilities>,
    pub squeezing: Option<SqueezingSummary>,
    pub warnings: Vec<String>,
    /// Set when the point failed; the sweep continues.
    pub error: Option<String>,
}

impl Pipeline {
    pub fn new(cfg: RingConfig, pulse: PumpPulseSpec, settings: PipelineSettings) -> Self {
        Self { cfg, pulse, settings }
    }

    /// Reference pulse (283 MHz Gaussian) with default knobs.
    pub fn reference(cfg: RingConfig) -> Self {
        let pulse = PumpPulseSpec::reference(&cfg, 0.0, 0.0);
        Self { cfg, pulse, settings: PipelineSettings::default() }
    }

    pub fn with_config(&self, cfg: RingConfig) -> Self {
        let mut p = self.clone();
        p.pulse.time_step = cfg.pump.round_trip_time;
        p.cfg = cfg;
        p
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        let span = model::span_in_fwhm(&self.cfg, self.settings.span_fwhm);
        model::build_grid(&self.cfg, self.settings.grid_points, span)
    }

    pub fn pulse_at(&self, energy: f64, detuning: f64) -> PumpPulseSpec {
        PumpPulseSpec { energy, detuning, ..self.pulse.clone() }
    }

    pub fn solve(&self, energy: f64, detuning: f64, phantom_rows: bool) -> Result<Solved> {
        self.cfg.validate()?;
        let grid = self.grid()?;
        let field = pump::run_ikeda(&self.pulse_at(energy, detuning), &self.cfg)?;
        let kernels = pump::build_kernels(&field);
        let opts = SolverOptions { z_steps: self.settings.z_steps, phantom_rows };
        let s = pair::solve_scattering(&kernels, &self.cfg, &grid, &opts).map_err(|e| match e {
            Error::AboveThreshold { inverse_norm, .. } => {
                Error::AboveThreshold { inverse_norm, energy_pj: energy * 1e12 }
            }
            other => other,
        })?;
        Ok(Solved { grid, field, s })
    }

    fn try_evaluate(&self, energy: f64, detuning: f64, rec: &mut PointRecord) -> Result<()> {
        let solved = self.solve(energy, detuning, false)?;
        rec.warnings.extend(solved.field.warnings.iter().cloned());
        rec.stats = Some(stats::photon_statistics(&solved.s)?);
        if self.settings.squeezing || self.settings.clicks {
            let st = gaussian::bus_covariance(&solved.s)?;
            let n = solved.s.n;
            if self.settings.clicks {
                rec.clicks = Some(gaussian::click_probabilities(
                    &st,
                    &gaussian::bus_signal_modes(n),
                    &gaussian::bus_idler_modes(n),
                )?);
            }
            if self.settings.squeezing {
                rec.squeezing = Some(gaussian::williamson(&st)?.summary(SUMMARY_MODES));
            }
        }
        Ok(())
    }

    /// Full pipeline for one point; failures are recorded, not raised.
    pub fn evaluate(&self, energy: f64, detuning: f64) -> PointRecord {
        let mut rec = PointRecord {
            energy,
            detuning,
            eta_esc: model::derive_rates(&self.cfg).signal.eta_esc,
            stats: None,
            clicks: None,
            squeezing: None,
            warnings: Vec::new(),
            error: None,
        };
        if let Err(e) = self.try_evaluate(energy, detuning, &mut rec) {
            rec.error = Some(e.to_string());
        }
        rec
    }

    /// Objective value for the detuning search; failed points give NaN and
    /// an undefined purity counts as zero.
    pub fn objective(&self, objective: Objective, energy: f64, detuning: f64) -> f64 {
        let quick = Pipeline {
            settings: PipelineSettings { squeezing: false, clicks: false, ..self.settings.clone() },
            ..self.clone()
        };
        let run = || -> Result<f64> {
            let solved = quick.solve(energy, detuning, false)?;
            Ok(match objective {
                Objective::PhotonNumber => stats::mean_photon(&solved.s),
                Objective::Purity => stats::schmidt(&solved.s)?.map_or(0.0, |k| 1.0 / k),
            })
        };
        run().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    PhotonNumber,
    Purity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimum {
    pub objective: Objective,
    pub energy: f64,
    pub detuning: f64,
    pub value: f64,
    /// The best coarse point sat on a bracket edge; no refinement was done.
    pub at_edge: bool,
    pub evaluations: usize,
    /// (detuning, value) of the coarse scan.
    pub coarse: Vec<(f64, f64)>,
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    // Larger value wins; exact ties go to the smaller |detuning|.
    a.1 > b.1 || (a.1 == b.1 && a.0.abs() < b.0.abs())
}

/// Coarse scan over `bracket` followed by golden-section refinement.
pub fn find_optimal_detuning(
    objective: Objective,
    energy: f64,
    pipeline: &Pipeline,
    bracket: (f64, f64),
) -> Result<Optimum> {
    let (lo, hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if !(hi > lo) {
        return Err(Error::InvalidConfig("empty detuning bracket".into()));
    }
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..COARSE_POINTS).map(|k| lo + k as f64 * step).collect();
    let coarse: Vec<(f64, f64)> = xs.par_iter().map(|&x| (x, pipeline.objective(objective, energy, x))).collect();
    let mut evaluations = coarse.len();
    let valid: Vec<usize> = (0..coarse.len()).filter(|&k| coarse[k].1.is_finite()).collect();
    if valid.is_empty() {
        return Err(Error::Bracket { table: coarse });
    }
    let best = valid.iter().copied().fold(valid[0], |b, k| if better(coarse[k], coarse[b]) { k } else { b });
    let flat = valid.iter().all(|&k| coarse[k].1 == coarse[best].1);
    let done = |x: f64, value: f64, at_edge: bool, evaluations: usize| Optimum {
        objective,
        energy,
        detuning: x,
        value,
        at_edge,
        evaluations,
        coarse: coarse.clone(),
    };
    if best == 0 || best == coarse.len() - 1 {
        return Ok(done(coarse[best].0, coarse[best].1, true, evaluations));
    }
    if flat {
        return Ok(done(coarse[best].0, coarse[best].1, false, evaluations));
    }

    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| {
        let v = pipeline.objective(objective, energy, x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let (mut a, mut b) = (xs[best - 1], xs[best + 1]);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    evaluations += 2;
    while b - a > DETUNING_TOLERANCE {
        if better((c, fc), (d, fd)) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let mut top = if better((c, fc), (d, fd)) { (c, fc) } else { (d, fd) };
    if better(coarse[best], top) {
        top = coarse[best];
    }
    Ok(done(top.0, top.1, false, evaluations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Toggles {
    pub spm: bool,
    pub xpm: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self { spm: true, xpm: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetuningSpec {
    Fixed(Vec<f64>),
    /// Track the optimum of `objective` inside `bracket` at every energy.
    AutoOptimal {
        objective: Objective,
        bracket: (f64, f64),
    },
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub energies: Vec<f64>,
    pub detunings: DetuningSpec,
    pub toggles: Toggles,
    /// Target escape efficiencies applied by overriding the loss; empty
    /// keeps the configured loss.
    pub loss_scenarios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// Sorted by (η_esc, energy, detuning).
    pub records: Vec<PointRecord>,
    pub optima: Vec<Optimum>,
    /// Best fixed detuning for ⟨n_s⟩ and for purity at the highest energy
    /// of the first scenario, when fixed detunings were scanned.
    pub optimum_detuning_n: Option<f64>,
    pub optimum_detuning_p: Option<f64>,
}

pub fn run_sweep(spec: &SweepSpec, base: &Pipeline) -> Result<SweepResult> {
    if spec.energies.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one energy".into()));
    }
    let toggled = base.cfg.with_toggles(spec.toggles.spm, spec.toggles.xpm);
    let scenarios: Vec<Pipeline> = if spec.loss_scenarios.is_empty() {
        vec![base.with_config(toggled)]
    } else {
        spec.loss_scenarios
            .iter()
            .map(|&eta| Ok(base.with_config(toggled.with_escape_efficiency(eta)?)))
            .collect::<Result<_>>()?
    };

    let mut records = Vec::new();
    let mut optima = Vec::new();
    for p in &scenarios {
        match &spec.detunings {
            DetuningSpec::Fixed(ds) => {
                let points: Vec<(f64, f64)> =
                    spec.energies.iter().flat_map(|&e| ds.iter().map(move |&d| (e, d))).collect();
                records.extend(points.par_iter().map(|&(e, d)| p.evaluate(e, d)).collect::<Vec<_>>());
            }
            DetuningSpec::AutoOptimal { objective, bracket } => {
                for &e in &spec.energies {
                    match find_optimal_detuning(*objective, e, p, *bracket) {
                        Ok(opt) => {
                            let mut rec = p.evaluate(e, opt.detuning);
                            if opt.at_edge {
                                rec.warnings.push("optimum pinned to bracket edge".into());
                            }
                            records.push(rec);
                            optima.push(opt);
                        }
                        Err(err) => {
                            let mut rec = p.evaluate(e, f64::NAN);
                            rec.error = Some(err.to_string());
                            records.push(rec);
                        }
                    }
                }
            }
        }
    }
    records.sort_by(|a, b| {
        a.eta_esc.total_cmp(&b.eta_esc).then(a.energy.total_cmp(&b.energy)).then(a.detuning.total_cmp(&b.detuning))
    });

    let (mut opt_n, mut opt_p) = (None, None);
    if matches!(spec.detunings, DetuningSpec::Fixed(_)) {
        let eta0 = model::derive_rates(&scenarios[0].cfg).signal.eta_esc;
        let e_max = spec.energies.iter().copied().fold(f64::MIN, f64::max);
        let top: Vec<&PointRecord> =
            records.iter().filter(|r| r.eta_esc == eta0 && r.energy == e_max && r.stats.is_some()).collect();
        let argmax = |key: &dyn Fn(&PhotonStatistics) -> f64| {
            top.iter()
                .map(|r| (r.detuning, key(r.stats.as_ref().unwrap())))
                .filter(|x| x.1.is_finite())
                .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                    Some(a) if !better(x, a) => Some(a),
                    _ => Some(x),
                })
                .map(|x| x.0)
        };
        opt_n = argmax(&|s| s.n_s);
        opt_p = argmax(&|s| s.purity_p.unwrap_or(0.0));
    }
    Ok(SweepResult { records, optima, optimum_detuning_n: opt_n, optimum_detuning_p: opt_p })
}
