//! Plot-table producers, one per figure, plus the record and table shapes
//! shared with the generic subcommands.

use std::f64::consts::PI;

use anyhow::{bail, Context};
use rayon::prelude::*;
use ringsq::gaussian::{self, ClickProbabilities, SqueezingSummary};
use ringsq::model::units::{hz_to_rad, rad_to_ghz};
use ringsq::model::{self, FrequencyGrid, RingConfig};
use ringsq::pair::{ScatteringMatrix, Sub};
use ringsq::sweep::{run_sweep, DetuningSpec, Objective, Pipeline, PointRecord, Solved, SweepSpec, Toggles};
use ringsq::{modal, stats};
use serde::Serialize;

use crate::output::{num, opt, Run, Table};

pub const FIGURES: [&str; 12] =
    ["fig2", "fig3", "fig4", "fig5", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14"];

/// (name, spm, xpm); SFWM is always on.
pub const SCENARIOS: [(&str, bool, bool); 3] = [("sfwm", false, false), ("sfwm_spm", true, false), ("all", true, true)];

pub const DEFAULT_BRACKET: (f64, f64) = (-2.0 * PI * 0.8e9, 0.0);
const ISLAND_LEVEL: f64 = 0.8;

/// JSON shape of one evaluated point, in plotting units.
#[derive(Debug, Serialize)]
pub struct OutRecord<'a> {
    #[serde(rename = "energy_pJ")]
    pub energy_pj: f64,
    #[serde(rename = "detuning_GHz")]
    pub detuning_ghz: f64,
    pub eta_esc: f64,
    pub n_s: Option<f64>,
    pub n_i: Option<f64>,
    pub g2_s: Option<f64>,
    pub g2_si: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "P")]
    pub p: Option<f64>,
    pub heralding: Option<f64>,
    pub clicks: Option<&'a ClickProbabilities>,
    pub squeezing: Option<&'a SqueezingSummary>,
    pub warnings: &'a [String],
    pub error: Option<&'a str>,
}

impl<'a> From<&'a PointRecord> for OutRecord<'a> {
    fn from(r: &'a PointRecord) -> Self {
        let s = r.stats.as_ref();
        Self {
            energy_pj: r.energy * 1e12,
            detuning_ghz: rad_to_ghz(r.detuning),
            eta_esc: r.eta_esc,
            n_s: s.map(|s| s.n_s),
            n_i: s.map(|s| s.n_i),
            g2_s: s.and_then(|s| s.g2_s),
            g2_si: s.and_then(|s| s.g2_si),
            k: s.and_then(|s| s.schmidt_k),
            p: s.and_then(|s| s.purity_p),
            heralding: s.and_then(|s| s.heralding_i),
            clicks: r.clicks.as_ref(),
            squeezing: r.squeezing.as_ref(),
            warnings: &r.warnings,
            error: r.error.as_deref(),
        }
    }
}

pub const STATS_HEADER: [&str; 12] =
    ["energy_pJ", "detuning_GHz", "eta_esc", "n_s", "n_i", "g2_s", "g2_si", "K", "P", "heralding", "warnings", "error"];

pub fn stats_row(r: &PointRecord) -> Vec<String> {
    let o = OutRecord::from(r);
    vec![
        num(o.energy_pj),
        num(o.detuning_ghz),
        num(o.eta_esc),
        opt(o.n_s),
        opt(o.n_i),
        opt(o.g2_s),
        opt(o.g2_si),
        opt(o.k),
        opt(o.p),
        opt(o.heralding),
        r.warnings.join("; "),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn stats_table(records: &[PointRecord], prefix: Option<(&str, &str)>) -> Table {
    let mut header: Vec<&str> = prefix.iter().map(|p| p.0).collect();
    header.extend(STATS_HEADER);
    let mut t = Table::new(&header);
    for r in records {
        let mut row: Vec<String> = prefix.iter().map(|p| p.1.to_string()).collect();
        row.extend(stats_row(r));
        t.push(row);
    }
    t
}

/// Copies point warnings and errors into the manifest.
pub fn note(run: &mut Run, records: &[PointRecord]) {
    for r in records {
        let at = format!("{} pJ, {} GHz", num(r.energy * 1e12), num(rad_to_ghz(r.detuning)));
        run.warnings.extend(r.warnings.iter().map(|w| format!("{at}: {w}")));
        if let Some(e) = &r.error {
            run.warnings.push(format!("{at}: failed: {e}"));
        }
    }
}

/// Long-form |S_si| heatmap on the signal and idler offset grids.
pub fn heatmap(s: &ScatteringMatrix, grid: &FrequencyGrid) -> Table {
    let m = s.aa_sub(Sub::Si);
    let mut t = Table::new(&["signal_GHz", "idler_GHz", "abs", "re", "im"]);
    for j in 0..grid.n_points {
        for k in 0..grid.n_points {
            let v = m[(j, k)];
            t.push(vec![
                num(rad_to_ghz(grid.offsets[j])),
                num(rad_to_ghz(grid.offsets[k])),
                num(v.norm()),
                num(v.re),
                num(v.im),
            ]);
        }
    }
    t
}

/// |p_s^(1)(t)| of the first signal Schmidt mode; needs a single phantom
/// channel for the sandwich decomposition.
pub fn first_mode(solved: &Solved) -> anyhow::Result<Vec<(f64, f64)>> {
    let c = modal::sandwich_decompose(&solved.s)?.c_aa;
    let sq = modal::squeezer_decompose(&c)?;
    Ok(modal::temporal_schmidt_mode(&sq, 0, &solved.grid)?.into_iter().map(|(t, v)| (t, v.norm())).collect())
}

/// Intra-cavity |A(t)| inside [t0, t1].
pub fn pump_profile(solved: &Solved, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let f = &solved.field;
    (0..f.len()).map(|k| (f.time(k), f.time_samples[k].norm())).filter(|(t, _)| *t >= t0 && *t <= t1).collect()
}

fn normalized(cols: &[Vec<(f64, f64)>]) -> Vec<Vec<f64>> {
    let top = cols.iter().flatten().map(|x| x.1).fold(0.0, f64::max);
    cols.iter().map(|c| c.iter().map(|x| if top > 0.0 { x.1 / top } else { 0.0 }).collect()).collect()
}

fn mode_table(names: &[&str], modes: &[Vec<(f64, f64)>]) -> Table {
    let mut header = vec!["t_ns"];
    header.extend(names);
    let mut t = Table::new(&header);
    let cols = normalized(modes);
    for (k, (time, _)) in modes[0].iter().enumerate() {
        let mut row = vec![num(time * 1e9)];
        row.extend(cols.iter().map(|c| num(c[k])));
        t.push(row);
    }
    t
}

fn pump_table(profile: &[(f64, f64)]) -> Table {
    let mut t = Table::new(&["t_ns", "pump"]);
    for (k, v) in normalized(&[profile.to_vec()])[0].iter().enumerate() {
        t.push(vec![num(profile[k].0 * 1e9), num(*v)]);
    }
    t
}

fn toggled(p: &Pipeline, spm: bool, xpm: bool) -> Pipeline {
    p.with_config(p.cfg.with_toggles(spm, xpm))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn pj(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x * 1e-12).collect()
}

/// Energies for the figure, unless the caller supplied some.
fn energies(custom: &Option<Vec<f64>>, default: Vec<f64>) -> Vec<f64> {
    custom.clone().unwrap_or(default)
}

pub fn run_figure(
    name: &str,
    base: &Pipeline,
    custom_energies: &Option<Vec<f64>>,
    run: &mut Run,
) -> anyhow::Result<()> {
    match name {
        "fig2" => fig2(base, run),
        "fig3" => fig3(base, run),
        "fig4" => fig4(base, &energies(custom_energies, pj(&linspace(1.0, 600.0, 25))), run),
        "fig5" => fig5(base, &energies(custom_energies, pj(&linspace(0.1, 100.0, 25))), run),
        "fig7" => fig7(base, run),
        "fig8" => fig8(base, run),
        "fig9" => fig9(base, &energies(custom_energies, pj(&linspace(50.0, 600.0, 12))), run),
        "fig10" => fig10(base, &energies(custom_energies, pj(&linspace(25.0, 600.0, 24))), run),
        "fig11" => fig11(base, &energies(custom_energies, pj(&linspace(50.0, 600.0, 12))), run),
        "fig12" => fig12(base, run),
        "fig13" => fig13(base, run),
        "fig14" => fig14(base, run),
        other => bail!("unknown figure {other:?}; expected one of {}", FIGURES.join(", ")),
    }
}

fn fig2(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let panels = [
        ("fig2a_1pJ_all", 1.0, true, true),
        ("fig2b_600pJ_sfwm", 600.0, false, false),
        ("fig2c_600pJ_sfwm_spm", 600.0, true, false),
        ("fig2d_600pJ_all", 600.0, true, true),
    ];
    let solved: Vec<_> = panels
        .par_iter()
        .map(|&(_, e, spm, xpm)| toggled(base, spm, xpm).solve(e * 1e-12, 0.0, false))
        .collect::<Result<_, _>>()?;
    for (p, s) in panels.iter().zip(&solved) {
        run.write_csv(&format!("{}.csv", p.0), &heatmap(&s.s, &s.grid))?;
    }
    Ok(())
}

fn fig3(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let cases = [(1.0, false, false), (200.0, false, false), (200.0, true, false), (200.0, true, true)];
    let solved: Vec<Solved> = cases
        .par_iter()
        .map(|&(e, spm, xpm)| toggled(base, spm, xpm).solve(e * 1e-12, 0.0, false))
        .collect::<Result<_, _>>()?;
    let modes: Vec<_> = solved.iter().map(first_mode).collect::<anyhow::Result<_>>()?;
    let (t0, t1) = (modes[0][0].0, modes[0].last().unwrap().0);
    run.write_csv("fig3a.csv", &mode_table(&["sfwm_1pJ", "sfwm_200pJ"], &modes[0..2]))?;
    run.write_csv("fig3a_pump.csv", &pump_table(&pump_profile(&solved[1], t0, t1)))?;
    run.write_csv("fig3b.csv", &mode_table(&["sfwm_spm_200pJ", "all_200pJ"], &modes[2..4]))?;
    run.write_csv("fig3b_pump.csv", &pump_table(&pump_profile(&solved[2], t0, t1)))?;
    Ok(())
}

fn scenario_sweep(
    base: &Pipeline,
    energies: &[f64],
    clicks: bool,
) -> anyhow::Result<Vec<(&'static str, Vec<PointRecord>)>> {
    let mut p = base.clone();
    p.settings.clicks = clicks;
    SCENARIOS
        .iter()
        .map(|&(name, spm, xpm)| {
            let spec = SweepSpec {
                energies: energies.to_vec(),
                detunings: DetuningSpec::Fixed(vec![0.0]),
                toggles: Toggles { spm, xpm },
                loss_scenarios: vec![],
            };
            Ok((name, run_sweep(&spec, &p)?.records))
        })
        .collect()
}

fn fig4(base: &Pipeline, energies: &[f64], run: &mut Run) -> anyhow::Result<()> {
    let all = scenario_sweep(base, energies, false)?;
    let mut t = Table::new(&["scenario"]);
    for (name, recs) in &all {
        let part = stats_table(recs, Some(("scenario", name)));
        t.header = part.header;
        t.rows.extend(part.rows);
        note(run, recs);
    }
    run.write_csv("fig4.csv", &t)?;

    // Low-gain fit of the C^aa squeezing parameters, extrapolated linearly.
    let e_fit = 1e-12;
    let sfwm = toggled(base, false, false);
    let low = sfwm.solve(e_fit, 0.0, false)?;
    let c = modal::sandwich_decompose(&low.s)?.c_aa;
    let slopes = stats::fit_simplified_model(&modal::squeezer_decompose(&c)?.r_c, e_fit);
    let eta = model::derive_rates(&base.cfg).signal.eta_esc;
    let mut m = Table::new(&["energy_pJ", "n_model"]);
    for &e in energies {
        m.push(vec![num(e * 1e12), num(eta * stats::simplified_sfwm_model(&slopes, e))]);
    }
    run.write_csv("fig4_model.csv", &m)?;
    Ok(())
}

fn fig5(base: &Pipeline, energies: &[f64], run: &mut Run) -> anyhow::Result<()> {
    let all = scenario_sweep(base, energies, true)?;
    let mut t =
        Table::new(&["scenario", "energy_pJ", "n_s", "g2_si", "g2_si_click", "heralding", "heralding_click", "error"]);
    for (name, recs) in &all {
        note(run, recs);
        for r in recs {
            let s = r.stats.as_ref();
            let c = r.clicks.as_ref();
            t.push(vec![
                name.to_string(),
                num(r.energy * 1e12),
                opt(s.map(|s| s.n_s)),
                opt(s.and_then(|s| s.g2_si)),
                opt(c.map(|c| c.p_si / (c.p_s * c.p_i))),
                opt(s.and_then(|s| s.heralding_i)),
                opt(c.map(|c| c.p_si / c.p_s)),
                r.error.clone().unwrap_or_default(),
            ]);
        }
    }
    run.write_csv("fig5.csv", &t)
}

fn fig7(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let spec = SweepSpec {
        energies: vec![600e-12],
        detunings: DetuningSpec::Fixed(linspace(0.0, -0.8, 33).into_iter().map(|g| hz_to_rad(g * 1e9)).collect()),
        toggles: Toggles::default(),
        loss_scenarios: vec![],
    };
    let res = run_sweep(&spec, base)?;
    note(run, &res.records);
    run.write_csv("fig7a.csv", &stats_table(&res.records, None))?;
    let s = base.solve(600e-12, hz_to_rad(-0.49e9), false)?;
    run.write_csv("fig7b.csv", &heatmap(&s.s, &s.grid))
}

fn fig8(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let es = [1.0, 200.0, 400.0, 800.0];
    let d = hz_to_rad(-0.49e9);
    let solved: Vec<anyhow::Result<Solved>> =
        es.par_iter().map(|&e| base.solve(e * 1e-12, d, false).with_context(|| format!("{e} pJ"))).collect();
    let mut islands = Table::new(&["energy_pJ", "islands", "error"]);
    for (tag, (e, s)) in ["a", "b", "c", "d"].iter().zip(es.iter().zip(solved)) {
        match s {
            Ok(s) => {
                run.write_csv(&format!("fig8{tag}_{e}pJ.csv"), &heatmap(&s.s, &s.grid))?;
                let n = modal::count_islands(&s.s.aa_sub(Sub::Si), ISLAND_LEVEL);
                islands.push(vec![num(*e), n.to_string(), String::new()]);
            }
            Err(err) => {
                run.warnings.push(format!("fig8 {e} pJ: {err:#}"));
                islands.push(vec![num(*e), String::new(), format!("{err:#}")]);
            }
        }
    }
    run.write_csv("fig8_islands.csv", &islands)
}

fn fig9(base: &Pipeline, energies: &[f64], run: &mut Run) -> anyhow::Result<()> {
    let mut t = Table::new(&["curve", "energy_pJ", "detuning_GHz", "n_s", "P", "at_edge", "error"]);
    for (curve, objective) in [("optimal_n", Objective::PhotonNumber), ("optimal_p", Objective::Purity)] {
        let spec = SweepSpec {
            energies: energies.to_vec(),
            detunings: DetuningSpec::AutoOptimal { objective, bracket: DEFAULT_BRACKET },
            toggles: Toggles::default(),
            loss_scenarios: vec![],
        };
        let res = run_sweep(&spec, base)?;
        note(run, &res.records);
        for r in &res.records {
            let edge = r.warnings.iter().any(|w| w.contains("bracket edge"));
            t.push(envelope_row(curve, r, edge));
        }
    }
    for ghz in ["0", "-0.2", "-0.4"] {
        let d = hz_to_rad(ghz.parse::<f64>()? * 1e9);
        let spec = SweepSpec {
            energies: energies.to_vec(),
            detunings: DetuningSpec::Fixed(vec![d]),
            toggles: Toggles::default(),
            loss_scenarios: vec![],
        };
        let fixed = run_sweep(&spec, base)?;
        note(run, &fixed.records);
        for r in &fixed.records {
            t.push(envelope_row(&format!("fixed_{ghz}GHz"), r, false));
        }
    }
    run.write_csv("fig9.csv", &t)
}

fn envelope_row(curve: &str, r: &PointRecord, edge: bool) -> Vec<String> {
    let s = r.stats.as_ref();
    vec![
        curve.to_string(),
        num(r.energy * 1e12),
        num(rad_to_ghz(r.detuning)),
        opt(s.map(|s| s.n_s)),
        opt(s.and_then(|s| s.purity_p)),
        edge.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

pub const SQUEEZING_HEADER: [&str; 9] = [
    "eta_esc",
    "energy_pJ",
    "detuning_GHz",
    "squeezing_dB",
    "antisqueezing_dB",
    "state_purity",
    "P",
    "bound_dB",
    "error",
];

pub fn squeezing_row(r: &PointRecord) -> Vec<String> {
    let q = r.squeezing.as_ref();
    vec![
        num(r.eta_esc),
        num(r.energy * 1e12),
        num(rad_to_ghz(r.detuning)),
        opt(q.and_then(|q| q.squeezing_db.first().copied())),
        opt(q.and_then(|q| q.antisqueezing_db.first().copied())),
        opt(q.map(|q| q.state_purity)),
        opt(r.stats.as_ref().and_then(|s| s.purity_p)),
        num(-10.0 * (1.0 - r.eta_esc).log10()),
        r.error.clone().unwrap_or_default(),
    ]
}

fn squeezing_sweep(
    base: &Pipeline,
    energies: &[f64],
    etas: &[f64],
    detunings: DetuningSpec,
) -> anyhow::Result<Vec<PointRecord>> {
    let mut p = base.clone();
    p.settings.squeezing = true;
    let spec = SweepSpec {
        energies: energies.to_vec(),
        detunings,
        toggles: Toggles::default(),
        loss_scenarios: etas.to_vec(),
    };
    Ok(run_sweep(&spec, &p)?.records)
}

fn fig10(base: &Pipeline, energies: &[f64], run: &mut Run) -> anyhow::Result<()> {
    let etas = [0.776, 0.9, 0.97];
    let recs = squeezing_sweep(base, energies, &etas, DetuningSpec::Fixed(vec![0.0]))?;
    note(run, &recs);
    let mut t = Table::new(&SQUEEZING_HEADER);
    recs.iter().for_each(|r| t.push(squeezing_row(r)));
    run.write_csv("fig10a.csv", &t)?;

    let mut b = Table::new(&["eta_esc", "max_squeezing_dB", "energy_pJ", "bound_dB"]);
    for &eta in &etas {
        let best = recs
            .iter()
            .filter(|r| (r.eta_esc - eta).abs() < 1e-9)
            .filter_map(|r| Some((r.energy, *r.squeezing.as_ref()?.squeezing_db.first()?)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let (e, db) = best.map_or((None, None), |(e, db)| (Some(e * 1e12), Some(db)));
        b.push(vec![num(eta), opt(db), opt(e), num(-10.0 * (1.0 - eta).log10())]);
    }
    run.write_csv("fig10b.csv", &b)
}

fn fig11(base: &Pipeline, energies: &[f64], run: &mut Run) -> anyhow::Result<()> {
    let etas = [0.776, 0.9, 0.97, 0.99];
    let auto = DetuningSpec::AutoOptimal { objective: Objective::Purity, bracket: DEFAULT_BRACKET };
    let recs = squeezing_sweep(base, energies, &etas, auto)?;
    note(run, &recs);
    let mut t = Table::new(&SQUEEZING_HEADER);
    recs.iter().for_each(|r| t.push(squeezing_row(r)));
    run.write_csv("fig11.csv", &t)
}

/// Williamson spectra at 100 pJ for a lossless and a 0.97 device.
fn fig12(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let mut t = Table::new(&["eta_esc", "mode", "squeezing_dB", "antisqueezing_dB", "nu"]);
    for eta in [1.0, 0.97] {
        let p = base.with_config(base.cfg.with_escape_efficiency(eta)?);
        let s = p.solve(100e-12, 0.0, false)?;
        let w = gaussian::williamson(&gaussian::bus_covariance(&s.s)?)?.summary(10);
        for k in 0..w.squeezing_db.len() {
            t.push(vec![
                num(eta),
                (k + 1).to_string(),
                num(w.squeezing_db[k]),
                num(w.antisqueezing_db[k]),
                num(w.nu[k]),
            ]);
        }
    }
    run.write_csv("fig12.csv", &t)
}

pub const CONVERGENCE_HEADER: [&str; 12] = [
    "finesse",
    "eta_esc",
    "channels",
    "n_s",
    "g2_s",
    "g2_si",
    "K",
    "P",
    "heralding",
    "rel_diff_n",
    "warnings",
    "error",
];

/// Statistics against the number of phantom channels, relative to the
/// largest count, for each device.
pub fn convergence(devices: &[RingConfig], base: &Pipeline, channels: &[usize], energy: f64) -> anyhow::Result<Table> {
    if channels.is_empty() {
        bail!("no channel counts given");
    }
    let m_ref = *channels.iter().max().unwrap();
    let mut t = Table::new(&CONVERGENCE_HEADER);
    for cfg in devices {
        let rates = model::derive_rates(cfg).signal;
        let recs: Vec<(usize, PointRecord)> =
            channels.par_iter().map(|&m| (m, base.with_config(cfg.with_channels(m)).evaluate(energy, 0.0))).collect();
        let n_ref = recs.iter().find(|(m, _)| *m == m_ref).and_then(|(_, r)| r.stats.as_ref()).map(|s| s.n_s);
        for (m, r) in &recs {
            let s = r.stats.as_ref();
            let rel = s.zip(n_ref).map(|(s, n)| (s.n_s - n).abs() / n);
            t.push(vec![
                num(rates.finesse),
                num(rates.eta_esc),
                m.to_string(),
                opt(s.map(|s| s.n_s)),
                opt(s.and_then(|s| s.g2_s)),
                opt(s.and_then(|s| s.g2_si)),
                opt(s.and_then(|s| s.schmidt_k)),
                opt(s.and_then(|s| s.purity_p)),
                opt(s.and_then(|s| s.heralding_i)),
                opt(rel),
                r.warnings.join("; "),
                r.error.clone().unwrap_or_default(),
            ]);
        }
    }
    Ok(t)
}

fn fig13(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let t = convergence(std::slice::from_ref(&base.cfg), base, &[1, 2, 5, 10, 20], 1e-12)?;
    run.write_csv("fig13.csv", &t)
}

fn fig14(base: &Pipeline, run: &mut Run) -> anyhow::Result<()> {
    let eta = model::derive_rates(&base.cfg).signal.eta_esc;
    let devices: Vec<RingConfig> = [400.0, 300.0, 200.0, 150.0, 100.0, 75.0]
        .iter()
        .map(|&f| base.cfg.with_finesse(f, eta))
        .collect::<Result<_, _>>()?;
    let t = convergence(&devices, base, &[1, 20], 1e-12)?;
    run.write_csv("fig14.csv", &t)
}
