//! `ringsq`: ring-resonator squeezed-light simulator.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod figures;
mod output;
mod units;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ringsq::gaussian;
use ringsq::model::units::rad_to_ghz;
use ringsq::sweep::{find_optimal_detuning, run_sweep, DetuningSpec, Objective, Pipeline, SweepSpec, Toggles};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::figures::OutRecord;
use crate::output::{num, ErrorReport, Manifest, Run, Table};
use crate::units::Dim;

#[derive(Parser)]
#[command(name = "ringsq", version, about = "High-gain pulsed SFWM in a microring resonator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "RINGSQ_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true)]
    grid_span_fwhm: Option<f64>,
    #[arg(long, global = true)]
    z_steps: Option<usize>,
    /// e.g. "spm=on,xpm=off".
    #[arg(long, global = true)]
    toggles: Option<String>,
    /// Phantom channel count; a list for `convergence`.
    #[arg(long, global = true)]
    channels: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One point: statistics, |S_si| and the first Schmidt mode.
    Simulate {
        #[arg(long, default_value = "1pJ")]
        energy: String,
        #[arg(long, default_value = "0GHz", allow_hyphen_values = true)]
        detuning: String,
    },
    /// Figure tables, or a generic energy/detuning sweep.
    Sweep {
        /// One of fig2..fig14.
        #[arg(long)]
        figure: Option<String>,
        /// Energies, list "a,b" or range "a..b:n"; defaults to the config.
        #[arg(long)]
        energy: Option<String>,
        /// Detunings, or "auto" to track the optimum.
        #[arg(long, allow_hyphen_values = true)]
        detuning: Option<String>,
        #[arg(long)]
        objective: Option<String>,
        /// Escape-efficiency scenarios.
        #[arg(long)]
        eta: Option<String>,
    },
    /// Locate the detuning maximizing ⟨n_s⟩ or the spectral purity.
    OptimalDetuning {
        #[arg(long, default_value = "purity")]
        objective: String,
        #[arg(long, default_value = "600pJ")]
        energy: String,
        /// "lo,hi".
        #[arg(long, default_value = "-0.8GHz,0GHz", allow_hyphen_values = true)]
        bracket: String,
    },
    /// Williamson squeezing spectra.
    Squeezing {
        #[arg(long, default_value = "100pJ")]
        energy: String,
        /// A value, a list, or "optimal" for the purity-optimal detuning.
        #[arg(long, default_value = "0GHz", allow_hyphen_values = true)]
        detuning: String,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long, default_value_t = 5)]
        modes: usize,
    },
    /// Phantom-channel convergence, optionally across finesse values.
    Convergence {
        #[arg(long, default_value = "1pJ")]
        energy: String,
        #[arg(long)]
        finesse: Option<String>,
        /// Escape efficiency held fixed across the finesse list.
        #[arg(long)]
        eta: Option<f64>,
    },
}

struct Session {
    file: ConfigFile,
    hash: String,
    base: Pipeline,
    sweep: Option<SweepSpec>,
    threads: usize,
    round_trips: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport::from_anyhow(&e);
            eprintln!("{}", serde_json::to_string(&report).expect("error serializes"));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    let path = g.config.as_ref().context("--config is required")?;
    let mut file = config::load(path)?;
    // Overrides are folded into the config so the hash covers them.
    if let Some(n) = g.grid_n {
        file.grid.points = n;
    }
    if let Some(x) = g.grid_span_fwhm {
        file.grid.span_fwhm = x;
    }
    if let Some(z) = g.z_steps {
        file.grid.z_steps = z;
    }
    if let Some(t) = &g.toggles {
        let t = parse_toggles(t)?;
        if !t.spm {
            file.ring.gamma_spm = "0 /W/m".into();
        }
        if !t.xpm {
            file.ring.gamma_xpm = "0 /W/m".into();
        }
    }
    let is_convergence = matches!(cli.command, Command::Convergence { .. });
    let channels = match &g.channels {
        Some(text) => parse_channels(text)?,
        None => vec![],
    };
    if !is_convergence {
        match channels.as_slice() {
            [] => {}
            [m] => file.ring.phantom_channels = *m,
            _ => bail!("--channels takes a single value outside `convergence`"),
        }
    }
    let resolved = file.resolve()?;
    let base = Pipeline::new(resolved.cfg, resolved.pulse.clone(), resolved.settings);

    let threads = g.threads.unwrap_or(0);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        pool = pool.num_threads(threads);
    }
    pool.build_global().context("starting worker threads")?;
    ringsq::set_sequential_kernels();

    let ctx = Session {
        hash: file.hash(),
        file,
        base,
        sweep: resolved.sweep,
        threads: rayon::current_num_threads(),
        round_trips: resolved.pulse.n_round_trips,
    };
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;

    let (stem, command) = match &cli.command {
        Command::Simulate { .. } => ("simulate".to_string(), "simulate"),
        Command::Sweep { figure: Some(f), .. } => (f.clone(), "sweep"),
        Command::Sweep { .. } => ("sweep".to_string(), "sweep"),
        Command::OptimalDetuning { .. } => ("optimal_detuning".to_string(), "optimal-detuning"),
        Command::Squeezing { .. } => ("squeezing".to_string(), "squeezing"),
        Command::Convergence { .. } => ("convergence".to_string(), "convergence"),
    };
    let mut out = Run::new(&g.out, &stem)?;
    match &cli.command {
        Command::Simulate { energy, detuning } => simulate(&ctx, &mut out, energy, detuning)?,
        Command::Sweep { figure: Some(f), energy, .. } => {
            let custom = energy.as_deref().map(|e| values(e, Dim::Energy, "--energy")).transpose()?;
            figures::run_figure(f, &ctx.base, &custom, &mut out)?;
        }
        Command::Sweep { figure: None, energy, detuning, objective, eta } => {
            sweep(&ctx, &mut out, energy.as_deref(), detuning.as_deref(), objective.as_deref(), eta.as_deref())?
        }
        Command::OptimalDetuning { objective, energy, bracket } => optimal(&ctx, &mut out, objective, energy, bracket)?,
        Command::Squeezing { energy, detuning, eta, modes } => {
            squeezing(&ctx, &mut out, energy, detuning, eta.as_deref(), *modes)?
        }
        Command::Convergence { energy, finesse, eta } => {
            convergence(&ctx, &mut out, &channels, energy, finesse.as_deref(), *eta)?
        }
    }

    let manifest = Manifest {
        tool: "ringsq",
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config_hash: ctx.hash.clone(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        threads: ctx.threads,
        grid_points: ctx.base.settings.grid_points,
        span_fwhm: ctx.base.settings.span_fwhm,
        z_steps: ctx.base.settings.z_steps,
        round_trips: ctx.round_trips,
        config: serde_json::from_str(&ctx.file.canonical())?,
        outputs: vec![],
        warnings: vec![],
    };
    out.finish(manifest)?;
    Ok(())
}

fn values(text: &str, dim: Dim, flag: &str) -> anyhow::Result<Vec<f64>> {
    units::parse_values(text, dim).map_err(|e| anyhow::anyhow!("{flag}: {e}"))
}

fn one(text: &str, dim: Dim, flag: &str) -> anyhow::Result<f64> {
    units::parse(text, dim).map_err(|e| anyhow::anyhow!("{flag}: {e}"))
}

fn detunings(text: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    Ok(values(text, Dim::Frequency, flag)?.into_iter().map(|f| 2.0 * PI * f).collect())
}

fn fractions(text: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',').map(|s| s.trim().parse::<f64>().with_context(|| format!("{flag}: bad number {s:?}"))).collect()
}

fn parse_toggles(text: &str) -> anyhow::Result<Toggles> {
    let mut t = Toggles::default();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').with_context(|| format!("--toggles: expected key=on|off, got {part:?}"))?;
        let on = match v.trim() {
            "on" | "true" => true,
            "off" | "false" => false,
            other => bail!("--toggles: {k} must be on or off, got {other:?}"),
        };
        match k.trim() {
            "spm" => t.spm = on,
            "xpm" => t.xpm = on,
            other => bail!("--toggles: unknown effect {other:?} (spm, xpm)"),
        }
    }
    Ok(t)
}

fn parse_channels(text: &str) -> anyhow::Result<Vec<usize>> {
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("--channels: bad count {s:?}")))
        .collect::<anyhow::Result<_>>()?;
    if v.contains(&0) {
        bail!("--channels: counts must be >= 1");
    }
    Ok(v)
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    record: OutRecord<'a>,
    schmidt_r: Option<Vec<f64>>,
}

fn simulate(ctx: &Session, out: &mut Run, energy: &str, detuning: &str) -> anyhow::Result<()> {
    let e = one(energy, Dim::Energy, "--energy")?;
    let d = ringsq::model::units::hz_to_rad(one(detuning, Dim::Frequency, "--detuning")?);
    let mut p = ctx.base.clone();
    p.settings.clicks = true;
    p.settings.squeezing = true;
    let rec = p.evaluate(e, d);
    figures::note(out, std::slice::from_ref(&rec));
    if let Some(err) = &rec.error {
        bail!("{err}");
    }
    let solved = p.solve(e, d, false)?;
    out.write_csv("simulate_jsa.csv", &figures::heatmap(&solved.s, &solved.grid))?;

    let mut schmidt_r = None;
    if solved.s.channels == 1 {
        let c = ringsq::modal::sandwich_decompose(&solved.s)?.c_aa;
        let sq = ringsq::modal::squeezer_decompose(&c)?;
        let mut t = Table::new(&["mode", "r_c", "weight"]);
        let total: f64 = sq.r_c.iter().map(|r| r.sinh().powi(2)).sum();
        for (k, r) in sq.r_c.iter().enumerate() {
            let w = if total > 0.0 { r.sinh().powi(2) / total } else { 0.0 };
            t.push(vec![(k + 1).to_string(), num(*r), num(w)]);
        }
        out.write_csv("simulate_schmidt.csv", &t)?;
        if sq.r_c.first().is_some_and(|&r| r > 0.0) {
            let mode = figures::first_mode(&solved)?;
            let (t0, t1) = (mode[0].0, mode.last().unwrap().0);
            let mut m = Table::new(&["t_ns", "abs"]);
            mode.iter().for_each(|(t, v)| m.push(vec![num(t * 1e9), num(*v)]));
            out.write_csv("simulate_mode.csv", &m)?;
            let mut pt = Table::new(&["t_ns", "abs"]);
            figures::pump_profile(&solved, t0, t1).iter().for_each(|(t, v)| pt.push(vec![num(t * 1e9), num(*v)]));
            out.write_csv("simulate_pump.csv", &pt)?;
        }
        schmidt_r = Some(sq.r_c);
    } else {
        out.warnings.push("Schmidt tables need a single phantom channel; skipped".into());
    }
    let doc = SimulateDoc { record: OutRecord::from(&rec), schmidt_r };
    out.write_json("simulate.json", &ctx.hash, &doc)
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    records: Vec<OutRecord<'a>>,
    optima: Vec<OptimumOut>,
    #[serde(rename = "optimum_detuning_n_GHz")]
    optimum_detuning_n: Option<f64>,
    #[serde(rename = "optimum_detuning_P_GHz")]
    optimum_detuning_p: Option<f64>,
}

#[derive(Serialize)]
struct OptimumOut {
    objective: Objective,
    #[serde(rename = "energy_pJ")]
    energy: f64,
    #[serde(rename = "detuning_GHz")]
    detuning: f64,
    value: f64,
    at_edge: bool,
    evaluations: usize,
}

fn optimum_out(o: &ringsq::sweep::Optimum) -> OptimumOut {
    OptimumOut {
        objective: o.objective,
        energy: o.energy * 1e12,
        detuning: rad_to_ghz(o.detuning),
        value: o.value,
        at_edge: o.at_edge,
        evaluations: o.evaluations,
    }
}

fn sweep(
    ctx: &Session,
    out: &mut Run,
    energy: Option<&str>,
    detuning: Option<&str>,
    objective: Option<&str>,
    eta: Option<&str>,
) -> anyhow::Result<()> {
    let mut spec = match &ctx.sweep {
        Some(s) => s.clone(),
        None => SweepSpec {
            energies: vec![],
            detunings: DetuningSpec::Fixed(vec![0.0]),
            toggles: Toggles::default(),
            loss_scenarios: vec![],
        },
    };
    if let Some(e) = energy {
        spec.energies = values(e, Dim::Energy, "--energy")?;
    }
    if spec.energies.is_empty() {
        bail!("no energies: pass --energy or add a sweep section to the config");
    }
    let current_objective = match &spec.detunings {
        DetuningSpec::AutoOptimal { objective, .. } => *objective,
        _ => Objective::Purity,
    };
    let objective = objective.map(config::parse_objective).transpose()?.unwrap_or(current_objective);
    match detuning {
        Some("auto") => spec.detunings = DetuningSpec::AutoOptimal { objective, bracket: figures::DEFAULT_BRACKET },
        Some(d) => spec.detunings = DetuningSpec::Fixed(detunings(d, "--detuning")?),
        None => {
            if let DetuningSpec::AutoOptimal { objective: o, .. } = &mut spec.detunings {
                *o = objective;
            }
        }
    }
    if let Some(e) = eta {
        spec.loss_scenarios = fractions(e, "--eta")?;
    }
    let res = run_sweep(&spec, &ctx.base)?;
    figures::note(out, &res.records);
    for o in res.optima.iter().filter(|o| o.at_edge) {
        out.warnings.push(format!("{} pJ: optimum pinned to bracket edge", num(o.energy * 1e12)));
    }
    out.write_csv("sweep.csv", &figures::stats_table(&res.records, None))?;
    let doc = SweepDoc {
        records: res.records.iter().map(OutRecord::from).collect(),
        optima: res.optima.iter().map(optimum_out).collect(),
        optimum_detuning_n: res.optimum_detuning_n.map(rad_to_ghz),
        optimum_detuning_p: res.optimum_detuning_p.map(rad_to_ghz),
    };
    out.write_json("sweep.json", &ctx.hash, &doc)
}

fn bracket(text: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = text.split_once(',').context("--bracket: expected \"lo,hi\"")?;
    let lo = units::angular(a.trim()).map_err(|e| anyhow::anyhow!("--bracket: {e}"))?;
    let hi = units::angular(b.trim()).map_err(|e| anyhow::anyhow!("--bracket: {e}"))?;
    Ok((lo, hi))
}

fn optimal(ctx: &Session, out: &mut Run, objective: &str, energy: &str, bracket_text: &str) -> anyhow::Result<()> {
    let objective = config::parse_objective(objective)?;
    let br = bracket(bracket_text)?;
    let energies = values(energy, Dim::Energy, "--energy")?;
    let mut t = Table::new(&["energy_pJ", "detuning_GHz", "value", "at_edge", "evaluations"]);
    let mut scan = Table::new(&["energy_pJ", "detuning_GHz", "value"]);
    let mut optima = Vec::new();
    for &e in &energies {
        let o = find_optimal_detuning(objective, e, &ctx.base, br).with_context(|| format!("{} pJ", num(e * 1e12)))?;
        if o.at_edge {
            out.warnings.push(format!("{} pJ: optimum pinned to bracket edge", num(e * 1e12)));
        }
        t.push(vec![
            num(e * 1e12),
            num(rad_to_ghz(o.detuning)),
            num(o.value),
            o.at_edge.to_string(),
            o.evaluations.to_string(),
        ]);
        for &(d, v) in &o.coarse {
            scan.push(vec![num(e * 1e12), num(rad_to_ghz(d)), num(v)]);
        }
        optima.push(optimum_out(&o));
    }
    out.write_csv("optimal_detuning.csv", &t)?;
    out.write_csv("optimal_detuning_scan.csv", &scan)?;
    #[derive(Serialize)]
    struct Doc {
        optima: Vec<OptimumOut>,
    }
    out.write_json("optimal_detuning.json", &ctx.hash, &Doc { optima })
}

fn squeezing(
    ctx: &Session,
    out: &mut Run,
    energy: &str,
    detuning: &str,
    eta: Option<&str>,
    modes: usize,
) -> anyhow::Result<()> {
    if modes == 0 {
        bail!("--modes must be >= 1");
    }
    let energies = values(energy, Dim::Energy, "--energy")?;
    let etas = eta.map(|e| fractions(e, "--eta")).transpose()?.unwrap_or_default();
    let spec = SweepSpec {
        energies,
        detunings: if detuning == "optimal" {
            DetuningSpec::AutoOptimal { objective: Objective::Purity, bracket: figures::DEFAULT_BRACKET }
        } else {
            DetuningSpec::Fixed(detunings(detuning, "--detuning")?)
        },
        toggles: Toggles::default(),
        loss_scenarios: etas,
    };
    let mut p = ctx.base.clone();
    p.settings.squeezing = true;
    let res = run_sweep(&spec, &p)?;
    figures::note(out, &res.records);
    let mut summary = Table::new(&figures::SQUEEZING_HEADER);
    let mut spectrum =
        Table::new(&["eta_esc", "energy_pJ", "detuning_GHz", "mode", "squeezing_dB", "antisqueezing_dB", "nu"]);
    for r in &res.records {
        summary.push(figures::squeezing_row(r));
        if r.error.is_some() {
            continue;
        }
        // Records keep a short summary; the full spectrum is recomputed.
        let dev = if spec.loss_scenarios.is_empty() {
            p.clone()
        } else {
            p.with_config(p.cfg.with_escape_efficiency(r.eta_esc)?)
        };
        let s = dev.solve(r.energy, r.detuning, false)?;
        let w = gaussian::williamson(&gaussian::bus_covariance(&s.s)?)?.summary(modes);
        for k in 0..w.squeezing_db.len() {
            spectrum.push(vec![
                num(r.eta_esc),
                num(r.energy * 1e12),
                num(rad_to_ghz(r.detuning)),
                (k + 1).to_string(),
                num(w.squeezing_db[k]),
                num(w.antisqueezing_db[k]),
                num(w.nu[k]),
            ]);
        }
    }
    out.write_csv("squeezing.csv", &summary)?;
    out.write_csv("squeezing_modes.csv", &spectrum)?;
    let doc: Vec<OutRecord> = res.records.iter().map(OutRecord::from).collect();
    #[derive(Serialize)]
    struct Doc<'a> {
        records: Vec<OutRecord<'a>>,
    }
    out.write_json("squeezing.json", &ctx.hash, &Doc { records: doc })
}

fn convergence(
    ctx: &Session,
    out: &mut Run,
    channels: &[usize],
    energy: &str,
    finesse: Option<&str>,
    eta: Option<f64>,
) -> anyhow::Result<()> {
    let channels = if channels.is_empty() { vec![1, 2, 5, 10, 20] } else { channels.to_vec() };
    let e = one(energy, Dim::Energy, "--energy")?;
    let devices = match finesse {
        None => match eta {
            Some(eta) => vec![ctx.base.cfg.with_escape_efficiency(eta)?],
            None => vec![ctx.base.cfg.clone()],
        },
        Some(list) => {
            let eta = eta.unwrap_or(ringsq::model::derive_rates(&ctx.base.cfg).signal.eta_esc);
            fractions(list, "--finesse")?
                .into_iter()
                .map(|f| ctx.base.cfg.with_finesse(f, eta))
                .collect::<Result<_, _>>()?
        }
    };
    let t = figures::convergence(&devices, &ctx.base, &channels, e)?;
    for row in &t.rows {
        if !row[11].is_empty() {
            out.warnings.push(format!("{} channels: failed: {}", row[2], row[11]));
        }
    }
    out.write_csv("convergence.csv", &t)
}
