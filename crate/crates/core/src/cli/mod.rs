//! Command-line front end: argument definitions, the `simulate` pipeline and
//! CSV/JSON emission. The `coopshift` binary only parses arguments and calls
//! [`run`].

mod config;
mod output;

pub use config::{parse_config, parse_key_values, SimulateConfig, CONFIG_HELP, CONFIG_KEYS};
pub use output::{
    allan_csv, histogram_csv, read_csv_rows, series_csv, unix_time_s, write_atomic, Emitter, RunManifest,
    MANIFEST_FILE,
};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::chain::{build_chain, TrapConfig};
use crate::collective::{shift_curve, unit_strength_design, ThermalModel};
use crate::constants::{SR88_ION_MASS_U, SR_OSCILLATOR_STRENGTH_MHZ};
use crate::dipole::{two_ion_manifold, Polarization, Transition};
use crate::error::{invalid, io_err, Error, Result};
use crate::experiment::{
    allan_deviation, anchor_mean, fit_oscillator_strength, jarque_bera, octave_taus, relative_profile,
    relative_shift, simulate_series, FitPoint, FitResult, Histogram, MeasurementSeries, JARQUE_BERA_CRITICAL_1PCT,
};
use crate::spectro::shot_noise_sigma;

#[derive(Debug, Parser)]
#[command(name = "coopshift", version, about = "Cooperative line shifts of trapped-ion chains")]
pub struct Cli {
    /// RNG seed (curve thermal sampling; overrides `seed` in a simulate config)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write outputs and manifest.json here instead of stdout (simulate: default `.`)
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Suppress progress messages on stderr
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium positions as CSV `index,t_m,r_m_um`
    Chain(ChainArgs),
    /// Two-ion pair shift and the 8 manifold eigenvalues as JSON
    Shift(ShiftArgs),
    /// Observable shift versus inner-pair spacing as CSV
    Curve(CurveArgs),
    /// Run the virtual interlaced experiment
    #[command(after_help = CONFIG_HELP)]
    Simulate(SimulateArgs),
    /// Allan deviation of a series CSV as CSV `tau_s,sigma_mhz`
    Allan(AllanArgs),
    /// Fit the oscillator strength to CSV `spacing_um,shift_khz,sigma_khz`
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Number of ions
    #[arg(long)]
    pub ions: usize,
    /// Axial centre-of-mass frequency, MHz
    #[arg(long)]
    pub axial_freq_mhz: f64,
    /// Ion mass, u
    #[arg(long, default_value_t = SR88_ION_MASS_U)]
    pub mass_u: f64,
    /// Charge state
    #[arg(long, default_value_t = 1)]
    pub charge: u32,
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    /// Ion separation, um
    #[arg(long)]
    pub separation_um: f64,
    /// Include the near-field terms of the coupling
    #[arg(long)]
    pub near_field: bool,
    /// Oscillator strength A0, MHz
    #[arg(long, default_value_t = SR_OSCILLATOR_STRENGTH_MHZ)]
    pub oscillator_strength_mhz: f64,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Number of ions
    #[arg(long)]
    pub ions: usize,
    /// Smallest inner-pair spacing, um
    #[arg(long)]
    pub spacing_min: f64,
    /// Largest inner-pair spacing, um
    #[arg(long)]
    pub spacing_max: f64,
    /// Number of spacings
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Probe polarisation: perp or par
    #[arg(long, default_value = "perp")]
    pub pol: Polarization,
    /// Thermal position spread per ion, um (enables the smeared column)
    #[arg(long)]
    pub thermal_sigma_um: Option<f64>,
    /// Monte Carlo samples per spacing for the smeared column
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Ion mass, u
    #[arg(long, default_value_t = SR88_ION_MASS_U)]
    pub mass_u: f64,
    /// Oscillator strength A0, MHz
    #[arg(long, default_value_t = SR_OSCILLATOR_STRENGTH_MHZ)]
    pub oscillator_strength_mhz: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Flat `key = value` config file (keys listed below)
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct AllanArgs {
    /// Series CSV `time_s,setting,center_mhz,photons` as written by simulate
    #[arg(long)]
    pub input: PathBuf,
    /// Dwell time per setting, s
    #[arg(long, default_value_t = 30.0)]
    pub dwell_s: f64,
    /// Setting analysed (the reference of a difference)
    #[arg(long, default_value_t = 0)]
    pub setting_a: usize,
    /// Second setting; with it the per-cycle difference b - a is analysed
    #[arg(long)]
    pub setting_b: Option<usize>,
    /// Comma-separated averaging times, s (default: octaves of the cycle period)
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV `spacing_um,shift_khz,sigma_khz`
    #[arg(long)]
    pub input: PathBuf,
    /// Number of ions
    #[arg(long, default_value_t = 2)]
    pub ions: usize,
    /// Probe polarisation: perp or par
    #[arg(long, default_value = "perp")]
    pub pol: Polarization,
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Chain(a) => run_chain(&cli, a),
        Command::Shift(a) => run_shift(&cli, a),
        Command::Curve(a) => run_curve(&cli, a),
        Command::Simulate(a) => run_simulate(&cli, a),
        Command::Allan(a) => run_allan(&cli, a),
        Command::Fit(a) => run_fit(&cli, a),
    }
}

fn finish(cli: &Cli, emitter: Emitter) -> Result<()> {
    let out_dir = cli.out_dir.clone();
    let manifest = emitter.finish()?;
    if let (false, Some(dir)) = (cli.quiet, out_dir) {
        eprintln!("wrote {} to {}", manifest.files.join(", "), dir.display());
    }
    Ok(())
}

fn run_chain(cli: &Cli, a: &ChainArgs) -> Result<()> {
    let cfg = TrapConfig::new(a.ions, a.axial_freq_mhz, a.mass_u, a.charge)?;
    let chain = build_chain(&cfg)?;
    let mut csv = String::from("index,t_m,r_m_um\n");
    for (i, (t, r)) in chain.normalized_positions().iter().zip(chain.positions_um()).enumerate() {
        csv.push_str(&format!("{},{},{}\n", i + 1, t, r));
    }
    let config = json!({"ions": a.ions, "axial_freq_mhz": a.axial_freq_mhz, "mass_u": a.mass_u, "charge": a.charge});
    let mut e = Emitter::new(cli.out_dir.clone(), RunManifest::start("chain", None, config));
    e.emit("chain.csv", &csv)?;
    finish(cli, e)
}

fn run_shift(cli: &Cli, a: &ShiftArgs) -> Result<()> {
    let tr = Transition::strontium().with_oscillator_strength(a.oscillator_strength_mhz)?;
    let m = two_ion_manifold(a.separation_um, &tr, a.near_field)?;
    let body = json!({
        "separation_um": a.separation_um,
        "near_field": a.near_field,
        "delta_mhz": m.delta_mhz,
        "delta_khz": m.delta_mhz * 1e3,
        "eigenvalues_mhz": m.eigenvalues,
        "observed_shift_perp_khz": m.observed_shift(Polarization::PerpendicularToAxis) * 1e3,
        "observed_shift_par_khz": m.observed_shift(Polarization::ParallelToAxis) * 1e3,
    });
    let config = json!({"separation_um": a.separation_um, "near_field": a.near_field,
                        "oscillator_strength_mhz": a.oscillator_strength_mhz});
    let mut e = Emitter::new(cli.out_dir.clone(), RunManifest::start("shift", None, config));
    e.emit("shift.json", &(serde_json::to_string_pretty(&body).expect("json") + "\n"))?;
    finish(cli, e)
}

fn run_curve(cli: &Cli, a: &CurveArgs) -> Result<()> {
    let tr = Transition::strontium().with_oscillator_strength(a.oscillator_strength_mhz)?;
    // the axial frequency is solved per spacing; 1 MHz is a placeholder
    let template = TrapConfig::new(a.ions, 1.0, a.mass_u, 1)?;
    let seed = cli.seed.unwrap_or(1);
    let thermal = a
        .thermal_sigma_um
        .map(|s| ThermalModel::uniform(a.ions, s, a.samples))
        .transpose()?;
    let curve = shift_curve(
        &template,
        (a.spacing_min, a.spacing_max),
        a.points,
        &tr,
        a.pol,
        thermal.as_ref().map(|t| (t, seed)),
    )?;
    let mut csv = String::from("spacing_um,shift_khz,smeared_shift_khz,stderr_khz\n");
    for i in 0..curve.len() {
        let (sm, se) = match (&curve.smeared_shift_khz, &curve.smeared_stderr_khz) {
            (Some(m), Some(s)) => (m[i].to_string(), s[i].to_string()),
            _ => (String::new(), String::new()),
        };
        csv.push_str(&format!("{},{},{},{}\n", curve.spacings_um[i], curve.predicted_shift_khz[i], sm, se));
    }
    let config = json!({"ions": a.ions, "spacing_min": a.spacing_min, "spacing_max": a.spacing_max,
                        "points": a.points, "pol": a.pol.to_string(), "thermal_sigma_um": a.thermal_sigma_um,
                        "samples": a.samples, "mass_u": a.mass_u,
                        "oscillator_strength_mhz": a.oscillator_strength_mhz});
    let used_seed = thermal.as_ref().map(|_| seed);
    let mut e = Emitter::new(cli.out_dir.clone(), RunManifest::start("curve", used_seed, config));
    e.emit("curve.csv", &csv)?;
    finish(cli, e)
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingSummary {
    pub index: usize,
    pub spacing_um: f64,
    pub theory_shift_khz: f64,
    pub relative_khz: f64,
    pub stderr_khz: f64,
    pub anchored_khz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub setting_a: usize,
    pub setting_b: usize,
    pub pairs: usize,
    pub mean_khz: f64,
    pub stderr_khz: f64,
    pub std_mhz: f64,
    pub shot_noise_sigma_mhz: f64,
    pub jarque_bera: f64,
    pub normal_at_1pct: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AllanSummary {
    pub sample_interval_s: f64,
    pub taus_s: Vec<f64>,
    pub absolute_mhz: Vec<f64>,
    /// Per-cycle difference between the first two settings.
    pub relative_mhz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub records: usize,
    pub skipped: usize,
    pub expected_photons_per_measurement: f64,
    pub mean_photons_per_measurement: f64,
    pub settings: Vec<SettingSummary>,
    pub pair: Option<PairSummary>,
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    pub allan: AllanSummary,
}

/// Output of [`simulate`]: the raw series plus everything derived from it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: MeasurementSeries,
    pub summary: SimulationSummary,
    pub histogram: Option<Histogram>,
}

/// Injected line centre for every setting: the observable shift of the
/// configured chain at that spacing, MHz.
pub fn true_centers(cfg: &SimulateConfig) -> Result<Vec<f64>> {
    let tr = Transition::strontium().with_oscillator_strength(cfg.oscillator_strength_mhz)?;
    let g = unit_strength_design(cfg.ions, &cfg.experiment.distance_settings_um, &tr, cfg.polarization)?;
    Ok(g.iter().map(|v| v * cfg.oscillator_strength_mhz).collect())
}

pub fn simulate(cfg: &SimulateConfig) -> Result<Simulation> {
    cfg.validate()?;
    let truth = true_centers(cfg)?;
    let series = simulate_series(&truth, &cfg.experiment)?;
    let settings = series.setting_count;

    let profile = relative_profile(&series)?;
    let theory_khz: Vec<f64> = truth.iter().map(|t| t * 1e3).collect();
    let relative_khz: Vec<f64> = profile.relative_mhz.iter().map(|v| v * 1e3).collect();
    let anchored = anchor_mean(&relative_khz, &theory_khz)?;
    let setting_rows: Vec<SettingSummary> = (0..settings)
        .map(|i| SettingSummary {
            index: i,
            spacing_um: cfg.experiment.distance_settings_um[i],
            theory_shift_khz: theory_khz[i],
            relative_khz: relative_khz[i],
            stderr_khz: profile.stderr_mhz[i] * 1e3,
            anchored_khz: anchored[i],
        })
        .collect();

    let (pair, histogram) = if settings >= 2 {
        let rel = relative_shift(&series, 0, 1)?;
        let jb = jarque_bera(&rel.differences_mhz)?;
        let pair = PairSummary {
            setting_a: 0,
            setting_b: 1,
            pairs: rel.differences_mhz.len(),
            mean_khz: rel.mean_mhz * 1e3,
            stderr_khz: rel.stderr_mhz * 1e3,
            std_mhz: rel.std_mhz,
            shot_noise_sigma_mhz: shot_noise_sigma(
                cfg.experiment.linewidth_mhz,
                cfg.experiment.expected_photons_per_measurement(),
            ),
            jarque_bera: jb,
            normal_at_1pct: jb <= JARQUE_BERA_CRITICAL_1PCT,
        };
        (Some(pair), Some(rel.histogram))
    } else {
        (None, None)
    };

    let (fit, fit_error) = if settings >= 3 {
        let points: Vec<FitPoint> = setting_rows
            .iter()
            .map(|s| FitPoint {
                spacing_um: s.spacing_um,
                shift_khz: s.anchored_khz,
                sigma_khz: s.stderr_khz,
            })
            .collect();
        let tr = Transition::strontium();
        match fit_oscillator_strength(&points, cfg.ions, &tr, cfg.polarization) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("fewer than 3 distance settings".to_string()))
    };

    let interval = series.cycle_period_s();
    let absolute = series.block_means(0)?;
    let taus = octave_taus(interval, series.cycles);
    let allan = if taus.is_empty() || series.cycles < 4 {
        AllanSummary {
            sample_interval_s: interval,
            taus_s: Vec::new(),
            absolute_mhz: Vec::new(),
            relative_mhz: None,
        }
    } else {
        let relative = if settings >= 2 {
            Some(allan_deviation(&series.block_mean_differences(0, 1)?, interval, &taus)?)
        } else {
            None
        };
        AllanSummary {
            sample_interval_s: interval,
            absolute_mhz: allan_deviation(&absolute, interval, &taus)?,
            taus_s: taus,
            relative_mhz: relative,
        }
    };

    let photons: u64 = series.records.iter().map(|r| r.photons).sum();
    let summary = SimulationSummary {
        seed: cfg.experiment.seed,
        records: series.records.len(),
        skipped: series.skipped,
        expected_photons_per_measurement: cfg.experiment.expected_photons_per_measurement(),
        mean_photons_per_measurement: photons as f64 / series.records.len().max(1) as f64,
        settings: setting_rows,
        pair,
        fit,
        fit_error,
        allan,
    };
    Ok(Simulation {
        series,
        summary,
        histogram,
    })
}

fn run_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut cfg = parse_config(&a.config)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    let echo = serde_json::to_value(cfg.echo()).expect("echo serialises");
    let manifest = RunManifest::start("simulate", Some(cfg.experiment.seed), echo);
    let sim = simulate(&cfg)?;

    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut e = Emitter::new(Some(out_dir.clone()), manifest);
    e.emit("series.csv", &series_csv(&sim.series))?;
    let allan = &sim.summary.allan;
    let curve = allan.relative_mhz.as_ref().unwrap_or(&allan.absolute_mhz);
    e.emit("allan.csv", &allan_csv(&allan.taus_s, curve))?;
    let hist = sim.histogram.as_ref().map(histogram_csv).unwrap_or_else(|| "bin_center_mhz,count\n".into());
    e.emit("histogram.csv", &hist)?;
    let summary = json!({
        "summary": sim.summary,
        "manifest": e.closing_manifest(&["summary.json"]),
    });
    e.emit("summary.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    let manifest = e.finish()?;
    if !cli.quiet {
        if let Some(p) = &sim.summary.pair {
            eprintln!(
                "{} pairs: difference {:.2} +- {:.2} kHz, std {:.4} MHz",
                p.pairs, p.mean_khz, p.stderr_khz, p.std_mhz
            );
        }
        eprintln!("wrote {} to {}", manifest.files.join(", "), out_dir.display());
    }
    Ok(())
}

/// Per-cycle block means of every setting from series CSV rows
/// `(time, setting, centre)`. Blocks are maximal runs of one setting.
pub fn block_means_from_rows(rows: &[(f64, usize, f64)]) -> Result<Vec<Vec<f64>>> {
    let settings = rows.iter().map(|r| r.1).max().map(|m| m + 1).unwrap_or(0);
    if settings == 0 {
        return Err(Error::Domain("series is empty".into()));
    }
    let mut runs: Vec<(usize, f64, usize)> = Vec::new();
    for &(_, s, c) in rows {
        match runs.last_mut() {
            Some(last) if last.0 == s => {
                last.1 += c;
                last.2 += 1;
            }
            _ => runs.push((s, c, 1)),
        }
    }
    let mut means = vec![Vec::new(); settings];
    for (i, (s, sum, n)) in runs.iter().enumerate() {
        if *s != i % settings {
            return Err(Error::Domain(format!(
                "block {i} has setting {s}, expected {} in a cyclic schedule",
                i % settings
            )));
        }
        means[*s].push(sum / *n as f64);
    }
    let cycles = means.iter().map(Vec::len).min().unwrap_or(0);
    for m in &mut means {
        m.truncate(cycles);
    }
    Ok(means)
}

fn run_allan(cli: &Cli, a: &AllanArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(io_err(&a.input))?;
    let rows = read_csv_rows(&text, &["time_s", "setting", "center_mhz", "photons"])?;
    let mut parsed = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let bad = |what: &str| Error::Parse {
            line: i + 2,
            message: format!("invalid {what}"),
        };
        parsed.push((
            r[0].parse::<f64>().map_err(|_| bad("time_s"))?,
            r[1].parse::<usize>().map_err(|_| bad("setting"))?,
            r[2].parse::<f64>().map_err(|_| bad("center_mhz"))?,
        ));
    }
    let means = block_means_from_rows(&parsed)?;
    if !(a.dwell_s > 0.0) {
        return Err(invalid("dwell_s", "must be positive"));
    }
    let interval = a.dwell_s * means.len() as f64;
    let pick = |s: usize| {
        means
            .get(s)
            .ok_or_else(|| Error::Domain(format!("setting {s} not present in series")))
    };
    let values: Vec<f64> = match a.setting_b {
        Some(b) => pick(a.setting_a)?.iter().zip(pick(b)?).map(|(x, y)| y - x).collect(),
        None => pick(a.setting_a)?.clone(),
    };
    let taus = a.taus.clone().unwrap_or_else(|| octave_taus(interval, values.len()));
    let sigma = allan_deviation(&values, interval, &taus)?;
    let config = json!({"input": a.input, "dwell_s": a.dwell_s, "setting_a": a.setting_a,
                        "setting_b": a.setting_b, "taus": taus});
    let mut e = Emitter::new(cli.out_dir.clone(), RunManifest::start("allan", None, config));
    e.emit("allan.csv", &allan_csv(&taus, &sigma))?;
    finish(cli, e)
}

fn run_fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(io_err(&a.input))?;
    let rows = read_csv_rows(&text, &["spacing_um", "shift_khz", "sigma_khz"])?;
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let num = |j: usize| {
            r[j].parse::<f64>().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("invalid number `{}`", r[j]),
            })
        };
        points.push(FitPoint {
            spacing_um: num(0)?,
            shift_khz: num(1)?,
            sigma_khz: num(2)?,
        });
    }
    let fit = fit_oscillator_strength(&points, a.ions, &Transition::strontium(), a.pol)?;
    let body = json!({
        "oscillator_strength_mhz": fit.oscillator_strength_mhz,
        "stderr_mhz": fit.stderr_mhz,
        "chi_squared": fit.chi_squared,
        "degrees_of_freedom": fit.degrees_of_freedom,
        "rms_residual_khz": fit.rms_residual_khz,
        "points": points.len(),
    });
    let config = json!({"input": a.input, "ions": a.ions, "pol": a.pol.to_string()});
    let mut e = Emitter::new(cli.out_dir.clone(), RunManifest::start("fit", None, config));
    e.emit("fit.json", &(serde_json::to_string_pretty(&body).expect("json") + "\n"))?;
    finish(cli, e)
}
