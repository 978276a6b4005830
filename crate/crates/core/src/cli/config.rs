//! Flat `key = value` configuration for `simulate`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use crate::constants::SR_OSCILLATOR_STRENGTH_MHZ;
use crate::dipole::Polarization;
use crate::error::{invalid, io_err, Error, Result};
use crate::experiment::{ExperimentConfig, REFERENCE_PHOTONS_PER_MEASUREMENT};

/// Every accepted key with a one-line description. Defaults are listed in
/// [`CONFIG_HELP`].
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("ions", "ions in the chain"),
    ("polarization", "probe polarisation, perp or par"),
    ("oscillator_strength_mhz", "A0 used for the injected shifts"),
    ("distance_settings_um", "comma-separated inner-pair spacings, one per setting"),
    ("dwell_s", "time per setting before switching"),
    ("probe_pulse_us", "probe pulse length (a cooling pulse of equal length precedes it)"),
    ("photons_per_pulse_mean", "photons scattered per probe pulse on resonance"),
    ("detection_efficiency", "overall detection efficiency; derived from photons_per_measurement if unset"),
    ("photons_per_measurement", "expected detected photons per measurement per setting"),
    ("measurements_per_dwell", "three-point measurements per dwell block"),
    ("center_dwell_fraction", "share of pulses at the guessed centre"),
    ("linewidth_mhz", "true linewidth"),
    ("guess_center_mhz", "guessed line centre"),
    ("guess_width_mhz", "guessed linewidth; defaults to linewidth_mhz"),
    ("background_per_pulse", "background counts per probe pulse"),
    ("drift_linear_khz_per_hour", "linear drift rate"),
    ("drift_random_walk_khz_per_sqrt_s", "random-walk drift strength"),
    ("drift_flicker_floor_khz", "flicker drift Allan floor"),
    ("drift_flicker_min_s", "shortest flicker correlation time"),
    ("drift_flicker_max_s", "longest flicker correlation time"),
    ("seed", "RNG seed"),
    ("cycles", "passes over all settings"),
];

pub const CONFIG_HELP: &str = "\
Config file: one `key = value` per line, `#` starts a comment.

Keys (default):
  ions                              ions in the chain (2)
  polarization                      perp | par (perp)
  oscillator_strength_mhz           A0 for the injected shifts (20.05)
  distance_settings_um              comma-separated spacings (4.96, 5.06)
  dwell_s                           time per setting (30)
  probe_pulse_us                    probe pulse length (8)
  photons_per_pulse_mean            scattered photons per pulse on resonance (9)
  detection_efficiency              unset: derived from photons_per_measurement
  photons_per_measurement           detected photons per measurement (662)
  measurements_per_dwell            measurements per dwell block (25)
  center_dwell_fraction             share of pulses at the guessed centre (0.1)
  linewidth_mhz                     true linewidth (24.63)
  guess_center_mhz                  guessed centre (0)
  guess_width_mhz                   guessed width (linewidth_mhz)
  background_per_pulse              background counts per pulse (0)
  drift_linear_khz_per_hour         linear drift (0)
  drift_random_walk_khz_per_sqrt_s  random-walk drift (0)
  drift_flicker_floor_khz           flicker Allan floor (50)
  drift_flicker_min_s               shortest flicker time constant (300)
  drift_flicker_max_s               longest flicker time constant (1e6)
  seed                              RNG seed (1); --seed overrides
  cycles                            passes over all settings (200)";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub ions: usize,
    pub polarization: Polarization,
    pub oscillator_strength_mhz: f64,
    pub experiment: ExperimentConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            ions: 2,
            polarization: Polarization::PerpendicularToAxis,
            oscillator_strength_mhz: SR_OSCILLATOR_STRENGTH_MHZ,
            experiment: ExperimentConfig::default(),
        }
    }
}

/// `(line number, key, value)` for every non-blank, non-comment line.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                message: "missing key".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{key}`: cannot parse `{value}`"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_value(line, key, v.trim()))
        .collect()
}

impl FromStr for SimulateConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = SimulateConfig::default();
        let mut guess_width = None;
        let mut efficiency = None;
        let mut budget = None;
        for (line, key, value) in parse_key_values(text)? {
            let (k, v) = (key.as_str(), value.as_str());
            let e = &mut cfg.experiment;
            match k {
                "ions" => cfg.ions = parse_value(line, k, v)?,
                "polarization" => {
                    cfg.polarization = v.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("`polarization`: expected perp or par, got `{v}`"),
                    })?
                }
                "oscillator_strength_mhz" => cfg.oscillator_strength_mhz = parse_value(line, k, v)?,
                "distance_settings_um" => e.distance_settings_um = parse_list(line, k, v)?,
                "dwell_s" => e.dwell_s = parse_value(line, k, v)?,
                "probe_pulse_us" => e.probe_pulse_us = parse_value(line, k, v)?,
                "photons_per_pulse_mean" => e.photons_per_pulse_mean = parse_value(line, k, v)?,
                "detection_efficiency" => efficiency = Some((line, parse_value::<f64>(line, k, v)?)),
                "photons_per_measurement" => budget = Some(parse_value::<f64>(line, k, v)?),
                "measurements_per_dwell" => e.measurements_per_dwell = parse_value(line, k, v)?,
                "center_dwell_fraction" => e.center_dwell_fraction = parse_value(line, k, v)?,
                "linewidth_mhz" => e.linewidth_mhz = parse_value(line, k, v)?,
                "guess_center_mhz" => e.guess_center_mhz = parse_value(line, k, v)?,
                "guess_width_mhz" => guess_width = Some(parse_value(line, k, v)?),
                "background_per_pulse" => e.background_per_pulse = parse_value(line, k, v)?,
                "drift_linear_khz_per_hour" => e.drift.linear_rate_khz_per_hour = parse_value(line, k, v)?,
                "drift_random_walk_khz_per_sqrt_s" => e.drift.random_walk_khz_per_sqrt_s = parse_value(line, k, v)?,
                "drift_flicker_floor_khz" => e.drift.flicker_floor_khz = parse_value(line, k, v)?,
                "drift_flicker_min_s" => e.drift.flicker_min_s = parse_value(line, k, v)?,
                "drift_flicker_max_s" => e.drift.flicker_max_s = parse_value(line, k, v)?,
                "seed" => e.seed = parse_value(line, k, v)?,
                "cycles" => e.cycles = parse_value(line, k, v)?,
                _ => return Err(Error::UnknownKey { line, key }),
            }
        }
        cfg.experiment.guess_width_mhz = guess_width.unwrap_or(cfg.experiment.linewidth_mhz);
        match (efficiency, budget) {
            (Some((line, _)), Some(_)) => {
                return Err(Error::Parse {
                    line,
                    message: "set either `detection_efficiency` or `photons_per_measurement`, not both".into(),
                })
            }
            (Some((_, eff)), None) => cfg.experiment.detection_efficiency = eff,
            (None, b) => {
                let photons = b.unwrap_or(REFERENCE_PHOTONS_PER_MEASUREMENT);
                if !(photons > 0.0 && photons.is_finite()) {
                    return Err(invalid("photons_per_measurement", "must be positive"));
                }
                cfg.experiment = cfg.experiment.with_photon_budget(photons);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ions < 2 {
            return Err(invalid("ions", "must be at least 2"));
        }
        if !(self.oscillator_strength_mhz > 0.0 && self.oscillator_strength_mhz.is_finite()) {
            return Err(invalid("oscillator_strength_mhz", "must be positive"));
        }
        self.experiment.validate()
    }

    /// Every key with its effective value, in the config file syntax.
    pub fn echo(&self) -> BTreeMap<&'static str, String> {
        let e = &self.experiment;
        let list = e
            .distance_settings_um
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        let mut m = BTreeMap::new();
        m.insert("ions", self.ions.to_string());
        m.insert("polarization", self.polarization.to_string());
        m.insert("oscillator_strength_mhz", self.oscillator_strength_mhz.to_string());
        m.insert("distance_settings_um", list);
        m.insert("dwell_s", e.dwell_s.to_string());
        m.insert("probe_pulse_us", e.probe_pulse_us.to_string());
        m.insert("photons_per_pulse_mean", e.photons_per_pulse_mean.to_string());
        m.insert("detection_efficiency", e.detection_efficiency.to_string());
        m.insert("measurements_per_dwell", e.measurements_per_dwell.to_string());
        m.insert("center_dwell_fraction", e.center_dwell_fraction.to_string());
        m.insert("linewidth_mhz", e.linewidth_mhz.to_string());
        m.insert("guess_center_mhz", e.guess_center_mhz.to_string());
        m.insert("guess_width_mhz", e.guess_width_mhz.to_string());
        m.insert("background_per_pulse", e.background_per_pulse.to_string());
        m.insert("drift_linear_khz_per_hour", e.drift.linear_rate_khz_per_hour.to_string());
        m.insert("drift_random_walk_khz_per_sqrt_s", e.drift.random_walk_khz_per_sqrt_s.to_string());
        m.insert("drift_flicker_floor_khz", e.drift.flicker_floor_khz.to_string());
        m.insert("drift_flicker_min_s", e.drift.flicker_min_s.to_string());
        m.insert("drift_flicker_max_s", e.drift.flicker_max_s.to_string());
        m.insert("seed", e.seed.to_string());
        m.insert("cycles", e.cycles.to_string());
        m
    }

    /// The echo rendered as a config file.
    pub fn to_config_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn parse_config(path: &Path) -> Result<SimulateConfig> {
    std::fs::read_to_string(path).map_err(io_err(path))?.parse()
}
