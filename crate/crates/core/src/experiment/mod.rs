//! Monte Carlo model of an interlaced three-point line-centre measurement.
//!
//! The experiment cycles through `S` distance settings, dwelling
//! `dwell_s` on each. Every dwell block is split into
//! `measurements_per_dwell` measurements; each measurement counts photons at
//! the guessed centre and at `+- G'/2` and feeds them to the exact
//! three-point estimator. A slow frequency drift common to all settings
//! moves the true line centre.

mod allan;
mod fit;
mod stats;

pub use allan::{allan_deviation, log_spaced_multiples, loglog_slope, octave_taus};
pub use fit::{anchor_mean, fit_oscillator_strength, FitPoint, FitResult};
pub use stats::{jarque_bera, Histogram, Moments, JARQUE_BERA_CRITICAL_1PCT};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collective::mean_and_variance;
use crate::constants::SR_EFFECTIVE_LINEWIDTH_MHZ;
use crate::error::{invalid, Error, Result};
use crate::spectro::{estimate_center_exact, Lorentzian, ThreePointSample};

/// Slow drift of the line centre, shared by all settings.
///
/// The drift is a linear ramp plus a Gaussian random walk plus a flicker
/// component. The flicker part is a sum of Ornstein-Uhlenbeck processes with
/// correlation times spaced by `sqrt(10)` between `flicker_min_s` and
/// `flicker_max_s`; its Allan deviation is flat at about
/// `flicker_floor_khz` for averaging times inside that band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub linear_rate_khz_per_hour: f64,
    pub random_walk_khz_per_sqrt_s: f64,
    pub flicker_floor_khz: f64,
    pub flicker_min_s: f64,
    pub flicker_max_s: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            linear_rate_khz_per_hour: 0.0,
            random_walk_khz_per_sqrt_s: 0.0,
            flicker_floor_khz: 50.0,
            flicker_min_s: 300.0,
            flicker_max_s: 1e6,
        }
    }
}

impl DriftModel {
    pub fn none() -> Self {
        Self {
            flicker_floor_khz: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("drift_linear_khz_per_hour", self.linear_rate_khz_per_hour),
            ("drift_random_walk_khz_per_sqrt_s", self.random_walk_khz_per_sqrt_s),
            ("drift_flicker_floor_khz", self.flicker_floor_khz),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be finite and nonnegative"));
            }
        }
        if self.flicker_floor_khz > 0.0 {
            if !(self.flicker_min_s > 0.0 && self.flicker_min_s.is_finite()) {
                return Err(invalid("drift_flicker_min_s", "must be positive"));
            }
            if !(self.flicker_max_s >= self.flicker_min_s && self.flicker_max_s.is_finite()) {
                return Err(invalid("drift_flicker_max_s", "must be at least drift_flicker_min_s"));
            }
        }
        Ok(())
    }

    /// `(correlation time s, stationary std kHz)` of each flicker component.
    pub fn flicker_components(&self) -> Vec<(f64, f64)> {
        if self.flicker_floor_khz <= 0.0 {
            return Vec::new();
        }
        let ratio = 10f64.sqrt();
        // Allan variance of a single OU component integrated over log(tau)
        // is s^2 * 2 ln 2; matching a flat floor F^2 per ln(ratio) fixes s.
        let s = self.flicker_floor_khz * (ratio.ln() / (2.0 * 2f64.ln())).sqrt();
        let mut out = Vec::new();
        let mut t = self.flicker_min_s;
        while t <= self.flicker_max_s * (1.0 + 1e-12) {
            out.push((t, s));
            t *= ratio;
        }
        out
    }

    /// Drift (MHz) at each of the nondecreasing `times_s`, drawn sequentially from `rng`.
    pub fn sample_path<R: Rng>(&self, times_s: &[f64], rng: &mut R) -> Vec<f64> {
        let comps = self.flicker_components();
        let mut ou: Vec<f64> = comps
            .iter()
            .map(|(_, s)| s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut walk = 0.0;
        let mut last = 0.0;
        let mut out = Vec::with_capacity(times_s.len());
        for &t in times_s {
            let dt = (t - last).max(0.0);
            if self.random_walk_khz_per_sqrt_s > 0.0 {
                walk += self.random_walk_khz_per_sqrt_s * dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            for (x, (tau, s)) in ou.iter_mut().zip(&comps) {
                let a = (-dt / tau).exp();
                *x = a * *x + s * (1.0 - a * a).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            let khz = self.linear_rate_khz_per_hour * t / 3600.0 + walk + ou.iter().sum::<f64>();
            out.push(khz * 1e-3);
            last = t;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Inner-pair spacing of each interlaced setting, um.
    pub distance_settings_um: Vec<f64>,
    /// Time spent on one setting before switching, s.
    pub dwell_s: f64,
    /// Probe pulse length, us. Every probe pulse is preceded by a cooling
    /// pulse of the same length.
    pub probe_pulse_us: f64,
    /// Photons scattered by the chain per probe pulse on resonance.
    pub photons_per_pulse_mean: f64,
    pub detection_efficiency: f64,
    pub measurements_per_dwell: usize,
    /// Share of each measurement's pulses spent at the guessed centre; the
    /// rest is split evenly between `+- G'/2`.
    pub center_dwell_fraction: f64,
    /// True (effective) linewidth, MHz.
    pub linewidth_mhz: f64,
    pub guess_center_mhz: f64,
    pub guess_width_mhz: f64,
    /// Background counts per probe pulse, added to the simulated counts and
    /// subtracted before estimation.
    pub background_per_pulse: f64,
    pub drift: DriftModel,
    pub seed: u64,
    pub cycles: usize,
}

/// Detected photons per measurement per setting in the reference run.
pub const REFERENCE_PHOTONS_PER_MEASUREMENT: f64 = 662.0;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let cfg = Self {
            distance_settings_um: vec![4.96, 5.06],
            dwell_s: 30.0,
            probe_pulse_us: 8.0,
            photons_per_pulse_mean: 9.0,
            detection_efficiency: 1.0,
            measurements_per_dwell: 25,
            center_dwell_fraction: 0.1,
            linewidth_mhz: SR_EFFECTIVE_LINEWIDTH_MHZ,
            guess_center_mhz: 0.0,
            guess_width_mhz: SR_EFFECTIVE_LINEWIDTH_MHZ,
            background_per_pulse: 0.0,
            drift: DriftModel::default(),
            seed: 1,
            cycles: 200,
        };
        cfg.with_photon_budget(REFERENCE_PHOTONS_PER_MEASUREMENT)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distance_settings_um.is_empty() {
            return Err(invalid("distance_settings_um", "must list at least one spacing"));
        }
        if self.distance_settings_um.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(invalid("distance_settings_um", "spacings must be positive"));
        }
        for (field, v) in [
            ("dwell_s", self.dwell_s),
            ("probe_pulse_us", self.probe_pulse_us),
            ("photons_per_pulse_mean", self.photons_per_pulse_mean),
            ("linewidth_mhz", self.linewidth_mhz),
            ("guess_width_mhz", self.guess_width_mhz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be positive"));
            }
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(invalid("detection_efficiency", "must lie in (0, 1]"));
        }
        if !(self.center_dwell_fraction > 0.0 && self.center_dwell_fraction < 1.0) {
            return Err(invalid("center_dwell_fraction", "must lie in (0, 1)"));
        }
        if !(self.background_per_pulse >= 0.0 && self.background_per_pulse.is_finite()) {
            return Err(invalid("background_per_pulse", "must be nonnegative"));
        }
        if !self.guess_center_mhz.is_finite() {
            return Err(invalid("guess_center_mhz", "must be finite"));
        }
        if self.measurements_per_dwell < 1 {
            return Err(invalid("measurements_per_dwell", "must be at least 1"));
        }
        if self.cycles < 1 {
            return Err(invalid("cycles", "must be at least 1"));
        }
        if self.pulses_per_measurement() < 3.0 {
            return Err(invalid("measurements_per_dwell", "leaves fewer than 3 probe pulses per measurement"));
        }
        self.drift.validate()
    }

    pub fn setting_count(&self) -> usize {
        self.distance_settings_um.len()
    }

    pub fn measurement_interval_s(&self) -> f64 {
        self.dwell_s / self.measurements_per_dwell as f64
    }

    /// One full pass over all settings, s.
    pub fn cycle_period_s(&self) -> f64 {
        self.dwell_s * self.setting_count() as f64
    }

    pub fn pulses_per_measurement(&self) -> f64 {
        self.measurement_interval_s() / (2.0 * self.probe_pulse_us * 1e-6)
    }

    /// Pulses at centre, `+G'/2` and `-G'/2`.
    pub fn exposures(&self) -> [f64; 3] {
        let p = self.pulses_per_measurement();
        let side = 0.5 * (1.0 - self.center_dwell_fraction) * p;
        [self.center_dwell_fraction * p, side, side]
    }

    /// Detected photons per pulse at line centre.
    pub fn detected_per_pulse(&self) -> f64 {
        self.photons_per_pulse_mean * self.detection_efficiency
    }

    /// Expected signal photons per measurement with the guess on the line.
    pub fn expected_photons_per_measurement(&self) -> f64 {
        let line = Lorentzian {
            center: self.guess_center_mhz,
            width: self.linewidth_mhz,
            amplitude: self.detected_per_pulse(),
        };
        ThreePointSample::detunings_for(self.guess_center_mhz, self.guess_width_mhz)
            .iter()
            .zip(self.exposures())
            .map(|(d, e)| line.flux(*d) * e)
            .sum()
    }

    /// Copy with `detection_efficiency` chosen so that a measurement collects
    /// `photons` on average.
    pub fn with_photon_budget(mut self, photons: f64) -> Self {
        self.detection_efficiency = 1.0;
        let at_unity = self.expected_photons_per_measurement();
        self.detection_efficiency = photons / at_unity;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Midpoint of the measurement, s from the start of the run.
    pub time_s: f64,
    pub setting: usize,
    /// Dwell block index (`cycle * settings + setting`).
    pub block: usize,
    /// Position of the measurement inside its block.
    pub slot: usize,
    pub center_mhz: f64,
    pub photons: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementSeries {
    pub records: Vec<MeasurementRecord>,
    pub setting_count: usize,
    pub measurements_per_dwell: usize,
    pub cycles: usize,
    pub dwell_s: f64,
    /// Measurements dropped because the estimator rejected the counts.
    pub skipped: usize,
}

impl MeasurementSeries {
    pub fn cycle_period_s(&self) -> f64 {
        self.dwell_s * self.setting_count as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.windows(2).any(|w| w[1].time_s < w[0].time_s) {
            return Err(Error::Domain("record times must be nondecreasing".into()));
        }
        if let Some(r) = self.records.iter().find(|r| r.setting >= self.setting_count) {
            return Err(Error::Domain(format!("setting index {} out of range", r.setting)));
        }
        Ok(())
    }

    /// Mean estimate per dwell block of `setting`, one value per cycle.
    pub fn block_means(&self, setting: usize) -> Result<Vec<f64>> {
        self.require_setting(setting)?;
        let mut sums = vec![(0.0, 0usize); self.cycles];
        for r in self.records.iter().filter(|r| r.setting == setting) {
            let c = r.block / self.setting_count;
            sums[c].0 += r.center_mhz;
            sums[c].1 += 1;
        }
        sums.iter()
            .enumerate()
            .map(|(c, (s, n))| {
                if *n == 0 {
                    Err(Error::Domain(format!("cycle {c} has no valid measurement for setting {setting}")))
                } else {
                    Ok(s / *n as f64)
                }
            })
            .collect()
    }

    /// Per-cycle difference of block means, `setting_b - setting_a`.
    pub fn block_mean_differences(&self, setting_a: usize, setting_b: usize) -> Result<Vec<f64>> {
        let a = self.block_means(setting_a)?;
        let b = self.block_means(setting_b)?;
        Ok(a.iter().zip(&b).map(|(x, y)| y - x).collect())
    }

    fn require_setting(&self, setting: usize) -> Result<()> {
        if setting >= self.setting_count || !self.records.iter().any(|r| r.setting == setting) {
            return Err(Error::Domain(format!("setting {setting} has no records")));
        }
        Ok(())
    }
}

/// Run the virtual experiment. `true_centers_mhz[s]` is the undrifted line
/// centre while setting `s` is active.
///
/// The drift path is drawn first from ChaCha stream 0 of `cfg.seed`; dwell
/// block `b` then draws its photon counts from stream `b + 1`, so blocks are
/// simulated in parallel without changing the result.
pub fn simulate_series(true_centers_mhz: &[f64], cfg: &ExperimentConfig) -> Result<MeasurementSeries> {
    cfg.validate()?;
    let settings = cfg.setting_count();
    if true_centers_mhz.len() != settings {
        return Err(invalid(
            "true_centers",
            format!("expected one centre per setting ({settings}), got {}", true_centers_mhz.len()),
        ));
    }
    if true_centers_mhz.iter().any(|c| !c.is_finite()) {
        return Err(invalid("true_centers", "must be finite"));
    }

    let k = cfg.measurements_per_dwell;
    let blocks = cfg.cycles * settings;
    let tm = cfg.measurement_interval_s();
    let times: Vec<f64> = (0..blocks * k)
        .map(|i| (i / k) as f64 * cfg.dwell_s + ((i % k) as f64 + 0.5) * tm)
        .collect();
    let mut drift_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    drift_rng.set_stream(0);
    let drift = cfg.drift.sample_path(&times, &mut drift_rng);

    let exposures = cfg.exposures();
    let detunings = ThreePointSample::detunings_for(cfg.guess_center_mhz, cfg.guess_width_mhz);
    let amplitude = cfg.detected_per_pulse();

    let per_block: Vec<(Vec<MeasurementRecord>, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64 + 1);
            let setting = b % settings;
            let mut records = Vec::with_capacity(k);
            let mut skipped = 0;
            for slot in 0..k {
                let i = b * k + slot;
                let line = Lorentzian {
                    center: true_centers_mhz[setting] + drift[i],
                    width: cfg.linewidth_mhz,
                    amplitude,
                };
                let mut counts = [0u64; 3];
                for j in 0..3 {
                    let mean = exposures[j] * (line.flux(detunings[j]) + cfg.background_per_pulse);
                    counts[j] = poisson(mean, &mut rng);
                }
                let estimate = ThreePointSample::from_counts(
                    cfg.guess_center_mhz,
                    cfg.guess_width_mhz,
                    counts,
                    exposures,
                    cfg.background_per_pulse,
                )
                .and_then(|s| estimate_center_exact(&s));
                match estimate {
                    Ok(center_mhz) => records.push(MeasurementRecord {
                        time_s: times[i],
                        setting,
                        block: b,
                        slot,
                        center_mhz,
                        photons: counts.iter().sum(),
                    }),
                    Err(_) => skipped += 1,
                }
            }
            (records, skipped)
        })
        .collect();

    let skipped = per_block.iter().map(|(_, s)| s).sum();
    Ok(MeasurementSeries {
        records: per_block.into_iter().flat_map(|(r, _)| r).collect(),
        setting_count: settings,
        measurements_per_dwell: k,
        cycles: cfg.cycles,
        dwell_s: cfg.dwell_s,
        skipped,
    })
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Paired differences between two settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeShift {
    pub mean_mhz: f64,
    pub stderr_mhz: f64,
    pub std_mhz: f64,
    /// `setting_b - setting_a` per pair, MHz.
    pub differences_mhz: Vec<f64>,
    pub histogram: Histogram,
}

/// Difference statistics of `setting_b - setting_a`.
///
/// Each dwell block of `setting_a` is paired with the next block of
/// `setting_b`; inside a block pair, measurement slot `i` is matched with
/// slot `i`. A block of `setting_a` left without a partner at the end of the
/// run is dropped, as is any slot whose partner was skipped.
pub fn relative_shift(series: &MeasurementSeries, setting_a: usize, setting_b: usize) -> Result<RelativeShift> {
    if setting_a == setting_b {
        return Err(Error::Domain("relative shift needs two different settings".into()));
    }
    for s in [setting_a, setting_b] {
        if series.records.iter().filter(|r| r.setting == s).count() < 2 {
            return Err(Error::Domain(format!("setting {s} has fewer than 2 records")));
        }
    }

    let k = series.measurements_per_dwell;
    let blocks = series.cycles * series.setting_count;
    let mut grid: Vec<Option<f64>> = vec![None; blocks * k];
    for r in &series.records {
        if r.block < blocks && r.slot < k {
            grid[r.block * k + r.slot] = Some(r.center_mhz);
        }
    }

    let gap = (setting_b + series.setting_count - setting_a) % series.setting_count;
    let mut differences = Vec::new();
    for a_block in (setting_a..blocks).step_by(series.setting_count) {
        let b_block = a_block + gap;
        if b_block >= blocks {
            break;
        }
        for slot in 0..k {
            if let (Some(a), Some(b)) = (grid[a_block * k + slot], grid[b_block * k + slot]) {
                differences.push(b - a);
            }
        }
    }
    if differences.len() < 2 {
        return Err(Error::Domain("fewer than 2 paired measurements".into()));
    }

    let (mean, var) = mean_and_variance(&differences);
    let histogram = Histogram::freedman_diaconis(&differences)?;
    Ok(RelativeShift {
        mean_mhz: mean,
        stderr_mhz: (var / differences.len() as f64).sqrt(),
        std_mhz: var.sqrt(),
        differences_mhz: differences,
        histogram,
    })
}

/// Relative centre of every setting: per cycle, each block mean minus the
/// mean over all settings of that cycle, averaged over cycles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeProfile {
    pub relative_mhz: Vec<f64>,
    pub stderr_mhz: Vec<f64>,
}

pub fn relative_profile(series: &MeasurementSeries) -> Result<RelativeProfile> {
    let means = (0..series.setting_count)
        .map(|s| series.block_means(s))
        .collect::<Result<Vec<_>>>()?;
    let cycles = series.cycles;
    let mut relative = Vec::with_capacity(series.setting_count);
    let mut stderr = Vec::with_capacity(series.setting_count);
    for s in 0..series.setting_count {
        let per_cycle: Vec<f64> = (0..cycles)
            .map(|c| {
                let common = means.iter().map(|m| m[c]).sum::<f64>() / series.setting_count as f64;
                means[s][c] - common
            })
            .collect();
        let (m, v) = mean_and_variance(&per_cycle);
        relative.push(m);
        stderr.push(if cycles > 1 { (v / cycles as f64).sqrt() } else { f64::NAN });
    }
    Ok(RelativeProfile {
        relative_mhz: relative,
        stderr_mhz: stderr,
    })
}
