//! Interlaced measurement of two trap settings whose line centres differ by
//! 50.6 kHz, with the default drift and photon budget.

use coopshift::experiment::{jarque_bera, relative_shift, simulate_series, ExperimentConfig};
use coopshift::spectro::shot_noise_sigma;

fn main() -> coopshift::Result<()> {
    let cfg = ExperimentConfig {
        cycles: 200,
        seed: 11,
        ..ExperimentConfig::default()
    };
    println!(
        "{} settings, {} measurements per {} s dwell, {:.0} expected photons per measurement",
        cfg.setting_count(),
        cfg.measurements_per_dwell,
        cfg.dwell_s,
        cfg.expected_photons_per_measurement()
    );
    let series = simulate_series(&[0.0, 0.0506], &cfg)?;
    let rel = relative_shift(&series, 0, 1)?;
    println!(
        "{} differences ({} skipped): {:.1} +- {:.1} kHz",
        rel.differences_mhz.len(),
        series.skipped,
        rel.mean_mhz * 1e3,
        rel.stderr_mhz * 1e3
    );
    println!(
        "difference std {:.3} MHz; single-setting bound G/(2 sqrt n) {:.3} MHz",
        rel.std_mhz,
        shot_noise_sigma(cfg.linewidth_mhz, cfg.expected_photons_per_measurement())
    );
    println!("Jarque-Bera {:.2}", jarque_bera(&rel.differences_mhz)?);
    let peak = rel.histogram.counts.iter().max().copied().unwrap_or(1);
    for (c, n) in rel.histogram.bin_centers.iter().zip(&rel.histogram.counts) {
        println!("{c:+7.3} {}", "#".repeat(n * 60 / peak));
    }
    Ok(())
}
