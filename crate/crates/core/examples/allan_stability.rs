//! Allan deviation of the absolute line centre (drift dominated) and of the
//! interlaced difference (shot-noise limited).

use coopshift::experiment::{allan_deviation, log_spaced_multiples, loglog_slope, simulate_series, ExperimentConfig};

fn main() -> coopshift::Result<()> {
    let cfg = ExperimentConfig {
        cycles: 5000,
        seed: 5,
        ..ExperimentConfig::default()
    };
    let series = simulate_series(&[0.0, 0.0506], &cfg)?;
    let interval = series.cycle_period_s();
    let taus = log_spaced_multiples(interval, interval, 20_000.0, 4);
    let absolute = allan_deviation(&series.block_means(0)?, interval, &taus)?;
    let relative = allan_deviation(&series.block_mean_differences(0, 1)?, interval, &taus)?;
    println!("{:>8} {:>14} {:>16}", "tau_s", "absolute_khz", "difference_khz");
    for i in 0..taus.len() {
        println!("{:8.0} {:14.2} {:16.2}", taus[i], absolute[i] * 1e3, relative[i] * 1e3);
    }
    println!("difference slope {:.3}", loglog_slope(&taus, &relative)?);
    Ok(())
}
