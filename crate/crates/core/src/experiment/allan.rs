use crate::error::{invalid, Error, Result};

/// Non-overlapping Allan deviation of equally spaced samples `values`
/// (interval `sample_interval_s`) at each averaging time in `taus_s`.
///
/// Each `tau` must be a whole multiple `m` of the sample interval and leave
/// at least two complete windows.
pub fn allan_deviation(values: &[f64], sample_interval_s: f64, taus_s: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 samples, got {}", values.len())));
    }
    if !(sample_interval_s > 0.0 && sample_interval_s.is_finite()) {
        return Err(invalid("sample_interval", "must be positive"));
    }
    taus_s
        .iter()
        .map(|&tau| {
            let ratio = tau / sample_interval_s;
            let m = ratio.round();
            if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
                return Err(invalid(
                    "tau",
                    format!("{tau} s is not a multiple of the {sample_interval_s} s sample interval"),
                ));
            }
            let m = m as usize;
            let windows = values.len() / m;
            if windows < 2 {
                return Err(Error::Domain(format!(
                    "tau {tau} s needs {} samples, series has {}",
                    2 * m,
                    values.len()
                )));
            }
            let means: Vec<f64> = values
                .chunks_exact(m)
                .take(windows)
                .map(|w| w.iter().sum::<f64>() / m as f64)
                .collect();
            let sum: f64 = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            Ok((0.5 * sum / (windows - 1) as f64).sqrt())
        })
        .collect()
}

/// Distinct integer multiples of the sample interval, roughly log-spaced
/// from `lo` to `hi` (inclusive), `per_decade` per factor of ten.
pub fn log_spaced_multiples(sample_interval_s: f64, lo_s: f64, hi_s: f64, per_decade: usize) -> Vec<f64> {
    let lo = (lo_s / sample_interval_s).max(1.0);
    let hi = hi_s / sample_interval_s;
    if !(hi >= lo) || per_decade == 0 {
        return Vec::new();
    }
    let steps = ((hi / lo).log10() * per_decade as f64).ceil().max(0.0) as usize;
    let mut out: Vec<usize> = (0..=steps)
        .map(|i| {
            let x = lo * (hi / lo).powf(if steps == 0 { 0.0 } else { i as f64 / steps as f64 });
            x.round() as usize
        })
        .collect();
    out.dedup();
    out.into_iter().map(|m| m as f64 * sample_interval_s).collect()
}

/// `tau = 2^j` sample intervals for every `j` leaving at least two windows.
pub fn octave_taus(sample_interval_s: f64, samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while samples / m >= 2 {
        out.push(m as f64 * sample_interval_s);
        m *= 2;
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("slope needs at least two matched points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(n: usize, s: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, s).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn hand_computed_example() {
        // window means at m = 2: 1.5, 3.5, 5.5 -> diffs 2, 2
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let s = allan_deviation(&v, 1.0, &[1.0, 2.0]).unwrap();
        assert!((s[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s[1] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_series_is_zero() {
        assert_eq!(allan_deviation(&[4.2; 10], 2.0, &[2.0, 4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn domain_errors() {
        assert!(allan_deviation(&[1.0, 2.0, 3.0], 1.0, &[1.0]).is_err());
        assert!(allan_deviation(&[0.0; 10], 1.0, &[1.5]).is_err());
        assert!(allan_deviation(&[0.0; 10], 1.0, &[6.0]).is_err());
        assert!(allan_deviation(&[0.0; 10], 1.0, &[5.0]).is_ok());
    }

    #[test]
    fn white_noise_law() {
        let s = 0.3;
        let v = white(200_000, s, 1);
        let taus = log_spaced_multiples(0.5, 0.5, 500.0, 4);
        let sigma = allan_deviation(&v, 0.5, &taus).unwrap();
        for (tau, sig) in taus.iter().zip(&sigma).take(8) {
            let expect = s / (tau / 0.5).sqrt();
            assert!((sig / expect - 1.0).abs() < 0.1, "tau {tau}: {sig} vs {expect}");
        }
        let slope = loglog_slope(&taus, &sigma).unwrap();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn multiples_are_distinct_integers() {
        let t = log_spaced_multiples(60.0, 600.0, 6000.0, 10);
        assert_eq!(t.first(), Some(&600.0));
        assert_eq!(t.last(), Some(&6000.0));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.iter().all(|x| (x / 60.0).fract() == 0.0));
    }

    #[test]
    fn octaves_fit_series() {
        assert_eq!(octave_taus(60.0, 9), vec![60.0, 120.0, 240.0]);
        assert!(allan_deviation(&[0.0; 9], 60.0, &octave_taus(60.0, 9)).is_ok());
        assert!(octave_taus(1.0, 1).is_empty());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    }
}
