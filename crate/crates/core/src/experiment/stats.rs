use serde::Serialize;

use crate::error::{Error, Result};

/// 99th percentile of chi-squared with 2 degrees of freedom, `-2 ln 0.01`.
pub const JARQUE_BERA_CRITICAL_1PCT: f64 = 9.210_340_371_976_184;

/// Sample moments; `skewness` and `excess_kurtosis` use the biased
/// (population) central moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.len() < 4 {
            return Err(Error::Domain("need at least 4 samples for moments".into()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        if m2 <= 0.0 {
            return Err(Error::Domain("samples have zero spread".into()));
        }
        Ok(Self {
            count: xs.len(),
            mean,
            std: (m2 * n / (n - 1.0)).sqrt(),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        })
    }
}

/// Jarque-Bera statistic `n/6 (S^2 + K^2/4)`. Normality is rejected at the
/// 1% level when it exceeds [`JARQUE_BERA_CRITICAL_1PCT`].
pub fn jarque_bera(xs: &[f64]) -> Result<f64> {
    let m = Moments::of(xs)?;
    Ok(m.count as f64 / 6.0 * (m.skewness.powi(2) + m.excess_kurtosis.powi(2) / 4.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bin_centers: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the data, width `2 IQR / n^(1/3)`.
    pub fn freedman_diaconis(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("histogram needs finite samples".into()));
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let fd = 2.0 * iqr / (xs.len() as f64).cbrt();
        let bins = if hi > lo && fd > 0.0 {
            (((hi - lo) / fd).ceil() as usize).clamp(1, 10_000)
        } else {
            1
        };
        Ok(Self::with_bins(&sorted, lo, hi, bins))
    }

    fn with_bins(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let (lo, width) = if hi > lo { (lo, (hi - lo) / bins as f64) } else { (lo - 0.5, 1.0) };
        let mut counts = vec![0usize; bins];
        for x in xs {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let bin_centers = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
        Self {
            bin_width: width,
            bin_centers,
            counts,
        }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, Normal};

    #[test]
    fn critical_value() {
        // chi2(2) survival function is exp(-x/2)
        assert!(((-JARQUE_BERA_CRITICAL_1PCT / 2.0).exp() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn moments_of_small_set() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
        // population m4 / m2^2 = 2.5625 / 1.5625
        assert!((m.excess_kurtosis - (2.5625 / 1.5625 - 3.0)).abs() < 1e-12);
        assert!(Moments::of(&[1.0; 5]).is_err());
    }

    #[test]
    fn normality_accepts_gaussian_rejects_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g: Vec<f64> = (0..5000).map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
        assert!(jarque_bera(&g).unwrap() < JARQUE_BERA_CRITICAL_1PCT);
        let e: Vec<f64> = (0..5000).map(|_| Exp::new(1.0).unwrap().sample(&mut rng)).collect();
        assert!(jarque_bera(&e).unwrap() > 100.0);
    }

    #[test]
    fn histogram_counts_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..1000).map(|_| Normal::new(2.0, 0.5).unwrap().sample(&mut rng)).collect();
        let h = Histogram::freedman_diaconis(&xs).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 1000);
        assert_eq!(h.counts.len(), h.bin_centers.len());
        // IQR of N(0, 0.5) is 0.674; width ~ 2 * 0.674 / 10
        assert!((h.bin_width / 0.1349 - 1.0).abs() < 0.3, "width {}", h.bin_width);
    }

    #[test]
    fn degenerate_histogram() {
        let h = Histogram::freedman_diaconis(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(h.counts, vec![3]);
        assert_eq!(h.bin_centers, vec![3.0]);
        assert!(Histogram::freedman_diaconis(&[]).is_err());
        assert!(Histogram::freedman_diaconis(&[f64::NAN]).is_err());
    }
}
