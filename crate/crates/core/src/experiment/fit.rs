use serde::{Deserialize, Serialize};

use crate::collective::unit_strength_design;
use crate::dipole::{Polarization, Transition};
use crate::error::{invalid, Error, Result};

/// Shift `measured` by the constant that makes its mean equal the mean of
/// `theory`. Relative data carry no absolute offset; a parallel-polarisation
/// theory curve is identically zero, which anchors the data mean to zero.
pub fn anchor_mean(measured: &[f64], theory: &[f64]) -> Result<Vec<f64>> {
    if measured.len() != theory.len() {
        return Err(invalid(
            "theory",
            format!("length {} differs from measured length {}", theory.len(), measured.len()),
        ));
    }
    if measured.is_empty() {
        return Ok(Vec::new());
    }
    let n = measured.len() as f64;
    let offset = theory.iter().sum::<f64>() / n - measured.iter().sum::<f64>() / n;
    Ok(measured.iter().map(|m| m + offset).collect())
}

/// One relative shift measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub spacing_um: f64,
    pub shift_khz: f64,
    pub sigma_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub oscillator_strength_mhz: f64,
    pub stderr_mhz: f64,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    /// RMS of data minus the re-anchored best-fit model, kHz.
    pub rms_residual_khz: f64,
    /// Best-fit model re-anchored to the data mean, kHz.
    pub model_khz: Vec<f64>,
}

/// Weighted least squares for the oscillator strength `A0`.
///
/// The model is the observable shift of an `ion_count` chain, which is
/// linear in `A0`: `A0 g(r)`. Because the data only fix shifts up to a
/// common offset, the model is re-anchored to the data mean for every trial
/// `A0`, leaving
///
/// ```text
/// chi2(A0) = sum_i w_i (y_i - ybar - A0 (g_i - gbar))^2,   w_i = 1 / sigma_i^2
/// ```
///
/// with plain means `ybar`, `gbar`. The minimum and its curvature are closed
/// form.
pub fn fit_oscillator_strength(
    points: &[FitPoint],
    ion_count: usize,
    transition: &Transition,
    pol: Polarization,
) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(invalid("points", "need at least 3 data points"));
    }
    for p in points {
        if !(p.sigma_khz > 0.0 && p.sigma_khz.is_finite()) {
            return Err(invalid("sigma_khz", "uncertainties must be positive"));
        }
        if !p.shift_khz.is_finite() {
            return Err(invalid("shift_khz", "must be finite"));
        }
        if !(p.spacing_um > 0.0 && p.spacing_um.is_finite()) {
            return Err(invalid("spacing_um", "must be positive"));
        }
    }

    let spacings: Vec<f64> = points.iter().map(|p| p.spacing_um).collect();
    let g: Vec<f64> = unit_strength_design(ion_count, &spacings, transition, pol)?
        .into_iter()
        .map(|v| v * 1e3)
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.shift_khz).collect();
    let w: Vec<f64> = points.iter().map(|p| p.sigma_khz.powi(-2)).collect();
    let n = points.len() as f64;
    let gbar = g.iter().sum::<f64>() / n;
    let ybar = y.iter().sum::<f64>() / n;

    let sgg: f64 = (0..g.len()).map(|i| w[i] * (g[i] - gbar).powi(2)).sum();
    let sgy: f64 = (0..g.len()).map(|i| w[i] * (g[i] - gbar) * (y[i] - ybar)).sum();

    // far-field envelope of the unit-strength shift, kHz per MHz
    let k = transition.wavenumber();
    let envelope: f64 = spacings.iter().map(|r| 0.25e3 / (k * r)).sum::<f64>() / n;
    let wbar = w.iter().sum::<f64>() / n;
    if !(sgg > 1e-12 * envelope * envelope * wbar * n) {
        return Err(Error::Unidentifiable(
            "the model shift does not vary across the chosen spacings".into(),
        ));
    }

    let a0 = sgy / sgg;
    let model: Vec<f64> = g.iter().map(|gi| ybar + a0 * (gi - gbar)).collect();
    let chi2: f64 = (0..g.len()).map(|i| w[i] * (y[i] - model[i]).powi(2)).sum();
    let rms = ((0..g.len()).map(|i| (y[i] - model[i]).powi(2)).sum::<f64>() / n).sqrt();
    Ok(FitResult {
        oscillator_strength_mhz: a0,
        // chi2'' = 2 sgg, sigma^2 = 2 / chi2''
        stderr_mhz: sgg.sqrt().recip(),
        chi_squared: chi2,
        degrees_of_freedom: points.len() - 2,
        rms_residual_khz: rms,
        model_khz: model,
    })
}
