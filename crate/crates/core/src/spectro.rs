//! Lorentzian line model and the three-point line-centre estimator.
//!
//! Fluxes are sampled at the guessed centre `f'` and at `f' +- G'/2`; for a
//! Lorentzian probed with `G' = G` the exact estimator
//!
//! ```text
//! f = f' + (G'/2) (L+ - L-) / (2 (L+ + L-) - 4 L+ L- / L0)
//! ```
//!
//! inverts the sampling identically.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default relative threshold for the exact estimator denominator.
pub const DEFAULT_DENOMINATOR_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    /// Line centre, MHz.
    pub center: f64,
    /// FWHM, MHz.
    pub width: f64,
    /// Peak flux, counts per pulse.
    pub amplitude: f64,
}

impl Lorentzian {
    pub fn new(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", "must be positive"));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be positive"));
        }
        if !center.is_finite() {
            return Err(invalid("center", "must be finite"));
        }
        Ok(Self { center, width, amplitude })
    }

    pub fn flux(&self, detuning: f64) -> f64 {
        lorentzian_flux(self, detuning)
    }
}

pub fn lorentzian_flux(model: &Lorentzian, detuning: f64) -> f64 {
    let x = (detuning - model.center) / (0.5 * model.width);
    model.amplitude / (1.0 + x * x)
}

/// Fluxes at `guess_center` and `guess_center +- guess_width / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePointSample {
    pub guess_center: f64,
    pub guess_width: f64,
    pub flux_center: f64,
    pub flux_plus: f64,
    pub flux_minus: f64,
}

impl ThreePointSample {
    pub fn new(guess_center: f64, guess_width: f64, flux_center: f64, flux_plus: f64, flux_minus: f64) -> Result<Self> {
        if !(guess_width > 0.0 && guess_width.is_finite()) {
            return Err(invalid("guess_width", "must be positive"));
        }
        for (name, v) in [("flux_center", flux_center), ("flux_plus", flux_plus), ("flux_minus", flux_minus)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSample(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        Ok(Self {
            guess_center,
            guess_width,
            flux_center,
            flux_plus,
            flux_minus,
        })
    }

    /// Noiseless sample of `model`.
    pub fn from_model(model: &Lorentzian, guess_center: f64, guess_width: f64) -> Result<Self> {
        let [d0, dp, dm] = Self::detunings_for(guess_center, guess_width);
        Self::new(guess_center, guess_width, model.flux(d0), model.flux(dp), model.flux(dm))
    }

    /// Fluxes from photon counts: `(count - background * exposure) / exposure`
    /// at centre, plus and minus. Exposures are in pulses.
    pub fn from_counts(
        guess_center: f64,
        guess_width: f64,
        counts: [u64; 3],
        exposures: [f64; 3],
        background_per_pulse: f64,
    ) -> Result<Self> {
        let mut flux = [0.0; 3];
        for i in 0..3 {
            if !(exposures[i] > 0.0) {
                return Err(invalid("exposure", "must be positive"));
            }
            flux[i] = (counts[i] as f64 - background_per_pulse * exposures[i]) / exposures[i];
        }
        Self::new(guess_center, guess_width, flux[0], flux[1], flux[2])
    }

    /// Probe detunings: `[f', f' + G'/2, f' - G'/2]`.
    pub fn detunings(&self) -> [f64; 3] {
        Self::detunings_for(self.guess_center, self.guess_width)
    }

    pub fn detunings_for(guess_center: f64, guess_width: f64) -> [f64; 3] {
        [guess_center, guess_center + 0.5 * guess_width, guess_center - 0.5 * guess_width]
    }

    fn require_center_flux(&self) -> Result<()> {
        if self.flux_center <= 0.0 {
            return Err(Error::InvalidSample("centre flux is zero".into()));
        }
        Ok(())
    }
}

pub fn estimate_center_exact(sample: &ThreePointSample) -> Result<f64> {
    estimate_center_exact_with(sample, DEFAULT_DENOMINATOR_EPSILON)
}

/// Exact estimator with a custom ill-conditioning threshold, relative to
/// the largest of the three fluxes. No fallback to the approximate form.
pub fn estimate_center_exact_with(sample: &ThreePointSample, relative_epsilon: f64) -> Result<f64> {
    sample.require_center_flux()?;
    let (l0, lp, lm) = (sample.flux_center, sample.flux_plus, sample.flux_minus);
    let denominator = 2.0 * (lp + lm) - 4.0 * lp * lm / l0;
    let threshold = relative_epsilon * l0.max(lp).max(lm);
    if !(denominator.abs() > threshold) {
        return Err(Error::IllConditioned { denominator, threshold });
    }
    Ok(sample.guess_center + 0.5 * sample.guess_width * (lp - lm) / denominator)
}

/// First-order form `f' + (G'/2) (L+ - L-) / L0`.
pub fn estimate_center_approx(sample: &ThreePointSample) -> Result<f64> {
    sample.require_center_flux()?;
    Ok(sample.guess_center + 0.5 * sample.guess_width * (sample.flux_plus - sample.flux_minus) / sample.flux_center)
}

/// Shot-noise limit `G / (2 sqrt N)` for `N` detected photons, MHz.
pub fn shot_noise_sigma(linewidth: f64, total_photons: f64) -> f64 {
    linewidth / (2.0 * total_photons.sqrt())
}

/// Delta-method standard deviation of the exact estimator for a line of
/// width `width` offset by `offset` from the guess (`G' = G`), with exposure
/// split `center_fraction : (1 - center_fraction)/2 : (1 - center_fraction)/2`
/// and `photons` expected detections in total.
pub fn predicted_sigma(width: f64, offset: f64, center_fraction: f64, photons: f64) -> f64 {
    let model = Lorentzian {
        center: offset,
        width,
        amplitude: 1.0,
    };
    let side = 0.5 * (1.0 - center_fraction);
    let exposure = [center_fraction, side, side];
    let flux = ThreePointSample::detunings_for(0.0, width).map(|d| model.flux(d));
    let per_exposure: f64 = flux.iter().zip(&exposure).map(|(f, e)| f * e).sum();

    // analytic partial derivatives of f' + (G/2) (L+ - L-) / D
    let (l0, lp, lm) = (flux[0], flux[1], flux[2]);
    let d = 2.0 * (lp + lm) - 4.0 * lp * lm / l0;
    let num = lp - lm;
    let h = 0.5 * width;
    let grad = [
        -h * num * (4.0 * lp * lm / (l0 * l0)) / (d * d),
        h * (d - num * (2.0 - 4.0 * lm / l0)) / (d * d),
        h * (-d - num * (2.0 - 4.0 * lp / l0)) / (d * d),
    ];
    // Var(flux_i) = flux_i / exposure_i per unit total exposure
    let var: f64 = (0..3).map(|i| grad[i] * grad[i] * flux[i] / exposure[i]).sum();
    (var * per_exposure / photons).sqrt()
}

/// Photons needed to reach `sigma` (inverse of [`shot_noise_sigma`]).
pub fn photons_for_sigma(linewidth: f64, sigma: f64) -> f64 {
    (linewidth / (2.0 * sigma)).powi(2)
}
