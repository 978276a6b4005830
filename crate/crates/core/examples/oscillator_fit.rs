//! Fit the oscillator strength to relative shifts measured at 12 spacings,
//! after anchoring their unknown common offset to the model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use coopshift::collective::{linspace, unit_strength_design};
use coopshift::dipole::{Polarization, Transition};
use coopshift::experiment::{anchor_mean, fit_oscillator_strength, FitPoint};

fn main() -> coopshift::Result<()> {
    let tr = Transition::strontium();
    let pol = Polarization::PerpendicularToAxis;
    let spacings = linspace(4.6, 5.8, 12);
    let theory: Vec<f64> = unit_strength_design(2, &spacings, &tr, pol)?
        .iter()
        .map(|g| tr.oscillator_strength_mhz() * 1e3 * g)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = Normal::new(0.0, 2.2).unwrap();
    let measured: Vec<f64> = theory.iter().map(|t| t + 25.0 + noise.sample(&mut rng)).collect();
    let anchored = anchor_mean(&measured, &theory)?;
    let points: Vec<FitPoint> = spacings
        .iter()
        .zip(&anchored)
        .map(|(r, y)| FitPoint {
            spacing_um: *r,
            shift_khz: *y,
            sigma_khz: 2.2,
        })
        .collect();
    let fit = fit_oscillator_strength(&points, 2, &tr, pol)?;
    for (p, m) in points.iter().zip(&fit.model_khz) {
        println!("{:.3} um: {:+7.2} kHz, model {:+7.2}", p.spacing_um, p.shift_khz, m);
    }
    println!(
        "A0 = {:.2} +- {:.2} MHz (injected {}), chi2 {:.1} / {} dof, rms residual {:.2} kHz",
        fit.oscillator_strength_mhz,
        fit.stderr_mhz,
        tr.oscillator_strength_mhz(),
        fit.chi_squared,
        fit.degrees_of_freedom,
        fit.rms_residual_khz
    );
    Ok(())
}
