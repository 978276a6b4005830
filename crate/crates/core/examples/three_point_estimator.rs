//! Line-centre estimation from three probe detunings: exact versus
//! first-order estimator, and the Poisson noise at a given photon budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use coopshift::spectro::{
    estimate_center_approx, estimate_center_exact, predicted_sigma, shot_noise_sigma, Lorentzian, ThreePointSample,
};

fn main() -> coopshift::Result<()> {
    let g = 24.63;
    println!("noiseless, guess 0, width {g} MHz");
    for f0 in [0.0, 0.5, 2.0, 5.0] {
        let s = ThreePointSample::from_model(&Lorentzian::new(f0, g, 1.0)?, 0.0, g)?;
        println!(
            "  true {f0:4.1} MHz: exact {:.12}, approx {:.6}",
            estimate_center_exact(&s)?,
            estimate_center_approx(&s)?
        );
    }

    // 662 expected photons split 10 : 45 : 45 over centre, +G/2, -G/2
    let n = 662.0;
    let w0 = 0.1;
    let model = Lorentzian::new(0.0, g, 1.0)?;
    let det = ThreePointSample::detunings_for(0.0, g);
    let share = [w0, (1.0 - w0) / 2.0, (1.0 - w0) / 2.0];
    let total: f64 = det.iter().zip(share).map(|(d, w)| model.flux(*d) * w).sum();
    let exposures = share.map(|w| w * n / total);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 20_000;
    let mut est = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut counts = [0u64; 3];
        for i in 0..3 {
            let mean = model.flux(det[i]) * exposures[i];
            counts[i] = Poisson::new(mean).unwrap().sample(&mut rng) as u64;
        }
        if let Ok(f) = ThreePointSample::from_counts(0.0, g, counts, exposures, 0.0).and_then(|s| estimate_center_exact(&s)) {
            est.push(f);
        }
    }
    let m = est.iter().sum::<f64>() / est.len() as f64;
    let sd = (est.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (est.len() - 1) as f64).sqrt();
    println!("\n{n} photons: Monte Carlo std {sd:.4} MHz");
    println!("  delta-method prediction {:.4} MHz", predicted_sigma(g, 0.0, w0, n));
    println!("  shot-noise bound G/(2 sqrt n) {:.4} MHz", shot_noise_sigma(g, n));
    Ok(())
}
