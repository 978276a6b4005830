//! Collective line shift of an M-ion chain.
//!
//! A weak uniform probe prepares the symmetric single excitation
//! `|psi> = M^{-1/2} sum_i |g..e_i..g>`; because the linewidth is far larger
//! than any eigenmode splitting, the apparent line centre moves by the
//! expectation value `delta_M = <psi|V|psi> = (1/M) sum_{m != n} delta(r_m - r_n)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{axial_frequency_for_length_scale, equilibrium_positions, inner_pair, IonChain, TrapConfig};
use crate::dipole::{far_field_shift, polarization_factor, Polarization, Transition};
use crate::error::{invalid, Error, Result};

/// `(1/M) sum_{m != n} delta(|r_m - r_n|)` over ordered pairs, MHz. No polarisation factor.
pub fn pair_sum_shift(positions_um: &[f64], transition: &Transition) -> f64 {
    let m = positions_um.len();
    let mut sum = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            sum += far_field_shift((positions_um[i] - positions_um[j]).abs(), transition);
        }
    }
    2.0 * sum / m as f64
}

fn require_pairs(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!("collective shift needs at least 2 ions, got {m}")));
    }
    Ok(())
}

/// Observable line-centre shift of the chain, MHz.
pub fn collective_shift(chain: &IonChain, transition: &Transition, pol: Polarization) -> Result<f64> {
    require_pairs(chain.len())?;
    Ok(polarization_factor(pol) * pair_sum_shift(chain.positions_um(), transition))
}

/// Eigenmodes of the far-field coupling matrix `J_mn = delta(|r_m - r_n|)`.
#[derive(Debug, Clone)]
pub struct EigenmodeSpectrum {
    /// Ascending, MHz.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub modes: DMatrix<f64>,
    /// `|<mode_k|symmetric>|^2`, sums to 1.
    pub symmetric_weights: Vec<f64>,
}

impl EigenmodeSpectrum {
    /// Overlap-weighted eigenvalue sum; equals the direct pair sum.
    pub fn weighted_shift(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.symmetric_weights)
            .map(|(e, w)| e * w)
            .sum()
    }
}

pub fn coupling_matrix(positions_um: &[f64], transition: &Transition) -> DMatrix<f64> {
    let m = positions_um.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            far_field_shift((positions_um[i] - positions_um[j]).abs(), transition)
        }
    })
}

pub fn eigenmode_spectrum(chain: &IonChain, transition: &Transition) -> Result<EigenmodeSpectrum> {
    let m = chain.len();
    require_pairs(m)?;
    let eig = SymmetricEigen::new(coupling_matrix(chain.positions_um(), transition));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let modes = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let amp = 1.0 / (m as f64).sqrt();
    let symmetric_weights = (0..m)
        .map(|k| {
            let overlap: f64 = modes.column(k).iter().map(|v| v * amp).sum();
            overlap * overlap
        })
        .collect();
    Ok(EigenmodeSpectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        modes,
        symmetric_weights,
    })
}

/// Independent Gaussian position jitter per ion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalModel {
    position_stddev_um: Vec<f64>,
    sample_count: usize,
}

impl ThermalModel {
    pub fn new(position_stddev_um: Vec<f64>, sample_count: usize) -> Result<Self> {
        if position_stddev_um.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(invalid("position_stddev", "must be finite and nonnegative"));
        }
        if sample_count < 1 {
            return Err(invalid("sample_count", "must be at least 1"));
        }
        Ok(Self {
            position_stddev_um,
            sample_count,
        })
    }

    /// Same width for every ion.
    pub fn uniform(ion_count: usize, sigma_um: f64, sample_count: usize) -> Result<Self> {
        Self::new(vec![sigma_um; ion_count], sample_count)
    }

    pub fn position_stddev_um(&self) -> &[f64] {
        &self.position_stddev_um
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmearedShift {
    pub mean_mhz: f64,
    pub stderr_mhz: f64,
}

/// Monte Carlo average of the observable shift over thermally jittered positions.
///
/// Draw `i` uses ChaCha stream `i` of `seed`, so the result does not depend
/// on thread scheduling.
pub fn smeared_collective_shift(
    chain: &IonChain,
    transition: &Transition,
    pol: Polarization,
    thermal: &ThermalModel,
    seed: u64,
) -> Result<SmearedShift> {
    require_pairs(chain.len())?;
    if thermal.position_stddev_um.len() != chain.len() {
        return Err(invalid(
            "position_stddev",
            format!("expected {} widths, got {}", chain.len(), thermal.position_stddev_um.len()),
        ));
    }
    let factor = polarization_factor(pol);
    let base = chain.positions_um();
    let normals: Vec<Normal<f64>> = thermal
        .position_stddev_um
        .iter()
        .map(|s| Normal::new(0.0, *s).expect("validated width"))
        .collect();

    let draws: Vec<f64> = (0..thermal.sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let jittered: Vec<f64> = base
                .iter()
                .zip(&normals)
                .map(|(x, n)| x + n.sample(&mut rng))
                .collect();
            factor * pair_sum_shift(&jittered, transition)
        })
        .collect();

    let (mean, var) = mean_and_variance(&draws);
    Ok(SmearedShift {
        mean_mhz: mean,
        stderr_mhz: (var / draws.len() as f64).sqrt(),
    })
}

/// Welford mean and unbiased variance; exact for constant input.
pub(crate) fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = if xs.len() > 1 { m2 / (xs.len() - 1) as f64 } else { 0.0 };
    (mean, var)
}

/// Predicted observable shift versus inner-pair spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCurve {
    pub spacings_um: Vec<f64>,
    /// Axial COM frequency that produces each spacing, MHz.
    pub axial_frequencies_mhz: Vec<f64>,
    pub predicted_shift_khz: Vec<f64>,
    pub smeared_shift_khz: Option<Vec<f64>>,
    pub smeared_stderr_khz: Option<Vec<f64>>,
}

impl ShiftCurve {
    pub fn len(&self) -> usize {
        self.spacings_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings_um.is_empty()
    }
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect()
}

fn validate_range(range: (f64, f64), points: usize) -> Result<()> {
    if !(range.0 > 0.0 && range.1 > range.0 && range.1.is_finite()) {
        return Err(invalid("spacing_range", "need 0 < min < max"));
    }
    if points < 2 {
        return Err(invalid("points", "must be at least 2"));
    }
    Ok(())
}

/// Per-point sub-seed for the thermal Monte Carlo.
fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Shift curve for the harmonic-trap crystal described by `trap_template`
/// (its axial frequency is ignored: it is solved for at each spacing).
pub fn shift_curve(
    trap_template: &TrapConfig,
    spacing_range_um: (f64, f64),
    points: usize,
    transition: &Transition,
    pol: Polarization,
    thermal: Option<(&ThermalModel, u64)>,
) -> Result<ShiftCurve> {
    trap_template.validate()?;
    require_pairs(trap_template.ion_count)?;
    validate_range(spacing_range_um, points)?;

    let t = equilibrium_positions(trap_template.ion_count)?;
    let (a, b) = inner_pair(t.len()).expect("at least two ions");
    let inner = t[b] - t[a];

    let spacings = linspace(spacing_range_um.0, spacing_range_um.1, points);
    let mut freqs = Vec::with_capacity(points);
    let mut shifts = Vec::with_capacity(points);
    let mut smeared = Vec::new();
    let mut stderr = Vec::new();
    for (i, s) in spacings.iter().enumerate() {
        let p = s / inner;
        let chain = IonChain::from_normalized(t.clone(), p)?;
        freqs.push(axial_frequency_for_length_scale(p, trap_template.ion_mass_u, trap_template.ion_charge));
        shifts.push(collective_shift(&chain, transition, pol)? * 1e3);
        if let Some((model, seed)) = thermal {
            let sm = smeared_collective_shift(&chain, transition, pol, model, point_seed(seed, i))?;
            smeared.push(sm.mean_mhz * 1e3);
            stderr.push(sm.stderr_mhz * 1e3);
        }
    }
    Ok(ShiftCurve {
        spacings_um: spacings,
        axial_frequencies_mhz: freqs,
        predicted_shift_khz: shifts,
        smeared_shift_khz: thermal.map(|_| smeared),
        smeared_stderr_khz: thermal.map(|_| stderr),
    })
}

/// Reference curve for an equidistant chain with the same ion number.
/// Not realisable in a harmonic trap for more than three ions.
pub fn equidistant_shift_curve(
    ion_count: usize,
    spacing_range_um: (f64, f64),
    points: usize,
    transition: &Transition,
    pol: Polarization,
) -> Result<ShiftCurve> {
    require_pairs(ion_count)?;
    validate_range(spacing_range_um, points)?;
    let spacings = linspace(spacing_range_um.0, spacing_range_um.1, points);
    let shifts = spacings
        .iter()
        .map(|s| Ok(collective_shift(&IonChain::equidistant(ion_count, *s)?, transition, pol)? * 1e3))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftCurve {
        axial_frequencies_mhz: vec![f64::NAN; spacings.len()],
        spacings_um: spacings,
        predicted_shift_khz: shifts,
        smeared_shift_khz: None,
        smeared_stderr_khz: None,
    })
}

/// Observable shift per MHz of oscillator strength for a chain rescaled
/// to each inner-pair spacing. The shift is linear in `A0`.
pub fn unit_strength_design(
    ion_count: usize,
    spacings_um: &[f64],
    transition: &Transition,
    pol: Polarization,
) -> Result<Vec<f64>> {
    require_pairs(ion_count)?;
    let unit = transition.with_oscillator_strength(1.0)?;
    let t = equilibrium_positions(ion_count)?;
    let base = IonChain::from_normalized(t, 1.0)?;
    spacings_um
        .iter()
        .map(|s| collective_shift(&base.rescaled_to_inner_spacing(*s)?, &unit, pol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::dipole::two_ion_manifold;

    fn sr() -> Transition {
        Transition::strontium()
    }

    const PERP: Polarization = Polarization::PerpendicularToAxis;
    const PAR: Polarization = Polarization::ParallelToAxis;

    #[test]
    fn needs_two_ions() {
        let one = IonChain::equidistant(1, 5.0).unwrap();
        assert!(matches!(collective_shift(&one, &sr(), PERP), Err(Error::Domain(_))));
        assert!(eigenmode_spectrum(&one, &sr()).is_err());
    }

    #[test]
    fn two_ions_reduce_to_pair_shift() {
        for r in [4.5, 5.0, 5.77] {
            let chain = IonChain::equidistant(2, r).unwrap();
            let d = far_field_shift(r, &sr());
            assert!((pair_sum_shift(chain.positions_um(), &sr()) - d).abs() < 1e-15);
            // matches the two-ion manifold observable
            let m = two_ion_manifold(r, &sr(), false).unwrap();
            let c = collective_shift(&chain, &sr(), PERP).unwrap();
            assert!((c - m.observed_shift(PERP)).abs() < 1e-15);
        }
    }

    #[test]
    fn three_equidistant_ions() {
        for r in [4.0, 5.0, 6.1] {
            let chain = IonChain::equidistant(3, r).unwrap();
            let direct = pair_sum_shift(chain.positions_um(), &sr());
            let enumerated = (4.0 * far_field_shift(r, &sr()) + 2.0 * far_field_shift(2.0 * r, &sr())) / 3.0;
            assert!((direct - enumerated).abs() < 1e-15);
        }
    }

    #[test]
    fn three_ion_negative_peaks_at_in_phase_spacings() {
        // pair terms delta(r) and delta(2r) are both negative where kr = 0 mod 2 pi
        let k = sr().wavenumber();
        let n = 12.0;
        let r_peak = 2.0 * std::f64::consts::PI * n / k;
        let peak = collective_shift(&IonChain::equidistant(3, r_peak).unwrap(), &sr(), PERP).unwrap();
        let curve = equidistant_shift_curve(3, (r_peak - 0.5 / k, r_peak + std::f64::consts::TAU / k), 400, &sr(), PERP)
            .unwrap();
        let min = curve.predicted_shift_khz.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = curve.predicted_shift_khz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(peak < 0.0);
        assert!((min - peak * 1e3).abs() < 0.05 * peak.abs() * 1e3);
        assert!(min.abs() > 1.5 * max.abs());
    }

    #[test]
    fn invariant_under_relabel_and_translation() {
        let chain = build_chain(&TrapConfig::strontium(6, 0.4).unwrap()).unwrap();
        let base = pair_sum_shift(chain.positions_um(), &sr());
        let mut shuffled: Vec<f64> = chain.positions_um().iter().map(|x| x + 17.3).collect();
        shuffled.reverse();
        shuffled.swap(1, 4);
        assert!((pair_sum_shift(&shuffled, &sr()) - base).abs() < 1e-12);
    }

    #[test]
    fn eigenmode_route_matches_direct_sum() {
        for m in 2..=8 {
            for f in [0.25, 0.4, 0.6, 0.81] {
                let chain = build_chain(&TrapConfig::strontium(m, f).unwrap()).unwrap();
                let spec = eigenmode_spectrum(&chain, &sr()).unwrap();
                let direct = pair_sum_shift(chain.positions_um(), &sr());
                assert!((spec.weighted_shift() - direct).abs() < 1e-9, "m={m} f={f}");
                let trace: f64 = spec.eigenvalues.iter().sum();
                assert!(trace.abs() < 1e-12);
                let wsum: f64 = spec.symmetric_weights.iter().sum();
                assert!((wsum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_ion_modes() {
        let chain = IonChain::equidistant(2, 5.0).unwrap();
        let spec = eigenmode_spectrum(&chain, &sr()).unwrap();
        let d = far_field_shift(5.0, &sr());
        assert!((spec.eigenvalues[0] + d.abs()).abs() < 1e-15);
        assert!((spec.eigenvalues[1] - d.abs()).abs() < 1e-15);
        // symmetric state is entirely the +delta mode
        let k = if d > 0.0 { 1 } else { 0 };
        assert!((spec.symmetric_weights[k] - 1.0).abs() < 1e-12);
        assert!((spec.weighted_shift() - d).abs() < 1e-15);
    }

    #[test]
    fn zero_jitter_is_exact() {
        let chain = build_chain(&TrapConfig::strontium(4, 0.5).unwrap()).unwrap();
        let thermal = ThermalModel::uniform(4, 0.0, 16).unwrap();
        let sm = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 3).unwrap();
        assert_eq!(sm.mean_mhz, collective_shift(&chain, &sr(), PERP).unwrap());
        assert_eq!(sm.stderr_mhz, 0.0);
    }

    #[test]
    fn smearing_is_seed_deterministic() {
        let chain = build_chain(&TrapConfig::strontium(3, 0.5).unwrap()).unwrap();
        let thermal = ThermalModel::uniform(3, 0.05, 500).unwrap();
        let a = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 11).unwrap();
        let b = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 11).unwrap();
        let c = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn thermal_width_count_must_match() {
        let chain = IonChain::equidistant(3, 5.0).unwrap();
        let thermal = ThermalModel::uniform(2, 0.01, 10).unwrap();
        assert!(smeared_collective_shift(&chain, &sr(), PERP, &thermal, 0).is_err());
        assert!(ThermalModel::new(vec![-0.1], 1).is_err());
        assert!(ThermalModel::new(vec![0.1], 0).is_err());
    }

    /// `E[f(r + xi)]` for `xi ~ N(0, var)` by trapezoidal quadrature over +-10 sd.
    fn gaussian_average(f: impl Fn(f64) -> f64, r: f64, var: f64) -> f64 {
        let sd = var.sqrt();
        let n = 20_000;
        let h = 20.0 * sd / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let x = -10.0 * sd + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * f(r + x) * (-x * x / (2.0 * var)).exp();
        }
        acc * h / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn two_ion_smearing_matches_gaussian_average() {
        let k = sr().wavenumber();
        let sigma = 0.5 / k;
        let r = 2.0 * std::f64::consts::PI * 12.0 / k; // on a peak
        let chain = IonChain::equidistant(2, r).unwrap();
        let thermal = ThermalModel::uniform(2, sigma, 40_000).unwrap();
        let sm = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 2024).unwrap();

        let oracle = 0.5 * gaussian_average(|x| far_field_shift(x.abs(), &sr()), r, 2.0 * sigma * sigma);
        assert!((sm.mean_mhz - oracle).abs() < 3.0 * sm.stderr_mhz, "{sm:?} vs {oracle}");

        // damping of the oscillation is exp(-(k sigma sqrt2)^2 / 2)
        let bare = collective_shift(&chain, &sr(), PERP).unwrap();
        let damping = oracle / bare;
        assert!((damping - (-(k * sigma * 2f64.sqrt()).powi(2) / 2.0).exp()).abs() < 0.01, "{damping}");
    }

    #[test]
    fn damping_grows_with_width() {
        let k = sr().wavenumber();
        let r = 2.0 * std::f64::consts::PI * 12.0 / k;
        let chain = IonChain::equidistant(2, r).unwrap();
        let mut last = f64::INFINITY;
        for ks in [0.0, 0.3, 0.6, 0.9, 1.2] {
            let thermal = ThermalModel::uniform(2, ks / k, 20_000).unwrap();
            let sm = smeared_collective_shift(&chain, &sr(), PERP, &thermal, 5).unwrap();
            assert!(sm.mean_mhz.abs() < last);
            last = sm.mean_mhz.abs();
        }
    }

    #[test]
    fn two_ion_curve_shape() {
        let trap = TrapConfig::strontium(2, 0.5).unwrap();
        let curve = shift_curve(&trap, (4.5, 6.0), 301, &sr(), PERP, None).unwrap();
        assert_eq!(curve.len(), 301);
        for ((s, shift), f) in curve.spacings_um.iter().zip(&curve.predicted_shift_khz).zip(&curve.axial_frequencies_mhz) {
            let expected = 0.5 * far_field_shift(*s, &sr()) * 1e3;
            assert!((shift - expected).abs() < 1e-9);
            // chain rebuilt at the inferred frequency reproduces the spacing
            let chain = build_chain(&TrapConfig::strontium(2, *f).unwrap()).unwrap();
            assert!((chain.inner_spacing_um().unwrap() - s).abs() < 1e-6);
        }
        // period lambda, envelope ~ 1/r
        let lam = sr().wavelength_um();
        let s0 = 5.0;
        let a = 0.5 * far_field_shift(s0, &sr());
        let b = 0.5 * far_field_shift(s0 + lam, &sr());
        assert!((a / b - (s0 + lam) / s0).abs() < 1e-9);

        let par = shift_curve(&trap, (4.5, 6.0), 50, &sr(), PAR, None).unwrap();
        assert!(par.predicted_shift_khz.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn three_ion_curve_equals_equidistant_reference() {
        let trap = TrapConfig::strontium(3, 0.5).unwrap();
        let curve = shift_curve(&trap, (4.0, 6.0), 80, &sr(), PERP, None).unwrap();
        let grey = equidistant_shift_curve(3, (4.0, 6.0), 80, &sr(), PERP).unwrap();
        for (a, b) in curve.predicted_shift_khz.iter().zip(&grey.predicted_shift_khz) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn five_ion_curve_differs_from_equidistant() {
        let trap = TrapConfig::strontium(5, 0.5).unwrap();
        let curve = shift_curve(&trap, (4.0, 6.0), 80, &sr(), PERP, None).unwrap();
        let grey = equidistant_shift_curve(5, (4.0, 6.0), 80, &sr(), PERP).unwrap();
        let diff: f64 = curve
            .predicted_shift_khz
            .iter()
            .zip(&grey.predicted_shift_khz)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1.0, "max difference {diff} kHz");
    }

    #[test]
    fn smeared_curve_columns() {
        let trap = TrapConfig::strontium(2, 0.5).unwrap();
        let thermal = ThermalModel::uniform(2, 0.02, 200).unwrap();
        let curve = shift_curve(&trap, (4.8, 5.2), 5, &sr(), PERP, Some((&thermal, 9))).unwrap();
        assert_eq!(curve.smeared_shift_khz.as_ref().unwrap().len(), 5);
        assert!(curve.smeared_stderr_khz.unwrap().iter().all(|s| *s > 0.0));
        assert!(shift_curve(&trap, (5.0, 4.0), 5, &sr(), PERP, None).is_err());
        assert!(shift_curve(&trap, (4.0, 5.0), 1, &sr(), PERP, None).is_err());
    }

    #[test]
    fn design_is_linear_in_strength() {
        let spacings = [4.6, 5.0, 5.3];
        let g = unit_strength_design(2, &spacings, &sr(), PERP).unwrap();
        for (s, gi) in spacings.iter().zip(&g) {
            let full = 0.5 * far_field_shift(*s, &sr());
            assert!((gi * sr().oscillator_strength_mhz() - full).abs() < 1e-15);
        }
    }
}
