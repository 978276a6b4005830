//! Resonant dipole-dipole coupling between two ions and the two-ion
//! singly-excited manifold.
//!
//! The coupling tensor is
//!
//! ```text
//! V = P [ -(d1.d2 - (r.d1)(r.d2)) cos(kr)/kr
//!         + (d1.d2 - 3 (r.d1)(r.d2)) (sin(kr)/(kr)^2 + cos(kr)/(kr)^3) ]
//! ```
//!
//! with `P = (3/8) A_updown`, `A_updown = (2/3) A0`. Dipole polarisation
//! vectors are unit vectors in the spherical basis with the chain axis as
//! quantisation axis, and the relative Clebsch-Gordan amplitudes of the
//! J=1/2 -> J'=1/2 line (sigma: 1, pi: 1/sqrt 2) multiply them. With this
//! normalisation a pair of sigma dipoles along the axis has the far-field
//! coupling `delta(r) = -(3/8) A_updown cos(kr)/kr` exactly.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::{
    SPIN_FLIP_WEIGHT, SR_EFFECTIVE_LINEWIDTH_MHZ, SR_NATURAL_LINEWIDTH_MHZ, SR_OSCILLATOR_STRENGTH_MHZ,
    SR_WAVELENGTH_UM,
};
use crate::error::{invalid, Error, Result};

pub type Complex64 = Complex<f64>;
pub type CVec3 = Vector3<Complex64>;

/// Optical transition constants. The wavenumber is always derived from the wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    wavelength_um: f64,
    oscillator_strength_mhz: f64,
    natural_linewidth_mhz: f64,
    effective_linewidth_mhz: f64,
}

impl Transition {
    pub fn new(
        wavelength_um: f64,
        oscillator_strength_mhz: f64,
        natural_linewidth_mhz: f64,
        effective_linewidth_mhz: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("wavelength", wavelength_um),
            ("oscillator_strength", oscillator_strength_mhz),
            ("natural_linewidth", natural_linewidth_mhz),
            ("effective_linewidth", effective_linewidth_mhz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if effective_linewidth_mhz < natural_linewidth_mhz {
            return Err(invalid("effective_linewidth", "must not be below the natural linewidth"));
        }
        Ok(Self {
            wavelength_um,
            oscillator_strength_mhz,
            natural_linewidth_mhz,
            effective_linewidth_mhz,
        })
    }

    /// The Sr+ 5S1/2 - 5P1/2 line at 421.6 nm.
    pub fn strontium() -> Self {
        Self {
            wavelength_um: SR_WAVELENGTH_UM,
            oscillator_strength_mhz: SR_OSCILLATOR_STRENGTH_MHZ,
            natural_linewidth_mhz: SR_NATURAL_LINEWIDTH_MHZ,
            effective_linewidth_mhz: SR_EFFECTIVE_LINEWIDTH_MHZ,
        }
    }

    pub fn with_oscillator_strength(self, a0_mhz: f64) -> Result<Self> {
        Self::new(
            self.wavelength_um,
            a0_mhz,
            self.natural_linewidth_mhz,
            self.effective_linewidth_mhz,
        )
    }

    pub fn wavelength_um(&self) -> f64 {
        self.wavelength_um
    }

    pub fn oscillator_strength_mhz(&self) -> f64 {
        self.oscillator_strength_mhz
    }

    pub fn natural_linewidth_mhz(&self) -> f64 {
        self.natural_linewidth_mhz
    }

    pub fn effective_linewidth_mhz(&self) -> f64 {
        self.effective_linewidth_mhz
    }

    /// `k = 2 pi / lambda`, rad/um.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_um
    }

    /// Oscillator strength of the spin-flip channel, `(2/3) A0`.
    pub fn spin_flip_strength_mhz(&self) -> f64 {
        SPIN_FLIP_WEIGHT * self.oscillator_strength_mhz
    }

    fn coupling_prefactor(&self) -> f64 {
        0.375 * self.spin_flip_strength_mhz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    separation_um: f64,
    axis: Vector3<f64>,
}

impl PairGeometry {
    /// `axis` is normalised here; it only needs a nonzero length.
    pub fn new(separation_um: f64, axis: Vector3<f64>) -> Result<Self> {
        if !(separation_um > 0.0 && separation_um.is_finite()) {
            return Err(Error::Singular {
                separation: separation_um,
            });
        }
        let len = axis.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(invalid("axis", "must be a nonzero vector"));
        }
        Ok(Self {
            separation_um,
            axis: axis / len,
        })
    }

    /// Two ions on the chain (z) axis.
    pub fn along_chain(separation_um: f64) -> Result<Self> {
        Self::new(separation_um, Vector3::z())
    }

    pub fn separation_um(&self) -> f64 {
        self.separation_um
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }
}

/// Unit-normalised transition dipole polarisations of the two ions.
#[derive(Debug, Clone, PartialEq)]
pub struct DipolePair {
    a: CVec3,
    b: CVec3,
}

impl DipolePair {
    pub fn new(a: CVec3, b: CVec3) -> Result<Self> {
        let na = a.norm();
        let nb = b.norm();
        if !(na > 0.0 && nb > 0.0) {
            return Err(invalid("dipole", "polarisation vectors must be nonzero"));
        }
        Ok(Self { a: a / Complex::from(na), b: b / Complex::from(nb) })
    }

    pub fn real(a: Vector3<f64>, b: Vector3<f64>) -> Result<Self> {
        Self::new(a.map(Complex::from), b.map(Complex::from))
    }

    pub fn a(&self) -> &CVec3 {
        &self.a
    }

    pub fn b(&self) -> &CVec3 {
        &self.b
    }
}

/// Far-field (1/kr) and near-field (1/kr^2, 1/kr^3) parts of the coupling, MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTerms {
    pub far_field: Complex64,
    pub near_field: Complex64,
}

impl CouplingTerms {
    pub fn total(&self) -> Complex64 {
        self.far_field + self.near_field
    }
}

fn bilinear(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn project(axis: &Vector3<f64>, d: &CVec3) -> Complex64 {
    d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]
}

pub fn coupling_terms(pair: &DipolePair, geom: &PairGeometry, transition: &Transition) -> Result<CouplingTerms> {
    let kr = transition.wavenumber() * geom.separation_um;
    let pre = transition.coupling_prefactor();
    let dd = bilinear(&pair.a, &pair.b);
    let ra_rb = project(&geom.axis, &pair.a) * project(&geom.axis, &pair.b);
    let (s, c) = kr.sin_cos();
    let far = -(dd - ra_rb) * (pre * c / kr);
    let near = (dd - ra_rb * 3.0) * (pre * (s / (kr * kr) + c / (kr * kr * kr)));
    if !(far.re.is_finite() && near.re.is_finite()) {
        return Err(Error::Singular {
            separation: geom.separation_um,
        });
    }
    Ok(CouplingTerms {
        far_field: far,
        near_field: near,
    })
}

/// Full resonant dipole-dipole coupling, MHz.
pub fn coupling_strength(pair: &DipolePair, geom: &PairGeometry, transition: &Transition) -> Result<Complex64> {
    coupling_terms(pair, geom, transition).map(|t| t.total())
}

/// Far-field pair shift `delta(r) = -(3/8) (2/3) A0 cos(kr) / kr`, MHz.
///
/// Diverges for `separation_um -> 0`.
pub fn far_field_shift(separation_um: f64, transition: &Transition) -> f64 {
    let kr = transition.wavenumber() * separation_um;
    -transition.coupling_prefactor() * kr.cos() / kr
}

/// Probe polarisation relative to the trap axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    PerpendicularToAxis,
    ParallelToAxis,
}

impl Polarization {
    /// Fraction of the pair shift that appears as a line-centre shift.
    pub fn factor(self) -> f64 {
        polarization_factor(self)
    }

    /// Probe field direction: x for perpendicular, z (trap axis) for parallel.
    pub fn probe_vector(self) -> Vector3<f64> {
        match self {
            Polarization::PerpendicularToAxis => Vector3::x(),
            Polarization::ParallelToAxis => Vector3::z(),
        }
    }
}

pub fn polarization_factor(pol: Polarization) -> f64 {
    match pol {
        Polarization::PerpendicularToAxis => 0.5,
        Polarization::ParallelToAxis => 0.0,
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::PerpendicularToAxis => "perp",
            Polarization::ParallelToAxis => "par",
        })
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perp" | "perpendicular" => Ok(Polarization::PerpendicularToAxis),
            "par" | "parallel" => Ok(Polarization::ParallelToAxis),
            other => Err(invalid("polarization", format!("expected `perp` or `par`, got `{other}`"))),
        }
    }
}

/// Spin projection on the chain axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    fn twice_m(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    fn arrow(self) -> char {
        match self {
            Spin::Up => 'u',
            Spin::Down => 'd',
        }
    }
}

/// Spherical basis vector `e_q`.
fn spherical(q: i32) -> CVec3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex::new(0.0, 0.0);
    match q {
        1 => Vector3::new(Complex::new(-s, 0.0), Complex::new(0.0, -s), zero),
        -1 => Vector3::new(Complex::new(s, 0.0), Complex::new(0.0, -s), zero),
        0 => Vector3::new(zero, zero, Complex::new(1.0, 0.0)),
        _ => unreachable!("dipole transitions carry |q| <= 1"),
    }
}

/// `<e, excited | d | g, ground>` as (relative amplitude, unit polarisation).
///
/// Amplitudes are Clebsch-Gordan coefficients of J=1/2 -> J'=1/2 divided
/// by the sigma coefficient sqrt(2/3).
pub fn absorption_dipole(ground: Spin, excited: Spin) -> (f64, CVec3) {
    let q = (excited.twice_m() - ground.twice_m()) / 2;
    let amp = match (ground, excited) {
        (Spin::Down, Spin::Up) => 1.0,
        (Spin::Up, Spin::Down) => -1.0,
        (Spin::Up, Spin::Up) => -std::f64::consts::FRAC_1_SQRT_2,
        (Spin::Down, Spin::Down) => std::f64::consts::FRAC_1_SQRT_2,
    };
    (amp, spherical(q).map(|c| c.conj()))
}

/// `<g, ground | d | e, excited>`.
pub fn emission_dipole(excited: Spin, ground: Spin) -> (f64, CVec3) {
    let (amp, v) = absorption_dipole(ground, excited);
    (amp, v.map(|c| c.conj()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ion {
    A,
    B,
}

/// A singly-excited two-ion product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifoldState {
    pub excited: Ion,
    pub spin_a: Spin,
    pub spin_b: Spin,
}

impl ManifoldState {
    /// Basis order: ion A excited (uu, ud, du, dd), then ion B excited.
    pub fn basis() -> [ManifoldState; 8] {
        let mut out = [ManifoldState {
            excited: Ion::A,
            spin_a: Spin::Up,
            spin_b: Spin::Up,
        }; 8];
        let mut i = 0;
        for excited in [Ion::A, Ion::B] {
            for spin_a in Spin::BOTH {
                for spin_b in Spin::BOTH {
                    out[i] = ManifoldState { excited, spin_a, spin_b };
                    i += 1;
                }
            }
        }
        out
    }

    pub fn index(&self) -> usize {
        let e = match self.excited {
            Ion::A => 0,
            Ion::B => 4,
        };
        let a = if self.spin_a == Spin::Up { 0 } else { 2 };
        let b = if self.spin_b == Spin::Up { 0 } else { 1 };
        e + a + b
    }

    /// e.g. `eu,gd` for ion A excited spin up, ion B in the ground state spin down.
    pub fn label(&self) -> String {
        let (la, lb) = match self.excited {
            Ion::A => ('e', 'g'),
            Ion::B => ('g', 'e'),
        };
        format!("{la}{},{lb}{}", self.spin_a.arrow(), self.spin_b.arrow())
    }
}

/// Eigenstructure of the 8x8 singly-excited coupling block.
#[derive(Debug, Clone)]
pub struct TwoIonManifold {
    pub separation_um: f64,
    /// Far-field pair shift at this separation, MHz.
    pub delta_mhz: f64,
    pub include_near_field: bool,
    pub hamiltonian: DMatrix<Complex64>,
    /// Ascending, MHz.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex64>,
}

fn manifold_element(
    from: &ManifoldState,
    to: &ManifoldState,
    geom: &PairGeometry,
    transition: &Transition,
    include_near_field: bool,
) -> Result<Complex64> {
    if from.excited == to.excited {
        // Zeeman splitting neglected: no diagonal energies inside a sector
        return Ok(Complex::new(0.0, 0.0));
    }
    let (emit, absorb) = match from.excited {
        Ion::A => (
            emission_dipole(from.spin_a, to.spin_a),
            absorption_dipole(from.spin_b, to.spin_b),
        ),
        Ion::B => (
            absorption_dipole(from.spin_a, to.spin_a),
            emission_dipole(from.spin_b, to.spin_b),
        ),
    };
    let pair = DipolePair::new(emit.1, absorb.1)?;
    let terms = coupling_terms(&pair, geom, transition)?;
    let v = if include_near_field { terms.total() } else { terms.far_field };
    Ok(v * (emit.0 * absorb.0))
}

pub fn two_ion_manifold(separation_um: f64, transition: &Transition, include_near_field: bool) -> Result<TwoIonManifold> {
    let geom = PairGeometry::along_chain(separation_um)?;
    let basis = ManifoldState::basis();
    let mut h = DMatrix::<Complex64>::zeros(8, 8);
    for from in &basis {
        for to in &basis {
            h[(to.index(), from.index())] = manifold_element(from, to, &geom, transition, include_near_field)?;
        }
    }

    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..8).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(8, 8, |r, c| eig.eigenvectors[(r, order[c])]);

    Ok(TwoIonManifold {
        separation_um,
        delta_mhz: far_field_shift(separation_um, transition),
        include_near_field,
        hamiltonian: h,
        eigenvalues,
        eigenvectors,
    })
}

impl TwoIonManifold {
    /// State prepared by a weak uniform-phase probe from `|g sa, g sb>`, normalised.
    pub fn probe_excitation(ground_a: Spin, ground_b: Spin, pol: Polarization) -> Option<Vec<Complex64>> {
        let field = pol.probe_vector().map(Complex::from);
        let mut psi = vec![Complex::new(0.0, 0.0); 8];
        for excited in Spin::BOTH {
            let (amp, d) = absorption_dipole(ground_a, excited);
            let idx = ManifoldState {
                excited: Ion::A,
                spin_a: excited,
                spin_b: ground_b,
            }
            .index();
            psi[idx] += bilinear(&d, &field) * amp;

            let (amp, d) = absorption_dipole(ground_b, excited);
            let idx = ManifoldState {
                excited: Ion::B,
                spin_a: ground_a,
                spin_b: excited,
            }
            .index();
            psi[idx] += bilinear(&d, &field) * amp;
        }
        let n = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return None;
        }
        Some(psi.into_iter().map(|c| c / n).collect())
    }

    /// Eigenvalue average weighted by the overlaps `|<mode|psi>|^2`.
    pub fn mean_shift_of(&self, psi: &[Complex64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            let overlap: Complex64 = (0..8).map(|r| self.eigenvectors[(r, k)].conj() * psi[r]).sum();
            let w = overlap.norm_sqr();
            num += w * lambda;
            den += w;
        }
        num / den
    }

    /// Mean shift of the probe transitions out of each of the four ground
    /// states, in the order uu, ud, du, dd.
    pub fn probe_transition_shifts(&self, pol: Polarization) -> Vec<f64> {
        let mut out = Vec::with_capacity(4);
        for a in Spin::BOTH {
            for b in Spin::BOTH {
                if let Some(psi) = Self::probe_excitation(a, b, pol) {
                    out.push(self.mean_shift_of(&psi));
                }
            }
        }
        out
    }

    /// Line-centre shift for an unpolarised ground state: mean over the
    /// four ground-state transitions.
    pub fn observed_shift(&self, pol: Polarization) -> f64 {
        let shifts = self.probe_transition_shifts(pol);
        shifts.iter().sum::<f64>() / shifts.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sr() -> Transition {
        Transition::strontium()
    }

    fn sigma_pair() -> DipolePair {
        // emission e(up) -> g(down) on one ion, absorption g(down) -> e(up) on the other
        DipolePair::new(spherical(1), spherical(1).map(|c| c.conj())).unwrap()
    }

    #[test]
    fn transition_validation() {
        assert!(Transition::new(0.4216, 20.05, 21.5, 24.63).is_ok());
        assert!(Transition::new(0.4216, 20.05, 21.5, 20.0).is_err());
        assert!(Transition::new(-1.0, 20.05, 21.5, 24.63).is_err());
        assert!((sr().spin_flip_strength_mhz() - 20.05 * 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_far_field_reproduces_pair_shift() {
        for r in [4.0, 4.9, 5.0, 6.3, 8.0] {
            let geom = PairGeometry::along_chain(r).unwrap();
            let t = coupling_terms(&sigma_pair(), &geom, &sr()).unwrap();
            let delta = far_field_shift(r, &sr());
            assert!((t.far_field.re - delta).abs() < 1e-15, "r={r}");
            assert!(t.far_field.im.abs() < 1e-15);
        }
    }

    #[test]
    fn longitudinal_dipoles_have_no_far_field() {
        let pair = DipolePair::real(Vector3::z(), Vector3::z()).unwrap();
        let geom = PairGeometry::along_chain(5.0).unwrap();
        let t = coupling_terms(&pair, &geom, &sr()).unwrap();
        assert_eq!(t.far_field.norm(), 0.0);
        assert!(t.near_field.norm() > 0.0);
    }

    #[test]
    fn far_field_dominates_at_five_microns() {
        let geom = PairGeometry::along_chain(5.0).unwrap();
        let t = coupling_terms(&sigma_pair(), &geom, &sr()).unwrap();
        let kr = sr().wavenumber() * 5.0;
        assert!((kr - 74.52).abs() < 0.01);
        let ratio = t.far_field.norm() / t.near_field.norm();
        assert!(ratio > 0.5 * kr && ratio < 2.0 * kr, "ratio {ratio}");
    }

    #[test]
    fn near_field_remainder_decays_as_inverse_square() {
        let pair = DipolePair::real(Vector3::x(), Vector3::x()).unwrap();
        let pre = sr().coupling_prefactor();
        for r in [5.0, 50.0, 500.0, 5000.0] {
            let geom = PairGeometry::along_chain(r).unwrap();
            let t = coupling_terms(&pair, &geom, &sr()).unwrap();
            let kr = sr().wavenumber() * r;
            let total = coupling_strength(&pair, &geom, &sr()).unwrap();
            let rem = (total - t.far_field).norm();
            assert!(rem * kr * kr <= pre * (1.0 + 1.0 / kr) + 1e-12);
        }
    }

    #[test]
    fn coupling_symmetric_under_exchange() {
        let a = Vector3::new(Complex::new(0.3, 0.1), Complex::new(-0.2, 0.7), Complex::new(0.5, 0.0));
        let b = Vector3::new(Complex::new(0.0, 1.0), Complex::new(0.4, 0.0), Complex::new(-0.1, 0.2));
        let axis = Vector3::new(0.2, -0.3, 0.9);
        let geom = PairGeometry::new(4.7, axis).unwrap();
        let ab = coupling_strength(&DipolePair::new(a, b).unwrap(), &geom, &sr()).unwrap();
        let ba = coupling_strength(&DipolePair::new(b, a).unwrap(), &geom, &sr()).unwrap();
        assert!((ab - ba).norm() < 1e-15);
        let flipped = PairGeometry::new(4.7, -axis).unwrap();
        let ab2 = coupling_strength(&DipolePair::new(a, b).unwrap(), &flipped, &sr()).unwrap();
        assert!((ab - ab2).norm() < 1e-15);
    }

    #[test]
    fn zero_separation_is_singular() {
        assert!(matches!(PairGeometry::along_chain(0.0), Err(Error::Singular { .. })));
        assert!(matches!(two_ion_manifold(0.0, &sr(), true), Err(Error::Singular { .. })));
    }

    #[test]
    fn pair_shift_values() {
        let d = far_field_shift(5.0, &sr());
        assert!((d * 1e3 + 42.9).abs() < 0.5, "delta(5um) = {} kHz", d * 1e3);
        // delta vanishes where cos(kr) = 0
        let k = sr().wavenumber();
        for n in [20, 21, 30] {
            let r = (std::f64::consts::FRAC_PI_2 + n as f64 * std::f64::consts::PI) / k;
            assert!(far_field_shift(r, &sr()).abs() < 1e-15);
        }
        // envelope 5.0125 / kr MHz
        let r = 24.0 * std::f64::consts::PI / k;
        assert!((far_field_shift(r, &sr()).abs() - 5.0125 / (k * r)).abs() < 1e-12);
    }

    #[test]
    fn far_field_manifold_spectrum() {
        for r in [4.3, 5.0, 5.55, 7.9] {
            let m = two_ion_manifold(r, &sr(), false).unwrap();
            let d = m.delta_mhz.abs();
            let expected = [-d, -d, 0.0, 0.0, 0.0, 0.0, d, d];
            for (e, x) in m.eigenvalues.iter().zip(expected) {
                assert!((e - x).abs() <= 1e-9 * d, "r={r}: {:?}", m.eigenvalues);
            }
            let trace: f64 = m.eigenvalues.iter().sum();
            assert!(trace.abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        for nf in [false, true] {
            let m = two_ion_manifold(5.1, &sr(), nf).unwrap();
            let h = &m.hamiltonian;
            assert!((h - h.adjoint()).norm() < 1e-15);
        }
    }

    #[test]
    fn shifted_states_are_exchange_symmetric_combinations() {
        let m = two_ion_manifold(5.0, &sr(), false).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let idx = |e, a, b| {
            ManifoldState {
                excited: e,
                spin_a: a,
                spin_b: b,
            }
            .index()
        };
        // (|e u, g d> + |g d, e u>)/sqrt2 and (|e d, g u> + |g u, e d>)/sqrt2 carry +delta
        let mut plus = vec![DMatrix::<Complex64>::zeros(8, 1), DMatrix::<Complex64>::zeros(8, 1)];
        plus[0][idx(Ion::A, Spin::Up, Spin::Down)] = Complex::from(s);
        plus[0][idx(Ion::B, Spin::Down, Spin::Up)] = Complex::from(s);
        plus[1][idx(Ion::A, Spin::Down, Spin::Up)] = Complex::from(s);
        plus[1][idx(Ion::B, Spin::Up, Spin::Down)] = Complex::from(s);
        for v in &plus {
            let hv = &m.hamiltonian * v;
            assert!((hv - v * Complex::from(m.delta_mhz)).norm() < 1e-15);
        }
        let mut minus = DMatrix::<Complex64>::zeros(8, 1);
        minus[idx(Ion::A, Spin::Up, Spin::Down)] = Complex::from(s);
        minus[idx(Ion::B, Spin::Down, Spin::Up)] = Complex::from(-s);
        let hv = &m.hamiltonian * &minus;
        assert!((hv - &minus * Complex::from(-m.delta_mhz)).norm() < 1e-15);
        // parallel-spin states are dark
        let mut par = DMatrix::<Complex64>::zeros(8, 1);
        par[idx(Ion::A, Spin::Up, Spin::Up)] = Complex::from(1.0);
        assert!((&m.hamiltonian * par).norm() < 1e-15);
    }

    #[test]
    fn crossing_is_fully_degenerate() {
        let k = sr().wavenumber();
        let r = (std::f64::consts::FRAC_PI_2 + 23.0 * std::f64::consts::PI) / k;
        let m = two_ion_manifold(r, &sr(), false).unwrap();
        assert!(m.eigenvalues.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn near_field_correction_is_percent_level() {
        let m = two_ion_manifold(5.0, &sr(), true).unwrap();
        let d = m.delta_mhz.abs();
        let top = m.eigenvalues[7];
        let rel = (top - d).abs() / d;
        assert!(rel > 1e-3 && rel < 0.05, "relative deviation {rel}");
        let trace: f64 = m.eigenvalues.iter().sum();
        assert!(trace.abs() < 1e-12);
    }

    #[test]
    fn observed_shift_by_polarization() {
        for r in [4.4, 5.0, 6.2] {
            let m = two_ion_manifold(r, &sr(), false).unwrap();
            let perp = m.observed_shift(Polarization::PerpendicularToAxis);
            let par = m.observed_shift(Polarization::ParallelToAxis);
            assert!((perp - 0.5 * m.delta_mhz).abs() <= 1e-12 * m.delta_mhz.abs());
            assert!(par.abs() <= 1e-12);
            assert_eq!(polarization_factor(Polarization::PerpendicularToAxis), 0.5);
            assert_eq!(polarization_factor(Polarization::ParallelToAxis), 0.0);
        }
    }

    #[test]
    fn perpendicular_probe_reaches_two_shifted_two_unshifted() {
        let m = two_ion_manifold(5.0, &sr(), false).unwrap();
        let mut shifts = m.probe_transition_shifts(Polarization::PerpendicularToAxis);
        shifts.sort_by(f64::total_cmp);
        let d = m.delta_mhz;
        let mut expected = [0.0, 0.0, d, d];
        expected.sort_by(f64::total_cmp);
        for (s, e) in shifts.iter().zip(expected) {
            assert!((s - e).abs() < 1e-15);
        }
    }

    #[test]
    fn polarization_parses() {
        assert_eq!("perp".parse::<Polarization>().unwrap(), Polarization::PerpendicularToAxis);
        assert_eq!("PAR".parse::<Polarization>().unwrap(), Polarization::ParallelToAxis);
        assert!("diag".parse::<Polarization>().is_err());
    }

    #[test]
    fn basis_labels_round_trip() {
        let basis = ManifoldState::basis();
        for (i, s) in basis.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        assert_eq!(basis[1].label(), "eu,gd");
        assert_eq!(basis[6].label(), "gd,eu");
    }
}
