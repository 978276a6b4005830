//! Equilibrium geometry of a linear ion crystal.
//!
//! In a harmonic axial well the ions sit at `r_m = t_m * p`: the
//! dimensionless positions `t_m` minimise
//!
//! ```text
//! U(u) = sum_m u_m^2 / 2 + sum_{m<n} 1 / |u_m - u_n|
//! ```
//!
//! and depend only on the ion number, while the length scale
//! `p = (q^2 / (4 pi eps0 m w_z^2))^(1/3)` carries all of the trap physics.

use nalgebra::{DMatrix, DVector};

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, SR88_ION_MASS_U, VACUUM_PERMITTIVITY};
use crate::error::{invalid, Error, Result};

/// Axial trap parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub ion_count: usize,
    /// Axial centre-of-mass mode frequency `w_z / 2 pi`, MHz.
    pub axial_com_frequency_mhz: f64,
    pub ion_mass_u: f64,
    /// Charge state in units of the elementary charge.
    pub ion_charge: u32,
}

impl TrapConfig {
    pub fn new(ion_count: usize, axial_com_frequency_mhz: f64, ion_mass_u: f64, ion_charge: u32) -> Result<Self> {
        let cfg = Self {
            ion_count,
            axial_com_frequency_mhz,
            ion_mass_u,
            ion_charge,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Singly charged 88Sr+ ions.
    pub fn strontium(ion_count: usize, axial_com_frequency_mhz: f64) -> Result<Self> {
        Self::new(ion_count, axial_com_frequency_mhz, SR88_ION_MASS_U, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ion_count < 1 {
            return Err(invalid("ion_count", "must be at least 1"));
        }
        if !(self.axial_com_frequency_mhz > 0.0 && self.axial_com_frequency_mhz.is_finite()) {
            return Err(invalid("axial_com_frequency", "must be a positive finite frequency"));
        }
        if !(self.ion_mass_u > 0.0 && self.ion_mass_u.is_finite()) {
            return Err(invalid("ion_mass", "must be positive"));
        }
        if self.ion_charge < 1 {
            return Err(invalid("ion_charge", "must be at least 1"));
        }
        Ok(())
    }
}

/// Newton solver settings for [`equilibrium_positions_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Required Euclidean norm of the dimensionless force vector.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
        }
    }
}

/// Gradient of `U`, i.e. minus the net dimensionless force on every ion.
pub fn force_residual(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = u.to_vec();
    for m in 0..n {
        for k in 0..n {
            if k == m {
                continue;
            }
            let d = u[m] - u[k];
            g[m] -= d.signum() / (d * d);
        }
    }
    g
}

fn energy(u: &[f64]) -> f64 {
    let mut e = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    for m in 0..u.len() {
        for k in m + 1..u.len() {
            e += 1.0 / (u[m] - u[k]).abs();
        }
    }
    e
}

fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::<f64>::identity(n, n);
    for m in 0..n {
        for k in 0..n {
            if k == m {
                continue;
            }
            let c = 2.0 / (u[m] - u[k]).abs().powi(3);
            h[(m, m)] += c;
            h[(m, k)] = -c;
        }
    }
    h
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

/// Dimensionless equilibrium positions, ascending and antisymmetric about 0.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    equilibrium_positions_with(n, &SolverOptions::default())
}

pub fn equilibrium_positions_with(n: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("ion_count", "must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }

    // uniform start at roughly the minimum spacing of the true crystal
    let spacing = 2.018 * (n as f64).powf(-0.559);
    let mid = (n as f64 - 1.0) / 2.0;
    let mut u: Vec<f64> = (0..n).map(|m| (m as f64 - mid) * spacing).collect();

    let target = opts.tolerance * 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let g = force_residual(&u);
        let g_norm = norm(&g);
        if g_norm <= target {
            break;
        }
        iterations += 1;

        let step = match hessian(&u).cholesky() {
            Some(ch) => ch.solve(&DVector::from_vec(g.clone())),
            None => break,
        };
        let e0 = energy(&u);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - alpha * s).collect();
            if strictly_increasing(&trial) && (energy(&trial) < e0 || norm(&force_residual(&trial)) < g_norm) {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => u = next,
            // rounding floor reached
            None => break,
        }
    }

    for m in 0..n / 2 {
        let a = 0.5 * (u[n - 1 - m] - u[m]);
        u[m] = -a;
        u[n - 1 - m] = a;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }

    let residual = norm(&force_residual(&u));
    if residual < opts.tolerance && strictly_increasing(&u) {
        Ok(u)
    } else {
        Err(Error::SolverFailure { iterations, residual })
    }
}

/// Length scale `p` in um.
pub fn length_scale_um(cfg: &TrapConfig) -> f64 {
    let q = cfg.ion_charge as f64 * ELEMENTARY_CHARGE;
    let mass = cfg.ion_mass_u * ATOMIC_MASS_UNIT;
    let omega = 2.0 * std::f64::consts::PI * cfg.axial_com_frequency_mhz * 1e6;
    let p_m = (q * q / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * mass * omega * omega)).cbrt();
    p_m * 1e6
}

/// Length scale and its 1-sigma uncertainty (um) for a relative
/// uncertainty `relative_frequency_error` of the axial frequency.
/// First order: `dp / p = (2/3) df / f`.
pub fn length_scale_with_uncertainty_um(cfg: &TrapConfig, relative_frequency_error: f64) -> Result<(f64, f64)> {
    cfg.validate()?;
    if !(relative_frequency_error >= 0.0 && relative_frequency_error.is_finite()) {
        return Err(invalid("relative_frequency_error", "must be finite and nonnegative"));
    }
    let p = length_scale_um(cfg);
    Ok((p, p * 2.0 / 3.0 * relative_frequency_error))
}

/// Inverse of [`length_scale_um`]: the axial COM frequency (MHz) giving length scale `p_um`.
pub fn axial_frequency_for_length_scale(p_um: f64, ion_mass_u: f64, ion_charge: u32) -> f64 {
    let q = ion_charge as f64 * ELEMENTARY_CHARGE;
    let mass = ion_mass_u * ATOMIC_MASS_UNIT;
    let p = p_um * 1e-6;
    let omega = (q * q / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * mass * p.powi(3))).sqrt();
    omega / (2.0 * std::f64::consts::PI) / 1e6
}

/// Index pair (0-based) of the two adjacent ions nearest the chain centre.
///
/// Even chains use the two middle ions; odd chains the pair between the
/// centre ion and its right-hand neighbour.
pub fn inner_pair(n: usize) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let left = (n - 1) / 2;
    Some((left, left + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonChain {
    normalized_positions: Vec<f64>,
    length_scale_um: f64,
    positions_um: Vec<f64>,
}

impl IonChain {
    pub fn from_normalized(normalized_positions: Vec<f64>, length_scale_um: f64) -> Result<Self> {
        if normalized_positions.is_empty() {
            return Err(invalid("normalized_positions", "must not be empty"));
        }
        if !(length_scale_um > 0.0 && length_scale_um.is_finite()) {
            return Err(invalid("length_scale", "must be positive"));
        }
        if !strictly_increasing(&normalized_positions) {
            return Err(invalid("normalized_positions", "must be strictly increasing"));
        }
        let positions_um = normalized_positions.iter().map(|t| t * length_scale_um).collect();
        Ok(Self {
            normalized_positions,
            length_scale_um,
            positions_um,
        })
    }

    /// Equidistant chain with the given spacing, centred on the origin.
    pub fn equidistant(n: usize, spacing_um: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("ion_count", "must be at least 1"));
        }
        let mid = (n as f64 - 1.0) / 2.0;
        Self::from_normalized((0..n).map(|m| m as f64 - mid).collect(), spacing_um)
    }

    pub fn len(&self) -> usize {
        self.positions_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_um.is_empty()
    }

    pub fn normalized_positions(&self) -> &[f64] {
        &self.normalized_positions
    }

    pub fn length_scale_um(&self) -> f64 {
        self.length_scale_um
    }

    pub fn positions_um(&self) -> &[f64] {
        &self.positions_um
    }

    /// Distance between the inner pair, um; `None` for a single ion.
    pub fn inner_spacing_um(&self) -> Option<f64> {
        inner_pair(self.len()).map(|(a, b)| self.positions_um[b] - self.positions_um[a])
    }

    /// Same crystal shape rescaled so that the inner pair is `spacing_um` apart.
    pub fn rescaled_to_inner_spacing(&self, spacing_um: f64) -> Result<Self> {
        let (a, b) = inner_pair(self.len()).ok_or_else(|| Error::Domain("a single ion has no inner pair".into()))?;
        let dt = self.normalized_positions[b] - self.normalized_positions[a];
        Self::from_normalized(self.normalized_positions.clone(), spacing_um / dt)
    }
}

pub fn build_chain(cfg: &TrapConfig) -> Result<IonChain> {
    cfg.validate()?;
    let t = equilibrium_positions(cfg.ion_count)?;
    IonChain::from_normalized(t, length_scale_um(cfg))
}
