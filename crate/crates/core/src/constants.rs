//! Physical constants (CODATA 2018 exact/recommended values) and the
//! default Sr+ 5S1/2 - 5P1/2 line parameters.
//!
//! Internal unit system: frequencies in MHz, distances in um, wavenumbers
//! in rad/um.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of 88Sr+ in atomic mass units.
pub const SR88_ION_MASS_U: f64 = 87.906;

/// 422 nm cooling/probe line wavelength, um.
pub const SR_WAVELENGTH_UM: f64 = 0.4216;

/// Total oscillator strength of the line, MHz.
pub const SR_OSCILLATOR_STRENGTH_MHZ: f64 = 20.05;

/// Natural linewidth, MHz.
pub const SR_NATURAL_LINEWIDTH_MHZ: f64 = 21.5;

/// Observed (broadened) linewidth, MHz.
pub const SR_EFFECTIVE_LINEWIDTH_MHZ: f64 = 24.63;

/// Clebsch-Gordan weight of the spin-flip (sigma) channel of a J=1/2 -> J'=1/2 line.
pub const SPIN_FLIP_WEIGHT: f64 = 2.0 / 3.0;
