//! Cooperative line shifts of trapped-ion chains.
//!
//! * [`chain`]: equilibrium positions of a linear crystal in a harmonic well.
//! * [`dipole`]: resonant dipole-dipole coupling and the two-ion singly
//!   excited manifold.
//! * [`collective`]: chain-averaged shifts, eigenmode cross-check, thermal
//!   smearing and shift-versus-spacing curves.
//! * [`spectro`]: Lorentzian line model and the three-point centre estimator.
//! * [`experiment`]: Monte Carlo interlaced measurement, Allan deviation,
//!   mean anchoring and the oscillator-strength fit.
//! * [`cli`]: the `coopshift` command line.
//!
//! Units: frequencies in MHz (shift outputs in kHz), distances in um.
//!
//! ```
//! use coopshift::chain::{build_chain, TrapConfig};
//! use coopshift::collective::collective_shift;
//! use coopshift::dipole::{Polarization, Transition};
//!
//! let chain = build_chain(&TrapConfig::strontium(2, 0.81)?)?;
//! let shift = collective_shift(&chain, &Transition::strontium(), Polarization::PerpendicularToAxis)?;
//! assert!(shift.abs() < 0.05);
//! # Ok::<(), coopshift::Error>(())
//! ```

pub mod chain;
pub mod cli;
pub mod collective;
pub mod constants;
pub mod dipole;
pub mod error;
pub mod experiment;
pub mod spectro;

pub use error::{Error, Result};
