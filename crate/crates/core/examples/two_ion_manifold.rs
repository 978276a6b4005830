//! Eigenvalues of the two-ion singly-excited manifold and the shift seen
//! with each probe polarisation.

use coopshift::dipole::{two_ion_manifold, Polarization, Transition};

fn main() -> coopshift::Result<()> {
    let tr = Transition::strontium();
    let m = two_ion_manifold(4.96, &tr, false)?;
    println!("r = {} um, delta = {:.2} kHz", m.separation_um, m.delta_mhz * 1e3);
    for (k, e) in m.eigenvalues.iter().enumerate() {
        println!("  eigenvalue {k}: {:+.2} kHz", e * 1e3);
    }
    for pol in [Polarization::PerpendicularToAxis, Polarization::ParallelToAxis] {
        println!("  {pol}: observed shift {:+.3} kHz", m.observed_shift(pol) * 1e3);
    }

    println!("\nseparation scan, perpendicular probe, with near-field terms");
    for i in 0..=10 {
        let r = 4.5 + 0.1 * i as f64;
        let near = two_ion_manifold(r, &tr, true)?;
        println!("  {r:.2} um: {:+8.2} kHz", near.observed_shift(Polarization::PerpendicularToAxis) * 1e3);
    }
    Ok(())
}
