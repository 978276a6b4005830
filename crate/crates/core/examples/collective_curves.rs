//! Shift of the inner pair versus spacing for 2 to 8 ions, computed both as a
//! pair sum and from the eigenmodes of the coupling matrix.

use coopshift::chain::{equilibrium_positions, IonChain, TrapConfig};
use coopshift::collective::{collective_shift, eigenmode_spectrum, pair_sum_shift, shift_curve};
use coopshift::dipole::{Polarization, Transition};

fn main() -> coopshift::Result<()> {
    let tr = Transition::strontium();
    let pol = Polarization::PerpendicularToAxis;

    let t = equilibrium_positions(4)?;
    let chain = IonChain::from_normalized(t, 3.0)?.rescaled_to_inner_spacing(4.0)?;
    let spec = eigenmode_spectrum(&chain, &tr)?;
    println!(
        "4 ions, inner spacing 4 um: pair sum {:.6} MHz, eigenmode sum {:.6} MHz, observed {:.3} kHz",
        pair_sum_shift(chain.positions_um(), &tr),
        spec.weighted_shift(),
        collective_shift(&chain, &tr, pol)? * 1e3
    );

    for n in [2, 3, 5, 8] {
        let curve = shift_curve(&TrapConfig::strontium(n, 1.0)?, (3.0, 8.0), 11, &tr, pol, None)?;
        println!("\nn = {n}");
        for i in 0..curve.len() {
            println!(
                "  {:.2} um ({:.3} MHz trap): {:+8.2} kHz",
                curve.spacings_um[i], curve.axial_frequencies_mhz[i], curve.predicted_shift_khz[i]
            );
        }
    }
    Ok(())
}
