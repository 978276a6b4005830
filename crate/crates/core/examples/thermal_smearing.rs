//! Thermal position spread washes out the oscillation of the shift with
//! spacing; compare the static and smeared curves for three ions.

use coopshift::chain::TrapConfig;
use coopshift::collective::{shift_curve, ThermalModel};
use coopshift::dipole::{Polarization, Transition};

fn main() -> coopshift::Result<()> {
    let tr = Transition::strontium();
    let template = TrapConfig::strontium(3, 1.0)?;
    for sigma in [0.02, 0.1] {
        let thermal = ThermalModel::uniform(3, sigma, 2000)?;
        let c = shift_curve(
            &template,
            (4.5, 5.5),
            9,
            &tr,
            Polarization::PerpendicularToAxis,
            Some((&thermal, 7)),
        )?;
        let sm = c.smeared_shift_khz.as_ref().unwrap();
        let se = c.smeared_stderr_khz.as_ref().unwrap();
        println!("sigma = {sigma} um");
        for i in 0..c.len() {
            println!(
                "  {:.3} um: static {:+8.2} kHz, smeared {:+8.2} +- {:.2} kHz",
                c.spacings_um[i], c.predicted_shift_khz[i], sm[i], se[i]
            );
        }
    }
    Ok(())
}
