//! Equilibrium positions of Sr+ chains in an 810 kHz trap.

use coopshift::chain::{build_chain, length_scale_with_uncertainty_um, TrapConfig};

fn main() -> coopshift::Result<()> {
    for n in 2..=8 {
        let chain = build_chain(&TrapConfig::strontium(n, 0.81)?)?;
        let pos: Vec<String> = chain.positions_um().iter().map(|z| format!("{z:+.3}")).collect();
        println!(
            "n = {n}: inner spacing {:.4} um, positions [{}]",
            chain.inner_spacing_um().unwrap(),
            pos.join(", ")
        );
    }
    // 1 kHz uncertainty on the axial frequency
    let (p, dp) = length_scale_with_uncertainty_um(&TrapConfig::strontium(2, 0.81)?, 1e-3 / 0.81)?;
    println!("length scale {p:.4} +- {dp:.4} um");
    Ok(())
}
