//! Dipole and quadrupole Mie ratios of a Drude sphere across the three
//! scattering regimes.
//!
//! ```text
//! cargo run --release --example mie_coefficients
//! ```

use std::f64::consts::PI;

use casimir_core::mie::{mie_expansion, mie_ratios, regime_classify, Material, RegimeThresholds};

fn main() -> casimir_core::Result<()> {
    // omega_P R/2 pi c = 20, sigma0 R/c = 4 pi 1e4, radius as length unit
    let sphere = Material::drude_from_conductivity(4.0 * PI * 1e4, 40.0 * PI)?;
    println!("{:>9} {:>12} {:>12} {:>12}  regime", "kR", "-b1/a1", "a2/a1", "series");
    for i in 0..=14 {
        let kr = 10f64.powf(-6.0 + 0.5 * i as f64);
        let r = mie_ratios(&sphere, kr, 1.0)?;
        let series = match mie_expansion(&sphere, 1, kr, 1.0) {
            Ok((a, b)) => format!("{:12.4e}", -b / a),
            Err(_) => format!("{:>12}", "-"),
        };
        let regime = regime_classify(&sphere, kr, 1.0, RegimeThresholds::default())?;
        println!("{kr:9.1e} {:12.4e} {:12.4e} {series}  {regime:?}", r.te_over_tm, r.quadrupole_over_dipole);
    }
    Ok(())
}
