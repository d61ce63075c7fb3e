//! One block of the round-trip operator: norm, channel traces and the
//! log-determinant against its trace approximation.
//!
//! ```text
//! cargo run --release --example round_trip
//! ```

use casimir_core::mie::Material;
use casimir_core::roundtrip::{assemble_block, GeometryConfig};
use casimir_core::translation::{gaunt_table, translation_element, Direction, Polarization};

fn main() -> casimir_core::Result<()> {
    let g = gaunt_table(3, 2, 1)?;
    print!("Gaunt coefficients l1 = 3, l2 = 2, m = 1:");
    for lp in (g.l_min()..=g.l_max()).step_by(2) {
        print!(" [{lp}] {:.6}", g.get(lp));
    }
    println!();
    let t = translation_element(2, 3, 1, Polarization::TM, Polarization::TE, 1.5, Direction::Forward)?;
    println!("translation TM -> TE, l = 2 -> 3, m = 1, kd = 1.5: {:.6e} i^{}", t.scaled_value(), t.phase_power);

    let pec = Material::perfect_conductor();
    for ratio in [2.5, 5.0, 20.0] {
        let geometry = GeometryConfig::symmetric(ratio)?;
        let block = assemble_block(geometry, pec, pec, 1, 0.5, 12)?;
        let c = block.channel_traces();
        println!(
            "d/R = {ratio:5.1}: dim {}, norm bound {:.3e}, ln det(1-M) {:+.6e}, -Tr M {:+.6e} (TM {:.2e}, TE {:.2e}, mix {:.2e})",
            block.dim(),
            block.norm_bound(),
            block.ln_det_one_minus()?,
            -block.trace(),
            c.tm,
            c.te,
            c.mixing()
        );
    }
    Ok(())
}
