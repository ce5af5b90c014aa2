//! Jones-calculus building blocks and the geometric-phase (QHQ) element.
//!
//! Shows how a half-wave plate between two quarter-wave plates at 45° acts
//! as a pure phase element on the H/V components, with the relative phase
//! set by a single angle.
//!
//! Run: `cargo run --example waveplates`

use qkdsim::jones::{compose, hwp, qhq, qwp, JonesVector};
use std::f64::consts::FRAC_PI_4;

fn main() {
    println!("wave-plate action on |H>:");
    for (label, matrix) in [
        ("hwp(0°)   ", hwp(0.0)),
        ("hwp(22.5°)", hwp(22.5f64.to_radians())),
        ("hwp(45°)  ", hwp(45f64.to_radians())),
        ("qwp(45°)  ", qwp(FRAC_PI_4)),
    ] {
        let out = matrix.apply(&JonesVector::horizontal());
        println!("  {label} |H> -> ({:.3}, {:.3})", out.h(), out.v());
    }

    println!("\nQHQ element diag entries and imparted H-V phase:");
    for theta_deg in [0.0f64, 11.25, 22.5, 45.0, 67.5] {
        let theta = theta_deg.to_radians();
        let element = qhq(theta);
        let imparted = (element.entry(0, 0) / element.entry(1, 1)).arg();
        println!(
            "  theta_H = {theta_deg:>6.2}°  diag = ({:+.3}, {:+.3})  phase(H)-phase(V) = {:+.3} rad",
            element.entry(0, 0),
            element.entry(1, 1),
            imparted,
        );
    }

    // The literal product of the three plates reproduces the closed form up
    // to one global phase.
    let theta = 0.7;
    let product = compose(&[qwp(FRAC_PI_4), hwp(theta), qwp(FRAC_PI_4)]).unwrap();
    println!(
        "\nqwp(45°)·hwp({theta})·qwp(45°) equals qhq({theta}) up to a global phase: {}",
        product.equal_up_to_global_phase(&qhq(theta), 1e-10)
    );
}
