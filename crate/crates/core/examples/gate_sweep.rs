//! Where does the collision phase reach pi? Sweeps group velocity and
//! confinement and reports the crossing next to the closed-form inversion.
//!
//! cargo run --example gate_sweep

use std::f64::consts::PI;

use polariton_gate::gate::{sweep, SweepAxis, SweepOptions};
use polariton_gate::params::reference_config;

fn main() -> polariton_gate::Result<()> {
    let cfg = reference_config();
    let opts = SweepOptions {
        pulse_length: Some(10.0 * cfg.wavelength_lambda),
        gamma_q: Some(1e3),
    };
    // dphi = 1.25 at v_gr = 0.1 and f = 10, linear in 1/v_gr and in f^3
    let closed = [
        (SweepAxis::GroupVelocity, 0.01, 0.2, 0.1 * 1.25 / PI),
        (SweepAxis::Confinement, 5.0, 20.0, 10.0 * (PI / 1.25).cbrt()),
        (
            SweepAxis::BeamArea,
            1e-13,
            1e-12,
            cfg.beam_area_A * 1.25 / PI,
        ),
    ];
    for (axis, lo, hi, expected) in closed {
        let table = sweep(&cfg, axis, lo, hi, 40, &opts)?;
        match table.crossing {
            Some(c) => println!(
                "{axis:>5}: pi at {:.9e} (closed form {:.9e}), T = {:.3e} s, dephasing {:.4}",
                c.value,
                expected,
                c.report.interaction_time_T,
                c.report.dephasing_amplitude_factor.unwrap_or(1.0)
            ),
            None => println!("{axis:>5}: no crossing in [{lo}, {hi}]"),
        }
    }
    Ok(())
}
