//! Slow-light dispersion of the lattice as the control Rabi frequency is
//! varied: group velocity, mixing angle and the pair-interaction coefficient.
//!
//! cargo run --example dispersion_table

use polariton_gate::dispersion::EitMedium;
use polariton_gate::gate;
use polariton_gate::params::reference_config;

fn main() -> polariton_gate::Result<()> {
    let base = reference_config();
    println!(
        "{:>12} {:>12} {:>12} {:>14} {:>12} {:>10}",
        "Omega0", "v_gr", "v_gr/v_rec", "pi/2 - theta", "kappa_cross", "dphi"
    );
    for scale in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let mut cfg = base.clone();
        cfg.control_rabi_Omega0 *= scale;
        let m = EitMedium::from_config(&cfg)?;
        println!(
            "{:>12.4e} {:>12.4e} {:>12.3} {:>14.4e} {:>12.4e} {:>10.5}",
            cfg.control_rabi_Omega0,
            m.v_gr,
            m.v_gr / m.v_rec,
            std::f64::consts::FRAC_PI_2 - m.theta,
            m.kappa_cross,
            gate::delta_phi(&cfg, m.v_gr)?,
        );
    }
    Ok(())
}
