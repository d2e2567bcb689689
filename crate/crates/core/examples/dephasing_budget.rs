//! Amplitude lost to ground-state dephasing during one gate, for a range of
//! coherence times, and its effect on a simulated collision.
//!
//! cargo run --release --example dephasing_budget

use polariton_gate::dispersion::EitMedium;
use polariton_gate::gate::GateReport;
use polariton_gate::params::reference_config;
use polariton_gate::scattering::{
    apply_dephasing, evolve_characteristics_exact, InitialCondition, PairCoupling,
};

fn main() -> polariton_gate::Result<()> {
    let cfg = reference_config();
    let medium = EitMedium::from_config(&cfg)?;
    let pulse = 10.0 * cfg.wavelength_lambda;

    println!(
        "{:>12} {:>14} {:>14}",
        "1/gamma_q", "amplitude", "pair prob."
    );
    for coherence in [1e-4, 1e-3, 1e-2, 1e-1] {
        let r = GateReport::from_config(&cfg, Some(pulse), Some(1.0 / coherence))?;
        let a = r.dephasing_amplitude_factor.expect("rate given");
        println!("{:>10.0e} s {:>14.9} {:>14.9}", coherence, a, a * a);
    }

    let ic = InitialCondition::gaussian_pair(2e-6, 24e-6);
    let (gr, gx) = ic.grids(32, 512)?;
    let coupling = PairCoupling::from_medium(&medium);
    let t = GateReport::from_config(&cfg, Some(pulse), None)?.interaction_time_T;
    let w = evolve_characteristics_exact(&ic, gr, gx, &coupling, t)?;
    let damped = apply_dephasing(&w, &medium, 1e3, t)?;
    println!(
        "norm after T with 1/gamma_q = 1 ms: {:.9} -> {:.9}",
        w.norm(),
        damped.norm()
    );
    Ok(())
}
