//! Checks the adiabatically eliminated site solution against direct
//! integration of the lattice-site equations.
//!
//! A linear probe ramp is reproduced exactly by the first-order solution.
//! For Gaussian probe pulses of duration 1/(eta Omega0) the q residual
//! falls off as a power of eta.
//!
//! cargo run --release --example adiabatic_oracle

use num_complex::Complex64;
use polariton_gate::params::reference_config;
use polariton_gate::site_dynamics::{
    adiabatic_residual, eta_scaling, integrate_site, DriveProfile, Envelope, InitialState,
    IntegrationSpec,
};

fn main() -> polariton_gate::Result<()> {
    let cfg = reference_config();
    let rabi = cfg.control_rabi_Omega0;

    let ramp = DriveProfile {
        plus: Envelope::LinearRamp {
            slope: Complex64::new(10.0, 0.0),
        },
        minus: Envelope::LinearRamp {
            slope: Complex64::new(0.0, -10.0),
        },
    };
    let spec = IntegrationSpec {
        t_start: 0.0,
        t_end: 200.0 / rabi,
        dt: 0.02 / rabi,
        initial: InitialState::Adiabatic,
        record_every: 5,
    };
    let traj = integrate_site(&cfg, &ramp, &spec)?;
    let r = adiabatic_residual(&traj, &ramp, &cfg, None)?;
    println!(
        "linear ramp: q residual {:.3e}, e residual {:.3e} (relative)",
        r.q_residual_rel, r.e_residual_rel
    );
    println!(
        "energy drift {:.3e}, max population fraction {:.3e}",
        traj.energy_drift, traj.max_population_fraction
    );

    let etas = [1e-1, 1e-2, 1e-3];
    let s = eta_scaling(&cfg, Complex64::new(0.05, 0.0), &etas, 0.02)?;
    println!("{:>8} {:>14} {:>14}", "eta", "q residual", "e residual");
    for i in 0..etas.len() {
        println!(
            "{:>8.0e} {:>14.4e} {:>14.4e}",
            s.etas[i], s.q_residual_rel[i], s.e_residual_rel[i]
        );
    }
    println!(
        "q exponent {:.3}, e exponent {:.3}",
        s.q_exponent, s.e_exponent
    );
    Ok(())
}
