//! Upwind finite-difference solver against the exact characteristics
//! solution on a refinement ladder, and the epsilon independence of the
//! accumulated phase.
//!
//! cargo run --release --example fd_convergence

use polariton_gate::dispersion::EitMedium;
use polariton_gate::params::reference_config;
use polariton_gate::scattering::{fd_convergence, InitialCondition, PairCoupling, DEFAULT_COURANT};

fn main() -> polariton_gate::Result<()> {
    let medium = EitMedium::from_config(&reference_config())?;
    let coupling = PairCoupling::from_medium(&medium);
    let sigma = 2e-6;
    let ic = InitialCondition::gaussian_pair(sigma, 12.0 * sigma);

    let ladder = [257, 513, 1025, 2049];
    let study = fd_convergence(&ic, &coupling, 16, &ladder, DEFAULT_COURANT, None)?;
    println!(
        "target phase {:.6} rad, epsilon {:.3e} m",
        coupling.delta_phi(),
        study.epsilon
    );
    println!(
        "{:>6} {:>11} {:>11} {:>10} {:>11} {:>10}",
        "n_xi", "dxi", "L2 error", "phase", "homog.", "norm loss"
    );
    for r in &study.rows {
        println!(
            "{:>6} {:>11.4e} {:>11.4e} {:>10.6} {:>11.3e} {:>10.3e}",
            r.xi_points, r.dxi, r.l2_error, r.delta_phi, r.homogeneity, r.norm_loss
        );
    }
    println!("observed order {:.3}", study.order);

    let wide = fd_convergence(
        &ic,
        &coupling,
        16,
        &[513, 1025],
        DEFAULT_COURANT,
        Some(4.0 * study.epsilon),
    )?;
    println!(
        "epsilon x4 at n_xi = 1025: phase {:.6} (vs {:.6})",
        wide.rows[1].delta_phi, study.rows[2].delta_phi
    );
    Ok(())
}
