//! Conditional phase and interaction time for the reference lattice:
//! a_pm = 10 nm, lambda = 800 nm, A = lambda^2, f = 10, v_gr = 10 v_rec.
//!
//! cargo run --example phase_estimate

use polariton_gate::gate::GateReport;
use polariton_gate::params::reference_config;

fn main() -> polariton_gate::Result<()> {
    let cfg = reference_config();
    let pulse = 10.0 * cfg.wavelength_lambda;
    let report = GateReport::from_config(&cfg, Some(pulse), None)?;

    println!("v_rec           = {:.6e} m/s", report.v_rec);
    println!(
        "v_gr            = {:.6e} m/s ({:.1} v_rec)",
        report.v_gr,
        report.v_gr / report.v_rec
    );
    println!("delta_phi       = {:.12} rad", report.delta_phi);
    println!("T = L / 2 v_gr  = {:.6e} s", report.interaction_time_T);
    println!("10 lambda/v_gr  = {:.6e} s", report.min_time_estimate);
    println!("|delta_phi - pi| = {:.6}", report.phase_error);

    let mut pi_cfg = cfg.clone();
    pi_cfg.scattering_length_a_pm *= std::f64::consts::PI / report.delta_phi;
    let pi_report = GateReport::from_config(&pi_cfg, Some(pulse), None)?;
    println!(
        "a_pm for a pi gate: {:.6e} m (delta_phi = {:.12})",
        pi_cfg.scattering_length_a_pm, pi_report.delta_phi
    );
    Ok(())
}
