//! EIT dispersion layer: group velocity, polariton mixing angle and the
//! Kerr-type coefficients that drive self- and cross-phase modulation of
//! dark-state polaritons.

use serde::Serialize;

use crate::error::{positive, Error, Result};
use crate::params::{Advisory, ExperimentConfig, C, EPSILON_0, HBAR};

/// Above this v_gr / c the slow-light expression for v_gr is flagged.
pub const SLOW_LIGHT_LIMIT: f64 = 0.1;

/// Derived dispersion quantities of the medium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EitMedium {
    pub v_gr: f64,
    pub theta: f64,
    pub v_rec: f64,
    pub kappa_self_plus: f64,
    pub kappa_self_minus: f64,
    pub kappa_cross: f64,
    pub compression_ratio: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub advisories: Vec<Advisory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearCoefficients {
    pub self_plus: f64,
    pub self_minus: f64,
    pub cross: f64,
}

impl EitMedium {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let v_gr = group_velocity(cfg)?;
        Self::with_group_velocity(cfg, v_gr)
    }

    /// Same as [`EitMedium::from_config`] but with v_gr imposed directly,
    /// ignoring the control field. Used by sweeps over v_gr.
    pub fn with_group_velocity(cfg: &ExperimentConfig, v_gr: f64) -> Result<Self> {
        let theta = mixing_angle(v_gr)?;
        let v_rec = cfg.recoil_velocity()?;
        let k = nonlinear_coefficients(cfg, v_rec)?;
        let mut advisories = Vec::new();
        if let Some(a) = slow_light_advisory(v_gr) {
            advisories.push(a);
        }
        Ok(Self {
            v_gr,
            theta,
            v_rec,
            kappa_self_plus: k.self_plus,
            kappa_self_minus: k.self_minus,
            kappa_cross: k.cross,
            compression_ratio: v_gr / C,
            advisories,
        })
    }

    /// Matter fraction sin^2(theta) of each polariton, computed as 1 - v_gr/c
    /// to avoid the cancellation in sin(theta)^2 near theta = pi/2.
    pub fn matter_fraction(&self) -> f64 {
        1.0 - self.v_gr / C
    }
}

/// v_gr = 2 c hbar |Omega0|^2 eps0 / (|mu|^2 omega n), valid for v_gr << c.
pub fn group_velocity(cfg: &ExperimentConfig) -> Result<f64> {
    let n = cfg.density();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::NonPositive {
            field: "density",
            value: n,
        });
    }
    let mu = positive("dipole_mu", cfg.dipole_mu.abs())?;
    let omega = positive("probe_omega", cfg.probe_omega)?;
    let rabi = cfg.control_rabi_Omega0;
    let v = 2.0 * C * HBAR * rabi * rabi * EPSILON_0 / (mu * mu * omega * n);
    if let Some(a) = slow_light_advisory(v) {
        log::warn!("{a}");
    }
    Ok(v)
}

pub fn slow_light_advisory(v_gr: f64) -> Option<Advisory> {
    let ratio = v_gr / C;
    (ratio > SLOW_LIGHT_LIMIT).then_some(Advisory::FastGroupVelocity { ratio_to_c: ratio })
}

/// Mixing angle with v_gr = c cos^2(theta).
pub fn mixing_angle(v_gr: f64) -> Result<f64> {
    if !(v_gr > 0.0 && v_gr <= C) {
        return Err(Error::GroupVelocityOutOfRange { v_gr });
    }
    Ok((v_gr / C).sqrt().acos())
}

/// kappa_ij = 2 a_ij lambda v_rec f^3 / A for the polariton propagation
/// equation (units m/s).
pub fn nonlinear_coefficients(cfg: &ExperimentConfig, v_rec: f64) -> Result<NonlinearCoefficients> {
    let area = positive("beam_area_A", cfg.beam_area_A)?;
    let scale = 2.0 * cfg.wavelength_lambda * v_rec * cfg.confinement_cubed() / area;
    Ok(NonlinearCoefficients {
        self_plus: scale * cfg.scattering_length_a_pp,
        self_minus: scale * cfg.scattering_length_a_mm,
        cross: scale * cfg.scattering_length_a_pm,
    })
}

#[cfg(test)]
/// Field amplitude of one photon spread over the beam area,
/// sqrt(hbar omega / (2 eps0 A)). Converts the electric-field envelope to the
/// dimensionless polariton normalization.
fn photon_field_scale(omega: f64, area: f64) -> f64 {
    (HBAR * omega / (2.0 * EPSILON_0 * area)).sqrt()
}

#[cfg(test)]
/// Coefficient of E^dag E E in the electric-field propagation equation,
/// u lambda eps0 f^3 / (hbar pi v_gr), re-expressed for the polariton field
/// Psi (E = Psi cos(theta) * photon_field_scale). Reduces to the matching
/// entry of [`nonlinear_coefficients`]; kept as a consistency route.
fn kerr_coefficient_via_field(
    cfg: &ExperimentConfig,
    scattering_length: f64,
    v_gr: f64,
) -> Result<f64> {
    let u = crate::params::collision_strength(scattering_length, cfg.atom_mass_m)?;
    let field = u * cfg.wavelength_lambda * EPSILON_0 * cfg.confinement_cubed()
        / (HBAR * std::f64::consts::PI * v_gr);
    let s = photon_field_scale(cfg.probe_omega, cfg.beam_area_A);
    // E^dag E E = s^2 cos^2(theta) Psi^dag Psi E, and E / (s cos theta) = Psi
    Ok(field * s * s * (v_gr / C))
}
