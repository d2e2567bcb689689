//! Physical inputs, validation and the elementary derived quantities.
//!
//! Everything is SI. The JSON configuration uses exactly the field names of
//! [`ExperimentConfig`]; unknown keys are rejected.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};

/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s), exact.
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit (kg), CODATA 2018.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Physical description of the lattice medium and the fields driving it.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub wavelength_lambda: f64,
    pub beam_area_A: f64,
    pub lattice_constant_a: f64,
    /// f = a / l0, ratio of lattice constant to Wannier width.
    pub confinement_f: f64,
    pub atoms_per_site_N: u32,
    /// Inter-species q+ / q- scattering length; may be negative.
    pub scattering_length_a_pm: f64,
    pub scattering_length_a_pp: f64,
    pub scattering_length_a_mm: f64,
    pub scattering_length_a_g: f64,
    pub scattering_length_a_gp: f64,
    pub scattering_length_a_gm: f64,
    pub atom_mass_m: f64,
    pub control_rabi_Omega0: f64,
    pub dipole_mu: f64,
    pub probe_omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_e_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_e_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_q_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_q_minus: Option<f64>,
}

/// Non-fatal findings about a configuration or a derived quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Advisory {
    /// A resonance condition assumed by the solvers is not met.
    OffResonance { which: &'static str, detuning: f64 },
    /// v_gr / c above the slow-light validity threshold.
    FastGroupVelocity { ratio_to_c: f64 },
    /// Compressed pulse length shorter than ten wavelengths.
    ShortPulse { length_over_wavelength: f64 },
    /// Excited-state population fraction reached the weak-probe limit.
    StrongProbe { population_fraction: f64 },
}

impl fmt::Display for Advisory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Advisory::OffResonance { which, detuning } => {
                write!(
                    f,
                    "resonance condition {which} violated (detuning {detuning:e} rad/s)"
                )
            }
            Advisory::FastGroupVelocity { ratio_to_c } => {
                write!(
                    f,
                    "v_gr/c = {ratio_to_c:e} exceeds the slow-light threshold"
                )
            }
            Advisory::ShortPulse {
                length_over_wavelength,
            } => write!(
                f,
                "pulse length is only {length_over_wavelength} wavelengths"
            ),
            Advisory::StrongProbe {
                population_fraction,
            } => write!(
                f,
                "population fraction {population_fraction:e} breaks the weak-probe limit"
            ),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("wavelength_lambda", self.wavelength_lambda)?;
        positive("beam_area_A", self.beam_area_A)?;
        positive("lattice_constant_a", self.lattice_constant_a)?;
        positive("atom_mass_m", self.atom_mass_m)?;
        positive("control_rabi_Omega0", self.control_rabi_Omega0)?;
        positive("dipole_mu", self.dipole_mu)?;
        positive("probe_omega", self.probe_omega)?;
        finite("scattering_length_a_pm", self.scattering_length_a_pm)?;
        finite("scattering_length_a_pp", self.scattering_length_a_pp)?;
        finite("scattering_length_a_mm", self.scattering_length_a_mm)?;
        finite("scattering_length_a_g", self.scattering_length_a_g)?;
        finite("scattering_length_a_gp", self.scattering_length_a_gp)?;
        finite("scattering_length_a_gm", self.scattering_length_a_gm)?;
        if !self.confinement_f.is_finite() || self.confinement_f < 1.0 {
            return Err(Error::ConfinementBelowUnity(self.confinement_f));
        }
        if self.atoms_per_site_N == 0 {
            return Err(Error::EmptySites);
        }
        if self.lattice_constant_a >= self.wavelength_lambda {
            return Err(Error::LatticeNotSubwavelength {
                lattice: self.lattice_constant_a,
                wavelength: self.wavelength_lambda,
            });
        }
        for (name, v) in [
            ("control_omega_c", self.control_omega_c),
            ("k", self.k),
            ("k_c", self.k_c),
            ("omega_e_plus", self.omega_e_plus),
            ("omega_e_minus", self.omega_e_minus),
            ("omega_q_plus", self.omega_q_plus),
            ("omega_q_minus", self.omega_q_minus),
        ] {
            if let Some(v) = v {
                finite(name, v)?;
            }
        }
        Ok(())
    }

    /// Average atom density n = N / a^3.
    pub fn density(&self) -> f64 {
        f64::from(self.atoms_per_site_N) / self.lattice_constant_a.powi(3)
    }

    /// Local density enhancement f^3.
    pub fn confinement_cubed(&self) -> f64 {
        self.confinement_f.powi(3)
    }

    pub fn recoil_velocity(&self) -> Result<f64> {
        recoil_velocity(self.probe_omega, self.atom_mass_m)
    }
}

/// s-wave collision strength u = 4 pi a_s hbar / m (m^3/s).
pub fn collision_strength(scattering_length: f64, mass: f64) -> Result<f64> {
    positive("atom_mass_m", mass)?;
    finite("scattering_length", scattering_length)?;
    Ok(4.0 * PI * scattering_length * HBAR / mass)
}

/// Recoil velocity hbar omega / (m c).
pub fn recoil_velocity(probe_omega: f64, mass: f64) -> Result<f64> {
    positive("probe_omega", probe_omega)?;
    positive("atom_mass_m", mass)?;
    Ok(HBAR * probe_omega / (mass * C))
}

/// Per-polarization detunings. `q_*_shifted` include the ground-state
/// collision shift u_g± n f^3, which the resonance condition requires to
/// cancel the bare Raman detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detunings {
    pub e_plus: f64,
    pub e_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub q_plus_shifted: f64,
    pub q_minus_shifted: f64,
    pub tolerance: f64,
}

impl Detunings {
    pub fn on_resonance(&self) -> bool {
        self.advisories().is_empty()
    }

    pub fn advisories(&self) -> Vec<Advisory> {
        [
            ("delta_e_plus", self.e_plus),
            ("delta_e_minus", self.e_minus),
            ("delta_q_plus + u_gp n f^3", self.q_plus_shifted),
            ("delta_q_minus + u_gm n f^3", self.q_minus_shifted),
        ]
        .into_iter()
        .filter(|(_, d)| d.abs() > self.tolerance)
        .map(|(which, detuning)| Advisory::OffResonance { which, detuning })
        .collect()
    }
}

/// Evaluates the one- and two-photon detunings. `tolerance` (rad/s) sets
/// what counts as on resonance.
pub fn detunings(cfg: &ExperimentConfig, tolerance: f64) -> Result<Detunings> {
    let omega = cfg.probe_omega;
    let m = cfg.atom_mass_m;
    let k = cfg.k.ok_or(Error::MissingField("k"))?;
    let k_c = cfg.k_c.ok_or(Error::MissingField("k_c"))?;
    let omega_c = cfg
        .control_omega_c
        .ok_or(Error::MissingField("control_omega_c"))?;
    let e_plus = cfg
        .omega_e_plus
        .ok_or(Error::MissingField("omega_e_plus"))?;
    let e_minus = cfg
        .omega_e_minus
        .ok_or(Error::MissingField("omega_e_minus"))?;
    let q_plus = cfg
        .omega_q_plus
        .ok_or(Error::MissingField("omega_q_plus"))?;
    let q_minus = cfg
        .omega_q_minus
        .ok_or(Error::MissingField("omega_q_minus"))?;

    let kinetic_e = HBAR * k * k / (2.0 * m);
    let kinetic_q = HBAR * (k - k_c).powi(2) / (2.0 * m);
    let nf3 = cfg.density() * cfg.confinement_cubed();
    let u_gp = collision_strength(cfg.scattering_length_a_gp, m)?;
    let u_gm = collision_strength(cfg.scattering_length_a_gm, m)?;

    let dq_plus = q_plus - omega + omega_c + kinetic_q;
    let dq_minus = q_minus - omega + omega_c + kinetic_q;
    Ok(Detunings {
        e_plus: e_plus - omega + kinetic_e,
        e_minus: e_minus - omega + kinetic_e,
        q_plus: dq_plus,
        q_minus: dq_minus,
        q_plus_shifted: dq_plus + u_gp * nf3,
        q_minus_shifted: dq_minus + u_gm * nf3,
        tolerance,
    })
}

/// The estimate scenario: a = 10 nm, lambda = 800 nm, A = lambda^2, f = 10,
/// with mass and control field chosen so that v_rec = 1 cm/s and
/// v_gr = 10 v_rec. Level frequencies are set on resonance.
pub fn reference_config() -> ExperimentConfig {
    ExperimentConfig {
        wavelength_lambda: 8.0e-7,
        beam_area_A: 6.4e-13,
        lattice_constant_a: 4.0e-7,
        confinement_f: 10.0,
        atoms_per_site_N: 1,
        scattering_length_a_pm: 1.0e-8,
        scattering_length_a_pp: 5.3e-9,
        scattering_length_a_mm: 5.3e-9,
        scattering_length_a_g: 5.3e-9,
        scattering_length_a_gp: 5.3e-9,
        scattering_length_a_gm: 5.3e-9,
        atom_mass_m: 8.282_587_682_425_1e-26,
        control_rabi_Omega0: 2_026_597.577_517_841_5,
        dipole_mu: 2.5e-29,
        probe_omega: 2_354_564_459_136_066.6,
        control_omega_c: Some(2_354_521_733_475_977.8),
        k: Some(7_853_981.633_974_483),
        k_c: Some(7_853_981.633_974_483),
        omega_e_plus: Some(2_354_564_459_096_796.7),
        omega_e_minus: Some(2_354_564_459_096_796.7),
        omega_q_plus: Some(42_724_335_088.821_19),
        omega_q_minus: Some(42_724_335_088.821_19),
    }
}
