//! Closed-form gate figures of merit and parameter sweeps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::EitMedium;
use crate::error::{positive, Error, Result};
use crate::params::{Advisory, ExperimentConfig};
use crate::scattering::{dephasing_factor, PhaseMeasurement};

/// Pulses shorter than this many wavelengths are flagged.
pub const MIN_PULSE_WAVELENGTHS: f64 = 10.0;

/// Conditional collision phase dphi = (a_pm lambda / A) (v_rec / v_gr) f^3.
/// Independent of every pulse parameter.
pub fn delta_phi(cfg: &ExperimentConfig, v_gr: f64) -> Result<f64> {
    let area = positive("beam_area_A", cfg.beam_area_A)?;
    let v_gr = positive("v_gr", v_gr)?;
    let v_rec = cfg.recoil_velocity()?;
    Ok(cfg.scattering_length_a_pm * cfg.wavelength_lambda / area
        * (v_rec / v_gr)
        * cfg.confinement_cubed())
}

/// Interaction time T = L / (2 v_gr) of two counter-propagating pulses.
pub fn interaction_time(pulse_length: f64, v_gr: f64) -> Result<f64> {
    let l = positive("pulse_length_L", pulse_length)?;
    let v = positive("v_gr", v_gr)?;
    Ok(l / (2.0 * v))
}

pub fn pulse_length_advisory(pulse_length: f64, wavelength: f64) -> Option<Advisory> {
    let ratio = pulse_length / wavelength;
    (ratio < MIN_PULSE_WAVELENGTHS).then_some(Advisory::ShortPulse {
        length_over_wavelength: ratio,
    })
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub delta_phi: f64,
    pub interaction_time_T: f64,
    /// 10 lambda / v_gr, the cruder lower bound on T quoted alongside L/(2 v_gr).
    pub min_time_estimate: f64,
    pub pulse_length_L: f64,
    pub v_gr: f64,
    pub v_rec: f64,
    pub theta: f64,
    pub compression_ratio: f64,
    pub phase_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_delta_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dephasing_amplitude_factor: Option<f64>,
    pub advisories: Vec<Advisory>,
}

impl GateReport {
    /// Report for `medium`; `pulse_length` defaults to ten wavelengths.
    pub fn new(
        cfg: &ExperimentConfig,
        medium: &EitMedium,
        pulse_length: Option<f64>,
        gamma_q: Option<f64>,
    ) -> Result<Self> {
        let l = pulse_length.unwrap_or(MIN_PULSE_WAVELENGTHS * cfg.wavelength_lambda);
        let dphi = delta_phi(cfg, medium.v_gr)?;
        let t = interaction_time(l, medium.v_gr)?;
        let mut advisories = medium.advisories.clone();
        advisories.extend(pulse_length_advisory(l, cfg.wavelength_lambda));
        let dephasing = gamma_q
            .map(|g| dephasing_factor(g, medium.matter_fraction(), t))
            .transpose()?;
        Ok(Self {
            delta_phi: dphi,
            interaction_time_T: t,
            min_time_estimate: MIN_PULSE_WAVELENGTHS * cfg.wavelength_lambda / medium.v_gr,
            pulse_length_L: l,
            v_gr: medium.v_gr,
            v_rec: medium.v_rec,
            theta: medium.theta,
            compression_ratio: medium.compression_ratio,
            phase_error: (dphi - PI).abs(),
            measured_delta_phi: None,
            homogeneity: None,
            gamma_q,
            dephasing_amplitude_factor: dephasing,
            advisories,
        })
    }

    pub fn from_config(
        cfg: &ExperimentConfig,
        pulse_length: Option<f64>,
        gamma_q: Option<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        Self::new(cfg, &EitMedium::from_config(cfg)?, pulse_length, gamma_q)
    }

    /// Attaches a simulated phase measurement. The phase error then refers
    /// to the measured value.
    pub fn with_measurement(mut self, m: &PhaseMeasurement) -> Self {
        self.measured_delta_phi = Some(m.delta_phi);
        self.homogeneity = Some(m.homogeneity);
        self.phase_error = (m.delta_phi - PI).abs();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "f")]
    Confinement,
    #[serde(rename = "v_gr")]
    GroupVelocity,
    #[serde(rename = "A")]
    BeamArea,
    #[serde(rename = "a_pm")]
    ScatteringLength,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Confinement => "f",
            SweepAxis::GroupVelocity => "v_gr",
            SweepAxis::BeamArea => "A",
            SweepAxis::ScatteringLength => "a_pm",
        }
    }

    /// Variable in which dphi is linear along this axis.
    fn linearize(&self, x: f64) -> f64 {
        match self {
            SweepAxis::Confinement => x.powi(3),
            SweepAxis::GroupVelocity | SweepAxis::BeamArea => 1.0 / x,
            SweepAxis::ScatteringLength => x,
        }
    }

    fn delinearize(&self, u: f64) -> f64 {
        match self {
            SweepAxis::Confinement => u.cbrt(),
            SweepAxis::GroupVelocity | SweepAxis::BeamArea => 1.0 / u,
            SweepAxis::ScatteringLength => u,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(SweepAxis::Confinement),
            "v_gr" => Ok(SweepAxis::GroupVelocity),
            "A" => Ok(SweepAxis::BeamArea),
            "a_pm" => Ok(SweepAxis::ScatteringLength),
            other => Err(Error::InvalidSweep(format!(
                "unknown axis `{other}` (expected f, v_gr, A or a_pm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: GateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub samples: Vec<SweepPoint>,
    /// Axis value where dphi = pi, if bracketed by two samples.
    pub crossing: Option<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub pulse_length: Option<f64>,
    pub gamma_q: Option<f64>,
}

/// Evaluates one point of a sweep.
pub fn report_at(
    template: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
    opts: &SweepOptions,
) -> Result<GateReport> {
    let mut cfg = template.clone();
    match axis {
        SweepAxis::Confinement => cfg.confinement_f = value,
        SweepAxis::BeamArea => cfg.beam_area_A = value,
        SweepAxis::ScatteringLength => cfg.scattering_length_a_pm = value,
        SweepAxis::GroupVelocity => {}
    }
    cfg.validate()?;
    let medium = match axis {
        SweepAxis::GroupVelocity => EitMedium::with_group_velocity(&cfg, value)?,
        _ => EitMedium::from_config(&cfg)?,
    };
    GateReport::new(&cfg, &medium, opts.pulse_length, opts.gamma_q)
}

/// `samples` evenly spaced points on [lo, hi], plus the dphi = pi crossing.
/// Crossings are interpolated in f^3, 1/v_gr, 1/A or a_pm, in which dphi is
/// linear, so the located value is exact up to rounding.
pub fn sweep(
    template: &ExperimentConfig,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    samples: usize,
    opts: &SweepOptions,
) -> Result<SweepTable> {
    if samples < 2 {
        return Err(Error::InvalidSweep(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite()) || !(hi > lo) {
        return Err(Error::InvalidSweep(format!("empty range {lo}:{hi}")));
    }
    if axis != SweepAxis::ScatteringLength && !(lo > 0.0) {
        return Err(Error::InvalidSweep(format!(
            "{axis} range must be positive"
        )));
    }
    let values: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let points = values
        .par_iter()
        .map(|&v| report_at(template, axis, v, opts).map(|report| SweepPoint { value: v, report }))
        .collect::<Result<Vec<_>>>()?;

    let mut crossing = None;
    for pair in points.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (da, db) = (a.report.delta_phi - PI, b.report.delta_phi - PI);
        if da == 0.0 || da.signum() != db.signum() {
            let (ua, ub) = (axis.linearize(a.value), axis.linearize(b.value));
            let u = if da == db {
                ua
            } else {
                ua + (ub - ua) * (-da) / (db - da)
            };
            let value = axis.delinearize(u);
            crossing = Some(SweepPoint {
                value,
                report: report_at(template, axis, value, opts)?,
            });
            break;
        }
    }
    Ok(SweepTable {
        axis,
        samples: points,
        crossing,
    })
}
