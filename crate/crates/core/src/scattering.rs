//! Two-particle wave function w(R, xi, t) of a counter-propagating polariton
//! pair, evolved under
//!
//! ```text
//! (d/dt + 2 v_gr d/dxi) w = -2 i K delta(xi) w,   K = a_pm lambda v_rec f^3 / A
//! ```
//!
//! by exact characteristics and by a regularized first-order upwind scheme.
//! R enters only as a label, so every R-row evolves independently.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::EitMedium;
use crate::error::{positive, Error, Result};

/// Norm fraction allowed to be advected across a grid edge.
pub const SUPPORT_TOLERANCE: f64 = 1e-6;
/// Required norm fraction in xi > 0 before a phase is extracted.
pub const TRANSMITTED_FRACTION: f64 = 0.999;
/// Points below this fraction of the peak modulus are ignored in phase maps.
pub const PHASE_THRESHOLD: f64 = 1e-3;

/// Uniform grid `start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// `len` points from `start` to `end` inclusive.
    pub fn spanning(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need len >= 2 and start < end (got {len} points on [{start}, {end}])"
            )));
        }
        Ok(Self {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    fn validate(&self) -> Result<()> {
        if self.len < 2 || !(self.step > 0.0) || !self.step.is_finite() || !self.start.is_finite() {
            return Err(Error::InvalidGrid(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Linear interpolation of uniformly sampled data, zero outside the samples.
/// Positions within 1e-9 cells of a node return the node value exactly.
fn interpolate(values: &[Complex64], grid: &UniformGrid, x: f64) -> Complex64 {
    let p = (x - grid.start) / grid.step;
    let nearest = p.round();
    if (p - nearest).abs() < 1e-9 {
        return if nearest >= 0.0 && (nearest as usize) < values.len() {
            values[nearest as usize]
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    if p < 0.0 || p > (values.len() - 1) as f64 {
        return Complex64::new(0.0, 0.0);
    }
    let i = p.floor() as usize;
    let frac = p - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// w sampled on an (R, xi) grid; `amplitude[[r, j]]` is w(R_r, xi_j).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleWave {
    pub grid_r: UniformGrid,
    pub grid_xi: UniformGrid,
    pub amplitude: Array2<Complex64>,
    pub t: f64,
}

impl TwoParticleWave {
    pub fn zeros(grid_r: UniformGrid, grid_xi: UniformGrid, t: f64) -> Self {
        Self {
            grid_r,
            grid_xi,
            amplitude: Array2::zeros((grid_r.len, grid_xi.len)),
            t,
        }
    }

    /// Discrete norm sum |w|^2 dR dxi.
    pub fn norm(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>()
            * self.grid_r.step
            * self.grid_xi.step
    }

    /// Norm-weighted mean of R.
    pub fn mean_r(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (r, row) in self.amplitude.axis_iter(Axis(0)).enumerate() {
            let m: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            num += self.grid_r.point(r) * m;
            den += m;
        }
        num / den
    }

    pub fn peak(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Fraction of the norm at xi > 0 (half weight exactly at xi = 0).
    pub fn transmitted_fraction(&self) -> f64 {
        let mut pos = 0.0;
        let mut tot = 0.0;
        for row in self.amplitude.axis_iter(Axis(0)) {
            for (j, z) in row.iter().enumerate() {
                let m = z.norm_sqr();
                tot += m;
                pos += heaviside(self.grid_xi.point(j)) * m;
            }
        }
        pos / tot
    }

    /// Norm fraction within `cells` grid points of either xi edge.
    pub fn edge_fraction(&self, cells: usize) -> f64 {
        let n = self.grid_xi.len;
        let cells = cells.min(n / 2);
        let mut edge = 0.0;
        let mut tot = 0.0;
        for row in self.amplitude.axis_iter(Axis(0)) {
            for (j, z) in row.iter().enumerate() {
                let m = z.norm_sqr();
                tot += m;
                if j < cells || j >= n - cells {
                    edge += m;
                }
            }
        }
        edge / tot
    }

    /// w(R_r, xi) by linear interpolation along xi.
    pub fn value_at(&self, r: usize, xi: f64) -> Complex64 {
        let row = self.amplitude.row(r);
        interpolate(row.as_slice().expect("standard layout"), &self.grid_xi, xi)
    }

    /// sqrt of sum |a - b|^2 dR dxi; grids must match.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.amplitude.dim(), other.amplitude.dim());
        let s: f64 = self
            .amplitude
            .iter()
            .zip(other.amplitude.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid_r.step * self.grid_xi.step).sqrt()
    }

    /// Grid data moved `shift` along xi: how much of the norm would land
    /// beyond the far edge.
    fn outflow_fraction(&self, shift: f64) -> f64 {
        let edge = self.grid_xi.end();
        let mut out = 0.0;
        let mut tot = 0.0;
        for row in self.amplitude.axis_iter(Axis(0)) {
            for (j, z) in row.iter().enumerate() {
                let m = z.norm_sqr();
                tot += m;
                if self.grid_xi.point(j) + shift > edge + 1e-9 * self.grid_xi.step {
                    out += m;
                }
            }
        }
        if tot == 0.0 {
            0.0
        } else {
            out / tot
        }
    }
}

/// Single-polariton envelope along z, unit L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseShape {
    /// `rms_width` is the rms width of |phi|^2.
    Gaussian { center: f64, rms_width: f64 },
    /// Samples `values[i]` at `start + i * step`, renormalized on load.
    Sampled {
        start: f64,
        step: f64,
        values: Vec<Complex64>,
    },
}

impl PulseShape {
    fn validate(&self) -> Result<()> {
        match self {
            PulseShape::Gaussian { center, rms_width } => {
                if !center.is_finite() {
                    return Err(Error::InvalidConfig("pulse center must be finite".into()));
                }
                positive("rms_width", *rms_width)?;
            }
            PulseShape::Sampled {
                start,
                step,
                values,
            } => {
                positive("step", *step)?;
                if !start.is_finite() || values.len() < 2 || self.sampled_norm() == 0.0 {
                    return Err(Error::InvalidConfig(
                        "sampled pulse needs at least two samples and nonzero norm".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn sampled_norm(&self) -> f64 {
        match self {
            PulseShape::Sampled { step, values, .. } => {
                values.iter().map(|v| v.norm_sqr()).sum::<f64>() * step
            }
            PulseShape::Gaussian { .. } => 1.0,
        }
    }

    pub fn eval(&self, z: f64) -> Complex64 {
        match self {
            PulseShape::Gaussian { center, rms_width } => {
                let s2 = rms_width * rms_width;
                let x = z - center;
                Complex64::new(
                    (2.0 * PI * s2).powf(-0.25) * (-x * x / (4.0 * s2)).exp(),
                    0.0,
                )
            }
            PulseShape::Sampled {
                start,
                step,
                values,
            } => {
                let grid = UniformGrid {
                    start: *start,
                    step: *step,
                    len: values.len(),
                };
                interpolate(values, &grid, z) / self.sampled_norm().sqrt()
            }
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            PulseShape::Gaussian { center, .. } => *center,
            PulseShape::Sampled { .. } => self.moments().0,
        }
    }

    pub fn rms_width(&self) -> f64 {
        match self {
            PulseShape::Gaussian { rms_width, .. } => *rms_width,
            PulseShape::Sampled { .. } => self.moments().1,
        }
    }

    fn moments(&self) -> (f64, f64) {
        let PulseShape::Sampled {
            start,
            step,
            values,
        } = self
        else {
            unreachable!()
        };
        let w: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .map(|(i, v)| (start + i as f64 * step, v.norm_sqr()))
            .collect();
        let tot: f64 = w.iter().map(|p| p.1).sum();
        let mean = w.iter().map(|p| p.0 * p.1).sum::<f64>() / tot;
        let var = w.iter().map(|p| (p.0 - mean).powi(2) * p.1).sum::<f64>() / tot;
        (mean, var.sqrt())
    }
}

/// Product state w(z, z', 0) = phi_plus(z) phi_minus(z'), with the +z mover
/// starting to the left so that the pair approaches (xi < 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub plus: PulseShape,
    pub minus: PulseShape,
}

impl InitialCondition {
    /// Two Gaussians of rms width `sigma` placed at -+ `separation`/2.
    pub fn gaussian_pair(sigma: f64, separation: f64) -> Self {
        Self {
            plus: PulseShape::Gaussian {
                center: -0.5 * separation,
                rms_width: sigma,
            },
            minus: PulseShape::Gaussian {
                center: 0.5 * separation,
                rms_width: sigma,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plus.validate()?;
        self.minus.validate()?;
        if self.plus.center() >= self.minus.center() {
            return Err(Error::InvalidConfig(
                "the + polariton must start at smaller z than the - polariton (xi < 0)".into(),
            ));
        }
        Ok(())
    }

    /// w at center-of-mass R and separation xi = z - z'.
    pub fn eval(&self, r: f64, xi: f64) -> Complex64 {
        self.plus.eval(r + 0.5 * xi) * self.minus.eval(r - 0.5 * xi)
    }

    pub fn envelope_width(&self) -> f64 {
        self.plus.rms_width().max(self.minus.rms_width())
    }

    /// Default grids: xi in [-20 s, 20 s] with 2048 points and R in
    /// [R0 - 5 s, R0 + 5 s] with 64 points, s the larger envelope width.
    pub fn default_grids(&self) -> Result<(UniformGrid, UniformGrid)> {
        self.grids(64, 2048)
    }

    pub fn grids(&self, r_points: usize, xi_points: usize) -> Result<(UniformGrid, UniformGrid)> {
        let s = self.envelope_width();
        let r0 = 0.5 * (self.plus.center() + self.minus.center());
        Ok((
            UniformGrid::spanning(r0 - 5.0 * s, r0 + 5.0 * s, r_points)?,
            UniformGrid::spanning(-20.0 * s, 20.0 * s, xi_points)?,
        ))
    }

    /// Time at which the pair centre has moved from xi0 to -xi0.
    pub fn crossing_time(&self, v_gr: f64) -> f64 {
        (self.minus.center() - self.plus.center()) / v_gr
    }

    pub fn sample(&self, grid_r: UniformGrid, grid_xi: UniformGrid) -> Result<TwoParticleWave> {
        self.validate()?;
        grid_r.validate()?;
        grid_xi.validate()?;
        let amplitude = Array2::from_shape_fn((grid_r.len, grid_xi.len), |(r, j)| {
            self.eval(grid_r.point(r), grid_xi.point(j))
        });
        Ok(TwoParticleWave {
            grid_r,
            grid_xi,
            amplitude,
            t: 0.0,
        })
    }
}

/// Pair interaction seen by the two-particle equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCoupling {
    pub v_gr: f64,
    /// K = a_pm lambda v_rec f^3 / A, half the cross coefficient of the
    /// polariton equation (m/s).
    pub strength: f64,
}

impl PairCoupling {
    pub fn from_medium(medium: &EitMedium) -> Self {
        Self {
            v_gr: medium.v_gr,
            strength: 0.5 * medium.kappa_cross,
        }
    }

    /// Coupling that produces a prescribed collision phase.
    pub fn with_phase(v_gr: f64, delta_phi: f64) -> Self {
        Self {
            v_gr,
            strength: delta_phi * v_gr,
        }
    }

    /// Phase acquired crossing xi = 0 at speed 2 v_gr under 2 K delta(xi).
    pub fn delta_phi(&self) -> f64 {
        2.0 * self.strength / (2.0 * self.v_gr)
    }

    fn validate(&self) -> Result<()> {
        positive("v_gr", self.v_gr)?;
        if !self.strength.is_finite() {
            return Err(Error::NonFinite {
                field: "coupling strength",
                value: self.strength,
            });
        }
        Ok(())
    }
}

/// Heaviside step with Theta(0) = 1/2.
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

fn collision_factor(delta_phi: f64, xi: f64) -> Complex64 {
    Complex64::from_polar(1.0, -delta_phi * heaviside(xi))
}

fn elapsed(w0: &TwoParticleWave, t: f64) -> Result<f64> {
    let dt = t - w0.t;
    if !(dt >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "target time {t} precedes the initial time {}",
            w0.t
        )));
    }
    Ok(dt)
}

fn check_support(w0: &TwoParticleWave, shift: f64) -> Result<()> {
    let fraction = w0.outflow_fraction(shift);
    if fraction > SUPPORT_TOLERANCE {
        return Err(Error::SupportLeavesGrid {
            fraction,
            edge: w0.grid_xi.end(),
        });
    }
    Ok(())
}

/// Exact solution w(R, xi, t) = w0(R, xi - 2 v_gr t) exp(-i dphi Theta(xi))
/// for incoming initial data. Off-node samples of `w0` are interpolated
/// linearly; shifts commensurate with the grid are exact. Zero elapsed time
/// returns `w0` unchanged, including any tail already at xi > 0.
pub fn evolve_characteristics(
    w0: &TwoParticleWave,
    coupling: &PairCoupling,
    t: f64,
) -> Result<TwoParticleWave> {
    coupling.validate()?;
    let dt = elapsed(w0, t)?;
    if dt == 0.0 {
        return Ok(w0.clone());
    }
    let shift = 2.0 * coupling.v_gr * dt;
    check_support(w0, shift)?;
    let dphi = coupling.delta_phi();
    let g = w0.grid_xi;
    let amplitude = Array2::from_shape_fn(w0.amplitude.dim(), |(r, j)| {
        let xi = g.point(j);
        w0.value_at(r, xi - shift) * collision_factor(dphi, xi)
    });
    Ok(TwoParticleWave {
        amplitude,
        t,
        ..*w0
    })
}

/// Same as [`evolve_characteristics`] but evaluates the analytic initial
/// condition at the translated points, with no interpolation.
pub fn evolve_characteristics_exact(
    initial: &InitialCondition,
    grid_r: UniformGrid,
    grid_xi: UniformGrid,
    coupling: &PairCoupling,
    t: f64,
) -> Result<TwoParticleWave> {
    coupling.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "evolution time {t} must be >= 0"
        )));
    }
    let w0 = initial.sample(grid_r, grid_xi)?;
    if t == 0.0 {
        return Ok(w0);
    }
    let shift = 2.0 * coupling.v_gr * t;
    check_support(&w0, shift)?;
    let dphi = coupling.delta_phi();
    let amplitude = Array2::from_shape_fn(w0.amplitude.dim(), |(r, j)| {
        let xi = grid_xi.point(j);
        initial.eval(grid_r.point(r), xi - shift) * collision_factor(dphi, xi)
    });
    Ok(TwoParticleWave { amplitude, t, ..w0 })
}

/// Unit-mass Gaussian of rms width `epsilon`.
pub fn regularized_delta(xi: f64, epsilon: f64) -> f64 {
    (-0.5 * (xi / epsilon).powi(2)).exp() / ((2.0 * PI).sqrt() * epsilon)
}

/// Upwind scheme settings. The time step is chosen so that an integer
/// number of steps reaches the target time with courant number
/// 2 v_gr dt / dxi no larger than `courant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSettings {
    pub courant: f64,
    /// Width of the regularized delta (m).
    pub epsilon: f64,
}

/// Courant number used unless overridden. Upwind damping scales with
/// (1 - courant), both on the envelope and on the phase step across the
/// regularized delta; this keeps the norm loss of a default-grid crossing
/// at dphi ~ 1 below 1e-3.
pub const DEFAULT_COURANT: f64 = 0.998;

impl FdSettings {
    /// epsilon = max(3 dxi, envelope_width / 50).
    pub fn with_default_epsilon(dxi: f64, envelope_width: f64) -> Self {
        Self {
            courant: DEFAULT_COURANT,
            epsilon: (3.0 * dxi).max(envelope_width / 50.0),
        }
    }
}

/// Upwind evolution to absolute time `t`.
pub fn evolve_fd(
    w0: &TwoParticleWave,
    coupling: &PairCoupling,
    t: f64,
    settings: &FdSettings,
) -> Result<TwoParticleWave> {
    coupling.validate()?;
    positive("courant", settings.courant)?;
    if settings.courant > 1.0 {
        return Err(Error::CflViolation {
            courant: settings.courant,
        });
    }
    let span = elapsed(w0, t)?;
    let travel = 2.0 * coupling.v_gr * span;
    let steps = (travel / (settings.courant * w0.grid_xi.step) * (1.0 - 1e-12)).ceil() as usize;
    if steps == 0 {
        return Ok(TwoParticleWave { t, ..w0.clone() });
    }
    let dt = span / steps as f64;
    let mut out = evolve_fd_steps(w0, coupling, dt, steps, settings.epsilon)?;
    out.t = t;
    Ok(out)
}

/// `steps` upwind steps of size `dt`, each followed by the exact local phase
/// kick exp(-2 i K dt delta_eps(xi)). Zero inflow at the left edge.
pub fn evolve_fd_steps(
    w0: &TwoParticleWave,
    coupling: &PairCoupling,
    dt: f64,
    steps: usize,
    epsilon: f64,
) -> Result<TwoParticleWave> {
    coupling.validate()?;
    positive("dt", dt)?;
    let dxi = w0.grid_xi.step;
    let nu = 2.0 * coupling.v_gr * dt / dxi;
    if nu > 1.0 + 1e-12 {
        return Err(Error::CflViolation { courant: nu });
    }
    if !(epsilon >= 3.0 * dxi * (1.0 - 1e-12)) {
        return Err(Error::UnderResolvedDelta {
            epsilon,
            min: 3.0 * dxi,
        });
    }
    check_support(w0, 2.0 * coupling.v_gr * dt * steps as f64)?;

    let kick: Vec<Complex64> = w0
        .grid_xi
        .points()
        .map(|xi| {
            Complex64::from_polar(
                1.0,
                -2.0 * coupling.strength * dt * regularized_delta(xi, epsilon),
            )
        })
        .collect();

    let mut out = w0.clone();
    out.amplitude
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each(|mut row| {
            let w = row.as_slice_mut().expect("standard layout");
            for _ in 0..steps {
                for i in (1..w.len()).rev() {
                    w[i] = w[i] * (1.0 - nu) + w[i - 1] * nu;
                }
                w[0] *= 1.0 - nu;
                for (z, k) in w.iter_mut().zip(&kick) {
                    *z *= k;
                }
            }
        });
    out.t = w0.t + dt * steps as f64;
    Ok(out)
}

/// exp(-2 gamma_q sin^2(theta) t): amplitude decay of the pair when each
/// polariton's matter part dephases at rate gamma_q.
pub fn dephasing_factor(gamma_q: f64, matter_fraction: f64, elapsed: f64) -> Result<f64> {
    if !(gamma_q >= 0.0) {
        return Err(Error::NegativeRate(gamma_q));
    }
    Ok((-2.0 * gamma_q * matter_fraction * elapsed).exp())
}

pub fn apply_dephasing(
    w: &TwoParticleWave,
    medium: &EitMedium,
    gamma_q: f64,
    elapsed: f64,
) -> Result<TwoParticleWave> {
    let f = dephasing_factor(gamma_q, medium.matter_fraction(), elapsed)?;
    let mut out = w.clone();
    out.amplitude.mapv_inplace(|z| z * f);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMeasurement {
    /// Collision phase dphi, defined by w_final = w_initial(shifted) e^{-i dphi};
    /// in (-pi, pi].
    pub delta_phi: f64,
    /// Circular standard deviation of the pointwise phase.
    pub homogeneity: f64,
    pub transmitted_fraction: f64,
    /// Norm fraction of the final wave that entered the average.
    pub weight_fraction: f64,
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

pub fn extract_phase(
    w_initial: &TwoParticleWave,
    w_final: &TwoParticleWave,
    v_gr: f64,
    t: f64,
) -> Result<PhaseMeasurement> {
    positive("v_gr", v_gr)?;
    if w_initial.amplitude.dim() != w_final.amplitude.dim() {
        return Err(Error::InvalidGrid("initial and final grids differ".into()));
    }
    let transmitted = w_final.transmitted_fraction();
    if !(transmitted >= TRANSMITTED_FRACTION) {
        return Err(Error::NotTransmitted { transmitted });
    }
    let shift = 2.0 * v_gr * (t - w_initial.t);
    let floor_f = PHASE_THRESHOLD * w_final.peak();
    let floor_i = PHASE_THRESHOLD * w_initial.peak();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut weight = 0.0;
    let mut total = 0.0;
    for r in 0..w_final.grid_r.len {
        for j in 0..w_final.grid_xi.len {
            let f = w_final.amplitude[[r, j]];
            let m = f.norm_sqr();
            total += m;
            let i0 = w_initial.value_at(r, w_final.grid_xi.point(j) - shift);
            if f.norm() > floor_f && i0.norm() > floor_i {
                let z = f * i0.conj();
                sum += z / z.norm() * m;
                weight += m;
            }
        }
    }
    let weight_fraction = if total > 0.0 { weight / total } else { 0.0 };
    if weight_fraction < 0.5 {
        return Err(Error::InsufficientOverlap {
            weight: weight_fraction,
        });
    }
    let resultant = (sum.norm() / weight).min(1.0);
    Ok(PhaseMeasurement {
        delta_phi: wrap_angle(-sum.arg()),
        homogeneity: if resultant < 1.0 {
            (-2.0 * resultant.ln()).sqrt()
        } else {
            0.0
        },
        transmitted_fraction: transmitted,
        weight_fraction,
    })
}

/// One grid of an FD refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub xi_points: usize,
    pub dxi: f64,
    pub courant: f64,
    /// L2 distance to the characteristics solution, relative to its norm.
    pub l2_error: f64,
    pub delta_phi: f64,
    pub homogeneity: f64,
    /// 1 - final norm / initial norm.
    pub norm_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub t: f64,
    pub epsilon: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log(l2_error) against log(dxi).
    pub order: f64,
}

/// Full-crossing FD runs on nested xi grids, compared with the exact
/// characteristics solution.
///
/// `xi_points[k] - 1` must be a multiple of `xi_points[0] - 1` so that the
/// grids nest. The final time is rounded to a whole number of coarse cells
/// of travel, dt / dxi is identical on every grid, and `epsilon` (default
/// `max(3 dxi, width / 50)` on the coarsest grid) is held fixed.
pub fn fd_convergence(
    initial: &InitialCondition,
    coupling: &PairCoupling,
    r_points: usize,
    xi_points: &[usize],
    courant: f64,
    epsilon: Option<f64>,
) -> Result<ConvergenceStudy> {
    coupling.validate()?;
    positive("courant", courant)?;
    if xi_points.len() < 2 {
        return Err(Error::InvalidGrid(
            "refinement ladder needs at least two grids".into(),
        ));
    }
    let base = xi_points[0];
    if base < 2
        || xi_points
            .iter()
            .any(|&n| n < base || (n - 1) % (base - 1) != 0)
    {
        return Err(Error::InvalidGrid(format!(
            "xi point counts {xi_points:?} do not nest"
        )));
    }
    let (_, coarse) = initial.grids(r_points, base)?;
    let cells = (2.0 * coupling.v_gr * initial.crossing_time(coupling.v_gr) / coarse.step).round();
    let t = cells * coarse.step / (2.0 * coupling.v_gr);
    let epsilon = epsilon.unwrap_or_else(|| {
        FdSettings::with_default_epsilon(coarse.step, initial.envelope_width()).epsilon
    });

    let coarse_steps = (cells / courant).ceil();
    let mut rows = Vec::with_capacity(xi_points.len());
    for &n in xi_points {
        let (grid_r, grid_xi) = initial.grids(r_points, n)?;
        let w0 = initial.sample(grid_r, grid_xi)?;
        let refine = ((n - 1) / (base - 1)) as f64;
        let travel = cells * refine;
        let steps = (coarse_steps * refine) as usize;
        let fd = evolve_fd_steps(&w0, coupling, t / steps as f64, steps, epsilon)?;
        let exact = evolve_characteristics_exact(initial, grid_r, grid_xi, coupling, t)?;
        let m = extract_phase(&w0, &fd, coupling.v_gr, t)?;
        rows.push(ConvergenceRow {
            xi_points: n,
            dxi: grid_xi.step,
            courant: travel / steps as f64,
            l2_error: fd.l2_distance(&exact) / exact.norm().sqrt(),
            delta_phi: m.delta_phi,
            homogeneity: m.homogeneity,
            norm_loss: 1.0 - fd.norm() / w0.norm(),
        });
    }
    let dx: Vec<f64> = rows.iter().map(|r| r.dxi).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    Ok(ConvergenceStudy {
        t,
        epsilon,
        order: crate::site_dynamics::log_slope(&dx, &err),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA: f64 = 2e-6;
    const V: f64 = 0.1;

    fn ic() -> InitialCondition {
        InitialCondition::gaussian_pair(SIGMA, 12.0 * SIGMA)
    }

    fn small_grids() -> (UniformGrid, UniformGrid) {
        ic().grids(16, 1024).unwrap()
    }

    #[test]
    fn gaussian_envelope_is_normalized() {
        let p = PulseShape::Gaussian {
            center: 1e-6,
            rms_width: SIGMA,
        };
        let g = UniformGrid::spanning(-30.0 * SIGMA, 30.0 * SIGMA, 6001).unwrap();
        let n: f64 = g.points().map(|z| p.eval(z).norm_sqr()).sum::<f64>() * g.step;
        assert!((n - 1.0).abs() < 1e-12);
        let var: f64 = g
            .points()
            .map(|z| (z - 1e-6).powi(2) * p.eval(z).norm_sqr())
            .sum::<f64>()
            * g.step;
        assert!((var.sqrt() / SIGMA - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_envelope_matches_gaussian() {
        let g = UniformGrid::spanning(-10.0 * SIGMA, 10.0 * SIGMA, 801).unwrap();
        let gauss = PulseShape::Gaussian {
            center: 0.0,
            rms_width: SIGMA,
        };
        let values: Vec<Complex64> = g.points().map(|z| gauss.eval(z) * 3.0).collect();
        let s = PulseShape::Sampled {
            start: g.start,
            step: g.step,
            values,
        };
        s.validate().unwrap();
        assert!((s.rms_width() / SIGMA - 1.0).abs() < 1e-9);
        assert!(
            (s.eval(0.3 * SIGMA) - gauss.eval(0.3 * SIGMA)).norm() < 1e-3 * gauss.eval(0.0).norm()
        );
        assert!(
            (s.eval(g.point(17)) - gauss.eval(g.point(17))).norm() < 1e-12 * gauss.eval(0.0).norm()
        );
    }

    #[test]
    fn initial_condition_must_approach() {
        let mut bad = ic();
        std::mem::swap(&mut bad.plus, &mut bad.minus);
        assert!(bad.validate().is_err());
        ic().validate().unwrap();
    }

    #[test]
    fn characteristics_identity_at_t0_and_free_translation() {
        let (gr, gx) = small_grids();
        let w0 = ic().sample(gr, gx).unwrap();
        let c = PairCoupling::with_phase(V, 1.3);
        assert_eq!(evolve_characteristics(&w0, &c, 0.0).unwrap(), w0);
        assert_eq!(
            evolve_characteristics_exact(&ic(), gr, gx, &c, 0.0).unwrap(),
            w0
        );
        // just after t = 0 the collision factor acts on the incoming tail at
        // xi > 0, which is below 1e-8 of the peak
        let soon = evolve_characteristics(&w0, &c, 1e-12).unwrap();
        let free_soon =
            evolve_characteristics(&w0, &PairCoupling::with_phase(V, 0.0), 1e-12).unwrap();
        let jump = soon.l2_distance(&free_soon) / w0.norm().sqrt();
        assert!(jump > 0.0 && jump < 1e-7, "{jump}");

        let free = PairCoupling::with_phase(V, 0.0);
        let cells = 37;
        let t = cells as f64 * gx.step / (2.0 * V);
        let w = evolve_characteristics(&w0, &free, t).unwrap();
        for r in 0..gr.len {
            for j in cells..gx.len {
                assert_eq!(w.amplitude[[r, j]], w0.amplitude[[r, j - cells]]);
            }
        }
    }

    #[test]
    fn characteristics_full_crossing_flips_sign_for_pi() {
        let (gr, gx) = small_grids();
        let ic = ic();
        let c = PairCoupling::with_phase(V, PI);
        let t = ic.crossing_time(V);
        let w = evolve_characteristics_exact(&ic, gr, gx, &c, t).unwrap();
        let peak = w.peak();
        for r in 0..gr.len {
            for j in 0..gx.len {
                let xi = gx.point(j);
                let expect = -ic.eval(gr.point(r), xi - 2.0 * V * t);
                if xi > 0.0 {
                    assert!((w.amplitude[[r, j]] - expect).norm() <= 1e-12 * peak);
                }
            }
        }
        assert!(w.transmitted_fraction() > 0.999);
    }

    #[test]
    fn characteristics_rejects_outflow() {
        let (gr, gx) = small_grids();
        let c = PairCoupling::with_phase(V, 1.0);
        let t = 3.0 * ic().crossing_time(V);
        assert!(matches!(
            evolve_characteristics_exact(&ic(), gr, gx, &c, t),
            Err(Error::SupportLeavesGrid { .. })
        ));
    }

    #[test]
    fn phase_convention_at_the_origin() {
        assert_eq!(heaviside(0.0), 0.5);
        let z = collision_factor(1.0, 0.0);
        assert!((z.arg() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn fd_without_interaction_is_pure_advection() {
        let (gr, gx) = small_grids();
        let w0 = ic().sample(gr, gx).unwrap();
        let c = PairCoupling::with_phase(V, 0.0);
        let cells = 200;
        let t = cells as f64 * gx.step / (2.0 * V);
        let exact = evolve_characteristics(&w0, &c, t).unwrap();
        let s = FdSettings::with_default_epsilon(gx.step, SIGMA);
        let fd = evolve_fd(&w0, &c, t, &s).unwrap();
        let rel = fd.l2_distance(&exact) / w0.norm().sqrt();
        assert!(rel < 1e-2, "{rel}");
        let mut s1 = s;
        s1.courant = 1.0;
        let shift = evolve_fd(&w0, &c, t, &s1).unwrap();
        assert!(shift.l2_distance(&exact) / w0.norm().sqrt() < 1e-13);
    }

    #[test]
    fn fd_constraints() {
        let (gr, gx) = small_grids();
        let w0 = ic().sample(gr, gx).unwrap();
        let c = PairCoupling::with_phase(V, 1.0);
        let bad = FdSettings {
            courant: 1.2,
            epsilon: 3.0 * gx.step,
        };
        assert!(matches!(
            evolve_fd(&w0, &c, 1e-5, &bad),
            Err(Error::CflViolation { .. })
        ));
        let bad = FdSettings {
            courant: 0.5,
            epsilon: 2.0 * gx.step,
        };
        assert!(matches!(
            evolve_fd(&w0, &c, 1e-5, &bad),
            Err(Error::UnderResolvedDelta { .. })
        ));
        assert!(matches!(
            evolve_fd_steps(&w0, &c, 2.0 * gx.step / (2.0 * V), 3, 3.0 * gx.step),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn regularized_delta_has_unit_mass_on_grid() {
        let g = UniformGrid::spanning(-1.0, 1.0, 2001).unwrap();
        for eps in [3.0 * g.step, 7.3 * g.step, 0.05] {
            let m: f64 = g.points().map(|x| regularized_delta(x, eps)).sum::<f64>() * g.step;
            assert!((m - 1.0).abs() < 1e-12, "{eps} {m}");
        }
    }

    #[test]
    fn dephasing_values() {
        assert_eq!(dephasing_factor(0.0, 1.0, 5.0).unwrap(), 1.0);
        assert!((dephasing_factor(0.5, 1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!(matches!(
            dephasing_factor(-1.0, 1.0, 1.0),
            Err(Error::NegativeRate(_))
        ));
    }

    #[test]
    fn extract_phase_on_constructed_solutions() {
        let (gr, gx) = small_grids();
        let ic = ic();
        let w0 = ic.sample(gr, gx).unwrap();
        let t = ic.crossing_time(V);
        for dphi in [PI, 1.25, -0.4] {
            let c = PairCoupling::with_phase(V, dphi);
            let w = evolve_characteristics_exact(&ic, gr, gx, &c, t).unwrap();
            let m = extract_phase(&w0, &w, V, t).unwrap();
            assert!((m.delta_phi - dphi).abs() < 1e-12, "{m:?}");
            assert!(m.homogeneity < 1e-6, "{m:?}");
        }
    }

    #[test]
    fn extract_phase_requires_transmission() {
        let (gr, gx) = small_grids();
        let ic = ic();
        let w0 = ic.sample(gr, gx).unwrap();
        let c = PairCoupling::with_phase(V, 1.0);
        let t = 0.5 * ic.crossing_time(V);
        let w = evolve_characteristics_exact(&ic, gr, gx, &c, t).unwrap();
        assert!(matches!(
            extract_phase(&w0, &w, V, t),
            Err(Error::NotTransmitted { .. })
        ));
    }

    #[test]
    fn extract_phase_requires_overlap() {
        let (gr, gx) = small_grids();
        let ic = ic();
        let w0 = ic.sample(gr, gx).unwrap();
        let t = ic.crossing_time(V);
        let w = evolve_characteristics_exact(&ic, gr, gx, &PairCoupling::with_phase(V, 1.0), t)
            .unwrap();
        // claim a much longer elapsed time: the translated initial data misses
        assert!(matches!(
            extract_phase(&w0, &w, V, 1.6 * t),
            Err(Error::InsufficientOverlap { .. })
        ));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
