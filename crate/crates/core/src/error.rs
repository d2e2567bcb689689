use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("`{field}` must be strictly positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },

    #[error("`{field}` must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },

    #[error(
        "lattice constant {lattice:e} m must be smaller than the probe wavelength {wavelength:e} m"
    )]
    LatticeNotSubwavelength { lattice: f64, wavelength: f64 },

    #[error("confinement factor f = {0} must be at least 1")]
    ConfinementBelowUnity(f64),

    #[error("atoms_per_site_N must be a positive integer")]
    EmptySites,

    #[error("optional field `{0}` is required for this operation")]
    MissingField(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("group velocity {v_gr:e} m/s must lie in (0, c]")]
    GroupVelocityOutOfRange { v_gr: f64 },

    #[error("integration step dt = {dt:e} s does not resolve 1/|Omega0|: need dt <= {max_dt:e} s")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("integration diverged: homogeneous energy drift {drift:e} over the run exceeds {limit:e}; reduce dt below {suggested_dt:e} s")]
    EnergyDrift {
        drift: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("CFL condition violated: courant number 2 v_gr dt/dxi = {courant} > 1; rerun with --courant 1 or smaller")]
    CflViolation { courant: f64 },

    #[error("delta regularization under-resolved: epsilon = {epsilon:e} m < 3 dxi = {min:e} m; rerun with --epsilon {min:e} or more --xi-points")]
    UnderResolvedDelta { epsilon: f64, min: f64 },

    #[error("wave support leaves the xi grid: {fraction:e} of the norm would be shifted past xi = {edge:e} m")]
    SupportLeavesGrid { fraction: f64, edge: f64 },

    #[error("support not fully transmitted: only {transmitted} of the norm lies in xi > 0 (need >= 0.999)")]
    NotTransmitted { transmitted: f64 },

    #[error(
        "insufficient overlap between final and translated initial wave ({weight} of the norm)"
    )]
    InsufficientOverlap { weight: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("negative dephasing rate {0}")]
    NegativeRate(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("manifest check failed: {0}")]
    ManifestMismatch(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NonPositive { .. }
            | NonFinite { .. }
            | LatticeNotSubwavelength { .. }
            | ConfinementBelowUnity(_)
            | EmptySites
            | MissingField(_)
            | InvalidConfig(_)
            | Json { .. }
            | InvalidSweep(_) => ErrorClass::Config,
            Io { .. } | ManifestMismatch(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }

    /// Short stable identifier, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            NonPositive { .. } => "non_positive",
            NonFinite { .. } => "non_finite",
            LatticeNotSubwavelength { .. } => "lattice_not_subwavelength",
            ConfinementBelowUnity(_) => "confinement_below_unity",
            EmptySites => "empty_sites",
            MissingField(_) => "missing_field",
            InvalidConfig(_) => "invalid_config",
            GroupVelocityOutOfRange { .. } => "group_velocity_out_of_range",
            StepTooLarge { .. } => "step_too_large",
            EnergyDrift { .. } => "energy_drift",
            EmptyTrajectory => "empty_trajectory",
            CflViolation { .. } => "cfl_violation",
            UnderResolvedDelta { .. } => "under_resolved_delta",
            SupportLeavesGrid { .. } => "support_leaves_grid",
            NotTransmitted { .. } => "not_transmitted",
            InsufficientOverlap { .. } => "insufficient_overlap",
            InvalidGrid(_) => "invalid_grid",
            InvalidSweep(_) => "invalid_sweep",
            NegativeRate(_) => "negative_rate",
            Io { .. } => "io",
            Json { .. } => "json",
            ManifestMismatch(_) => "manifest_mismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { field, value })
    }
}

pub(crate) fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { field, value })
    }
}
