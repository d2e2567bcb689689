//! Deterministic text output: 12-significant-digit numbers, CSV tables for
//! snapshots, trajectories and sweeps, and rounded JSON.

use std::io::{self, Write};

use serde_json::Value;

use crate::gate::{SweepPoint, SweepTable};
use crate::scattering::{wrap_angle, TwoParticleWave};
use crate::site_dynamics::{ResidualPoint, SiteAmplitudes};

/// `x` in scientific notation with 12 significant digits and a signed,
/// at least two-digit exponent, e.g. `1.25000000000e+00`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // -0.0 prints as 0
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Rounds every float in a JSON document to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn to_json_string<T: serde::Serialize>(value: &T) -> String {
    let v = round_json(serde_json::to_value(value).expect("serializable"));
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub const SNAPSHOT_HEADER: &str = "t,R,xi,re_w,im_w,abs_w,phase_w";

pub fn write_snapshot<W: Write>(out: &mut W, w: &TwoParticleWave) -> io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    let t = fmt_num(w.t);
    for r in 0..w.grid_r.len {
        let rs = fmt_num(w.grid_r.point(r));
        for j in 0..w.grid_xi.len {
            let z = w.amplitude[[r, j]];
            writeln!(
                out,
                "{t},{rs},{},{},{},{},{}",
                fmt_num(w.grid_xi.point(j)),
                fmt_num(z.re),
                fmt_num(z.im),
                fmt_num(z.norm()),
                fmt_num(wrap_angle(z.arg())),
            )?;
        }
    }
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "t,re_e_plus,im_e_plus,re_e_minus,im_e_minus,re_q_plus,im_q_plus,re_q_minus,im_q_minus,q_residual,e_residual";

pub fn write_trajectory<W: Write>(
    out: &mut W,
    samples: &[SiteAmplitudes],
    residuals: &[ResidualPoint],
) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (s, r) in samples.iter().zip(residuals) {
        let cols = [
            s.t,
            s.e_plus.re,
            s.e_plus.im,
            s.e_minus.re,
            s.e_minus.im,
            s.q_plus.re,
            s.q_plus.im,
            s.q_minus.re,
            s.q_minus.im,
            r.q_residual,
            r.e_residual,
        ];
        let line: Vec<String> = cols.iter().map(|&x| fmt_num(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub const SWEEP_HEADER: &str = "kind,axis,value,delta_phi,interaction_time_T,v_gr,v_rec,theta,compression_ratio,phase_error,dephasing_amplitude_factor";

fn sweep_row<W: Write>(out: &mut W, kind: &str, axis: &str, p: &SweepPoint) -> io::Result<()> {
    let r = &p.report;
    let dephasing = r
        .dephasing_amplitude_factor
        .map(fmt_num)
        .unwrap_or_default();
    writeln!(
        out,
        "{kind},{axis},{},{},{},{},{},{},{},{},{dephasing}",
        fmt_num(p.value),
        fmt_num(r.delta_phi),
        fmt_num(r.interaction_time_T),
        fmt_num(r.v_gr),
        fmt_num(r.v_rec),
        fmt_num(r.theta),
        fmt_num(r.compression_ratio),
        fmt_num(r.phase_error),
    )
}

/// One `sample` row per point, then a `crossing` row when one was found.
pub fn write_sweep<W: Write>(out: &mut W, table: &SweepTable) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    let axis = table.axis.name();
    for p in &table.samples {
        sweep_row(out, "sample", axis, p)?;
    }
    if let Some(c) = &table.crossing {
        sweep_row(out, "crossing", axis, c)?;
    }
    Ok(())
}
