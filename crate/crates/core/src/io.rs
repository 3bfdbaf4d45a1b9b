//! CSV/JSON exchange formats: wavefunction samples, critical results and
//! envelope reports.
//!
//! CSV numbers are written with 17 significant digits so doubles round-trip.

use std::io::{Read, Write};

use serde::Serialize;

use crate::envelope::{
    DecayFit, EnvelopeCurve, EnvelopeSpec, LowerReport, PowerComparison, UpperReport,
};
use crate::error::{Error, Result};
use crate::potentials::{RadialModel, Symmetry};
use crate::solver::{EigenResult, Grid, Wavefunction};
use crate::threshold::CriticalResult;

pub const WAVEFUNCTION_HEADER: &str = "r,u,psi,V";

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Domain(format!("csv: {e}"))
        }
    }
}

/// Writes `r,u,psi,V` for every `stride`-th grid point; `psi` is blank at
/// the origin for the s-wave.
pub fn write_wavefunction_csv<W: Write>(
    out: W,
    wf: &Wavefunction,
    model: &RadialModel,
    stride: usize,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{WAVEFUNCTION_HEADER}")?;
    for (i, u) in wf.values.iter().enumerate().step_by(stride.max(1)) {
        let r = wf.grid.r(i);
        let psi = wf.psi(i).map(fmt_f64).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r),
            fmt_f64(*u),
            psi,
            fmt_f64(model.potential_value(r))
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `r,u,psi,V` file back into a wavefunction on a uniform grid.
pub fn read_wavefunction_csv<R: Read>(input: R, symmetry: Symmetry) -> Result<Wavefunction> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = WAVEFUNCTION_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Domain(format!(
            "expected header {WAVEFUNCTION_HEADER}, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad number {:?}: {e}", &record[k])))
        };
        radii.push(field(0)?);
        values.push(field(1)?);
    }
    let n = radii.len();
    if n < 3 || radii[0] != 0.0 {
        return Err(Error::InvalidGrid(
            "wavefunction CSV must start at r = 0 with >= 3 rows".into(),
        ));
    }
    let grid = Grid::new(radii[n - 1], n)?;
    let misplaced = radii
        .iter()
        .enumerate()
        .find(|(i, r)| (**r - grid.r(*i)).abs() > 1e-9 * grid.r_max().max(1.0));
    if let Some((i, r)) = misplaced {
        return Err(Error::InvalidGrid(format!(
            "row {i}: r = {r} is off the uniform grid"
        )));
    }
    Wavefunction::new(grid, values, symmetry)
}

/// Writes `r,envelope,psi,ratio` with `ratio = |ψ| / (C_fit · envelope)`.
pub fn write_envelope_curve_csv<W: Write>(out: W, curve: &EnvelopeCurve, c_fit: f64) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "r,envelope,psi,ratio")?;
    let log_c = c_fit.ln();
    for ((r, le), lp) in curve
        .radii
        .iter()
        .zip(&curve.log_envelope)
        .zip(&curve.log_psi)
    {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(*r),
            fmt_f64(le.exp()),
            fmt_f64(lp.exp()),
            fmt_f64((lp - le - log_c).exp())
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `r,sqrt_r,neg_log_psi` for every point with `ψ > 0`; a
/// `exp(-A sqrt(r))` tail is a straight line in the last two columns.
pub fn write_scaled_csv<W: Write>(out: W, wf: &Wavefunction) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "r,sqrt_r,neg_log_psi")?;
    for i in 0..wf.grid.len() {
        let r = wf.grid.r(i);
        if let Some(psi) = wf.psi(i).filter(|p| *p > 0.0) {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(r),
                fmt_f64(r.sqrt()),
                fmt_f64(-psi.ln())
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRecord<'a> {
    pub model: &'a RadialModel,
    pub grid: Grid,
    pub energy: f64,
    pub binding: f64,
    pub nodes: usize,
    pub residual: f64,
    pub mean_radius: f64,
}

impl<'a> EigenRecord<'a> {
    pub fn new(model: &'a RadialModel, res: &EigenResult) -> Self {
        Self {
            model,
            grid: res.wavefunction.grid,
            energy: res.energy,
            binding: res.binding,
            nodes: res.nodes,
            residual: res.residual,
            mean_radius: res.wavefunction.mean_radius(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRecord {
    pub parameter: &'static str,
    pub value: f64,
    pub method: &'static str,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: f64,
}

impl From<&CriticalResult> for CriticalRecord {
    fn from(c: &CriticalResult) -> Self {
        Self {
            parameter: c.parameter.as_str(),
            value: c.value,
            method: match c.method {
                crate::threshold::Method::Matching => "matching",
                crate::threshold::Method::Bisection => "bisection",
            },
            bracket_lo: c.bracket.0,
            bracket_hi: c.bracket.1,
            residual: c.residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyRecord {
    pub parameter: &'static str,
    pub matching: f64,
    pub bisection: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub spec: EnvelopeSpec,
    pub binding: f64,
    pub margin: f64,
    #[serde(rename = "C_fit")]
    pub c_fit: f64,
    pub window_ratios: Vec<f64>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<LowerReport>,
}

impl EnvelopeReport {
    pub fn new(spec: EnvelopeSpec, binding: f64, upper: &UpperReport) -> Self {
        Self {
            spec,
            binding,
            margin: upper.margin,
            c_fit: upper.c_fit,
            window_ratios: upper.window_ratios.clone(),
            verified: upper.verified,
            fit: None,
            power: None,
            lower: None,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Domain(format!("json: {e}")))
}
