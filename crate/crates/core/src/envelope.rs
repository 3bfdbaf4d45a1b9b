//! Exponentially weighted decay envelopes
//! `|ψ| ≲ exp(-F - ½ ln(ΔE + U - F'²/2m))`, their admissibility margin,
//! window-by-window checks against computed states, and tail fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::RadialModel;
use crate::solver::{Grid, Wavefunction};
use crate::specfun::{sqrt_integral, weight_f, weight_f_slope, RadialFunction, WeightParams};

/// Relative slack allowed when later windows are compared with the constant
/// fitted on the first one.
pub const WINDOW_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `F = μ r`.
    Linear { mu: f64 },
    /// `F = 2 b sqrt(r)`.
    Sqrt { b: f64 },
    /// `F = F_{a,b}(r)`.
    Ab { a: f64, b: f64 },
    /// `F = F_{a,b}(r) - K r^κ`.
    Ansatz { a: f64, b: f64, k: f64, kappa: f64 },
    /// `F = δ ∫_{r0}^r sqrt(U)` with `U` the model's repulsive tail.
    GeneralU { delta: f64, r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    #[serde(flatten)]
    pub kind: EnvelopeKind,
    pub region_r: f64,
}

impl EnvelopeSpec {
    pub fn new(kind: EnvelopeKind, region_r: f64) -> Self {
        Self { kind, region_r }
    }

    /// `region_r = max(2 well radii, 10 h)`.
    pub fn default_region(model: &RadialModel, grid: &Grid) -> f64 {
        (2.0 * model.well_radius).max(10.0 * grid.h())
    }

    pub fn validate(&self, model: &RadialModel) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        match self.kind {
            EnvelopeKind::Linear { mu } if !mu.is_finite() => return bad(format!("mu = {mu}")),
            EnvelopeKind::Sqrt { b } if !(b >= 0.0) => return bad(format!("need b >= 0, got {b}")),
            EnvelopeKind::Ab { a, b } => {
                WeightParams::new(a, b)?;
            }
            EnvelopeKind::Ansatz { a, b, k, kappa } => {
                WeightParams::new(a, b)?;
                if !(k > 0.0) {
                    return bad(format!("need K > 0, got {k}"));
                }
                if !(kappa > 0.0 && kappa < 0.5) {
                    return bad(format!("need kappa in (0, 1/2), got {kappa}"));
                }
            }
            EnvelopeKind::GeneralU { delta, r0 } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return bad(format!("need delta in (0, 1), got {delta}"));
                }
                if !(r0 >= 0.0) {
                    return bad(format!("need r0 >= 0, got {r0}"));
                }
            }
            _ => {}
        }
        if !(self.region_r >= model.well_radius) {
            return bad(format!(
                "region R = {} lies inside the well (radius {})",
                self.region_r, model.well_radius
            ));
        }
        Ok(())
    }

    /// `(F(r), F'(r))`.
    pub fn weight_and_slope(&self, model: &RadialModel, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("weight needs r > 0, got {r}")));
        }
        match self.kind {
            EnvelopeKind::GeneralU { delta, r0 } => {
                let u = model.repulsion();
                let integral = if r >= r0 {
                    sqrt_integral(&u, r0, r)?
                } else {
                    -sqrt_integral(&u, r, r0)?
                };
                Ok((delta * integral, delta * u.eval(r).max(0.0).sqrt()))
            }
            _ => self.closed_form(r),
        }
    }

    fn closed_form(&self, r: f64) -> Result<(f64, f64)> {
        match self.kind {
            EnvelopeKind::Linear { mu } => Ok((mu * r, mu)),
            EnvelopeKind::Sqrt { b } => Ok((2.0 * b * r.sqrt(), b / r.sqrt())),
            EnvelopeKind::Ab { a, b } => {
                let p = WeightParams::new(a, b)?;
                Ok((weight_f(p, r)?, weight_f_slope(p, r)?))
            }
            EnvelopeKind::Ansatz { a, b, k, kappa } => {
                let p = WeightParams::new(a, b)?;
                let rk = r.powf(kappa);
                Ok((
                    weight_f(p, r)? - k * rk,
                    weight_f_slope(p, r)? - k * kappa * rk / r,
                ))
            }
            EnvelopeKind::GeneralU { .. } => unreachable!("handled by weight_and_slope"),
        }
    }

    /// `(F, F')` at every radius in `radii` (ascending); the general weight is
    /// accumulated piece by piece instead of re-integrated from `r0`.
    pub fn weights_on(&self, model: &RadialModel, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
        let EnvelopeKind::GeneralU { delta, .. } = self.kind else {
            return radii
                .iter()
                .map(|&r| self.weight_and_slope(model, r))
                .collect();
        };
        let Some(&first) = radii.first() else {
            return Ok(Vec::new());
        };
        let u = model.repulsion();
        let mut out = Vec::with_capacity(radii.len());
        let mut f = self.weight_and_slope(model, first)?.0;
        let mut prev = first;
        for &r in radii {
            if r > prev {
                f += delta * sqrt_integral(&u, prev, r)?;
                prev = r;
            }
            out.push((f, delta * u.eval(r).max(0.0).sqrt()));
        }
        Ok(out)
    }
}

/// `ΔE + U(r) - F'(r)²/2m`.
fn condition_value(model: &RadialModel, binding: f64, r: f64, slope: f64) -> f64 {
    binding + model.repulsive_tail(r) - slope * slope / model.two_m
}

fn region_nodes(grid: &Grid, from: f64) -> Result<(usize, Vec<f64>)> {
    let start = grid
        .first_at_or_after(from)
        .ok_or(Error::EmptyRegion(from))?;
    Ok((start, (start..grid.len()).map(|i| grid.r(i)).collect()))
}

/// `min_{r_i >= R} [ΔE + U(r_i) - F'(r_i)²/2m]`; positive certifies the
/// envelope on the grid.
pub fn condition_margin(
    spec: &EnvelopeSpec,
    model: &RadialModel,
    binding: f64,
    grid: &Grid,
    region_r: f64,
) -> Result<f64> {
    Ok(margin_with_location(spec, model, binding, grid, region_r)?.0)
}

fn margin_with_location(
    spec: &EnvelopeSpec,
    model: &RadialModel,
    binding: f64,
    grid: &Grid,
    region_r: f64,
) -> Result<(f64, f64)> {
    if !(binding >= 0.0) {
        return Err(Error::Domain(format!(
            "binding energy must be >= 0, got {binding}"
        )));
    }
    let (_, radii) = region_nodes(grid, region_r)?;
    let mut worst = (f64::INFINITY, region_r);
    for &r in &radii {
        let slope = match spec.kind {
            EnvelopeKind::GeneralU { delta, .. } => delta * model.repulsive_tail(r).sqrt(),
            _ => spec.closed_form(r)?.1,
        };
        let m = condition_value(model, binding, r, slope);
        if m < worst.0 {
            worst = (m, r);
        }
    }
    Ok(worst)
}

fn log_envelope(model: &RadialModel, binding: f64, r: f64, (f, slope): (f64, f64)) -> Result<f64> {
    let arg = condition_value(model, binding, r, slope);
    if !(arg > 0.0) {
        return Err(Error::InadmissibleAt { r, margin: arg });
    }
    Ok(-f - 0.5 * arg.ln())
}

/// `-F(r) - ½ ln(ΔE + U(r) - F'(r)²/2m)`.
pub fn log_envelope_at(
    spec: &EnvelopeSpec,
    model: &RadialModel,
    binding: f64,
    r: f64,
) -> Result<f64> {
    let ws = spec.weight_and_slope(model, r)?;
    log_envelope(model, binding, r, ws)
}

pub fn envelope_at(spec: &EnvelopeSpec, model: &RadialModel, binding: f64, r: f64) -> Result<f64> {
    Ok(log_envelope_at(spec, model, binding, r)?.exp())
}

/// Dyadic windows `[2^k R, 2^{k+1} R]`, `k >= 1`, clipped to `r_max`.
fn dyadic_windows(region_r: f64, r_max: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = 2.0 * region_r;
    while lo < r_max {
        out.push((lo, (2.0 * lo).min(r_max)));
        lo *= 2.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperReport {
    pub margin: f64,
    /// `max |ψ| / envelope` on `[R, 2R]`.
    pub c_fit: f64,
    /// `max |ψ| / (C_fit envelope)` on each later dyadic window.
    pub window_ratios: Vec<f64>,
    pub verified: bool,
}

/// Envelope and `|ψ|` sampled from `R` outwards, in log form.
#[derive(Debug, Clone)]
pub struct EnvelopeCurve {
    pub radii: Vec<f64>,
    pub log_envelope: Vec<f64>,
    pub log_psi: Vec<f64>,
}

pub fn envelope_curve(
    wf: &Wavefunction,
    spec: &EnvelopeSpec,
    model: &RadialModel,
    binding: f64,
    region_r: f64,
) -> Result<EnvelopeCurve> {
    let (start, radii) = region_nodes(&wf.grid, region_r.max(wf.grid.h()))?;
    let weights = spec.weights_on(model, &radii)?;
    let log_envelope = radii
        .iter()
        .zip(&weights)
        .map(|(&r, &ws)| log_envelope(model, binding, r, ws))
        .collect::<Result<Vec<_>>>()?;
    let log_psi = (start..wf.grid.len())
        .map(|i| wf.psi(i).map_or(f64::NEG_INFINITY, |p| p.abs().ln()))
        .collect();
    Ok(EnvelopeCurve {
        radii,
        log_envelope,
        log_psi,
    })
}

/// Fits the envelope constant on `[R, 2R]` and checks that `|ψ|` stays
/// below `C_fit · envelope` (within [`WINDOW_TOLERANCE`]) on every later
/// dyadic window.
pub fn verify_upper(
    wf: &Wavefunction,
    spec: &EnvelopeSpec,
    model: &RadialModel,
    binding: f64,
    region_r: f64,
) -> Result<UpperReport> {
    let (margin, at) = margin_with_location(spec, model, binding, &wf.grid, region_r)?;
    if !(margin > 0.0) {
        return Err(Error::InadmissibleAt { r: at, margin });
    }
    let curve = envelope_curve(wf, spec, model, binding, region_r)?;
    let log_ratio: Vec<f64> = curve
        .log_psi
        .iter()
        .zip(&curve.log_envelope)
        .map(|(p, e)| p - e)
        .collect();
    let window_max = |lo: f64, hi: f64| {
        curve
            .radii
            .iter()
            .zip(&log_ratio)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let log_c = window_max(region_r, 2.0 * region_r);
    if !log_c.is_finite() {
        return Err(Error::EmptyRegion(region_r));
    }
    let window_ratios: Vec<f64> = dyadic_windows(region_r, wf.grid.r_max())
        .into_iter()
        .map(|(lo, hi)| (window_max(lo, hi) - log_c).exp())
        .collect();
    let verified = window_ratios.iter().all(|r| *r <= 1.0 + WINDOW_TOLERANCE);
    Ok(UpperReport {
        margin,
        c_fit: log_c.exp(),
        window_ratios,
        verified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerReport {
    /// `min ψ / lower` on `[R, 2R]`.
    pub c_low: f64,
    /// `min ψ / (c_low · lower)` on each later dyadic window.
    pub window_ratios: Vec<f64>,
    pub holds: bool,
}

/// Checks `ψ >= c_low · exp(log_lower(r))` on dyadic windows beyond `2R`,
/// with `c_low` fitted on `[R, 2R]`.
pub fn verify_lower_with<L: Fn(f64) -> f64>(
    wf: &Wavefunction,
    log_lower: L,
    region_r: f64,
) -> Result<LowerReport> {
    let (start, radii) = region_nodes(&wf.grid, region_r.max(wf.grid.h()))?;
    let mut log_ratio = Vec::with_capacity(radii.len());
    for (i, &r) in (start..wf.grid.len()).zip(&radii) {
        let psi = wf.psi(i).unwrap_or(0.0);
        if !(psi > 0.0) {
            return Err(Error::NonPositiveWavefunction(r));
        }
        log_ratio.push(psi.ln() - log_lower(r));
    }
    let window_min = |lo: f64, hi: f64| {
        radii
            .iter()
            .zip(&log_ratio)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    };
    let log_c = window_min(region_r, 2.0 * region_r);
    if !log_c.is_finite() {
        return Err(Error::EmptyRegion(region_r));
    }
    let window_ratios: Vec<f64> = dyadic_windows(region_r, wf.grid.r_max())
        .into_iter()
        .map(|(lo, hi)| (window_min(lo, hi) - log_c).exp())
        .collect();
    let holds = window_ratios.iter().all(|r| *r >= 1.0 - WINDOW_TOLERANCE);
    Ok(LowerReport {
        c_low: log_c.exp(),
        window_ratios,
        holds,
    })
}

/// Lower bound `exp(-2 sqrt(r) - K r^κ)` for the critical `1/r`-tail state.
pub fn verify_lower(wf: &Wavefunction, k: f64, kappa: f64, region_r: f64) -> Result<LowerReport> {
    if !(k > 0.0) || !(kappa > 0.0 && kappa < 0.5) {
        return Err(Error::Domain(format!(
            "need K > 0 and kappa in (0, 1/2), got K = {k}, kappa = {kappa}"
        )));
    }
    verify_lower_with(wf, |r| -2.0 * r.sqrt() - k * r.powf(kappa), region_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayForm {
    /// `-ln ψ = A sqrt(r) + p ln r + B`.
    Critical,
    /// `-ln ψ = A r + p ln r + B`.
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    #[serde(rename = "A")]
    pub a: f64,
    pub p: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub rms: f64,
}

impl DecayFit {
    /// `q` in `ψ ∝ r^q e^{-A ...}`.
    pub fn power_exponent(&self) -> f64 {
        -self.p
    }
}

/// `q` in `ψ ∝ r^q e^{-2 sqrt(r)}` for the 1D outer solution `sqrt(r) K1(2 sqrt(r))`.
pub const OUTER_1D_POWER: f64 = 0.25;
/// The same tail read as a 3D s-wave, `ψ = u / r`.
pub const SWAVE_3D_POWER: f64 = -0.75;

/// A fitted tail power set against the two candidate asymptotic forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerComparison {
    pub fitted: f64,
    pub outer_1d: f64,
    pub swave_3d: f64,
    pub closer: &'static str,
}

impl PowerComparison {
    pub fn new(fit: &DecayFit) -> Self {
        let q = fit.power_exponent();
        let closer = if (q - OUTER_1D_POWER).abs() <= (q - SWAVE_3D_POWER).abs() {
            "outer_1d"
        } else {
            "swave_3d"
        };
        Self {
            fitted: q,
            outer_1d: OUTER_1D_POWER,
            swave_3d: SWAVE_3D_POWER,
            closer,
        }
    }
}

/// Least-squares fit of `-ln ψ` over grid points in `window`.
pub fn extract_decay(wf: &Wavefunction, window: (f64, f64), form: DecayForm) -> Result<DecayFit> {
    let (r1, r2) = window;
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Domain(format!(
            "fit window must satisfy 0 < r1 < r2, got [{r1}, {r2}]"
        )));
    }
    let mut rows = Vec::new();
    for i in 0..wf.grid.len() {
        let r = wf.grid.r(i);
        if r < r1 || r > r2 {
            continue;
        }
        match wf.psi(i) {
            Some(p) if p > 0.0 => rows.push((r, -p.ln())),
            _ => return Err(Error::SignChangeInWindow(r)),
        }
    }
    if rows.len() < 3 {
        return Err(Error::EmptyRegion(r1));
    }
    let lead = |r: f64| match form {
        DecayForm::Critical => r.sqrt(),
        DecayForm::Subcritical => r,
    };
    // Columns scaled to unit size at r2 to keep the solve well conditioned.
    let (s_lead, s_log) = (lead(r2), r2.ln().abs().max(1.0));
    let design = DMatrix::from_fn(rows.len(), 3, |i, j| match j {
        0 => lead(rows[i].0) / s_lead,
        1 => rows[i].0.ln() / s_log,
        _ => 1.0,
    });
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|(_, y)| *y));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::Domain(format!("fit failed: {e}")))?;
    let resid = &target - &design * &coef;
    let rms = (resid.norm_squared() / rows.len() as f64).sqrt();
    Ok(DecayFit {
        a: coef[0] / s_lead,
        p: coef[1] / s_log,
        b: coef[2],
        rms,
    })
}
