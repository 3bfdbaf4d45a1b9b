//! Critical coupling constants and zero-energy threshold states.
//!
//! At `E = 0` the model splits into a constant-potential well and an exterior
//! whose zero-energy solution is known in closed form (`sqrt(r) K1(2 sqrt(c r))`
//! for a `c/r` tail, `cosh` under a finite barrier). Criticality is the
//! vanishing of the log-derivative mismatch at the well edge. Independently,
//! the critical value can be bracketed by bisecting on bound-state existence
//! with the shooting solver.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{RadialModel, Symmetry, Tail};
use crate::solver::{has_bound_state, trapezoid, Discretization, Grid, Wavefunction};
use crate::specfun::bessel_k01_scaled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    WellDepth,
    TailStrength,
}

impl Parameter {
    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::WellDepth => "well_depth",
            Parameter::TailStrength => "tail_strength",
        }
    }

    pub fn get(self, model: &RadialModel) -> Result<f64> {
        match self {
            Parameter::WellDepth => Ok(model.well_depth),
            Parameter::TailStrength => model
                .tail_strength()
                .ok_or_else(|| Error::Unsupported("model has no tail to tune".into())),
        }
    }

    pub fn apply(self, model: &RadialModel, value: f64) -> Result<RadialModel> {
        match self {
            Parameter::WellDepth => Ok(RadialModel {
                well_depth: value,
                ..model.clone()
            }),
            Parameter::TailStrength => {
                if matches!(model.tail, Tail::None) {
                    return Err(Error::Unsupported("model has no tail to tune".into()));
                }
                Ok(model.clone().with_tail_strength(value))
            }
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Matching,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalResult {
    pub parameter: Parameter,
    pub value: f64,
    pub method: Method,
    pub bracket: (f64, f64),
    /// Matching: residual at `value`. Bisection: half-width of the final bracket.
    pub residual: f64,
}

const POLE_TOL: f64 = 1e-10;

/// Zero-energy log-derivative `u'/u` of the interior solution at the well
/// edge. `lambda` is the well depth already multiplied by `2m`.
pub fn inside_logderiv(lambda: f64, well_radius: f64, symmetry: Symmetry) -> Result<f64> {
    if !(lambda >= 0.0) || !(well_radius > 0.0) {
        return Err(Error::Domain(format!(
            "need lambda >= 0 and well radius > 0, got {lambda}, {well_radius}"
        )));
    }
    let k = lambda.sqrt();
    let x = k * well_radius;
    match symmetry {
        Symmetry::Even1d => {
            if x.cos().abs() < POLE_TOL {
                return Err(Error::Pole(x));
            }
            Ok(-k * x.tan())
        }
        Symmetry::Odd1d | Symmetry::Swave3d => {
            if lambda == 0.0 {
                return Ok(1.0 / well_radius);
            }
            if x.sin().abs() < POLE_TOL {
                return Err(Error::Pole(x));
            }
            Ok(k / x.tan())
        }
    }
}

/// Log-derivative at `well_radius` of the decaying zero-energy solution
/// `sqrt(r) K1(2 sqrt(c r))` of `u'' = (c / r) u`. `c` already includes `2m`.
pub fn outside_logderiv_coulomb(c: f64, well_radius: f64) -> Result<f64> {
    if !(c > 0.0) || !(well_radius > 0.0) {
        return Err(Error::Domain(format!(
            "need c > 0 and well radius > 0, got {c}, {well_radius}"
        )));
    }
    let t = 2.0 * (c * well_radius).sqrt();
    let (k0, k1) = bessel_k01_scaled(t)?;
    Ok(-(c / well_radius).sqrt() * k0 / k1)
}

/// Log-derivative at the well edge of the zero-energy solution that is flat
/// (`u' = 0`) at the outer barrier edge. `c` already includes `2m`.
pub fn outside_logderiv_barrier(c: f64, well_radius: f64, outer_radius: f64) -> Result<f64> {
    if !(c > 0.0) || !(outer_radius >= well_radius) {
        return Err(Error::Domain(format!(
            "need c > 0 and outer radius >= well radius, got {c}, {outer_radius}"
        )));
    }
    let q = c.sqrt();
    Ok(-q * (q * (outer_radius - well_radius)).tanh())
}

fn outside_logderiv(model: &RadialModel) -> Result<f64> {
    let two_m = model.two_m;
    match model.tail {
        Tail::Coulomb { strength, exponent } => {
            if exponent != 1.0 {
                return Err(Error::Unsupported(format!(
                    "matching needs a 1/r tail, got exponent {exponent}"
                )));
            }
            outside_logderiv_coulomb(two_m * strength, model.well_radius)
        }
        Tail::Barrier {
            height,
            outer_radius,
        } => outside_logderiv_barrier(two_m * height, model.well_radius, outer_radius),
        Tail::None => Ok(0.0),
    }
}

/// Interior minus exterior zero-energy log-derivative at the well edge.
/// Negative when the model binds below threshold.
pub fn matching_residual(model: &RadialModel) -> Result<f64> {
    model.checked()?;
    let outside = outside_logderiv(model)?;
    let inside = inside_logderiv(
        model.two_m * model.well_depth,
        model.well_radius,
        model.symmetry,
    )?;
    Ok(inside - outside)
}

fn check_bracket(bracket: (f64, f64)) -> Result<()> {
    if !(bracket.0 < bracket.1) || !bracket.0.is_finite() || !bracket.1.is_finite() {
        return Err(Error::Domain(format!(
            "bracket must satisfy lo < hi, got [{}, {}]",
            bracket.0, bracket.1
        )));
    }
    Ok(())
}

/// Root of [`matching_residual`] in `parameter` on `bracket`: bisection to
/// a few ulps, then at most eight secant steps kept inside the bracket.
pub fn critical_by_matching(
    model: &RadialModel,
    parameter: Parameter,
    bracket: (f64, f64),
) -> Result<CriticalResult> {
    check_bracket(bracket)?;
    let f = |p: f64| matching_residual(&parameter.apply(model, p)?);
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 || fhi == 0.0 {
        let (value, residual) = if flo == 0.0 { (lo, flo) } else { (hi, fhi) };
        return Ok(CriticalResult {
            parameter,
            value,
            method: Method::Matching,
            bracket,
            residual,
        });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut fhi = fhi;
    for _ in 0..60 {
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            flo = fm;
            hi = mid;
            fhi = fm;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let mut best = if flo.abs() <= fhi.abs() {
        (lo, flo)
    } else {
        (hi, fhi)
    };
    let (mut x0, mut f0, mut x1, mut f1) = (lo, flo, hi, fhi);
    for _ in 0..8 {
        if f1 == f0 || best.1 == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 >= lo && x2 <= hi) {
            break;
        }
        let f2 = f(x2)?;
        if f2.abs() < best.1.abs() {
            best = (x2, f2);
        }
        (x0, f0, x1, f1) = (x1, f1, x2, f2);
    }
    if best.1.abs() >= 1e-12 {
        // A sign change without a root: the bracket straddles a tan/cot pole.
        let lambda = model.two_m * parameter.apply(model, best.0)?.well_depth;
        return Err(Error::Pole(lambda.sqrt() * model.well_radius));
    }
    Ok(CriticalResult {
        parameter,
        value: best.0,
        method: Method::Matching,
        bracket,
        residual: best.1,
    })
}

/// Bisection on the existence of a bound state (shooting at `E = 0` on
/// `grid`) until the bracket is narrower than `tol`.
pub fn critical_by_bisection(
    model: &RadialModel,
    parameter: Parameter,
    bracket: (f64, f64),
    grid: Grid,
    tol: f64,
) -> Result<CriticalResult> {
    check_bracket(bracket)?;
    let bound = |p: f64| has_bound_state(&parameter.apply(model, p)?, grid);
    let (mut lo, mut hi) = bracket;
    let bound_lo = bound(lo)?;
    if bound_lo == bound(hi)? {
        return Err(Error::PredicateConstant { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound(mid)? == bound_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalResult {
        parameter,
        value: 0.5 * (lo + hi),
        method: Method::Bisection,
        bracket: (lo, hi),
        residual: 0.5 * (hi - lo),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// Normalizable zero-energy eigenstate.
    Eigenvalue,
    /// Bounded but non-normalizable zero-energy solution.
    Resonance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdClassification {
    pub kind: ThresholdKind,
    pub normalizable: bool,
    pub tail_form: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    /// Normalized for eigenvalue-kind states; raw (`u(0) = 1` or `u'(0) = 1`)
    /// for resonances.
    pub wavefunction: Wavefunction,
    pub classification: ThresholdClassification,
    /// `∫ u² dr` of the raw solution on this grid.
    pub raw_norm: f64,
}

/// Distance in well depth from the model to the matching critical surface,
/// to first order.
pub fn distance_to_critical(model: &RadialModel) -> Result<f64> {
    let res = matching_residual(model)?;
    let lambda = model.well_depth;
    let step = 1e-6 * lambda.max(1.0);
    let at = |l: f64| {
        matching_residual(&RadialModel {
            well_depth: l,
            ..model.clone()
        })
    };
    let slope = (at(lambda + step)? - at((lambda - step).max(0.0))?)
        / (lambda + step - (lambda - step).max(0.0));
    Ok((res / slope).abs())
}

/// Zero-energy solution at critical coupling: Numerov through the well,
/// glued continuously to the closed-form exterior solution.
pub fn threshold_state(model: &RadialModel, grid: Grid) -> Result<ThresholdState> {
    let distance = distance_to_critical(model)?;
    if !(distance <= 1e-6) {
        return Err(Error::NotCritical { distance });
    }
    let disc = Discretization::new(model, grid)?;
    let m = grid
        .first_at_or_after(model.well_radius)
        .ok_or_else(|| Error::InvalidGrid("well edge beyond r_max".into()))?;
    let (mut u, _) = disc.outward_values(0.0, m);
    let (r_m, u_m) = (grid.r(m), u[m]);
    let two_m = model.two_m;

    let classification = match model.tail {
        Tail::Coulomb { strength, exponent } => {
            if exponent != 1.0 {
                return Err(Error::Unsupported(format!(
                    "threshold state needs a 1/r tail, got exponent {exponent}"
                )));
            }
            let c = two_m * strength;
            let t_m = 2.0 * (c * r_m).sqrt();
            let log_ref = bessel_k01_scaled(t_m)?.1.ln() - t_m;
            for i in m + 1..grid.len() {
                let r = grid.r(i);
                let t = 2.0 * (c * r).sqrt();
                let log_k1 = bessel_k01_scaled(t)?.1.ln() - t;
                u.push(u_m * (0.5 * (r / r_m).ln() + log_k1 - log_ref).exp());
            }
            ThresholdClassification {
                kind: ThresholdKind::Eigenvalue,
                normalizable: true,
                tail_form: format!("sqrt(r) * K1(2 * sqrt({c} * r))"),
            }
        }
        Tail::Barrier {
            height,
            outer_radius,
        } => {
            let q = (two_m * height).sqrt();
            let edge = (q * (outer_radius - r_m)).cosh();
            for i in m + 1..grid.len() {
                let r = grid.r(i);
                let shape = if r <= outer_radius {
                    (q * (outer_radius - r)).cosh()
                } else {
                    1.0
                };
                u.push(u_m * shape / edge);
            }
            ThresholdClassification {
                kind: ThresholdKind::Resonance,
                normalizable: false,
                tail_form: format!(
                    "cosh({q} * ({outer_radius} - r)) under the barrier, constant beyond r = {outer_radius}"
                ),
            }
        }
        Tail::None => {
            u.extend(std::iter::repeat_n(u_m, grid.len() - m - 1));
            ThresholdClassification {
                kind: ThresholdKind::Resonance,
                normalizable: false,
                tail_form: "constant outside the well".into(),
            }
        }
    };
    let raw_norm = trapezoid(grid.h(), u.iter().map(|x| x * x));
    let raw = Wavefunction::new(grid, u, model.symmetry)?;
    let wavefunction = match classification.kind {
        ThresholdKind::Eigenvalue => raw.normalize()?,
        ThresholdKind::Resonance => raw,
    };
    Ok(ThresholdState {
        wavefunction,
        classification,
        raw_norm,
    })
}

/// Default search brackets for the critical value of each parameter.
pub fn default_bracket(parameter: Parameter) -> (f64, f64) {
    match parameter {
        Parameter::WellDepth => (0.1, 2.4),
        Parameter::TailStrength => (0.5, 8.0),
    }
}

/// Moves `model` onto the critical surface by solving for `parameter`.
pub fn at_critical(
    model: &RadialModel,
    parameter: Parameter,
) -> Result<(RadialModel, CriticalResult)> {
    let crit = critical_by_matching(model, parameter, default_bracket(parameter))?;
    Ok((parameter.apply(model, crit.value)?, crit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const K0_2: f64 = 0.113_893_872_749_533;
    const K1_2: f64 = 0.139_865_881_816_522;

    #[test]
    fn inside_examples() {
        let l = 0.634_366_f64;
        let direct = -l.sqrt() * l.sqrt().tan();
        let v = inside_logderiv(l, 1.0, Symmetry::Even1d).unwrap();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(v, -0.81431, epsilon = 1e-4);
        assert_abs_diff_eq!(
            inside_logderiv(PI * PI / 4.0, 1.0, Symmetry::Odd1d).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let small = inside_logderiv(1e-8, 2.0, Symmetry::Even1d).unwrap();
        assert!(small < 0.0);
        assert_abs_diff_eq!(small, -2e-8, epsilon = 1e-15);
        assert!(matches!(
            inside_logderiv(PI * PI / 4.0, 1.0, Symmetry::Even1d),
            Err(Error::Pole(_))
        ));
        assert!(matches!(
            inside_logderiv(PI * PI, 1.0, Symmetry::Swave3d),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn coulomb_exterior_examples() {
        let v = outside_logderiv_coulomb(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, -K0_2 / K1_2, epsilon = 1e-13);
        assert_abs_diff_eq!(v, -0.814_307, epsilon = 1e-6);

        let wkb = -(400.0f64).sqrt();
        let v = outside_logderiv_coulomb(400.0, 1.0).unwrap();
        assert!(((v - wkb) / wkb).abs() < 0.02);

        // u'' = (c/r) u is invariant under r -> r/s, c -> c s; u'/u picks up a factor s.
        let s = 4.0;
        let base = outside_logderiv_coulomb(1.3, 0.7).unwrap();
        let scaled = outside_logderiv_coulomb(1.3 * s, 0.7 / s).unwrap();
        assert_abs_diff_eq!(scaled, s * base, epsilon = 1e-12);
        assert!(outside_logderiv_coulomb(0.0, 1.0).is_err());
    }

    #[test]
    fn coulomb_exterior_matches_numeric_derivative() {
        let (c, r) = (2.3, 1.7);
        let u = |r: f64| r.sqrt() * crate::specfun::bessel_k1(2.0 * (c * r).sqrt()).unwrap();
        let h = 1e-5;
        let fd = (u(r + h) - u(r - h)) / (2.0 * h) / u(r);
        assert_abs_diff_eq!(outside_logderiv_coulomb(c, r).unwrap(), fd, epsilon = 1e-8);
    }

    #[test]
    fn barrier_exterior_examples() {
        assert_abs_diff_eq!(
            outside_logderiv_barrier(1.0, 1.0, 2.0).unwrap(),
            -(1.0f64).tanh(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(outside_logderiv_barrier(1.0, 1.0, 1.0).unwrap(), 0.0);
        let v = outside_logderiv_barrier(2.793_877_6, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(v, -(1.0f64).tan(), epsilon = 1e-5);
        assert_abs_diff_eq!(v, -1.557_408, epsilon = 1e-5);
    }

    #[test]
    fn residual_examples() {
        assert_abs_diff_eq!(
            matching_residual(&RadialModel::example1(0.634_366)).unwrap(),
            0.0,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            matching_residual(&RadialModel::example3(2.793_877_6)).unwrap(),
            0.0,
            epsilon = 1e-5
        );
        let at_one = matching_residual(&RadialModel::example1(1.0)).unwrap();
        assert_abs_diff_eq!(at_one, -(1.0f64).tan() + K0_2 / K1_2, epsilon = 1e-12);
        assert!(at_one < 0.0);

        let mut m = RadialModel::example1(1.0);
        m.tail = Tail::Coulomb {
            strength: 1.0,
            exponent: 0.5,
        };
        assert!(matches!(matching_residual(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn matching_critical_values() {
        let ex1 = critical_by_matching(
            &RadialModel::example1(1.0),
            Parameter::WellDepth,
            (0.3, 1.0),
        )
        .unwrap();
        assert_abs_diff_eq!(ex1.value, 0.634_366, epsilon = 5e-6);
        assert!(ex1.residual.abs() < 1e-12);
        let ex3 = critical_by_matching(
            &RadialModel::example3(1.0),
            Parameter::TailStrength,
            (1.0, 5.0),
        )
        .unwrap();
        assert_abs_diff_eq!(ex3.value, 2.793_877_6, epsilon = 5e-7);
        let ex2 = critical_by_matching(
            &RadialModel::example2(1.0),
            Parameter::TailStrength,
            (1.0, 6.0),
        )
        .unwrap();
        assert_abs_diff_eq!(ex2.value, 3.116_93, epsilon = 5e-5);
        assert!(ex2.bracket.0 < ex2.value && ex2.value < ex2.bracket.1);
    }

    #[test]
    fn matching_errors() {
        let m = RadialModel::example1(1.0);
        assert!(matches!(
            critical_by_matching(&m, Parameter::WellDepth, (0.7, 1.0)),
            Err(Error::NoSignChange { .. })
        ));
        // straddles the tan pole at sqrt(λ) = π/2 without a root of the residual
        assert!(matches!(
            critical_by_matching(&m, Parameter::WellDepth, (2.0, 3.0)),
            Err(Error::Pole(_))
        ));
        assert!(critical_by_matching(
            &RadialModel::square_well(1.0),
            Parameter::TailStrength,
            (1.0, 2.0)
        )
        .is_err());
    }

    #[test]
    fn residual_monotone_across_root() {
        let model = RadialModel::example2(1.0);
        let (lo, hi) = (2.5, 3.7);
        let samples: Vec<f64> = (0..100)
            .map(|i| {
                let c = lo + (hi - lo) * i as f64 / 99.0;
                matching_residual(&model.clone().with_tail_strength(c)).unwrap()
            })
            .collect();
        assert!(samples.windows(2).all(|w| w[1] > w[0]));
        assert!(samples[0] < 0.0 && samples[99] > 0.0);
    }

    #[test]
    fn swave_matching_is_exposed() {
        let m = RadialModel::example1(1.0).with_symmetry(Symmetry::Swave3d);
        let crit = critical_by_matching(&m, Parameter::WellDepth, (2.5, 9.5)).unwrap();
        let k = crit.value.sqrt();
        assert_abs_diff_eq!(k / k.tan(), -K0_2 / K1_2, epsilon = 1e-10);
    }

    #[test]
    fn not_critical_is_rejected() {
        let g = Grid::with_spacing(50.0, 1e-3).unwrap();
        assert!(matches!(
            threshold_state(&RadialModel::example1(0.7), g),
            Err(Error::NotCritical { .. })
        ));
    }
}
