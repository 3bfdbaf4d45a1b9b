use thiserror::Error;

use crate::potentials::ModelViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("result underflows to zero for argument {0}")]
    Underflow(f64),

    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<ModelViolation>),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no bound state below the threshold")]
    NoBoundState,

    #[error(
        "grid too small: tail attenuation {attenuation:.3} below {required} at r_max = {r_max}"
    )]
    GridTooSmall {
        r_max: f64,
        attenuation: f64,
        required: f64,
    },

    #[error("wavefunction has zero norm")]
    ZeroNorm,

    #[error("tangent/cotangent pole at k*r_w = {0}")]
    Pole(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("residual does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("bound-state predicate is constant on [{lo}, {hi}]")]
    PredicateConstant { lo: f64, hi: f64 },

    #[error("model is not at critical coupling (distance {distance:e})")]
    NotCritical { distance: f64 },

    #[error("no grid points at or beyond r = {0}")]
    EmptyRegion(f64),

    #[error("envelope condition violated at r = {r} (margin {margin:e})")]
    InadmissibleAt { r: f64, margin: f64 },

    #[error("wavefunction is not strictly positive at r = {0}")]
    NonPositiveWavefunction(f64),

    #[error("wavefunction changes sign inside the fit window at r = {0}")]
    SignChangeInWindow(f64),
}

fn join_violations(v: &[ModelViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
