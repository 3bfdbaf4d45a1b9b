//! Radial model Hamiltonians: an attractive square well of depth λ plus an
//! optional repulsive tail outside it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::RadialFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// Even-parity states of a one-dimensional problem, `u'(0) = 0`.
    Even1d,
    /// Odd-parity states of a one-dimensional problem, `u(0) = 0`.
    Odd1d,
    /// Three-dimensional s-wave; `u = r ψ`, `u(0) = 0`.
    Swave3d,
}

impl Symmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::Even1d => "even1d",
            Symmetry::Odd1d => "odd1d",
            Symmetry::Swave3d => "swave3d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tail {
    /// `c / r^α` outside the well.
    Coulomb {
        strength: f64,
        exponent: f64,
    },
    /// `c` on `(well_radius, outer_radius]`, zero beyond.
    Barrier {
        height: f64,
        outer_radius: f64,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    NonPositiveTwoM(f64),
    NegativeWellDepth(f64),
    NonPositiveWellRadius(f64),
    NonPositiveTailStrength(f64),
    ExponentOutOfRange(f64),
    BarrierInsideWell { outer_radius: f64, well_radius: f64 },
    NotFinite(&'static str),
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelViolation::NonPositiveTwoM(v) => write!(f, "two_m must be > 0 (got {v})"),
            ModelViolation::NegativeWellDepth(v) => write!(f, "well_depth must be >= 0 (got {v})"),
            ModelViolation::NonPositiveWellRadius(v) => {
                write!(f, "well_radius must be > 0 (got {v})")
            }
            ModelViolation::NonPositiveTailStrength(v) => {
                write!(f, "tail strength must be > 0 (got {v})")
            }
            ModelViolation::ExponentOutOfRange(v) => {
                write!(f, "tail exponent must lie in (0, 2] (got {v})")
            }
            ModelViolation::BarrierInsideWell {
                outer_radius,
                well_radius,
            } => write!(
                f,
                "barrier outer_radius {outer_radius} must exceed well_radius {well_radius}"
            ),
            ModelViolation::NotFinite(field) => write!(f, "{field} is not finite"),
        }
    }
}

/// `V(r)` on one closed-right interval of the piecewise definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `c r^-α`.
    Power {
        c: f64,
        alpha: f64,
    },
}

impl Profile {
    /// `(V, V', V'')` at `r`.
    pub fn derivatives(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Constant(v) => (v, 0.0, 0.0),
            Profile::Power { c, alpha } => {
                let v = c * r.powf(-alpha);
                (v, -alpha * v / r, alpha * (alpha + 1.0) * v / (r * r))
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::Constant(v) => v,
            Profile::Power { c, alpha } => c * r.powf(-alpha),
        }
    }
}

/// One piece of a piecewise potential, covering `(start, end]` (`[0, end]`
/// for the first piece).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialModel {
    /// Kinetic prefactor `2m`; the equation is `-(1/2m) u'' + V u = E u`.
    pub two_m: f64,
    pub well_depth: f64,
    pub well_radius: f64,
    pub tail: Tail,
    pub symmetry: Symmetry,
}

impl Default for RadialModel {
    fn default() -> Self {
        Self::example1(1.0)
    }
}

impl RadialModel {
    /// `-Δ - λ 1{r <= 1} + 1{r > 1} / r`.
    pub fn example1(lambda: f64) -> Self {
        Self {
            two_m: 1.0,
            well_depth: lambda,
            well_radius: 1.0,
            tail: Tail::Coulomb {
                strength: 1.0,
                exponent: 1.0,
            },
            symmetry: Symmetry::Even1d,
        }
    }

    /// Unit well with a long-range repulsion `c / r`.
    pub fn example2(c: f64) -> Self {
        Self {
            tail: Tail::Coulomb {
                strength: c,
                exponent: 1.0,
            },
            ..Self::example1(1.0)
        }
    }

    /// Unit well with a finite barrier of height `c` on `(1, 2]`.
    pub fn example3(c: f64) -> Self {
        Self {
            tail: Tail::Barrier {
                height: c,
                outer_radius: 2.0,
            },
            ..Self::example1(1.0)
        }
    }

    pub fn square_well(depth: f64) -> Self {
        Self {
            tail: Tail::None,
            ..Self::example1(depth)
        }
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<ModelViolation>> {
        let mut out = Vec::new();
        for (name, v) in [
            ("two_m", self.two_m),
            ("well_depth", self.well_depth),
            ("well_radius", self.well_radius),
        ] {
            if !v.is_finite() {
                out.push(ModelViolation::NotFinite(name));
            }
        }
        if !(self.two_m > 0.0) {
            out.push(ModelViolation::NonPositiveTwoM(self.two_m));
        }
        if !(self.well_depth >= 0.0) {
            out.push(ModelViolation::NegativeWellDepth(self.well_depth));
        }
        if !(self.well_radius > 0.0) {
            out.push(ModelViolation::NonPositiveWellRadius(self.well_radius));
        }
        match self.tail {
            Tail::Coulomb { strength, exponent } => {
                if !(strength > 0.0) || !strength.is_finite() {
                    out.push(ModelViolation::NonPositiveTailStrength(strength));
                }
                if !(exponent > 0.0 && exponent <= 2.0) {
                    out.push(ModelViolation::ExponentOutOfRange(exponent));
                }
            }
            Tail::Barrier {
                height,
                outer_radius,
            } => {
                if !(height > 0.0) || !height.is_finite() {
                    out.push(ModelViolation::NonPositiveTailStrength(height));
                }
                if !(outer_radius > self.well_radius) || !outer_radius.is_finite() {
                    out.push(ModelViolation::BarrierInsideWell {
                        outer_radius,
                        well_radius: self.well_radius,
                    });
                }
            }
            Tail::None => {}
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn checked(&self) -> Result<&Self> {
        self.validate().map_err(Error::InvalidModel)?;
        Ok(self)
    }

    pub fn pieces(&self) -> Vec<Piece> {
        let rw = self.well_radius;
        let mut pieces = vec![Piece {
            start: 0.0,
            end: rw,
            profile: Profile::Constant(-self.well_depth),
        }];
        match self.tail {
            Tail::Coulomb { strength, exponent } => pieces.push(Piece {
                start: rw,
                end: f64::INFINITY,
                profile: Profile::Power {
                    c: strength,
                    alpha: exponent,
                },
            }),
            Tail::Barrier {
                height,
                outer_radius,
            } => {
                pieces.push(Piece {
                    start: rw,
                    end: outer_radius,
                    profile: Profile::Constant(height),
                });
                pieces.push(Piece {
                    start: outer_radius,
                    end: f64::INFINITY,
                    profile: Profile::Constant(0.0),
                });
            }
            Tail::None => pieces.push(Piece {
                start: rw,
                end: f64::INFINITY,
                profile: Profile::Constant(0.0),
            }),
        }
        pieces
    }

    /// Radii where the potential jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let pieces = self.pieces();
        pieces[..pieces.len() - 1].iter().map(|p| p.end).collect()
    }

    pub fn potential_value(&self, r: f64) -> f64 {
        if r <= self.well_radius {
            return -self.well_depth;
        }
        match self.tail {
            Tail::Coulomb { strength, exponent } => strength * r.powf(-exponent),
            Tail::Barrier {
                height,
                outer_radius,
            } => {
                if r <= outer_radius {
                    height
                } else {
                    0.0
                }
            }
            Tail::None => 0.0,
        }
    }

    /// The nonnegative repulsive part `U` of the potential.
    pub fn repulsive_tail(&self, r: f64) -> f64 {
        if r <= self.well_radius {
            0.0
        } else {
            self.potential_value(r).max(0.0)
        }
    }

    pub fn min_potential(&self) -> f64 {
        -self.well_depth
    }

    /// Strength of the tail (`c`), if any.
    pub fn tail_strength(&self) -> Option<f64> {
        match self.tail {
            Tail::Coulomb { strength, .. } => Some(strength),
            Tail::Barrier { height, .. } => Some(height),
            Tail::None => None,
        }
    }

    pub fn with_tail_strength(mut self, c: f64) -> Self {
        match &mut self.tail {
            Tail::Coulomb { strength, .. } => *strength = c,
            Tail::Barrier { height, .. } => *height = c,
            Tail::None => {}
        }
        self
    }

    pub fn repulsion(&self) -> Repulsion<'_> {
        Repulsion(self)
    }
}

/// [`RadialFunction`] view of a model's repulsive tail.
#[derive(Debug, Clone, Copy)]
pub struct Repulsion<'a>(&'a RadialModel);

impl RadialFunction for Repulsion<'_> {
    fn eval(&self, r: f64) -> f64 {
        self.0.repulsive_tail(r)
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        match self.0.tail {
            Tail::Coulomb { strength, exponent } => Some((strength, exponent)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_potentials() {
        let m = RadialModel::example1(1.0);
        assert_eq!(m.potential_value(0.5), -1.0);
        assert_eq!(m.potential_value(2.0), 0.5);
        assert_eq!(m.potential_value(1.0), -1.0);
        let b = RadialModel::example3(2.0);
        assert_eq!(b.potential_value(1.5), 2.0);
        assert_eq!(b.potential_value(2.5), 0.0);
        assert_eq!(b.potential_value(2.0), 2.0);
    }

    #[test]
    fn repulsive_tail_values() {
        assert_eq!(RadialModel::example1(1.0).repulsive_tail(4.0), 0.25);
        assert_eq!(RadialModel::example3(3.0).repulsive_tail(1.2), 3.0);
        for m in [
            RadialModel::example1(1.0),
            RadialModel::example3(3.0),
            RadialModel::square_well(5.0),
        ] {
            assert_eq!(m.repulsive_tail(0.5), 0.0);
        }
    }

    #[test]
    fn validation() {
        assert!(RadialModel::example1(1.0).validate().is_ok());
        let mut m = RadialModel::example3(1.0);
        m.tail = Tail::Barrier {
            height: 1.0,
            outer_radius: 0.5,
        };
        let v = m.validate().unwrap_err();
        assert!(matches!(v[0], ModelViolation::BarrierInsideWell { .. }));

        let mut m = RadialModel::example1(1.0);
        m.tail = Tail::Coulomb {
            strength: 1.0,
            exponent: 3.0,
        };
        assert_eq!(
            m.validate().unwrap_err(),
            vec![ModelViolation::ExponentOutOfRange(3.0)]
        );

        let mut m = RadialModel::example1(-1.0);
        m.well_radius = -1.0;
        m.tail = Tail::Coulomb {
            strength: 0.0,
            exponent: 1.0,
        };
        assert_eq!(m.validate().unwrap_err().len(), 3);
        assert!(matches!(m.checked(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn pieces_agree_with_potential() {
        for m in [
            RadialModel::example1(0.7),
            RadialModel::example3(2.5),
            RadialModel::square_well(3.0),
        ] {
            let pieces = m.pieces();
            for i in 1..4000 {
                let r = i as f64 * 0.00137;
                let piece = pieces
                    .iter()
                    .find(|p| (p.start == 0.0 && r <= p.end) || (r > p.start && r <= p.end))
                    .unwrap();
                assert_eq!(piece.profile.value(r), m.potential_value(r));
            }
        }
        assert_eq!(RadialModel::example3(1.0).breakpoints(), vec![1.0, 2.0]);
    }

    #[test]
    fn power_profile_derivatives() {
        let p = Profile::Power { c: 2.0, alpha: 1.5 };
        let (r, h) = (3.0, 1e-4);
        let (_, d1, d2) = p.derivatives(r);
        let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
        let fd2 = (p.value(r + h) - 2.0 * p.value(r) + p.value(r - h)) / (h * h);
        assert!((d1 - fd1).abs() < 1e-8);
        assert!((d2 - fd2).abs() < 1e-5);
    }

    fn any_model() -> impl Strategy<Value = RadialModel> {
        (
            0.0f64..10.0,
            0.1f64..3.0,
            0.01f64..5.0,
            0.1f64..2.0,
            0usize..3,
        )
            .prop_map(|(depth, rw, c, extra, kind)| {
                let tail = match kind {
                    0 => Tail::Coulomb {
                        strength: c,
                        exponent: extra,
                    },
                    1 => Tail::Barrier {
                        height: c,
                        outer_radius: rw + extra,
                    },
                    _ => Tail::None,
                };
                RadialModel {
                    two_m: 1.0,
                    well_depth: depth,
                    well_radius: rw,
                    tail,
                    symmetry: Symmetry::Even1d,
                }
            })
    }

    proptest! {
        #[test]
        fn tail_nonnegative_and_vanishing(m in any_model(), r in 0.0f64..100.0) {
            prop_assert!(m.validate().is_ok());
            prop_assert!(m.repulsive_tail(r) >= 0.0);
            prop_assert!(m.potential_value(1e100).abs() < 1e-8);
            if let Tail::Coulomb { .. } = m.tail {
                let x = m.well_radius + r;
                prop_assert!(m.repulsive_tail(2.0 * x) <= m.repulsive_tail(x));
            }
        }
    }
}
