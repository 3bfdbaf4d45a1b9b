//! Independent reference computations shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use brink_core::solver::{numerov_integrate, Grid};
use brink_core::{RadialModel, Symmetry, Tail};

/// `e^t K_n(t) = ∫_0^∞ cosh(nθ) e^{-t(cosh θ - 1)} dθ` by the trapezoid rule;
/// the integrand decays double-exponentially so the rule converges
/// geometrically in the step.
pub fn bessel_k_scaled(order: i32, t: f64) -> f64 {
    let step = (0.3 / t.sqrt()).min(0.01);
    let mut sum = 0.5;
    let mut theta = step;
    loop {
        let term = (order as f64 * theta).cosh() * (-t * (theta.cosh() - 1.0)).exp();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        theta += step;
    }
    sum * step
}

/// Lowest eigenvalue of the second-order finite-difference Hamiltonian
/// `-(1/2m) d²/dr² + V` on the grid, by Sturm-sequence bisection of the
/// symmetric tridiagonal matrix. Jump nodes take the average of both sides;
/// the even-symmetry ghost row is symmetrized by a `sqrt(2)` rescaling.
pub fn dense_ground_energy(model: &RadialModel, grid: &Grid) -> f64 {
    let h = grid.h();
    let k = 1.0 / (model.two_m * h * h);
    // Dirichlet at r_max; at the origin for odd/s-wave symmetry.
    let first = match model.symmetry {
        Symmetry::Even1d => 0,
        _ => 1,
    };
    let last = grid.len() - 1;
    let potential = |r: f64| {
        let eps = 1e-9 * h;
        0.5 * (model.potential_value(r - eps) + model.potential_value(r + eps))
    };
    let diag: Vec<f64> = (first..last)
        .map(|i| 2.0 * k + potential(grid.r(i).max(1e-300)))
        .collect();
    let mut off = vec![-k; diag.len().saturating_sub(1)];
    if first == 0 {
        off[0] = -k * 2f64.sqrt();
    }
    let below = |x: f64| {
        let mut count = 0usize;
        let mut d = 1.0;
        for (i, a) in diag.iter().enumerate() {
            let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
            d = a - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut lo, mut hi) = (model.min_potential() - 1.0, 0.0);
    assert!(below(hi) >= 1, "oracle finds no bound state");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Root of `sqrt(ΔE) = sqrt(25 - ΔE) tan(sqrt(25 - ΔE))` on the ground branch.
pub fn square_well_binding(depth: f64) -> f64 {
    let f = |k: f64| (depth - k * k).sqrt() - k * k.tan();
    let (mut lo, mut hi) = (1e-12, std::f64::consts::FRAC_PI_2 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    depth - k * k
}

pub fn free_model() -> RadialModel {
    RadialModel {
        well_depth: 0.0,
        tail: Tail::None,
        ..RadialModel::example1(1.0)
    }
}

pub fn free_error(h: f64) -> f64 {
    let grid = Grid::with_spacing(20.0, h).unwrap();
    let out = numerov_integrate(&free_model(), 1.0, grid).unwrap();
    assert_eq!(out.rescalings, 0);
    grid.points()
        .zip(&out.values)
        .map(|(r, u)| (u - r.cos()).abs())
        .fold(0.0, f64::max)
}

/// RK4 for `u'' = 2m (V - E) u` from the even-symmetry start; step `h`
/// must divide the well radius.
pub fn rk4_even(model: &RadialModel, energy: f64, r_max: f64, h: f64) -> Vec<(f64, f64)> {
    let g = |r: f64| model.two_m * (model.potential_value(r) - energy);
    let mut out = vec![(0.0, 1.0)];
    let (mut r, mut u, mut du) = (0.0, 1.0, 0.0);
    let n = (r_max / h).round() as usize;
    for i in 0..n {
        // Sample the piece the step lies in, not the jump itself.
        let mid = r + 0.5 * h;
        let gl = |x: f64| g(x.clamp(r + 1e-12, r + h - 1e-12));
        let (k1u, k1v) = (du, gl(r) * u);
        let (k2u, k2v) = (du + 0.5 * h * k1v, gl(mid) * (u + 0.5 * h * k1u));
        let (k3u, k3v) = (du + 0.5 * h * k2v, gl(mid) * (u + 0.5 * h * k2u));
        let (k4u, k4v) = (du + h * k3v, gl(r + h) * (u + h * k3u));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r = (i + 1) as f64 * h;
        out.push((r, u));
    }
    out
}

pub fn first_sign_change(samples: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for (r, u) in samples {
        if let Some((r0, u0)) = prev {
            if u0 * u < 0.0 {
                return Some(r0 + (r - r0) * u0 / (u0 - u));
            }
        }
        prev = Some((r, u));
    }
    None
}
