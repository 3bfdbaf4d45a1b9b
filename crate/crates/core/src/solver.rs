//! Ground states of a [`RadialModel`] on a uniform grid.
//!
//! The reduced equation `u'' = 2m (V - E) u` is integrated with Numerov's
//! method. At grid nodes where the potential jumps the recurrence is
//! restarted from `(u, u')` with a Taylor step on the far side, which keeps
//! the scheme fourth order for piecewise potentials. Eigenvalues come from
//! bisection on a node-count / boundary log-derivative sign function; the
//! eigenfunction is assembled from an outward pass through the well and an
//! inward pass through the classically forbidden tail.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{Profile, RadialModel, Symmetry};

/// Values whose magnitude exceeds this are rescaled during integration.
pub const RESCALE_THRESHOLD: f64 = 1e100;

/// Minimum WKB attenuation `∫ sqrt(2m(V-E)) dr` between the well edge and
/// `r_max` for a tail to count as converged (`e^-10 ≈ 4.5e-5`).
pub const MIN_TAIL_ATTENUATION: f64 = 10.0;

const ALIGN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    r_max: f64,
    n: usize,
    h: f64,
}

impl Grid {
    /// `n` points `r_i = i h` with `h = r_max / (n - 1)`.
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidGrid(format!("need r_max > 0, got {r_max}")));
        }
        Ok(Self {
            r_max,
            n,
            h: r_max / (n - 1) as f64,
        })
    }

    /// Grid on `[0, r_max]` with spacing as close to `h` as an integer
    /// number of steps allows.
    pub fn with_spacing(r_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(r_max > 0.0) || !(h < r_max) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < h < r_max, got h = {h}, r_max = {r_max}"
            )));
        }
        let steps = (r_max / h).round().max(2.0) as usize;
        Self::new(r_max, steps + 1)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.r(i))
    }

    /// Index of the node sitting exactly on `r`, if any.
    pub fn node_at(&self, r: f64) -> Option<usize> {
        let x = r / self.h;
        let i = x.round();
        ((x - i).abs() < ALIGN_TOL && i >= 0.0 && (i as usize) < self.n).then_some(i as usize)
    }

    /// First node with `r_i >= r`.
    pub fn first_at_or_after(&self, r: f64) -> Option<usize> {
        if let Some(i) = self.node_at(r) {
            return Some(i);
        }
        let i = (r / self.h).ceil().max(0.0) as usize;
        (i < self.n).then_some(i)
    }
}

/// Composite trapezoid rule on a uniform grid.
pub(crate) fn trapezoid(h: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    match first {
        Some(f) => h * (sum - 0.5 * (f + last)),
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid,
    /// Samples of the reduced solution `u(r_i)`.
    pub values: Vec<f64>,
    pub normalized: bool,
    pub symmetry: Symmetry,
}

impl Wavefunction {
    pub fn new(grid: Grid, values: Vec<f64>, symmetry: Symmetry) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            normalized: false,
            symmetry,
        })
    }

    /// `ψ(r_i)`: `u` in one dimension, `u / r` for the s-wave (`None` at the origin).
    pub fn psi(&self, i: usize) -> Option<f64> {
        match self.symmetry {
            Symmetry::Swave3d if i == 0 => None,
            Symmetry::Swave3d => Some(self.values[i] / self.grid.r(i)),
            _ => Some(self.values[i]),
        }
    }

    /// Trapezoid estimate of `∫ u² dr`.
    pub fn norm_squared(&self) -> f64 {
        trapezoid(self.grid.h(), self.values.iter().map(|u| u * u))
    }

    pub fn normalize(&self) -> Result<Wavefunction> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let sign = self
            .values
            .iter()
            .skip(1)
            .find(|u| **u != 0.0)
            .map_or(1.0, |u| u.signum());
        let scale = sign / n2.sqrt();
        Ok(Wavefunction {
            grid: self.grid,
            values: self.values.iter().map(|u| u * scale).collect(),
            normalized: true,
            symmetry: self.symmetry,
        })
    }

    /// `∫ r u² dr / ∫ u² dr`.
    pub fn mean_radius(&self) -> f64 {
        let h = self.grid.h();
        let num = trapezoid(
            h,
            self.values
                .iter()
                .enumerate()
                .map(|(i, u)| h * i as f64 * u * u),
        );
        num / self.norm_squared()
    }

    pub fn node_count(&self) -> usize {
        count_nodes(&self.values)
    }
}

fn count_nodes(values: &[f64]) -> usize {
    let mut nodes = 0;
    let mut last_sign = 0.0;
    for &u in values.iter().skip(1) {
        if u == 0.0 {
            continue;
        }
        let s = u.signum();
        if last_sign != 0.0 && s != last_sign {
            nodes += 1;
        }
        last_sign = s;
    }
    nodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumerovOutput {
    pub values: Vec<f64>,
    pub node_count: usize,
    /// `u'/u` at `r_max` from a one-sided fourth-order difference.
    pub boundary_log_deriv: f64,
    pub rescalings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub energy: f64,
    /// `-energy`.
    pub binding: f64,
    pub nodes: usize,
    /// Log-derivative mismatch between the outward and inward solutions at
    /// the well edge.
    pub residual: f64,
    pub wavefunction: Wavefunction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Energy tolerance; `None` means `1e-10 * well_depth`.
    pub e_tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            e_tol: None,
            max_iter: 200,
        }
    }
}

fn backward_derivative(u: &[f64], i: usize, h: f64) -> f64 {
    (25.0 * u[i] - 48.0 * u[i - 1] + 36.0 * u[i - 2] - 16.0 * u[i - 3] + 3.0 * u[i - 4])
        / (12.0 * h)
}

fn forward_derivative(u: &[f64], i: usize, h: f64) -> f64 {
    -(25.0 * u[i] - 48.0 * u[i + 1] + 36.0 * u[i + 2] - 16.0 * u[i + 3] + 3.0 * u[i + 4])
        / (12.0 * h)
}

/// `u(r + step)` from `u`, `u'` and `g, g', g''` at `r` for `u'' = g u`.
fn taylor_step(u: f64, du: f64, step: f64, g: (f64, f64, f64)) -> f64 {
    let (g0, g1, g2) = g;
    let d2 = g0 * u;
    let d3 = g1 * u + g0 * du;
    let d4 = g2 * u + 2.0 * g1 * du + g0 * d2;
    let s2 = step * step;
    u + step * du + s2 / 2.0 * d2 + s2 * step / 6.0 * d3 + s2 * s2 / 24.0 * d4
}

/// A jump of the potential that falls exactly on a grid node.
#[derive(Debug, Clone, Copy)]
struct Interface {
    node: usize,
    left: Profile,
    right: Profile,
}

/// A model sampled on a grid: node potentials plus the jump nodes where the
/// Numerov recurrence restarts.
#[derive(Debug, Clone)]
pub struct Discretization<'a> {
    model: &'a RadialModel,
    grid: Grid,
    potential: Vec<f64>,
    /// Right-limit potential at interface nodes (`potential` holds the left one).
    right_limit: Vec<Option<f64>>,
    interfaces: Vec<Interface>,
    match_node: usize,
}

impl<'a> Discretization<'a> {
    pub fn new(model: &'a RadialModel, grid: Grid) -> Result<Self> {
        model.checked()?;
        let h = grid.h();
        if model.well_radius < 4.0 * h {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} too coarse for well radius {}",
                model.well_radius
            )));
        }
        if grid.r_max() <= model.well_radius + 4.0 * h {
            return Err(Error::InvalidGrid(format!(
                "r_max {} does not extend past the well",
                grid.r_max()
            )));
        }
        let potential: Vec<f64> = grid.points().map(|r| model.potential_value(r)).collect();
        let mut right_limit = vec![None; grid.len()];
        let mut interfaces = Vec::new();
        let pieces = model.pieces();
        for w in pieces.windows(2) {
            let Some(node) = grid.node_at(w[0].end) else {
                continue;
            };
            // Restarting needs four clean nodes on either side.
            let width_left = w[0].end - w[0].start;
            let width_right = w[1].end - w[1].start;
            if node + 4 >= grid.len() || width_left < 4.0 * h || width_right < 4.0 * h {
                continue;
            }
            right_limit[node] = Some(w[1].profile.value(grid.r(node)));
            interfaces.push(Interface {
                node,
                left: w[0].profile,
                right: w[1].profile,
            });
        }
        let match_node = grid
            .first_at_or_after(model.well_radius)
            .ok_or_else(|| Error::InvalidGrid("well edge beyond r_max".into()))?;
        Ok(Self {
            model,
            grid,
            potential,
            right_limit,
            interfaces,
            match_node,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn model(&self) -> &RadialModel {
        self.model
    }

    fn interface_at(&self, node: usize) -> Option<&Interface> {
        self.right_limit[node]?;
        self.interfaces.iter().find(|f| f.node == node)
    }

    /// Potential at node `j` as seen from a Numerov stencil centred on `center`.
    #[inline]
    fn v_seen(&self, j: usize, center: usize) -> f64 {
        if j < center {
            if let Some(v) = self.right_limit[j] {
                return v;
            }
        }
        self.potential[j]
    }

    fn start_values(&self, energy: f64) -> (f64, f64) {
        let h = self.grid.h();
        let g = self.model.two_m * (self.potential[0] - energy);
        let k = g.abs().sqrt();
        let (even, odd) = if g > 0.0 {
            ((k * h).cosh(), (k * h).sinh() / k)
        } else if g < 0.0 {
            ((k * h).cos(), (k * h).sin() / k)
        } else {
            (1.0, h)
        };
        match self.model.symmetry {
            Symmetry::Even1d => (1.0, even),
            Symmetry::Odd1d | Symmetry::Swave3d => (0.0, odd),
        }
    }

    /// Outward Numerov solution over nodes `0..=last` and the number of rescalings.
    pub fn outward_values(&self, energy: f64, last: usize) -> (Vec<f64>, usize) {
        let h = self.grid.h();
        let h12 = h * h / 12.0;
        let two_m = self.model.two_m;
        let mut u = vec![0.0; last + 1];
        let (u0, u1) = self.start_values(energy);
        u[0] = u0;
        u[1] = u1;
        let mut rescalings = 0;
        for i in 1..last {
            let next = if let Some(f) = self.interface_at(i) {
                let du = backward_derivative(&u, i, h);
                let r = self.grid.r(i);
                let (v, v1, v2) = f.right.derivatives(r);
                taylor_step(u[i], du, h, (two_m * (v - energy), two_m * v1, two_m * v2))
            } else {
                let gm = two_m * (self.v_seen(i - 1, i) - energy);
                let g0 = two_m * (self.potential[i] - energy);
                let gp = two_m * (self.potential[i + 1] - energy);
                (2.0 * u[i] * (1.0 + 5.0 * h12 * g0) - u[i - 1] * (1.0 - h12 * gm))
                    / (1.0 - h12 * gp)
            };
            u[i + 1] = next;
            if next.abs() > RESCALE_THRESHOLD {
                let s = 1.0 / RESCALE_THRESHOLD;
                u[..=i + 1].iter_mut().for_each(|x| *x *= s);
                rescalings += 1;
            }
        }
        (u, rescalings)
    }

    /// `(g, g')` with `g = 2m (V - E)` at the last node.
    fn boundary_g(&self, energy: f64) -> (f64, f64) {
        let pieces = self.model.pieces();
        let r = self.grid.r_max();
        let piece = pieces.last().expect("model has pieces");
        let (v, v1, _) = if r > piece.start {
            piece.profile.derivatives(r)
        } else {
            (self.model.potential_value(r), 0.0, 0.0)
        };
        (self.model.two_m * (v - energy), self.model.two_m * v1)
    }

    /// Log-derivative of the decaying WKB solution at `r_max`.
    fn decaying_log_deriv(&self, energy: f64) -> f64 {
        let (g, g1) = self.boundary_g(energy);
        if g > 0.0 {
            -g.sqrt() - g1 / (4.0 * g)
        } else {
            0.0
        }
    }

    pub fn integrate(&self, energy: f64) -> NumerovOutput {
        let last = self.grid.len() - 1;
        let (values, rescalings) = self.outward_values(energy, last);
        let h = self.grid.h();
        let boundary_log_deriv = backward_derivative(&values, last, h) / values[last];
        NumerovOutput {
            node_count: count_nodes(&values),
            values,
            boundary_log_deriv,
            rescalings,
        }
    }

    /// True when `energy` lies above the lowest eigenvalue of this symmetry class.
    pub fn above_ground(&self, energy: f64) -> bool {
        let out = self.integrate(energy);
        out.node_count > 0 || out.boundary_log_deriv < self.decaying_log_deriv(energy)
    }

    /// Inward Numerov solution over nodes `first..=last`, started from the
    /// decaying WKB branch at `r_max` (Dirichlet if `r_max` is not forbidden).
    fn inward(&self, energy: f64, first: usize) -> Vec<f64> {
        let h = self.grid.h();
        let h12 = h * h / 12.0;
        let two_m = self.model.two_m;
        let n = self.grid.len();
        let mut u = vec![0.0; n];
        let g_last = two_m * (self.potential[n - 1] - energy);
        let g_prev = two_m * (self.potential[n - 2] - energy);
        if g_last > 0.0 && g_prev > 0.0 {
            let (p1, p0) = (g_last.sqrt(), g_prev.sqrt());
            u[n - 1] = 1.0;
            u[n - 2] = (0.5 * (p0 + p1) * h).exp() * (p1 / p0).sqrt();
        } else {
            u[n - 1] = 0.0;
            u[n - 2] = 1.0;
        }
        let mut i = n - 2;
        while i > first {
            let prev = if let Some(f) = self.interface_at(i) {
                let du = forward_derivative(&u, i, h);
                let r = self.grid.r(i);
                let (v, v1, v2) = f.left.derivatives(r);
                taylor_step(u[i], du, -h, (two_m * (v - energy), two_m * v1, two_m * v2))
            } else {
                let gp = two_m * (self.potential[i + 1] - energy);
                let g0 = two_m * (self.potential[i] - energy);
                let gm = two_m * (self.v_seen(i - 1, i) - energy);
                (2.0 * u[i] * (1.0 + 5.0 * h12 * g0) - u[i + 1] * (1.0 - h12 * gp))
                    / (1.0 - h12 * gm)
            };
            u[i - 1] = prev;
            if prev.abs() > RESCALE_THRESHOLD {
                let s = 1.0 / RESCALE_THRESHOLD;
                u[i - 1..].iter_mut().for_each(|x| *x *= s);
            }
            i -= 1;
        }
        u
    }

    /// Outward solution through the well glued to the inward tail at the
    /// well edge; returns the samples and the log-derivative mismatch there.
    pub fn eigenfunction(&self, energy: f64) -> (Vec<f64>, f64) {
        let h = self.grid.h();
        let m = self.match_node;
        let (mut out, _) = self.outward_values(energy, m);
        let inward = self.inward(energy, m);
        let scale = out[m] / inward[m];
        let residual = backward_derivative(&out, m, h) / out[m]
            - forward_derivative(&inward, m, h) / inward[m];
        out.extend(inward[m + 1..].iter().map(|x| x * scale));
        (out, residual)
    }

    /// `∫ sqrt(max(2m(V - E), 0)) dr` from the well edge to `r_max`.
    pub fn tail_attenuation(&self, energy: f64) -> f64 {
        let two_m = self.model.two_m;
        let h = self.grid.h();
        trapezoid(
            h,
            self.potential[self.match_node..]
                .iter()
                .map(|v| (two_m * (v - energy)).max(0.0).sqrt()),
        )
    }
}

/// Outward Numerov solution of `u'' = 2m (V - E) u` from the origin.
///
/// `energy` is not restricted to the bound-state range so the integrator can
/// be checked against free oscillatory solutions.
pub fn numerov_integrate(model: &RadialModel, energy: f64, grid: Grid) -> Result<NumerovOutput> {
    Ok(Discretization::new(model, grid)?.integrate(energy))
}

/// True when the model binds at least one state of its symmetry class below 0
/// on this grid.
pub fn has_bound_state(model: &RadialModel, grid: Grid) -> Result<bool> {
    if model.well_depth == 0.0 {
        model.checked()?;
        return Ok(false);
    }
    Ok(Discretization::new(model, grid)?.above_ground(0.0))
}

pub fn solve_ground(model: &RadialModel, grid: Grid, opts: SolveOptions) -> Result<EigenResult> {
    let disc = Discretization::new(model, grid)?;
    if model.well_depth == 0.0 || !disc.above_ground(0.0) {
        return Err(Error::NoBoundState);
    }
    let e_tol = opts.e_tol.unwrap_or(1e-10 * model.well_depth);
    let (mut lo, mut hi) = (model.min_potential(), 0.0);
    for _ in 0..opts.max_iter {
        if hi - lo <= e_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if disc.above_ground(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    let attenuation = disc.tail_attenuation(energy);
    if attenuation < MIN_TAIL_ATTENUATION {
        return Err(Error::GridTooSmall {
            r_max: grid.r_max(),
            attenuation,
            required: MIN_TAIL_ATTENUATION,
        });
    }
    let (values, residual) = disc.eigenfunction(energy);
    let wavefunction = Wavefunction::new(grid, values, model.symmetry)?.normalize()?;
    Ok(EigenResult {
        energy,
        binding: -energy,
        nodes: wavefunction.node_count(),
        residual,
        wavefunction,
    })
}

/// Default spacing: `1e-3` well radii.
pub fn default_spacing(model: &RadialModel) -> f64 {
    1e-3 * model.well_radius
}

/// Solves on grids of growing extent until `r_max >= max(50, 25 / sqrt(ΔE))`
/// (capped at `1600` well radii for long-range tails, which confine on their own).
pub fn solve_ground_auto(model: &RadialModel, h: f64, opts: SolveOptions) -> Result<EigenResult> {
    let outermost = model
        .breakpoints()
        .into_iter()
        .fold(model.well_radius, f64::max);
    let floor = 50.0_f64.max(10.0 * outermost);
    let cap = match model.tail {
        crate::potentials::Tail::Coulomb { .. } => 1600.0 * model.well_radius,
        _ => f64::INFINITY,
    };
    let mut r_max = floor;
    let mut last_err = None;
    for _ in 0..8 {
        let grid = Grid::with_spacing(r_max, h)?;
        match solve_ground(model, grid, opts) {
            Ok(res) => {
                let target = floor.max(25.0 / res.binding.sqrt()).min(cap);
                if target <= r_max * 1.000_001 {
                    return Ok(res);
                }
                r_max = target;
            }
            Err(e @ Error::GridTooSmall { .. }) => {
                if r_max >= cap {
                    return Err(e);
                }
                r_max = (4.0 * r_max).min(cap);
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::GridTooSmall {
        r_max,
        attenuation: 0.0,
        required: MIN_TAIL_ATTENUATION,
    }))
}
