//! Special-function kernel: modified Bessel functions of the second kind
//! (orders 0 and 1) and the closed-form exponential weights used by the
//! decay envelopes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest argument for which the unscaled K0/K1 stay in the normal range.
pub const BESSEL_MAX_ARG: f64 = 700.0;

const SERIES_SWITCH: f64 = 2.0;

fn check_arg(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("Bessel K needs t > 0, got {t}")));
    }
    Ok(())
}

/// Power series of K0 and K1 around the origin, valid for `0 < t <= 2`.
fn k01_series(t: f64) -> (f64, f64) {
    let x = 0.25 * t * t;
    let log_half = (0.5 * t).ln();

    // k-th terms: x^k / (k!)^2 and x^k / (k! (k+1)!)
    let mut p0 = 1.0;
    let mut p1 = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut i1_sum = 1.0;
    let mut k0_sum = 0.0;
    // psi(1) + psi(2) = -2 gamma + 1
    let mut k1_sum = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..40 {
        let kf = k as f64;
        p0 *= x / (kf * kf);
        p1 *= x / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        let next_harmonic = harmonic + 1.0 / (kf + 1.0);
        i0 += p0;
        i1_sum += p1;
        k0_sum += harmonic * p0;
        k1_sum += (harmonic + next_harmonic - 2.0 * EULER_GAMMA) * p1;
        if p0 < 1e-18 * i0 && p1 < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * t * i1_sum;
    let k0 = -(log_half + EULER_GAMMA) * i0 + k0_sum;
    let k1 = 1.0 / t + log_half * i1 - 0.25 * t * k1_sum;
    (k0, k1)
}

/// Steed's continued fraction for `e^t K0(t)` and `e^t K1(t)`, `t >= 2`.
fn k01_scaled_cf(t: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + t);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0e = (PI / (2.0 * t)).sqrt() / s;
    let k1e = k0e * (t + 0.5 - h) / t;
    (k0e, k1e)
}

/// `(e^t K0(t), e^t K1(t))` for any `t > 0`.
pub fn bessel_k01_scaled(t: f64) -> Result<(f64, f64)> {
    check_arg(t)?;
    if t <= SERIES_SWITCH {
        let (k0, k1) = k01_series(t);
        let e = t.exp();
        Ok((k0 * e, k1 * e))
    } else {
        Ok(k01_scaled_cf(t))
    }
}

/// Exponentially scaled `e^t K0(t)`; never underflows.
pub fn bessel_k0_scaled(t: f64) -> Result<f64> {
    bessel_k01_scaled(t).map(|(k0, _)| k0)
}

/// Exponentially scaled `e^t K1(t)`; never underflows.
pub fn bessel_k1_scaled(t: f64) -> Result<f64> {
    bessel_k01_scaled(t).map(|(_, k1)| k1)
}

fn bessel_k01(t: f64) -> Result<(f64, f64)> {
    check_arg(t)?;
    if t > BESSEL_MAX_ARG {
        return Err(Error::Underflow(t));
    }
    if t <= SERIES_SWITCH {
        Ok(k01_series(t))
    } else {
        let (k0e, k1e) = k01_scaled_cf(t);
        let e = (-t).exp();
        Ok((k0e * e, k1e * e))
    }
}

/// Modified Bessel function of the second kind, order zero.
///
/// Relative accuracy is close to machine precision on `[1e-8, 700]`.
/// Arguments above [`BESSEL_MAX_ARG`] report [`Error::Underflow`]; use
/// [`bessel_k0_scaled`] there.
pub fn bessel_k0(t: f64) -> Result<f64> {
    bessel_k01(t).map(|(k0, _)| k0)
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(t: f64) -> Result<f64> {
    bessel_k01(t).map(|(_, k1)| k1)
}

/// Parameters of the closed-form weight `F_{a,b}(r) = ∫_0^r sqrt(a + b/s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    /// Binding-energy slot.
    pub a: f64,
    /// Tail strength.
    pub b: f64,
}

impl WeightParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.a >= 0.0) || !(self.b >= 0.0) {
            return Err(Error::Domain(format!(
                "weight needs a, b >= 0, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.a == 0.0 && self.b == 0.0 {
            return Err(Error::Domain("weight needs a and b not both zero".into()));
        }
        Ok(())
    }

    /// True when `(a, r)` sits in the `a -> 0` limit branch `2 sqrt(b r)`.
    fn in_limit_branch(&self, r: f64) -> bool {
        self.a == 0.0 || (self.b > 0.0 && self.a * r < 1e-10 * (self.b / r + self.a))
    }
}

/// `F_{a,b}(r) = sqrt(a + b/r) r + (b / sqrt a) asinh(sqrt(a r / b))`.
pub fn weight_f(p: WeightParams, r: f64) -> Result<f64> {
    p.check()?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("weight needs r >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if p.b == 0.0 {
        return Ok(p.a.sqrt() * r);
    }
    if p.in_limit_branch(r) {
        return Ok(2.0 * (p.b * r).sqrt());
    }
    let sa = p.a.sqrt();
    Ok((p.a * r * r + p.b * r).sqrt() + p.b / sa * (p.a * r / p.b).sqrt().asinh())
}

/// `F'_{a,b}(r) = sqrt(a + b/r)`.
pub fn weight_f_slope(p: WeightParams, r: f64) -> Result<f64> {
    p.check()?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("weight slope needs r > 0, got {r}")));
    }
    Ok((p.a + p.b / r).sqrt())
}

/// A nonnegative radial function `U(r)`, such as a repulsive tail.
pub trait RadialFunction: Sync {
    fn eval(&self, r: f64) -> f64;

    /// `(c1, alpha)` when the function is exactly `c1 r^-alpha` for large r.
    fn power_law(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F> RadialFunction for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn eval(&self, r: f64) -> f64 {
        self(r)
    }
}

/// `U(r) = c1 r^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub c1: f64,
    pub alpha: f64,
}

impl RadialFunction for PowerLaw {
    fn eval(&self, r: f64) -> f64 {
        self.c1 * r.powf(-self.alpha)
    }

    fn power_law(&self) -> Option<(f64, f64)> {
        Some((self.c1, self.alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralWeight {
    pub value: f64,
    /// Whether `δ ∫ sqrt(U)` grows without bound as `r -> ∞`.
    pub diverges: bool,
}

/// `F(r) = δ ∫_{r0}^{r} sqrt(U(s)) ds`, with a divergence flag for the
/// infinite-range limit.
pub fn weight_f_general<U: RadialFunction + ?Sized>(
    u: &U,
    delta: f64,
    r0: f64,
    r: f64,
) -> Result<GeneralWeight> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    if !(r0 >= 0.0) || !(r >= r0) {
        return Err(Error::Domain(format!(
            "need 0 <= r0 <= r, got r0 = {r0}, r = {r}"
        )));
    }
    let value = delta * sqrt_integral(u, r0, r)?;
    let diverges = tail_integral_diverges(u, r0)?;
    Ok(GeneralWeight { value, diverges })
}

/// `∫_lo^hi sqrt(U(s)) ds`, failing if `U` goes negative anywhere it is sampled.
pub fn sqrt_integral<U: RadialFunction + ?Sized>(u: &U, lo: f64, hi: f64) -> Result<f64> {
    if hi == lo {
        return Ok(0.0);
    }
    let mut negative_at = None;
    let value = integrate(
        |s| {
            let v = u.eval(s);
            if v < 0.0 {
                negative_at.get_or_insert(s);
                0.0
            } else {
                v.sqrt()
            }
        },
        lo,
        hi,
        1e-10,
    );
    match negative_at {
        Some(s) => Err(Error::Domain(format!("U is negative at s = {s}"))),
        None => Ok(value),
    }
}

fn tail_integral_diverges<U: RadialFunction + ?Sized>(u: &U, r0: f64) -> Result<bool> {
    if let Some((_, alpha)) = u.power_law() {
        return Ok(alpha <= 2.0);
    }
    // Dyadic increments of ∫ sqrt(U): for U ~ r^-alpha their ratio is
    // 2^(1 - alpha/2), which is >= 1 exactly when the integral diverges.
    let base = 1024.0 * r0.max(1.0);
    let first = sqrt_integral(u, base, 2.0 * base)?;
    let second = sqrt_integral(u, 2.0 * base, 4.0 * base)?;
    if first == 0.0 {
        return Ok(false);
    }
    Ok(second / first >= 1.0 - 1e-3)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += GK_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature: the segment with the
/// largest error estimate is bisected until the summed estimate drops below
/// `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    const MAX_SEGMENTS: usize = 4000;
    let (value, error) = gauss_kronrod_15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_error = error;
    while total_error > abs_tol && heap.len() < MAX_SEGMENTS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = gauss_kronrod_15(&mut f, worst.a, mid);
        let (rv, re) = gauss_kronrod_15(&mut f, mid, worst.b);
        total_error += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    heap.iter().map(|s| s.value).sum()
}
