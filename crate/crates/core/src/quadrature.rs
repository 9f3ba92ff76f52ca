//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Finite intervals are bisected greedily on the largest local error
//! estimate. The half line `[0, ∞)` is split at a scale point `x0`; the
//! head uses `x = x0·e^{-s}` and the tail `x = x0·e^{s}`, with
//! `s = v/(1-v)` mapping `v ∈ [0, 1)` onto `[0, ∞)`. The logarithmic
//! substitutions turn algebraic singularities at zero and algebraic decay at
//! infinity into exponential decay, which the Kronrod rule resolves quickly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute tolerance used throughout the crate.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Relative tolerance used throughout the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-12;
const MAX_SUBINTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights belonging to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of an integral together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, rhs: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

#[derive(Debug, Clone, Copy)]
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let first = kronrod(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::with_capacity(64);
    heap.push(first);

    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Numeric(format!("integrand not finite on [{a}, {b}]")));
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge: value {total}, error estimate {total_err:e}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point; accept it.
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Recompute from the segments to limit accumulated cancellation.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    if !value.is_finite() {
        return Err(Error::Numeric(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok(Quadrature { value, error })
}

/// Integrates `f` over `[0, ∞)`, splitting at `scale`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, scale: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Numeric(format!("half-line scale must be positive, got {scale}")));
    }
    let head = integrate(
        |v| {
            let w = 1.0 - v;
            let s = v / w;
            let x = scale * (-s).exp();
            if x == 0.0 {
                return 0.0;
            }
            let y = f(x) * x / (w * w);
            if y.is_nan() {
                0.0
            } else {
                y
            }
        },
        0.0,
        1.0,
        0.5 * abs_tol,
        rel_tol,
    )?;
    let tail = integrate_tail(&f, scale, 0.5 * abs_tol, rel_tol)?;
    Ok(head + tail)
}

/// Integrates `f` over `[a, ∞)` for `a > 0`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Numeric(format!("tail start must be positive, got {a}")));
    }
    integrate(
        |v| {
            let w = 1.0 - v;
            let s = v / w;
            let x = a * s.exp();
            if !x.is_finite() {
                return 0.0;
            }
            let y = f(x) * x / (w * w);
            if y.is_nan() {
                0.0
            } else {
                y
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Integrates `f` over `[0, hi]`, where `hi` may be `+∞`.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, hi: f64, scale: f64) -> Result<Quadrature> {
    if hi.is_finite() {
        integrate(f, 0.0, hi, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)
    } else {
        integrate_half_line(f, scale, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)
    }
}
