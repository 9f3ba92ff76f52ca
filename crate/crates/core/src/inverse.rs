//! Generalized inverses of monotone functions by bracketed bisection.
//!
//! Both routines search over `x ∈ (0, ∞)`. Brackets are grown geometrically
//! (squaring the distance from 1) and then bisected at the geometric mean,
//! so arguments spanning hundreds of orders of magnitude cost only a few
//! dozen evaluations.

/// Relative bracket width at which bisection stops.
pub const INVERSE_REL_TOL: f64 = 1e-13;
const MAX_BISECTIONS: usize = 400;
const SMALLEST: f64 = 1e-300;
const LARGEST: f64 = 1e300;

/// Returns `inf{x > 0 : pred(x)}` for a predicate that is monotone
/// (false on `(0, x*)`, true on `[x*, ∞)`). Returns `0` if the predicate
/// already holds at the smallest probe and `+∞` if it never holds.
fn first_true<P: Fn(f64) -> bool>(pred: P) -> f64 {
    let (mut lo, mut hi);
    if pred(1.0) {
        hi = 1.0;
        lo = 0.5;
        while pred(lo) {
            hi = lo;
            if lo <= SMALLEST {
                return 0.0;
            }
            lo = (lo * lo).max(SMALLEST).min(0.5 * lo);
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !pred(hi) {
            lo = hi;
            if hi >= LARGEST {
                return f64::INFINITY;
            }
            hi = (hi * hi).min(LARGEST).max(2.0 * hi);
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= INVERSE_REL_TOL * hi {
            break;
        }
        // sqrt of each factor: lo·hi under- or overflows near the bracket limits.
        let mid = if hi > 4.0 * lo { lo.sqrt() * hi.sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `inf{x > 0 : f(x) ≥ p}` for a non-decreasing `f`.
pub fn inverse_nondecreasing<F: Fn(f64) -> f64>(f: F, p: f64) -> f64 {
    first_true(|x| f(x) >= p)
}

/// `inf{x > 0 : s(x) ≤ y}` for a non-increasing `s`.
pub fn inverse_nonincreasing<S: Fn(f64) -> f64>(s: S, y: f64) -> f64 {
    first_true(|x| s(x) <= y)
}

/// `inf{x > 0 : s(x) < y}`, the left limit of [`inverse_nonincreasing`] at `y`.
pub fn inverse_nonincreasing_strict<S: Fn(f64) -> f64>(s: S, y: f64) -> f64 {
    first_true(|x| s(x) < y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn continuous_inverse() {
        let x = inverse_nondecreasing(|x| x * x, 2.0);
        assert_relative_eq!(x, 2f64.sqrt(), max_relative = 1e-12);
        let x = inverse_nonincreasing(|x| (-x).exp(), 1e-200);
        assert_relative_eq!(x, 200.0 * 10f64.ln(), max_relative = 1e-12);
        let x = inverse_nonincreasing(|x: f64| x.powf(-0.3), 1e12);
        assert_relative_eq!(x, 1e-40, max_relative = 1e-11);
    }

    #[test]
    fn extreme_brackets() {
        // Roots near the ends of the search range, where lo·hi leaves f64.
        for root in [1e-200, 1e-280, 1e200, 1e280] {
            let x = inverse_nondecreasing(|x| x, root);
            assert_relative_eq!(x, root, max_relative = 1e-12);
        }
    }

    #[test]
    fn jumps_and_flats() {
        // Step survival 2·1{x < ln 2}
        let s = |x: f64| if x < 2f64.ln() { 2.0 } else { 0.0 };
        assert_relative_eq!(inverse_nonincreasing(s, 1.0), 2f64.ln(), max_relative = 1e-12);
        assert_eq!(inverse_nonincreasing(s, 2.0), 0.0);
        assert_relative_eq!(inverse_nonincreasing_strict(s, 2.0), 2f64.ln(), max_relative = 1e-12);
        // Never reaches the level.
        assert_eq!(inverse_nondecreasing(|_| 0.5, 0.9), f64::INFINITY);
    }
}
