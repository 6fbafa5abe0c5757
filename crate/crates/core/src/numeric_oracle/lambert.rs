//! Lower real branch of the Lambert W function.

use std::f64::consts::E;

use crate::error::{Error, Result};

const BRANCH_POINT: f64 = -1.0 / E;

/// `W_{-1}(x)`: the solution `w <= -1` of `w e^w = x` for `x` in `[-1/e, 0)`.
///
/// Solved as `ln(-w) + w = ln(-x)`, whose left side is increasing on
/// `(-inf, -1]`, by safeguarded Newton steps inside a shrinking bracket.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    if !(BRANCH_POINT..0.0).contains(&x) {
        return Err(Error::LambertDomain { x });
    }
    if x == BRANCH_POINT {
        return Ok(-1.0);
    }
    let target = (-x).ln();
    let h = |w: f64| (-w).ln() + w - target;

    let mut lo = -745.0f64;
    while h(lo) > 0.0 {
        lo *= 2.0;
    }
    let mut hi = -1.0f64;

    // Series about the branch point, asymptotic expansion near zero.
    let mut w = if x < -0.25 {
        let p = -(2.0 * (1.0 + E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = target;
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    if !(w > lo && w < hi) {
        w = 0.5 * (lo + hi);
    }

    for _ in 0..200 {
        let hw = h(w);
        if hw == 0.0 {
            break;
        }
        if hw > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let slope = 1.0 / w + 1.0;
        let mut next = w - hw / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 1e-15 * w.abs() || hi - lo <= 1e-15 * lo.abs() {
            w = next;
            break;
        }
        w = next;
    }
    // Polish on the product form, which is what callers check.
    for _ in 0..3 {
        let ew = w.exp();
        let f = w * ew - x;
        let df = ew * (w + 1.0);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = w - f / df;
        if !(next <= -1.0) || (next * next.exp() - x).abs() >= f.abs() {
            break;
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(x: f64) -> f64 {
        let w = lambert_w_minus1(x).unwrap();
        assert!(w <= -1.0);
        (w * w.exp() - x).abs()
    }

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_minus1(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn moderate_argument() {
        let w = lambert_w_minus1(-0.1).unwrap();
        assert!(w < -1.0);
        assert!(residual(-0.1) <= 1e-12 * 0.1);
        // reference value W_{-1}(-0.1) = -3.577152063957297
        assert!((w + 3.577_152_063_957_297).abs() < 1e-12);
    }

    #[test]
    fn near_zero() {
        let x = -1e-8;
        let w = lambert_w_minus1(x).unwrap();
        let l1 = (1e-8f64).ln();
        assert!((w - (l1 - (-l1).ln())).abs() < 1.0);
        assert!(residual(x) <= 1e-12 * 1e-8);
    }

    #[test]
    fn near_branch_point() {
        for k in 1..12 {
            let x = -1.0 / E + 10f64.powi(-k);
            assert!(residual(x) <= 1e-12 * x.abs(), "x={x}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(0.5).is_err());
        assert!(lambert_w_minus1(-0.5).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
    }
}
