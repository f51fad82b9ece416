//! Small numerical helpers shared across modules: pivoted log-sum-exp
//! accumulation and safeguarded scalar root finding.

use crate::error::{Error, Result};

/// Streaming log-sum-exp accumulator, pivoted at the running maximum.
///
/// Terms are supplied as logarithms; the running sum is kept relative to the
/// largest log seen so far, so terms spanning hundreds of orders of magnitude
/// never overflow or flush the total to zero.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    pivot: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            pivot: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.pivot {
            self.scaled += (log_term - self.pivot).exp();
        } else {
            self.scaled = self.scaled * (self.pivot - log_term).exp() + 1.0;
            self.pivot = log_term;
        }
    }

    /// Logarithm of the accumulated sum; `-inf` when nothing was pushed.
    pub fn log_sum(&self) -> f64 {
        if self.pivot == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.pivot + self.scaled.ln()
        }
    }

    pub fn sum(&self) -> f64 {
        self.log_sum().exp()
    }
}

impl FromIterator<f64> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSumExp::new();
        for t in iter {
            acc.push(t);
        }
        acc
    }
}

/// Log-sum-exp of a slice of logarithms.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    logs.iter().copied().collect::<LogSumExp>().log_sum()
}

/// Newton's method safeguarded by bisection on a sign-changing bracket.
///
/// `f` returns `(value, derivative)`. Iterates until the bracket is narrower
/// than `rel_tol * |x|` (or an exact zero is hit).
pub fn bracketed_newton<F>(f: F, lo: f64, hi: f64, rel_tol: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoBracket { what, lo, hi });
    }
    // orient so that f(a) < 0 < f(b)
    let flip = fa > 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (mut fx, dfx) = f(x);
        if flip {
            fx = -fx;
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let dfx = if flip { -dfx } else { dfx };
        let newton = x - fx / dfx;
        let next = if dfx.is_finite() && dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= rel_tol * x.abs() || (b - a) <= rel_tol * x.abs() {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`, to absolute width `tol`.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { what, lo, hi });
    }
    let neg_at_a = fa < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lse_handles_huge_spread() {
        let v = log_sum_exp(&[-1000.0, 0.0, -2000.0, 700.0]);
        assert!((v - 700.0).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn newton_finds_sqrt_two() {
        let r = bracketed_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 5.0, 1e-15, "x^2-2").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn newton_reports_missing_bracket() {
        let e = bracketed_newton(|x| (x * x + 1.0, 2.0 * x), 0.0, 5.0, 1e-15, "x^2+1");
        assert!(matches!(e, Err(Error::NoBracket { .. })));
    }

    proptest! {
        #[test]
        fn lse_matches_direct_sum(xs in proptest::collection::vec(-30.0f64..30.0, 1..40)) {
            let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
            prop_assert!((log_sum_exp(&xs) - direct).abs() < 1e-12);
        }
    }
}
