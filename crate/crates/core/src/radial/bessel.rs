//! Bessel functions of the first kind of real order.
//!
//! Small and moderate arguments use the ascending power series summed in
//! double-double arithmetic, which removes the cancellation that otherwise
//! costs up to `e^x` in relative accuracy. Large arguments use Hankel's
//! asymptotic expansion, truncated at its smallest term.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let v = Dd::quick_two_sum(s.hi, s.lo + t.hi);
        Dd::quick_two_sum(v.hi, v.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, o.hi);
        let lo = p.lo + (self.hi * o.lo + self.lo * o.hi);
        Dd::quick_two_sum(p.hi, lo)
    }

    fn mul_f(self, b: f64) -> Dd {
        let p = Dd::two_prod(self.hi, b);
        Dd::quick_two_sum(p.hi, p.lo + self.lo * b)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul_f(q1).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul_f(q2).neg());
        let q3 = r.hi / o.hi;
        Dd::quick_two_sum(q1, q2).add(Dd::from(q3))
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Arguments below this (plus `order^2`) use the power series.
const SERIES_LIMIT: f64 = 25.0;

fn series_limit(order: f64) -> f64 {
    SERIES_LIMIT.max(order * order)
}

/// Terms `T_m = (-1)^m (x^2/4)^m / (m! (nu+1)_m)` summed with weights
/// `c(m)`; returns the double-double sum.
fn series_sum(order: f64, x: f64, weight: impl Fn(usize) -> f64) -> f64 {
    let y = Dd::two_prod(x, x).mul_f(0.25);
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(weight(0)).mul(term);
    let mut m = 0usize;
    loop {
        let k = (m + 1) as f64;
        let denom = Dd::two_sum(k, order).mul_f(k);
        term = term.mul(y).div(denom).neg();
        m += 1;
        let contrib = term.mul_f(weight(m));
        sum = sum.add(contrib);
        let big = (m as f64) * (m as f64 + order) > y.hi;
        if big && contrib.hi.abs() <= 1e-34 * sum.hi.abs().max(1e-300) {
            break;
        }
        if m > 2000 {
            break;
        }
    }
    sum.to_f64()
}

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn series_value(order: f64, x: f64) -> f64 {
    let pre = (0.5 * x).powf(order) / gamma(order + 1.0);
    pre * series_sum(order, x, |_| 1.0)
}

fn series_derivative(order: f64, x: f64) -> f64 {
    // d/dx (x/2)^{2m+nu} = (2m+nu)/2 (x/2)^{2m+nu-1}
    let pre = (0.5 * x).powf(order - 1.0) / gamma(order + 1.0);
    pre * series_sum(order, x, |m| 0.5 * (2.0 * m as f64 + order))
}

/// Hankel expansion: returns (P, Q, dP/dx, dQ/dx).
fn hankel_pq(order: f64, x: f64) -> (f64, f64, f64, f64) {
    let mu = 4.0 * order * order;
    let (mut p, mut q, mut dp, mut dq) = (1.0, 0.0, 0.0, 0.0);
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= prev || a == 0.0 {
            break;
        }
        prev = a.abs();
        // (-1)^{floor(k/2)} sign pattern; a carries x^{-k}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let da = -(k as f64) * a / x;
        if k % 2 == 0 {
            p += sign * a;
            dp += sign * da;
        } else {
            q += sign * a;
            dq += sign * da;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q, dp, dq)
}

fn asymptotic_value(order: f64, x: f64) -> f64 {
    let (p, q, _, _) = hankel_pq(order, x);
    let chi = x - (0.5 * order + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn asymptotic_derivative(order: f64, x: f64) -> f64 {
    let (p, q, dp, dq) = hankel_pq(order, x);
    let chi = x - (0.5 * order + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    let damp = -0.5 * amp / x;
    damp * (p * c - q * s) + amp * (dp * c - dq * s - p * s - q * c)
}

fn check_args(order: f64, x: f64) -> Result<()> {
    if !(order >= 0.0 && order.is_finite()) {
        return Err(Error::invalid("order", format!("{order} must be finite and nonnegative")));
    }
    if x < 0.0 {
        return Err(Error::NegativeArgument(x));
    }
    if !x.is_finite() {
        return Err(Error::invalid("x", format!("{x} must be finite")));
    }
    Ok(())
}

/// `J_order(x)` for real `order >= 0` and `x >= 0`.
pub fn bessel_j(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    Ok(bessel_j_unchecked(order, x))
}

pub(crate) fn bessel_j_unchecked(order: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= series_limit(order) {
        series_value(order, x)
    } else {
        asymptotic_value(order, x)
    }
}

/// `d/dx J_order(x)` from the termwise-differentiated series or asymptotic
/// expansion (no recurrence is used).
pub fn bessel_j_derivative(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    if x == 0.0 {
        return Ok(if order == 1.0 {
            0.5
        } else if order > 0.0 && order < 1.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    Ok(if x <= series_limit(order) {
        series_derivative(order, x)
    } else {
        asymptotic_derivative(order, x)
    })
}
