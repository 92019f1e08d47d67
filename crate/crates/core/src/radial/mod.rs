//! Free radial motion: the eigenvalue problem
//!
//! ```text
//! -i df/dt - r^{1-n} d/dr (r^{n-1} df/dr) + nu/r^2 f = lambda f
//! ```
//!
//! solved by Bessel transforms of order `o = sqrt((n/2 - 1)^2 + nu)`, the
//! closed-form oscillatory integral `p(r, t, lambda)`, the propagator obtained
//! by integrating over `lambda`, and the function `q(r, t)` driving the
//! perturbation series for power potentials (see [`series`]).

mod bessel;
pub mod series;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{damped_halfline_limit, DampedLimit, DampingPlan};

pub use bessel::{bessel_j, bessel_j_derivative};
pub(crate) use bessel::bessel_j_unchecked;
pub use series::{
    partial_sums_from_weights, perturbation_series, weight_integral, PerturbationSeriesSpec, PowerPotential,
    SeriesReport, WeightIntegral,
};

/// Dimension parameter `n` and inverse-square coupling `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParams {
    n: f64,
    nu: f64,
    order: f64,
}

impl RadialParams {
    /// Requires `nu >= -(n/2 - 1)^2` so the Bessel order is real.
    pub fn new(n: f64, nu: f64) -> Result<Self> {
        if !n.is_finite() || !nu.is_finite() {
            return Err(Error::invalid("radial params", "n and nu must be finite"));
        }
        let shift = (-1.0 + 0.5 * n).powi(2);
        if shift + nu < 0.0 {
            return Err(Error::invalid("nu", format!("{nu} < -(n/2 - 1)^2 = {}", -shift)));
        }
        Ok(Self {
            n,
            nu,
            order: (shift + nu).sqrt(),
        })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `o = sqrt((-1 + n/2)^2 + nu)`.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Exponent `1 - n/2` of the radial prefactor.
    fn radial_power(&self) -> f64 {
        1.0 - 0.5 * self.n
    }
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_time(t: f64) -> Result<()> {
    if t == 0.0 {
        Err(Error::SingularTime)
    } else if !t.is_finite() {
        Err(Error::invalid("t", format!("{t} must be finite")))
    } else {
        Ok(())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("r", format!("{r} must be positive and finite")))
    }
}

/// `B_{o/2}(r^2 / (8|t|))`.
fn half_order_bessel(r: f64, t: f64, params: &RadialParams) -> f64 {
    bessel_j_unchecked(0.5 * params.order, r * r / (8.0 * t.abs()))
}

/// Phase `(r^2/(2t) - (1+o) pi sign t) / 4` shared by `p` and `q`.
fn radial_phase(r: f64, t: f64, params: &RadialParams) -> f64 {
    0.25 * (r * r / (2.0 * t) - (1.0 + params.order) * PI * sign(t))
}

/// Closed form of `r^{1-n/2} int_0^inf exp(-i t (k^2 - lambda)) B_o(k r) dk`:
///
/// `exp(i (t lambda + phase)) sqrt(pi) r^{1-n/2} B_{o/2}(r^2/(8|t|)) / (2 sqrt|t|)`.
pub fn p_closed_form(r: f64, t: f64, lambda: f64, params: &RadialParams) -> Result<Complex64> {
    check_radius(r)?;
    check_time(t)?;
    let amp = PI.sqrt() * r.powf(params.radial_power()) * half_order_bessel(r, t, params) / (2.0 * t.abs().sqrt());
    Ok(Complex64::from_polar(1.0, t * lambda + radial_phase(r, t, params)) * amp)
}

/// `q(r, t)`: same phase as `p` at `lambda = 0`, prefactor `pi` instead of
/// `sqrt(pi)`.
pub fn q_function(r: f64, t: f64, params: &RadialParams) -> Result<Complex64> {
    check_radius(r)?;
    check_time(t)?;
    let amp = PI * r.powf(params.radial_power()) * half_order_bessel(r, t, params) / (2.0 * t.abs().sqrt());
    Ok(Complex64::from_polar(1.0, radial_phase(r, t, params)) * amp)
}

/// Damping schedule used for the Bessel-transform integral at time `t`.
/// Dampings stay well inside the radius `|t|` of analyticity in the damping.
pub fn bessel_transform_plan(t: f64) -> DampingPlan {
    DampingPlan::geometric(0.25 * t.abs(), 0.5, 8)
}

/// `r^{1-n/2} int_0^inf exp(-i t (k^2 - lambda)) B_o(k r) dk` by Gaussian
/// damping `exp(-eps k^2)` and extrapolation to `eps = 0`.
pub fn bessel_transform_numeric(
    r: f64,
    t: f64,
    lambda: f64,
    params: &RadialParams,
    plan: &DampingPlan,
) -> Result<DampedLimit> {
    check_radius(r)?;
    check_time(t)?;
    let order = params.order;
    let scale = r.powf(params.radial_power());
    let mut out = damped_halfline_limit(
        |k| Complex64::from_polar(1.0, -t * (k * k - lambda)) * bessel_j_unchecked(order, k * r),
        |k| 2.0 * t.abs() * k + r,
        plan,
    )?;
    out.limit *= scale;
    for v in &mut out.values {
        *v *= scale;
    }
    Ok(out)
}

/// Displayed closed form of the propagator `int p(r,t,l) p(s,u,l) / l dl`:
///
/// `exp(i/4 (r^2/(2t) - s^2/(2u) + (1+o) pi (sign u - sign t))) pi^2 (rs)^{1-n/2}
///  B_{o/2}(r^2/(8|t|)) B_{o/2}(s^2/(8|u|)) sign(t-u) / (4 sqrt|t| sqrt|u|)`.
pub fn propagator_closed_form(r: f64, s: f64, t: f64, u: f64, params: &RadialParams) -> Result<Complex64> {
    check_radius(r)?;
    check_radius(s)?;
    check_time(t)?;
    check_time(u)?;
    let o = params.order;
    let phase = 0.25 * (r * r / (2.0 * t) - s * s / (2.0 * u) + (1.0 + o) * PI * (sign(u) - sign(t)));
    let amp = PI * PI * (r * s).powf(params.radial_power()) * half_order_bessel(r, t, params)
        * half_order_bessel(s, u, params)
        * sign(t - u)
        / (4.0 * t.abs().sqrt() * u.abs().sqrt());
    Ok(Complex64::from_polar(1.0, phase) * amp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorReport {
    pub closed_form: Complex64,
    /// Symmetric principal value of `int p(r,t,l) p(s,u,l) / l dl` outside
    /// `(-pv_cut, pv_cut)`.
    pub principal_value: Complex64,
    /// `|principal_value - closed_form| / |closed_form|`.
    pub relative_discrepancy: f64,
    /// Principal value with the second factor conjugated, `p(r,t,l) conj(p(s,u,l))`.
    pub principal_value_conjugate: Complex64,
    /// `|principal_value_conjugate - i closed_form| / |closed_form|`.
    pub conjugate_discrepancy: f64,
}

/// Closed-form propagator together with a numerical principal-value check of
/// the `lambda` integral. The check is a diagnostic; the closed form is the
/// primary output.
pub fn propagator_lambda_integral(
    r: f64,
    s: f64,
    t: f64,
    u: f64,
    params: &RadialParams,
    pv_cut: f64,
) -> Result<PropagatorReport> {
    if !(pv_cut > 0.0 && pv_cut.is_finite()) {
        return Err(Error::invalid("pv_cut", format!("{pv_cut} must be positive")));
    }
    let closed_form = propagator_closed_form(r, s, t, u, params)?;
    let omega = t.abs() + u.abs() + 1.0;
    let plan = DampingPlan {
        max_width: 0.5,
        ..DampingPlan::geometric(0.05, 0.5, 6)
    };
    let pv = |conjugate: bool| -> Result<Complex64> {
        let term = |lambda: f64| -> Complex64 {
            let a = p_closed_form(r, t, lambda, params).expect("validated");
            let b = p_closed_form(s, u, lambda, params).expect("validated");
            if conjugate {
                a * b.conj()
            } else {
                a * b
            }
        };
        // symmetric pairing: int_{c}^{inf} (P(l) - P(-l)) / l dl
        let shifted = |x: f64| {
            let lambda = x + pv_cut;
            (term(lambda) - term(-lambda)) / lambda
        };
        let out = damped_halfline_limit(shifted, |_| omega, &plan)?;
        Ok(out.limit)
    };
    let principal_value = pv(false)?;
    let principal_value_conjugate = pv(true)?;
    let scale = closed_form.norm().max(f64::MIN_POSITIVE);
    Ok(PropagatorReport {
        closed_form,
        principal_value,
        relative_discrepancy: (principal_value - closed_form).norm() / scale,
        principal_value_conjugate,
        conjugate_discrepancy: (principal_value_conjugate - Complex64::i() * closed_form).norm() / scale,
    })
}

/// Maximum residuals of the derivative identity `2 B_o' = B_{o-1} - B_{o+1}`
/// and the three-term identity `(2o/x) B_o = B_{o-1} + B_{o+1}` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceResiduals {
    pub derivative: f64,
    pub three_term: f64,
    /// Largest gap between the analytic derivative and a central difference.
    pub finite_difference: f64,
}

pub fn check_recurrences(order: f64, grid: &[f64]) -> Result<RecurrenceResiduals> {
    if !(order >= 1.0 && order.is_finite()) {
        return Err(Error::invalid("order", format!("{order} must be at least 1")));
    }
    let mut out = RecurrenceResiduals {
        derivative: 0.0,
        three_term: 0.0,
        finite_difference: 0.0,
    };
    for &x in grid {
        if !(x > 0.0) {
            return Err(Error::invalid("grid", format!("point {x} must be positive")));
        }
        let lower = bessel_j(order - 1.0, x)?;
        let upper = bessel_j(order + 1.0, x)?;
        let mid = bessel_j(order, x)?;
        let deriv = bessel_j_derivative(order, x)?;
        out.derivative = out.derivative.max((2.0 * deriv - lower + upper).abs());
        out.three_term = out.three_term.max((2.0 * order / x * mid - lower - upper).abs());
        let h = 1e-5 * x.max(1.0);
        if x > h {
            let fd = (bessel_j(order, x + h)? - bessel_j(order, x - h)?) / (2.0 * h);
            out.finite_difference = out.finite_difference.max((fd - deriv).abs());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RadialParams {
        RadialParams::new(3.0, 0.0).unwrap()
    }

    #[test]
    fn order_formula() {
        assert_eq!(params().order(), 0.5);
        let p = RadialParams::new(4.0, 3.0).unwrap();
        assert_eq!(p.order(), 2.0);
        assert!(RadialParams::new(3.0, -0.3).is_err());
        assert_eq!(RadialParams::new(3.0, -0.25).unwrap().order(), 0.0);
    }

    #[test]
    fn p_modulus_and_errors() {
        let pr = params();
        let (r, t) = (1.3f64, 0.4f64);
        let z = r * r / (8.0 * t);
        let want = PI.sqrt() * r.powf(-0.5) * bessel_j(0.25, z).unwrap().abs() / (2.0 * t.sqrt());
        for lambda in [-2.0, 0.0, 3.5] {
            assert!((p_closed_form(r, t, lambda, &pr).unwrap().norm() - want).abs() < 1e-15);
        }
        assert_eq!(p_closed_form(1.0, 0.0, 1.0, &pr), Err(Error::SingularTime));
        assert_eq!(q_function(1.0, 0.0, &pr), Err(Error::SingularTime));
    }

    #[test]
    fn p_time_reversal() {
        // p(r,-t,l): phase -(t l) - r^2/(8t)/... equals conj(p(r,t,l)) since sign t flips too
        let pr = params();
        let a = p_closed_form(1.0, 0.5, 2.0, &pr).unwrap();
        let b = p_closed_form(1.0, -0.5, 2.0, &pr).unwrap();
        assert!((a.conj() - b).norm() < 1e-15);
    }

    #[test]
    fn q_modulus_and_ratio() {
        let pr = RadialParams::new(3.0, 0.75).unwrap();
        for i in 1..20 {
            let r = 0.2 * i as f64;
            let t = -0.7;
            let q = q_function(r, t, &pr).unwrap();
            let b = bessel_j(0.5, r * r / (8.0 * 0.7)).unwrap();
            let want = PI * PI * r.powf(-1.0) * b * b / (4.0 * 0.7);
            assert!((q.norm_sqr() - want).abs() <= 1e-14 * want.max(1e-300));
            let p = p_closed_form(r, t, 0.0, &pr).unwrap();
            if p.norm() > 1e-300 {
                assert!((q / p - Complex64::new(PI.sqrt(), 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn q_scaling_invariance() {
        let pr = params();
        let a = half_order_bessel(0.8, 0.3, &pr);
        let b = half_order_bessel(1.6, 1.2, &pr);
        assert_eq!(a, b);
    }

    #[test]
    fn propagator_modulus_and_swap() {
        let pr = params();
        let (r, s, t, u) = (1.0, 0.5, 1.0, 0.7);
        let v = propagator_closed_form(r, s, t, u, &pr).unwrap();
        let br = bessel_j(0.25, r * r / (8.0 * t)).unwrap();
        let bs = bessel_j(0.25, s * s / (8.0 * u)).unwrap();
        let want = PI * PI * (r * s).powf(-0.5) * br.abs() * bs.abs() / (4.0 * (t * u).sqrt());
        assert!((v.norm() - want).abs() < 1e-15);

        let fwd = propagator_closed_form(1.0, 1.0, 0.5, 0.7, &pr).unwrap();
        let swapped = propagator_closed_form(1.0, 1.0, 0.7, 0.5, &pr).unwrap();
        // r = s, so swapping (r,t) <-> (s,u) conjugates the phase and flips sign(t-u)
        assert!((fwd + swapped.conj()).norm() < 1e-15);
    }

    #[test]
    fn recurrence_checks() {
        for order in [1.0, 1.5] {
            let res = check_recurrences(order, &[0.5, 1.0, 2.0, 5.0]).unwrap();
            assert!(res.derivative <= 1e-9 && res.three_term <= 1e-9, "{order}: {res:?}");
            assert!(res.finite_difference <= 1e-8);
        }
        let res = check_recurrences(1.0, &[1e-3]).unwrap();
        assert!(res.three_term <= 1e-6);
        assert!(check_recurrences(0.5, &[1.0]).is_err());
    }

    #[test]
    fn eq14_single_point() {
        let pr = params();
        let (r, t, lambda) = (1.0, 0.5, 1.0);
        let numeric = bessel_transform_numeric(r, t, lambda, &pr, &bessel_transform_plan(t)).unwrap();
        let closed = p_closed_form(r, t, lambda, &pr).unwrap();
        let rel = (numeric.limit - closed).norm() / closed.norm();
        assert!(rel <= 1e-4, "rel = {rel}; {:?} vs {closed}", numeric.limit);
    }

    #[test]
    fn principal_value_discrepancy_is_stable() {
        let pr = params();
        let a = propagator_lambda_integral(1.0, 1.0, 0.5, -0.5, &pr, 1e-3).unwrap();
        let b = propagator_lambda_integral(1.0, 1.0, 0.5, -0.5, &pr, 5e-4).unwrap();
        let ratio = b.relative_discrepancy / a.relative_discrepancy;
        assert!((0.8..=1.2).contains(&ratio), "{a:?} {b:?}");
        // with the second factor conjugated the remainder is O(pv_cut)
        let shrink = b.conjugate_discrepancy / a.conjugate_discrepancy;
        assert!((0.4..=0.6).contains(&shrink), "{shrink}");
    }
}
