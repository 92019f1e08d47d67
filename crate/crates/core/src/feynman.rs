//! The Feynman integral of a cylinder function as the limit of complex
//! cylinder integrals against regularized Schrodinger kernels.
//!
//! The regularized kernel is the heat kernel continued to complex time
//! `eps + i (u - t)`; for `eps > 0` it is smooth and bounded, and as
//! `eps -> 0` it approaches the (distributional) propagator of
//! `i du/dt = -u''`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::complex_measure::{complex_cylinder_integral, ComplexIntegration};
use crate::cylinder::{CylinderFunction, TimeInterval};
use crate::error::{Error, Result};
use crate::extrapolate::{observed_order, richardson_first_order};
use crate::kernel::{circle_series, halfline_images, interval_series, ConfigSpace, PinnedMeasure, SpaceKind, TransitionKernel};

/// Geometric sequence `eps_k = eps0 * ratio^k`, `k < steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationSchedule {
    eps0: f64,
    ratio: f64,
    steps: usize,
}

impl RegularizationSchedule {
    pub fn new(eps0: f64, ratio: f64, steps: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(Error::RegularizationNotPositive(eps0));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid("ratio", format!("{ratio} must lie in (0, 1)")));
        }
        if steps < 2 {
            return Err(Error::invalid("steps", format!("{steps} must be at least 2")));
        }
        Ok(Self { eps0, ratio, steps })
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * self.ratio.powi(k as i32)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.eps(k)).collect()
    }
}

/// Smooth approximation of the free Schrodinger propagator on `space`:
/// the heat kernel at complex time `eps + i (u - t)`. Defined for `t <= u`.
pub fn schrodinger_kernel_regularized(space: &ConfigSpace, eps: f64, spectral_terms: usize) -> Result<TransitionKernel> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::RegularizationNotPositive(eps));
    }
    if spectral_terms == 0 {
        return Err(Error::invalid("spectral_terms", "need at least one term"));
    }
    let kernel = match space.kind() {
        SpaceKind::Circle { circumference } => TransitionKernel::new(
            format!("schrodinger-circle(L={circumference}, eps={eps:e}, M={spectral_terms})"),
            false,
            move |t, u, x, y| circle_series(circumference, spectral_terms, Complex64::new(eps, u - t), x - y),
        ),
        SpaceKind::Interval { a, b, boundary } => TransitionKernel::new(
            format!("schrodinger-interval([{a}, {b}], {boundary:?}, eps={eps:e}, M={spectral_terms})"),
            false,
            move |t, u, x, y| interval_series(a, b, boundary, spectral_terms, Complex64::new(eps, u - t), x, y),
        ),
        SpaceKind::HalfLine { .. } => TransitionKernel::new(
            format!("schrodinger-halfline(eps={eps:e})"),
            false,
            move |t, u, x, y| halfline_images(Complex64::new(eps, u - t), x, y),
        ),
    };
    Ok(kernel.allowing_equal_times())
}

/// A cylinder function pinned at `(start_time, start_point)` on a space.
#[derive(Debug, Clone)]
pub struct FeynmanProblem {
    pub space: ConfigSpace,
    pub interval: TimeInterval,
    pub spectral_terms: usize,
    pub start_time: f64,
    pub start_point: f64,
    /// Times `t_1 < ... < t_n` after the start, with the body `phi`.
    pub function: CylinderFunction,
    pub cache_kernels: bool,
    pub method: ComplexIntegration,
}

impl FeynmanProblem {
    /// Complex cylinder integral at one regularization value.
    pub fn integral_at(&self, eps: f64) -> Result<Complex64> {
        let kernel = schrodinger_kernel_regularized(&self.space, eps, self.spectral_terms)?;
        let measure = PinnedMeasure::new(self.space.clone(), kernel, self.interval, self.start_time, self.start_point)?
            .with_kernel_cache(self.cache_kernels);
        complex_cylinder_integral(&measure, &self.function, self.method)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub eps: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `|values[k+1] - values[k]|`.
    pub cauchy_gaps: Vec<f64>,
    /// First-order Richardson estimate from the last two values.
    pub limit_estimate: Complex64,
    /// Empirical order in eps from the last three values, when defined.
    pub observed_order: Option<f64>,
    pub converged: bool,
    /// First index from which every later gap is within tolerance.
    pub converged_at: Option<usize>,
    pub tolerance: f64,
}

/// Gaps below this (relative to the sequence scale) are roundoff.
const GAP_NOISE: f64 = 1e-13;

/// Assemble a report from values computed on a geometric schedule.
///
/// Converged means the final gap is within `tolerance` and the gaps are
/// nonincreasing at the end of the sequence (gaps under the roundoff floor
/// count as zero).
pub fn assess_convergence(eps: Vec<f64>, values: Vec<Complex64>, ratio: f64, tolerance: f64) -> ConvergenceReport {
    assert!(values.len() >= 2 && eps.len() == values.len());
    let gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let scale = values.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
    let floor = GAP_NOISE * scale;
    let floored: Vec<f64> = gaps.iter().map(|&g| if g <= floor { 0.0 } else { g }).collect();
    let n = values.len();
    let limit_estimate = if floored[n - 2] == 0.0 {
        values[n - 1]
    } else {
        richardson_first_order(values[n - 2], values[n - 1], ratio)
    };
    let tail_decreasing = floored.len() < 2 || floored[floored.len() - 1] <= floored[floored.len() - 2];
    let final_ok = gaps[gaps.len() - 1] <= tolerance;
    let converged_at = if final_ok {
        let mut k = gaps.len();
        while k > 0 && gaps[k - 1] <= tolerance {
            k -= 1;
        }
        Some(k)
    } else {
        None
    };
    ConvergenceReport {
        eps,
        observed_order: observed_order(&values, ratio),
        values,
        cauchy_gaps: gaps,
        limit_estimate,
        converged: final_ok && tail_decreasing,
        converged_at,
        tolerance,
    }
}

/// Sweep the schedule and report on the limit of the integrals.
pub fn feynman_integral(
    problem: &FeynmanProblem,
    schedule: &RegularizationSchedule,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    let eps = schedule.values();
    let values: Vec<Result<Complex64>> = eps.par_iter().map(|&e| problem.integral_at(e)).collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(assess_convergence(eps, values, schedule.ratio(), tolerance))
}

/// Limits from two schedules and their difference.
pub fn cross_check_schedules(
    problem: &FeynmanProblem,
    a: &RegularizationSchedule,
    b: &RegularizationSchedule,
    tolerance: f64,
) -> Result<(ConvergenceReport, ConvergenceReport, f64)> {
    let ra = feynman_integral(problem, a, tolerance)?;
    let rb = feynman_integral(problem, b, tolerance)?;
    let d = (ra.limit_estimate - rb.limit_estimate).norm();
    Ok((ra, rb, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{cylinder_integral, heat_kernel_circle};
    use crate::quadrature::{integrate_1d, QuadratureRule};
    use std::f64::consts::PI;

    #[test]
    fn schedule_validation() {
        assert_eq!(
            RegularizationSchedule::new(0.0, 0.5, 4).unwrap_err(),
            Error::RegularizationNotPositive(0.0)
        );
        assert!(RegularizationSchedule::new(0.1, 1.0, 4).is_err());
        assert!(RegularizationSchedule::new(0.1, 0.5, 1).is_err());
        let s = RegularizationSchedule::new(0.1, 0.5, 4).unwrap();
        assert!(s.values().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn regularized_kernel_examples() {
        let space = ConfigSpace::circle(1.0, 64).unwrap();
        assert!(matches!(
            schrodinger_kernel_regularized(&space, -1.0, 10),
            Err(Error::RegularizationNotPositive(_))
        ));
        let eps = 0.02;
        let k = schrodinger_kernel_regularized(&space, eps, 40).unwrap();
        let heat = heat_kernel_circle(1.0, 40).unwrap();
        for &(x, y) in &[(0.1, 0.6), (0.5, 0.5), (0.0, 0.99)] {
            assert_eq!(k.eval(0.3, 0.3, x, y).unwrap().re, heat.eval(0.0, eps, x, y).unwrap().re);
        }
        let rule = QuadratureRule::trapezoid_periodic(0.0, 1.0, 128).unwrap();
        for &gap in &[0.0, 0.1, 0.77] {
            let m = integrate_1d(|y| k.eval(0.0, gap, 0.3, y).unwrap(), &rule).unwrap();
            assert!((m - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
        let bound: f64 = (-40i32..=40)
            .map(|m| (-(2.0 * PI * m as f64).powi(2) * eps).exp())
            .sum();
        for i in 0..50 {
            let v = k.eval(0.0, 0.013 * i as f64, 0.2, 0.02 * i as f64).unwrap();
            assert!(v.norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn assess_constant_sequence() {
        let r = assess_convergence(vec![0.1, 0.05, 0.025], vec![Complex64::new(1.0, 0.0); 3], 0.5, 1e-6);
        assert!(r.converged);
        assert_eq!(r.converged_at, Some(0));
        assert_eq!(r.limit_estimate, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn assess_rejects_growing_gaps() {
        let vals = vec![1.0, 1.0 + 1e-9, 1.0 + 3e-9, 1.0 + 7e-9]
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        let r = assess_convergence(vec![0.4, 0.2, 0.1, 0.05], vals, 0.5, 1e-6);
        assert!(!r.converged);
    }

    #[test]
    fn large_eps_matches_heat_flow() {
        // at a single slot, complex time eps + i(t1 - t0) with t1 = t0 is the heat kernel
        let space = ConfigSpace::circle(1.0, 64).unwrap();
        let interval = TimeInterval::new(1.0).unwrap();
        let f = CylinderFunction::new(vec![0.3], 1.0, |x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0)).unwrap();
        let k = schrodinger_kernel_regularized(&space, 0.3, 40).unwrap();
        let m = PinnedMeasure::new(space.clone(), k, interval, 0.0, 0.1).unwrap();
        let heat = m.with_kernel(heat_kernel_circle(1.0, 40).unwrap());
        let fh = CylinderFunction::new(vec![0.3], 1.0, |x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0)).unwrap();
        let schro = cylinder_integral(&m, &f).unwrap();
        let heat_v = cylinder_integral(&heat, &fh).unwrap();
        // modulus of exp(-(2pi)^2 (eps + i t)) equals heat decay at eps
        assert!((schro.norm() - heat_v.norm()).abs() < 1e-12);
    }

    #[test]
    fn free_mode_limit_single_time() {
        let space = ConfigSpace::circle(1.0, 96).unwrap();
        let (t0, t1, x0) = (0.0, 0.2, 0.35);
        let body = CylinderFunction::new(vec![t1], 1.0, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0])).unwrap();
        let problem = FeynmanProblem {
            space,
            interval: TimeInterval::new(1.0).unwrap(),
            spectral_terms: 40,
            start_time: t0,
            start_point: x0,
            function: body,
            cache_kernels: true,
            method: ComplexIntegration::Direct,
        };
        let schedule = RegularizationSchedule::new(1e-3, 0.25, 10).unwrap();
        let report = feynman_integral(&problem, &schedule, 1e-6).unwrap();
        let lam = (2.0 * PI).powi(2);
        let exact = Complex64::from_polar(1.0, -lam * (t1 - t0) + 2.0 * PI * x0);
        assert!(report.converged, "{report:?}");
        assert!((report.limit_estimate - exact).norm() <= 1e-6);
        let order = report.observed_order.unwrap();
        assert!((0.7..=1.3).contains(&order), "{order}");
    }

    fn circle_problem(times: Vec<f64>, body: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> FeynmanProblem {
        FeynmanProblem {
            space: ConfigSpace::circle(1.0, 96).unwrap(),
            interval: TimeInterval::new(1.0).unwrap(),
            spectral_terms: 40,
            start_time: 0.0,
            start_point: 0.35,
            function: CylinderFunction::new(times, 1.0 + 1e-12, body).unwrap(),
            cache_kernels: true,
            method: ComplexIntegration::Direct,
        }
    }

    #[test]
    fn constant_body_is_normalized_at_every_step() {
        let problem = circle_problem(vec![0.2, 0.5], |_| Complex64::new(1.0, 0.0));
        let schedule = RegularizationSchedule::new(1e-2, 0.5, 5).unwrap();
        let report = feynman_integral(&problem, &schedule, 1e-6).unwrap();
        for v in &report.values {
            assert!((v - 1.0).norm() < 1e-13, "{v}");
        }
        assert!(report.converged);
        assert_eq!(report.converged_at, Some(0));
    }

    #[test]
    fn ignored_first_slot_reproduces_single_time_limit() {
        let mode = |x: f64| Complex64::from_polar(1.0, 2.0 * PI * x);
        let two = circle_problem(vec![0.1, 0.3], move |x| mode(x[1]));
        let one = circle_problem(vec![0.3], move |x| mode(x[0]));
        let schedule = RegularizationSchedule::new(1e-3, 0.25, 10).unwrap();
        let a = feynman_integral(&two, &schedule, 1e-6).unwrap();
        let b = feynman_integral(&one, &schedule, 1e-6).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.limit_estimate - b.limit_estimate).norm() <= 1e-6);
    }
}
