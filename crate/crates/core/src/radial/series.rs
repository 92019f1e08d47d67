//! Perturbation series of the radial propagator for power potentials.
//!
//! With `w_j = int_0^inf |q(x, t_j)|^2 V(x) dx` the partial sums are
//!
//! ```text
//! S_k = q(r, t) conj(q(s, u)) sum_{i=0}^{k} prod_{j=1}^{i} w_j,   t < t_1 < ... < t_k < u
//! ```
//!
//! The intermediate times enter only through the weights; they are fixed
//! inputs, not integrated over.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{bessel_j_unchecked, check_radius, check_time, q_function, RadialParams};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_real, mesh_from_width, QuadratureRule};

/// `V(r) = r^e` with `e > -1`, integrated up to `tail_cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPotential {
    exponent: f64,
    tail_cutoff: f64,
}

impl PowerPotential {
    pub fn new(exponent: f64, tail_cutoff: f64) -> Result<Self> {
        if !(exponent > -1.0) || !exponent.is_finite() {
            return Err(Error::InadmissiblePotential(exponent));
        }
        if !(tail_cutoff > 0.0 && tail_cutoff.is_finite()) {
            return Err(Error::invalid("tail_cutoff", format!("{tail_cutoff} must be positive")));
        }
        Ok(Self { exponent, tail_cutoff })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn tail_cutoff(&self) -> f64 {
        self.tail_cutoff
    }

    pub fn eval(&self, r: f64) -> f64 {
        r.powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightIntegral {
    pub value: f64,
    /// Contribution of `[0, head_end]`, summed from the small-argument series.
    pub head: f64,
    pub head_end: f64,
    /// Estimated contribution beyond the cutoff, extrapolated from the last
    /// decade `[cutoff/10, cutoff]` with the large-x power law `x^{e-n}`.
    /// Infinite when that power law is not integrable.
    pub tail_estimate: f64,
    /// Tail estimate above 1% of the value.
    pub tail_warning: bool,
}

/// `|q(x, t)|^2 V(x) = pi^2/(4|t|) x^{2-n} B_{o/2}^2(x^2/(8|t|)) x^e`.
pub fn weight_integrand(x: f64, t: f64, params: &RadialParams, potential: &PowerPotential) -> f64 {
    let b = bessel_j_unchecked(0.5 * params.order, x * x / (8.0 * t.abs()));
    PI * PI / (4.0 * t.abs()) * x.powf(2.0 - params.n + potential.exponent) * b * b
}

/// Coefficients of `J_mu(z)^2 = (z/2)^{2mu} sum_m d_m (z/2)^{2m}`.
fn squared_series_coefficients(mu: f64, terms: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(terms);
    let mut cm = 1.0 / libm::tgamma(mu + 1.0);
    for m in 0..terms {
        if m > 0 {
            cm = -cm / (m as f64 * (m as f64 + mu));
        }
        c.push(cm);
    }
    (0..terms)
        .map(|m| (0..=m).map(|i| c[i] * c[m - i]).sum())
        .collect()
}

/// `int_0^delta |q|^2 V dx` from the term-by-term integrated power series.
/// Accurate for `delta^2 / (16|t|)` at most about 1.
fn head_integral(delta: f64, t: f64, params: &RadialParams, potential: &PowerPotential) -> f64 {
    let mu = 0.5 * params.order;
    let base = 2.0 - params.n + potential.exponent;
    let w = delta * delta / (16.0 * t.abs());
    let d = squared_series_coefficients(mu, 40);
    let mut sum = 0.0;
    for (m, dm) in d.iter().enumerate() {
        let p = base + 4.0 * mu + 4.0 * m as f64;
        let term = dm * w.powf(2.0 * mu + 2.0 * m as f64) / (p + 1.0);
        sum += term;
        if m > 2 && term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    PI * PI / (4.0 * t.abs()) * delta.powf(3.0 - params.n + potential.exponent) * sum
}

/// `int_0^cutoff |q(x, t_j)|^2 V(x) dx` for the power potential.
///
/// `[0, delta]` is summed analytically from the Bessel series (the integrand
/// behaves like `x^{2-n+e+2o}` there); the rest uses composite Gauss-Legendre
/// on panels that grow geometrically away from the origin and shrink with the
/// oscillation of `B^2`.
pub fn weight_integral(t_j: f64, params: &RadialParams, potential: &PowerPotential) -> Result<WeightIntegral> {
    check_time(t_j)?;
    let (n, e) = (params.n, potential.exponent);
    if !(3.0 - n + e + 2.0 * params.order > 0.0) {
        return Err(Error::invalid(
            "potential",
            format!("integrand not integrable at 0 for n = {n}, e = {e}, o = {}", params.order),
        ));
    }
    let tabs = t_j.abs();
    let cutoff = potential.tail_cutoff;
    let head_end = (2.0 * tabs.sqrt()).min(cutoff);
    let head = head_integral(head_end, t_j, params, potential);
    let f = |x: f64| weight_integrand(x, t_j, params, potential);

    let (body, last_decade) = if cutoff > head_end {
        let breaks = mesh_from_width(head_end, cutoff, |x| {
            let omega = x / (2.0 * tabs) + 1.0;
            x.min(0.5).min(4.0 / omega)
        });
        let rule = QuadratureRule::gauss_legendre_mesh(&breaks, 10)?;
        let decade_start = cutoff / 10.0;
        let decade: f64 = rule
            .iter()
            .filter(|&(x, _)| x >= decade_start)
            .map(|(x, w)| w * f(x))
            .sum();
        (integrate_real(f, &rule)?, decade)
    } else {
        (0.0, head)
    };
    let value = head + body;
    let a = e - n;
    let tail_estimate = if a + 1.0 < 0.0 {
        last_decade.abs() / (10f64.powf(-(a + 1.0)) - 1.0)
    } else {
        f64::INFINITY
    };
    if !value.is_finite() {
        return Err(Error::NonFiniteIntegrand { node: vec![t_j] });
    }
    Ok(WeightIntegral {
        value,
        head,
        head_end,
        tail_estimate,
        tail_warning: tail_estimate > 0.01 * value.abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeriesSpec {
    params: RadialParams,
    potential: PowerPotential,
    t: f64,
    inner_times: Vec<f64>,
    u: f64,
    r: f64,
    s: f64,
}

impl PerturbationSeriesSpec {
    /// Requires `t < t_1 < ... < t_k < u`, all nonzero, and `r, s > 0`.
    pub fn new(
        params: RadialParams,
        potential: PowerPotential,
        t: f64,
        inner_times: Vec<f64>,
        u: f64,
        r: f64,
        s: f64,
    ) -> Result<Self> {
        check_radius(r)?;
        check_radius(s)?;
        let mut all = vec![t];
        all.extend_from_slice(&inner_times);
        all.push(u);
        if let Some(w) = all.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::TimeOrdering(format!("{} is not before {}", w[0], w[1])));
        }
        for &time in &all {
            check_time(time)?;
        }
        Ok(Self {
            params,
            potential,
            t,
            inner_times,
            u,
            r,
            s,
        })
    }

    pub fn inner_times(&self) -> &[f64] {
        &self.inner_times
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    /// `q(r, t) conj(q(s, u))`.
    pub prefactor: Complex64,
    pub weights: Vec<WeightIntegral>,
    /// `S_0, ..., S_kmax`.
    pub partial_sums: Vec<Complex64>,
}

impl SeriesReport {
    /// Successive ratios `|S_{k+1}| / |S_k|`.
    pub fn growth_ratios(&self) -> Vec<f64> {
        self.partial_sums.windows(2).map(|w| w[1].norm() / w[0].norm()).collect()
    }
}

/// `S_k = prefactor * sum_{i=0}^{k} prod_{j<=i} w_j` for `k = 0..=weights.len()`.
pub fn partial_sums_from_weights(prefactor: Complex64, weights: &[f64]) -> Vec<Complex64> {
    let mut sums = Vec::with_capacity(weights.len() + 1);
    let mut product = 1.0;
    let mut running = 1.0;
    sums.push(prefactor * running);
    for &w in weights {
        product *= w;
        running += product;
        sums.push(prefactor * running);
    }
    sums
}

pub fn perturbation_series(spec: &PerturbationSeriesSpec, k_max: usize) -> Result<SeriesReport> {
    if k_max > spec.inner_times.len() {
        return Err(Error::invalid(
            "k_max",
            format!("{k_max} exceeds the {} intermediate times", spec.inner_times.len()),
        ));
    }
    let prefactor = q_function(spec.r, spec.t, &spec.params)? * q_function(spec.s, spec.u, &spec.params)?.conj();
    let weights = spec.inner_times[..k_max]
        .iter()
        .map(|&tj| weight_integral(tj, &spec.params, &spec.potential))
        .collect::<Result<Vec<_>>>()?;
    let w: Vec<f64> = weights.iter().map(|w| w.value).collect();
    Ok(SeriesReport {
        prefactor,
        partial_sums: partial_sums_from_weights(prefactor, &w),
        weights,
    })
}
