//! Transition kernels, configuration spaces and pinned product measures.
//!
//! A pinned measure starts every path at `x_0` at time `t_0`. For a cylinder
//! function at distinct times `t_0 < t_1 < ... < t_n` its integral is
//!
//! ```text
//! int_{X^n} a(x_1, .., x_n) prod_i K(t_{i-1}, t_i, x_{i-1}, x_i) dx_1 .. dx_n
//! ```
//!
//! evaluated on the tensor grid of the space's quadrature rule.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cylinder::{CylinderFunction, TimeInterval};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, RuleKind, TensorRule};

/// Default number of spectral modes in truncated kernel series.
pub const DEFAULT_SPECTRAL_TERMS: usize = 40;

/// Allowed drift when the number of spectral terms is doubled.
pub const SPECTRAL_DRIFT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceKind {
    Circle { circumference: f64 },
    Interval { a: f64, b: f64, boundary: Boundary },
    /// Half-line `(0, inf)` with absorbing wall at 0, truncated at `cutoff`
    /// for quadrature.
    HalfLine { cutoff: f64 },
}

/// A one-dimensional configuration space with its quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    kind: SpaceKind,
    rule: QuadratureRule,
}

impl ConfigSpace {
    /// Circle of circumference `circumference`, periodic trapezoid rule on
    /// `[0, L)`. With `M` spectral terms, `nodes > 2M` makes products of two
    /// kernels integrate without aliasing.
    pub fn circle(circumference: f64, nodes: usize) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(Error::invalid("L", format!("circumference {circumference} must be positive")));
        }
        Ok(Self {
            kind: SpaceKind::Circle { circumference },
            rule: QuadratureRule::trapezoid_periodic(0.0, circumference, nodes)?,
        })
    }

    pub fn interval(a: f64, b: f64, boundary: Boundary, panels: usize, points: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("interval", format!("need finite a < b, got [{a}, {b}]")));
        }
        Ok(Self {
            kind: SpaceKind::Interval { a, b, boundary },
            rule: QuadratureRule::gauss_legendre(a, b, panels, points)?,
        })
    }

    pub fn halfline(cutoff: f64, panels: usize, points: usize) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid("cutoff", format!("{cutoff} must be positive")));
        }
        Ok(Self {
            kind: SpaceKind::HalfLine { cutoff },
            rule: QuadratureRule::gauss_legendre(0.0, cutoff, panels, points)?,
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Total volume of the (truncated) space.
    pub fn volume(&self) -> f64 {
        let (a, b) = self.rule.domain();
        b - a
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.kind {
            SpaceKind::Circle { circumference } => (0.0..circumference).contains(&x),
            SpaceKind::Interval { a, b, .. } => (a..=b).contains(&x),
            SpaceKind::HalfLine { cutoff } => x > 0.0 && x <= cutoff,
        }
    }

    fn check_rule(&self) {
        debug_assert_eq!(
            self.rule.kind(),
            match self.kind {
                SpaceKind::Circle { .. } => RuleKind::TrapezoidPeriodic,
                _ => RuleKind::GaussLegendreComposite,
            }
        );
    }
}

pub type KernelFn = dyn Fn(f64, f64, f64, f64) -> Complex64 + Send + Sync;

/// A function `(t, u, x, y) -> K` weighting a move from `x` at time `t` to
/// `y` at time `u`.
#[derive(Clone)]
pub struct TransitionKernel {
    eval: Arc<KernelFn>,
    label: String,
    positive: bool,
    allow_equal_times: bool,
}

impl fmt::Debug for TransitionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionKernel")
            .field("label", &self.label)
            .field("positive", &self.positive)
            .finish_non_exhaustive()
    }
}

impl TransitionKernel {
    /// A kernel defined for `t < u`. `positive` certifies real nonnegative
    /// values; it is not checked here (see [`TransitionKernel::verify_positivity`]).
    pub fn new<F>(label: impl Into<String>, positive: bool, eval: F) -> Self
    where
        F: Fn(f64, f64, f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            label: label.into(),
            positive,
            allow_equal_times: false,
        }
    }

    /// Also accept `t == u` (kernels that stay smooth at zero time gap).
    pub fn allowing_equal_times(mut self) -> Self {
        self.allow_equal_times = true;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn check_times(&self, t: f64, u: f64) -> Result<()> {
        if t < u || (self.allow_equal_times && t == u) {
            Ok(())
        } else {
            Err(Error::KernelTimeOrder { t, u })
        }
    }

    pub fn eval(&self, t: f64, u: f64, x: f64, y: f64) -> Result<Complex64> {
        self.check_times(t, u)?;
        Ok((self.eval)(t, u, x, y))
    }

    /// Evaluation without the time-order check; callers validate once per
    /// time gap.
    pub(crate) fn eval_unchecked(&self, t: f64, u: f64, x: f64, y: f64) -> Complex64 {
        (self.eval)(t, u, x, y)
    }

    /// Derived kernel `g(K(t, u, x, y))`.
    pub fn map<G>(&self, label: impl Into<String>, positive: bool, g: G) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.eval);
        Self {
            eval: Arc::new(move |t, u, x, y| g(inner(t, u, x, y))),
            label: label.into(),
            positive,
            allow_equal_times: self.allow_equal_times,
        }
    }

    /// Pointwise modulus `|K|`.
    pub fn modulus(&self) -> Self {
        self.map(format!("|{}|", self.label), true, |z| Complex64::new(z.norm(), 0.0))
    }

    /// True when every sample is real (imaginary part within `1e-15` of
    /// the modulus) with real part at least `-tol`.
    pub fn verify_positivity(&self, samples: &[(f64, f64, f64, f64)], tol: f64) -> bool {
        samples.iter().all(|&(t, u, x, y)| {
            let v = (self.eval)(t, u, x, y);
            v.re >= -tol && v.im.abs() <= 1e-15 * v.norm().max(1e-300)
        })
    }
}

/// `(1/L) sum_{|m| <= M} exp(-(2 pi m / L)^2 z) cos(2 pi m d / L)` for complex
/// time `z`.
pub(crate) fn circle_series(circumference: f64, terms: usize, z: Complex64, d: f64) -> Complex64 {
    let base = 2.0 * PI / circumference;
    let mut acc = Complex64::new(1.0, 0.0);
    for m in 1..=terms {
        let k = base * m as f64;
        acc += (-z * (k * k)).exp() * (2.0 * (k * d).cos());
    }
    acc / circumference
}

/// Dirichlet (sine) or Neumann (cosine) eigenfunction series on [a, b].
pub(crate) fn interval_series(
    a: f64,
    b: f64,
    boundary: Boundary,
    terms: usize,
    z: Complex64,
    x: f64,
    y: f64,
) -> Complex64 {
    let len = b - a;
    let base = PI / len;
    let (xs, ys) = (x - a, y - a);
    match boundary {
        Boundary::Dirichlet => {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 1..=terms {
                let k = base * m as f64;
                acc += (-z * (k * k)).exp() * ((k * xs).sin() * (k * ys).sin());
            }
            acc * (2.0 / len)
        }
        Boundary::Neumann => {
            let mut acc = Complex64::new(1.0, 0.0);
            for m in 1..=terms {
                let k = base * m as f64;
                acc += (-z * (k * k)).exp() * (2.0 * (k * xs).cos() * (k * ys).cos());
            }
            acc / len
        }
    }
}

/// Method-of-images kernel of the half-line with absorbing wall at 0, for
/// complex time with positive real part.
pub(crate) fn halfline_images(z: Complex64, x: f64, y: f64) -> Complex64 {
    let four_z = z * 4.0;
    let norm = (four_z * PI).sqrt().inv();
    let dm = x - y;
    let dp = x + y;
    norm * ((-(dm * dm) / four_z).exp() - (-(dp * dp) / four_z).exp())
}

fn clamp_if(positive: bool, v: Complex64) -> Complex64 {
    if positive {
        Complex64::new(v.re.max(0.0), 0.0)
    } else {
        v
    }
}

fn positivity_grid(len: f64, lo: f64) -> Vec<(f64, f64)> {
    // (time gap, coordinate offset) pairs
    let mut out = Vec::new();
    for j in 0..8 {
        let tau = len * len * 10f64.powf(-3.0 + 3.0 * j as f64 / 7.0);
        for i in 0..=64 {
            out.push((tau, lo + len * i as f64 / 64.0));
        }
    }
    out
}

/// Heat kernel of the circle of circumference `L` as a truncated Fourier
/// series. Flagged positive (and clamped at zero) when the truncation is
/// nonnegative to `-1e-12` on a verification grid.
pub fn heat_kernel_circle(circumference: f64, spectral_terms: usize) -> Result<TransitionKernel> {
    if !(circumference > 0.0 && circumference.is_finite()) {
        return Err(Error::invalid("L", format!("circumference {circumference} must be positive")));
    }
    if spectral_terms == 0 {
        return Err(Error::invalid("spectral_terms", "need at least one term"));
    }
    let positive = positivity_grid(circumference, 0.0)
        .into_iter()
        .all(|(tau, d)| circle_series(circumference, spectral_terms, Complex64::new(tau, 0.0), d).re >= -1e-12);
    Ok(TransitionKernel::new(
        format!("heat-circle(L={circumference}, M={spectral_terms})"),
        positive,
        move |t, u, x, y| {
            clamp_if(
                positive,
                circle_series(circumference, spectral_terms, Complex64::new(u - t, 0.0), x - y),
            )
        },
    ))
}

/// Heat kernel on `[a, b]` with absorbing (Dirichlet) or reflecting
/// (Neumann) walls.
pub fn heat_kernel_interval(a: f64, b: f64, boundary: Boundary, spectral_terms: usize) -> Result<TransitionKernel> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("interval", format!("need finite a < b, got [{a}, {b}]")));
    }
    if spectral_terms == 0 {
        return Err(Error::invalid("spectral_terms", "need at least one term"));
    }
    let len = b - a;
    let grid = positivity_grid(len, a);
    let positive = grid.iter().all(|&(tau, x)| {
        grid.iter().take(65).all(|&(_, y)| {
            interval_series(a, b, boundary, spectral_terms, Complex64::new(tau, 0.0), x, y).re >= -1e-12
        })
    });
    Ok(TransitionKernel::new(
        format!("heat-interval([{a}, {b}], {boundary:?}, M={spectral_terms})"),
        positive,
        move |t, u, x, y| {
            clamp_if(
                positive,
                interval_series(a, b, boundary, spectral_terms, Complex64::new(u - t, 0.0), x, y),
            )
        },
    ))
}

/// Heat kernel of the half-line with absorbing wall (closed form, no
/// truncation).
pub fn heat_kernel_halfline() -> TransitionKernel {
    TransitionKernel::new("heat-halfline(dirichlet)", true, |t, u, x, y| {
        clamp_if(true, halfline_images(Complex64::new(u - t, 0.0), x, y))
    })
}

/// Heat kernel matching the space's geometry and boundary condition.
pub fn heat_kernel(space: &ConfigSpace, spectral_terms: usize) -> Result<TransitionKernel> {
    match space.kind() {
        SpaceKind::Circle { circumference } => heat_kernel_circle(circumference, spectral_terms),
        SpaceKind::Interval { a, b, boundary } => heat_kernel_interval(a, b, boundary, spectral_terms),
        SpaceKind::HalfLine { .. } => Ok(heat_kernel_halfline()),
    }
}

/// Largest change of the truncated heat kernel when `terms` is doubled, over
/// time gaps in `[min_gap, 100 min_gap]` and a coordinate grid.
pub fn spectral_drift(space: &ConfigSpace, terms: usize, min_gap: f64) -> Result<f64> {
    let coarse = heat_kernel(space, terms)?;
    let fine = heat_kernel(space, 2 * terms)?;
    let (lo, hi) = space.rule().domain();
    let mut worst = 0.0f64;
    for j in 0..5 {
        let tau = min_gap * 10f64.powf(j as f64 / 2.0);
        for i in 0..=16 {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / 17.5;
            for k in 0..=16 {
                let y = lo + (hi - lo) * (k as f64 + 0.25) / 17.5;
                let d = coarse.eval(0.0, tau, x, y)? - fine.eval(0.0, tau, x, y)?;
                worst = worst.max(d.norm());
            }
        }
    }
    Ok(worst)
}

/// Product measure on path space pinned at `(start_time, start_point)`.
#[derive(Debug, Clone)]
pub struct PinnedMeasure {
    space: ConfigSpace,
    kernel: TransitionKernel,
    interval: TimeInterval,
    start_time: f64,
    start_point: f64,
    cache_kernels: bool,
}

impl PinnedMeasure {
    pub fn new(
        space: ConfigSpace,
        kernel: TransitionKernel,
        interval: TimeInterval,
        start_time: f64,
        start_point: f64,
    ) -> Result<Self> {
        interval.point(start_time)?;
        if !space.contains(start_point) {
            return Err(Error::invalid("start_point", format!("{start_point} is outside the configuration space")));
        }
        space.check_rule();
        Ok(Self {
            space,
            kernel,
            interval,
            start_time,
            start_point,
            cache_kernels: false,
        })
    }

    /// Precompute kernel values on the tensor grid (one vector for the first
    /// slot, one node-by-node matrix per later slot).
    pub fn with_kernel_cache(mut self, on: bool) -> Self {
        self.cache_kernels = on;
        self
    }

    /// Same pin and space, different kernel.
    pub fn with_kernel(&self, kernel: TransitionKernel) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn interval(&self) -> TimeInterval {
        self.interval
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn start_point(&self) -> f64 {
        self.start_point
    }

    pub fn caches_kernels(&self) -> bool {
        self.cache_kernels
    }

    /// Collapse `f` and validate its times against the pin and kernels.
    pub(crate) fn prepare(&self, f: &CylinderFunction, kernels: &[&TransitionKernel]) -> Result<CylinderFunction> {
        let (_, collapsed) = f.collapse(self.interval)?;
        let times = collapsed.times();
        if let Some(&first) = times.first() {
            if first <= self.start_time {
                return Err(Error::TimePrecedesPin {
                    time: first,
                    start: self.start_time,
                });
            }
        }
        let mut prev = self.start_time;
        for (i, &t) in times.iter().enumerate() {
            kernels[i.min(kernels.len() - 1)].check_times(prev, t)?;
            prev = t;
        }
        Ok(collapsed)
    }
}

enum SlotTable {
    Lazy,
    /// Values at `(x_0, node b)`.
    First(Vec<Complex64>),
    /// Row-major `node a -> node b`.
    Matrix(Vec<Complex64>, usize),
}

/// Integrate a collapsed cylinder function (distinct ascending times) with a
/// possibly different kernel in each time slot.
pub(crate) fn chain_integral(
    measure: &PinnedMeasure,
    slot_kernels: &[&TransitionKernel],
    f: &CylinderFunction,
) -> Result<Complex64> {
    let times = f.times();
    let n = times.len();
    assert_eq!(slot_kernels.len(), n, "one kernel per time slot");
    let rule = measure.space.rule();
    // enforces the tensor grid size limit
    TensorRule::power(rule, n)?;
    let nodes = rule.nodes();
    let (t0, x0) = (measure.start_time, measure.start_point);
    let mut gaps = Vec::with_capacity(n);
    let mut prev = t0;
    for &t in times {
        gaps.push((prev, t));
        prev = t;
    }

    let tables: Vec<SlotTable> = if measure.cache_kernels {
        gaps.iter()
            .zip(slot_kernels)
            .enumerate()
            .map(|(i, (&(t, u), k))| {
                if i == 0 {
                    SlotTable::First(nodes.iter().map(|&y| k.eval_unchecked(t, u, x0, y)).collect())
                } else {
                    let mut m = Vec::with_capacity(nodes.len() * nodes.len());
                    for &x in nodes {
                        for &y in nodes {
                            m.push(k.eval_unchecked(t, u, x, y));
                        }
                    }
                    SlotTable::Matrix(m, nodes.len())
                }
            })
            .collect()
    } else {
        (0..n).map(|_| SlotTable::Lazy).collect()
    };

    let chain = Chain {
        n,
        nodes,
        weights: rule.weights(),
        tables,
        kernels: slot_kernels,
        gaps,
        x0,
        f,
        slack: f.bound() * (1.0 + 1e-12) + 1e-300,
    };
    // outer axis in parallel, summed in node order
    let rows: Vec<Result<Complex64>> = (0..nodes.len())
        .into_par_iter()
        .map(|j| {
            let mut x = vec![0.0; n];
            x[0] = nodes[j];
            let k = chain.kernel(0, 0, j);
            if n == 1 {
                chain.leaf(k, &x)
            } else {
                chain.sum(1, k, &mut x, j)
            }
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, w) in rows.into_iter().zip(chain.weights) {
        acc += v? * *w;
    }
    Ok(acc)
}

struct Chain<'a> {
    n: usize,
    nodes: &'a [f64],
    weights: &'a [f64],
    tables: Vec<SlotTable>,
    kernels: &'a [&'a TransitionKernel],
    gaps: Vec<(f64, f64)>,
    x0: f64,
    f: &'a CylinderFunction,
    slack: f64,
}

impl Chain<'_> {
    /// Kernel of `slot` from node `from` (ignored for the first slot) to node `to`.
    fn kernel(&self, slot: usize, from: usize, to: usize) -> Complex64 {
        match &self.tables[slot] {
            SlotTable::Lazy => {
                let x = if slot == 0 { self.x0 } else { self.nodes[from] };
                let (t, u) = self.gaps[slot];
                self.kernels[slot].eval_unchecked(t, u, x, self.nodes[to])
            }
            SlotTable::First(vals) => vals[to],
            SlotTable::Matrix(m, stride) => m[from * stride + to],
        }
    }

    /// `body(x) * prefix`, with `prefix` the kernel product along `x`.
    fn leaf(&self, prefix: Complex64, x: &[f64]) -> Result<Complex64> {
        let body = self.f.eval_body(x);
        let modulus = body.norm();
        if modulus > self.slack {
            return Err(Error::BoundExceeded {
                value: modulus,
                bound: self.f.bound(),
            });
        }
        let v = body * prefix;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand { node: x.to_vec() })
        }
    }

    fn sum(&self, depth: usize, prefix: Complex64, x: &mut [f64], prev: usize) -> Result<Complex64> {
        let last = depth + 1 == self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (&node, &w)) in self.nodes.iter().zip(self.weights).enumerate() {
            x[depth] = node;
            let p = prefix * self.kernel(depth, prev, j);
            let v = if last { self.leaf(p, x)? } else { self.sum(depth + 1, p, x, j)? };
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Integral of a cylinder function against the pinned product measure.
pub fn cylinder_integral(measure: &PinnedMeasure, f: &CylinderFunction) -> Result<Complex64> {
    let collapsed = measure.prepare(f, &[&measure.kernel])?;
    let kernels = vec![&measure.kernel; collapsed.arity()];
    chain_integral(measure, &kernels, &collapsed)
}

/// Mass of the measure at the given times (integral of the constant one).
pub fn total_mass(measure: &PinnedMeasure, times: &[f64]) -> Result<Complex64> {
    cylinder_integral(measure, &CylinderFunction::one(times.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn circle_kernel_normalized_and_symmetric() {
        let k = heat_kernel_circle(1.0, 40).unwrap();
        assert!(k.is_positive());
        let rule = QuadratureRule::trapezoid_periodic(0.0, 1.0, 128).unwrap();
        for &x in &[0.0, 0.13, 0.77] {
            let m = integrate_real(|y| k.eval(0.0, 0.05, x, y).unwrap().re, &rule).unwrap();
            assert!((m - 1.0).abs() < 1e-13);
        }
        let a = k.eval(0.1, 0.4, 0.2, 0.9).unwrap();
        let b = k.eval(0.1, 0.4, 0.9, 0.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_time_order_error() {
        let k = heat_kernel_circle(1.0, 10).unwrap();
        assert!(matches!(k.eval(0.3, 0.3, 0.0, 0.0), Err(Error::KernelTimeOrder { .. })));
        assert!(matches!(k.eval(0.4, 0.3, 0.0, 0.0), Err(Error::KernelTimeOrder { .. })));
    }

    #[test]
    fn chapman_kolmogorov_on_circle() {
        // brute-force quadrature of the left side against direct evaluation
        let k = heat_kernel_circle(1.0, 40).unwrap();
        let rule = QuadratureRule::trapezoid_periodic(0.0, 1.0, 128).unwrap();
        let (s, t) = (0.1, 0.3);
        let mut worst = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let (x, z) = (i as f64 / 16.0, j as f64 / 16.0 + 0.01);
                let lhs = integrate_real(
                    |y| k.eval(0.0, s, x, y).unwrap().re * k.eval(s, t, y, z).unwrap().re,
                    &rule,
                )
                .unwrap();
                let rhs = k.eval(0.0, t, x, z).unwrap().re;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn interval_kernels_mass() {
        let neu = heat_kernel_interval(0.0, 1.0, Boundary::Neumann, 40).unwrap();
        let dir = heat_kernel_interval(0.0, 1.0, Boundary::Dirichlet, 40).unwrap();
        let rule = QuadratureRule::gauss_legendre(0.0, 1.0, 16, 10).unwrap();
        let mn = integrate_real(|y| neu.eval(0.0, 0.05, 0.3, y).unwrap().re, &rule).unwrap();
        assert!((mn - 1.0).abs() < 1e-12);
        let md = integrate_real(|y| dir.eval(0.0, 0.05, 0.3, y).unwrap().re, &rule).unwrap();
        assert!(md < 1.0 && md > 0.0);
    }

    #[test]
    fn dirichlet_midpoint_value() {
        // oracle: 200-term direct summation
        let oracle: f64 = (1..=200)
            .map(|m| {
                let s = (m as f64 * PI / 2.0).sin();
                2.0 * s * s * (-(m as f64 * PI).powi(2) * 0.1).exp()
            })
            .sum();
        let k = heat_kernel_interval(0.0, 1.0, Boundary::Dirichlet, 40).unwrap();
        let v = k.eval(0.0, 0.1, 0.5, 0.5).unwrap().re;
        assert!((v - oracle).abs() < 1e-14, "{v} vs {oracle}");
    }

    #[test]
    fn halfline_kernel_absorbs() {
        let k = heat_kernel_halfline();
        let rule = QuadratureRule::gauss_legendre(0.0, 12.0, 48, 10).unwrap();
        let m = integrate_real(|y| k.eval(0.0, 0.5, 1.0, y).unwrap().re, &rule).unwrap();
        // survival probability erf(x / sqrt(4 t))
        let erf = libm::erf(1.0 / 2f64.sqrt());
        assert!((m - erf).abs() < 1e-12, "{m} vs {erf}");
    }

    #[test]
    fn one_term_circle_not_positive() {
        let k = heat_kernel_circle(1.0, 1).unwrap();
        assert!(!k.is_positive());
    }

    #[test]
    fn drift_is_small_at_default_truncation() {
        let space = ConfigSpace::circle(1.0, 64).unwrap();
        assert!(spectral_drift(&space, DEFAULT_SPECTRAL_TERMS, 1e-3).unwrap() <= SPECTRAL_DRIFT_TOLERANCE);
    }

    fn circle_measure(x0: f64, t0: f64, nodes: usize) -> PinnedMeasure {
        let space = ConfigSpace::circle(1.0, nodes).unwrap();
        PinnedMeasure::new(
            space,
            heat_kernel_circle(1.0, 40).unwrap(),
            TimeInterval::new(1.0).unwrap(),
            t0,
            x0,
        )
        .unwrap()
    }

    #[test]
    fn cylinder_normalization_and_mode_decay() {
        let m = circle_measure(0.2, 0.0, 64);
        let v = total_mass(&m, &[0.1, 0.3]).unwrap();
        assert!((v - c(1.0)).norm() < 1e-10);

        let f = CylinderFunction::new(vec![0.05], 1.0, |x| c((2.0 * PI * x[0]).cos())).unwrap();
        let v = cylinder_integral(&m, &f).unwrap().re;
        let exact = (-(2.0 * PI).powi(2) * 0.05).exp() * (2.0 * PI * 0.2).cos();
        assert!(((v - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn duplicate_times_collapse_exactly() {
        let m = circle_measure(0.4, 0.0, 32);
        let raw = CylinderFunction::new(vec![0.2, 0.2], 1.0, |x| c(x[0] * x[1])).unwrap();
        let sq = CylinderFunction::new(vec![0.2], 1.0, |x| c(x[0] * x[0])).unwrap();
        assert_eq!(cylinder_integral(&m, &raw).unwrap(), cylinder_integral(&m, &sq).unwrap());
    }

    #[test]
    fn pin_errors() {
        let m = circle_measure(0.4, 0.2, 16);
        let f = CylinderFunction::one(vec![0.1]).unwrap();
        assert!(matches!(cylinder_integral(&m, &f), Err(Error::TimePrecedesPin { .. })));
        let f = CylinderFunction::one(vec![0.2]).unwrap();
        assert!(matches!(cylinder_integral(&m, &f), Err(Error::TimePrecedesPin { .. })));
        let space = ConfigSpace::circle(1.0, 8).unwrap();
        let k = heat_kernel_circle(1.0, 4).unwrap();
        assert!(PinnedMeasure::new(space, k, TimeInterval::new(1.0).unwrap(), 0.0, 1.5).is_err());
    }

    #[test]
    fn bound_violation_detected() {
        let m = circle_measure(0.4, 0.0, 16);
        let f = CylinderFunction::new(vec![0.3], 0.5, |x| c(1.0 + x[0])).unwrap();
        assert!(matches!(cylinder_integral(&m, &f), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn cache_matches_lazy_evaluation() {
        let lazy = circle_measure(0.1, 0.0, 24);
        let cached = lazy.clone().with_kernel_cache(true);
        let f = CylinderFunction::new(vec![0.1, 0.25, 0.4], 3.0, |x| {
            Complex64::new((2.0 * PI * x[0]).cos() + x[1], x[2])
        })
        .unwrap();
        assert_eq!(cylinder_integral(&lazy, &f).unwrap(), cylinder_integral(&cached, &f).unwrap());
    }

    #[test]
    fn interval_measures() {
        let space = ConfigSpace::interval(0.0, 1.0, Boundary::Neumann, 8, 8).unwrap();
        let k = heat_kernel(&space, 40).unwrap();
        let m = PinnedMeasure::new(space, k, TimeInterval::new(1.0).unwrap(), 0.0, 0.3).unwrap();
        assert!((total_mass(&m, &[0.1, 0.2]).unwrap().re - 1.0).abs() < 1e-10);
        // Neumann mode cos(pi x) decays as exp(-pi^2 t)
        let f = CylinderFunction::new(vec![0.1], 1.0, |x| c((PI * x[0]).cos())).unwrap();
        let v = cylinder_integral(&m, &f).unwrap().re;
        let exact = (-PI * PI * 0.1).exp() * (PI * 0.3).cos();
        assert!((v - exact).abs() < 1e-9);
    }
}
