//! Quadrature over the configuration space and its finite powers.
//!
//! Two base rules: composite Gauss-Legendre on arbitrary breakpoint meshes and
//! the periodic trapezoid rule (spectrally accurate on the circle). Tensor
//! products are summed as nested one-dimensional sums, innermost axis last,
//! so `integrate_nd` reproduces nested `integrate_1d` calls bit for bit.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extrapolate::neville_at_zero;

/// Refuse tensor grids above this many nodes.
pub const MAX_TENSOR_NODES: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendreComposite,
    TrapezoidPeriodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: RuleKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    domain: (f64, f64),
    /// Nodes per panel; 1 for the trapezoid rule.
    panel_size: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre_reference(points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1, "need at least one Gauss point");
    let n = points;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged root
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let (pn, pm) = if n == 1 { (z, 1.0) } else { (p1, p0) };
        dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

impl QuadratureRule {
    /// `panels` equal panels of `points` Gauss points on [a, b].
    pub fn gauss_legendre(a: f64, b: f64, panels: usize, points: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::invalid("panels", "need at least one panel"));
        }
        let h = (b - a) / panels as f64;
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| if i == panels { b } else { a + h * i as f64 })
            .collect();
        Self::gauss_legendre_mesh(&breaks, points)
    }

    /// Composite Gauss-Legendre on the panels between consecutive breakpoints.
    pub fn gauss_legendre_mesh(breaks: &[f64], points: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::invalid("breaks", "need at least two breakpoints"));
        }
        if points == 0 {
            return Err(Error::invalid("points", "need at least one Gauss point"));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breaks", "breakpoints must be finite and strictly increasing"));
        }
        let (rx, rw) = gauss_legendre_reference(points);
        let panels = breaks.len() - 1;
        let mut nodes = Vec::with_capacity(panels * points);
        let mut weights = Vec::with_capacity(panels * points);
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for (x, wt) in rx.iter().zip(&rw) {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Ok(Self {
            kind: RuleKind::GaussLegendreComposite,
            nodes,
            weights,
            domain: (breaks[0], breaks[panels]),
            panel_size: points,
        })
    }

    /// `n` equispaced nodes `a + j (b - a)/n`, equal weights `(b - a)/n`.
    pub fn trapezoid_periodic(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("nodes", "need at least one node"));
        }
        if !(a < b) {
            return Err(Error::invalid("domain", format!("need a < b, got [{a}, {b}]")));
        }
        let h = (b - a) / n as f64;
        Ok(Self {
            kind: RuleKind::TrapezoidPeriodic,
            nodes: (0..n).map(|j| a + h * j as f64).collect(),
            weights: vec![h; n],
            domain: (a, b),
            panel_size: 1,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_size(&self) -> usize {
        self.panel_size
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Breakpoints on [a, b] with local panel width `width(x)` at the left end
/// of each panel.
pub fn mesh_from_width<W>(a: f64, b: f64, width: W) -> Vec<f64>
where
    W: Fn(f64) -> f64,
{
    let mut breaks = vec![a];
    let mut x = a;
    let min_width = (b - a) * 1e-9;
    while x < b {
        let h = width(x).max(min_width);
        x = if x + h >= b - 1e-12 * (b - a) { b } else { x + h };
        breaks.push(x);
    }
    breaks
}

/// Breakpoints on [a, b] whose panel width tracks a local oscillation
/// frequency: width = min(max_width, phase_per_panel / frequency(x)).
pub fn frequency_mesh<W>(a: f64, b: f64, max_width: f64, phase_per_panel: f64, frequency: W) -> Vec<f64>
where
    W: Fn(f64) -> f64,
{
    mesh_from_width(a, b, |x| {
        let omega = frequency(x).abs();
        if omega > 0.0 {
            max_width.min(phase_per_panel / omega)
        } else {
            max_width
        }
    })
}

/// Breakpoints on [a, b] starting with a panel of width `first` and doubling
/// until `max_width` is reached. Resolves integrable endpoint behavior at `a`.
pub fn graded_mesh(a: f64, b: f64, first: f64, max_width: f64) -> Vec<f64> {
    let mut breaks = vec![a];
    let mut h = first.min(max_width).max(f64::MIN_POSITIVE);
    let mut x = a;
    while x < b {
        x = if x + h >= b - 1e-12 * (b - a) { b } else { x + h };
        breaks.push(x);
        h = (2.0 * h).min(max_width);
    }
    breaks
}

fn check_finite(v: Complex64, node: &[f64]) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { node: node.to_vec() })
    }
}

/// `sum_i w_i f(x_i)`, accumulated in node order.
pub fn integrate_1d<F>(f: F, rule: &QuadratureRule) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.iter() {
        acc += check_finite(f(x), &[x])? * w;
    }
    Ok(acc)
}

/// Real-valued convenience wrapper around [`integrate_1d`].
pub fn integrate_real<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_1d(|x| Complex64::new(f(x), 0.0), rule).map(|v| v.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    factors: Vec<QuadratureRule>,
}

impl TensorRule {
    pub fn new(factors: Vec<QuadratureRule>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("tensor rule", "need at least one factor"));
        }
        let nodes: f64 = factors.iter().map(|r| r.len() as f64).product();
        if nodes > MAX_TENSOR_NODES {
            return Err(Error::TensorGridTooLarge {
                nodes,
                limit: MAX_TENSOR_NODES,
            });
        }
        Ok(Self { factors })
    }

    /// `n` copies of one rule.
    pub fn power(rule: &QuadratureRule, n: usize) -> Result<Self> {
        Self::new(vec![rule.clone(); n])
    }

    pub fn factors(&self) -> &[QuadratureRule] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn node_count(&self) -> usize {
        self.factors.iter().map(QuadratureRule::len).product()
    }
}

/// Full tensor sum of `f` over the product grid.
pub fn integrate_nd<F>(f: F, rule: &TensorRule) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    integrate_nd_indexed(|_, x| Ok(f(x)), rule)
}

/// Tensor sum where the integrand also sees the node indices, so callers can
/// look up values cached on the grid. The outermost axis is evaluated in
/// parallel; partial sums are then combined in node order, which keeps the
/// result identical to the sequential nested sum.
pub fn integrate_nd_indexed<F>(f: F, rule: &TensorRule) -> Result<Complex64>
where
    F: Fn(&[usize], &[f64]) -> Result<Complex64> + Sync,
{
    let dim = rule.dim();
    let outer = &rule.factors[0];
    let inner_values: Vec<Result<Complex64>> = outer
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut idx = vec![0usize; dim];
            let mut pt = vec![0.0; dim];
            idx[0] = i;
            pt[0] = x;
            nested_sum(&f, rule, 1, &mut idx, &mut pt)
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, w) in inner_values.into_iter().zip(outer.weights()) {
        acc += v? * *w;
    }
    Ok(acc)
}

fn nested_sum<F>(f: &F, rule: &TensorRule, depth: usize, idx: &mut [usize], pt: &mut [f64]) -> Result<Complex64>
where
    F: Fn(&[usize], &[f64]) -> Result<Complex64>,
{
    if depth == rule.dim() {
        return check_finite(f(idx, pt)?, pt);
    }
    let factor = &rule.factors[depth];
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (x, w)) in factor.iter().enumerate() {
        idx[depth] = i;
        pt[depth] = x;
        acc += nested_sum(f, rule, depth + 1, idx, pt)? * w;
    }
    Ok(acc)
}

/// Result of a damped half-line integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedIntegral {
    pub value: Complex64,
    /// Magnitude of the contribution of the last panel.
    pub tail_estimate: f64,
    /// Set when the tail estimate exceeds the caller's tolerance.
    pub tail_flagged: bool,
}

/// `int_0^cutoff f(k) exp(-damping k^2) dk` with `cutoff` the right end of
/// `rule`. Undamped integrals (`damping = 0`) are allowed for decaying `f`.
pub fn integrate_halfline_damped<F>(
    f: F,
    damping: f64,
    rule: &QuadratureRule,
    tail_tolerance: Option<f64>,
) -> Result<DampedIntegral>
where
    F: Fn(f64) -> Complex64,
{
    if !(damping >= 0.0 && damping.is_finite()) {
        return Err(Error::invalid("damping", format!("{damping} must be finite and nonnegative")));
    }
    if rule.domain().0 != 0.0 {
        return Err(Error::invalid("rule", "half-line rule must start at 0"));
    }
    let g = |k: f64| f(k) * (-damping * k * k).exp();
    let value = integrate_1d(g, rule)?;
    let start = rule.len() - rule.panel_size();
    let mut last = Complex64::new(0.0, 0.0);
    for (x, w) in rule.nodes()[start..].iter().zip(&rule.weights()[start..]) {
        last += g(*x) * *w;
    }
    let tail_estimate = last.norm();
    Ok(DampedIntegral {
        value,
        tail_estimate,
        tail_flagged: tail_tolerance.is_some_and(|tol| tail_estimate > tol),
    })
}

/// Joint schedule for driving damping to zero and the cutoff to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingPlan {
    /// Damping values, any order; extrapolation is to damping = 0.
    pub dampings: Vec<f64>,
    /// Cutoff chosen so that `exp(-damping cutoff^2) = exp(-decay)`.
    pub decay: f64,
    pub gauss_points: usize,
    pub max_width: f64,
    /// Oscillation phase allowed across one panel.
    pub phase_per_panel: f64,
}

impl DampingPlan {
    /// Geometric damping sequence `eps0 ratio^j`, `j < levels`.
    pub fn geometric(eps0: f64, ratio: f64, levels: usize) -> Self {
        Self {
            dampings: (0..levels).map(|j| eps0 * ratio.powi(j as i32)).collect(),
            decay: 40.0,
            gauss_points: 10,
            max_width: 0.5,
            phase_per_panel: 5.0,
        }
    }

    pub fn cutoff(&self, damping: f64) -> f64 {
        (self.decay / damping).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampedLimit {
    pub dampings: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Polynomial extrapolation of `values` to damping zero.
    pub limit: Complex64,
    pub max_tail: f64,
}

/// Damped integrals over the plan's schedule, extrapolated to zero damping.
/// `frequency(k)` is the local angular frequency of `f`, used to size panels.
pub fn damped_halfline_limit<F, W>(f: F, frequency: W, plan: &DampingPlan) -> Result<DampedLimit>
where
    F: Fn(f64) -> Complex64 + Sync,
    W: Fn(f64) -> f64 + Sync,
{
    if plan.dampings.is_empty() || plan.dampings.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("dampings", "need a nonempty list of positive dampings"));
    }
    let runs: Vec<Result<DampedIntegral>> = plan
        .dampings
        .par_iter()
        .map(|&eps| {
            let cutoff = plan.cutoff(eps);
            let breaks = frequency_mesh(0.0, cutoff, plan.max_width, plan.phase_per_panel, &frequency);
            let rule = QuadratureRule::gauss_legendre_mesh(&breaks, plan.gauss_points)?;
            integrate_halfline_damped(&f, eps, &rule, None)
        })
        .collect();
    let mut values = Vec::with_capacity(runs.len());
    let mut max_tail = 0.0f64;
    for r in runs {
        let r = r?;
        max_tail = max_tail.max(r.tail_estimate);
        values.push(r.value);
    }
    let limit = neville_at_zero(&plan.dampings, &values);
    Ok(DampedLimit {
        dampings: plan.dampings.clone(),
        values,
        limit,
        max_tail,
    })
}
