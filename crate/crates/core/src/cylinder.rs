//! Cylinder functions on path space.
//!
//! A cylinder function pairs a finite time tuple `(t_1, ..., t_n)` with a
//! bounded body `a: X^n -> C`; on a path `x(.)` it evaluates to
//! `a(x(t_1), ..., x(t_n))`. Configuration spaces here are one dimensional,
//! so points of `X` are plain `f64` coordinates.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Body of a cylinder function. Receives exactly `n` coordinates.
pub type BodyFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// The parameterization interval `I = [0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    horizon: f64,
}

impl TimeInterval {
    pub fn new(horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("horizon", format!("{horizon} must be positive and finite")));
        }
        Ok(Self { horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn contains(&self, t: f64) -> bool {
        (0.0..=self.horizon).contains(&t)
    }

    pub fn point(&self, t: f64) -> Result<TimePoint> {
        if self.contains(t) {
            Ok(TimePoint(t))
        } else {
            Err(Error::TimeOutsideInterval {
                time: t,
                horizon: self.horizon,
            })
        }
    }
}

/// A time known to lie in some [`TimeInterval`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TimePoint(f64);

impl TimePoint {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Deduplicated, ascending times together with the map sending each original
/// position to its slot. Indices are zero based:
/// `original[i] == unique_sorted[collapse_map[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedTimes {
    pub unique_sorted: Vec<f64>,
    pub collapse_map: Vec<usize>,
}

impl CollapsedTimes {
    /// Number of distinct times.
    pub fn distinct(&self) -> usize {
        self.unique_sorted.len()
    }

    /// Spread `unique` coordinates back into the original argument order.
    pub fn expand_into(&self, unique: &[f64], out: &mut [f64]) {
        for (slot, &j) in out.iter_mut().zip(&self.collapse_map) {
            *slot = unique[j];
        }
    }
}

/// Sort ascending and merge equal times.
pub fn canonicalize_times(times: &[f64], interval: TimeInterval) -> Result<CollapsedTimes> {
    if times.is_empty() {
        return Err(Error::EmptyTimeTuple);
    }
    for &t in times {
        interval.point(t)?;
    }
    let mut unique_sorted = times.to_vec();
    unique_sorted.sort_by(f64::total_cmp);
    unique_sorted.dedup();
    let collapse_map = times
        .iter()
        .map(|t| {
            unique_sorted
                .binary_search_by(|u| u.total_cmp(t))
                .expect("time present after dedup")
        })
        .collect();
    Ok(CollapsedTimes {
        unique_sorted,
        collapse_map,
    })
}

/// A path `t -> x(t)` on the parameterization interval.
pub trait Path: Send + Sync {
    fn at(&self, t: f64) -> f64;
}

/// Path given by a closure.
pub struct FnPath<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> Path for FnPath<F> {
    fn at(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Constant path `x(t) = c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPath(pub f64);

impl Path for ConstantPath {
    fn at(&self, _t: f64) -> f64 {
        self.0
    }
}

/// Piecewise-linear interpolant through `(times[i], values[i])`, held constant
/// outside the knot range.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid("path", "need matching, nonempty knot and value lists"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("path", "knot times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }
}

impl Path for PiecewiseLinearPath {
    fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.times.partition_point(|&k| k <= t);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let (v0, v1) = (self.values[hi - 1], self.values[hi]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// A bounded function of the path's values at finitely many times.
#[derive(Clone)]
pub struct CylinderFunction {
    times: Vec<f64>,
    body: Arc<BodyFn>,
    bound: f64,
}

impl fmt::Debug for CylinderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderFunction")
            .field("times", &self.times)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl CylinderFunction {
    /// `bound` is a certified sup bound on `|body|`; it is checked wherever the
    /// body is evaluated during integration.
    pub fn new<F>(times: Vec<f64>, bound: f64, body: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self::from_arc(times, bound, Arc::new(body))
    }

    pub fn from_arc(times: Vec<f64>, bound: f64, body: Arc<BodyFn>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyTimeTuple);
        }
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::invalid("bound", format!("{bound} must be finite and nonnegative")));
        }
        Ok(Self { times, body, bound })
    }

    /// The function identically equal to one at the given times.
    pub fn one(times: Vec<f64>) -> Result<Self> {
        Self::new(times, 1.0, |_| Complex64::new(1.0, 0.0))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn arity(&self) -> usize {
        self.times.len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn body(&self) -> &Arc<BodyFn> {
        &self.body
    }

    /// Evaluate the body directly on coordinates.
    pub fn eval_body(&self, args: &[f64]) -> Complex64 {
        (self.body)(args)
    }

    /// Rebuild on the distinct times: the new body duplicates its arguments
    /// through the collapse map and calls the original body.
    pub fn collapse(&self, interval: TimeInterval) -> Result<(CollapsedTimes, CylinderFunction)> {
        let collapsed = canonicalize_times(&self.times, interval)?;
        if collapsed.collapse_map.iter().enumerate().all(|(i, &k)| i == k) {
            // already distinct and ascending
            return Ok((collapsed, self.clone()));
        }
        let map = collapsed.clone();
        let body = Arc::clone(&self.body);
        let arity = self.arity();
        let collapsed_body = move |unique: &[f64]| {
            let mut stack = [0.0; 8];
            let mut heap = Vec::new();
            let raw = if arity <= stack.len() {
                &mut stack[..arity]
            } else {
                heap.resize(arity, 0.0);
                &mut heap[..]
            };
            map.expand_into(unique, raw);
            body(raw)
        };
        let f = CylinderFunction::new(collapsed.unique_sorted.clone(), self.bound, collapsed_body)?;
        Ok((collapsed, f))
    }
}

/// `a(x(t_1), ..., x(t_n))`.
pub fn evaluate_cylinder(f: &CylinderFunction, path: &dyn Path) -> Complex64 {
    let args: Vec<f64> = f.times.iter().map(|&t| path.at(t)).collect();
    f.eval_body(&args)
}

/// Pointwise product; times are concatenated, bounds multiply.
pub fn product_cylinder(f: &CylinderFunction, g: &CylinderFunction) -> CylinderFunction {
    let split = f.arity();
    let (fb, gb) = (Arc::clone(&f.body), Arc::clone(&g.body));
    let mut times = f.times.clone();
    times.extend_from_slice(&g.times);
    CylinderFunction {
        times,
        body: Arc::new(move |args: &[f64]| fb(&args[..split]) * gb(&args[split..])),
        bound: f.bound * g.bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> TimeInterval {
        TimeInterval::new(1.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn canonicalize_sorts_and_collapses() {
        let ct = canonicalize_times(&[0.5, 0.2, 0.5], unit()).unwrap();
        assert_eq!(ct.unique_sorted, vec![0.2, 0.5]);
        assert_eq!(ct.collapse_map, vec![1, 0, 1]);

        let ct = canonicalize_times(&[0.3], unit()).unwrap();
        assert_eq!(ct.unique_sorted, vec![0.3]);
        assert_eq!(ct.collapse_map, vec![0]);

        let ct = canonicalize_times(&[0.3, 0.3], unit()).unwrap();
        assert_eq!(ct.unique_sorted, vec![0.3]);
        assert_eq!(ct.collapse_map, vec![0, 0]);
    }

    #[test]
    fn canonicalize_errors() {
        assert_eq!(canonicalize_times(&[], unit()), Err(Error::EmptyTimeTuple));
        assert!(matches!(
            canonicalize_times(&[0.2, 1.5], unit()),
            Err(Error::TimeOutsideInterval { .. })
        ));
        assert!(matches!(
            canonicalize_times(&[-0.1], unit()),
            Err(Error::TimeOutsideInterval { .. })
        ));
    }

    #[test]
    fn evaluate_examples() {
        let prod = CylinderFunction::new(vec![0.1, 0.4, 0.9], 1.0, |x| c(x.iter().product())).unwrap();
        assert_eq!(evaluate_cylinder(&prod, &ConstantPath(0.7)), c(0.7 * 0.7 * 0.7));

        let proj = CylinderFunction::new(vec![0.3], 1.0, |x| c(x[0])).unwrap();
        assert_eq!(evaluate_cylinder(&proj, &FnPath(f64::sin)), c(0.3f64.sin()));

        let xy = CylinderFunction::new(vec![0.25, 0.75], 1.0, |x| c(x[0] * x[1])).unwrap();
        assert_eq!(evaluate_cylinder(&xy, &FnPath(|t| t)), c(0.25 * 0.75));
    }

    #[test]
    fn product_examples() {
        let f = CylinderFunction::new(vec![0.2], 1.0, |x| c(x[0])).unwrap();
        let g = CylinderFunction::new(vec![0.6], 1.0, |x| c(x[0])).unwrap();
        let fg = product_cylinder(&f, &g);
        assert_eq!(fg.times(), &[0.2, 0.6]);
        assert_eq!(evaluate_cylinder(&fg, &ConstantPath(0.3)), c(0.3 * 0.3));

        let one = CylinderFunction::one(vec![0.5]).unwrap();
        let path = FnPath(|t: f64| (3.0 * t).cos());
        assert_eq!(
            evaluate_cylinder(&product_cylinder(&one, &g), &path),
            evaluate_cylinder(&g, &path)
        );

        let cf = CylinderFunction::new(vec![0.2], 1.0, |x| c(x[0].cos())).unwrap();
        let sf = CylinderFunction::new(vec![0.2], 1.0, |x| c(x[0].sin())).unwrap();
        let p = 0.9;
        let v = evaluate_cylinder(&product_cylinder(&cf, &sf), &ConstantPath(p));
        assert_eq!(v, c(p.cos() * p.sin()));
    }

    #[test]
    fn collapse_matches_raw_evaluation() {
        let f = CylinderFunction::new(vec![0.5, 0.2, 0.5], 2.0, |x| c(x[0] * x[2] + x[1])).unwrap();
        let (ct, g) = f.collapse(unit()).unwrap();
        assert_eq!(ct.distinct(), 2);
        let path = PiecewiseLinearPath::new(vec![0.0, 0.3, 1.0], vec![0.1, -0.4, 0.8]).unwrap();
        assert_eq!(evaluate_cylinder(&f, &path), evaluate_cylinder(&g, &path));
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let p = PiecewiseLinearPath::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.at(0.5), 1.0);
        assert_eq!(p.at(1.5), 1.0);
        assert_eq!(p.at(-1.0), 0.0);
        assert_eq!(p.at(3.0), 0.0);
        assert!(PiecewiseLinearPath::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rand_body(coeffs: Vec<f64>) -> impl Fn(&[f64]) -> Complex64 + Send + Sync {
            move |x: &[f64]| {
                let s: f64 = x.iter().zip(&coeffs).map(|(xi, a)| a * xi).sum();
                Complex64::new(s.cos(), s.sin())
            }
        }

        proptest! {
            #[test]
            fn homomorphism(
                ft in proptest::collection::vec(0.0f64..1.0, 1..4),
                gt in proptest::collection::vec(0.0f64..1.0, 1..4),
                fa in proptest::collection::vec(-3.0f64..3.0, 4),
                ga in proptest::collection::vec(-3.0f64..3.0, 4),
                knots in proptest::collection::vec(-2.0f64..2.0, 5),
            ) {
                let f = CylinderFunction::new(ft, 1.0, rand_body(fa)).unwrap();
                let g = CylinderFunction::new(gt, 1.0, rand_body(ga)).unwrap();
                let path = PiecewiseLinearPath::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], knots).unwrap();
                let lhs = evaluate_cylinder(&product_cylinder(&f, &g), &path);
                let rhs = evaluate_cylinder(&f, &path) * evaluate_cylinder(&g, &path);
                prop_assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm().max(1.0));
                prop_assert!(lhs.norm() <= f.bound() * g.bound() * (1.0 + 1e-14));
            }

            #[test]
            fn collapse_consistency(
                picks in proptest::collection::vec(0usize..3, 1..6),
                coeffs in proptest::collection::vec(-3.0f64..3.0, 6),
                knots in proptest::collection::vec(-2.0f64..2.0, 3),
            ) {
                let pool = [0.1, 0.45, 0.8];
                let times: Vec<f64> = picks.iter().map(|&i| pool[i]).collect();
                let f = CylinderFunction::new(times, 1.0, rand_body(coeffs)).unwrap();
                let (_, g) = f.collapse(unit()).unwrap();
                let path = PiecewiseLinearPath::new(vec![0.0, 0.5, 1.0], knots).unwrap();
                prop_assert_eq!(evaluate_cylinder(&f, &path), evaluate_cylinder(&g, &path));
            }
        }
    }
}
