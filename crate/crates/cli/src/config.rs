//! Flat `key = value` experiment configuration.
//!
//! Every numeric field is checked against the library's preconditions while
//! parsing, and all problems are reported together with their line numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use pathmeasure_core::complex_measure::ComplexIntegration;
use pathmeasure_core::cylinder::{canonicalize_times, TimeInterval};
use pathmeasure_core::feynman::RegularizationSchedule;
use pathmeasure_core::kernel::{Boundary, ConfigSpace, DEFAULT_SPECTRAL_TERMS};
use pathmeasure_core::quadrature::MAX_TENSOR_NODES;
use pathmeasure_core::radial::{PerturbationSeriesSpec, PowerPotential, RadialParams};
use pathmeasure_core::Error;

use crate::expr::Expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Wiener,
    Feynman,
    BesselCheck,
    Propagator,
    Series,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Wiener => "wiener",
            Command::Feynman => "feynman",
            Command::BesselCheck => "bessel-check",
            Command::Propagator => "propagator",
            Command::Series => "series",
        }
    }

    fn keys(self) -> Vec<&'static str> {
        const PATH: &[&str] = &[
            "kind", "L", "a", "b", "boundary", "cutoff", "nodes", "gauss_points", "spectral_terms",
            "horizon", "start_time", "start_point", "times", "body", "body_bound", "cache_kernels",
            "reference_re", "reference_im",
        ];
        const SCHEDULE: &[&str] = &[
            "eps0", "ratio", "steps", "tolerance", "method", "cross_eps0", "cross_ratio", "cross_steps",
        ];
        match self {
            Command::Wiener => PATH.to_vec(),
            Command::Feynman => [PATH, SCHEDULE].concat(),
            Command::BesselCheck => vec!["orders", "grid_points", "grid_min", "grid_max", "tolerance"],
            Command::Propagator => vec![
                "n", "nu", "r", "t_values", "lambda_values", "tolerance", "s", "t", "u", "pv_cut",
            ],
            Command::Series => vec!["n", "nu", "e", "tail_cutoff", "t", "u", "r", "s", "series_times", "k_max"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    pub fn contains(&self, needle: &str) -> bool {
        self.0.iter().any(|e| e.to_string().contains(needle))
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone)]
pub struct PathSetup {
    pub space: ConfigSpace,
    pub spectral_terms: usize,
    pub interval: TimeInterval,
    pub start_time: f64,
    pub start_point: f64,
    pub times: Vec<f64>,
    pub body: Expression,
    pub body_bound: f64,
    pub cache_kernels: bool,
    pub reference: Option<Complex64>,
}

#[derive(Debug, Clone)]
pub struct FeynmanSetup {
    pub path: PathSetup,
    pub schedule: RegularizationSchedule,
    pub cross_schedule: Option<RegularizationSchedule>,
    pub tolerance: f64,
    pub method: ComplexIntegration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselSetup {
    pub orders: Vec<f64>,
    pub grid: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSetup {
    pub params: RadialParams,
    pub r: f64,
    pub t_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub tolerance: f64,
    /// `(s, t, u, pv_cut)` for the lambda-integral report.
    pub lambda_integral: Option<(f64, f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSetup {
    pub spec: PerturbationSeriesSpec,
    pub k_max: usize,
}

#[derive(Debug, Clone)]
pub enum Experiment {
    Wiener(PathSetup),
    Feynman(FeynmanSetup),
    BesselCheck(BesselSetup),
    Propagator(PropagatorSetup),
    Series(SeriesSetup),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub experiment: Experiment,
    lines: BTreeMap<String, usize>,
}

impl ExperimentConfig {
    /// Line on which `key` was set, if it was.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }
}

struct Reader {
    entries: BTreeMap<String, (String, usize)>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn new(text: &str, command: Command) -> Self {
        let mut reader = Reader {
            entries: BTreeMap::new(),
            errors: Vec::new(),
        };
        let allowed: BTreeSet<&str> = command.keys().into_iter().collect();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                reader.push(Some(line), None, format!("expected 'key = value', got '{content}'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if !allowed.contains(key) {
                reader.push(Some(line), None, format!("unknown key '{key}' for command {command}"));
            } else if let Some((_, first)) = reader.entries.get(key) {
                let first = *first;
                reader.push(Some(line), Some(key), format!("duplicate key (first set on line {first})"));
            } else {
                reader.entries.insert(key.to_string(), (value.to_string(), line));
            }
        }
        reader
    }

    fn push(&mut self, line: Option<usize>, key: Option<&str>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            key: key.map(str::to_string),
            message: message.into(),
        });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(_, l)| *l)
    }

    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line(key);
        self.push(line, Some(key), message);
    }

    /// Record a library precondition failure against `key`.
    fn check<T>(&mut self, key: &str, result: Result<T, Error>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(key, e.to_string());
                None
            }
        }
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.entries.get(key).map(|(v, _)| v.clone())
    }

    fn parsed<T>(&mut self, key: &str, expected: &str, parse: impl Fn(&str) -> Option<T>) -> Option<Option<T>> {
        let raw = self.raw(key)?;
        match parse(&raw) {
            Some(v) => Some(Some(v)),
            None => {
                self.fail(key, format!("expected {expected}, got '{raw}'"));
                Some(None)
            }
        }
    }

    /// `Some(v)` when set and valid, `None` when unset or invalid (the
    /// latter recorded).
    fn number(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a number", parse_number).flatten()
    }

    fn number_or(&mut self, key: &str, default: f64) -> Option<f64> {
        match self.parsed(key, "a number", parse_number) {
            None => Some(default),
            Some(v) => v,
        }
    }

    fn required_number(&mut self, key: &str) -> Option<f64> {
        if self.raw(key).is_none() {
            self.push(None, Some(key), "missing required key");
            return None;
        }
        self.number(key)
    }

    fn count_or(&mut self, key: &str, default: usize) -> Option<usize> {
        match self.parsed(key, "a nonnegative integer", |s| s.parse::<usize>().ok()) {
            None => Some(default),
            Some(v) => v,
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Option<bool> {
        let parse = |s: &str| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        };
        match self.parsed(key, "true or false", parse) {
            None => Some(default),
            Some(v) => v,
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let parse = |s: &str| -> Option<Vec<f64>> {
            let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
            if items.is_empty() {
                return None;
            }
            items.into_iter().map(parse_number).collect()
        };
        self.parsed(key, "a comma-separated list of numbers", parse).flatten()
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Option<Vec<f64>> {
        if self.raw(key).is_none() {
            return Some(default.to_vec());
        }
        self.list(key)
    }

    fn required_list(&mut self, key: &str) -> Option<Vec<f64>> {
        if self.raw(key).is_none() {
            self.push(None, Some(key), "missing required key");
            return None;
        }
        self.list(key)
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: Option<T>) -> Option<T> {
        let Some(raw) = self.raw(key) else {
            if default.is_none() {
                self.push(None, Some(key), "missing required key");
            }
            return default;
        };
        match options.iter().find(|(name, _)| *name == raw) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.fail(key, format!("expected one of {}, got '{raw}'", names.join(", ")));
                None
            }
        }
    }

    fn positive(&mut self, key: &str, value: Option<f64>) -> Option<f64> {
        match value {
            Some(v) if v > 0.0 && v.is_finite() => Some(v),
            Some(v) => {
                self.fail(key, format!("{v} must be positive"));
                None
            }
            None => None,
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Circle,
    Interval,
    HalfLine,
}

fn read_space(r: &mut Reader) -> Option<ConfigSpace> {
    let kind = r.choice(
        "kind",
        &[("circle", Kind::Circle), ("interval", Kind::Interval), ("halfline", Kind::HalfLine)],
        None,
    );
    let nodes = r.count_or("nodes", 64);
    let points = r.count_or("gauss_points", 8);
    let l = r.number_or("L", 1.0);
    let a = r.number_or("a", 0.0);
    let b = r.number_or("b", 1.0);
    let boundary = r.choice(
        "boundary",
        &[("dirichlet", Boundary::Dirichlet), ("neumann", Boundary::Neumann)],
        Some(Boundary::Dirichlet),
    );
    let cutoff = r.number_or("cutoff", 8.0);
    let (kind, nodes, points) = (kind?, nodes?, points?);
    let panels = |r: &mut Reader| -> Option<usize> {
        if points == 0 || nodes == 0 || nodes % points != 0 {
            r.fail("nodes", format!("{nodes} must be a positive multiple of gauss_points = {points}"));
            None
        } else {
            Some(nodes / points)
        }
    };
    match kind {
        Kind::Circle => r.check("L", ConfigSpace::circle(l?, nodes)),
        Kind::Interval => {
            let panels = panels(r);
            let (a, b, boundary, panels) = (a?, b?, boundary?, panels?);
            r.check("b", ConfigSpace::interval(a, b, boundary, panels, points))
        }
        Kind::HalfLine => {
            let panels = panels(r);
            r.check("cutoff", ConfigSpace::halfline(cutoff?, panels?, points))
        }
    }
}

fn read_path(r: &mut Reader) -> Option<PathSetup> {
    let space = read_space(r);
    let spectral_terms = r.count_or("spectral_terms", DEFAULT_SPECTRAL_TERMS);
    if spectral_terms == Some(0) {
        r.fail("spectral_terms", "must be at least 1");
    }
    let horizon = r.number_or("horizon", 1.0);
    let interval = horizon.and_then(|h| r.check("horizon", TimeInterval::new(h)));
    let start_time = r.number_or("start_time", 0.0);
    let start_point = r.number_or("start_point", 0.0);
    let times = r.required_list("times");
    let body_bound = r.number_or("body_bound", 1.0);
    let body_bound = r.positive("body_bound", body_bound);
    let cache_kernels = r.bool_or("cache_kernels", false);
    let reference_re = r.number("reference_re");
    let reference_im = r.number("reference_im");
    let reference = match (reference_re, reference_im) {
        (None, None) => None,
        (re, im) => Some(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
    };

    if let (Some(interval), Some(t0)) = (interval, start_time) {
        r.check("start_time", interval.point(t0));
    }
    if let (Some(space), Some(x0)) = (&space, start_point) {
        if !space.contains(x0) {
            r.fail("start_point", format!("{x0} is outside the configuration space"));
        }
    }
    let mut distinct = None;
    if let (Some(times), Some(interval), Some(t0)) = (&times, interval, start_time) {
        if let Some(c) = r.check("times", canonicalize_times(times, interval)) {
            if let Some(&first) = c.unique_sorted.first() {
                if first <= t0 {
                    r.check::<()>("times", Err(Error::TimePrecedesPin { time: first, start: t0 }));
                }
            }
            distinct = Some(c.distinct());
        }
    }
    if distinct.is_some_and(|d| d >= 4) && r.raw("nodes").is_none() {
        r.push(None, Some("nodes"), "4 or more distinct times need an explicit nodes count");
    }
    if let (Some(space), Some(d)) = (&space, distinct) {
        let grid = (space.rule().len() as f64).powi(d as i32);
        if grid > MAX_TENSOR_NODES {
            r.fail(
                "nodes",
                format!(
                    "{} nodes per axis with {d} distinct times gives {grid:e} grid points (limit {MAX_TENSOR_NODES:e})",
                    space.rule().len()
                ),
            );
        }
    }
    let body = match (r.raw("body"), &times) {
        (None, _) => {
            r.push(None, Some("body"), "missing required key");
            None
        }
        (Some(text), Some(times)) => match Expression::parse(&text, times.len()) {
            Ok(e) => Some(e),
            Err(e) => {
                r.fail("body", e.to_string());
                None
            }
        },
        (Some(_), None) => None,
    };

    Some(PathSetup {
        space: space?,
        spectral_terms: spectral_terms.filter(|&m| m > 0)?,
        interval: interval?,
        start_time: start_time?,
        start_point: start_point?,
        times: times?,
        body: body?,
        body_bound: body_bound?,
        cache_kernels: cache_kernels?,
        reference,
    })
}

fn read_schedule(r: &mut Reader, eps0_key: &str, ratio_key: &str, steps_key: &str) -> Option<RegularizationSchedule> {
    let eps0 = r.number_or(eps0_key, 1e-3);
    let ratio = r.number_or(ratio_key, 0.25);
    let steps = r.count_or(steps_key, 10);
    if let Some(e) = eps0.filter(|&e| !(e > 0.0)) {
        r.fail(eps0_key, Error::RegularizationNotPositive(e).to_string());
        return None;
    }
    let (eps0, ratio, steps) = (eps0?, ratio?, steps?);
    match RegularizationSchedule::new(eps0, ratio, steps) {
        Ok(s) => Some(s),
        Err(e @ Error::InvalidParameter { name, .. }) => {
            let key = if name == "ratio" { ratio_key } else { steps_key };
            r.fail(key, e.to_string());
            None
        }
        Err(e) => {
            r.fail(eps0_key, e.to_string());
            None
        }
    }
}

fn read_feynman(r: &mut Reader) -> Option<FeynmanSetup> {
    let path = read_path(r);
    let schedule = read_schedule(r, "eps0", "ratio", "steps");
    let cross = if ["cross_eps0", "cross_ratio", "cross_steps"].iter().any(|k| r.raw(k).is_some()) {
        Some(read_schedule(r, "cross_eps0", "cross_ratio", "cross_steps"))
    } else {
        None
    };
    let tolerance = r.number_or("tolerance", 1e-6);
    let tolerance = r.positive("tolerance", tolerance);
    let method = r.choice(
        "method",
        &[("direct", ComplexIntegration::Direct), ("four-part", ComplexIntegration::FourPart)],
        Some(ComplexIntegration::Direct),
    );
    Some(FeynmanSetup {
        path: path?,
        schedule: schedule?,
        cross_schedule: match cross {
            Some(s) => Some(s?),
            None => None,
        },
        tolerance: tolerance?,
        method: method?,
    })
}

fn read_bessel(r: &mut Reader) -> Option<BesselSetup> {
    let orders = r.list_or("orders", &[1.0, 1.5, 2.0, 3.0]);
    if let Some(bad) = orders.as_ref().and_then(|o| o.iter().find(|&&v| v < 1.0)) {
        let msg = format!("order {bad} must be at least 1 (the recurrences use order - 1)");
        r.fail("orders", msg);
    }
    let points = r.count_or("grid_points", 50);
    let lo = r.number_or("grid_min", 0.5);
    let hi = r.number_or("grid_max", 50.0);
    let tolerance = r.number_or("tolerance", 1e-9);
    let tolerance = r.positive("tolerance", tolerance);
    if points == Some(0) {
        r.fail("grid_points", "must be at least 1");
    }
    if let (Some(lo), Some(hi)) = (lo, hi) {
        if !(lo >= 0.0 && lo < hi) {
            r.fail("grid_max", format!("need 0 <= grid_min < grid_max, got ({lo}, {hi}]"));
        }
    }
    let (orders, points, lo, hi) = (orders?, points?, lo?, hi?);
    if r.errors.iter().any(|e| {
        matches!(e.key.as_deref(), Some("orders" | "grid_points" | "grid_max"))
    }) {
        return None;
    }
    // points spread over (lo, hi], excluding the left end
    let grid = (1..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect();
    Some(BesselSetup {
        orders,
        grid,
        tolerance: tolerance?,
    })
}

fn read_params(r: &mut Reader) -> Option<RadialParams> {
    let n = r.number_or("n", 3.0);
    let nu = r.number_or("nu", 0.0);
    let (n, nu) = (n?, nu?);
    r.check("nu", RadialParams::new(n, nu))
}

fn check_nonzero_times(r: &mut Reader, key: &str, values: &Option<Vec<f64>>) {
    if values.as_ref().is_some_and(|v| v.contains(&0.0)) {
        r.check::<()>(key, Err(Error::SingularTime));
    }
}

fn read_propagator(r: &mut Reader) -> Option<PropagatorSetup> {
    let params = read_params(r);
    let radius = r.number_or("r", 1.0);
    let radius = r.positive("r", radius);
    let t_values = r.list_or("t_values", &[0.3, 0.5, 1.0]);
    check_nonzero_times(r, "t_values", &t_values);
    let lambda_values = r.list_or("lambda_values", &[0.5, 1.0, 2.0]);
    let tolerance = r.number_or("tolerance", 1e-4);
    let tolerance = r.positive("tolerance", tolerance);
    let wants_integral = ["s", "t", "u", "pv_cut"].iter().any(|k| r.raw(k).is_some());
    let lambda_integral = if wants_integral {
        let s = r.required_number("s");
        let s = r.positive("s", s);
        let t = r.required_number("t");
        let u = r.required_number("u");
        let cut = r.number_or("pv_cut", 1e-3);
        let cut = r.positive("pv_cut", cut);
        for (key, v) in [("t", t), ("u", u)] {
            if v == Some(0.0) {
                r.check::<()>(key, Err(Error::SingularTime));
            }
        }
        Some((s?, t.filter(|&v| v != 0.0)?, u.filter(|&v| v != 0.0)?, cut?))
    } else {
        None
    };
    if r.errors.iter().any(|e| e.key.as_deref() == Some("t_values")) {
        return None;
    }
    Some(PropagatorSetup {
        params: params?,
        r: radius?,
        t_values: t_values?,
        lambda_values: lambda_values?,
        tolerance: tolerance?,
        lambda_integral,
    })
}

fn read_series(r: &mut Reader) -> Option<SeriesSetup> {
    let params = read_params(r);
    let e = r.required_number("e");
    let cutoff = r.number_or("tail_cutoff", 20.0);
    let potential = match (e, cutoff) {
        (Some(e), Some(c)) => match PowerPotential::new(e, c) {
            Ok(p) => Some(p),
            Err(err @ Error::InadmissiblePotential(_)) => {
                r.fail("e", err.to_string());
                None
            }
            Err(err) => {
                r.fail("tail_cutoff", err.to_string());
                None
            }
        },
        _ => None,
    };
    let t = r.required_number("t");
    let u = r.required_number("u");
    let radius = r.number_or("r", 1.0);
    let s = r.number_or("s", 1.0);
    let inner = r.required_list("series_times");
    let k_max = match (r.count_or("k_max", usize::MAX), &inner) {
        (Some(usize::MAX), Some(inner)) => Some(inner.len()),
        (Some(k), Some(inner)) if k > inner.len() => {
            r.fail("k_max", format!("{k} exceeds the {} entries of series_times", inner.len()));
            None
        }
        (k, _) => k,
    };
    let (params, potential, t, u, radius, s, inner) = (params?, potential?, t?, u?, radius?, s?, inner?);
    let spec = match PerturbationSeriesSpec::new(params, potential, t, inner, u, radius, s) {
        Ok(spec) => spec,
        Err(err) => {
            let key = match err {
                Error::InvalidParameter { .. } => "r",
                _ => "series_times",
            };
            r.fail(key, err.to_string());
            return None;
        }
    };
    Some(SeriesSetup { spec, k_max: k_max? })
}

/// Parse and validate `text` for `command`. Either every field is valid or
/// every problem found is returned.
pub fn parse_config(command: Command, text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut r = Reader::new(text, command);
    let experiment = match command {
        Command::Wiener => read_path(&mut r).map(Experiment::Wiener),
        Command::Feynman => read_feynman(&mut r).map(Experiment::Feynman),
        Command::BesselCheck => read_bessel(&mut r).map(Experiment::BesselCheck),
        Command::Propagator => read_propagator(&mut r).map(Experiment::Propagator),
        Command::Series => read_series(&mut r).map(Experiment::Series),
    };
    match experiment {
        Some(experiment) if r.errors.is_empty() => Ok(ExperimentConfig {
            command,
            experiment,
            lines: r.entries.into_iter().map(|(k, (_, l))| (k, l)).collect(),
        }),
        _ => {
            if r.errors.is_empty() {
                r.push(None, None, "invalid configuration");
            }
            r.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
            Err(ConfigErrors(r.errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIENER: &str = "kind = circle\nL = 1\ntimes = 0.5\nbody = cos(2*pi*x1)\n";

    #[test]
    fn minimal_wiener_is_valid() {
        let c = parse_config(Command::Wiener, WIENER).unwrap();
        let Experiment::Wiener(p) = &c.experiment else { panic!() };
        assert_eq!(p.times, vec![0.5]);
        assert_eq!(p.space.rule().len(), 64);
        assert_eq!(c.line_of("body"), Some(4));
    }

    #[test]
    fn comments_and_quotes() {
        let text = "# header\nkind = circle # trailing\ntimes = 0.2, 0.4\nbody = \"x1 * x2\"\n\n";
        assert!(parse_config(Command::Wiener, text).is_ok());
    }

    #[test]
    fn zero_regularization_is_rejected() {
        let text = format!("{WIENER}eps0 = 0\n");
        let err = parse_config(Command::Feynman, &text).unwrap_err();
        assert!(err.contains("regularization must be positive"), "{err}");
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn inadmissible_potential() {
        let text = "e = -1.5\nt = -1\nu = 1\nseries_times = -0.5, 0.5\n";
        let err = parse_config(Command::Series, text).unwrap_err();
        assert!(err.contains("inadmissible potential"), "{err}");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = "kind = torus\nnodes = many\ncolour = red\ntimes = 0.5\nbody = x2\nL = 1\n";
        let err = parse_config(Command::Wiener, text).unwrap_err();
        assert!(err.contains("unknown key 'colour'"), "{err}");
        assert!(err.contains("expected a nonnegative integer, got 'many'"), "{err}");
        assert!(err.contains("expected one of circle, interval, halfline"), "{err}");
        assert!(err.contains("x2 outside declared arity 1"), "{err}");
        assert_eq!(err.0.len(), 4);
    }

    #[test]
    fn keys_outside_command_are_unknown() {
        let err = parse_config(Command::Wiener, &format!("{WIENER}eps0 = 0.1\n")).unwrap_err();
        assert!(err.contains("unknown key 'eps0'"), "{err}");
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        let err = parse_config(Command::Wiener, &format!("{WIENER}L = 2\njunk\n")).unwrap_err();
        assert!(err.contains("duplicate key (first set on line 2)"), "{err}");
        assert!(err.contains("line 6: expected 'key = value'"), "{err}");
    }

    #[test]
    fn time_preconditions() {
        let err = parse_config(Command::Wiener, "kind = circle\ntimes = 1.5\nbody = 1\n").unwrap_err();
        assert!(err.contains("time outside I"), "{err}");
        let err =
            parse_config(Command::Wiener, "kind = circle\nstart_time = 0.5\ntimes = 0.5\nbody = 1\n").unwrap_err();
        assert!(err.contains("time precedes pin"), "{err}");
        let err = parse_config(Command::Series, "e = 1\nt = -1\nu = 1\nseries_times = 0.5, -0.5\n").unwrap_err();
        assert!(err.contains("time ordering violated"), "{err}");
        let err = parse_config(Command::Series, "e = 1\nt = -1\nu = 1\nseries_times = 0\n").unwrap_err();
        assert!(err.contains("singular time"), "{err}");
    }

    #[test]
    fn grid_limit_is_checked_before_running() {
        let text = "kind = circle\ntimes = 0.1, 0.2, 0.3, 0.4, 0.5\nbody = 1\nnodes = 128\n";
        let err = parse_config(Command::Wiener, text).unwrap_err();
        assert!(err.contains("grid points"), "{err}");
        // duplicated times collapse first
        let text = "kind = circle\ntimes = 0.1, 0.1, 0.2, 0.2, 0.3\nbody = 1\nnodes = 128\n";
        assert!(parse_config(Command::Wiener, text).is_ok());
        let text = "kind = circle\ntimes = 0.1, 0.2, 0.3, 0.4\nbody = 1\n";
        let err = parse_config(Command::Wiener, text).unwrap_err();
        assert!(err.contains("explicit nodes count"), "{err}");
        assert!(parse_config(Command::Wiener, &format!("{text}nodes = 16\n")).is_ok());
    }

    #[test]
    fn interval_nodes_must_fill_panels() {
        let err = parse_config(Command::Wiener, "kind = interval\nnodes = 30\ntimes = 0.5\nbody = 1\n").unwrap_err();
        assert!(err.contains("multiple of gauss_points"), "{err}");
    }

    #[test]
    fn bessel_defaults() {
        let c = parse_config(Command::BesselCheck, "").unwrap();
        let Experiment::BesselCheck(b) = c.experiment else { panic!() };
        assert_eq!(b.orders, vec![1.0, 1.5, 2.0, 3.0]);
        assert_eq!(b.grid.len(), 50);
        assert!(b.grid[0] > 0.5 && *b.grid.last().unwrap() == 50.0);
        assert!(parse_config(Command::BesselCheck, "orders = 0.5").is_err());
    }

    #[test]
    fn propagator_requires_nonzero_times() {
        let err = parse_config(Command::Propagator, "t_values = 0.3, 0\n").unwrap_err();
        assert!(err.contains("singular time"), "{err}");
        let err = parse_config(Command::Propagator, "s = 1\nt = 0.5\n").unwrap_err();
        assert!(err.contains("u: missing required key"), "{err}");
    }
}
