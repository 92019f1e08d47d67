//! Execution of validated experiments and CSV/summary rendering.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use pathmeasure_core::complex_measure::modulus_bound;
use pathmeasure_core::cylinder::CylinderFunction;
use pathmeasure_core::feynman::{cross_check_schedules, feynman_integral, ConvergenceReport, FeynmanProblem};
use pathmeasure_core::kernel::{
    cylinder_integral, heat_kernel, spectral_drift, total_mass, PinnedMeasure, SPECTRAL_DRIFT_TOLERANCE,
};
use pathmeasure_core::radial::{
    bessel_transform_numeric, bessel_transform_plan, check_recurrences, p_closed_form, perturbation_series,
    propagator_lambda_integral,
};
use pathmeasure_core::Error;

use crate::config::{
    BesselSetup, Command, Experiment, ExperimentConfig, FeynmanSetup, PathSetup, PropagatorSetup, SeriesSetup,
};

/// A library error raised while running, attributed to the config key that
/// most plausibly caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub key: Option<&'static str>,
    pub line: Option<usize>,
    pub source: Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key) {
            (Some(line), Some(key)) => write!(f, "line {line}: {key}: {}", self.source),
            (None, Some(key)) => write!(f, "{key}: {}", self.source),
            _ => write!(f, "{}", self.source),
        }
    }
}

impl std::error::Error for RunError {}

fn attribute(command: Command, e: &Error) -> Option<&'static str> {
    Some(match e {
        Error::BoundExceeded { .. } => "body_bound",
        Error::NonFiniteIntegrand { .. } | Error::ArityMismatch { .. } => match command {
            Command::Wiener | Command::Feynman => "body",
            Command::Series => "e",
            _ => return None,
        },
        Error::RegularizationNotPositive(_) => "eps0",
        Error::InadmissiblePotential(_) => "e",
        Error::TimeOutsideInterval { .. } | Error::TimePrecedesPin { .. } | Error::EmptyTimeTuple => "times",
        Error::TimeOrdering(_) => "series_times",
        Error::TensorGridTooLarge { .. } => "nodes",
        Error::InvalidParameter { name, .. } => name,
        _ => return None,
    })
}

/// Rendered artifacts of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub summary: String,
    /// Set by the feynman command only.
    pub converged: Option<bool>,
}

impl RunOutput {
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("result.csv"), &self.csv)?;
        fs::write(dir.join("summary.txt"), &self.summary)
    }
}

/// 17 significant digits, lowercase exponent.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

struct Table {
    out: String,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            out: format!("# {}\n{}\n", columns.join(", "), columns.join(",")),
        }
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }
}

struct Summary {
    out: String,
}

impl Summary {
    fn new(command: Command) -> Self {
        Summary {
            out: format!("command={command}\n"),
        }
    }

    fn num(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.out, "{key}={}", fmt_num(v));
    }

    fn complex(&mut self, key: &str, v: Complex64) {
        self.num(&format!("{key}_re"), v.re);
        self.num(&format!("{key}_im"), v.im);
    }

    fn text(&mut self, key: &str, v: impl fmt::Display) {
        let _ = writeln!(self.out, "{key}={v}");
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let result = match &config.experiment {
        Experiment::Wiener(p) => run_wiener(p),
        Experiment::Feynman(f) => run_feynman(f),
        Experiment::BesselCheck(b) => run_bessel(b),
        Experiment::Propagator(p) => run_propagator(p),
        Experiment::Series(s) => run_series(s),
    };
    result.map_err(|source| {
        let key = attribute(config.command, &source);
        RunError {
            key,
            line: key.and_then(|k| config.line_of(k)),
            source,
        }
    })
}

fn cylinder(p: &PathSetup) -> Result<CylinderFunction, Error> {
    CylinderFunction::new(p.times.clone(), p.body_bound, p.body.clone().into_fn())
}

fn run_wiener(p: &PathSetup) -> Result<RunOutput, Error> {
    let kernel = heat_kernel(&p.space, p.spectral_terms)?;
    let measure = PinnedMeasure::new(p.space.clone(), kernel, p.interval, p.start_time, p.start_point)?
        .with_kernel_cache(p.cache_kernels);
    let f = cylinder(p)?;
    let value = cylinder_integral(&measure, &f)?;
    let mass = total_mass(&measure, &p.times)?;
    let bound = modulus_bound(&measure, &f)?;
    // truncation check: terms vs doubled terms at the shortest time step
    let mut steps: Vec<f64> = p.times.clone();
    steps.push(p.start_time);
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    let min_gap = steps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let drift = spectral_drift(&p.space, p.spectral_terms, min_gap)?;

    let mut table = Table::new(&["re", "im", "total_mass", "modulus_bound"]);
    table.row([fmt_num(value.re), fmt_num(value.im), fmt_num(mass.re), fmt_num(bound)]);
    let mut s = Summary::new(Command::Wiener);
    s.text("body", p.body.text());
    s.complex("value", value);
    s.num("total_mass", mass.re);
    s.num("modulus_bound", bound);
    s.num("spectral_drift", drift);
    s.text("spectral_drift_ok", drift <= SPECTRAL_DRIFT_TOLERANCE);
    if let Some(r) = p.reference {
        s.num("reference_error", (value - r).norm());
    }
    Ok(RunOutput {
        csv: table.out,
        summary: s.out,
        converged: None,
    })
}

fn feynman_csv(report: &ConvergenceReport) -> String {
    let mut table = Table::new(&["k", "eps", "re", "im", "cauchy_gap"]);
    for (k, (eps, v)) in report.eps.iter().zip(&report.values).enumerate() {
        let gap = if k == 0 { f64::NAN } else { report.cauchy_gaps[k - 1] };
        table.row([k.to_string(), fmt_num(*eps), fmt_num(v.re), fmt_num(v.im), fmt_num(gap)]);
    }
    table.out
}

fn run_feynman(f: &FeynmanSetup) -> Result<RunOutput, Error> {
    let p = &f.path;
    let problem = FeynmanProblem {
        space: p.space.clone(),
        interval: p.interval,
        spectral_terms: p.spectral_terms,
        start_time: p.start_time,
        start_point: p.start_point,
        function: cylinder(p)?,
        cache_kernels: p.cache_kernels,
        method: f.method,
    };
    let (report, cross) = match &f.cross_schedule {
        Some(b) => {
            let (ra, rb, d) = cross_check_schedules(&problem, &f.schedule, b, f.tolerance)?;
            (ra, Some((rb, d)))
        }
        None => (feynman_integral(&problem, &f.schedule, f.tolerance)?, None),
    };

    let mut s = Summary::new(Command::Feynman);
    s.text("body", p.body.text());
    s.complex("limit", report.limit_estimate);
    s.text("converged", report.converged);
    s.text(
        "converged_at",
        report.converged_at.map_or("none".to_string(), |k| k.to_string()),
    );
    s.num("observed_order", report.observed_order.unwrap_or(f64::NAN));
    s.num("final_gap", report.cauchy_gaps.last().copied().unwrap_or(f64::NAN));
    s.num("tolerance", report.tolerance);
    if let Some(r) = p.reference {
        s.num("reference_error", (report.limit_estimate - r).norm());
    }
    if let Some((rb, d)) = &cross {
        s.complex("cross_limit", rb.limit_estimate);
        s.text("cross_converged", rb.converged);
        s.num("cross_difference", *d);
    }
    Ok(RunOutput {
        csv: feynman_csv(&report),
        summary: s.out,
        converged: Some(report.converged),
    })
}

fn run_bessel(b: &BesselSetup) -> Result<RunOutput, Error> {
    let mut table = Table::new(&["order", "derivative_residual", "three_term_residual", "finite_difference_residual"]);
    let mut worst: f64 = 0.0;
    for &order in &b.orders {
        let r = check_recurrences(order, &b.grid)?;
        worst = worst.max(r.derivative).max(r.three_term);
        table.row([fmt_num(order), fmt_num(r.derivative), fmt_num(r.three_term), fmt_num(r.finite_difference)]);
    }
    let mut s = Summary::new(Command::BesselCheck);
    s.text("grid_points", b.grid.len());
    s.num("max_residual", worst);
    s.num("tolerance", b.tolerance);
    s.text("passed", worst <= b.tolerance);
    Ok(RunOutput {
        csv: table.out,
        summary: s.out,
        converged: None,
    })
}

fn run_propagator(p: &PropagatorSetup) -> Result<RunOutput, Error> {
    let mut table = Table::new(&[
        "t", "lambda", "numeric_re", "numeric_im", "closed_re", "closed_im", "rel_error",
    ]);
    let mut worst: f64 = 0.0;
    for &t in &p.t_values {
        let plan = bessel_transform_plan(t);
        for &lambda in &p.lambda_values {
            let numeric = bessel_transform_numeric(p.r, t, lambda, &p.params, &plan)?.limit;
            let closed = p_closed_form(p.r, t, lambda, &p.params)?;
            let rel = (numeric - closed).norm() / closed.norm();
            worst = worst.max(rel);
            table.row([
                fmt_num(t),
                fmt_num(lambda),
                fmt_num(numeric.re),
                fmt_num(numeric.im),
                fmt_num(closed.re),
                fmt_num(closed.im),
                fmt_num(rel),
            ]);
        }
    }
    let mut s = Summary::new(Command::Propagator);
    s.num("max_rel_error", worst);
    s.num("tolerance", p.tolerance);
    s.text("passed", worst <= p.tolerance);
    if let Some((sv, t, u, cut)) = p.lambda_integral {
        let rep = propagator_lambda_integral(p.r, sv, t, u, &p.params, cut)?;
        s.complex("propagator_closed_form", rep.closed_form);
        s.complex("principal_value", rep.principal_value);
        s.num("principal_value_discrepancy", rep.relative_discrepancy);
        s.complex("principal_value_conjugate", rep.principal_value_conjugate);
        s.num("conjugate_discrepancy", rep.conjugate_discrepancy);
    }
    Ok(RunOutput {
        csv: table.out,
        summary: s.out,
        converged: None,
    })
}

fn run_series(cfg: &SeriesSetup) -> Result<RunOutput, Error> {
    let rep = perturbation_series(&cfg.spec, cfg.k_max)?;
    let mut table = Table::new(&["k", "t_k", "weight", "tail_estimate", "re", "im", "modulus"]);
    for (k, sum) in rep.partial_sums.iter().enumerate() {
        let (tk, w, tail) = if k == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let w = &rep.weights[k - 1];
            (cfg.spec.inner_times()[k - 1], w.value, w.tail_estimate)
        };
        table.row([
            k.to_string(),
            fmt_num(tk),
            fmt_num(w),
            fmt_num(tail),
            fmt_num(sum.re),
            fmt_num(sum.im),
            fmt_num(sum.norm()),
        ]);
    }
    let mut s = Summary::new(Command::Series);
    s.complex("prefactor", rep.prefactor);
    if let Some(last) = rep.partial_sums.last() {
        s.complex("final_sum", *last);
    }
    let warnings = rep.weights.iter().filter(|w| w.tail_warning).count();
    s.text("tail_warnings", warnings);
    let ratios: Vec<String> = rep.growth_ratios().into_iter().map(fmt_num).collect();
    s.text("growth_ratios", ratios.join(","));
    Ok(RunOutput {
        csv: table.out,
        summary: s.out,
        converged: None,
    })
}
