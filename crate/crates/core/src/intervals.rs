//! Two-sided confidence intervals: Wald, percentile, percentile-t, Efron's
//! percentile and bootstrap-Wald. Lower tail `beta`, upper tail `alpha`.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::bootstrap::ReplicateSet;
use crate::density_param::EstimatorReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wald,
    Percentile,
    PercentileT,
    Efron,
    BootstrapWald,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Wald,
        Method::Percentile,
        Method::PercentileT,
        Method::Efron,
        Method::BootstrapWald,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Wald => "wald",
            Method::Percentile => "perc",
            Method::PercentileT => "perct",
            Method::Efron => "efron",
            Method::BootstrapWald => "bwald",
        }
    }

    pub fn needs_replicates(self) -> bool {
        self != Method::Wald
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown interval method '{s}' (wald | perc | perct | efron | bwald)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub alpha: f64,
    pub beta: f64,
    pub method: Method,
}

impl IntervalSpec {
    pub fn new(alpha: f64, beta: f64, method: Method) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && alpha + beta < 1.0) {
            return Err(Error::Domain(format!(
                "tail probabilities must lie in (0,1) with alpha + beta < 1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(IntervalSpec { alpha, beta, method })
    }

    /// Equal tails for the given confidence level.
    pub fn equi_tailed(level: f64, method: Method) -> Result<Self> {
        let t = (1.0 - level) / 2.0;
        Self::new(t, t, method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `inf { x : F_B(x) >= p }`: the `ceil(p B)`-th order statistic.
pub fn lower_quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("quantile of an empty replicate set".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0,1], got {p}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let b = v.len();
    let rank = ((p * b as f64).ceil() as usize).clamp(1, b);
    Ok(v[rank - 1])
}

fn z(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn normal_interval(center: f64, sd: f64, n: usize, spec: &IntervalSpec) -> Interval {
    let se = sd / (n as f64).sqrt();
    Interval {
        lo: center + z(spec.beta) * se,
        hi: center + z(1.0 - spec.alpha) * se,
    }
}

pub fn wald(report: &EstimatorReport, spec: &IntervalSpec, n: usize) -> Interval {
    normal_interval(report.psi_hat, report.sigma_hat, n, spec)
}

pub fn percentile(report: &EstimatorReport, reps: &ReplicateSet, spec: &IntervalSpec) -> Result<Interval> {
    let dev: Vec<f64> = reps.psi_star.iter().map(|v| v - reps.center).collect();
    Ok(Interval {
        lo: report.psi_hat - lower_quantile(&dev, 1.0 - spec.alpha)?,
        hi: report.psi_hat - lower_quantile(&dev, spec.beta)?,
    })
}

pub fn percentile_t(report: &EstimatorReport, reps: &ReplicateSet, spec: &IntervalSpec) -> Result<Interval> {
    if !(report.sigma_hat > 0.0) {
        return Err(Error::Degenerate(
            "percentile-t needs a positive influence-function standard error".into(),
        ));
    }
    let mut t = Vec::with_capacity(reps.b());
    for (i, (psi, sd)) in reps.psi_star.iter().zip(&reps.sigma_star).enumerate() {
        if !(*sd > 0.0) {
            return Err(Error::Studentization { replicate: i });
        }
        t.push((psi - reps.center) / sd);
    }
    Ok(Interval {
        lo: report.psi_hat - lower_quantile(&t, 1.0 - spec.alpha)? * report.sigma_hat,
        hi: report.psi_hat - lower_quantile(&t, spec.beta)? * report.sigma_hat,
    })
}

pub fn efron(reps: &ReplicateSet, spec: &IntervalSpec) -> Result<Interval> {
    Ok(Interval {
        lo: lower_quantile(&reps.psi_star, spec.beta)?,
        hi: lower_quantile(&reps.psi_star, 1.0 - spec.alpha)?,
    })
}

pub fn bootstrap_wald(report: &EstimatorReport, reps: &ReplicateSet, spec: &IntervalSpec, n: usize) -> Result<Interval> {
    if reps.b() < 2 {
        return Err(Error::Domain("bootstrap-Wald needs at least 2 replicates".into()));
    }
    let nf = n as f64;
    let var = reps.psi_star.iter().map(|v| nf * (v - reps.center).powi(2)).sum::<f64>() / reps.b() as f64;
    Ok(normal_interval(report.psi_hat, var.sqrt(), n, spec))
}

/// Dispatch on `spec.method`; `reps` may be `None` only for Wald.
pub fn interval(spec: &IntervalSpec, report: &EstimatorReport, reps: Option<&ReplicateSet>, n: usize) -> Result<Interval> {
    if spec.method == Method::Wald {
        return Ok(wald(report, spec, n));
    }
    let reps = reps.ok_or_else(|| Error::Domain(format!("method '{}' needs bootstrap replicates", spec.method)))?;
    match spec.method {
        Method::Wald => unreachable!(),
        Method::Percentile => percentile(report, reps, spec),
        Method::PercentileT => percentile_t(report, reps, spec),
        Method::Efron => efron(reps, spec),
        Method::BootstrapWald => bootstrap_wald(report, reps, spec, n),
    }
}
