//! The average density value `psi = int eta^2`: estimator constructions,
//! influence function `phi = 2 eta - 2 psi`, variance estimate and the value
//! of the construction at the bootstrap sampling distribution.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kde::{DensityEstimate, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Construction {
    /// `2 P_n eta - int eta^2`
    OneStep,
    /// `int eta^2`
    PlugIn,
    /// `P_n eta`, which also solves the estimating equation `P_n phi = 0`.
    EmpiricalMeanPlugIn,
}

impl Construction {
    pub const ALL: [Construction; 3] = [
        Construction::OneStep,
        Construction::PlugIn,
        Construction::EmpiricalMeanPlugIn,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Construction::OneStep => "onestep",
            Construction::PlugIn => "plugin",
            Construction::EmpiricalMeanPlugIn => "meanplugin",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onestep" => Ok(Construction::OneStep),
            "plugin" => Ok(Construction::PlugIn),
            "meanplugin" => Ok(Construction::EmpiricalMeanPlugIn),
            other => Err(Error::Parse(format!(
                "unknown construction '{other}' (expected onestep | plugin | meanplugin)"
            ))),
        }
    }
}

/// The three numbers every construction, and its variance estimate, is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitives {
    /// `int eta^2`
    pub square: f64,
    /// `P_n eta`
    pub mean: f64,
    /// `P_n eta^2`
    pub mean_sq: f64,
}

impl Primitives {
    pub fn compute(eta: &DensityEstimate, sample: &Sample) -> Result<Self> {
        Self::with_square(eta, sample, eta.integral_of_square()?)
    }

    /// Reuse a known `int eta^2` (e.g. when `eta` is held fixed across resamples).
    pub fn with_square(eta: &DensityEstimate, sample: &Sample, square: f64) -> Result<Self> {
        let v = eta.eval_many(sample.points());
        let n = v.len() as f64;
        let p = Primitives {
            square,
            mean: v.iter().sum::<f64>() / n,
            mean_sq: v.iter().map(|x| x * x).sum::<f64>() / n,
        };
        if p.square.is_finite() && p.mean.is_finite() && p.mean_sq.is_finite() {
            Ok(p)
        } else {
            Err(Error::Numeric {
                context: "density primitives".into(),
                achieved: f64::NAN,
            })
        }
    }

    pub fn psi(&self, c: Construction) -> f64 {
        match c {
            Construction::OneStep => 2.0 * self.mean - self.square,
            Construction::PlugIn => self.square,
            Construction::EmpiricalMeanPlugIn => self.mean,
        }
    }

    /// `sqrt(P_n (2 eta - 2 psi)^2)` at the construction's own `psi`.
    pub fn sigma(&self, c: Construction) -> f64 {
        let psi = self.psi(c);
        (4.0 * (self.mean_sq - 2.0 * psi * self.mean + psi * psi)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub psi_hat: f64,
    pub sigma_hat: f64,
    pub center_at_sampling_dist: f64,
    pub if_values: Vec<f64>,
}

impl EstimatorReport {
    pub fn n(&self) -> usize {
        self.if_values.len()
    }
}

pub fn estimate(c: Construction, eta: &DensityEstimate, sample: &Sample) -> Result<f64> {
    Ok(match c {
        Construction::OneStep => 2.0 * eta.mean_under_empirical(sample) - eta.integral_of_square()?,
        Construction::PlugIn => eta.integral_of_square()?,
        Construction::EmpiricalMeanPlugIn => eta.mean_under_empirical(sample),
    })
}

pub fn influence_values(eta: &DensityEstimate, psi_hat: f64, sample: &Sample) -> Vec<f64> {
    eta.eval_many(sample.points())
        .into_iter()
        .map(|v| 2.0 * v - 2.0 * psi_hat)
        .collect()
}

/// Root mean square (uncentered). `NaN` for an empty slice.
pub fn sigma_if(if_values: &[f64]) -> f64 {
    (if_values.iter().map(|v| v * v).sum::<f64>() / if_values.len() as f64).sqrt()
}

/// The construction evaluated at `(eta, P_hat)`, where `P_hat` is the empirical
/// distribution when `scheme_density` is `None` and that density otherwise.
pub fn center_at(
    c: Construction,
    eta: &DensityEstimate,
    scheme_density: Option<&DensityEstimate>,
    sample: &Sample,
) -> Result<f64> {
    match scheme_density {
        None => estimate(c, eta, sample),
        Some(q) => Ok(match c {
            Construction::OneStep => 2.0 * eta.cross_inner_product(q)? - eta.integral_of_square()?,
            Construction::PlugIn => eta.integral_of_square()?,
            Construction::EmpiricalMeanPlugIn => eta.cross_inner_product(q)?,
        }),
    }
}

pub fn report(
    c: Construction,
    eta: &DensityEstimate,
    scheme_density: Option<&DensityEstimate>,
    sample: &Sample,
) -> Result<EstimatorReport> {
    let psi_hat = estimate(c, eta, sample)?;
    let if_values = influence_values(eta, psi_hat, sample);
    Ok(EstimatorReport {
        psi_hat,
        sigma_hat: sigma_if(&if_values),
        center_at_sampling_dist: center_at(c, eta, scheme_density, sample)?,
        if_values,
    })
}
