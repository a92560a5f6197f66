//! Bootstrap resampling: empirical and smooth sampling distributions, the
//! bootstrap nuisance policy, and replicate arrays for the interval methods.
//!
//! Replicate `b` draws from the stream `s.derive(b)`, and results are collected
//! by index, so output does not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::density_param::{center_at, Construction, Primitives};
use crate::error::{Error, Result};
use crate::gcomp::{self, CausalSample, GMethod, GcompConstruction, GcompNuisance, MuMethod};
use crate::kde::{select_bandwidth, Bandwidth, BandwidthRule, DensityEstimate, Sample, TMLE_MAX_ITER, TMLE_TOL};
use crate::kernels::Kernel;
use crate::prng::{purpose, RngStream};

/// Grid size for inverse-CDF sampling from a tilted density.
pub const INVERSE_CDF_POINTS: usize = 4096;
/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum SmoothSource {
    /// Sample from the nuisance density estimate itself.
    FittedNuisance,
    /// Sample from a separately fitted density.
    Independent {
        kernel: Kernel,
        rule: BandwidthRule,
        tmle: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BootstrapScheme {
    Empirical,
    SmoothFromDensity(SmoothSource),
}

impl fmt::Display for BootstrapScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BootstrapScheme::Empirical => f.pad("empirical"),
            BootstrapScheme::SmoothFromDensity(SmoothSource::FittedNuisance) => f.pad("smooth"),
            BootstrapScheme::SmoothFromDensity(SmoothSource::Independent { kernel, rule, tmle }) => {
                write!(f, "smooth-indep:{kernel}:{rule}{}", if *tmle { ":tmle" } else { "" })
            }
        }
    }
}

impl FromStr for BootstrapScheme {
    type Err = Error;

    /// `empirical`, `smooth`, or `smooth-indep:<kernel>:<bandwidth rule>[:tmle]`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(BootstrapScheme::Empirical),
            "smooth" => Ok(BootstrapScheme::SmoothFromDensity(SmoothSource::FittedNuisance)),
            _ => {
                let rest = s
                    .strip_prefix("smooth-indep:")
                    .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}' (empirical | smooth | smooth-indep:<kernel>:<rule>[:tmle])")))?;
                let (rest, tmle) = match rest.strip_suffix(":tmle") {
                    Some(r) => (r, true),
                    None => (rest, false),
                };
                let (kernel, rule) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("scheme '{s}': expected <kernel>:<rule>")))?;
                Ok(BootstrapScheme::SmoothFromDensity(SmoothSource::Independent {
                    kernel: kernel.parse()?,
                    rule: rule.parse()?,
                    tmle,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NuisancePolicy {
    /// Refit on each bootstrap sample with the original bandwidth.
    RefitFrozenTuning,
    /// Reuse the original nuisance.
    Fixed,
}

impl NuisancePolicy {
    pub fn id(self) -> &'static str {
        match self {
            NuisancePolicy::RefitFrozenTuning => "refit",
            NuisancePolicy::Fixed => "fixed",
        }
    }
}

impl fmt::Display for NuisancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for NuisancePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "refit" => Ok(NuisancePolicy::RefitFrozenTuning),
            "fixed" => Ok(NuisancePolicy::Fixed),
            other => Err(Error::Parse(format!("unknown policy '{other}' (refit | fixed)"))),
        }
    }
}

/// The density nuisance fitted to the original data.
#[derive(Debug, Clone)]
pub struct DensityNuisance {
    pub eta: DensityEstimate,
    pub bandwidth: Bandwidth,
    pub targeted: bool,
}

impl DensityNuisance {
    pub fn fit(sample: &Sample, kernel: Kernel, rule: &BandwidthRule, tmle: bool) -> Result<Self> {
        let bandwidth = select_bandwidth(rule, sample)?;
        let initial = DensityEstimate::fit(sample, kernel, bandwidth.h)?;
        let eta = if tmle {
            initial.tmle_target(sample, TMLE_TOL, TMLE_MAX_ITER)?
        } else {
            initial
        };
        Ok(DensityNuisance {
            eta,
            bandwidth,
            targeted: tmle,
        })
    }

    /// Same kernel and bandwidth on new data, re-targeted if the original was.
    pub fn refit(&self, sample: &Sample) -> Result<DensityEstimate> {
        let initial = DensityEstimate::fit(sample, self.eta.kernel(), self.eta.bandwidth())?;
        if self.targeted {
            initial.tmle_target(sample, TMLE_TOL, TMLE_MAX_ITER)
        } else {
            Ok(initial)
        }
    }
}

/// Inverse-CDF sampler built from a density on an equispaced grid.
#[derive(Debug, Clone)]
pub struct GridSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridSampler {
    pub fn new(density: &DensityEstimate) -> Result<Self> {
        let (lo, hi) = density.support();
        let m = INVERSE_CDF_POINTS;
        let xs: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
        let f = density.eval_many(&xs);
        if f.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::Unsupported("density is negative or non-finite; it cannot be sampled".into()));
        }
        let mut cdf = Vec::with_capacity(m);
        cdf.push(0.0);
        for i in 1..m {
            let step = 0.5 * (f[i - 1].max(0.0) + f[i].max(0.0)) * (xs[i] - xs[i - 1]);
            cdf.push(cdf[i - 1] + step);
        }
        let total = cdf[m - 1];
        if !(total > 0.0) {
            return Err(Error::Numeric {
                context: "inverse-CDF grid".into(),
                achieved: total,
            });
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(GridSampler { xs, cdf })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[k - 1] + t.clamp(0.0, 1.0) * (self.xs[k] - self.xs[k - 1])
    }
}

/// `P_hat_n`: the distribution bootstrap samples are drawn from.
#[derive(Debug, Clone)]
pub enum SamplingDistribution {
    Empirical,
    /// `X_I + h * eps` with `eps ~ K`.
    Kde(DensityEstimate),
    /// Tilted density, sampled by inverse CDF.
    Grid(DensityEstimate, GridSampler),
}

impl SamplingDistribution {
    pub fn from_density(density: DensityEstimate) -> Result<Self> {
        let kernel = density.kernel();
        if !kernel.supports_sampling() {
            return Err(Error::Unsupported(format!(
                "kernel '{kernel}' is signed (order {}); a density built from it cannot be sampled",
                kernel.order()
            )));
        }
        if density.fluctuation().is_some() {
            let grid = GridSampler::new(&density)?;
            Ok(SamplingDistribution::Grid(density, grid))
        } else {
            Ok(SamplingDistribution::Kde(density))
        }
    }

    pub fn resolve(scheme: &BootstrapScheme, nuisance: &DensityNuisance, sample: &Sample) -> Result<Self> {
        match scheme {
            BootstrapScheme::Empirical => Ok(SamplingDistribution::Empirical),
            BootstrapScheme::SmoothFromDensity(SmoothSource::FittedNuisance) => Self::from_density(nuisance.eta.clone()),
            BootstrapScheme::SmoothFromDensity(SmoothSource::Independent { kernel, rule, tmle }) => {
                if !kernel.supports_sampling() {
                    return Err(Error::Unsupported(format!("kernel '{kernel}' is signed; it cannot be sampled")));
                }
                Self::from_density(DensityNuisance::fit(sample, *kernel, rule, *tmle)?.eta)
            }
        }
    }

    pub fn density(&self) -> Option<&DensityEstimate> {
        match self {
            SamplingDistribution::Empirical => None,
            SamplingDistribution::Kde(d) | SamplingDistribution::Grid(d, _) => Some(d),
        }
    }
}

pub fn draw_bootstrap_sample(dist: &SamplingDistribution, sample: &Sample, s: &RngStream) -> Result<Sample> {
    let n = sample.len();
    let x = sample.points();
    match dist {
        SamplingDistribution::Empirical => {
            let idx = s.derive(purpose::RESAMPLE_INDEX).categorical_uniform(n, n)?;
            Sample::new(idx.into_iter().map(|i| x[i]).collect())
        }
        SamplingDistribution::Kde(d) => {
            let centers = d.sample().points();
            let idx = s.derive(purpose::RESAMPLE_INDEX).categorical_uniform(n, centers.len())?;
            let eps = d.kernel().sample_noise(&s.derive(purpose::RESAMPLE_NOISE), n)?;
            let h = d.bandwidth();
            Sample::new(idx.into_iter().zip(eps).map(|(i, e)| centers[i] + h * e).collect())
        }
        SamplingDistribution::Grid(_, g) => {
            let u = s.derive(purpose::RESAMPLE_NOISE).uniform01(n);
            Sample::new(u.into_iter().map(|v| g.quantile(v)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSet {
    pub psi_star: Vec<f64>,
    pub sigma_star: Vec<f64>,
    /// The construction evaluated at the sampling distribution.
    pub center: f64,
    /// Replicates dropped after a numeric failure.
    pub invalid: usize,
}

impl ReplicateSet {
    pub fn b(&self) -> usize {
        self.psi_star.len()
    }

    pub fn from_primitives(prims: &[Option<Primitives>], c: Construction, center: f64) -> Result<Self> {
        let (psi_star, sigma_star) = prims.iter().flatten().map(|p| (p.psi(c), p.sigma(c))).unzip();
        let set = ReplicateSet {
            psi_star,
            sigma_star,
            center,
            invalid: prims.iter().filter(|p| p.is_none()).count(),
        };
        check_failures(set.invalid, prims.len())?;
        Ok(set)
    }
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed == total || failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    if failed > 0 {
        log::warn!("{failed} of {total} bootstrap replicates failed and were dropped");
    }
    Ok(())
}

fn check_b(b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::Domain("number of bootstrap replicates must be at least 1".into()));
    }
    u32::try_from(b).map_err(|_| Error::Domain(format!("too many bootstrap replicates: {b}")))?;
    Ok(())
}

/// Per-replicate `(int eta*^2, P*eta*, P*eta*^2)`, shared by every construction.
/// Failed replicates are `None`.
pub fn density_primitives(
    nuisance: &DensityNuisance,
    sample: &Sample,
    dist: &SamplingDistribution,
    policy: NuisancePolicy,
    b: usize,
    s: &RngStream,
) -> Result<Vec<Option<Primitives>>> {
    check_b(b)?;
    let fixed_square = match policy {
        NuisancePolicy::Fixed => Some(nuisance.eta.integral_of_square()?),
        NuisancePolicy::RefitFrozenTuning => None,
    };
    Ok((0..b)
        .into_par_iter()
        .map(|i| {
            let stream = s.derive(i as u32);
            let one = || -> Result<Primitives> {
                let star = draw_bootstrap_sample(dist, sample, &stream)?;
                match fixed_square {
                    Some(sq) => Primitives::with_square(&nuisance.eta, &star, sq),
                    None => Primitives::compute(&nuisance.refit(&star)?, &star),
                }
            };
            one().map_err(|e| log::debug!("replicate {i} failed: {e}")).ok()
        })
        .collect())
}

/// Bootstrap replicates for the average density value.
pub fn run_avg_density(
    c: Construction,
    nuisance: &DensityNuisance,
    sample: &Sample,
    scheme: &BootstrapScheme,
    policy: NuisancePolicy,
    b: usize,
    s: &RngStream,
) -> Result<ReplicateSet> {
    let dist = SamplingDistribution::resolve(scheme, nuisance, sample)?;
    let center = center_at(c, &nuisance.eta, dist.density(), sample)?;
    let prims = density_primitives(nuisance, sample, &dist, policy, b, s)?;
    ReplicateSet::from_primitives(&prims, c, center)
}

/// How the gcomp nuisance is fitted; reused unchanged on bootstrap samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcompFitSpec {
    pub mu: MuMethod,
    pub g: GMethod,
    pub truncation: (f64, f64),
}

impl Default for GcompFitSpec {
    fn default() -> Self {
        GcompFitSpec {
            mu: MuMethod::Linear,
            g: GMethod::Logistic,
            truncation: gcomp::DEFAULT_TRUNCATION,
        }
    }
}

impl GcompFitSpec {
    pub fn fit(&self, data: &CausalSample) -> Result<GcompNuisance> {
        gcomp::fit_nuisance(data, self.mu, self.g, self.truncation)
    }
}

/// `(psi_hat, sigma_hat)` with `sigma_hat^2 = P_n phi^2` at the nuisance's own `pi`.
pub fn gcomp_point(c: GcompConstruction, data: &CausalSample, eta: &GcompNuisance) -> Result<(f64, f64)> {
    let psi = gcomp::estimate(c, data, eta)?;
    let phi = gcomp::influence_values_gcomp(data, eta, psi);
    Ok((psi, crate::density_param::sigma_if(&phi)))
}

/// Empirical-bootstrap replicates for the G-computed mean.
#[allow(clippy::too_many_arguments)]
pub fn run_gcomp(
    c: GcompConstruction,
    data: &CausalSample,
    spec: &GcompFitSpec,
    eta: &GcompNuisance,
    scheme: &BootstrapScheme,
    policy: NuisancePolicy,
    b: usize,
    s: &RngStream,
) -> Result<ReplicateSet> {
    if *scheme != BootstrapScheme::Empirical {
        return Err(Error::Unsupported("only the empirical bootstrap is available for the g-computed mean".into()));
    }
    check_b(b)?;
    let center = gcomp::estimate(c, data, eta)?;
    let n = data.len();
    let reps: Vec<Option<(f64, f64)>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let stream = s.derive(i as u32);
            let one = || -> Result<(f64, f64)> {
                let idx = stream.derive(purpose::RESAMPLE_INDEX).categorical_uniform(n, n)?;
                let star = data.resample(&idx);
                let eta_star = match policy {
                    NuisancePolicy::Fixed => eta.clone(),
                    NuisancePolicy::RefitFrozenTuning => spec.fit(&star)?,
                };
                let (psi, sigma) = gcomp_point(c, &star, &eta_star)?;
                if psi.is_finite() && sigma.is_finite() {
                    Ok((psi, sigma))
                } else {
                    Err(Error::Numeric {
                        context: "gcomp replicate".into(),
                        achieved: f64::NAN,
                    })
                }
            };
            one().ok()
        })
        .collect();
    let invalid = reps.iter().filter(|r| r.is_none()).count();
    check_failures(invalid, b)?;
    let (psi_star, sigma_star) = reps.into_iter().flatten().unzip();
    Ok(ReplicateSet {
        psi_star,
        sigma_star,
        center,
        invalid,
    })
}
