//! Kernel density estimates: fitting, evaluation, exact double-sum integrals,
//! bandwidth selection and targeting toward the average density value.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gausssum::GaussSum;
use crate::kernels::{normal_density, Kernel};
use crate::quad::{adaptive_grid, integrate_batch, QuadSettings};

/// Relative tolerance used for every density integral computed by quadrature.
pub const DENSITY_QUAD_TOL: f64 = 1e-10;
pub const TMLE_TOL: f64 = 1e-8;
pub const TMLE_MAX_ITER: usize = 20;
/// Half-width of the integration margin around the data, in bandwidths.
pub const TAIL_BANDWIDTHS: f64 = 10.0;

/// A one-dimensional i.i.d. sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Arc<[f64]>,
}

impl Sample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(bad) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite observation {bad}")));
        }
        Ok(Sample {
            points: points.into(),
        })
    }

    /// One observation per line; blank lines and lines starting with `#` are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let x: f64 = t
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: '{t}': {e}", i + 1)))?;
            points.push(x);
        }
        if points.is_empty() {
            return Err(Error::Parse("no observations found".into()));
        }
        Sample::new(points)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.points.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation with the `n - 1` divisor.
    pub fn sd(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.points.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    /// Linear-interpolation quantile (Hyndman–Fan type 7).
    pub fn quantile(&self, p: f64) -> f64 {
        let mut v = self.points.to_vec();
        v.sort_by(f64::total_cmp);
        let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }

    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Sample> {
        Sample::new(self.points.iter().map(|&x| f(x)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthRule {
    Fixed(f64),
    Silverman,
    SheatherJones,
    Undersmoothed { base: Box<BandwidthRule>, exponent: f64 },
}

impl BandwidthRule {
    pub fn undersmoothed(base: BandwidthRule, exponent: f64) -> Self {
        BandwidthRule::Undersmoothed {
            base: Box::new(base),
            exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BandwidthRule::Fixed(h) if !(*h > 0.0 && h.is_finite()) => {
                Err(Error::Domain(format!("fixed bandwidth must be positive, got {h}")))
            }
            BandwidthRule::Undersmoothed { base, exponent } => {
                if !(*exponent > 0.0) {
                    return Err(Error::Domain(format!("undersmoothing exponent must be positive, got {exponent}")));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    fn is_data_driven(&self) -> bool {
        match self {
            BandwidthRule::Fixed(_) => false,
            BandwidthRule::Silverman | BandwidthRule::SheatherJones => true,
            BandwidthRule::Undersmoothed { base, .. } => base.is_data_driven(),
        }
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::Fixed(h) => write!(f, "fixed:{h}"),
            BandwidthRule::Silverman => f.pad("silverman"),
            BandwidthRule::SheatherJones => f.pad("sj"),
            BandwidthRule::Undersmoothed { base, exponent } => write!(f, "us:{base}:{exponent}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    /// `silverman`, `sj`, `fixed:<h>`, `us:<base rule>:<exponent>`.
    fn from_str(s: &str) -> Result<Self> {
        let rule = match s {
            "silverman" => BandwidthRule::Silverman,
            "sj" => BandwidthRule::SheatherJones,
            _ if s.starts_with("fixed:") => {
                let h = s["fixed:".len()..]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bandwidth '{s}': {e}")))?;
                BandwidthRule::Fixed(h)
            }
            _ if s.starts_with("us:") => {
                let rest = &s["us:".len()..];
                let (base, exp) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| Error::Parse(format!("bandwidth '{s}': expected us:<rule>:<exponent>")))?;
                let exponent = exp
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bandwidth '{s}': {e}")))?;
                BandwidthRule::undersmoothed(base.parse()?, exponent)
            }
            _ => return Err(Error::Parse(format!("unknown bandwidth rule '{s}'"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// A selected bandwidth plus a note when the requested rule had to fall back.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    pub fallback: Option<String>,
}

pub fn silverman(sample: &Sample) -> Result<f64> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let sd = sample.sd();
    let mut spread = sd.min(sample.iqr() / 1.34);
    if !(spread > 0.0) {
        spread = if sd > 0.0 { sd } else { 1.0 };
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Sum over all ordered pairs (diagonal included) of `phi^(r)((x_i - x_j) / g)` for even `r`.
fn gaussian_derivative_pair_sum(points: &[f64], g: f64, r: usize) -> f64 {
    let sums = GaussSum::new(points, None, g, r);
    // phi^(r)(x) = (-1)^r 2^(-r/2) H_r(x / sqrt 2) / sqrt(2 pi)
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * 2f64.powf(-(r as f64) / 2.0) * crate::kernels::INV_SQRT_2PI * sums.total(points, None)
}

/// Solve-the-equation plug-in bandwidth. `None` if no root is bracketed.
fn sheather_jones(sample: &Sample) -> Result<Option<f64>> {
    let n = sample.len();
    let hs = silverman(sample)?;
    let x = sample.points();
    let nf = n as f64;
    let mut scale = sample.sd().min(sample.iqr() / 1.349);
    if !(scale > 0.0) {
        scale = sample.sd();
    }
    if !(scale > 0.0) {
        return Ok(None);
    }
    let denom = nf * (nf - 1.0);
    let sdh = |g: f64| gaussian_derivative_pair_sum(x, g, 4) / (denom * g.powi(5));
    let tdh = |g: f64| gaussian_derivative_pair_sum(x, g, 6) / (denom * g.powi(7));
    let a = 1.24 * scale * nf.powf(-1.0 / 7.0);
    let b = 1.23 * scale * nf.powf(-1.0 / 9.0);
    let c1 = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * nf);
    let td = -tdh(b);
    if !(td > 0.0 && td.is_finite()) {
        return Ok(None);
    }
    let alpha2 = 1.357 * (sdh(a) / td).powf(1.0 / 7.0);
    if !alpha2.is_finite() {
        return Ok(None);
    }
    let equation = |h: f64| {
        let s = sdh(alpha2 * h.powf(5.0 / 7.0));
        if s > 0.0 {
            (c1 / s).powf(0.2) - h
        } else {
            f64::NAN
        }
    };
    let (mut lo, mut hi) = (hs / 10.0, hs * 10.0);
    let (mut flo, fhi) = (equation(lo), equation(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo * fhi > 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = equation(mid);
        if !fm.is_finite() {
            return Ok(None);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

pub fn select_bandwidth(rule: &BandwidthRule, sample: &Sample) -> Result<Bandwidth> {
    rule.validate()?;
    if rule.is_data_driven() && sample.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: sample.len(),
        });
    }
    match rule {
        BandwidthRule::Fixed(h) => Ok(Bandwidth { h: *h, fallback: None }),
        BandwidthRule::Silverman => Ok(Bandwidth {
            h: silverman(sample)?,
            fallback: None,
        }),
        BandwidthRule::SheatherJones => match sheather_jones(sample)? {
            Some(h) => Ok(Bandwidth { h, fallback: None }),
            None => {
                log::warn!("Sheather-Jones root not bracketed; using Silverman's rule");
                Ok(Bandwidth {
                    h: silverman(sample)?,
                    fallback: Some("sheather-jones failed; silverman used".into()),
                })
            }
        },
        BandwidthRule::Undersmoothed { base, exponent } => {
            let b = select_bandwidth(base, sample)?;
            Ok(Bandwidth {
                h: b.h / (sample.len() as f64).powf(*exponent),
                fallback: b.fallback,
            })
        }
    }
}

/// `x -> norm/h * sum_k c_k sum_j H_k((x - x_j) / (sqrt 2 * sd))`.
#[derive(Debug, Clone)]
struct KernelSum {
    norm: f64,
    parts: Vec<(f64, GaussSum)>,
}

impl KernelSum {
    fn new(points: &[f64], form: (f64, &[(usize, f64)]), h: f64, sd: f64) -> Self {
        let (norm, terms) = form;
        KernelSum {
            norm: norm / h,
            parts: terms
                .iter()
                .map(|&(r, c)| (c, GaussSum::new(points, None, sd, r)))
                .collect(),
        }
    }

    fn eval(&self, targets: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; targets.len()];
        for (c, g) in &self.parts {
            for (o, v) in out.iter_mut().zip(g.eval(targets)) {
                *o += c * v;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.norm);
        out
    }

    fn total(&self, targets: &[f64]) -> f64 {
        self.norm * self.parts.iter().map(|(c, g)| c * g.total(targets, None)).sum::<f64>()
    }
}

/// Exponential tilt `eta(x) = eta0(x) exp(eps * (2 eta0(x) - 2 anchor_psi)) / normalizer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fluctuation {
    pub epsilon: f64,
    pub anchor_psi: f64,
    pub normalizer: f64,
}

impl Fluctuation {
    fn apply(&self, base: f64) -> f64 {
        base * (self.epsilon * (2.0 * base - 2.0 * self.anchor_psi)).exp() / self.normalizer
    }
}

/// A fitted kernel density estimate, optionally tilted by targeting.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    sample: Sample,
    kernel: Kernel,
    h: f64,
    fluctuation: Option<Fluctuation>,
    kernel_sum: OnceLock<KernelSum>,
}

impl DensityEstimate {
    pub fn fit(sample: &Sample, kernel: Kernel, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        Ok(DensityEstimate {
            sample: sample.clone(),
            kernel,
            h,
            fluctuation: None,
            kernel_sum: OnceLock::new(),
        })
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn fluctuation(&self) -> Option<&Fluctuation> {
        self.fluctuation.as_ref()
    }

    /// Untilted copy (same sample, kernel and bandwidth).
    pub fn initial(&self) -> DensityEstimate {
        DensityEstimate {
            fluctuation: None,
            ..self.clone()
        }
    }

    /// Interval outside which the estimate is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        let pad = TAIL_BANDWIDTHS * self.h;
        (self.sample.min() - pad, self.sample.max() + pad)
    }

    fn sum(&self) -> &KernelSum {
        self.kernel_sum
            .get_or_init(|| KernelSum::new(self.sample.points(), self.kernel.hermite_form(), self.h, self.h))
    }

    fn base_eval_many(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.sample.len() as f64;
        let mut v = self.sum().eval(xs);
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.sample.len() as f64;
        let base = self
            .sample
            .points()
            .iter()
            .map(|xi| self.kernel.eval((x - xi) / self.h))
            .sum::<f64>()
            / (n * self.h);
        match &self.fluctuation {
            Some(f) => f.apply(base),
            None => base,
        }
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        let mut v = self.base_eval_many(xs);
        if let Some(f) = &self.fluctuation {
            v.iter_mut().for_each(|x| *x = f.apply(*x));
        }
        v
    }

    fn initial_pieces(&self) -> usize {
        let (lo, hi) = self.support();
        (((hi - lo) / self.h).ceil() as usize).clamp(1, 4000)
    }

    /// `int g(eta(x)) dx` over the support, by adaptive quadrature.
    pub fn integrate_transform(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let (lo, hi) = self.support();
        integrate_batch(
            |x, y| {
                for (yi, v) in y.iter_mut().zip(self.eval_many(x)) {
                    *yi = g(v);
                }
            },
            lo,
            hi,
            self.initial_pieces(),
            &QuadSettings::with_rel_tol(DENSITY_QUAD_TOL),
        )
        .map(|i| i.value)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.integrate_transform(|v| v)
    }

    /// `int eta^2`. Exact double sum of `(K*K)_h` for untilted estimates.
    pub fn integral_of_square(&self) -> Result<f64> {
        match self.fluctuation {
            None => {
                let n = self.sample.len() as f64;
                let pts = self.sample.points();
                let conv = KernelSum::new(
                    pts,
                    self.kernel.convolution_hermite_form(),
                    self.h,
                    std::f64::consts::SQRT_2 * self.h,
                );
                Ok(conv.total(pts) / (n * n))
            }
            Some(_) => self.integrate_transform(|v| v * v),
        }
    }

    /// `(1/m) sum_i eta(Y_i)` over the supplied sample.
    pub fn mean_under_empirical(&self, sample: &Sample) -> f64 {
        let m = sample.len() as f64;
        match self.fluctuation {
            None => self.sum().total(sample.points()) / (m * self.sample.len() as f64),
            Some(_) => self.eval_many(sample.points()).iter().sum::<f64>() / m,
        }
    }

    /// `int eta_a * eta_b`.
    pub fn cross_inner_product(&self, other: &DensityEstimate) -> Result<f64> {
        if self.fluctuation.is_none() && other.fluctuation.is_none() {
            let (na, nb) = (self.sample.len() as f64, other.sample.len() as f64);
            if self.kernel == Kernel::Gaussian && other.kernel == Kernel::Gaussian {
                let var = self.h * self.h + other.h * other.h;
                let sd = var.sqrt();
                let sums = GaussSum::new(other.sample.points(), None, sd, 0);
                // N(d; 0, var) = exp(-d^2 / (2 var)) / sqrt(2 pi var)
                let total = sums.total(self.sample.points(), None);
                return Ok(total * normal_density(0.0, var) / (na * nb));
            }
            if self.kernel == other.kernel && self.h == other.h {
                let conv = KernelSum::new(
                    other.sample.points(),
                    self.kernel.convolution_hermite_form(),
                    self.h,
                    std::f64::consts::SQRT_2 * self.h,
                );
                return Ok(conv.total(self.sample.points()) / (na * nb));
            }
        }
        let (a0, a1) = self.support();
        let (b0, b1) = other.support();
        let (lo, hi) = (a0.max(b0), a1.min(b1));
        if lo >= hi {
            return Ok(0.0);
        }
        let pieces = (((hi - lo) / self.h.min(other.h)).ceil() as usize).clamp(1, 4000);
        integrate_batch(
            |x, y| {
                let va = self.eval_many(x);
                let vb = other.eval_many(x);
                for ((yi, a), b) in y.iter_mut().zip(va).zip(vb) {
                    *yi = a * b;
                }
            },
            lo,
            hi,
            pieces,
            &QuadSettings::with_rel_tol(DENSITY_QUAD_TOL),
        )
        .map(|i| i.value)
    }

    /// Tilt the estimate along its efficient score until `|P_n phi| <= tol`.
    ///
    /// The normalizer and `int eta^2` along the path are computed on a fixed
    /// Gauss–Kronrod grid adapted to the initial density; `epsilon` is found
    /// by safeguarded Newton iterations on the score equation.
    pub fn tmle_target(&self, sample: &Sample, tol: f64, max_iter: usize) -> Result<DensityEstimate> {
        if self.fluctuation.is_some() {
            return Err(Error::Domain("targeting expects an untilted initial estimate".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("targeting tolerance must be positive, got {tol}")));
        }
        let (lo, hi) = self.support();
        let (_, grid) = adaptive_grid(
            |x, y| {
                for (yi, v) in y.iter_mut().zip(self.base_eval_many(x)) {
                    *yi = v + v * v;
                }
            },
            lo,
            hi,
            self.initial_pieces(),
            &QuadSettings::with_rel_tol(DENSITY_QUAD_TOL),
        )?;
        let a = self.base_eval_many(&grid.nodes);
        let b = self.base_eval_many(sample.points());
        let anchor = self.integral_of_square()?;
        let path = TiltPath {
            weights: &grid.weights,
            grid_values: &a,
            data_values: &b,
            anchor,
        };

        let mut eps = 0.0;
        let (mut score, mut slope) = path.score(eps);
        let mut iterations = 0;
        while score.abs() > tol {
            if iterations >= max_iter || !(slope.is_finite() && slope != 0.0) {
                return Err(Error::Targeting {
                    score: score.abs(),
                    iterations,
                });
            }
            iterations += 1;
            let step = -score / slope;
            let mut accepted = false;
            let mut t = 1.0;
            for _ in 0..40 {
                let trial = eps + t * step;
                let (s, d) = path.score(trial);
                if s.is_finite() && s.abs() < score.abs() {
                    eps = trial;
                    score = s;
                    slope = d;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(Error::Targeting {
                    score: score.abs(),
                    iterations,
                });
            }
        }
        let normalizer = path.normalizer(eps);
        Ok(DensityEstimate {
            fluctuation: Some(Fluctuation {
                epsilon: eps,
                anchor_psi: anchor,
                normalizer,
            }),
            ..self.clone()
        })
    }
}

struct TiltPath<'a> {
    weights: &'a [f64],
    grid_values: &'a [f64],
    data_values: &'a [f64],
    anchor: f64,
}

impl TiltPath<'_> {
    fn normalizer(&self, eps: f64) -> f64 {
        self.weights
            .iter()
            .zip(self.grid_values)
            .map(|(w, a)| w * a * (eps * 2.0 * (a - self.anchor)).exp())
            .sum()
    }

    /// `(P_n phi_eps, d/d eps)` where `phi_eps = 2 eta_eps - 2 int eta_eps^2`.
    fn score(&self, eps: f64) -> (f64, f64) {
        let (mut c, mut dc, mut q, mut dq) = (0.0, 0.0, 0.0, 0.0);
        for (w, a) in self.weights.iter().zip(self.grid_values) {
            let s = 2.0 * (a - self.anchor);
            let e = (eps * s).exp();
            c += w * a * e;
            dc += w * a * s * e;
            let e2 = e * e;
            q += w * a * a * e2;
            dq += 2.0 * w * a * a * s * e2;
        }
        let n = self.data_values.len() as f64;
        let (mut d, mut dd) = (0.0, 0.0);
        for b in self.data_values {
            let s = 2.0 * (b - self.anchor);
            let e = (eps * s).exp();
            d += b * e;
            dd += b * s * e;
        }
        d /= n;
        dd /= n;
        let p = d / c;
        let dp = dd / c - d * dc / (c * c);
        let i = q / (c * c);
        let di = dq / (c * c) - 2.0 * q * dc / (c * c * c);
        (2.0 * p - 2.0 * i, 2.0 * dp - 2.0 * di)
    }
}
