//! G-computed conditional mean `psi = E[mu(Z) | A = 1]` with
//! `mu(z) = E[Y | A = 0, Z = z]`, from observations `(Y, A, Z)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gausssum::GaussSum;
use crate::prng::RngStream;
use crate::quad::{integrate_pieces, integrate_real_line, QuadSettings};

pub const DEFAULT_TRUNCATION: (f64, f64) = (0.01, 0.99);
const IRLS_MAX_ITER: usize = 25;
const IRLS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CausalSample {
    y: Vec<f64>,
    a: Vec<u8>,
    z: Vec<f64>,
}

impl CausalSample {
    pub fn new(y: Vec<f64>, a: Vec<u8>, z: Vec<f64>) -> Result<Self> {
        if y.len() != a.len() || y.len() != z.len() {
            return Err(Error::Domain(format!(
                "column lengths differ: y={}, a={}, z={}",
                y.len(),
                a.len(),
                z.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::InsufficientData { needed: 2, got: 0 });
        }
        if a.iter().any(|&v| v > 1) {
            return Err(Error::Domain("treatment must be 0 or 1".into()));
        }
        if y.iter().chain(&z).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite value in y or z".into()));
        }
        let treated = a.iter().filter(|&&v| v == 1).count();
        if treated == 0 {
            return Err(Error::Degenerate("no treated rows (a = 1)".into()));
        }
        if treated == a.len() {
            return Err(Error::Degenerate("no control rows (a = 0)".into()));
        }
        Ok(CausalSample { y, a, z })
    }

    /// CSV with header `y,a,z`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["y", "a", "z"] {
            return Err(Error::Parse(format!("expected header 'y,a,z', found '{header}'")));
        }
        let (mut y, mut a, mut z) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", i + 2)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: '{s}': {e}", i + 2)))
            };
            y.push(num(f[0])?);
            a.push(match f[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Parse(format!("line {}: a must be 0 or 1, got '{other}'", i + 2))),
            });
            z.push(num(f[2])?);
        }
        if y.is_empty() {
            return Err(Error::Parse("no data rows".into()));
        }
        CausalSample::new(y, a, z)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,a,z\n");
        for i in 0..self.len() {
            s.push_str(&format!("{},{},{}\n", self.y[i], self.a[i], self.z[i]));
        }
        s
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Fraction of treated rows, `pi_bar`.
    pub fn treated_fraction(&self) -> f64 {
        self.a.iter().filter(|&&v| v == 1).count() as f64 / self.len() as f64
    }

    /// Rows at the given indices; may violate the two-arm invariant.
    pub fn resample(&self, idx: &[usize]) -> CausalSample {
        CausalSample {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            a: idx.iter().map(|&i| self.a[i]).collect(),
            z: idx.iter().map(|&i| self.z[i]).collect(),
        }
    }

    fn controls(&self) -> (Vec<f64>, Vec<f64>) {
        self.a
            .iter()
            .zip(self.z.iter().zip(&self.y))
            .filter(|(&a, _)| a == 0)
            .map(|(_, (&z, &y))| (z, y))
            .unzip()
    }
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMethod {
    Linear,
    /// Nadaraya–Watson with a Gaussian kernel.
    Kernel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GMethod {
    Logistic,
    Kernel(f64),
}

fn parse_kernel_method(s: &str) -> Result<Option<f64>> {
    match s.strip_prefix("kernel:") {
        Some(h) => {
            let h = h
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))?;
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Domain(format!("kernel bandwidth must be positive, got {h}")));
            }
            Ok(Some(h))
        }
        None => Ok(None),
    }
}

impl FromStr for MuMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(MuMethod::Linear);
        }
        parse_kernel_method(s)?
            .map(MuMethod::Kernel)
            .ok_or_else(|| Error::Parse(format!("unknown regression method '{s}' (linear | kernel:<h>)")))
    }
}

impl FromStr for GMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "logistic" {
            return Ok(GMethod::Logistic);
        }
        parse_kernel_method(s)?
            .map(GMethod::Kernel)
            .ok_or_else(|| Error::Parse(format!("unknown propensity method '{s}' (logistic | kernel:<h>)")))
    }
}

impl fmt::Display for MuMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuMethod::Linear => f.pad("linear"),
            MuMethod::Kernel(h) => write!(f, "kernel:{h}"),
        }
    }
}

impl fmt::Display for GMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GMethod::Logistic => f.pad("logistic"),
            GMethod::Kernel(h) => write!(f, "kernel:{h}"),
        }
    }
}

/// A fitted function of the covariate.
#[derive(Clone)]
pub enum Fitted {
    Linear { intercept: f64, slope: f64 },
    Logistic { intercept: f64, slope: f64 },
    /// `sum w_j y_j K((z - z_j)/h) / sum w_j K((z - z_j)/h)`.
    NadarayaWatson { num: GaussSum, den: GaussSum },
    Known(RealFn),
}

impl fmt::Debug for Fitted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fitted::Linear { intercept, slope } => write!(f, "Linear({intercept}, {slope})"),
            Fitted::Logistic { intercept, slope } => write!(f, "Logistic({intercept}, {slope})"),
            Fitted::NadarayaWatson { num, .. } => write!(f, "NadarayaWatson({} points)", num.n_sources()),
            Fitted::Known(_) => f.write_str("Known"),
        }
    }
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Fitted {
    pub fn eval_many(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Fitted::Linear { intercept, slope } => z.iter().map(|v| intercept + slope * v).collect(),
            Fitted::Logistic { intercept, slope } => z.iter().map(|v| expit(intercept + slope * v)).collect(),
            Fitted::NadarayaWatson { num, den } => num
                .eval(z)
                .into_iter()
                .zip(den.eval(z))
                .map(|(a, b)| if b > 0.0 { a / b } else { f64::NAN })
                .collect(),
            Fitted::Known(f) => z.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_many(&[z])[0]
    }

    fn nadaraya_watson(z: &[f64], y: &[f64], h: f64) -> Result<Fitted> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("kernel bandwidth must be positive, got {h}")));
        }
        Ok(Fitted::NadarayaWatson {
            num: GaussSum::new(z, Some(y), h, 0),
            den: GaussSum::new(z, None, h, 0),
        })
    }
}

fn least_squares(z: &[f64], y: &[f64]) -> Result<Fitted> {
    let n = z.len() as f64;
    let zm = z.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|v| (v - zm).powi(2)).sum();
    let szy: f64 = z.iter().zip(y).map(|(a, b)| (a - zm) * (b - ym)).sum();
    if !(szz > 1e-12 * n * (1.0 + zm * zm)) {
        return Err(Error::Fit("singular design: covariate is constant among controls".into()));
    }
    let slope = szy / szz;
    Ok(Fitted::Linear {
        intercept: ym - slope * zm,
        slope,
    })
}

/// Logistic regression of `a` on `(1, z)` by iteratively reweighted least squares.
fn logistic(z: &[f64], a: &[u8]) -> Result<Fitted> {
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(zmax > zmin) {
        return Err(Error::Fit("singular design: covariate is constant".into()));
    }
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    for _ in 0..IRLS_MAX_ITER {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&zi, &ai) in z.iter().zip(a) {
            let p = expit(b0 + b1 * zi);
            let w = p * (1.0 - p);
            let r = f64::from(ai) - p;
            g0 += r;
            g1 += r * zi;
            h00 += w;
            h01 += w * zi;
            h11 += w * zi * zi;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 1e-14 * h00 * h11) {
            // fitted probabilities have saturated (separation); keep the current coefficients
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        b0 += d0;
        b1 += d1;
        if !(b0.is_finite() && b1.is_finite()) {
            return Err(Error::Fit("logistic regression diverged".into()));
        }
        if d0.abs().max(d1.abs()) < IRLS_TOL * (1.0 + b0.abs().max(b1.abs())) {
            break;
        }
    }
    Ok(Fitted::Logistic {
        intercept: b0,
        slope: b1,
    })
}

/// `(mu, g, Q_n)` with `g` truncated into `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct GcompNuisance {
    pub mu: Fitted,
    pub g: Fitted,
    pub truncation: (f64, f64),
    /// Mean of the truncated propensity over the fitting sample.
    pub pi: f64,
}

impl GcompNuisance {
    /// Nuisance from known functions; `pi` is averaged over `data`.
    pub fn from_functions(data: &CausalSample, mu: RealFn, g: RealFn, truncation: (f64, f64)) -> Result<Self> {
        Self::assemble(data, Fitted::Known(mu), Fitted::Known(g), truncation)
    }

    fn assemble(data: &CausalSample, mu: Fitted, g: Fitted, truncation: (f64, f64)) -> Result<Self> {
        let (lo, hi) = truncation;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Domain(format!("truncation bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")));
        }
        let mut nuisance = GcompNuisance {
            mu,
            g,
            truncation,
            pi: 0.0,
        };
        let gv = nuisance.g_values(data.z());
        nuisance.pi = gv.iter().sum::<f64>() / gv.len() as f64;
        Ok(nuisance)
    }

    pub fn g_values(&self, z: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.truncation;
        self.g
            .eval_many(z)
            .into_iter()
            .map(|v| if v.is_nan() { v } else { v.clamp(lo, hi) })
            .collect()
    }

    pub fn mu_values(&self, z: &[f64]) -> Vec<f64> {
        self.mu.eval_many(z)
    }
}

pub fn fit_nuisance(data: &CausalSample, mu_method: MuMethod, g_method: GMethod, trunc: (f64, f64)) -> Result<GcompNuisance> {
    let (zc, yc) = data.controls();
    if zc.is_empty() || zc.len() == data.len() {
        return Err(Error::Degenerate("both treatment arms must be nonempty".into()));
    }
    let mu = match mu_method {
        MuMethod::Linear => least_squares(&zc, &yc)?,
        MuMethod::Kernel(h) => Fitted::nadaraya_watson(&zc, &yc, h)?,
    };
    let g = match g_method {
        GMethod::Logistic => logistic(data.z(), data.a())?,
        GMethod::Kernel(h) => {
            let a: Vec<f64> = data.a().iter().map(|&v| f64::from(v)).collect();
            Fitted::nadaraya_watson(data.z(), &a, h)?
        }
    };
    GcompNuisance::assemble(data, mu, g, trunc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GcompConstruction {
    OneStep,
    EstimatingEquation,
}

impl GcompConstruction {
    pub const ALL: [GcompConstruction; 2] = [GcompConstruction::OneStep, GcompConstruction::EstimatingEquation];

    pub fn id(self) -> &'static str {
        match self {
            GcompConstruction::OneStep => "onestep",
            GcompConstruction::EstimatingEquation => "ee",
        }
    }
}

impl fmt::Display for GcompConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for GcompConstruction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onestep" => Ok(GcompConstruction::OneStep),
            "ee" => Ok(GcompConstruction::EstimatingEquation),
            other => Err(Error::Parse(format!("unknown gcomp construction '{other}' (onestep | ee)"))),
        }
    }
}

struct Rows {
    mu: Vec<f64>,
    g: Vec<f64>,
    pi_bar: f64,
}

fn rows(data: &CausalSample, eta: &GcompNuisance) -> Result<Rows> {
    let pi_bar = data.treated_fraction();
    if !(pi_bar > 0.0) {
        return Err(Error::Degenerate("no treated rows".into()));
    }
    let r = Rows {
        mu: eta.mu_values(data.z()),
        g: eta.g_values(data.z()),
        pi_bar,
    };
    if r.mu.iter().chain(&r.g).any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            context: "nuisance evaluation".into(),
            achieved: f64::NAN,
        });
    }
    Ok(r)
}

/// Weighted-residual sum with propensity normalizer `pi` and outcome-term weight `w1`.
fn weighted_mean(data: &CausalSample, r: &Rows, pi: f64, w1: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..data.len() {
        if data.a[i] == 0 {
            s += r.g[i] / (pi * (1.0 - r.g[i])) * (data.y[i] - r.mu[i]);
        } else {
            s += w1 * r.mu[i] / pi;
        }
    }
    s / data.len() as f64
}

pub fn estimate_ee(data: &CausalSample, eta: &GcompNuisance) -> Result<f64> {
    let r = rows(data, eta)?;
    Ok(weighted_mean(data, &r, r.pi_bar, 1.0))
}

pub fn estimate_onestep(data: &CausalSample, eta: &GcompNuisance) -> Result<f64> {
    let r = rows(data, eta)?;
    if !(eta.pi > 0.0) {
        return Err(Error::Degenerate("mean propensity is zero".into()));
    }
    Ok(weighted_mean(data, &r, eta.pi, 2.0 - r.pi_bar / eta.pi))
}

pub fn estimate(c: GcompConstruction, data: &CausalSample, eta: &GcompNuisance) -> Result<f64> {
    match c {
        GcompConstruction::OneStep => estimate_onestep(data, eta),
        GcompConstruction::EstimatingEquation => estimate_ee(data, eta),
    }
}

/// Efficient influence function at `psi_hat`, normalized by `pi`.
pub fn influence_values_with_pi(data: &CausalSample, eta: &GcompNuisance, psi_hat: f64, pi: f64) -> Vec<f64> {
    let mu = eta.mu_values(data.z());
    let g = eta.g_values(data.z());
    (0..data.len())
        .map(|i| {
            if data.a[i] == 0 {
                g[i] / (pi * (1.0 - g[i])) * (data.y[i] - mu[i])
            } else {
                (mu[i] - psi_hat) / pi
            }
        })
        .collect()
}

pub fn influence_values_gcomp(data: &CausalSample, eta: &GcompNuisance, psi_hat: f64) -> Vec<f64> {
    influence_values_with_pi(data, eta, psi_hat, eta.pi)
}

/// Synthetic design: `Z ~ N(0,1)`, `A | Z ~ Bernoulli(g0(Z))`, `Y = Z + N(0, noise_sd^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcompDgp {
    pub propensity: Propensity,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propensity {
    Constant(f64),
    /// `expit(z * slope)`
    Expit(f64),
}

impl Propensity {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Propensity::Constant(p) => p,
            Propensity::Expit(s) => expit(s * z),
        }
    }
}

impl fmt::Display for Propensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Propensity::Constant(p) => write!(f, "const:{p}"),
            Propensity::Expit(s) => write!(f, "expit:{s}"),
        }
    }
}

impl FromStr for Propensity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, v) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("propensity '{s}': expected const:<p> or expit:<slope>")))?;
        let v = v.parse::<f64>().map_err(|e| Error::Parse(format!("propensity '{s}': {e}")))?;
        match kind {
            "const" if v > 0.0 && v < 1.0 => Ok(Propensity::Constant(v)),
            "const" => Err(Error::Domain(format!("constant propensity must lie in (0,1), got {v}"))),
            "expit" => Ok(Propensity::Expit(v)),
            _ => Err(Error::Parse(format!("unknown propensity kind '{kind}'"))),
        }
    }
}

impl Default for GcompDgp {
    fn default() -> Self {
        GcompDgp {
            propensity: Propensity::Expit(0.5),
            noise_sd: 0.5,
        }
    }
}

impl GcompDgp {
    pub fn mu0(z: f64) -> f64 {
        z
    }

    pub fn g0(&self, z: f64) -> f64 {
        self.propensity.eval(z)
    }

    pub fn sample(&self, n: usize, s: &RngStream) -> Result<CausalSample> {
        let z = s.derive(0).standard_normal(n);
        let u = s.derive(1).uniform01(n);
        let e = s.derive(2).standard_normal(n);
        let a: Vec<u8> = z.iter().zip(&u).map(|(&zi, &ui)| u8::from(ui < self.g0(zi))).collect();
        let y = z.iter().zip(&e).map(|(zi, ei)| Self::mu0(*zi) + self.noise_sd * ei).collect();
        CausalSample::new(y, a, z)
    }

    /// `E[Z g0(Z)] / E[g0(Z)]` over `Z ~ N(0,1)`, on the whole real line.
    pub fn true_value(&self) -> Result<f64> {
        let q = QuadSettings::with_rel_tol(1e-12);
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let num = integrate_real_line(|z| Self::mu0(z) * self.g0(z) * phi(z), &q)?.value;
        let den = integrate_real_line(|z| self.g0(z) * phi(z), &q)?.value;
        Ok(num / den)
    }

    /// Same functional on a truncated interval with a fixed partition.
    pub fn true_value_truncated(&self) -> Result<f64> {
        let q = QuadSettings::with_rel_tol(1e-12);
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let num = integrate_pieces(|z| Self::mu0(z) * self.g0(z) * phi(z), -40.0, 40.0, 80, &q)?.value;
        let den = integrate_pieces(|z| self.g0(z) * phi(z), -40.0, 40.0, 80, &q)?.value;
        Ok(num / den)
    }

    pub fn true_nuisance(&self, data: &CausalSample, trunc: (f64, f64)) -> Result<GcompNuisance> {
        let dgp = *self;
        GcompNuisance::from_functions(data, Arc::new(Self::mu0), Arc::new(move |z| dgp.g0(z)), trunc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> CausalSample {
        CausalSample::new(
            vec![1.0, 2.0, 0.5, 3.0, -1.0, 0.2],
            vec![0, 1, 0, 1, 0, 1],
            vec![-1.0, 0.3, 0.8, 1.5, -0.2, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(
            CausalSample::new(vec![1.0, 2.0], vec![1, 1], vec![0.0, 1.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            CausalSample::new(vec![1.0], vec![0, 1], vec![0.0]),
            Err(Error::Domain(_))
        ));
        assert!(CausalSample::parse_csv("y,a,z\n1,2,0\n").is_err());
        assert!(CausalSample::parse_csv("y,a,z\n1,0.0,0\n0,1,1\n").is_err());
        let s = CausalSample::parse_csv("y,a,z\n1,0,0.5\n2,1,-0.5\n").unwrap();
        assert_eq!(s.a(), &[0, 1]);
        assert_eq!(CausalSample::parse_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    fn constant_controls_give_constant_mu() {
        let s = CausalSample::new(vec![5.0, 5.0, 9.0, 5.0], vec![0, 0, 1, 0], vec![0.1, 1.0, 0.0, -2.0]).unwrap();
        let eta = fit_nuisance(&s, MuMethod::Linear, GMethod::Logistic, DEFAULT_TRUNCATION).unwrap();
        for z in [-3.0, 0.0, 4.0] {
            assert!((eta.mu.eval(z) - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_recovers_constant_propensity() {
        let s = RngStream::new(31);
        let n = 10_000;
        let z = s.derive(0).standard_normal(n);
        let a: Vec<u8> = s.derive(1).uniform01(n).iter().map(|&u| u8::from(u < 0.5)).collect();
        let y = z.clone();
        let data = CausalSample::new(y, a, z).unwrap();
        let eta = fit_nuisance(&data, MuMethod::Linear, GMethod::Logistic, DEFAULT_TRUNCATION).unwrap();
        assert!((eta.pi - 0.5).abs() < 0.02);
    }

    #[test]
    fn logistic_matches_newton_oracle() {
        // score equations sum (a - p) = 0 and sum (a - p) z = 0 at the optimum
        let data = GcompDgp::default().sample(2000, &RngStream::new(32)).unwrap();
        let eta = fit_nuisance(&data, MuMethod::Linear, GMethod::Logistic, (1e-9, 1.0 - 1e-9)).unwrap();
        let p = eta.g.eval_many(data.z());
        let (mut s0, mut s1) = (0.0, 0.0);
        for ((&a, &pi), &z) in data.a().iter().zip(&p).zip(data.z()) {
            let r = f64::from(a) - pi;
            s0 += r;
            s1 += r * z;
        }
        assert!(s0.abs() < 1e-8 && s1.abs() < 1e-8, "{s0} {s1}");
        if let Fitted::Logistic { slope, .. } = eta.g {
            assert!((slope - 0.5).abs() < 0.15);
        } else {
            panic!()
        }
    }

    #[test]
    fn truncation_clamps_extreme_fits() {
        // perfectly separated: a = 1 exactly when z > 0
        let z: Vec<f64> = (0..40).map(|i| -2.0 + 0.1 * i as f64 + 0.05).collect();
        let a: Vec<u8> = z.iter().map(|&v| u8::from(v > 0.0)).collect();
        let data = CausalSample::new(z.clone(), a, z).unwrap();
        let eta = fit_nuisance(&data, MuMethod::Linear, GMethod::Logistic, (0.05, 0.95)).unwrap();
        let g = eta.g_values(data.z());
        assert_eq!(g.iter().copied().fold(f64::MIN, f64::max), 0.95);
        assert_eq!(g.iter().copied().fold(f64::MAX, f64::min), 0.05);
    }

    #[test]
    fn singular_and_bad_methods() {
        let data = CausalSample::new(vec![1.0, 2.0, 3.0], vec![0, 0, 1], vec![1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            fit_nuisance(&data, MuMethod::Linear, GMethod::Logistic, DEFAULT_TRUNCATION),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_nuisance(&toy(), MuMethod::Kernel(0.0), GMethod::Logistic, DEFAULT_TRUNCATION),
            Err(Error::Domain(_))
        ));
        assert!(fit_nuisance(&toy(), MuMethod::Linear, GMethod::Logistic, (0.5, 0.4)).is_err());
        assert!("kernel:-1".parse::<MuMethod>().is_err());
        assert_eq!("kernel:0.3".parse::<GMethod>().unwrap(), GMethod::Kernel(0.3));
    }

    #[test]
    fn nadaraya_watson_matches_direct() {
        let data = GcompDgp::default().sample(300, &RngStream::new(33)).unwrap();
        let eta = fit_nuisance(&data, MuMethod::Kernel(0.3), GMethod::Kernel(0.4), DEFAULT_TRUNCATION).unwrap();
        let (zc, yc) = data.controls();
        for t in [-1.0, 0.0, 0.7] {
            let w: Vec<f64> = zc.iter().map(|z| (-0.5 * ((t - z) / 0.3f64).powi(2)).exp()).collect();
            let want = w.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
            assert!((eta.mu.eval(t) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_nuisances_reduce_to_arm_mean() {
        let data = CausalSample::new(vec![4.0, 7.0, 4.0, 1.0], vec![0, 1, 0, 1], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let eta = GcompNuisance::from_functions(&data, Arc::new(|_| 4.0), Arc::new(|_| 0.5), DEFAULT_TRUNCATION).unwrap();
        assert!((estimate_ee(&data, &eta).unwrap() - 4.0).abs() < 1e-14);
        assert!((estimate_onestep(&data, &eta).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn residual_free_data_gives_treated_mean_of_mu() {
        let z = vec![-1.0, 0.5, 1.0, 2.0, 0.0];
        let y: Vec<f64> = z.iter().map(|v| 2.0 * v + 1.0).collect();
        let data = CausalSample::new(y, vec![0, 1, 0, 1, 1], z.clone()).unwrap();
        let eta = GcompNuisance::from_functions(&data, Arc::new(|v| 2.0 * v + 1.0), Arc::new(expit), DEFAULT_TRUNCATION)
            .unwrap();
        let want = (2.0 + 5.0 + 1.0) / 3.0;
        assert!((estimate_ee(&data, &eta).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn influence_hand_values() {
        let data = CausalSample::new(vec![1.0, 0.0], vec![0, 1], vec![0.0, 0.0]).unwrap();
        let eta = GcompNuisance::from_functions(&data, Arc::new(|_| 0.0), Arc::new(|_| 0.5), DEFAULT_TRUNCATION).unwrap();
        assert_eq!(eta.pi, 0.5);
        let phi = influence_values_gcomp(&data, &eta, 0.0);
        assert_eq!(phi, vec![2.0, 0.0]);
    }

    #[test]
    fn ee_solves_its_estimating_equation() {
        let data = GcompDgp::default().sample(500, &RngStream::new(34)).unwrap();
        let eta = fit_nuisance(&data, MuMethod::Linear, GMethod::Logistic, DEFAULT_TRUNCATION).unwrap();
        let psi = estimate_ee(&data, &eta).unwrap();
        let phi = influence_values_with_pi(&data, &eta, psi, data.treated_fraction());
        assert!((phi.iter().sum::<f64>() / phi.len() as f64).abs() < 1e-10);
    }

    #[test]
    fn onestep_equals_ee_when_propensity_mean_matches() {
        let data = GcompDgp::default().sample(400, &RngStream::new(35)).unwrap();
        let pbar = data.treated_fraction();
        let eta = GcompNuisance::from_functions(&data, Arc::new(|z| 0.9 * z), Arc::new(move |_| pbar), DEFAULT_TRUNCATION)
            .unwrap();
        assert!((eta.pi - pbar).abs() < 1e-14);
        let a = estimate_ee(&data, &eta).unwrap();
        let b = estimate_onestep(&data, &eta).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn true_values_agree_across_quadratures() {
        let dgp = GcompDgp::default();
        let a = dgp.true_value().unwrap();
        let b = dgp.true_value_truncated().unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
        assert!(a > 0.0);
        let flat = GcompDgp {
            propensity: Propensity::Constant(0.5),
            noise_sd: 0.5,
        };
        assert!(flat.true_value().unwrap().abs() < 1e-12);
    }

    #[test]
    fn true_nuisances_at_large_n() {
        let dgp = GcompDgp::default();
        let psi0 = dgp.true_value().unwrap();
        let data = dgp.sample(100_000, &RngStream::new(36)).unwrap();
        let eta = dgp.true_nuisance(&data, DEFAULT_TRUNCATION).unwrap();
        assert!((estimate_ee(&data, &eta).unwrap() - psi0).abs() < 0.01);
        assert!((estimate_onestep(&data, &eta).unwrap() - psi0).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn influence_values_are_bounded(seed in 0u64..500, lo in 0.01f64..0.2, hi in 0.8f64..0.99) {
            let dgp = GcompDgp { propensity: Propensity::Expit(2.0), noise_sd: 0.5 };
            let raw = dgp.sample(80, &RngStream::new(seed)).unwrap();
            let m = 3.0;
            let clip = move |v: f64| v.clamp(-m, m);
            let y: Vec<f64> = raw.y().iter().map(|&v| clip(v)).collect();
            let data = CausalSample::new(y, raw.a().to_vec(), raw.z().to_vec()).unwrap();
            let eta = GcompNuisance::from_functions(&data, Arc::new(clip), Arc::new(move |z| dgp.g0(z)), (lo, hi)).unwrap();
            let pbar = data.treated_fraction();
            let psi = estimate_ee(&data, &eta).unwrap().clamp(-m, m);
            // |y - mu| can reach 2m on a control row
            let bound = 2.0 * m * hi / (pbar * (1.0 - hi)) + 2.0 * m / pbar;
            for v in influence_values_with_pi(&data, &eta, psi, pbar) {
                prop_assert!(v.abs() <= bound + 1e-12);
            }
        }
    }
}
