//! Monte Carlo coverage study over a grid of sample sizes, estimators,
//! bandwidth rules, bootstrap schemes, nuisance policies and interval methods.
//!
//! Every Monte Carlo replicate draws its data from a stream keyed by
//! `(seed, n index, replicate)`, so all cells at one sample size see the same
//! datasets. Work items are collected by index and aggregated sequentially;
//! the CSV output is identical for any number of threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bootstrap::{
    self, BootstrapScheme, DensityNuisance, GcompFitSpec, NuisancePolicy, ReplicateSet, SamplingDistribution,
};
use crate::density_param::{self, Construction, EstimatorReport};
use crate::error::{Error, Result};
use crate::gcomp::{self, GcompConstruction, GcompDgp};
use crate::intervals::{interval, IntervalSpec, Method};
use crate::kde::{BandwidthRule, Sample};
use crate::kernels::Kernel;
use crate::prng::{purpose, RngStream};

pub const CSV_HEADER: &str = "config_id,n,construction,bandwidth,scheme,policy,method,coverage,mean_scaled_width,reps,failures";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    /// Average density value under `N(0, 1)`.
    StdNormal,
    /// G-computed mean under the synthetic design.
    Gcomp(GcompDgp),
}

pub fn true_value(dgp: &Dgp) -> Result<f64> {
    match dgp {
        Dgp::StdNormal => Ok(0.5 / std::f64::consts::PI.sqrt()),
        Dgp::Gcomp(g) => g.true_value(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Density(Construction),
    Gcomp(GcompConstruction),
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorId::Density(c) => c.fmt(f),
            EstimatorId::Gcomp(c) => c.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dgp: Dgp,
    pub n_grid: Vec<usize>,
    pub mc_reps: usize,
    pub b: usize,
    pub level: f64,
    pub kernel: Kernel,
    pub constructions: Vec<EstimatorId>,
    pub bandwidths: Vec<BandwidthRule>,
    pub tmle: Vec<bool>,
    pub schemes: Vec<BootstrapScheme>,
    pub policies: Vec<NuisancePolicy>,
    pub methods: Vec<Method>,
    pub gcomp_fit: GcompFitSpec,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dgp: Dgp::StdNormal,
            n_grid: vec![100, 500, 2000],
            mc_reps: 300,
            b: 400,
            level: 0.95,
            kernel: Kernel::Gaussian,
            constructions: Construction::ALL.into_iter().map(EstimatorId::Density).collect(),
            bandwidths: vec![BandwidthRule::Silverman],
            tmle: vec![false],
            schemes: vec![
                BootstrapScheme::Empirical,
                BootstrapScheme::SmoothFromDensity(bootstrap::SmoothSource::FittedNuisance),
            ],
            policies: vec![NuisancePolicy::RefitFrozenTuning],
            methods: Method::ALL.to_vec(),
            gcomp_fit: GcompFitSpec::default(),
            seed: 0,
        }
    }
}

/// Keys accepted in a config file and as `key=value` overrides.
pub const CONFIG_KEYS: [&str; 19] = [
    "dgp",
    "propensity",
    "noise_sd",
    "n_grid",
    "mc_reps",
    "B",
    "level",
    "kernel",
    "constructions",
    "bandwidths",
    "tmle",
    "schemes",
    "policies",
    "methods",
    "mu_method",
    "g_method",
    "trunc",
    "seed",
    "threads",
];

fn list<T: FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parse(format!("empty list '{v}'")));
    }
    Ok(items)
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| Error::Parse(format!("{key}='{v}': {e}")))
}

struct Wrapped<T>(T);

impl FromStr for Wrapped<usize> {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        number("n_grid", s).map(Wrapped)
    }
}

impl FromStr for Wrapped<bool> {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        number("tmle", s).map(Wrapped)
    }
}

impl SimConfig {
    /// Parse `key = value` lines (`#` starts a comment), then apply overrides in order.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<(Self, Option<usize>)> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(&map)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<(Self, Option<usize>)> {
        if let Some(bad) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown config key '{bad}'")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let mut cfg = SimConfig::default();
        match get("dgp").unwrap_or("stdnormal") {
            "stdnormal" => {}
            "gcomp" => {
                let mut g = GcompDgp::default();
                if let Some(p) = get("propensity") {
                    g.propensity = p.parse()?;
                }
                if let Some(s) = get("noise_sd") {
                    g.noise_sd = number("noise_sd", s)?;
                }
                cfg.dgp = Dgp::Gcomp(g);
                cfg.constructions = GcompConstruction::ALL.into_iter().map(EstimatorId::Gcomp).collect();
                cfg.schemes = vec![BootstrapScheme::Empirical];
            }
            other => return Err(Error::Parse(format!("unknown dgp '{other}' (stdnormal | gcomp)"))),
        }
        if let Some(v) = get("n_grid") {
            cfg.n_grid = list::<Wrapped<usize>>(v)?.into_iter().map(|w| w.0).collect();
        }
        if let Some(v) = get("mc_reps") {
            cfg.mc_reps = number("mc_reps", v)?;
        }
        if let Some(v) = get("B") {
            cfg.b = number("B", v)?;
        }
        if let Some(v) = get("level") {
            cfg.level = number("level", v)?;
        }
        if let Some(v) = get("kernel") {
            cfg.kernel = v.parse()?;
        }
        if let Some(v) = get("constructions") {
            cfg.constructions = match cfg.dgp {
                Dgp::StdNormal => list::<Construction>(v)?.into_iter().map(EstimatorId::Density).collect(),
                Dgp::Gcomp(_) => list::<GcompConstruction>(v)?.into_iter().map(EstimatorId::Gcomp).collect(),
            };
        }
        if let Some(v) = get("bandwidths") {
            cfg.bandwidths = list(v)?;
        }
        if let Some(v) = get("tmle") {
            cfg.tmle = list::<Wrapped<bool>>(v)?.into_iter().map(|w| w.0).collect();
        }
        if let Some(v) = get("schemes") {
            cfg.schemes = list(v)?;
        }
        if let Some(v) = get("policies") {
            cfg.policies = list(v)?;
        }
        if let Some(v) = get("methods") {
            cfg.methods = list(v)?;
        }
        if let Some(v) = get("mu_method") {
            cfg.gcomp_fit.mu = v.parse()?;
        }
        if let Some(v) = get("g_method") {
            cfg.gcomp_fit.g = v.parse()?;
        }
        if let Some(v) = get("trunc") {
            let (lo, hi) = v
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("trunc='{v}': expected lo,hi")))?;
            cfg.gcomp_fit.truncation = (number("trunc", lo)?, number("trunc", hi)?);
        }
        if let Some(v) = get("seed") {
            cfg.seed = number("seed", v)?;
        }
        let threads = get("threads").map(|v| number::<usize>("threads", v)).transpose()?;
        cfg.validate()?;
        Ok((cfg, threads))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_reps == 0 || self.b == 0 {
            return Err(Error::Domain("mc_reps and B must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Domain(format!("level must lie in (0,1), got {}", self.level)));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Domain("n_grid must be nonempty with positive entries".into()));
        }
        if self.constructions.is_empty() || self.methods.is_empty() || self.schemes.is_empty() || self.policies.is_empty() {
            return Err(Error::Domain("every grid dimension needs at least one entry".into()));
        }
        if let Dgp::Gcomp(_) = self.dgp {
            if self.schemes.iter().any(|s| *s != BootstrapScheme::Empirical) {
                return Err(Error::Unsupported("the g-computed mean supports only the empirical bootstrap".into()));
            }
            let (lo, hi) = self.gcomp_fit.truncation;
            if !(0.0 < lo && lo < hi && hi < 1.0) {
                return Err(Error::Domain(format!("trunc must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")));
            }
        } else if self.bandwidths.is_empty() || self.tmle.is_empty() {
            return Err(Error::Domain("bandwidths and tmle need at least one entry".into()));
        }
        IntervalSpec::equi_tailed(self.level, Method::Wald)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub config_id: String,
    pub n: usize,
    pub construction: String,
    pub bandwidth: String,
    pub scheme: String,
    pub policy: String,
    pub method: String,
    pub coverage: f64,
    pub mean_scaled_width: f64,
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageTable {
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{:.6},{},{}\n",
                r.config_id,
                r.n,
                r.construction,
                r.bandwidth,
                r.scheme,
                r.policy,
                r.method,
                r.coverage,
                r.mean_scaled_width,
                r.reps,
                r.failures
            ));
        }
        s
    }

    /// Rows matching every given `(column, value)` pair.
    pub fn select(&self, filters: &[(&str, &str)]) -> Vec<&CoverageRow> {
        self.rows
            .iter()
            .filter(|r| {
                filters.iter().all(|(k, v)| {
                    let field = match *k {
                        "config_id" => r.config_id.clone(),
                        "n" => r.n.to_string(),
                        "construction" => r.construction.clone(),
                        "bandwidth" => r.bandwidth.clone(),
                        "scheme" => r.scheme.clone(),
                        "policy" => r.policy.clone(),
                        "method" => r.method.clone(),
                        _ => return false,
                    };
                    field == *v
                })
            })
            .collect()
    }
}

/// One nuisance setting: all cells sharing a fitted nuisance.
#[derive(Debug, Clone)]
struct Group {
    n_index: usize,
    n: usize,
    local: u32,
    rule: Option<BandwidthRule>,
    tmle: bool,
    label: String,
}

#[derive(Debug, Clone)]
struct Cell {
    scheme: usize,
    policy: usize,
    construction: EstimatorId,
    method: Method,
}

/// `(covered, sqrt(n) * width)` per cell, `None` on failure.
type RepOutcome = Vec<Option<(bool, f64)>>;

fn groups(cfg: &SimConfig) -> Vec<Group> {
    let mut out = Vec::new();
    for (n_index, &n) in cfg.n_grid.iter().enumerate() {
        match cfg.dgp {
            Dgp::StdNormal => {
                let mut local = 0;
                for rule in &cfg.bandwidths {
                    for &tmle in &cfg.tmle {
                        out.push(Group {
                            n_index,
                            n,
                            local,
                            rule: Some(rule.clone()),
                            tmle,
                            label: if tmle { format!("{rule}+tmle") } else { rule.to_string() },
                        });
                        local += 1;
                    }
                }
            }
            Dgp::Gcomp(_) => out.push(Group {
                n_index,
                n,
                local: 0,
                rule: None,
                tmle: false,
                label: format!("{}/{}", cfg.gcomp_fit.mu, cfg.gcomp_fit.g),
            }),
        }
    }
    out
}

fn cells(cfg: &SimConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for scheme in 0..cfg.schemes.len() {
        for policy in 0..cfg.policies.len() {
            for &construction in &cfg.constructions {
                for &method in &cfg.methods {
                    out.push(Cell {
                        scheme,
                        policy,
                        construction,
                        method,
                    });
                }
            }
        }
    }
    out
}

fn score(spec: &IntervalSpec, report: &EstimatorReport, reps: Option<&ReplicateSet>, n: usize, truth: f64) -> Option<(bool, f64)> {
    let i = interval(spec, report, reps, n).ok()?;
    if !(i.lo.is_finite() && i.hi.is_finite()) {
        return None;
    }
    Some((i.contains(truth), (n as f64).sqrt() * i.width()))
}

fn density_rep(cfg: &SimConfig, g: &Group, cells: &[Cell], stream: &RngStream, truth: f64) -> Result<RepOutcome> {
    let sample = Sample::new(stream.derive(purpose::DATA).standard_normal(g.n))?;
    let rule = g.rule.as_ref().expect("density group has a bandwidth rule");
    let nuisance = DensityNuisance::fit(&sample, cfg.kernel, rule, g.tmle)?;
    let needs_reps = cfg.methods.iter().any(|m| m.needs_replicates());
    let mut out = vec![None; cells.len()];
    let boot = stream.derive(purpose::BOOTSTRAP).derive(g.local);
    for (si, scheme) in cfg.schemes.iter().enumerate() {
        let dist = SamplingDistribution::resolve(scheme, &nuisance, &sample);
        for (pi, &policy) in cfg.policies.iter().enumerate() {
            let prims = match (&dist, needs_reps) {
                (Ok(d), true) => Some(bootstrap::density_primitives(
                    &nuisance,
                    &sample,
                    d,
                    policy,
                    cfg.b,
                    &boot.derive((si * cfg.policies.len() + pi) as u32),
                )),
                _ => None,
            };
            for (ci, cell) in cells.iter().enumerate() {
                if cell.scheme != si || cell.policy != pi {
                    continue;
                }
                let EstimatorId::Density(c) = cell.construction else {
                    continue;
                };
                let spec = IntervalSpec::equi_tailed(cfg.level, cell.method)?;
                let density = match &dist {
                    Ok(d) => d.density(),
                    Err(_) if cell.method == Method::Wald => None,
                    Err(_) => continue,
                };
                let Ok(report) = density_param::report(c, &nuisance.eta, density, &sample) else {
                    continue;
                };
                let reps = match (&prims, cell.method.needs_replicates()) {
                    (Some(Ok(p)), true) => match ReplicateSet::from_primitives(p, c, report.center_at_sampling_dist) {
                        Ok(r) => Some(r),
                        Err(_) => continue,
                    },
                    (_, true) => continue,
                    (_, false) => None,
                };
                out[ci] = score(&spec, &report, reps.as_ref(), g.n, truth);
            }
        }
    }
    Ok(out)
}

fn gcomp_rep(cfg: &SimConfig, dgp: &GcompDgp, g: &Group, cells: &[Cell], stream: &RngStream, truth: f64) -> Result<RepOutcome> {
    let data = dgp.sample(g.n, &stream.derive(purpose::DATA))?;
    let eta = cfg.gcomp_fit.fit(&data)?;
    let needs_reps = cfg.methods.iter().any(|m| m.needs_replicates());
    let mut out = vec![None; cells.len()];
    let boot = stream.derive(purpose::BOOTSTRAP);
    for (pi, &policy) in cfg.policies.iter().enumerate() {
        for &construction in &cfg.constructions {
            let EstimatorId::Gcomp(c) = construction else {
                continue;
            };
            let Ok(psi) = gcomp::estimate(c, &data, &eta) else {
                continue;
            };
            let phi = gcomp::influence_values_gcomp(&data, &eta, psi);
            let report = EstimatorReport {
                psi_hat: psi,
                sigma_hat: density_param::sigma_if(&phi),
                center_at_sampling_dist: psi,
                if_values: phi,
            };
            let reps = if needs_reps {
                bootstrap::run_gcomp(
                    c,
                    &data,
                    &cfg.gcomp_fit,
                    &eta,
                    &BootstrapScheme::Empirical,
                    policy,
                    cfg.b,
                    &boot.derive(pi as u32),
                )
                .ok()
            } else {
                None
            };
            for (ci, cell) in cells.iter().enumerate() {
                if cell.policy != pi || cell.construction != construction {
                    continue;
                }
                let spec = IntervalSpec::equi_tailed(cfg.level, cell.method)?;
                if cell.method.needs_replicates() && reps.is_none() {
                    continue;
                }
                out[ci] = score(&spec, &report, reps.as_ref(), g.n, truth);
            }
        }
    }
    Ok(out)
}

/// Run the study on the current rayon pool.
pub fn run_study(cfg: &SimConfig) -> Result<CoverageTable> {
    cfg.validate()?;
    let truth = true_value(&cfg.dgp)?;
    let groups = groups(cfg);
    let cells = cells(cfg);
    let root = RngStream::new(cfg.seed);
    let tasks: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.mc_reps).map(move |r| (g, r)))
        .collect();
    let results: Vec<Option<RepOutcome>> = tasks
        .par_iter()
        .map(|&(gi, rep)| {
            let g = &groups[gi];
            let stream = root.derive(g.n_index as u32).derive(rep as u32);
            let res = match &cfg.dgp {
                Dgp::StdNormal => density_rep(cfg, g, &cells, &stream, truth),
                Dgp::Gcomp(d) => gcomp_rep(cfg, d, g, &cells, &stream, truth),
            };
            res.map_err(|e| log::debug!("n={} rep {rep}: {e}", g.n)).ok()
        })
        .collect();

    let mut rows = Vec::with_capacity(groups.len() * cells.len());
    for (gi, g) in groups.iter().enumerate() {
        let reps = &results[gi * cfg.mc_reps..(gi + 1) * cfg.mc_reps];
        for (ci, cell) in cells.iter().enumerate() {
            let (mut covered, mut width, mut ok) = (0usize, 0.0, 0usize);
            for r in reps {
                if let Some(Some((c, w))) = r.as_ref().map(|v| v[ci]) {
                    ok += 1;
                    covered += usize::from(c);
                    width += w;
                }
            }
            let failures = cfg.mc_reps - ok;
            if failures > 0 {
                log::warn!("n={} cell {ci}: {failures} of {} replicates failed", g.n, cfg.mc_reps);
            }
            rows.push(CoverageRow {
                config_id: format!("g{gi}c{ci}"),
                n: g.n,
                construction: cell.construction.to_string(),
                bandwidth: g.label.clone(),
                scheme: cfg.schemes[cell.scheme].to_string(),
                policy: cfg.policies[cell.policy].to_string(),
                method: cell.method.to_string(),
                coverage: if ok > 0 { covered as f64 / ok as f64 } else { f64::NAN },
                mean_scaled_width: if ok > 0 { width / ok as f64 } else { f64::NAN },
                reps: ok,
                failures,
            });
        }
    }
    Ok(CoverageTable { rows })
}

/// Run the study on a dedicated pool with the given number of threads.
pub fn run_study_with_threads(cfg: &SimConfig, threads: usize) -> Result<CoverageTable> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
        .install(|| run_study(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_real_line, QuadSettings};

    fn tiny() -> SimConfig {
        SimConfig {
            n_grid: vec![60],
            mc_reps: 4,
            b: 20,
            ..SimConfig::default()
        }
    }

    #[test]
    fn true_values() {
        assert!((true_value(&Dgp::StdNormal).unwrap() - 0.282_094_791_8).abs() < 1e-9);
        let numeric = integrate_real_line(|x| crate::kernels::normal_density(x, 1.0).powi(2), &QuadSettings::with_rel_tol(1e-12))
            .unwrap()
            .value;
        assert!((numeric - true_value(&Dgp::StdNormal).unwrap()).abs() < 1e-8);
        let flat = Dgp::Gcomp(GcompDgp {
            propensity: gcomp::Propensity::Constant(0.5),
            noise_sd: 0.5,
        });
        assert!(true_value(&flat).unwrap().abs() < 1e-12);
    }

    #[test]
    fn config_parsing() {
        let text = "# desk run\nn_grid = 50, 100\nmc_reps=3\nB=10\nbandwidths = silverman, us:sj:0.1\ntmle=false,true\nmethods=wald,perc\n";
        let (cfg, threads) = SimConfig::parse(text, &[("seed".into(), "9".into()), ("threads".into(), "2".into())]).unwrap();
        assert_eq!(cfg.n_grid, vec![50, 100]);
        assert_eq!(cfg.mc_reps, 3);
        assert_eq!(cfg.b, 10);
        assert_eq!(cfg.seed, 9);
        assert_eq!(threads, Some(2));
        assert_eq!(cfg.bandwidths.len(), 2);
        assert_eq!(cfg.tmle, vec![false, true]);
        assert!(SimConfig::parse("bogus=1", &[]).is_err());
        assert!(SimConfig::parse("level=1.5", &[]).is_err());
        assert!(SimConfig::parse("dgp=gcomp\nschemes=smooth", &[]).is_err());
        let (g, _) = SimConfig::parse("dgp=gcomp\npropensity=const:0.4", &[]).unwrap();
        assert_eq!(g.constructions.len(), 2);
        assert_eq!(SimConfig::parse("", &[]).unwrap().0, SimConfig::default());
    }

    #[test]
    fn single_rep_coverage_is_zero_or_one() {
        let cfg = SimConfig {
            mc_reps: 1,
            ..tiny()
        };
        let t = run_study(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2 * 3 * 5);
        for r in &t.rows {
            assert!(r.coverage == 0.0 || r.coverage == 1.0, "{r:?}");
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let cfg = tiny();
        let a = run_study_with_threads(&cfg, 1).unwrap().to_csv();
        let b = run_study_with_threads(&cfg, 4).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 1 + 30);
    }

    #[test]
    fn gcomp_study_runs() {
        let (cfg, _) = SimConfig::parse("dgp=gcomp\nn_grid=200\nmc_reps=3\nB=30\nmethods=wald,perc", &[]).unwrap();
        let t = run_study(&cfg).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r.failures == 0 && r.bandwidth == "linear/logistic"));
    }

    #[test]
    fn signed_kernel_smooth_cells_fail_but_wald_runs() {
        let cfg = SimConfig {
            kernel: Kernel::Gaussian4,
            schemes: vec!["smooth".parse().unwrap()],
            methods: vec![Method::Wald, Method::Percentile],
            ..tiny()
        };
        let t = run_study(&cfg).unwrap();
        for r in t.rows {
            if r.method == "wald" {
                assert_eq!(r.failures, 0);
            } else {
                assert_eq!(r.failures, cfg.mc_reps);
            }
        }
    }
}
