//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use bootlin::bootstrap::{self, BootstrapScheme, DensityNuisance, NuisancePolicy, ReplicateSet};
use bootlin::density_param::{self, Construction, EstimatorReport};
use bootlin::error::Result;
use bootlin::gcomp::{self, GcompConstruction, GcompDgp};
use bootlin::intervals::{self, IntervalSpec, Method};
use bootlin::kde::{BandwidthRule, DensityEstimate, Sample};
use bootlin::kernels::{normal_density, Kernel};
use bootlin::prng::RngStream;
use bootlin::quad::{integrate_real_line, QuadSettings};
use bootlin::sim::{self, CoverageTable, Dgp, SimConfig};
use bootlin::vstat::{self, Population, SymKernelFn};

const SEED: u64 = 20240611;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        passed,
        detail: detail.into(),
    })
}

fn normal_sample(s: &RngStream, n: usize) -> Sample {
    Sample::new(s.standard_normal(n)).unwrap()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

fn row<'a>(t: &'a CoverageTable, filters: &[(&str, &str)]) -> &'a sim::CoverageRow {
    let rows = t.select(filters);
    assert_eq!(rows.len(), 1, "expected exactly one row for {filters:?}");
    rows[0]
}

fn failure_budget(t: &CoverageTable) -> (bool, String) {
    let worst = t.rows.iter().map(|r| r.failures as f64 / (r.reps + r.failures) as f64).fold(0.0, f64::max);
    let ok = worst < 0.01 && t.rows.iter().all(|r| r.coverage <= 1.0);
    (ok, format!("worst failure rate {worst:.4}"))
}

fn c1_true_value() -> Result<Verdict> {
    let psi0 = sim::true_value(&Dgp::StdNormal)?;
    let analytic = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
    let quad = integrate_real_line(|x| normal_density(x, 1.0).powi(2), &QuadSettings::with_rel_tol(1e-12))?.value;
    let (e0, e1, e2) = ((psi0 - analytic).abs(), (psi0 - 0.2820947918).abs(), (quad - psi0).abs());
    verdict(
        e0 <= 1e-15 && e1 <= 1e-9 && e2 <= 1e-8,
        format!("psi0={psi0:.12} |psi0-0.2820947918|={e1:.1e} |quad-psi0|={e2:.1e}"),
    )
}

fn c2_closed_forms() -> Result<Verdict> {
    let h = 0.4;
    let x = normal_sample(&RngStream::new(SEED).derive(2), 50);
    let eta = DensityEstimate::fit(&x, Kernel::Gaussian, h)?;
    let closed = eta.integral_of_square()?;
    let quad = integrate_real_line(|t| eta.eval(t).powi(2), &QuadSettings::with_rel_tol(1e-12))?.value;
    let pts = x.points();
    let n = pts.len() as f64;
    let mut direct = 0.0;
    for &a in pts {
        for &b in pts {
            direct += normal_density(a - b, 2.0 * h * h) - normal_density(a - b, h * h);
        }
    }
    direct /= n * n;
    let bias = vstat::plugin_bias_term(&eta, &x)?;
    let (e1, e2) = ((closed - quad).abs(), (bias - direct).abs());
    verdict(e1 <= 1e-8 && e2 <= 1e-12, format!("|closed-quad|={e1:.1e} |bias-double sum|={e2:.1e}"))
}

fn c3_diagonal_law() -> Result<Verdict> {
    let (reps, n, h) = (500u32, 200usize, 0.3);
    let root = RngStream::new(SEED).derive(3);
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, f) in [("K_h", SymKernelFn::kernel_h(h)), ("(K*K)_h", SymKernelFn::convolution_h(h))] {
        let vals: Vec<f64> = (0..reps)
            .map(|r| vstat::signed_v_integral(&f, &normal_sample(&root.derive(r), n), Population::StdNormal))
            .collect::<Result<_>>()?;
        let (m, sd) = mean_sd(&vals);
        let target = f.tau / n as f64;
        let tol = 3.0 * sd / (reps as f64).sqrt() + 2.0 / n as f64;
        ok &= (m - target).abs() <= tol;
        parts.push(format!("{label}: mean={m:.5} tau/n={target:.5} tol={tol:.5}"));
    }
    verdict(ok, parts.join("; "))
}

fn c4_remainder_identity() -> Result<Verdict> {
    let root = RngStream::new(SEED).derive(4);
    let psi0 = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
    let q = QuadSettings::with_rel_tol(1e-12);
    let mut worst: f64 = 0.0;
    for r in 0..20 {
        let x = normal_sample(&root.derive(r), 30);
        let rule = BandwidthRule::Silverman;
        let eta = DensityEstimate::fit(&x, Kernel::Gaussian, bootlin::kde::select_bandwidth(&rule, &x)?.h)?;
        let t1 = density_param::estimate(Construction::OneStep, &eta, &x)?;
        let pn_eta = x.points().iter().map(|&v| eta.eval(v)).sum::<f64>() / 30.0;
        let p0_eta = integrate_real_line(|t| eta.eval(t) * normal_density(t, 1.0), &q)?.value;
        let lhs = t1 - psi0 - 2.0 * (pn_eta - p0_eta);
        let rhs = vstat::onestep_remainder(&eta, Population::StdNormal)?;
        worst = worst.max((lhs - rhs).abs());
    }
    verdict(worst <= 1e-6, format!("max deviation over 20 datasets {worst:.1e}"))
}

fn c5_interval_algebra() -> Result<Verdict> {
    let spec = IntervalSpec::equi_tailed(0.9, Method::Percentile)?;
    let report = EstimatorReport {
        psi_hat: 0.3,
        sigma_hat: 0.7,
        center_at_sampling_dist: 0.31,
        if_values: vec![0.0; 10],
    };
    let psi_star: Vec<f64> = (0..200).map(|i| 0.31 + ((i * 37) % 200) as f64 / 1000.0 - 0.1).collect();
    let reps = ReplicateSet {
        psi_star: psi_star.clone(),
        sigma_star: vec![0.7; 200],
        center: 0.31,
        invalid: 0,
    };
    let p = intervals::percentile(&report, &reps, &spec)?;
    let t = intervals::percentile_t(&report, &reps, &spec)?;
    let studentized_equal = p == t;

    let x = normal_sample(&RngStream::new(SEED).derive(5), 150);
    let nuisance = DensityNuisance::fit(&x, Kernel::Gaussian, &BandwidthRule::Silverman, false)?;
    let plug = density_param::estimate(Construction::PlugIn, &nuisance.eta, &x)?;
    let fixed = bootstrap::run_avg_density(
        Construction::PlugIn,
        &nuisance,
        &x,
        &BootstrapScheme::Empirical,
        NuisancePolicy::Fixed,
        100,
        &RngStream::new(SEED).derive(50),
    )?;
    let point_mass = fixed.psi_star.iter().all(|&v| v == plug);

    let mut shift_ok = true;
    for c in [-3.0, 0.125, 17.0] {
        let shifted = ReplicateSet {
            psi_star: psi_star.iter().map(|v| v + c).collect(),
            center: reps.center + c,
            ..reps.clone()
        };
        let s = intervals::percentile(&report, &shifted, &spec)?;
        shift_ok &= (s.lo - p.lo).abs() <= 1e-12 && (s.hi - p.hi).abs() <= 1e-12;
    }
    verdict(
        studentized_equal && point_mass && shift_ok,
        format!("perct==perc: {studentized_equal}; fixed plug-in point mass: {point_mass}; shift invariance: {shift_ok}"),
    )
}

fn c6_wald_tmle() -> Result<Verdict> {
    let cfg = SimConfig {
        n_grid: vec![1000],
        mc_reps: 300,
        b: 1,
        constructions: vec![sim::EstimatorId::Density(Construction::PlugIn)],
        tmle: vec![true],
        schemes: vec![BootstrapScheme::Empirical],
        methods: vec![Method::Wald],
        seed: SEED,
        ..SimConfig::default()
    };
    let t = sim::run_study(&cfg)?;
    let r = row(&t, &[("method", "wald")]);
    let (budget, why) = failure_budget(&t);
    verdict(
        (0.92..=0.975).contains(&r.coverage) && budget,
        format!("coverage {:.4} over {} reps; {why}", r.coverage, r.reps),
    )
}

fn smooth_study() -> Result<CoverageTable> {
    let cfg = SimConfig {
        n_grid: vec![2000],
        mc_reps: 200,
        b: 400,
        constructions: vec![
            sim::EstimatorId::Density(Construction::PlugIn),
            sim::EstimatorId::Density(Construction::OneStep),
        ],
        schemes: vec!["smooth".parse()?],
        policies: vec![NuisancePolicy::RefitFrozenTuning],
        methods: vec![Method::Percentile, Method::Efron],
        seed: SEED,
        ..SimConfig::default()
    };
    sim::run_study(&cfg)
}

fn c7_smooth_plugin(t: &CoverageTable) -> Result<Verdict> {
    let r = row(t, &[("construction", "plugin"), ("method", "perc")]);
    let (budget, why) = failure_budget(t);
    verdict(r.coverage >= 0.90 && budget, format!("plug-in percentile coverage {:.4}; {why}", r.coverage))
}

fn c8_efron_gap(t: &CoverageTable) -> Result<Verdict> {
    let perc = row(t, &[("construction", "onestep"), ("method", "perc")]).coverage;
    let efron = row(t, &[("construction", "onestep"), ("method", "efron")]).coverage;
    verdict(
        perc - efron >= 0.05,
        format!("one-step percentile {perc:.4}, Efron {efron:.4}, gap {:.4}", perc - efron),
    )
}

fn c9_plugin_undercoverage() -> Result<Verdict> {
    let cfg = SimConfig {
        n_grid: vec![500, 2000],
        mc_reps: 300,
        b: 1,
        constructions: vec![sim::EstimatorId::Density(Construction::PlugIn)],
        schemes: vec![BootstrapScheme::Empirical],
        methods: vec![Method::Wald],
        seed: SEED,
        ..SimConfig::default()
    };
    let t = sim::run_study(&cfg)?;
    let c500 = row(&t, &[("n", "500")]).coverage;
    let c2000 = row(&t, &[("n", "2000")]).coverage;
    let (budget, why) = failure_budget(&t);
    verdict(
        c2000 < c500 && c2000 < 0.92 && budget,
        format!("Wald plug-in coverage n=500: {c500:.4}, n=2000: {c2000:.4}; {why}"),
    )
}

fn c10_gcomp() -> Result<Verdict> {
    let dgp = GcompDgp::default();
    let psi0 = dgp.true_value()?;
    let data = dgp.sample(100_000, &RngStream::new(SEED).derive(10))?;
    let eta = dgp.true_nuisance(&data, gcomp::DEFAULT_TRUNCATION)?;
    let mut errs = Vec::new();
    for c in GcompConstruction::ALL {
        errs.push((c, (gcomp::estimate(c, &data, &eta)? - psi0).abs()));
    }
    let point_ok = errs.iter().all(|(_, e)| *e <= 0.01);

    let (cfg, _) = SimConfig::parse(
        "dgp=gcomp\nn_grid=1000\nmc_reps=200\nB=300\nmethods=perc\nschemes=empirical",
        &[("seed".into(), SEED.to_string())],
    )?;
    let t = sim::run_study(&cfg)?;
    let covs: Vec<(String, f64)> = t.rows.iter().map(|r| (r.construction.clone(), r.coverage)).collect();
    let cover_ok = covs.iter().all(|(_, c)| (0.91..=0.98).contains(c));
    let (budget, why) = failure_budget(&t);
    verdict(
        point_ok && cover_ok && budget,
        format!(
            "psi0={psi0:.5}; |error| at n=1e5: {}; percentile coverage: {}; {why}",
            errs.iter().map(|(c, e)| format!("{c} {e:.4}")).collect::<Vec<_>>().join(", "),
            covs.iter().map(|(c, v)| format!("{c} {v:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c11_determinism() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("study.cfg");
    std::fs::write(
        &cfg,
        "n_grid = 80, 160\nmc_reps = 6\nB = 40\ntmle = false, true\nschemes = empirical, smooth\npolicies = refit, fixed\n",
    )?;
    let mut outputs = Vec::new();
    for threads in [1, 8] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_bootlin"))
            .args(["--seed", "11", "--threads", &threads.to_string(), "simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()?;
        assert!(status.success(), "simulate exited with {status}");
        outputs.push(std::fs::read(&out)?);
    }
    let same = outputs[0] == outputs[1];
    verdict(same && !outputs[0].is_empty(), format!("{} bytes, identical: {same}", outputs[0].len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, limit: Option<f64>, run: &mut dyn FnMut() -> Result<Verdict>| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(v) => {
                let in_time = limit.is_none_or(|l| secs < l);
                let note = if in_time { String::new() } else { format!("; over the {}s budget", limit.unwrap()) };
                (v.passed && in_time, format!("{}{note}", v.detail))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("{} criterion {id:>2} {name}: {detail} [{secs:.1}s]", if passed { "PASS" } else { "FAIL" });
    };
    report(1, "true value", Some(1.0), &mut c1_true_value);
    report(2, "closed forms vs quadrature", Some(5.0), &mut c2_closed_forms);
    report(3, "diagonal law", Some(30.0), &mut c3_diagonal_law);
    report(4, "one-step remainder identity", Some(20.0), &mut c4_remainder_identity);
    report(5, "interval algebra", Some(1.0), &mut c5_interval_algebra);
    report(6, "Wald coverage after targeting", Some(180.0), &mut c6_wald_tmle);
    let mut smooth = None;
    report(7, "smooth-bootstrap plug-in percentile", None, &mut || {
        let t = smooth_study()?;
        let v = c7_smooth_plugin(&t);
        smooth = Some(t);
        v
    });
    report(8, "Efron shortfall", None, &mut || match &smooth {
        Some(t) => c8_efron_gap(t),
        None => verdict(false, "smooth-bootstrap study did not run"),
    });
    report(9, "plug-in Wald undercoverage", None, &mut c9_plugin_undercoverage);
    report(10, "g-computation", None, &mut c10_gcomp);
    report(11, "thread-count determinism", None, &mut c11_determinism);
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
