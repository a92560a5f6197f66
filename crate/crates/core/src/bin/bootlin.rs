use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bootlin::bootstrap::{self, BootstrapScheme, DensityNuisance, GcompFitSpec, NuisancePolicy, SamplingDistribution};
use bootlin::density_param::{self, Construction, EstimatorReport};
use bootlin::error::{Error, Result};
use bootlin::gcomp::{self, CausalSample, GMethod, GcompConstruction, MuMethod};
use bootlin::intervals::{interval, IntervalSpec, Method};
use bootlin::kde::{BandwidthRule, Sample};
use bootlin::kernels::Kernel;
use bootlin::prng::{purpose, RngStream};
use bootlin::sim::{self, SimConfig};
use bootlin::vstat;

#[derive(Parser)]
#[command(name = "bootlin", version, about = "Bootstrap confidence intervals for kernel-based estimators")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point estimate, standard error and 95% Wald interval.
    Estimate(EstimateArgs),
    /// Confidence interval from the bootstrap or the Wald construction.
    Interval(IntervalArgs),
    /// Monte Carlo coverage study; writes a CSV table.
    Simulate(SimulateArgs),
    /// Numerical checks of the V-statistic identities.
    Diag(DiagArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Avgdensity,
    Gcomp,
}

#[derive(Args)]
struct EstimateArgs {
    /// One value per line (avgdensity) or CSV with header y,a,z (gcomp).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Param::Avgdensity)]
    param: Param,
    /// onestep | plugin | meanplugin (avgdensity); onestep | ee (gcomp).
    #[arg(long, default_value = "onestep")]
    construction: String,
    /// gauss | gauss4
    #[arg(long, default_value = "gauss")]
    kernel: String,
    /// fixed:<h> | silverman | sj | us:<rule>:<exponent>
    #[arg(long, default_value = "silverman")]
    bandwidth: String,
    /// Target the density estimate before plugging in.
    #[arg(long)]
    tmle: bool,
    /// Outcome regression for gcomp: linear | kernel:<h>
    #[arg(long, default_value = "linear")]
    mu: String,
    /// Propensity fit for gcomp: logistic | kernel:<h>
    #[arg(long, default_value = "logistic")]
    g: String,
    /// Propensity truncation bounds for gcomp, "lo,hi".
    #[arg(long, default_value = "0.01,0.99")]
    trunc: String,
}

#[derive(Args)]
struct IntervalArgs {
    #[command(flatten)]
    est: EstimateArgs,
    /// wald | perc | perct | efron | bwald
    #[arg(long, default_value = "perc")]
    method: String,
    /// empirical | smooth | smooth-indep:<kernel>:<rule>[:tmle]
    #[arg(long, default_value = "empirical")]
    scheme: String,
    /// refit | fixed
    #[arg(long, default_value = "refit")]
    policy: String,
    /// Bootstrap replicates.
    #[arg(short = 'B', default_value_t = 1000)]
    b: usize,
    /// Upper-tail probability; the interval's upper end uses the 1 - alpha quantile.
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    /// Lower-tail probability.
    #[arg(long, default_value_t = 0.025)]
    beta: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, default_value = "coverage.csv")]
    out: PathBuf,
    /// Config overrides, each `key=value`.
    overrides: Vec<String>,
}

#[derive(Args)]
struct DiagArgs {
    /// List check names and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, hide = true, default_value_t = 1.0, allow_negative_numbers = true)]
    tolerance_scale: f64,
}

enum Data {
    Density(Sample),
    Causal(CausalSample),
}

fn load(args: &EstimateArgs) -> Result<Data> {
    match args.param {
        Param::Avgdensity => Sample::read(&args.data).map(Data::Density),
        Param::Gcomp => CausalSample::read_csv(&args.data).map(Data::Causal),
    }
}

fn gcomp_spec(args: &EstimateArgs) -> Result<GcompFitSpec> {
    let (lo, hi) = args
        .trunc
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("--trunc '{}': expected lo,hi", args.trunc)))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("--trunc: {e}")));
    let spec = GcompFitSpec {
        mu: args.mu.parse::<MuMethod>()?,
        g: args.g.parse::<GMethod>()?,
        truncation: (parse(lo)?, parse(hi)?),
    };
    let (lo, hi) = spec.truncation;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::Domain(format!("--trunc must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")));
    }
    Ok(spec)
}

struct DensitySetup {
    c: Construction,
    sample: Sample,
    nuisance: DensityNuisance,
}

fn density_setup(args: &EstimateArgs, sample: Sample) -> Result<DensitySetup> {
    let c: Construction = args.construction.parse()?;
    let kernel: Kernel = args.kernel.parse()?;
    let rule: BandwidthRule = args.bandwidth.parse()?;
    let nuisance = DensityNuisance::fit(&sample, kernel, &rule, args.tmle)?;
    if let Some(why) = &nuisance.bandwidth.fallback {
        eprintln!("warning: bandwidth rule fell back: {why}");
    }
    Ok(DensitySetup { c, sample, nuisance })
}

fn gcomp_report(c: GcompConstruction, data: &CausalSample, eta: &gcomp::GcompNuisance) -> Result<EstimatorReport> {
    let psi = gcomp::estimate(c, data, eta)?;
    let phi = gcomp::influence_values_gcomp(data, eta, psi);
    Ok(EstimatorReport {
        psi_hat: psi,
        sigma_hat: density_param::sigma_if(&phi),
        center_at_sampling_dist: psi,
        if_values: phi,
    })
}

fn print_report(report: &EstimatorReport, n: usize) -> Result<()> {
    let wald = interval(&IntervalSpec::equi_tailed(0.95, Method::Wald)?, report, None, n)?;
    println!("n          {n}");
    println!("psi_hat    {:.10}", report.psi_hat);
    println!("sigma_hat  {:.10}", report.sigma_hat);
    println!("wald95     [{:.10}, {:.10}]", wald.lo, wald.hi);
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    match load(args)? {
        Data::Density(sample) => {
            let s = density_setup(args, sample)?;
            let report = density_param::report(s.c, &s.nuisance.eta, None, &s.sample)?;
            println!("param      avgdensity");
            println!("estimator  {}{}", s.c, if s.nuisance.targeted { " (targeted)" } else { "" });
            println!("kernel     {}", s.nuisance.eta.kernel());
            println!("bandwidth  {:.10} ({})", s.nuisance.bandwidth.h, args.bandwidth);
            print_report(&report, s.sample.len())
        }
        Data::Causal(data) => {
            let c: GcompConstruction = args.construction.parse()?;
            let spec = gcomp_spec(args)?;
            let eta = spec.fit(&data)?;
            let report = gcomp_report(c, &data, &eta)?;
            println!("param      gcomp");
            println!("estimator  {c}");
            println!("nuisance   mu={} g={} trunc=({}, {})", spec.mu, spec.g, spec.truncation.0, spec.truncation.1);
            print_report(&report, data.len())
        }
    }
}

fn run_interval(args: &IntervalArgs, seed: u64) -> Result<()> {
    let method: Method = args.method.parse()?;
    let scheme: BootstrapScheme = args.scheme.parse()?;
    let policy: NuisancePolicy = args.policy.parse()?;
    let spec = IntervalSpec::new(args.alpha, args.beta, method)?;
    let stream = RngStream::new(seed).derive(purpose::BOOTSTRAP);
    let b = if method.needs_replicates() { args.b } else { 0 };
    let (ci, report, n) = match load(&args.est)? {
        Data::Density(sample) => {
            let s = density_setup(&args.est, sample)?;
            if policy == NuisancePolicy::Fixed && s.c == Construction::PlugIn && method.needs_replicates() {
                eprintln!("warning: the plug-in estimate does not vary under a fixed nuisance; the bootstrap distribution is a point mass");
            }
            if method.needs_replicates() {
                let dist = SamplingDistribution::resolve(&scheme, &s.nuisance, &s.sample)?;
                let report = density_param::report(s.c, &s.nuisance.eta, dist.density(), &s.sample)?;
                let reps = bootstrap::run_avg_density(s.c, &s.nuisance, &s.sample, &scheme, policy, b, &stream)?;
                (interval(&spec, &report, Some(&reps), s.sample.len())?, report, s.sample.len())
            } else {
                let report = density_param::report(s.c, &s.nuisance.eta, None, &s.sample)?;
                (interval(&spec, &report, None, s.sample.len())?, report, s.sample.len())
            }
        }
        Data::Causal(data) => {
            let c: GcompConstruction = args.est.construction.parse()?;
            let fit = gcomp_spec(&args.est)?;
            let eta = fit.fit(&data)?;
            let report = gcomp_report(c, &data, &eta)?;
            let reps = if method.needs_replicates() {
                Some(bootstrap::run_gcomp(c, &data, &fit, &eta, &scheme, policy, b, &stream)?)
            } else {
                None
            };
            (interval(&spec, &report, reps.as_ref(), data.len())?, report, data.len())
        }
    };
    println!("n          {n}");
    println!("psi_hat    {:.10}", report.psi_hat);
    println!("method     {method}");
    if method.needs_replicates() {
        println!("scheme     {scheme}");
        println!("policy     {policy}");
        println!("B          {b}");
    }
    println!("tails      alpha={} beta={}", spec.alpha, spec.beta);
    println!("interval   [{:.10}, {:.10}]", ci.lo, ci.hi);
    Ok(())
}

fn simulate(args: &SimulateArgs, seed: u64, seed_given: bool, threads: Option<usize>) -> Result<()> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    if seed_given {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override '{o}': expected key=value")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let (cfg, cfg_threads) = SimConfig::parse(&text, &overrides)?;
    let table = match threads.or(cfg_threads) {
        Some(t) => sim::run_study_with_threads(&cfg, t)?,
        None => sim::run_study(&cfg)?,
    };
    std::fs::write(&args.out, table.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;
    println!("{}", args.out.display());
    Ok(())
}

fn diag(args: &DiagArgs, seed: u64) -> ExitCode {
    if args.list {
        for name in vstat::check_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let outcomes = vstat::run_diagnostics(seed, args.tolerance_scale);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        println!(
            "{}  {:width$}  error={:.3e}  tol={:.3e}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.error,
            o.tolerance * args.tolerance_scale,
        );
    }
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = <Cli as clap::CommandFactory>::command().get_matches();
    let from_cli = |m: &clap::ArgMatches| m.value_source("seed") == Some(clap::parser::ValueSource::CommandLine);
    let seed_given = from_cli(&matches) || matches.subcommand().is_some_and(|(_, m)| from_cli(m));
    let cli = <Cli as clap::FromArgMatches>::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    if let (Some(t), false) = (cli.threads, matches!(cli.command, Command::Simulate(_))) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Interval(a) => run_interval(a, cli.seed),
        Command::Simulate(a) => simulate(a, cli.seed, seed_given, cli.threads),
        Command::Diag(a) => return diag(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
