//! All five interval methods under the empirical and the smooth bootstrap.

use bootlin::bootstrap::{self, BootstrapScheme, DensityNuisance, NuisancePolicy, SamplingDistribution};
use bootlin::density_param::{self, Construction};
use bootlin::intervals::{interval, IntervalSpec, Method};
use bootlin::kde::{BandwidthRule, Sample};
use bootlin::kernels::Kernel;
use bootlin::prng::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 500;
    let root = RngStream::new(11);
    let x = Sample::new(root.derive(0).standard_normal(n))?;
    let nuisance = DensityNuisance::fit(&x, Kernel::Gaussian, &BandwidthRule::Silverman, false)?;
    let c = Construction::OneStep;
    for scheme in ["empirical", "smooth"] {
        let scheme: BootstrapScheme = scheme.parse()?;
        let dist = SamplingDistribution::resolve(&scheme, &nuisance, &x)?;
        let report = density_param::report(c, &nuisance.eta, dist.density(), &x)?;
        let reps =
            bootstrap::run_avg_density(c, &nuisance, &x, &scheme, NuisancePolicy::RefitFrozenTuning, 500, &root.derive(1))?;
        println!("{scheme}: psi={:.5}, center={:.5}", report.psi_hat, reps.center);
        for m in Method::ALL {
            let ci = interval(&IntervalSpec::equi_tailed(0.95, m)?, &report, Some(&reps), n)?;
            println!("  {m:<6} [{:.5}, {:.5}]", ci.lo, ci.hi);
        }
    }
    Ok(())
}
