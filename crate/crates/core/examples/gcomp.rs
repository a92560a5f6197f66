//! G-computed treated-arm mean: fitted nuisances, both estimators and a
//! bootstrap percentile interval.

use bootlin::bootstrap::{self, BootstrapScheme, GcompFitSpec, NuisancePolicy};
use bootlin::density_param::EstimatorReport;
use bootlin::gcomp::{self, GcompConstruction, GcompDgp};
use bootlin::intervals::{interval, IntervalSpec, Method};
use bootlin::prng::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dgp = GcompDgp::default();
    let root = RngStream::new(5);
    let data = dgp.sample(1000, &root.derive(0))?;
    let spec = GcompFitSpec::default();
    let eta = spec.fit(&data)?;
    println!("truth {:.5}, treated fraction {:.3}", dgp.true_value()?, data.treated_fraction());
    for c in GcompConstruction::ALL {
        let psi = gcomp::estimate(c, &data, &eta)?;
        let phi = gcomp::influence_values_gcomp(&data, &eta, psi);
        let report = EstimatorReport {
            psi_hat: psi,
            sigma_hat: bootlin::density_param::sigma_if(&phi),
            center_at_sampling_dist: psi,
            if_values: phi,
        };
        let reps = bootstrap::run_gcomp(
            c,
            &data,
            &spec,
            &eta,
            &BootstrapScheme::Empirical,
            NuisancePolicy::RefitFrozenTuning,
            300,
            &root.derive(1),
        )?;
        let perc = interval(&IntervalSpec::equi_tailed(0.95, Method::Percentile)?, &report, Some(&reps), data.len())?;
        println!("{c:<8} psi={psi:.5} sigma={:.4} percentile [{:.5}, {:.5}]", report.sigma_hat, perc.lo, perc.hi);
    }
    Ok(())
}
