//! Monte Carlo and closed-form checks of the V-statistic identities.

use bootlin::kde::{DensityEstimate, Sample};
use bootlin::kernels::Kernel;
use bootlin::prng::RngStream;
use bootlin::vstat::{self, Population};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for o in vstat::run_diagnostics(0, 1.0) {
        println!("{} {:<36} error {:.2e} (tol {:.2e})", if o.passed { "ok  " } else { "FAIL" }, o.name, o.error, o.tolerance);
    }
    let x = Sample::new(RngStream::new(9).standard_normal(200))?;
    let eta = DensityEstimate::fit(&x, Kernel::Gaussian, 0.3)?;
    println!("plug-in bias term      {:+.6}", vstat::plugin_bias_term(&eta, &x)?);
    println!("one-step remainder     {:+.6}", vstat::onestep_remainder(&eta, Population::StdNormal)?);
    Ok(())
}
