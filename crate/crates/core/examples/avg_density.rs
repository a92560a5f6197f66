//! The three estimators of the average density value on one dataset.

use bootlin::density_param::{self, Construction};
use bootlin::intervals::{interval, IntervalSpec, Method};
use bootlin::kde::{select_bandwidth, BandwidthRule, DensityEstimate, Sample};
use bootlin::kernels::Kernel;
use bootlin::prng::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let x = Sample::new(RngStream::new(3).standard_normal(n))?;
    let h = select_bandwidth(&BandwidthRule::Silverman, &x)?.h;
    let eta = DensityEstimate::fit(&x, Kernel::Gaussian, h)?;
    let truth = 0.5 / std::f64::consts::PI.sqrt();
    let wald = IntervalSpec::equi_tailed(0.95, Method::Wald)?;
    println!("truth {truth:.5}, n={n}, h={h:.4}");
    for c in Construction::ALL {
        let r = density_param::report(c, &eta, None, &x)?;
        let ci = interval(&wald, &r, None, n)?;
        println!("{c:<10} psi={:.5}  sigma={:.4}  95% Wald [{:.5}, {:.5}]", r.psi_hat, r.sigma_hat, ci.lo, ci.hi);
    }
    Ok(())
}
