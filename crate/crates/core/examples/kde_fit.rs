//! Fit a kernel density estimate under several bandwidth rules, then target it.

use bootlin::kde::{select_bandwidth, BandwidthRule, DensityEstimate, Sample, TMLE_MAX_ITER, TMLE_TOL};
use bootlin::kernels::Kernel;
use bootlin::prng::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = Sample::new(RngStream::new(7).standard_normal(400))?;
    for rule in ["silverman", "sj", "us:silverman:0.1", "fixed:0.25"] {
        let rule: BandwidthRule = rule.parse()?;
        let bw = select_bandwidth(&rule, &x)?;
        let eta = DensityEstimate::fit(&x, Kernel::Gaussian, bw.h)?;
        println!(
            "{rule:<18} h={:.4}  eta(0)={:.4}  int eta^2={:.5}  P_n eta={:.5}",
            bw.h,
            eta.eval(0.0),
            eta.integral_of_square()?,
            eta.mean_under_empirical(&x)
        );
    }

    let eta = DensityEstimate::fit(&x, Kernel::Gaussian, select_bandwidth(&BandwidthRule::Silverman, &x)?.h)?;
    let tilted = eta.tmle_target(&x, TMLE_TOL, TMLE_MAX_ITER)?;
    let f = tilted.fluctuation().expect("targeted estimate carries its fluctuation");
    println!(
        "targeted: epsilon={:.5}  int eta^2={:.6}  P_n eta={:.6}  mass={:.8}",
        f.epsilon,
        tilted.integral_of_square()?,
        tilted.mean_under_empirical(&x),
        tilted.total_mass()?
    );
    Ok(())
}
