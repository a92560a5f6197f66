//! The two registered kernels, their self-convolutions and noise sampling.

use bootlin::kernels::Kernel;
use bootlin::prng::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [Kernel::Gaussian, Kernel::Gaussian4] {
        println!("{k} (order {}):", k.order());
        for u in [0.0, 0.5, 1.0, 2.0, 3.0] {
            println!("  K({u:.1}) = {:+.6}   (K*K)({u:.1}) = {:+.6}", k.eval(u), k.self_convolution(u));
        }
        match k.sample_noise(&RngStream::new(1), 3) {
            Ok(eps) => println!("  noise draws {eps:.4?}"),
            Err(e) => println!("  no sampler: {e}"),
        }
    }
    Ok(())
}
