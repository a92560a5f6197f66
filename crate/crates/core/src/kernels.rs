//! Symmetric kernels of declared order.
//!
//! Two kernels are shipped: the standard Gaussian (order 2, a probability
//! density) and the fourth-order Gaussian `(3/2 - u^2/2) phi(u)`, which takes
//! negative values and therefore cannot drive a smooth bootstrap.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::prng::RngStream;

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Normal density with mean zero and the given variance.
pub fn normal_density(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * PI * variance).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Gaussian,
    Gaussian4,
}

impl Kernel {
    pub fn id(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gauss",
            Kernel::Gaussian4 => "gauss4",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Kernel::Gaussian => 2,
            Kernel::Gaussian4 => 4,
        }
    }

    /// True iff the kernel is a probability density.
    pub fn supports_sampling(self) -> bool {
        matches!(self, Kernel::Gaussian)
    }

    pub fn eval(self, u: f64) -> f64 {
        let phi = INV_SQRT_2PI * (-0.5 * u * u).exp();
        match self {
            Kernel::Gaussian => phi,
            Kernel::Gaussian4 => (1.5 - 0.5 * u * u) * phi,
        }
    }

    /// `(K * K)(u) = int K(t) K(u - t) dt`, in closed form for both kernels.
    ///
    /// For the fourth-order kernel, `K = phi - phi''/2`, so the convolution is
    /// `psi - psi'' + psi''''/4` with `psi` the N(0, 2) density.
    pub fn self_convolution(self, u: f64) -> f64 {
        let psi = normal_density(u, 2.0);
        match self {
            Kernel::Gaussian => psi,
            Kernel::Gaussian4 => {
                let u2 = u * u;
                psi * (27.0 / 16.0 - 7.0 * u2 / 16.0 + u2 * u2 / 64.0)
            }
        }
    }

    /// `K(u) = norm * sum_k c_k H_k(u / sqrt(2))` with `H_k` the Hermite functions of
    /// [`crate::gausssum`]; returns `(norm, [(k, c_k)])`.
    pub(crate) fn hermite_form(self) -> (f64, &'static [(usize, f64)]) {
        match self {
            Kernel::Gaussian => (INV_SQRT_2PI, &[(0, 1.0)]),
            Kernel::Gaussian4 => (INV_SQRT_2PI, &[(0, 1.0), (2, -0.25)]),
        }
    }

    /// Same as [`Kernel::hermite_form`] for `K * K`, whose Gaussian factor has variance 2.
    pub(crate) fn convolution_hermite_form(self) -> (f64, &'static [(usize, f64)]) {
        let norm = 0.5 / PI.sqrt();
        match self {
            Kernel::Gaussian => (norm, &[(0, 1.0)]),
            Kernel::Gaussian4 => (norm, &[(0, 1.0), (2, -0.25), (4, 1.0 / 64.0)]),
        }
    }

    /// Draws with density `K`.
    pub fn sample_noise(self, s: &RngStream, n: usize) -> Result<Vec<f64>> {
        if !self.supports_sampling() {
            return Err(Error::Unsupported(format!(
                "kernel '{}' is signed (order {}) and is not a density; it cannot be sampled",
                self.id(),
                self.order()
            )));
        }
        let mut rng = s.rng();
        Ok((0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(Kernel::Gaussian),
            "gauss4" => Ok(Kernel::Gaussian4),
            other => Err(Error::Parse(format!("unknown kernel id '{other}' (expected gauss | gauss4)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadSettings};

    const KERNELS: [Kernel; 2] = [Kernel::Gaussian, Kernel::Gaussian4];

    fn moment(k: Kernel, j: i32) -> f64 {
        integrate(|u| u.powi(j) * k.eval(u), -40.0, 40.0, &QuadSettings::with_rel_tol(1e-12))
            .unwrap()
            .value
    }

    #[test]
    fn pointwise_values() {
        assert!((Kernel::Gaussian.eval(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert!(Kernel::Gaussian4.eval(3f64.sqrt()).abs() < 1e-16);
        assert_eq!(Kernel::Gaussian.eval(1.0), Kernel::Gaussian.eval(-1.0));
        assert!((Kernel::Gaussian.self_convolution(0.0) - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
        assert!((Kernel::Gaussian.self_convolution(0.0) - 0.282_094_8).abs() < 1e-7);
    }

    #[test]
    fn symmetric() {
        for k in KERNELS {
            for &u in &[0.1, 0.9, 2.5, 4.0] {
                assert_eq!(k.eval(u), k.eval(-u));
                assert_eq!(k.self_convolution(u), k.self_convolution(-u));
            }
        }
    }

    #[test]
    fn moment_conditions() {
        for k in KERNELS {
            assert!((moment(k, 0) - 1.0).abs() < 1e-8, "{k} mass");
            for j in 1..k.order() as i32 {
                assert!(moment(k, j).abs() < 1e-8, "{k} moment {j}");
            }
            assert!(moment(k, k.order() as i32).abs() > 0.1);
            // odd moments vanish up to 6 regardless of order
            assert!(moment(k, 5).abs() < 1e-8);
        }
        assert!(moment(Kernel::Gaussian4, 2).abs() < 1e-8);
        assert!(moment(Kernel::Gaussian4, 4) < -1.0);
    }

    #[test]
    fn convolution_matches_quadrature() {
        for k in KERNELS {
            for &u in &[0.0, 0.7, 2.3] {
                let numeric = integrate(|t| k.eval(t) * k.eval(u - t), -40.0, 40.0, &QuadSettings::with_rel_tol(1e-12))
                    .unwrap()
                    .value;
                assert!((numeric - k.self_convolution(u)).abs() < 1e-8, "{k} u={u}");
            }
            let mass = integrate(|u| k.self_convolution(u), -50.0, 50.0, &QuadSettings::with_rel_tol(1e-12))
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn hermite_forms_reproduce_kernels() {
        use crate::gausssum::hermite_function;
        for k in KERNELS {
            for &u in &[0.0, 0.4, 1.7, 3.2] {
                let (norm, terms) = k.hermite_form();
                let v: f64 = terms.iter().map(|&(r, c)| c * hermite_function(r, u / std::f64::consts::SQRT_2)).sum();
                assert!((norm * v - k.eval(u)).abs() < 1e-15);
                let (norm, terms) = k.convolution_hermite_form();
                let v: f64 = terms.iter().map(|&(r, c)| c * hermite_function(r, u / 2.0)).sum();
                assert!((norm * v - k.self_convolution(u)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_noise() {
        let d = Kernel::Gaussian.sample_noise(&RngStream::new(9), 100_000).unwrap();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!(mean.abs() < 0.01);
        let inside = d.iter().filter(|x| x.abs() <= 1.0).count() as f64 / d.len() as f64;
        let expected = statrs::function::erf::erf(1.0 / std::f64::consts::SQRT_2);
        assert!((expected - 0.6827).abs() < 1e-4);
        assert!((inside - expected).abs() < 0.005, "{inside}");
    }

    #[test]
    fn signed_kernel_cannot_sample() {
        let err = Kernel::Gaussian4.sample_noise(&RngStream::new(0), 3).unwrap_err();
        match err {
            Error::Unsupported(msg) => assert!(msg.contains("signed")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn ids_round_trip() {
        for k in KERNELS {
            assert_eq!(k.id().parse::<Kernel>().unwrap(), k);
        }
        assert!("epan".parse::<Kernel>().is_err());
    }
}
