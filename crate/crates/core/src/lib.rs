//! Bootstrap confidence intervals for asymptotically linear estimators whose
//! nuisance is a kernel density estimate or a regression fit.
//!
//! Two target parameters are covered: the average density value `∫ p²` and
//! the G-computed mean of the control outcome among the treated. For each
//! one the crate provides plug-in, one-step and related constructions,
//! empirical and smooth bootstrap schemes, and five interval methods.
//! [`sim`] runs Monte Carlo coverage studies over all of these.
//!
//! ```
//! use bootlin::density_param::{report, Construction};
//! use bootlin::kde::{select_bandwidth, BandwidthRule, DensityEstimate, Sample};
//! use bootlin::kernels::Kernel;
//! use bootlin::prng::RngStream;
//!
//! let x = Sample::new(RngStream::new(1).standard_normal(500)).unwrap();
//! let h = select_bandwidth(&BandwidthRule::Silverman, &x).unwrap().h;
//! let eta = DensityEstimate::fit(&x, Kernel::Gaussian, h).unwrap();
//! let r = report(Construction::OneStep, &eta, None, &x).unwrap();
//! assert!((r.psi_hat - 0.2821).abs() < 0.05);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod density_param;
pub mod error;
pub mod gausssum;
pub mod gcomp;
pub mod intervals;
pub mod kde;
pub mod kernels;
pub mod prng;
pub mod quad;
pub mod sim;
pub mod vstat;

pub use error::{Error, Result};
