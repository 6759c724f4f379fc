//! Dependent collective risk models built from Gaussian and t copulas.
//!
//! A policyholder's claim count `N` and its individual claim severities
//! `Y_1, ..., Y_N` are linked through an elliptical copula whose correlation
//! matrix carries one parameter for frequency-severity dependence (`rho1`)
//! and one for severity-severity dependence (`rho2`), in either an
//! equicorrelated or an AR(1) layout. The crate provides:
//!
//! * closed-form determinants, inverses and quadratic forms for the
//!   structured correlation matrices ([`corrmat`]),
//! * the joint density of the discrete frequency margin and continuous
//!   severity margins, with a hurdle at zero claims ([`copula`], [`model`]),
//! * maximum-likelihood estimation under hurdle regression ([`fit`]),
//! * exact moment and rank-correlation formulas plus a reproducible
//!   exact sampler ([`model`]),
//! * simulation-study, risk-measure and kernel-copula harnesses
//!   ([`analytics`]).
//!
//! Monte Carlo and likelihood loops are data-parallel via `rayon` when the
//! default `parallel` feature is enabled; results are bit-identical across
//! worker counts because every random stream is indexed and every reduction
//! uses a canonical summation order.

pub mod analytics;
pub mod copula;
pub mod corrmat;
pub mod error;
pub mod exec;
pub mod fit;
pub mod margins;
pub mod model;
pub mod quad;
pub mod rng;
pub mod special;

pub use error::{CrmError, Result};

/// A checked probability value in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(CrmError::Domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = CrmError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}
