//! Marginal frequency and severity families.
//!
//! Frequency is Poisson (the nuisance slot of the frequency family is
//! reserved and unused for Poisson); severity is a mean-dispersion gamma
//! with `E[Y] = xi` and `Var[Y] = nu xi^2`, i.e. shape `1/nu` and scale
//! `xi nu`. The hurdle decomposition splits any base frequency into a
//! zero/positive Bernoulli part and a zero-truncated positive part.

use crate::error::{CrmError, Result};
use crate::special;
use crate::Probability;

/// Cap on support scans for zero-truncated quantiles and series.
pub const FREQ_SUPPORT_CAP: u32 = 10_000;

/// Base claim-count family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrequencyFamily {
    Poisson { lambda: f64 },
}

impl FrequencyFamily {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CrmError::Domain(format!(
                "Poisson mean must be positive, got {lambda}"
            )));
        }
        Ok(FrequencyFamily::Poisson { lambda })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FrequencyFamily::Poisson { lambda } => lambda,
        }
    }

    pub fn ln_pmf(&self, n: u32) -> f64 {
        match *self {
            FrequencyFamily::Poisson { lambda } => {
                n as f64 * lambda.ln() - lambda - special::ln_gamma(n as f64 + 1.0)
            }
        }
    }

    pub fn pmf(&self, n: u32) -> f64 {
        self.ln_pmf(n).exp()
    }

    /// `P(N <= n)`; exact via the upper incomplete gamma identity.
    pub fn cdf(&self, n: i64) -> f64 {
        if n < 0 {
            return 0.0;
        }
        match *self {
            FrequencyFamily::Poisson { lambda } => special::gammq(n as f64 + 1.0, lambda),
        }
    }

    /// `P(N > n)`, accurate deep in the right tail.
    pub fn sf(&self, n: i64) -> f64 {
        if n < 0 {
            return 1.0;
        }
        match *self {
            FrequencyFamily::Poisson { lambda } => special::gammp(n as f64 + 1.0, lambda),
        }
    }
}

/// Zero-truncated positive claim-count law `F1+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PositiveFrequency {
    ZeroTruncPoisson {
        lambda: f64,
        /// normalizer `1 - e^{-lambda}`
        mass_pos: f64,
    },
}

impl PositiveFrequency {
    pub fn zero_trunc_poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CrmError::Domain(format!(
                "zero-truncated Poisson mean must be positive, got {lambda}"
            )));
        }
        let mass_pos = -(-lambda).exp_m1();
        if mass_pos < 1e-15 {
            return Err(CrmError::DegenerateFrequency);
        }
        Ok(PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos })
    }

    pub fn pmf(&self, n: u32) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => {
                (n as f64 * lambda.ln() - lambda - special::ln_gamma(n as f64 + 1.0)).exp()
                    / mass_pos
            }
        }
    }

    pub fn ln_pmf(&self, n: u32) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => {
                n as f64 * lambda.ln() - lambda - special::ln_gamma(n as f64 + 1.0)
                    - mass_pos.ln()
            }
        }
    }

    /// `F1+(n)`; 0 for n < 1. Direct summation keeps small left-tail values
    /// exact; the companion [`Self::sf`] covers the right tail.
    pub fn cdf(&self, n: i64) -> f64 {
        if n < 1 {
            return 0.0;
        }
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => {
                let mut term = lambda * (-lambda).exp();
                let mut acc = term;
                let mut j = 1u32;
                while (j as i64) < n && j < FREQ_SUPPORT_CAP {
                    j += 1;
                    term *= lambda / j as f64;
                    acc += term;
                }
                (acc / mass_pos).min(1.0)
            }
        }
    }

    /// `1 - F1+(n)`, exact in the right tail via the incomplete gamma.
    pub fn sf(&self, n: i64) -> f64 {
        if n < 1 {
            return 1.0;
        }
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => {
                special::gammp(n as f64 + 1.0, lambda) / mass_pos
            }
        }
    }

    /// `E[N+]`.
    pub fn mean(&self) -> f64 {
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => lambda / mass_pos,
        }
    }

    /// Smallest `n >= 1` with `F1+(n) >= u`; scans upward (expected length
    /// is ~1 for small lambda), capped at [`FREQ_SUPPORT_CAP`].
    pub fn quantile(&self, u: f64) -> u32 {
        match *self {
            PositiveFrequency::ZeroTruncPoisson { lambda, mass_pos } => {
                let target = u * mass_pos;
                let mut term = lambda * (-lambda).exp();
                let mut acc = term;
                let mut n = 1u32;
                while acc < target && n < FREQ_SUPPORT_CAP {
                    n += 1;
                    term *= lambda / n as f64;
                    acc += term;
                }
                n
            }
        }
    }

    /// Largest n needed to cover all but `1e-12` of the positive mass.
    pub fn support_cutoff(&self) -> u32 {
        let mut n = 1;
        while self.sf(n as i64) > 1e-12 && n < FREQ_SUPPORT_CAP {
            n += 1;
        }
        n
    }
}

/// Hurdle frequency: `P(N = 0) = 1 - p`, and `N | N > 0 ~ F1+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HurdleFrequency {
    p: f64,
    ln_p: f64,
    ln_1mp: f64,
    pos: PositiveFrequency,
}

impl HurdleFrequency {
    /// General hurdle with its own zero/positive split.
    pub fn new(p: Probability, pos: PositiveFrequency) -> Self {
        let p = p.get();
        Self {
            p,
            ln_p: p.ln(),
            ln_1mp: (1.0 - p).ln(),
            pos,
        }
    }

    /// The shared-parameter special case: `p = 1 - F1(0)` and `F1+` the
    /// zero-truncation of the base family, so that the induced marginal of N
    /// is exactly the base law.
    pub fn from_base(base: &FrequencyFamily) -> Result<Self> {
        match *base {
            FrequencyFamily::Poisson { lambda } => {
                let p = -(-lambda).exp_m1();
                if p < 1e-15 {
                    return Err(CrmError::DegenerateFrequency);
                }
                Ok(Self {
                    p,
                    ln_p: p.ln(),
                    // ln(1 - p) = -lambda exactly for the Poisson hurdle
                    ln_1mp: -lambda,
                    pos: PositiveFrequency::zero_trunc_poisson(lambda)?,
                })
            }
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ln_p(&self) -> f64 {
        self.ln_p
    }

    pub fn ln_1mp(&self) -> f64 {
        self.ln_1mp
    }

    pub fn positive(&self) -> &PositiveFrequency {
        &self.pos
    }

    /// Marginal CDF of N including the zero mass.
    pub fn cdf(&self, n: i64) -> f64 {
        if n < 0 {
            0.0
        } else {
            1.0 - self.p + self.p * self.pos.cdf(n)
        }
    }

    /// Marginal pmf of N.
    pub fn pmf(&self, n: u32) -> f64 {
        if n == 0 {
            1.0 - self.p
        } else {
            self.p * self.pos.pmf(n)
        }
    }

    /// `E[N] = p E[N+]`.
    pub fn mean(&self) -> f64 {
        self.p * self.pos.mean()
    }
}

/// Mean-dispersion gamma severity: `E[Y] = xi`, `Var[Y] = nu xi^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeverityFamily {
    xi: f64,
    nu: f64,
    shape: f64,
    scale: f64,
    ln_gamma_shape: f64,
}

impl SeverityFamily {
    pub fn gamma(xi: f64, nu: f64) -> Result<Self> {
        if !(xi > 0.0 && nu > 0.0) || !xi.is_finite() || !nu.is_finite() {
            return Err(CrmError::Domain(format!(
                "gamma severity requires xi > 0 and nu > 0, got xi = {xi}, nu = {nu}"
            )));
        }
        let shape = 1.0 / nu;
        Ok(Self {
            xi,
            nu,
            shape,
            scale: xi * nu,
            ln_gamma_shape: special::ln_gamma(shape),
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mean(&self) -> f64 {
        self.xi
    }

    pub fn variance(&self) -> f64 {
        self.nu * self.xi * self.xi
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * y.ln() - y / self.scale
            - self.shape * self.scale.ln()
            - self.ln_gamma_shape
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            special::gammp(self.shape, y / self.scale)
        }
    }

    pub fn sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            1.0
        } else {
            special::gammq(self.shape, y / self.scale)
        }
    }

    /// `(cdf, sf)` in one pass, with the accurate side computed directly.
    pub fn cdf_sf(&self, y: f64) -> (f64, f64) {
        if y <= 0.0 {
            (0.0, 1.0)
        } else {
            special::gamm_pq(self.shape, y / self.scale)
        }
    }

    /// Inverse CDF; round-trips the CDF to better than 1e-9.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(CrmError::Domain(format!(
                "gamma quantile requires 0 < p < 1, got {p}"
            )));
        }
        Ok(self.scale * special::inv_gammp(p, self.shape))
    }

    pub(crate) fn quantile_raw(&self, p: f64) -> f64 {
        self.scale * special::inv_gammp(p, self.shape)
    }
}
