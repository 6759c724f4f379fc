//! Gaussian and t copulas over the structured correlation matrices, and the
//! conditional distributions they induce.
//!
//! The key objects are: the log density of the severity block copula, the
//! conditional mean/scale of the latent frequency score given the severity
//! scores, the conditional frequency CDF built from them, and the joint
//! density of `(N+, Y_1..Y_k)` that the likelihood consumes. Dimension `k`
//! is free (not tied to the claim count): lower-order densities are margins
//! of higher-order ones, so `rho1` and `rho2` keep their marginal meaning.

use crate::corrmat::CorrStructure;
use crate::error::{CrmError, Result};
use crate::margins::{FrequencyFamily, HurdleFrequency, PositiveFrequency, SeverityFamily};
use crate::special::{self, LatentLaw};

/// Copula family; the t copula carries its degrees of freedom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CopulaKind {
    Gaussian,
    StudentT { df: f64 },
}

/// A copula family together with its correlation structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CopulaFamily {
    kind: CopulaKind,
    structure: CorrStructure,
}

/// Conditional mean and scale of the latent frequency score given severity
/// scores: `mu` and `sigma` (Gaussian) or their starred t-copula versions.
#[derive(Clone, Copy, Debug)]
pub struct CondMoments {
    pub mu: f64,
    pub sigma: f64,
}

/// Discrete margin interface: CDF and survival in one accurate pair.
pub trait DiscreteMargin {
    fn cdf(&self, n: i64) -> f64;
    fn sf(&self, n: i64) -> f64;
}

impl DiscreteMargin for PositiveFrequency {
    fn cdf(&self, n: i64) -> f64 {
        PositiveFrequency::cdf(self, n)
    }
    fn sf(&self, n: i64) -> f64 {
        PositiveFrequency::sf(self, n)
    }
}

impl DiscreteMargin for FrequencyFamily {
    fn cdf(&self, n: i64) -> f64 {
        FrequencyFamily::cdf(self, n)
    }
    fn sf(&self, n: i64) -> f64 {
        FrequencyFamily::sf(self, n)
    }
}

impl DiscreteMargin for HurdleFrequency {
    fn cdf(&self, n: i64) -> f64 {
        HurdleFrequency::cdf(self, n)
    }
    fn sf(&self, n: i64) -> f64 {
        if n < 0 {
            1.0
        } else {
            self.p() * self.positive().sf(n)
        }
    }
}

impl CopulaFamily {
    pub fn new(kind: CopulaKind, structure: CorrStructure) -> Result<Self> {
        if let CopulaKind::StudentT { df } = kind {
            if !(df > 0.0) || !df.is_finite() {
                return Err(CrmError::Domain(format!(
                    "t-copula degrees of freedom must be positive, got {df}"
                )));
            }
        }
        Ok(Self { kind, structure })
    }

    pub fn gaussian(structure: CorrStructure) -> Self {
        Self {
            kind: CopulaKind::Gaussian,
            structure,
        }
    }

    pub fn kind(&self) -> CopulaKind {
        self.kind
    }

    pub fn structure(&self) -> &CorrStructure {
        &self.structure
    }

    /// The latent law the scores live on.
    pub fn score_law(&self) -> LatentLaw {
        match self.kind {
            CopulaKind::Gaussian => LatentLaw::Normal,
            CopulaKind::StudentT { df } => LatentLaw::StudentT { df },
        }
    }

    /// The conditional law of the standardized frequency score given k
    /// severity scores: normal, or t with `df + k` degrees of freedom.
    fn cond_law(&self, k: usize) -> LatentLaw {
        match self.kind {
            CopulaKind::Gaussian => LatentLaw::Normal,
            CopulaKind::StudentT { df } => LatentLaw::StudentT { df: df + k as f64 },
        }
    }

    /// Latent score of a probability in (0, 1).
    pub fn score_of(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(CrmError::Domain(format!(
                "copula argument must lie strictly inside (0, 1), got {u}"
            )));
        }
        Ok(match self.kind {
            CopulaKind::Gaussian => special::norm_quantile(u)?,
            CopulaKind::StudentT { df } => special::t_quantile(u, df)?,
        })
    }

    /// Latent score from an accurate (cdf, sf) pair; infinite at the edges.
    fn score_of_pair(&self, cdf: f64, sf: f64) -> f64 {
        match self.kind {
            CopulaKind::Gaussian => special::norm_score(cdf, sf),
            CopulaKind::StudentT { df } => special::t_score(cdf, sf, df),
        }
    }

    fn scores(&self, u: &[f64]) -> Result<Vec<f64>> {
        u.iter().map(|&ui| self.score_of(ui)).collect()
    }

    /// Log density of the severity-block copula at `u`.
    pub fn sev_copula_logdensity(&self, u: &[f64]) -> Result<f64> {
        if u.is_empty() {
            return Err(CrmError::Domain("copula needs k >= 1 arguments".into()));
        }
        let q = self.scores(u)?;
        self.sev_logdensity_scores(&q)
    }

    /// Same log density evaluated at precomputed latent scores.
    pub(crate) fn sev_logdensity_scores(&self, q: &[f64]) -> Result<f64> {
        let k = q.len();
        let forms = self.structure.quad_forms(q)?;
        let log_det = self.structure.log_det_sev(k);
        match self.kind {
            CopulaKind::Gaussian => {
                let qq: f64 = q.iter().map(|x| x * x).sum();
                Ok(-0.5 * log_det - 0.5 * (forms.q_inv_q - qq))
            }
            CopulaKind::StudentT { df } => {
                let kf = k as f64;
                let mvt = special::ln_gamma(0.5 * (df + kf))
                    - special::ln_gamma(0.5 * df)
                    - 0.5 * kf * (df * std::f64::consts::PI).ln()
                    - 0.5 * log_det
                    - 0.5 * (df + kf) * (forms.q_inv_q / df).ln_1p();
                let margins: f64 = q.iter().map(|&x| special::ln_t_pdf(x, df)).sum();
                Ok(mvt - margins)
            }
        }
    }

    /// Conditional mean/scale of the latent frequency score given `u`.
    pub fn cond_moments(&self, u: &[f64]) -> Result<CondMoments> {
        let q = self.scores(u)?;
        self.cond_moments_scores(&q)
    }

    pub(crate) fn cond_moments_scores(&self, q: &[f64]) -> Result<CondMoments> {
        let k = q.len();
        let forms = self.structure.quad_forms(q)?;
        let rho1 = self.structure.rho1();
        let var = 1.0 - rho1 * rho1 * forms.one_inv_one;
        if !(var > 0.0) {
            return Err(CrmError::NotPositiveDefinite { k });
        }
        let mu = rho1 * forms.one_inv_q;
        let sigma = match self.kind {
            CopulaKind::Gaussian => var.sqrt(),
            CopulaKind::StudentT { df } => {
                (var * (df + forms.q_inv_q) / (df + k as f64)).sqrt()
            }
        };
        Ok(CondMoments { mu, sigma })
    }

    /// `P(N <= n | U = u)` for any discrete margin on the frequency slot.
    pub fn cond_freq_cdf<F: DiscreteMargin>(&self, freq: &F, n: i64, u: &[f64]) -> Result<f64> {
        let q = self.scores(u)?;
        let m = self.cond_moments_scores(&q)?;
        Ok(self.cond_freq_cdf_inner(freq, n, &m, q.len()))
    }

    fn cond_freq_cdf_inner<F: DiscreteMargin>(
        &self,
        freq: &F,
        n: i64,
        m: &CondMoments,
        k: usize,
    ) -> f64 {
        let z = self.score_of_pair(freq.cdf(n), freq.sf(n));
        if z == f64::NEG_INFINITY {
            return 0.0;
        }
        if z == f64::INFINITY {
            return 1.0;
        }
        self.cond_law(k).cdf((z - m.mu) / m.sigma)
    }

    /// Log joint density of `(N+ = n, Y = y)` for a positive frequency part
    /// and a common severity margin; `y` may have any length `k >= 1`.
    pub fn joint_logdensity(
        &self,
        pos: &PositiveFrequency,
        sev: &SeverityFamily,
        n: u32,
        y: &[f64],
    ) -> Result<f64> {
        if n < 1 {
            return Err(CrmError::Domain(
                "joint density is defined for positive claim counts".into(),
            ));
        }
        if y.is_empty() {
            return Err(CrmError::Domain("severity vector must be non-empty".into()));
        }
        let mut q = Vec::with_capacity(y.len());
        let mut ln_margins = 0.0;
        for &yj in y {
            if !(yj > 0.0) || !yj.is_finite() {
                return Err(CrmError::Domain(format!(
                    "severities must be positive, got {yj}"
                )));
            }
            let (cdf, sf) = sev.cdf_sf(yj);
            let score = self.score_of_pair(cdf, sf);
            if !score.is_finite() {
                return Err(CrmError::Domain(format!(
                    "severity {yj} sits at the edge of the margin's support"
                )));
            }
            q.push(score);
            ln_margins += sev.ln_pdf(yj);
        }
        let ln_copula = self.sev_logdensity_scores(&q)?;
        let m = self.cond_moments_scores(&q)?;
        let ln_mass = self.ln_freq_band(pos, n, &m, q.len());
        if !ln_mass.is_finite() {
            return Err(CrmError::NonPositiveMass { n });
        }
        Ok(ln_margins + ln_copula + ln_mass)
    }

    // log of P(N+ = n | scores) as a stable CDF difference on the latent scale
    fn ln_freq_band(
        &self,
        pos: &PositiveFrequency,
        n: u32,
        m: &CondMoments,
        k: usize,
    ) -> f64 {
        let z_hi = self.score_of_pair(pos.cdf(n as i64), pos.sf(n as i64));
        let z_lo = self.score_of_pair(pos.cdf(n as i64 - 1), pos.sf(n as i64 - 1));
        let hi = if z_hi == f64::INFINITY {
            f64::INFINITY
        } else {
            (z_hi - m.mu) / m.sigma
        };
        let lo = if z_lo == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (z_lo - m.mu) / m.sigma
        };
        self.cond_law(k).ln_prob_interval(lo, hi)
    }

    /// Log conditional density of `Y = y` given `N+ = n`.
    pub fn cond_severity_logdensity(
        &self,
        pos: &PositiveFrequency,
        sev: &SeverityFamily,
        n: u32,
        y: &[f64],
    ) -> Result<f64> {
        let ln_pmf = pos.ln_pmf(n);
        if !ln_pmf.is_finite() {
            return Err(CrmError::Domain(format!(
                "conditional density needs f1+({n}) > 0"
            )));
        }
        Ok(self.joint_logdensity(pos, sev, n, y)? - ln_pmf)
    }
}
