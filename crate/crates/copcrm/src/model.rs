//! The observed-data dependent collective risk model and its regression
//! extension: hurdle at zero claims, copula-linked positive part, exact
//! moments, rank correlations, and a reproducible exact sampler.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;

use crate::copula::{CopulaFamily, CopulaKind};
use crate::corrmat::{CholeskyFactor, CorrKind, CorrStructure};
use crate::error::{CrmError, Result};
use crate::exec::{pairwise_sum, try_map_indexed};
use crate::margins::{FrequencyFamily, HurdleFrequency, PositiveFrequency, SeverityFamily};
use crate::quad;
use crate::rng::unit_open;
use crate::special;
use crate::Probability;

/// Complete parameter set of one dependent collective risk model.
#[derive(Clone, Copy, Debug)]
pub struct CRMParams {
    pub hurdle: HurdleFrequency,
    pub sev: SeverityFamily,
    pub copula: CopulaFamily,
}

impl CRMParams {
    pub fn new(hurdle: HurdleFrequency, sev: SeverityFamily, copula: CopulaFamily) -> Self {
        Self { hurdle, sev, copula }
    }
}

/// One policyholder: covariates, claim count, severities.
#[derive(Clone, Debug)]
pub struct PolicyRecord {
    pub id: String,
    /// frequency design row (intercept first)
    pub x: Vec<f64>,
    /// severity design row
    pub w: Vec<f64>,
    /// hurdle design row for the separate-hurdle mode
    pub x_star: Option<Vec<f64>>,
    pub n: u32,
    pub y: Vec<f64>,
}

impl PolicyRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n as usize != self.y.len() {
            return Err(CrmError::Domain(format!(
                "policy {}: claim count {} does not match {} severities",
                self.id,
                self.n,
                self.y.len()
            )));
        }
        if let Some(bad) = self.y.iter().find(|v| !(**v > 0.0)) {
            return Err(CrmError::Domain(format!(
                "policy {}: severities must be positive, got {bad}",
                self.id
            )));
        }
        Ok(())
    }
}

/// How the hurdle probability is parameterized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HurdleMode {
    /// `p_i = 1 - F1(0; lambda_i)`: one coefficient vector drives both the
    /// zero and positive parts, and the marginal of N is the base family.
    SharedLambda,
    /// Separate logit-linked hurdle coefficients on their own design row.
    Separate,
}

/// Degrees-of-freedom handling for the t copula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DfSetting {
    Fixed(f64),
    Estimated,
}

/// Copula family choice at the model-specification level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CopulaSpec {
    Gaussian,
    StudentT(DfSetting),
}

/// Model specification: everything that is not a free parameter.
#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub hurdle: HurdleMode,
    pub copula: CopulaSpec,
    pub structure: CorrKind,
}

/// Free parameters on the natural scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub beta: Vec<f64>,
    pub beta_star: Option<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub nu: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// present only when the t-copula df is estimated
    pub df: Option<f64>,
}

/// Exact moments of the aggregate loss `S` per policy-year.
#[derive(Clone, Copy, Debug)]
pub struct PortfolioMoments {
    /// `E[S]`
    pub expected_aggregate: f64,
    /// `Cov(N, S)`
    pub cov_freq_aggregate: f64,
    /// `Cov(N, M | N > 0)` with M the average severity
    pub cov_freq_avgsev_pos: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ModelSpec {
    /// The copula family shared by every policy under this specification.
    pub fn copula_family(&self, pv: &ParamVector) -> Result<CopulaFamily> {
        let structure = CorrStructure::new(self.structure, pv.rho1, pv.rho2)?;
        let kind = match self.copula {
            CopulaSpec::Gaussian => CopulaKind::Gaussian,
            CopulaSpec::StudentT(DfSetting::Fixed(df)) => CopulaKind::StudentT { df },
            CopulaSpec::StudentT(DfSetting::Estimated) => CopulaKind::StudentT {
                df: pv.df.ok_or_else(|| {
                    CrmError::Domain("estimated t-copula df missing from parameters".into())
                })?,
            },
        };
        CopulaFamily::new(kind, structure)
    }

    /// Per-policy frequency and severity margins from the link functions.
    pub fn policy_margins(
        &self,
        pv: &ParamVector,
        rec: &PolicyRecord,
    ) -> Result<(HurdleFrequency, SeverityFamily)> {
        let lambda = dot(&rec.x, &pv.beta).exp();
        let xi = dot(&rec.w, &pv.gamma).exp();
        let sev = SeverityFamily::gamma(xi, pv.nu)?;
        let hurdle = match self.hurdle {
            HurdleMode::SharedLambda => {
                HurdleFrequency::from_base(&FrequencyFamily::poisson(lambda)?)?
            }
            HurdleMode::Separate => {
                let row = rec.x_star.as_deref().ok_or_else(|| {
                    CrmError::Domain(format!(
                        "policy {}: separate hurdle mode needs hurdle covariates",
                        rec.id
                    ))
                })?;
                let bs = pv.beta_star.as_deref().ok_or_else(|| {
                    CrmError::Domain("separate hurdle mode needs beta_star".into())
                })?;
                let p = logistic(dot(row, bs));
                HurdleFrequency::new(
                    Probability::new(p)?,
                    PositiveFrequency::zero_trunc_poisson(lambda)?,
                )
            }
        };
        Ok((hurdle, sev))
    }

    /// Number of free parameters under this specification.
    pub fn dim(&self, pv: &ParamVector) -> usize {
        pv.beta.len()
            + pv.beta_star.as_ref().map_or(0, Vec::len)
            + pv.gamma.len()
            + 3
            + usize::from(matches!(self.copula, CopulaSpec::StudentT(DfSetting::Estimated)))
    }
}

/// Log density of one observed record `(n, y)` under the full model:
/// `ln(1 - p)` at `n = 0`, otherwise `ln p` plus the positive-part joint
/// log density at `k = n`.
pub fn observed_logdensity(params: &CRMParams, n: u32, y: &[f64]) -> Result<f64> {
    if n as usize != y.len() {
        return Err(CrmError::Domain(format!(
            "claim count {n} does not match {} severities",
            y.len()
        )));
    }
    if n == 0 {
        return Ok(params.hurdle.ln_1mp());
    }
    Ok(params.hurdle.ln_p()
        + params
            .copula
            .joint_logdensity(params.hurdle.positive(), &params.sev, n, y)?)
}

/// Portfolio log likelihood: the sum of observed log densities with
/// per-policy parameters from the links. Deterministic regardless of worker
/// count (indexed map + canonical pairwise summation).
pub fn portfolio_loglik(
    spec: &ModelSpec,
    pv: &ParamVector,
    data: &[PolicyRecord],
) -> Result<f64> {
    let copula = spec.copula_family(pv)?;
    let terms = try_map_indexed(data.len(), |i| policy_term(spec, pv, &copula, &data[i]))?;
    Ok(pairwise_sum(&terms))
}

/// Single-threaded reference path with the same summation order; the result
/// is bit-identical to [`portfolio_loglik`].
pub fn portfolio_loglik_serial(
    spec: &ModelSpec,
    pv: &ParamVector,
    data: &[PolicyRecord],
) -> Result<f64> {
    let copula = spec.copula_family(pv)?;
    let terms = data
        .iter()
        .map(|rec| policy_term(spec, pv, &copula, rec))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

fn policy_term(
    spec: &ModelSpec,
    pv: &ParamVector,
    copula: &CopulaFamily,
    rec: &PolicyRecord,
) -> Result<f64> {
    let (hurdle, sev) = spec.policy_margins(pv, rec)?;
    let params = CRMParams::new(hurdle, sev, *copula);
    let v = observed_logdensity(&params, rec.n, &rec.y)?;
    if v.is_nan() {
        return Err(CrmError::NonFinitePolicy {
            policy_id: rec.id.clone(),
        });
    }
    Ok(v)
}

// `I_n = integral of y h(n, y) dy` for k = 1, via the substitution u = F2(y).
fn severity_weighted_band(params: &CRMParams, n: u32, tol: f64) -> Result<f64> {
    let pos = params.hurdle.positive();
    let sev = params.sev;
    let copula = params.copula;
    quad::integrate(
        |u| {
            let y = sev.quantile_raw(u);
            let ln_h = copula
                .joint_logdensity(pos, &sev, n, &[y])
                .unwrap_or(f64::NEG_INFINITY);
            y * (ln_h - sev.ln_pdf(y)).exp()
        },
        1e-14,
        1.0 - 1e-14,
        tol,
    )
}

/// Exact moments `E[S]`, `Cov(N, S)` and `Cov(N, M | N > 0)`.
///
/// The inner integrals run over the probability scale to tolerance `tol`;
/// the outer sums truncate once the positive part's survival mass drops
/// below 1e-12.
pub fn moments(params: &CRMParams, tol: f64) -> Result<PortfolioMoments> {
    let pos = params.hurdle.positive();
    let p = params.hurdle.p();
    let cutoff = pos.support_cutoff();
    let mut sum_i = 0.0; // E[M | N > 0]
    let mut sum_ni = 0.0; // E[S | N > 0] = E[NM | N > 0]
    let mut sum_n2i = 0.0;
    for n in 1..=cutoff {
        let i_n = severity_weighted_band(params, n, tol)?;
        let nf = n as f64;
        sum_i += i_n;
        sum_ni += nf * i_n;
        sum_n2i += nf * nf * i_n;
    }
    let mean_pos = pos.mean();
    let expected_aggregate = p * sum_ni;
    let cov_freq_aggregate = p * sum_n2i - (p * mean_pos) * expected_aggregate;
    let cov_freq_avgsev_pos = sum_ni - mean_pos * sum_i;
    Ok(PortfolioMoments {
        expected_aggregate,
        cov_freq_aggregate,
        cov_freq_avgsev_pos,
    })
}

/// Spearman's rho between two severities under the Gaussian copula:
/// `(6/pi) asin(rho2 / 2)` for the equicorrelated structure and
/// `(6/pi) asin(rho2^lag / 2)` for AR(1) severities `lag` claims apart.
pub fn spearman_sev_sev(params: &CRMParams, lag: u32) -> Result<f64> {
    if lag == 0 {
        return Err(CrmError::Domain("lag must be a positive integer".into()));
    }
    if !matches!(params.copula.kind(), CopulaKind::Gaussian) {
        return Err(CrmError::Domain(
            "closed-form Spearman's rho requires the Gaussian copula".into(),
        ));
    }
    let rho2 = params.copula.structure().rho2();
    let eff = match params.copula.structure().kind() {
        CorrKind::Equi => rho2,
        CorrKind::Ar => rho2.powi(lag as i32),
    };
    Ok(6.0 / std::f64::consts::PI * (eff / 2.0).asin())
}

/// Population Spearman's rho between the positive claim count and one
/// severity, with the discrete margin entering through its mid-distribution
/// grades (the quantity the tie-averaged sample rank correlation estimates).
pub fn spearman_freq_sev(params: &CRMParams, tol: f64) -> Result<f64> {
    if !matches!(params.copula.kind(), CopulaKind::Gaussian) {
        return Err(CrmError::Domain(
            "closed-form Spearman's rho requires the Gaussian copula".into(),
        ));
    }
    let rho1 = params.copula.structure().rho1();
    if rho1 == 0.0 {
        return Ok(0.0);
    }
    let pos = params.hurdle.positive();
    let cutoff = pos.support_cutoff();
    // E[Phi(z1) | z0 = z] = Phi(rho1 z / sqrt(2 - rho1^2))
    let slope = rho1 / (2.0 - rho1 * rho1).sqrt();
    let mut e_grade_v = 0.0;
    let mut var_grade = 0.0;
    for n in 1..=cutoff {
        let f_n = pos.pmf(n);
        if f_n <= 0.0 {
            continue;
        }
        let grade = pos.cdf(n as i64) - 0.5 * f_n;
        var_grade += f_n * grade * grade;
        let lo = special::norm_score(pos.cdf(n as i64 - 1), pos.sf(n as i64 - 1))
            .clamp(-9.0, 9.0);
        let hi = special::norm_score(pos.cdf(n as i64), pos.sf(n as i64)).clamp(-9.0, 9.0);
        if hi <= lo {
            continue;
        }
        let seg = quad::integrate(
            |z| special::norm_pdf(z) * special::norm_cdf(slope * z),
            lo,
            hi,
            tol / cutoff as f64,
        )?;
        e_grade_v += grade * seg;
    }
    var_grade -= 0.25;
    if var_grade <= 0.0 {
        return Err(CrmError::Domain(
            "degenerate positive frequency: rank correlation undefined".into(),
        ));
    }
    Ok((e_grade_v - 0.25) / (var_grade / 12.0).sqrt())
}

/// Read-mostly cache of conditional Cholesky factors, keyed by order.
pub struct CholCache {
    structure: CorrStructure,
    inner: RwLock<HashMap<usize, Arc<CholeskyFactor>>>,
}

impl CholCache {
    pub fn new(structure: CorrStructure) -> Self {
        Self {
            structure,
            inner: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, k: usize) -> Result<Arc<CholeskyFactor>> {
        if let Some(f) = self.inner.read().expect("chol cache poisoned").get(&k) {
            return Ok(Arc::clone(f));
        }
        let fresh = Arc::new(self.structure.conditional_chol(k)?);
        let mut guard = self.inner.write().expect("chol cache poisoned");
        Ok(Arc::clone(guard.entry(k).or_insert(fresh)))
    }
}

// keep copula-scale uniforms strictly inside (0, 1)
fn clamp_unit(u: f64) -> f64 {
    u.clamp(1e-300, 1.0 - 1e-16)
}

/// Draw one policy `(n, y_1..y_n)` from the exact model law.
///
/// The latent construction follows the copula definition: a frequency score,
/// severity scores from their conditional law given it (one shared chi-square
/// mixing variable for the whole latent vector in the t case), then inverse
/// CDFs on both margins.
pub fn sample_policy<R: Rng>(
    params: &CRMParams,
    cache: &CholCache,
    rng: &mut R,
) -> Result<(u32, Vec<f64>)> {
    let p = params.hurdle.p();
    if unit_open(rng) > p {
        return Ok((0, Vec::new()));
    }
    let pos = params.hurdle.positive();
    let rho1 = params.copula.structure().rho1();
    match params.copula.kind() {
        CopulaKind::Gaussian => {
            let u0 = unit_open(rng);
            let z0 = special::norm_quantile(u0)?;
            let n = pos.quantile(u0);
            let chol = cache.get(n as usize)?;
            let eps: Vec<f64> = (0..n)
                .map(|_| special::norm_quantile(unit_open(rng)).expect("open unit"))
                .collect();
            let noise = chol.mul_vec(&eps);
            let y = noise
                .iter()
                .map(|g| {
                    params
                        .sev
                        .quantile_raw(clamp_unit(special::norm_cdf(rho1 * z0 + g)))
                })
                .collect();
            Ok((n, y))
        }
        CopulaKind::StudentT { df } => {
            // one mixing variable scales the entire (k+1)-dimensional vector
            let w = 2.0 * special::inv_gammp(unit_open(rng), 0.5 * df);
            let s = (w / df).sqrt().max(1e-154);
            let z0 = special::norm_quantile(unit_open(rng))?;
            let u0 = clamp_unit(special::t_cdf_raw(z0 / s, df));
            let n = pos.quantile(u0);
            let chol = cache.get(n as usize)?;
            let eps: Vec<f64> = (0..n)
                .map(|_| special::norm_quantile(unit_open(rng)).expect("open unit"))
                .collect();
            let noise = chol.mul_vec(&eps);
            let y = noise
                .iter()
                .map(|g| {
                    let t = (rho1 * z0 + g) / s;
                    params
                        .sev
                        .quantile_raw(clamp_unit(special::t_cdf_raw(t, df)))
                })
                .collect();
            Ok((n, y))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn gaussian_params(
        lambda: f64,
        xi: f64,
        nu: f64,
        rho1: f64,
        rho2: f64,
    ) -> CRMParams {
        let hurdle = HurdleFrequency::from_base(&FrequencyFamily::poisson(lambda).unwrap())
            .unwrap();
        let sev = SeverityFamily::gamma(xi, nu).unwrap();
        let copula =
            CopulaFamily::gaussian(CorrStructure::new(CorrKind::Equi, rho1, rho2).unwrap());
        CRMParams::new(hurdle, sev, copula)
    }

    #[test]
    fn zero_branch_is_log_one_minus_p() {
        let hurdle = HurdleFrequency::new(
            Probability::new(0.1).unwrap(),
            PositiveFrequency::zero_trunc_poisson(1.0).unwrap(),
        );
        let sev = SeverityFamily::gamma(1.0, 1.0).unwrap();
        let copula =
            CopulaFamily::gaussian(CorrStructure::new(CorrKind::Equi, 0.0, 0.1).unwrap());
        let params = CRMParams::new(hurdle, sev, copula);
        let got = observed_logdensity(&params, 0, &[]).unwrap();
        assert_abs_diff_eq!(got, 0.9f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn independence_factorization() {
        let params = gaussian_params(1.0, 2.0, 0.7, 0.0, 0.0);
        let y = [0.8, 3.1];
        let got = observed_logdensity(&params, 2, &y).unwrap();
        let want = params.hurdle.ln_p()
            + params.hurdle.positive().ln_pmf(2)
            + y.iter().map(|&v| params.sev.ln_pdf(v)).sum::<f64>();
        assert_abs_diff_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn total_mass_is_one() {
        let params = gaussian_params(1.0, 1.5, 0.7, 0.3, 0.2);
        let pos = params.hurdle.positive();
        let mut total = 1.0 - params.hurdle.p();
        for n in 1..=pos.support_cutoff() {
            let mass = quad::integrate(
                |u| {
                    let y = params.sev.quantile_raw(u);
                    (observed_logdensity(&params, n, &[y]).unwrap()
                        - params.sev.ln_pdf(y))
                    .exp()
                },
                1e-12,
                1.0 - 1e-12,
                1e-9,
            )
            .unwrap();
            total += mass;
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn loglik_is_additive_over_policies() {
        let spec = ModelSpec {
            hurdle: HurdleMode::SharedLambda,
            copula: CopulaSpec::Gaussian,
            structure: CorrKind::Equi,
        };
        let pv = ParamVector {
            beta: vec![-1.0, 0.4],
            beta_star: None,
            gamma: vec![0.5, -0.2],
            nu: 0.7,
            rho1: 0.1,
            rho2: 0.15,
            df: None,
        };
        let rec = |id: &str, x1: f64, n: u32, y: Vec<f64>| PolicyRecord {
            id: id.into(),
            x: vec![1.0, x1],
            w: vec![1.0, x1],
            x_star: None,
            n,
            y,
        };
        let a = vec![rec("a", 0.0, 0, vec![]), rec("b", 1.0, 2, vec![0.5, 1.8])];
        let b = vec![rec("c", 1.0, 1, vec![2.5])];
        let both: Vec<PolicyRecord> = a.iter().chain(&b).cloned().collect();
        let la = portfolio_loglik(&spec, &pv, &a).unwrap();
        let lb = portfolio_loglik(&spec, &pv, &b).unwrap();
        let lab = portfolio_loglik(&spec, &pv, &both).unwrap();
        assert_relative_eq!(lab, la + lb, max_relative = 1e-12);
        // all-zero portfolio reduces to the hurdle mass
        let zeros = vec![rec("z1", 0.0, 0, vec![]), rec("z2", 1.0, 0, vec![])];
        let lz = portfolio_loglik(&spec, &pv, &zeros).unwrap();
        let want: f64 = zeros
            .iter()
            .map(|r| -((1.0f64).exp().powf(0.0) * dot(&r.x, &pv.beta).exp()))
            .sum();
        assert_relative_eq!(lz, want, max_relative = 1e-12);
    }

    #[test]
    fn parallel_and_serial_loglik_agree_bitwise() {
        let spec = ModelSpec {
            hurdle: HurdleMode::SharedLambda,
            copula: CopulaSpec::Gaussian,
            structure: CorrKind::Equi,
        };
        let pv = ParamVector {
            beta: vec![-1.2, 0.3],
            beta_star: None,
            gamma: vec![0.8, 0.1],
            nu: 0.6,
            rho1: -0.05,
            rho2: 0.1,
            df: None,
        };
        let data: Vec<PolicyRecord> = (0..500)
            .map(|i| {
                let x1 = (i % 2) as f64;
                let n = (i % 3) as u32;
                let y = (0..n).map(|j| 0.5 + 0.3 * j as f64 + x1).collect();
                PolicyRecord {
                    id: format!("p{i}"),
                    x: vec![1.0, x1],
                    w: vec![1.0, x1],
                    x_star: None,
                    n,
                    y,
                }
            })
            .collect();
        let a = portfolio_loglik(&spec, &pv, &data).unwrap();
        let b = portfolio_loglik_serial(&spec, &pv, &data).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn nan_terms_carry_policy_id() {
        let spec = ModelSpec {
            hurdle: HurdleMode::SharedLambda,
            copula: CopulaSpec::Gaussian,
            structure: CorrKind::Equi,
        };
        let pv = ParamVector {
            beta: vec![f64::NAN],
            beta_star: None,
            gamma: vec![0.0],
            nu: 1.0,
            rho1: 0.0,
            rho2: 0.1,
            df: None,
        };
        let data = vec![PolicyRecord {
            id: "bad".into(),
            x: vec![1.0],
            w: vec![1.0],
            x_star: None,
            n: 0,
            y: vec![],
        }];
        // NaN lambda fails family validation as a domain error carrying context
        assert!(portfolio_loglik(&spec, &pv, &data).is_err());
    }

    #[test]
    fn moments_independence_reductions() {
        let params = gaussian_params(1.0, 2.0, 0.7, 0.0, 0.1);
        let m = moments(&params, 1e-9).unwrap();
        let p = params.hurdle.p();
        let want_es = p * params.hurdle.positive().mean() * 2.0;
        assert_abs_diff_eq!(m.expected_aggregate, want_es, epsilon = 1e-6);
        assert_abs_diff_eq!(m.cov_freq_avgsev_pos, 0.0, epsilon = 1e-6);
        // Cov(N, S) under independence: xi * Var(N)
        let mean_pos = params.hurdle.positive().mean();
        // E[N^2] = p E[(N+)^2]
        let pos = params.hurdle.positive();
        let e_n2: f64 = (1..=pos.support_cutoff())
            .map(|n| (n as f64).powi(2) * pos.pmf(n))
            .sum::<f64>()
            * p;
        let var_n = e_n2 - (p * mean_pos).powi(2);
        assert_abs_diff_eq!(m.cov_freq_aggregate, 2.0 * var_n, epsilon = 1e-5);
    }

    #[test]
    fn moments_match_monte_carlo() {
        let params = gaussian_params(1.0, 1.0, 0.7, 0.3, 0.3);
        // p = 0.5 via a general hurdle
        let params = CRMParams::new(
            HurdleFrequency::new(
                Probability::new(0.5).unwrap(),
                *params.hurdle.positive(),
            ),
            params.sev,
            params.copula,
        );
        let m = moments(&params, 1e-9).unwrap();
        let cache = CholCache::new(*params.copula.structure());
        let draws = 200_000usize;
        let mut rng = stream_rng(77, 0);
        let mut s_acc = Vec::with_capacity(draws);
        let mut n_acc = Vec::with_capacity(draws);
        let mut m_pos = Vec::new();
        for _ in 0..draws {
            let (n, y) = sample_policy(&params, &cache, &mut rng).unwrap();
            let s: f64 = y.iter().sum();
            s_acc.push(s);
            n_acc.push(n as f64);
            if n > 0 {
                m_pos.push((n as f64, s / n as f64));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let es = mean(&s_acc);
        let en = mean(&n_acc);
        let cov_ns = s_acc
            .iter()
            .zip(&n_acc)
            .map(|(s, n)| (s - es) * (n - en))
            .sum::<f64>()
            / (draws as f64 - 1.0);
        let se_es = {
            let var = s_acc.iter().map(|s| (s - es) * (s - es)).sum::<f64>()
                / (draws as f64 - 1.0);
            (var / draws as f64).sqrt()
        };
        assert!(
            (m.expected_aggregate - es).abs() < 3.0 * se_es,
            "E[S] {} vs MC {es} (se {se_es})",
            m.expected_aggregate
        );
        // crude 3-sigma style bound for the covariances via batching
        let batch_cov = |pairs: &[(f64, f64)]| -> (f64, f64) {
            let b = 20;
            let len = pairs.len() / b;
            let mut vals = Vec::with_capacity(b);
            for i in 0..b {
                let chunk = &pairs[i * len..(i + 1) * len];
                let mx = chunk.iter().map(|p| p.0).sum::<f64>() / len as f64;
                let my = chunk.iter().map(|p| p.1).sum::<f64>() / len as f64;
                let c = chunk
                    .iter()
                    .map(|p| (p.0 - mx) * (p.1 - my))
                    .sum::<f64>()
                    / (len as f64 - 1.0);
                vals.push(c);
            }
            let m = vals.iter().sum::<f64>() / b as f64;
            let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b as f64 - 1.0);
            (m, (v / b as f64).sqrt())
        };
        let ns_pairs: Vec<(f64, f64)> =
            n_acc.iter().cloned().zip(s_acc.iter().cloned()).collect();
        let (cov_mc, cov_se) = batch_cov(&ns_pairs);
        assert!(
            (m.cov_freq_aggregate - cov_mc).abs() < 3.0 * cov_se,
            "Cov(N,S) {} vs MC {cov_mc} (se {cov_se}); direct {cov_ns}",
            m.cov_freq_aggregate
        );
        let (covnm_mc, covnm_se) = batch_cov(&m_pos);
        assert!(
            (m.cov_freq_avgsev_pos - covnm_mc).abs() < 3.0 * covnm_se,
            "Cov(N,M|N>0) {} vs MC {covnm_mc} (se {covnm_se})",
            m.cov_freq_avgsev_pos
        );
    }

    #[test]
    fn spearman_closed_forms() {
        let params = gaussian_params(1.0, 1.0, 0.7, 0.0, 0.5);
        assert_relative_eq!(
            spearman_sev_sev(&params, 1).unwrap(),
            6.0 / std::f64::consts::PI * 0.25f64.asin(),
            max_relative = 1e-14
        );
        let indep = gaussian_params(1.0, 1.0, 0.7, 0.0, 0.0);
        assert_eq!(spearman_sev_sev(&indep, 1).unwrap(), 0.0);
        assert_eq!(spearman_freq_sev(&indep, 1e-8).unwrap(), 0.0);
        // AR decays with lag
        let ar = CRMParams::new(
            indep.hurdle,
            indep.sev,
            CopulaFamily::gaussian(CorrStructure::new(CorrKind::Ar, 0.0, 0.4).unwrap()),
        );
        assert_relative_eq!(
            spearman_sev_sev(&ar, 2).unwrap(),
            6.0 / std::f64::consts::PI * 0.08f64.asin(),
            max_relative = 1e-14
        );
        assert!(spearman_sev_sev(&params, 0).is_err());
    }

    #[test]
    fn spearman_freq_sev_matches_sampled_rank_correlation() {
        // tie-aware population value vs the sample Spearman of (N+, Y1)
        let params = gaussian_params(1.0, 1.0, 0.7, 0.3, 0.1);
        let rho = spearman_freq_sev(&params, 1e-9).unwrap();
        let pos = params.hurdle.positive();
        let m = 400_000usize;
        let mut rng = stream_rng(31, 5);
        let rho1 = 0.3f64;
        let resid = (1.0 - rho1 * rho1).sqrt();
        let mut pairs: Vec<(u32, f64)> = Vec::with_capacity(m);
        for _ in 0..m {
            let z0 = special::norm_quantile(unit_open(&mut rng)).unwrap();
            let z1 = rho1 * z0 + resid * special::norm_quantile(unit_open(&mut rng)).unwrap();
            let n = pos.quantile(special::norm_cdf(z0).clamp(1e-300, 1.0 - 1e-16));
            pairs.push((n, special::norm_cdf(z1)));
        }
        let sample_rho = spearman_with_ties(&pairs);
        assert!(
            (rho - sample_rho).abs() < 4.0 / (m as f64).sqrt(),
            "population {rho} vs sample {sample_rho}"
        );
    }

    // sample Spearman with average ranks for ties on the discrete coordinate
    pub(crate) fn spearman_with_ties(pairs: &[(u32, f64)]) -> f64 {
        let m = pairs.len();
        let mut by_n: Vec<usize> = (0..m).collect();
        by_n.sort_by_key(|&i| pairs[i].0);
        let mut rank_n = vec![0.0; m];
        let mut i = 0;
        while i < m {
            let mut j = i;
            while j < m && pairs[by_n[j]].0 == pairs[by_n[i]].0 {
                j += 1;
            }
            let avg = (i + j - 1) as f64 / 2.0 + 1.0;
            for &idx in &by_n[i..j] {
                rank_n[idx] = avg;
            }
            i = j;
        }
        let mut by_v: Vec<usize> = (0..m).collect();
        by_v.sort_by(|&a, &b| pairs[a].1.partial_cmp(&pairs[b].1).unwrap());
        let mut rank_v = vec![0.0; m];
        for (r, &idx) in by_v.iter().enumerate() {
            rank_v[idx] = (r + 1) as f64;
        }
        let mean = (m as f64 + 1.0) / 2.0;
        let mut num = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for i in 0..m {
            let a = rank_n[i] - mean;
            let b = rank_v[i] - mean;
            num += a * b;
            d1 += a * a;
            d2 += b * b;
        }
        num / (d1 * d2).sqrt()
    }

    #[test]
    fn sampler_marginals_and_independence() {
        // rho1 = rho2 = 0: n and y independent with the right margins
        let params = gaussian_params(0.8, 2.0, 0.7, 0.0, 0.0);
        let cache = CholCache::new(*params.copula.structure());
        let mut rng = stream_rng(2025, 3);
        let draws = 100_000usize;
        let mut counts: HashMap<u32, usize> = HashMap::new();
        let mut y_sum = 0.0;
        let mut y_cnt = 0usize;
        for _ in 0..draws {
            let (n, y) = sample_policy(&params, &cache, &mut rng).unwrap();
            *counts.entry(n.min(6)).or_insert(0) += 1;
            if let Some(v) = y.first() {
                y_sum += v;
                y_cnt += 1;
            }
        }
        // chi-square GOF on the claim-count margin
        let mut stat = 0.0;
        let mut dof = 0.0;
        for n in 0..=6u32 {
            let p_n = if n < 6 {
                params.hurdle.pmf(n)
            } else {
                1.0 - (0..6).map(|j| params.hurdle.pmf(j)).sum::<f64>()
            };
            let expect = p_n * draws as f64;
            if expect < 5.0 {
                continue;
            }
            let obs = *counts.get(&n).unwrap_or(&0) as f64;
            stat += (obs - expect) * (obs - expect) / expect;
            dof += 1.0;
        }
        let p_value = special::gammq(0.5 * (dof - 1.0), 0.5 * stat);
        assert!(p_value > 0.001, "GOF p-value {p_value}, stat {stat}");
        // severity mean
        let se = (params.sev.variance() / y_cnt as f64).sqrt();
        assert!((y_sum / y_cnt as f64 - 2.0).abs() < 4.0 * se);
    }

    #[test]
    fn sampler_reproduces_severity_rank_correlation() {
        // Corollary-style closed form as the oracle, rho1 = 0 so conditioning
        // on n >= 2 does not distort the pair law
        let params = gaussian_params(2.0, 1.0, 0.7, 0.0, 0.3);
        let cache = CholCache::new(*params.copula.structure());
        let mut rng = stream_rng(99, 1);
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        while pairs.len() < 120_000 {
            let (n, y) = sample_policy(&params, &cache, &mut rng).unwrap();
            if n >= 2 {
                pairs.push((y[0], y[1]));
            }
        }
        // continuous margins: plain rank correlation
        let with_ranks: Vec<(u32, f64)> = {
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            idx.sort_by(|&a, &b| pairs[a].0.partial_cmp(&pairs[b].0).unwrap());
            let mut r = vec![0u32; pairs.len()];
            for (rank, &i) in idx.iter().enumerate() {
                r[i] = rank as u32;
            }
            r.into_iter().zip(pairs.iter().map(|p| p.1)).collect()
        };
        let got = spearman_with_ties(&with_ranks);
        let want = spearman_sev_sev(&params, 1).unwrap();
        let se = 1.0 / (pairs.len() as f64).sqrt();
        assert!(
            (got - want).abs() < 3.0 * se,
            "rank corr {got} vs closed form {want} (se {se})"
        );
    }

    #[test]
    fn shared_lambda_marginal_is_plain_poisson() {
        for lambda in [0.1, 0.9, 3.0] {
            let base = FrequencyFamily::poisson(lambda).unwrap();
            let h = HurdleFrequency::from_base(&base).unwrap();
            for n in 0..=30u32 {
                assert_abs_diff_eq!(h.pmf(n), base.pmf(n), epsilon = 1e-12);
            }
        }
    }
}
