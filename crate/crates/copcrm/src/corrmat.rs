//! Structured correlation matrices for the latent frequency/severity vector.
//!
//! The severity block is either equicorrelated (every off-diagonal entry is
//! `rho2`) or AR(1) (entry `(i, j)` is `rho2^|i-j|`); the extended matrix
//! borders that block with a frequency row/column of constant correlation
//! `rho1`. Determinants, inverses and quadratic forms all have closed forms,
//! so nothing here materializes a dense matrix on production paths - the
//! structured inverse is O(1) to build and O(k) to apply. Dense linear
//! algebra appears only in the test oracles.

use crate::error::{CrmError, Result};

const SINGULAR_DET: f64 = 1e-300;
const CHOL_PIVOT_TOL: f64 = 1e-12;

/// Severity-block correlation layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrKind {
    /// Exchangeable severities: common pairwise correlation.
    Equi,
    /// Claim-order decay: correlation `rho2^|i-j|`.
    Ar,
}

/// A validated correlation structure `(kind, rho1, rho2)`.
///
/// For the equicorrelated kind the constructor enforces `rho1^2 <= rho2`,
/// the regime in which the extended matrix stays positive definite for
/// every claim count. The AR kind accepts any `|rho1|, |rho2| < 1`;
/// positive definiteness is then order-dependent and checked where needed
/// (see [`is_pd_ext`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrStructure {
    kind: CorrKind,
    rho1: f64,
    rho2: f64,
}

/// O(1) representation of the inverse severity-block correlation matrix.
#[derive(Clone, Copy, Debug)]
pub enum StructuredInverse {
    /// `inv = diag * I + rank_one * J` (J the all-ones matrix).
    Equi { k: usize, diag: f64, rank_one: f64 },
    /// Symmetric tridiagonal inverse of the AR(1) block.
    Ar { k: usize, edge: f64, inner: f64, off: f64 },
}

/// The three quadratic forms the copula formulas consume.
#[derive(Clone, Copy, Debug)]
pub struct QuadForms {
    /// `1' inv q`
    pub one_inv_q: f64,
    /// `1' inv 1`
    pub one_inv_one: f64,
    /// `q' inv q`
    pub q_inv_q: f64,
}

/// Packed lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    k: usize,
    lower: Vec<f64>, // row-major, row i holds i+1 entries
}

impl CorrStructure {
    pub fn new(kind: CorrKind, rho1: f64, rho2: f64) -> Result<Self> {
        if !(rho1.abs() < 1.0 && rho2.abs() < 1.0) {
            return Err(CrmError::Domain(format!(
                "correlations must lie strictly inside (-1, 1), got rho1 = {rho1}, rho2 = {rho2}"
            )));
        }
        if kind == CorrKind::Equi && rho1 * rho1 > rho2 {
            return Err(CrmError::Domain(format!(
                "equicorrelated structure requires rho1^2 <= rho2 (all-order positive \
                 definiteness), got rho1 = {rho1}, rho2 = {rho2}"
            )));
        }
        Ok(Self { kind, rho1, rho2 })
    }

    pub fn kind(&self) -> CorrKind {
        self.kind
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// Determinant of the k x k severity block.
    ///
    /// Equi: `(1 + (k-1) rho2)(1 - rho2)^(k-1)`. AR(1): `(1 - rho2^2)^(k-1)`
    /// (the k x k block has k-1 decay factors; a 1 x 1 block has determinant
    /// one).
    pub fn det_sev(&self, k: usize) -> f64 {
        assert!(k >= 1, "severity block needs k >= 1");
        let r = self.rho2;
        match self.kind {
            CorrKind::Equi => (1.0 + (k as f64 - 1.0) * r) * (1.0 - r).powi(k as i32 - 1),
            CorrKind::Ar => (1.0 - r * r).powi(k as i32 - 1),
        }
    }

    /// Log-determinant of the severity block, stable for large k.
    pub fn log_det_sev(&self, k: usize) -> f64 {
        assert!(k >= 1);
        let r = self.rho2;
        match self.kind {
            CorrKind::Equi => {
                (1.0 + (k as f64 - 1.0) * r).ln() + (k as f64 - 1.0) * (1.0 - r).ln()
            }
            CorrKind::Ar => (k as f64 - 1.0) * (1.0 - r * r).ln(),
        }
    }

    /// Determinant of the (k+1) x (k+1) extended matrix; `k = 0` gives 1.
    ///
    /// Both kinds reduce to `det_sev(k) * (1 - rho1^2 * 1' inv 1)` by the
    /// Schur complement; for the equicorrelated kind that simplifies to the
    /// closed form `[1 + (k-1) rho2 - k rho1^2](1 - rho2)^(k-1)`.
    pub fn det_ext(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let r1 = self.rho1;
        let r2 = self.rho2;
        match self.kind {
            CorrKind::Equi => {
                (1.0 + (k as f64 - 1.0) * r2 - k as f64 * r1 * r1)
                    * (1.0 - r2).powi(k as i32 - 1)
            }
            CorrKind::Ar => self.det_sev(k) * (1.0 - r1 * r1 * ar_one_inv_one(r2, k)),
        }
    }

    /// Structured inverse of the severity block.
    pub fn inv_sev(&self, k: usize) -> Result<StructuredInverse> {
        assert!(k >= 1);
        if self.det_sev(k).abs() < SINGULAR_DET {
            return Err(CrmError::SingularMatrix { k });
        }
        let r = self.rho2;
        Ok(match self.kind {
            CorrKind::Equi => {
                let diag = 1.0 / (1.0 - r);
                let rank_one = -diag * r / (1.0 + (k as f64 - 1.0) * r);
                StructuredInverse::Equi { k, diag, rank_one }
            }
            CorrKind::Ar => {
                let s = 1.0 / (1.0 - r * r);
                StructuredInverse::Ar {
                    k,
                    edge: s,
                    inner: (1.0 + r * r) * s,
                    off: -r * s,
                }
            }
        })
    }

    /// `1' inv q`, `1' inv 1` and `q' inv q` against the severity block, in O(k).
    pub fn quad_forms(&self, q: &[f64]) -> Result<QuadForms> {
        Ok(self.inv_sev(q.len())?.quad_forms(q))
    }

    /// Lower Cholesky factor of `Sigma_sev(k) - rho1^2 J`, the conditional
    /// covariance of the latent severity scores given the latent frequency
    /// score.
    pub fn conditional_chol(&self, k: usize) -> Result<CholeskyFactor> {
        assert!(k >= 1);
        let r1sq = self.rho1 * self.rho1;
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                a[i * k + j] = self.sev_entry(i, j) - r1sq;
            }
        }
        // in-place lower Cholesky on the packed dense buffer
        let mut lower = Vec::with_capacity(k * (k + 1) / 2);
        for i in 0..k {
            for j in 0..=i {
                let mut sum = a[i * k + j];
                for l in 0..j {
                    sum -= a[i * k + l] * a[j * k + l];
                }
                if i == j {
                    if sum <= CHOL_PIVOT_TOL {
                        return Err(CrmError::NotPositiveDefinite { k });
                    }
                    a[i * k + j] = sum.sqrt();
                } else {
                    a[i * k + j] = sum / a[j * k + j];
                }
                lower.push(a[i * k + j]);
            }
        }
        Ok(CholeskyFactor { k, lower })
    }

    fn sev_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            match self.kind {
                CorrKind::Equi => self.rho2,
                CorrKind::Ar => self.rho2.powi(i.abs_diff(j) as i32),
            }
        }
    }
}

// 1' inv(Sigma_ar(k)) 1 = (k - (k-2) rho2) / (1 + rho2); equals 1 at k = 1.
fn ar_one_inv_one(rho2: f64, k: usize) -> f64 {
    (k as f64 - (k as f64 - 2.0) * rho2) / (1.0 + rho2)
}

impl StructuredInverse {
    pub fn order(&self) -> usize {
        match *self {
            StructuredInverse::Equi { k, .. } | StructuredInverse::Ar { k, .. } => k,
        }
    }

    /// Apply the inverse to a vector.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.order());
        match *self {
            StructuredInverse::Equi { diag, rank_one, .. } => {
                let total: f64 = q.iter().sum();
                q.iter().map(|&x| diag * x + rank_one * total).collect()
            }
            StructuredInverse::Ar { k, edge, inner, off } => {
                if k == 1 {
                    return vec![q[0]];
                }
                let mut out = Vec::with_capacity(k);
                out.push(edge * q[0] + off * q[1]);
                for j in 1..k - 1 {
                    out.push(inner * q[j] + off * (q[j - 1] + q[j + 1]));
                }
                out.push(edge * q[k - 1] + off * q[k - 2]);
                out
            }
        }
    }

    /// The three quadratic forms in one O(k) pass.
    pub fn quad_forms(&self, q: &[f64]) -> QuadForms {
        assert_eq!(q.len(), self.order());
        match *self {
            StructuredInverse::Equi { k, diag, rank_one } => {
                let total: f64 = q.iter().sum();
                let sq: f64 = q.iter().map(|x| x * x).sum();
                let kf = k as f64;
                QuadForms {
                    one_inv_q: total * (diag + rank_one * kf),
                    one_inv_one: kf * (diag + rank_one * kf),
                    q_inv_q: diag * sq + rank_one * total * total,
                }
            }
            StructuredInverse::Ar { .. } => {
                let v = self.apply(q);
                let mut one_inv_q = 0.0;
                let mut q_inv_q = 0.0;
                for (x, w) in q.iter().zip(&v) {
                    one_inv_q += w;
                    q_inv_q += x * w;
                }
                let (edge, inner, off, k) = match *self {
                    StructuredInverse::Ar { k, edge, inner, off } => (edge, inner, off, k),
                    _ => unreachable!(),
                };
                let kf = k as f64;
                let one_inv_one = if k == 1 {
                    1.0
                } else {
                    2.0 * edge + (kf - 2.0) * inner + 2.0 * (kf - 1.0) * off
                };
                QuadForms {
                    one_inv_q,
                    one_inv_one,
                    q_inv_q,
                }
            }
        }
    }
}

impl CholeskyFactor {
    pub fn order(&self) -> usize {
        self.k
    }

    /// Multiply the lower factor by a vector: `L eps`.
    pub fn mul_vec(&self, eps: &[f64]) -> Vec<f64> {
        assert_eq!(eps.len(), self.k);
        let mut out = Vec::with_capacity(self.k);
        let mut row_start = 0;
        for i in 0..self.k {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.lower[row_start + j] * eps[j];
            }
            out.push(acc);
            row_start += i + 1;
        }
        out
    }

    /// Reconstruct `L L'` (test support).
    pub fn reconstruct(&self) -> Vec<f64> {
        let k = self.k;
        let mut m = vec![0.0; k * k];
        let row = |i: usize| i * (i + 1) / 2;
        for i in 0..k {
            for j in 0..k {
                let mut acc = 0.0;
                for l in 0..=i.min(j) {
                    acc += self.lower[row(i) + l] * self.lower[row(j) + l];
                }
                m[i * k + j] = acc;
            }
        }
        m
    }
}

/// Whether the extended (k+1) x (k+1) matrix is positive definite.
///
/// Equi: `k rho1^2 - 1 < (k-1) rho2`. AR(1): the severity block is always
/// positive definite for `|rho2| < 1`, and the Schur complement of the
/// frequency entry gives the exact order-dependent condition
/// `rho1^2 (k - (k-2) rho2) < 1 + rho2`.
pub fn is_pd_ext(kind: CorrKind, rho1: f64, rho2: f64, k: usize) -> bool {
    debug_assert!(rho1.abs() < 1.0 && rho2.abs() < 1.0);
    if k == 0 {
        return true;
    }
    let kf = k as f64;
    match kind {
        CorrKind::Equi => kf * rho1 * rho1 - 1.0 < (kf - 1.0) * rho2,
        CorrKind::Ar => rho1 * rho1 * (kf - (kf - 2.0) * rho2) < 1.0 + rho2,
    }
}

/// Lower bound `L(k)` on `rho2` for the equicorrelated extended matrix of
/// order k to be positive definite: `(k rho1^2 - 1)/(k - 1)` for `k > 1`,
/// and -1 otherwise. Non-decreasing in k with limit `rho1^2`.
pub fn pd_bound(rho1: f64, k: usize) -> f64 {
    if k > 1 {
        (k as f64 * rho1 * rho1 - 1.0) / (k as f64 - 1.0)
    } else {
        -1.0
    }
}
