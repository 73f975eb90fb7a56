//! Chi-square homogeneity statistics, with and without auxiliary
//! information: the Σ₀/Σ₁ covariance constructions, the drift vector Tₙ, the
//! square-root transform statistic, condition validation for auxiliary
//! covariances, and the asymptotic β-risk rate.

use thiserror::Error;

use crate::matrix::{
    pseudo_det_rank, pseudo_inverse, psd_order_check, psd_sqrt_product, MatrixError, SymMatrix,
};

#[derive(Debug, Error)]
pub enum ChiSqError {
    #[error("partition needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("null weights must be positive; cell {0} has weight {1}")]
    NonPositiveWeight(usize, f64),
    #[error("probability vector must sum to 1 within 1e-12, got {0}")]
    NotNormalized(f64),
    #[error("length mismatch: vector has {0} entries, partition has {1} cells")]
    LengthMismatch(usize, usize),
    #[error("total count must be positive")]
    ZeroTotalCount,
    #[error("auxiliary covariance validation failed: {0}")]
    ValidationFailed(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// M named events with null-hypothesis weights P₀(Aᵢ) > 0.
#[derive(Debug, Clone)]
pub struct PartitionSpec {
    pub labels: Vec<String>,
    pub p0: Vec<f64>,
}

impl PartitionSpec {
    pub fn new(labels: Vec<String>, p0: Vec<f64>) -> Result<Self, ChiSqError> {
        if p0.len() < 2 {
            return Err(ChiSqError::TooFewCells(p0.len()));
        }
        for (i, &w) in p0.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(ChiSqError::NonPositiveWeight(i, w));
            }
        }
        let sum: f64 = p0.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ChiSqError::NotNormalized(sum));
        }
        let labels = if labels.len() == p0.len() {
            labels
        } else {
            (0..p0.len()).map(|i| format!("cell{i}")).collect()
        };
        Ok(PartitionSpec { labels, p0 })
    }

    pub fn from_weights(p0: Vec<f64>) -> Result<Self, ChiSqError> {
        PartitionSpec::new(Vec::new(), p0)
    }

    pub fn m(&self) -> usize {
        self.p0.len()
    }

    /// P₀[f_𝒜]: the null value of the normalized cell-indicator vector,
    /// componentwise √P₀(Aᵢ).
    pub fn null_f_vector(&self) -> Vec<f64> {
        self.p0.iter().map(|w| w.sqrt()).collect()
    }
}

/// An estimator of P[f_𝒜] with its covariance pair (Σ̂, Σ₁) and sample size.
#[derive(Debug, Clone)]
pub struct ChiAuxEstimate {
    pub p_hat: Vec<f64>,
    pub sigma_hat: SymMatrix,
    pub sigma1: SymMatrix,
    pub n: usize,
}

/// Drift vector Tₙ, components √n (P₀(Aᵢ) − P(Aᵢ)) / √P₀(Aᵢ).
#[derive(Debug, Clone, PartialEq)]
pub struct TVector {
    pub components: Vec<f64>,
}

/// Classical chi-square homogeneity statistic Σᵢ n (ℙₙ(Aᵢ) − P₀(Aᵢ))² / P₀(Aᵢ).
pub fn chi2_statistic(counts: &[u64], spec: &PartitionSpec) -> Result<f64, ChiSqError> {
    if counts.len() != spec.m() {
        return Err(ChiSqError::LengthMismatch(counts.len(), spec.m()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(ChiSqError::ZeroTotalCount);
    }
    let n = n as f64;
    let mut stat = 0.0;
    for (&c, &w) in counts.iter().zip(&spec.p0) {
        let diff = c as f64 / n - w;
        stat += n * diff * diff / w;
    }
    Ok(stat)
}

/// Covariance constructions for the normalized indicator process:
///
///   Σ₀ = Id − √p √pᵗ,
///   Σ₁ = Diag(√(p/p₀)) · Σ₀ · Diag(√(p/p₀)),
///
/// equivalently (Σ₁)ᵢⱼ = (δᵢⱼ pᵢ − pᵢpⱼ)/√(p₀ᵢ p₀ⱼ) for cells of one
/// partition. Both are PSD with rank M−1 when every pᵢ > 0.
pub fn build_sigma0_sigma1(
    p: &[f64],
    spec: &PartitionSpec,
) -> Result<(SymMatrix, SymMatrix), ChiSqError> {
    if p.len() != spec.m() {
        return Err(ChiSqError::LengthMismatch(p.len(), spec.m()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ChiSqError::NotNormalized(sum));
    }
    let m = spec.m();
    let mut sigma0 = SymMatrix::zeros(m);
    let mut sigma1 = SymMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let delta = if i == j { 1.0 } else { 0.0 };
            let cov = delta * p[i] - p[i] * p[j];
            sigma0.set_sym(i, j, delta - (p[i] * p[j]).sqrt());
            sigma1.set_sym(i, j, cov / (spec.p0[i] * spec.p0[j]).sqrt());
        }
    }
    Ok((sigma0, sigma1))
}

/// Tₙ for sample size n, true cell probabilities p, and null weights p₀.
pub fn t_vector(n: usize, p: &[f64], spec: &PartitionSpec) -> Result<TVector, ChiSqError> {
    if p.len() != spec.m() {
        return Err(ChiSqError::LengthMismatch(p.len(), spec.m()));
    }
    let root_n = (n as f64).sqrt();
    let components = spec
        .p0
        .iter()
        .zip(p)
        .map(|(&w, &pi)| root_n * (w - pi) / w.sqrt())
        .collect();
    Ok(TVector { components })
}

/// Validation report for the auxiliary covariance pair: the PSD ordering
/// Σ₁ ⪰ Σ̂, both ranks against the expected M−1, and (on pass) the induced
/// ordering Σ̂⁺ ⪰ Σ₁⁺ of the pseudo-inverses.
#[derive(Debug, Clone)]
pub struct CovValidation {
    pub order_ok: bool,
    pub rank_sigma_hat: usize,
    pub rank_sigma1: usize,
    pub expected_rank: usize,
    pub pinv_order_ok: Option<bool>,
    pub passed: bool,
}

impl CovValidation {
    pub fn failure_reason(&self) -> String {
        if !self.order_ok {
            return "covariance ordering violated: sigma1 - sigma_hat is not PSD".to_string();
        }
        if self.rank_sigma_hat != self.expected_rank || self.rank_sigma1 != self.expected_rank {
            return format!(
                "rank mismatch: rank(sigma_hat) = {}, rank(sigma1) = {}, expected {}",
                self.rank_sigma_hat, self.rank_sigma1, self.expected_rank
            );
        }
        if self.pinv_order_ok == Some(false) {
            return "pseudo-inverse ordering violated".to_string();
        }
        String::new()
    }
}

/// Checks the two usability conditions on the auxiliary covariance: Σ₁ − Σ̂
/// PSD and rank(Σ̂) = rank(Σ₁) = M − 1. Failures are carried in the report,
/// not raised.
pub fn validate_aux_covariance(
    sigma_hat: &SymMatrix,
    sigma1: &SymMatrix,
    m: usize,
    tol: f64,
) -> Result<CovValidation, ChiSqError> {
    let order_ok = psd_order_check(sigma1, sigma_hat, tol)?;
    let rank_sigma_hat = match pseudo_det_rank(sigma_hat, tol) {
        Ok((_, r)) => r,
        Err(MatrixError::NotPsd(_)) => usize::MAX,
        Err(e) => return Err(e.into()),
    };
    let rank_sigma1 = match pseudo_det_rank(sigma1, tol) {
        Ok((_, r)) => r,
        Err(MatrixError::NotPsd(_)) => usize::MAX,
        Err(e) => return Err(e.into()),
    };
    let expected_rank = m - 1;
    let ranks_ok = rank_sigma_hat == expected_rank && rank_sigma1 == expected_rank;
    let mut pinv_order_ok = None;
    if order_ok && ranks_ok {
        let hat_pinv = pseudo_inverse(sigma_hat, tol)?;
        let one_pinv = pseudo_inverse(sigma1, tol)?;
        pinv_order_ok = Some(psd_order_check(&hat_pinv, &one_pinv, tol)?);
    }
    let passed = order_ok && ranks_ok && pinv_order_ok == Some(true);
    Ok(CovValidation {
        order_ok,
        rank_sigma_hat: if rank_sigma_hat == usize::MAX {
            0
        } else {
            rank_sigma_hat
        },
        rank_sigma1: if rank_sigma1 == usize::MAX {
            0
        } else {
            rank_sigma1
        },
        expected_rank,
        pinv_order_ok,
        passed,
    })
}

/// Auxiliary chi-square statistic χ̂²ₙ = ‖√n (P̂ₙ − P₀[f_𝒜]) · Sₙ‖² with
/// Sₙ = √(Σ̂⁺ Σ₁). The covariance pair must pass validation first.
pub fn aux_chi2_statistic(
    est: &ChiAuxEstimate,
    spec: &PartitionSpec,
    tol: f64,
) -> Result<f64, ChiSqError> {
    if est.p_hat.len() != spec.m() {
        return Err(ChiSqError::LengthMismatch(est.p_hat.len(), spec.m()));
    }
    let report = validate_aux_covariance(&est.sigma_hat, &est.sigma1, spec.m(), tol)?;
    if !report.passed {
        return Err(ChiSqError::ValidationFailed(report.failure_reason()));
    }
    let hat_pinv = pseudo_inverse(&est.sigma_hat, tol)?;
    let s = psd_sqrt_product(&hat_pinv, &est.sigma1, tol)?;
    let root_n = (est.n as f64).sqrt();
    let null_f = spec.null_f_vector();
    let dev: Vec<f64> = est
        .p_hat
        .iter()
        .zip(&null_f)
        .map(|(&a, &b)| root_n * (a - b))
        .collect();
    let z = s.transpose().row_vec_mul(&dev);
    Ok(z.iter().map(|v| v * v).sum())
}

/// Coefficient c in xₙ ~ c·n for the auxiliary chi-square test:
/// c = ½ T₁ (Σ̂⁺ − Σ₁⁺) T₁ᵗ with the unit-n drift vector.
pub fn theorem2_rate(
    p: &[f64],
    spec: &PartitionSpec,
    sigma_hat: &SymMatrix,
    sigma1: &SymMatrix,
    tol: f64,
) -> Result<f64, ChiSqError> {
    let report = validate_aux_covariance(sigma_hat, sigma1, spec.m(), tol)?;
    if !report.passed {
        return Err(ChiSqError::ValidationFailed(report.failure_reason()));
    }
    let t = t_vector(1, p, spec)?;
    let diff = pseudo_inverse(sigma_hat, tol)?.sub(&pseudo_inverse(sigma1, tol)?);
    Ok(0.5 * diff.quad_form(&t.components))
}
