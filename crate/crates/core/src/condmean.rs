//! Regression-adjusted estimators that fold a known conditional mean
//! P(X|C) into the empirical mean (scalar case, feeding the Z-test) or into
//! the normalized cell-frequency vector (vector case, feeding the chi-square
//! test), together with their plug-in covariance estimates.

use thiserror::Error;

use crate::chisq::{ChiAuxEstimate, ChiSqError, PartitionSpec};
use crate::events::IntervalSet;
use crate::matrix::SymMatrix;
use crate::ztest::{MeanAuxEstimate, ZError};

/// Relative floor applied to the plug-in variance so the studentized
/// statistic never divides by ~0 on unlucky small samples.
pub const VARIANCE_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CondMeanError {
    #[error("sample must be non-empty")]
    EmptySample,
    #[error("no observations fall in the conditioning event")]
    EmptyConditioning,
    #[error("conditional variance is zero; the information is degenerate")]
    DegenerateInformation,
    #[error("cell assignment has {0} entries for a sample of {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Chi(#[from] ChiSqError),
    #[error(transparent)]
    Z(#[from] ZError),
}

/// A conditioning event C with the externally known value of P(X|C).
#[derive(Debug, Clone)]
pub struct CondMeanInfo {
    pub event: IntervalSet,
    pub value: f64,
}

impl CondMeanInfo {
    pub fn new(event: IntervalSet, value: f64) -> Self {
        CondMeanInfo { event, value }
    }
}

/// Scalar or vector regression coefficient numerator.
#[derive(Debug, Clone)]
pub enum K12 {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// Empirical ingredients of the adjusted estimators.
///
/// `k22` stores the per-n quantity Varₙ(X|C)/n. The conditional
/// mean itself averages only the n·ℙₙ(C) observations inside C, so the
/// estimators divide by `k22 / ℙₙ(C)` — the consistent estimate of the
/// variance of ℙₙ(X|C).
#[derive(Debug, Clone)]
pub struct CondMeanEstimates {
    pub cond_mean: f64,
    pub cond_var: f64,
    pub k12: K12,
    pub k22: f64,
    pub n: usize,
    pub n_c: usize,
}

impl CondMeanEstimates {
    pub fn p_c_hat(&self) -> f64 {
        self.n_c as f64 / self.n as f64
    }

    /// n · K̂₂₂ / ℙₙ(C): converges to the limit variance of the centered,
    /// √n-scaled conditional-mean estimator.
    pub fn s22(&self) -> f64 {
        self.cond_var / self.p_c_hat()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// ℙₙ(X|C), K̂₁₂ and K̂₂₂ from a sample. Supplying a partition produces the
/// vector K̂₁₂ used by the chi-square adjustment; otherwise the scalar one.
pub fn cond_mean_estimates(
    sample: &[f64],
    info: &CondMeanInfo,
    vector_ctx: Option<(&PartitionSpec, &[usize])>,
) -> Result<CondMeanEstimates, CondMeanError> {
    if sample.is_empty() {
        return Err(CondMeanError::EmptySample);
    }
    let n = sample.len();
    let in_c: Vec<bool> = sample.iter().map(|&x| info.event.contains(x)).collect();
    let n_c = in_c.iter().filter(|&&b| b).count();
    if n_c == 0 {
        return Err(CondMeanError::EmptyConditioning);
    }
    let sum_c: f64 = sample
        .iter()
        .zip(&in_c)
        .filter(|(_, &b)| b)
        .map(|(&x, _)| x)
        .sum();
    let sumsq_c: f64 = sample
        .iter()
        .zip(&in_c)
        .filter(|(_, &b)| b)
        .map(|(&x, _)| x * x)
        .sum();
    let cond_mean = sum_c / n_c as f64;
    let cond_sq = sumsq_c / n_c as f64;
    let cond_var = (cond_sq - cond_mean * cond_mean).max(0.0);
    if cond_var == 0.0 {
        return Err(CondMeanError::DegenerateInformation);
    }

    let k12 = match vector_ctx {
        None => {
            // (ℙₙ(X²|C) − ℙₙ(X)·P(X|C)) / n
            K12::Scalar((cond_sq - mean(sample) * info.value) / n as f64)
        }
        Some((spec, cells)) => {
            if cells.len() != n {
                return Err(CondMeanError::LengthMismatch(cells.len(), n));
            }
            // component i: (ℙₙ(X·1_{Aᵢ}|C) − P(X|C)·ℙₙ(Aᵢ)) / (n·√P₀(Aᵢ))
            let m = spec.m();
            let mut sum_xc = vec![0.0; m];
            let mut counts = vec![0usize; m];
            for ((&x, &cell), &b) in sample.iter().zip(cells).zip(&in_c) {
                counts[cell] += 1;
                if b {
                    sum_xc[cell] += x;
                }
            }
            let v = (0..m)
                .map(|i| {
                    let cond_xi = sum_xc[i] / n_c as f64;
                    let p_i = counts[i] as f64 / n as f64;
                    (cond_xi - info.value * p_i) / (n as f64 * spec.p0[i].sqrt())
                })
                .collect();
            K12::Vector(v)
        }
    };
    Ok(CondMeanEstimates {
        cond_mean,
        cond_var,
        k12,
        k22: cond_var / n as f64,
        n,
        n_c,
    })
}

/// Adjusted mean estimator
///   Θ̂* = ℙₙ(X) − K̂₁₂ K̂₂₂⁻¹ (ℙₙ(X|C) − P(X|C)),
/// carrying the plug-in of its limit variance σ² − P(C)·Var(X|C).
pub fn theta_star_scalar(
    sample: &[f64],
    info: &CondMeanInfo,
) -> Result<MeanAuxEstimate, CondMeanError> {
    let est = cond_mean_estimates(sample, info, None)?;
    let s12 = match est.k12 {
        K12::Scalar(v) => v * est.n as f64,
        K12::Vector(_) => unreachable!("scalar context"),
    };
    let coeff = s12 / est.s22();
    let value = mean(sample) - coeff * (est.cond_mean - info.value);

    let m = mean(sample);
    let var_n = sample.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / sample.len() as f64;
    let reduced = var_n - est.p_c_hat() * est.cond_var;
    let sigma_hat2 = reduced.max(VARIANCE_FLOOR_REL * var_n);
    Ok(MeanAuxEstimate::new(value, sigma_hat2.sqrt(), est.n)?)
}

/// The empirical normalized cell-frequency vector ℙₙ[f_𝒜].
pub fn empirical_f_vector(
    cells: &[usize],
    spec: &PartitionSpec,
) -> Result<Vec<f64>, CondMeanError> {
    if cells.is_empty() {
        return Err(CondMeanError::EmptySample);
    }
    let n = cells.len() as f64;
    let mut counts = vec![0usize; spec.m()];
    for &c in cells {
        counts[c] += 1;
    }
    Ok(counts
        .iter()
        .zip(&spec.p0)
        .map(|(&c, &w)| c as f64 / n / w.sqrt())
        .collect())
}

/// Vector analogue: adjusts ℙₙ[f_𝒜] by the conditional-mean discrepancy and
/// attaches the plug-in covariance pair (Σ̂ₙ, Σ₁,ₙ).
pub fn theta_star_vector(
    sample: &[f64],
    info: &CondMeanInfo,
    spec: &PartitionSpec,
    cells: &[usize],
) -> Result<ChiAuxEstimate, CondMeanError> {
    let est = cond_mean_estimates(sample, info, Some((spec, cells)))?;
    let s12: Vec<f64> = match &est.k12 {
        K12::Vector(v) => v.iter().map(|k| k * est.n as f64).collect(),
        K12::Scalar(_) => unreachable!("vector context"),
    };
    let s22 = est.s22();
    let f_hat = empirical_f_vector(cells, spec)?;
    let discrepancy = est.cond_mean - info.value;
    let p_hat: Vec<f64> = f_hat
        .iter()
        .zip(&s12)
        .map(|(&f, &s)| f - s / s22 * discrepancy)
        .collect();

    let n = sample.len() as f64;
    let p_emp: Vec<f64> = {
        let mut counts = vec![0usize; spec.m()];
        for &c in cells {
            counts[c] += 1;
        }
        counts.iter().map(|&c| c as f64 / n).collect()
    };
    let (_, sigma1) = crate::chisq::build_sigma0_sigma1(&p_emp, spec)?;
    let correction = SymMatrix::outer(&s12, 1.0 / s22);
    let sigma_hat = sigma1.sub(&correction);
    Ok(ChiAuxEstimate {
        p_hat,
        sigma_hat,
        sigma1,
        n: est.n,
    })
}
