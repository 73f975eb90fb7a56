//! Classical and auxiliary Z statistics with the exponential β-risk
//! machinery: the asymptotic rate coefficient, the sample size needed for a
//! k-fold power gain, and the enlarged-null radius at fixed n.

use thiserror::Error;

use crate::gauss::{normal_quantile, GaussError};

#[derive(Debug, Error)]
pub enum ZError {
    #[error("sample must be non-empty")]
    EmptySample,
    #[error("standard deviation must be positive, got {0}")]
    BadSigma(f64),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("auxiliary estimator is not informative: sigma_hat {0} > sigma {1}")]
    NotInformative(f64, f64),
    #[error("degenerate alternative: mean equals the null value")]
    DegenerateAlternative,
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

/// Null configuration for the mean test.
#[derive(Debug, Clone, Copy)]
pub struct ZTestConfig {
    pub mu: f64,
    pub alpha: f64,
}

impl ZTestConfig {
    pub fn new(mu: f64, alpha: f64) -> Result<Self, ZError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ZError::BadAlpha(alpha));
        }
        Ok(ZTestConfig { mu, alpha })
    }

    /// Two-sided decision at this config's level.
    pub fn reject(&self, z: f64) -> Result<bool, ZError> {
        reject_two_sided(z, self.alpha)
    }
}

/// An estimator of the mean together with its asymptotic standard deviation
/// and the sample size it was computed from.
#[derive(Debug, Clone, Copy)]
pub struct MeanAuxEstimate {
    pub value: f64,
    pub sigma_hat: f64,
    pub n: usize,
}

impl MeanAuxEstimate {
    pub fn new(value: f64, sigma_hat: f64, n: usize) -> Result<Self, ZError> {
        if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
            return Err(ZError::BadSigma(sigma_hat));
        }
        if n == 0 {
            return Err(ZError::EmptySample);
        }
        Ok(MeanAuxEstimate {
            value,
            sigma_hat,
            n,
        })
    }
}

/// √n (X̄ − μ) / σₙ for a raw sample and a supplied scale estimate.
pub fn z_statistic(sample: &[f64], mu: f64, sigma_n: f64) -> Result<f64, ZError> {
    if sample.is_empty() {
        return Err(ZError::EmptySample);
    }
    if !(sigma_n > 0.0) || !sigma_n.is_finite() {
        return Err(ZError::BadSigma(sigma_n));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    Ok(n.sqrt() * (mean - mu) / sigma_n)
}

/// √n (X̂ − μ) / σ̂ for an auxiliary-information estimator.
pub fn aux_z_statistic(est: &MeanAuxEstimate, mu: f64) -> f64 {
    (est.n as f64).sqrt() * (est.value - mu) / est.sigma_hat
}

/// Two-sided decision rule |Z| > Φ⁻¹(1 − α/2), shared by the classical and
/// auxiliary statistics.
pub fn reject_two_sided(z: f64, alpha: f64) -> Result<bool, ZError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ZError::BadAlpha(alpha));
    }
    Ok(z.abs() > normal_quantile(1.0 - alpha / 2.0)?)
}

/// Unbiased sample standard deviation (divisor n − 1); the consistent scale
/// the classical statistic plugs in by default.
pub fn sample_std(sample: &[f64]) -> Result<f64, ZError> {
    if sample.len() < 2 {
        return Err(ZError::EmptySample);
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Coefficient c in the β-risk bound ratio exp(xₙ) with xₙ ~ c·n:
///
///   c = (mean − μ)² · (1/σ̂ − 1/σ).
pub fn theorem1_rate(mean: f64, mu: f64, sigma: f64, sigma_hat: f64) -> Result<f64, ZError> {
    if !(sigma_hat > 0.0) {
        return Err(ZError::BadSigma(sigma_hat));
    }
    if sigma_hat > sigma {
        return Err(ZError::NotInformative(sigma_hat, sigma));
    }
    let gap = mean - mu;
    Ok(gap * gap * (1.0 / sigma_hat - 1.0 / sigma))
}

/// Consequences of the rate bound: the sample size from which the auxiliary
/// test is k times as powerful, and (if `n` is supplied) the radius by which
/// the null could be enlarged at that n while keeping the k-fold gain.
pub fn theorem1_consequences(
    mean: f64,
    mu: f64,
    sigma: f64,
    sigma_hat: f64,
    k: f64,
    n: Option<usize>,
) -> Result<(u64, Option<f64>), ZError> {
    if !(sigma_hat > 0.0) {
        return Err(ZError::BadSigma(sigma_hat));
    }
    if sigma_hat > sigma {
        return Err(ZError::NotInformative(sigma_hat, sigma));
    }
    if !(k > 0.0) {
        return Err(ZError::BadSigma(k));
    }
    let ln_k = k.ln();
    if ln_k <= 0.0 {
        // k ≤ 1 requires no observations; the radius degenerates with it.
        return Ok((0, n.map(|_| 0.0)));
    }
    let gap = mean - mu;
    if gap == 0.0 {
        return Err(ZError::DegenerateAlternative);
    }
    let n_gain = (sigma * sigma_hat * ln_k / ((sigma - sigma_hat) * gap * gap)).ceil();
    let radius = n.map(|n| {
        let n = n as f64;
        ln_k / (n * (1.0 / sigma_hat - 1.0 / sigma)).sqrt()
    });
    Ok((n_gain as u64, radius))
}
