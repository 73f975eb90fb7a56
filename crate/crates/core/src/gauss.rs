//! Gaussian and chi-square primitives: quantiles and CDFs for decision
//! thresholds, the density of a singular multivariate normal, and a spectral
//! sampler that works for rank-deficient covariances.

use thiserror::Error;

use crate::matrix::{MatrixError, SpectralInfo, SymMatrix, DEFAULT_TOL};
use crate::rng::{standard_normal, Rng};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Error)]
pub enum GaussError {
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    BadProbability(f64),
    #[error("degrees of freedom must be at least 1")]
    BadDegrees,
    #[error("dimension mismatch: point has length {0}, covariance dim {1}")]
    DimMismatch(usize, usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

// ---------------------------------------------------------------------------
// Scalar special functions
// ---------------------------------------------------------------------------

/// Inverse of the standard normal CDF (Wichura's rational approximation;
/// absolute error well below 1e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> Result<f64, GaussError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GaussError::BadProbability(p));
    }
    let q = p - 0.5;
    let val = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
            + 6.7265770927008700853e4)
            * r
            + 4.5921953931549871457e4)
            * r
            + 1.3731693765509461125e4)
            * r
            + 1.9715909503065514427e3)
            * r
            + 1.3314166789178437745e2)
            * r
            + 3.3871328727963666080e0)
            / (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                + 3.9307895800092710610e4)
                * r
                + 2.1213794301586595867e4)
                * r
                + 5.3941960214247511077e3)
                * r
                + 6.8718700749205790830e2)
                * r
                + 4.2313330701600911252e1)
                * r
                + 1.0)
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let mut v = if r <= 5.0 {
            r -= 1.6;
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                + 2.41780725177450611770e-1)
                * r
                + 1.27045825245236838258e0)
                * r
                + 3.64784832476320460504e0)
                * r
                + 5.76949722146069140550e0)
                * r
                + 4.63033784615654529590e0)
                * r
                + 1.42343711074968357734e0)
                / (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2)
                    * r
                    + 1.48103976427480074590e-1)
                    * r
                    + 6.89767334985100004550e-1)
                    * r
                    + 1.67638483018380384940e0)
                    * r
                    + 2.05319162663775882187e0)
                    * r
                    + 1.0)
        } else {
            r -= 5.0;
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                + 1.24266094738807843860e-3)
                * r
                + 2.65321895265761230930e-2)
                * r
                + 2.96560571828504891230e-1)
                * r
                + 1.78482653991729133580e0)
                * r
                + 5.46378491116411436990e0)
                * r
                + 6.65790464350110377720e0)
                / (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5)
                    * r
                    + 7.86869131145613259100e-4)
                    * r
                    + 1.48753612908506148525e-2)
                    * r
                    + 1.36929880922735805310e-1)
                    * r
                    + 5.99832206555887937690e-1)
                    * r
                    + 1.0)
        };
        if q < 0.0 {
            v = -v;
        }
        v
    };
    Ok(val)
}

/// Standard normal CDF via the regularized incomplete gamma function.
pub fn normal_cdf(x: f64) -> f64 {
    let p_half = reg_gamma_lower(0.5, 0.5 * x * x);
    if x >= 0.0 {
        0.5 * (1.0 + p_half)
    } else {
        0.5 * (1.0 - p_half)
    }
}

/// ln Γ(z) for z > 0 (Lanczos, g = 7).
fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        x += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * LN_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

/// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
/// continued fraction for the complement otherwise.
fn reg_gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by modified Lentz.
fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Chi-square distribution with `df` degrees of freedom; `cdf` and `quantile`
/// are mutual inverses to better than 1e-8 across the usable range.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquared {
    df: u32,
}

impl ChiSquared {
    pub fn new(df: u32) -> Result<Self, GaussError> {
        if df < 1 {
            return Err(GaussError::BadDegrees);
        }
        Ok(ChiSquared { df })
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            reg_gamma_lower(0.5 * self.df as f64, 0.5 * x)
        }
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let a = 0.5 * self.df as f64;
        (a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)
    }

    /// Inverse CDF: Wilson–Hilferty start, Newton steps with bisection
    /// safeguard.
    pub fn quantile(&self, p: f64) -> Result<f64, GaussError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(GaussError::BadProbability(p));
        }
        let df = self.df as f64;
        let z = normal_quantile(p)?;
        let g = 2.0 / (9.0 * df);
        let mut x = df * (1.0 - g + z * g.sqrt()).powi(3);
        if !(x.is_finite() && x > 0.0) {
            x = df;
        }
        let (mut lo, mut hi) = (0.0f64, f64::MAX);
        for _ in 0..100 {
            let f = self.cdf(x) - p;
            if f > 0.0 {
                hi = hi.min(x);
            } else {
                lo = lo.max(x);
            }
            if f.abs() < 1e-13 {
                break;
            }
            let step = f * (-self.log_pdf(x)).exp();
            let mut next = x - step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    lo.max(x) * 2.0 + 1.0
                };
            }
            if (next - x).abs() <= 1e-14 * x.abs() {
                x = next;
                break;
            }
            x = next;
        }
        Ok(x)
    }
}

/// Convenience mirror of the "give me both directions" shape: builds the
/// distribution object carrying `cdf` and `quantile`.
pub fn chi2_cdf_quantile(df: u32) -> Result<ChiSquared, GaussError> {
    ChiSquared::new(df)
}

// ---------------------------------------------------------------------------
// Singular multivariate normal
// ---------------------------------------------------------------------------

/// A centered (possibly singular) Gaussian N(0, Σ) with cached spectral data.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    cov: SymMatrix,
    spectral: SpectralInfo,
    rank: usize,
    log_pdet: f64,
}

impl GaussianSpec {
    pub fn new(cov: SymMatrix, tol: f64) -> Result<Self, GaussError> {
        let spectral = SpectralInfo::of(&cov, tol)?;
        let cut = spectral.cutoff();
        let mut rank = 0usize;
        let mut log_pdet = 0.0;
        for &lam in &spectral.eigenvalues {
            if lam < -cut {
                return Err(GaussError::Matrix(MatrixError::NotPsd(lam)));
            }
            if lam > cut {
                rank += 1;
                log_pdet += lam.ln();
            }
        }
        Ok(GaussianSpec {
            cov,
            spectral,
            rank,
            log_pdet,
        })
    }

    pub fn with_default_tol(cov: SymMatrix) -> Result<Self, GaussError> {
        GaussianSpec::new(cov, DEFAULT_TOL)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.cov
    }

    /// Coordinates of `x` in the eigenbasis.
    fn eigen_coords(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for (k, yk) in y.iter_mut().enumerate() {
            for (i, &xi) in x.iter().enumerate() {
                *yk += self.spectral.eigenvectors.get(i, k) * xi;
            }
        }
        y
    }
}

/// Log-density of N(0, Σ) with respect to Lebesgue measure on its support:
///
///   −(r/2)·ln 2π − ½·ln|Σ|₊ − ½·xᵗΣ⁺x,   r = rank(Σ).
///
/// Returns `None` when `x` lies outside the support (projection residual
/// above 1e-8·‖x‖).
pub fn singular_mvn_logdensity(x: &[f64], spec: &GaussianSpec) -> Result<Option<f64>, GaussError> {
    if x.len() != spec.dim() {
        return Err(GaussError::DimMismatch(x.len(), spec.dim()));
    }
    let y = spec.eigen_coords(x);
    let cut = spec.spectral.cutoff();
    let mut quad = 0.0;
    let mut resid_sq = 0.0;
    for (k, &lam) in spec.spectral.eigenvalues.iter().enumerate() {
        if lam > cut {
            quad += y[k] * y[k] / lam;
        } else {
            resid_sq += y[k] * y[k];
        }
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if resid_sq.sqrt() > 1e-8 * norm {
        return Ok(None);
    }
    Ok(Some(
        -0.5 * spec.rank as f64 * LN_2PI - 0.5 * spec.log_pdet - 0.5 * quad,
    ))
}

/// Draws one vector from N(0, Σ) as Q·Λ^{1/2}·z over the nonzero eigenspace,
/// so every sample lies in range(Σ) exactly.
pub fn mvn_sample(spec: &GaussianSpec, rng: &mut Rng) -> Vec<f64> {
    let n = spec.dim();
    let cut = spec.spectral.cutoff();
    let mut x = vec![0.0; n];
    for (k, &lam) in spec.spectral.eigenvalues.iter().enumerate() {
        if lam <= cut {
            continue;
        }
        let scale = lam.sqrt() * standard_normal(rng);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += scale * spec.spectral.eigenvectors.get(i, k);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::child_rng;

    #[test]
    fn quantile_at_half_is_zero() {
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.841344746).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(-0.2).is_err());
    }

    #[test]
    fn chi2_quantile_95_df1() {
        let chi = ChiSquared::new(1).unwrap();
        assert!((chi.quantile(0.95).unwrap() - 3.8415).abs() < 1e-4);
    }

    #[test]
    fn chi2_cdf_at_zero() {
        for df in 1..6 {
            assert_eq!(ChiSquared::new(df).unwrap().cdf(0.0), 0.0);
        }
    }

    #[test]
    fn chi2_cdf_closed_form_df2() {
        let chi = ChiSquared::new(2).unwrap();
        let x = 2.0;
        assert!((chi.cdf(x) - (1.0 - (-x / 2.0).exp())).abs() < 1e-12);
    }

    #[test]
    fn chi2_rejects_zero_df() {
        assert!(ChiSquared::new(0).is_err());
    }

    #[test]
    fn chi2_quantile_cdf_roundtrip() {
        for df in 1..=10 {
            let chi = ChiSquared::new(df).unwrap();
            for &p in &[0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999] {
                let x = chi.quantile(p).unwrap();
                assert!(
                    (chi.cdf(x) - p).abs() < 1e-8,
                    "df {df} p {p}: cdf(quantile) = {}",
                    chi.cdf(x)
                );
            }
        }
    }

    #[test]
    fn logdensity_dim1_at_origin() {
        let spec = GaussianSpec::with_default_tol(SymMatrix::new(1, &[1.0]).unwrap()).unwrap();
        let v = singular_mvn_logdensity(&[0.0], &spec).unwrap().unwrap();
        assert!((v + 0.5 * LN_2PI).abs() < 1e-12);
    }

    #[test]
    fn logdensity_rank_one_line() {
        let cov = SymMatrix::new(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let spec = GaussianSpec::with_default_tol(cov).unwrap();
        for &a in &[0.0, 0.3, -1.7] {
            let v = singular_mvn_logdensity(&[a, -a], &spec).unwrap().unwrap();
            assert!((v - (-a * a - 0.5 * LN_2PI)).abs() < 1e-10, "a = {a}");
        }
    }

    #[test]
    fn logdensity_outside_support() {
        let cov = SymMatrix::new(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let spec = GaussianSpec::with_default_tol(cov).unwrap();
        assert!(singular_mvn_logdensity(&[1.0, 1.0], &spec)
            .unwrap()
            .is_none());
    }

    #[test]
    fn logdensity_rejects_dim_mismatch() {
        let spec = GaussianSpec::with_default_tol(SymMatrix::identity(2)).unwrap();
        assert!(singular_mvn_logdensity(&[1.0], &spec).is_err());
    }

    #[test]
    fn sampler_zero_covariance_is_zero_vector() {
        let spec = GaussianSpec::with_default_tol(SymMatrix::zeros(3)).unwrap();
        let mut rng = child_rng(9, 0);
        assert_eq!(mvn_sample(&spec, &mut rng), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn sampler_respects_range_constraint() {
        let cov = SymMatrix::new(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let spec = GaussianSpec::with_default_tol(cov).unwrap();
        let mut rng = child_rng(11, 0);
        for _ in 0..1000 {
            let x = mvn_sample(&spec, &mut rng);
            assert!((x[0] + x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let cov = SymMatrix::new(2, &[1.0, 0.3, 0.3, 2.0]).unwrap();
        let spec = GaussianSpec::with_default_tol(cov).unwrap();
        let mut a = child_rng(5, 3);
        let mut b = child_rng(5, 3);
        for _ in 0..50 {
            assert_eq!(mvn_sample(&spec, &mut a), mvn_sample(&spec, &mut b));
        }
    }

    #[test]
    fn sampler_covariance_matches_target() {
        let cov = SymMatrix::new(2, &[1.0, -0.6, -0.6, 0.9]).unwrap();
        let spec = GaussianSpec::with_default_tol(cov.clone()).unwrap();
        let mut rng = child_rng(17, 0);
        let n = 100_000;
        let mut acc = [0.0f64; 4];
        for _ in 0..n {
            let x = mvn_sample(&spec, &mut rng);
            acc[0] += x[0] * x[0];
            acc[1] += x[0] * x[1];
            acc[2] += x[1] * x[0];
            acc[3] += x[1] * x[1];
        }
        for (k, e) in [(0usize, 1.0), (1, -0.6), (2, -0.6), (3, 0.9)] {
            let got = acc[k] / n as f64;
            assert!(
                (got - e).abs() < 0.05 * cov.max_abs(),
                "entry {k}: {got} vs {e}"
            );
        }
    }
}
