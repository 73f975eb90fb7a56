//! Law-exact auxiliary quantities, computed by finite summation over the
//! atoms of a discrete law: partition marginals, joint tables, conditional
//! expectations, the covariance pairs of both auxiliary engines, and the
//! raking designs. These back the `--oracle` mode and the theory columns of
//! the reports.

use crate::chisq::{build_sigma0_sigma1, ChiSqError, PartitionSpec};
use crate::condmean::CondMeanInfo;
use crate::events::{EventError, IntervalPartition};
use crate::matrix::{Matrix, SymMatrix};
use crate::raking::{RakingDesign, RakingError};

use super::dist::DiscreteDist;

/// Exact cell probabilities of a partition under the law.
pub fn law_marginals(
    dist: &DiscreteDist,
    partition: &IntervalPartition,
) -> Result<Vec<f64>, EventError> {
    let mut out = vec![0.0; partition.len()];
    for (&x, &p) in dist.atoms().iter().zip(dist.probs()) {
        out[partition.cell_of(x)?] += p;
    }
    Ok(out)
}

/// Exact joint table P(A_k^{(i)} ∩ A_l^{(j)}) with rows over `pi` cells.
pub fn joint_table(
    dist: &DiscreteDist,
    pi: &IntervalPartition,
    pj: &IntervalPartition,
) -> Result<Matrix, EventError> {
    let mut joint = Matrix::zeros(pi.len(), pj.len());
    for (&x, &p) in dist.atoms().iter().zip(dist.probs()) {
        let (a, b) = (pi.cell_of(x)?, pj.cell_of(x)?);
        joint.set(a, b, joint.get(a, b) + p);
    }
    Ok(joint)
}

fn cell_means(
    dist: &DiscreteDist,
    partition: &IntervalPartition,
) -> Result<Vec<f64>, EventError> {
    let mut mass = vec![0.0; partition.len()];
    let mut sum = vec![0.0; partition.len()];
    for (&x, &p) in dist.atoms().iter().zip(dist.probs()) {
        let c = partition.cell_of(x)?;
        mass[c] += p;
        sum[c] += x * p;
    }
    Ok(sum
        .iter()
        .zip(&mass)
        .map(|(&s, &m)| if m > 0.0 { s / m } else { 0.0 })
        .collect())
}

/// Exact raking design for the mean estimand (dim-1 target).
pub fn design_for_mean(
    dist: &DiscreteDist,
    schedule: &[IntervalPartition],
) -> Result<RakingDesign, OracleError> {
    let mut targets = Vec::with_capacity(schedule.len());
    let mut bases = Vec::with_capacity(schedule.len());
    for part in schedule {
        targets.push(law_marginals(dist, part)?);
        let means = cell_means(dist, part)?;
        let mut base = Matrix::zeros(part.len(), 1);
        for (j, &m) in means.iter().enumerate() {
            base.set(j, 0, m);
        }
        bases.push(base);
    }
    let joints: Vec<Vec<Option<Matrix>>> = precompute_joints(dist, schedule)?;
    Ok(RakingDesign::from_tables(
        &targets,
        &|k, l| joints[k][l].clone().expect("pair computed"),
        bases,
    )?)
}

/// Exact raking design for the normalized cell-indicator estimand of a test
/// partition with null weights `spec`.
pub fn design_for_f(
    dist: &DiscreteDist,
    schedule: &[IntervalPartition],
    test: &IntervalPartition,
    spec: &PartitionSpec,
) -> Result<RakingDesign, OracleError> {
    let mut targets = Vec::with_capacity(schedule.len());
    let mut bases = Vec::with_capacity(schedule.len());
    for part in schedule {
        let marg = law_marginals(dist, part)?;
        let joint = joint_table(dist, part, test)?;
        let mut base = Matrix::zeros(part.len(), spec.m());
        for j in 0..part.len() {
            for i in 0..spec.m() {
                // P(A_i | A_j^{(k)}) / √P₀(A_i)
                base.set(j, i, joint.get(j, i) / marg[j] / spec.p0[i].sqrt());
            }
        }
        targets.push(marg);
        bases.push(base);
    }
    let joints = precompute_joints(dist, schedule)?;
    Ok(RakingDesign::from_tables(
        &targets,
        &|k, l| joints[k][l].clone().expect("pair computed"),
        bases,
    )?)
}

fn precompute_joints(
    dist: &DiscreteDist,
    schedule: &[IntervalPartition],
) -> Result<Vec<Vec<Option<Matrix>>>, EventError> {
    let n = schedule.len();
    let mut joints = vec![vec![None; n]; n];
    for k in 0..n {
        for l in (k + 1)..n {
            joints[k][l] = Some(joint_table(dist, &schedule[k], &schedule[l])?);
        }
    }
    Ok(joints)
}

/// Exact limit covariance pair (Σ₀, Σ₁) of the test partition under the law.
pub fn sigma_pair(
    dist: &DiscreteDist,
    test: &IntervalPartition,
    spec: &PartitionSpec,
) -> Result<(SymMatrix, SymMatrix), OracleError> {
    let p = law_marginals(dist, test)?;
    Ok(build_sigma0_sigma1(&p, spec)?)
}

/// Exact limits of the conditional-mean machinery under the law: the scalar
/// pieces always, the vector pieces when a test partition is supplied.
#[derive(Debug, Clone)]
pub struct CondMeanOracle {
    pub p_c: f64,
    pub cond_mean: f64,
    pub cond_var: f64,
    /// Limit covariance of the (centered, √n-scaled) mean and conditional
    /// mean: equals Var(X|C).
    pub s12_scalar: f64,
    /// Limit variance of the conditional-mean estimator: Var(X|C)/P(C).
    pub s22: f64,
    /// σ² − P(C)·Var(X|C).
    pub sigma_hat2_scalar: f64,
    pub s12_vector: Option<Vec<f64>>,
    pub sigma1: Option<SymMatrix>,
    pub sigma_hat: Option<SymMatrix>,
}

pub fn condmean_oracle(
    dist: &DiscreteDist,
    info: &CondMeanInfo,
    vector_ctx: Option<(&IntervalPartition, &PartitionSpec)>,
) -> Result<CondMeanOracle, OracleError> {
    let in_c = |x: f64| info.event.contains(x);
    let p_c = dist.expect(|x| f64::from(in_c(x)));
    if p_c <= 0.0 {
        return Err(OracleError::EmptyEvent);
    }
    let cond_mean = dist.expect(|x| if in_c(x) { x } else { 0.0 }) / p_c;
    let cond_sq = dist.expect(|x| if in_c(x) { x * x } else { 0.0 }) / p_c;
    let cond_var = cond_sq - cond_mean * cond_mean;
    if cond_var <= 0.0 {
        return Err(OracleError::DegenerateEvent);
    }
    let s22 = cond_var / p_c;
    let sigma_hat2_scalar = dist.variance() - p_c * cond_var;

    let (mut s12_vector, mut sigma1, mut sigma_hat) = (None, None, None);
    if let Some((test, spec)) = vector_ctx {
        let p = law_marginals(dist, test)?;
        let (_, sig1) = build_sigma0_sigma1(&p, spec)?;
        let mut s12 = vec![0.0; spec.m()];
        for (i, s) in s12.iter_mut().enumerate() {
            // Cov(1_{A_i}, (X − m)·1_C) / (P(C)·√P₀(A_i))
            let mut cov = 0.0;
            for (&x, &q) in dist.atoms().iter().zip(dist.probs()) {
                let centered = if in_c(x) { x - cond_mean } else { 0.0 };
                let ind = f64::from(test.cell_of(x)? == i);
                cov += q * centered * (ind - p[i]);
            }
            *s = cov / (p_c * spec.p0[i].sqrt());
        }
        let correction = SymMatrix::outer(&s12, 1.0 / s22);
        sigma_hat = Some(sig1.sub(&correction));
        sigma1 = Some(sig1);
        s12_vector = Some(s12);
    }

    Ok(CondMeanOracle {
        p_c,
        cond_mean,
        cond_var,
        s12_scalar: cond_var,
        s22,
        sigma_hat2_scalar,
        s12_vector,
        sigma1,
        sigma_hat,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("conditioning event has zero probability under the law")]
    EmptyEvent,
    #[error("conditioning event carries no variance under the law")]
    DegenerateEvent,
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Chi(#[from] ChiSqError),
    #[error(transparent)]
    Raking(#[from] RakingError),
}
