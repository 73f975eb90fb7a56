//! Monte-Carlo power and β-risk estimation.
//!
//! Replications are independent and run in parallel; replication `r` of a
//! run draws from child stream `r` of the master seed and results are
//! reduced in replication order, so a report is a pure function of its
//! config, whatever the worker count.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::chisq::{
    aux_chi2_statistic, build_sigma0_sigma1, chi2_statistic, t_vector, theorem2_rate,
    validate_aux_covariance, ChiAuxEstimate, ChiSqError, PartitionSpec,
};
use crate::condmean::{theta_star_scalar, theta_star_vector, CondMeanError, CondMeanInfo};
use crate::events::{EventError, IntervalPartition};
use crate::gauss::{normal_quantile, ChiSquared, GaussError};
use crate::matrix::{pseudo_inverse, psd_sqrt_product, Matrix, MatrixError, DEFAULT_TOL};
use crate::raking::{
    empirical_design, raked_sample, raked_variance, PartitionAssignment, RakingError,
    RakingSchedule, WeightedSample,
};
use crate::rng::child_rng;
use crate::ztest::{sample_std, theorem1_rate, ZError};

use super::config::{AuxKind, BenchConfig, TestKind};
use super::dist::{DiscreteDist, DistError};
use super::oracle::{
    condmean_oracle, design_for_f, design_for_mean, law_marginals, sigma_pair, OracleError,
};

/// Rank/PSD tolerance for covariance matrices estimated from data. The
/// nominally-zero eigenvalue of a plug-in covariance carries sampling noise
/// on the O(1/√n) scale, so the cutoff shrinks with n; genuine condition
/// violations sit at O(1) and stay detectable at every size.
fn plugin_tol(n: usize) -> f64 {
    (5.0 / (n as f64).sqrt()).clamp(0.05, 0.3)
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("auxiliary covariance validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Chi(#[from] ChiSqError),
    #[error(transparent)]
    CondMean(#[from] CondMeanError),
    #[error(transparent)]
    Raking(#[from] RakingError),
    #[error(transparent)]
    Z(#[from] ZError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One grid row of a Monte-Carlo report.
#[derive(Debug, Clone)]
pub struct PowerRow {
    pub n: usize,
    pub t: f64,
    pub power_classic: f64,
    pub power_aux: f64,
    pub stderr_classic: f64,
    pub stderr_aux: f64,
    pub accept_classic: f64,
    pub accept_aux: f64,
    pub accept_ratio: f64,
    pub beta_ratio: f64,
    pub predicted_xn: f64,
    pub aux_failures: usize,
}

/// Per-n Monte-Carlo power estimates with β-risk gain ratios.
#[derive(Debug, Clone)]
pub struct PowerReport {
    pub rows: Vec<PowerRow>,
}

impl PowerReport {
    pub const CSV_HEADER: &'static str = "n,t,power_classic,power_aux,stderr_classic,stderr_aux,accept_classic,accept_aux,accept_ratio,beta_ratio,predicted_xn,aux_failures";

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                fmt_float(r.t),
                fmt_float(r.power_classic),
                fmt_float(r.power_aux),
                fmt_float(r.stderr_classic),
                fmt_float(r.stderr_aux),
                fmt_float(r.accept_classic),
                fmt_float(r.accept_aux),
                fmt_float(r.accept_ratio),
                fmt_float(r.beta_ratio),
                fmt_float(r.predicted_xn),
                r.aux_failures
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// 17-significant-digit float formatting; non-finite values spelled out so
/// reports stay byte-stable.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

struct RepOutcome {
    classic: f64,
    aux: Option<f64>,
}

/// Fully resolved run state with oracle quantities precomputed.
struct RunContext {
    dist: DiscreteDist,
    kind: TestKind,
    oracle: bool,
    seed: u64,
    mu: f64,
    spec: Option<PartitionSpec>,
    test_part: Option<IntervalPartition>,
    slots: Vec<IntervalPartition>,
    slot_targets: Vec<Vec<f64>>,
    steps: usize,
    cond_info: Option<CondMeanInfo>,
    z_aux_sigma_oracle: f64,
    cm_coeff_scalar: f64,
    cm_coeff_vector: Vec<f64>,
    s_matrix_oracle: Option<Matrix>,
    predicted_rate: f64,
}

impl RunContext {
    fn resolve(config: &BenchConfig) -> Result<Self, BenchError> {
        if config.reps == 0 {
            return Err(BenchError::Config("reps must be at least 1".into()));
        }
        if config.n.is_empty() {
            return Err(BenchError::Config("n grid must be non-empty".into()));
        }
        let min_n = if config.test.is_z() { 2 } else { 1 };
        if config.n.iter().any(|&n| n < min_n) {
            return Err(BenchError::Config(format!(
                "sample sizes must be at least {min_n}"
            )));
        }
        match (&config.alpha, &config.t) {
            (None, None) => {
                return Err(BenchError::Config("either alpha or t must be set".into()))
            }
            (Some(a), _) if !(*a > 0.0 && *a < 1.0) => {
                return Err(BenchError::Config(format!("alpha out of range: {a}")));
            }
            (_, Some(ts)) => {
                if ts.len() != 1 && ts.len() != config.n.len() {
                    return Err(BenchError::Config(
                        "t must have one entry or one per sample size".into(),
                    ));
                }
                if ts.iter().any(|&t| !(t > 0.0)) {
                    return Err(BenchError::Config("thresholds must be positive".into()));
                }
            }
            _ => {}
        }
        let dist = config.resolve_distribution()?;
        let law_mean = dist.mean();
        let law_sigma = dist.variance().sqrt();

        let mu = config.mu.unwrap_or(0.0);
        if config.test.is_z() && config.mu.is_none() {
            return Err(BenchError::Config("z tests require mu".into()));
        }

        let (spec, test_part) = if config.test.is_z() {
            (None, None)
        } else {
            let part_cfg = config
                .partition
                .as_ref()
                .ok_or_else(|| BenchError::Config("chisq tests require a partition".into()))?;
            let part = part_cfg.to_partition()?;
            let p0 = config
                .p0
                .clone()
                .ok_or_else(|| BenchError::Config("chisq tests require p0".into()))?;
            let spec = PartitionSpec::new(part_cfg.labels.clone(), p0)?;
            if spec.m() != part.len() {
                return Err(BenchError::Config(
                    "p0 length must match the partition cell count".into(),
                ));
            }
            (Some(spec), Some(part))
        };

        // Raking schedule, cycled to the requested step count.
        let (mut slots, mut slot_targets, mut steps) = (Vec::new(), Vec::new(), 0usize);
        let mut cond_info = None;
        match config.test.aux_kind() {
            AuxKind::None => {}
            AuxKind::Raking => {
                let aux = config.aux.clone().unwrap_or_default();
                let schedule_cfg = aux
                    .schedule
                    .unwrap_or_else(super::config::default_schedule);
                if schedule_cfg.is_empty() {
                    return Err(BenchError::Config("raking schedule is empty".into()));
                }
                steps = aux.steps.unwrap_or(2);
                let mut base_parts = Vec::new();
                let mut base_targets = Vec::new();
                for pc in &schedule_cfg {
                    let part = pc.to_partition()?;
                    let targets = match &pc.targets {
                        Some(t) => t.clone(),
                        None => law_marginals(&dist, &part)?,
                    };
                    if targets.len() != part.len() {
                        return Err(BenchError::Config(
                            "targets length must match the partition".into(),
                        ));
                    }
                    base_parts.push(part);
                    base_targets.push(targets);
                }
                for i in 0..steps {
                    slots.push(base_parts[i % base_parts.len()].clone());
                    slot_targets.push(base_targets[i % base_targets.len()].clone());
                }
            }
            AuxKind::Condmean => {
                let aux = config.aux.clone().unwrap_or_default();
                let event = aux
                    .c_event
                    .unwrap_or_else(|| crate::events::IntervalSet::single(-0.5, 0.5));
                let value = match aux.c_value {
                    Some(v) => v,
                    None => {
                        let p_c = dist.expect(|x| f64::from(event.contains(x)));
                        if p_c <= 0.0 {
                            return Err(BenchError::Config(
                                "conditioning event has zero probability".into(),
                            ));
                        }
                        dist.expect(|x| if event.contains(x) { x } else { 0.0 }) / p_c
                    }
                };
                cond_info = Some(CondMeanInfo::new(event, value));
            }
        }

        // Oracle quantities: the exact-law covariances/coefficients, plus the
        // predicted rate column regardless of mode.
        let mut z_aux_sigma_oracle = law_sigma;
        let mut cm_coeff_scalar = 0.0;
        let mut cm_coeff_vector = Vec::new();
        let mut s_matrix_oracle = None;
        let mut predicted_rate = 0.0;
        match config.test {
            TestKind::Z | TestKind::Chisq => {}
            TestKind::ZAuxRaking => {
                let design = design_for_mean(&dist, &slots)?;
                let var = raked_variance(dist.variance(), &design, steps)?;
                z_aux_sigma_oracle = var.max(0.0).sqrt().min(law_sigma);
                predicted_rate =
                    theorem1_rate(law_mean, mu, law_sigma, z_aux_sigma_oracle).unwrap_or(0.0);
            }
            TestKind::ZAuxCondmean => {
                let info = cond_info.as_ref().expect("condmean info resolved");
                let o = condmean_oracle(&dist, info, None)?;
                z_aux_sigma_oracle = o.sigma_hat2_scalar.max(0.0).sqrt().min(law_sigma);
                cm_coeff_scalar = o.s12_scalar / o.s22;
                predicted_rate =
                    theorem1_rate(law_mean, mu, law_sigma, z_aux_sigma_oracle).unwrap_or(0.0);
            }
            TestKind::ChisqAuxRaking => {
                let spec = spec.as_ref().expect("chisq spec resolved");
                let test = test_part.as_ref().expect("test partition resolved");
                let design = design_for_f(&dist, &slots, test, spec)?;
                let (_, sigma1) = sigma_pair(&dist, test, spec)?;
                let sigma_hat = crate::raking::raked_covariance(&sigma1, &design, steps)?;
                let p_true = law_marginals(&dist, test)?;
                prepare_oracle_chisq(
                    spec,
                    &p_true,
                    sigma_hat,
                    sigma1,
                    &mut s_matrix_oracle,
                    &mut predicted_rate,
                )?;
            }
            TestKind::ChisqAuxCondmean => {
                let spec = spec.as_ref().expect("chisq spec resolved");
                let test = test_part.as_ref().expect("test partition resolved");
                let info = cond_info.as_ref().expect("condmean info resolved");
                let o = condmean_oracle(&dist, info, Some((test, spec)))?;
                let sigma1 = o.sigma1.clone().expect("vector oracle");
                let sigma_hat = o.sigma_hat.clone().expect("vector oracle");
                cm_coeff_vector = o
                    .s12_vector
                    .as_ref()
                    .expect("vector oracle")
                    .iter()
                    .map(|s| s / o.s22)
                    .collect();
                let p_true = law_marginals(&dist, test)?;
                prepare_oracle_chisq(
                    spec,
                    &p_true,
                    sigma_hat,
                    sigma1,
                    &mut s_matrix_oracle,
                    &mut predicted_rate,
                )?;
            }
        }

        Ok(RunContext {
            dist,
            kind: config.test,
            oracle: config.oracle,
            seed: config.seed,
            mu,
            spec,
            test_part,
            slots,
            slot_targets,
            steps,
            cond_info,
            z_aux_sigma_oracle,
            cm_coeff_scalar,
            cm_coeff_vector,
            s_matrix_oracle,
            predicted_rate,
        })
    }

    fn threshold(&self, config: &BenchConfig, n_idx: usize) -> Result<f64, BenchError> {
        if let Some(ts) = &config.t {
            return Ok(if ts.len() == 1 { ts[0] } else { ts[n_idx] });
        }
        let alpha = config.alpha.expect("validated: alpha or t present");
        if self.kind.is_z() {
            Ok(normal_quantile(1.0 - alpha / 2.0)?)
        } else {
            let df = self.spec.as_ref().expect("chisq spec").m() as u32 - 1;
            Ok(ChiSquared::new(df)?.quantile(1.0 - alpha)?)
        }
    }

    fn rejects(&self, stat: f64, t: f64) -> bool {
        if self.kind.is_z() {
            stat.abs() > t
        } else {
            stat > t
        }
    }

    fn one_rep(&self, n: usize, rep: u64) -> Result<RepOutcome, BenchError> {
        let mut rng = child_rng(self.seed, rep);
        let sample = self.dist.sample_vec(&mut rng, n);
        let classic = self.classic_stat(&sample)?;
        let aux = match self.kind.aux_kind() {
            AuxKind::None => Some(classic),
            AuxKind::Raking => self.raking_stat(&sample)?,
            AuxKind::Condmean => self.condmean_stat(&sample)?,
        };
        Ok(RepOutcome { classic, aux })
    }

    fn classic_stat(&self, sample: &[f64]) -> Result<f64, BenchError> {
        if self.kind.is_z() {
            let sd = sample_std(sample)?;
            let n = sample.len() as f64;
            let mean = sample.iter().sum::<f64>() / n;
            if sd > 0.0 {
                Ok(n.sqrt() * (mean - self.mu) / sd)
            } else if mean == self.mu {
                Ok(0.0)
            } else {
                Ok((mean - self.mu).signum() * f64::INFINITY)
            }
        } else {
            let counts = self.test_counts(sample)?;
            Ok(chi2_statistic(&counts, self.spec.as_ref().expect("spec"))?)
        }
    }

    fn test_counts(&self, sample: &[f64]) -> Result<Vec<u64>, BenchError> {
        let part = self.test_part.as_ref().expect("test partition");
        let mut counts = vec![0u64; part.len()];
        for &x in sample {
            counts[part.cell_of(x)?] += 1;
        }
        Ok(counts)
    }

    /// Statistic of the raking-backed auxiliary test; `None` marks a
    /// replication whose auxiliary machinery degenerated (empty cell, rank
    /// collapse) and was recorded as a failure.
    fn raking_stat(&self, sample: &[f64]) -> Result<Option<f64>, BenchError> {
        let n = sample.len();
        let mut assignments = Vec::with_capacity(self.slots.len());
        for part in &self.slots {
            assignments.push(part.assign(sample)?);
        }
        let ws = WeightedSample::uniform(sample.to_vec()).expect("non-empty sample");
        let schedule = RakingSchedule::new(
            assignments
                .iter()
                .zip(&self.slot_targets)
                .map(|(cells, targets)| {
                    PartitionAssignment::new(cells.clone(), targets.len(), targets.clone())
                })
                .collect::<Result<Vec<_>, _>>()?,
        );
        let raked = match raked_sample(&ws, &schedule, self.steps) {
            Ok(r) => r,
            Err(RakingError::DegenerateCell(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };

        if self.kind.is_z() {
            let raked_mean = raked.mean();
            let sigma_hat = if self.oracle {
                self.z_aux_sigma_oracle
            } else {
                let g: Vec<Vec<f64>> = sample.iter().map(|&x| vec![x]).collect();
                let design = match empirical_design(&assignments, &self.slot_targets, &g) {
                    Ok(d) => d,
                    Err(RakingError::DegenerateCell(_)) => return Ok(None),
                    Err(e) => return Err(e.into()),
                };
                let mean = sample.iter().sum::<f64>() / n as f64;
                let var_n =
                    sample.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                let v = raked_variance(var_n, &design, self.steps)?;
                v.max(1e-12 * var_n.max(f64::MIN_POSITIVE)).sqrt()
            };
            Ok(Some((n as f64).sqrt() * (raked_mean - self.mu) / sigma_hat))
        } else {
            let spec = self.spec.as_ref().expect("spec");
            let test = self.test_part.as_ref().expect("test partition");
            let test_cells = test.assign(sample)?;
            // Raked marginals of the test partition, normalized by √p0.
            let mut raked_marg = vec![0.0; spec.m()];
            for (&cell, &w) in test_cells.iter().zip(&raked.weights) {
                raked_marg[cell] += w;
            }
            let p_hat: Vec<f64> = raked_marg
                .iter()
                .zip(&spec.p0)
                .map(|(&p, &w)| p / w.sqrt())
                .collect();
            if self.oracle {
                return Ok(Some(self.oracle_chisq_stat(&p_hat, n)));
            }
            let mut counts = vec![0usize; spec.m()];
            for &c in &test_cells {
                counts[c] += 1;
            }
            let p_emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            let (_, sigma1_n) = build_sigma0_sigma1(&p_emp, spec)?;
            let g: Vec<Vec<f64>> = test_cells
                .iter()
                .map(|&c| {
                    (0..spec.m())
                        .map(|i| f64::from(c == i) / spec.p0[i].sqrt())
                        .collect()
                })
                .collect();
            let design = match empirical_design(&assignments, &self.slot_targets, &g) {
                Ok(d) => d,
                Err(RakingError::DegenerateCell(_)) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let sigma_hat_n = crate::raking::raked_covariance(&sigma1_n, &design, self.steps)?;
            let est = ChiAuxEstimate {
                p_hat,
                sigma_hat: sigma_hat_n,
                sigma1: sigma1_n,
                n,
            };
            match aux_chi2_statistic(&est, spec, plugin_tol(n)) {
                Ok(stat) => Ok(Some(stat)),
                Err(ChiSqError::ValidationFailed(_))
                | Err(ChiSqError::Matrix(MatrixError::IncompatibleCovariances(_))) => Ok(None),
                Err(e) => Err(e.into()),
            }
        }
    }

    fn condmean_stat(&self, sample: &[f64]) -> Result<Option<f64>, BenchError> {
        let info = self.cond_info.as_ref().expect("condmean info");
        let n = sample.len();
        if self.kind.is_z() {
            if self.oracle {
                let (mean, cond_mean, n_c) = sample_and_cond_mean(sample, info);
                if n_c == 0 {
                    return Ok(None);
                }
                let value =
                    mean - self.cm_coeff_scalar * (cond_mean - info.value);
                let z = (n as f64).sqrt() * (value - self.mu) / self.z_aux_sigma_oracle;
                Ok(Some(z))
            } else {
                match theta_star_scalar(sample, info) {
                    Ok(est) => Ok(Some(crate::ztest::aux_z_statistic(&est, self.mu))),
                    Err(CondMeanError::EmptyConditioning)
                    | Err(CondMeanError::DegenerateInformation) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
        } else {
            let spec = self.spec.as_ref().expect("spec");
            let test = self.test_part.as_ref().expect("test partition");
            let cells = test.assign(sample)?;
            if self.oracle {
                let (_, cond_mean, n_c) = sample_and_cond_mean(sample, info);
                if n_c == 0 {
                    return Ok(None);
                }
                let f_hat = crate::condmean::empirical_f_vector(&cells, spec)?;
                let discrepancy = cond_mean - info.value;
                let p_hat: Vec<f64> = f_hat
                    .iter()
                    .zip(&self.cm_coeff_vector)
                    .map(|(&f, &c)| f - c * discrepancy)
                    .collect();
                Ok(Some(self.oracle_chisq_stat(&p_hat, n)))
            } else {
                let est = match theta_star_vector(sample, info, spec, &cells) {
                    Ok(e) => e,
                    Err(CondMeanError::EmptyConditioning)
                    | Err(CondMeanError::DegenerateInformation) => return Ok(None),
                    Err(e) => return Err(e.into()),
                };
                match aux_chi2_statistic(&est, spec, plugin_tol(n)) {
                    Ok(stat) => Ok(Some(stat)),
                    Err(ChiSqError::ValidationFailed(_))
                    | Err(ChiSqError::Matrix(MatrixError::IncompatibleCovariances(_))) => {
                        Ok(None)
                    }
                    Err(e) => Err(e.into()),
                }
            }
        }
    }

    fn oracle_chisq_stat(&self, p_hat: &[f64], n: usize) -> f64 {
        let spec = self.spec.as_ref().expect("spec");
        let s = self.s_matrix_oracle.as_ref().expect("oracle S");
        let root_n = (n as f64).sqrt();
        let dev: Vec<f64> = p_hat
            .iter()
            .zip(spec.null_f_vector())
            .map(|(&a, b)| root_n * (a - b))
            .collect();
        let z = s.transpose().row_vec_mul(&dev);
        z.iter().map(|v| v * v).sum()
    }
}

fn sample_and_cond_mean(sample: &[f64], info: &CondMeanInfo) -> (f64, f64, usize) {
    let mut sum = 0.0;
    let mut sum_c = 0.0;
    let mut n_c = 0usize;
    for &x in sample {
        sum += x;
        if info.event.contains(x) {
            sum_c += x;
            n_c += 1;
        }
    }
    let mean = sum / sample.len() as f64;
    let cond_mean = if n_c > 0 { sum_c / n_c as f64 } else { 0.0 };
    (mean, cond_mean, n_c)
}

fn prepare_oracle_chisq(
    spec: &PartitionSpec,
    p_true: &[f64],
    sigma_hat: crate::matrix::SymMatrix,
    sigma1: crate::matrix::SymMatrix,
    s_matrix: &mut Option<Matrix>,
    predicted_rate: &mut f64,
) -> Result<(), BenchError> {
    let report = validate_aux_covariance(&sigma_hat, &sigma1, spec.m(), DEFAULT_TOL)?;
    if !report.passed {
        return Err(BenchError::Validation(report.failure_reason()));
    }
    let hat_pinv = pseudo_inverse(&sigma_hat, DEFAULT_TOL)?;
    *s_matrix = Some(psd_sqrt_product(&hat_pinv, &sigma1, DEFAULT_TOL)?);
    // Degenerate drift (null setups) contributes rate 0 through the T vector.
    let t = t_vector(1, p_true, spec)?;
    let drift = t.components.iter().map(|c| c * c).sum::<f64>();
    *predicted_rate = if drift == 0.0 {
        0.0
    } else {
        theorem2_rate(p_true, spec, &sigma_hat, &sigma1, DEFAULT_TOL)?
    };
    Ok(())
}

/// Classic/auxiliary statistic draws for one sample size: the raw material
/// for power rows, ECDF exports, and distribution-shape tests.
pub struct SimulatedStatistics {
    pub classic: Vec<f64>,
    pub aux: Vec<f64>,
    pub aux_failures: usize,
}

pub fn simulate_statistics(
    config: &BenchConfig,
    n: usize,
) -> Result<SimulatedStatistics, BenchError> {
    let ctx = RunContext::resolve(config)?;
    let outcomes: Result<Vec<RepOutcome>, BenchError> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| ctx.one_rep(n, rep))
        .collect();
    let outcomes = outcomes?;
    let mut classic = Vec::with_capacity(outcomes.len());
    let mut aux = Vec::with_capacity(outcomes.len());
    let mut aux_failures = 0usize;
    for o in outcomes {
        classic.push(o.classic);
        match o.aux {
            Some(v) => aux.push(v),
            None => aux_failures += 1,
        }
    }
    Ok(SimulatedStatistics {
        classic,
        aux,
        aux_failures,
    })
}

/// Runs the Monte-Carlo grid of a config: per sample size, both statistics on
/// shared samples, rejection proportions against the resolved threshold,
/// binomial standard errors, acceptance/β ratios, and the predicted
/// asymptotic exponent.
pub fn estimate_power(config: &BenchConfig) -> Result<PowerReport, BenchError> {
    let ctx = RunContext::resolve(config)?;
    let mut rows = Vec::with_capacity(config.n.len());
    for (idx, &n) in config.n.iter().enumerate() {
        let t = ctx.threshold(config, idx)?;
        let outcomes: Result<Vec<RepOutcome>, BenchError> = (0..config.reps as u64)
            .into_par_iter()
            .map(|rep| ctx.one_rep(n, rep))
            .collect();
        let outcomes = outcomes?;

        let reps = outcomes.len();
        let mut reject_classic = 0usize;
        let mut reject_aux = 0usize;
        let mut aux_ok = 0usize;
        for o in &outcomes {
            if ctx.rejects(o.classic, t) {
                reject_classic += 1;
            }
            if let Some(a) = o.aux {
                aux_ok += 1;
                if ctx.rejects(a, t) {
                    reject_aux += 1;
                }
            }
        }
        let power_classic = reject_classic as f64 / reps as f64;
        let power_aux = if aux_ok > 0 {
            reject_aux as f64 / aux_ok as f64
        } else {
            f64::NAN
        };
        let stderr_classic = (power_classic * (1.0 - power_classic) / reps as f64).sqrt();
        let stderr_aux = if aux_ok > 0 {
            (power_aux * (1.0 - power_aux) / aux_ok as f64).sqrt()
        } else {
            f64::NAN
        };
        let accept_classic = 1.0 - power_classic;
        let accept_aux = 1.0 - power_aux;
        let accept_ratio = ratio(accept_classic, accept_aux);
        rows.push(PowerRow {
            n,
            t,
            power_classic,
            power_aux,
            stderr_classic,
            stderr_aux,
            accept_classic,
            accept_aux,
            accept_ratio,
            beta_ratio: accept_ratio,
            predicted_xn: ctx.predicted_rate * n as f64,
            aux_failures: reps - aux_ok,
        });
    }
    Ok(PowerReport { rows })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// Gain table over an (n, t) grid: `estimate_power` with explicit per-n
/// thresholds, the tables' convention.
pub fn gain_table(config: &BenchConfig) -> Result<PowerReport, BenchError> {
    if config.t.is_none() {
        return Err(BenchError::Config(
            "gain tables need explicit per-n thresholds".into(),
        ));
    }
    estimate_power(config)
}
