//! Raking-Ratio engine: iterative reweighting of a sample so its marginals on
//! known partitions match target probabilities, plus the variance-reduction
//! algebra (the per-partition covariance factors, the alternating-chain
//! correction matrices, and the closed forms for two binary partitions).

use thiserror::Error;

use crate::matrix::{Matrix, SymMatrix};

/// Alternating-chain enumeration is exponential in the step count.
pub const MAX_PHI_STEPS: usize = 12;

#[derive(Debug, Error)]
pub enum RakingError {
    #[error("weights must sum to 1 within 1e-12, got {0}")]
    WeightSum(f64),
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cell {0} has no current weight; the raking quotient is undefined")]
    DegenerateCell(usize),
    #[error("targets must be positive and sum to 1, cell {0} has {1}")]
    BadTarget(usize, f64),
    #[error("cell index {0} out of range for partition of size {1}")]
    CellOutOfRange(usize, usize),
    #[error("schedule has {0} steps, {1} requested")]
    ScheduleTooShort(usize, usize),
    #[error("conditioning cell {0} has zero probability")]
    ZeroMarginal(usize),
    #[error("correction terms are capped at {MAX_PHI_STEPS} steps, {0} requested")]
    TooManySteps(usize),
    #[error("degenerate two-partition design: zero denominator")]
    DegenerateDesign,
    #[error("joint table is not a probability table (sum {0})")]
    BadJoint(f64),
}

/// Neumaier compensated sum; keeps cell-weight totals at one-ulp accuracy so
/// the exact-calibration invariant holds to 1e-15.
fn comp_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Observations with nonnegative weights summing to one.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    /// Initial state: uniform weights 1/n.
    pub fn uniform(points: Vec<f64>) -> Result<Self, RakingError> {
        if points.is_empty() {
            return Err(RakingError::LengthMismatch(0, 1));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(WeightedSample { points, weights })
    }

    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self, RakingError> {
        if points.len() != weights.len() {
            return Err(RakingError::LengthMismatch(points.len(), weights.len()));
        }
        let sum = comp_sum(weights.iter().copied());
        if (sum - 1.0).abs() > 1e-12 {
            return Err(RakingError::WeightSum(sum));
        }
        Ok(WeightedSample { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Current weighted mean.
    pub fn mean(&self) -> f64 {
        comp_sum(
            self.points
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| x * w),
        )
    }
}

/// One partition over a fixed sample: per-observation cell index plus the
/// known target marginals.
#[derive(Debug, Clone)]
pub struct PartitionAssignment {
    pub cells: Vec<usize>,
    pub m: usize,
    pub targets: Vec<f64>,
}

impl PartitionAssignment {
    pub fn new(cells: Vec<usize>, m: usize, targets: Vec<f64>) -> Result<Self, RakingError> {
        if targets.len() != m {
            return Err(RakingError::LengthMismatch(targets.len(), m));
        }
        let sum = comp_sum(targets.iter().copied());
        for (i, &t) in targets.iter().enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(RakingError::BadTarget(i, t));
            }
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(RakingError::BadTarget(0, sum));
        }
        if let Some(&bad) = cells.iter().find(|&&c| c >= m) {
            return Err(RakingError::CellOutOfRange(bad, m));
        }
        Ok(PartitionAssignment { cells, m, targets })
    }

    /// Current weighted marginal of each cell.
    pub fn marginals(&self, sample: &WeightedSample) -> Vec<f64> {
        let mut sums = vec![Vec::new(); self.m];
        for (&cell, &w) in self.cells.iter().zip(&sample.weights) {
            sums[cell].push(w);
        }
        sums.into_iter()
            .map(|v| comp_sum(v.into_iter()))
            .collect()
    }

    /// Largest |marginal − target| over the cells.
    pub fn marginal_error(&self, sample: &WeightedSample) -> f64 {
        self.marginals(sample)
            .iter()
            .zip(&self.targets)
            .map(|(m, t)| (m - t).abs())
            .fold(0.0, f64::max)
    }
}

/// Ordered list of partitions to rake against; repeats are allowed.
#[derive(Debug, Clone)]
pub struct RakingSchedule {
    pub steps: Vec<PartitionAssignment>,
}

impl RakingSchedule {
    pub fn new(steps: Vec<PartitionAssignment>) -> Self {
        RakingSchedule { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// One raking step: inside cell j every weight is multiplied by
/// target_j / current_j, so the output marginals equal the targets exactly.
/// A cell with positive target but zero current weight is a hard error.
pub fn rake_step(
    sample: &WeightedSample,
    partition: &PartitionAssignment,
) -> Result<WeightedSample, RakingError> {
    if partition.cells.len() != sample.len() {
        return Err(RakingError::LengthMismatch(
            partition.cells.len(),
            sample.len(),
        ));
    }
    let current = partition.marginals(sample);
    let mut scale = vec![0.0; partition.m];
    for j in 0..partition.m {
        if current[j] <= 0.0 {
            return Err(RakingError::DegenerateCell(j));
        }
        scale[j] = partition.targets[j] / current[j];
    }
    let weights = sample
        .weights
        .iter()
        .zip(&partition.cells)
        .map(|(&w, &cell)| w * scale[cell])
        .collect();
    Ok(WeightedSample {
        points: sample.points.clone(),
        weights,
    })
}

/// Weighted mean after the first `n_steps` raking steps of the schedule;
/// `n_steps = 0` is the plain empirical mean.
pub fn raked_mean(
    sample: &WeightedSample,
    schedule: &RakingSchedule,
    n_steps: usize,
) -> Result<f64, RakingError> {
    let raked = raked_sample(sample, schedule, n_steps)?;
    Ok(raked.mean())
}

/// The weighted sample after `n_steps` raking steps.
pub fn raked_sample(
    sample: &WeightedSample,
    schedule: &RakingSchedule,
    n_steps: usize,
) -> Result<WeightedSample, RakingError> {
    if n_steps > schedule.len() {
        return Err(RakingError::ScheduleTooShort(schedule.len(), n_steps));
    }
    let mut current = sample.clone();
    for step in &schedule.steps[..n_steps] {
        current = rake_step(&current, step)?;
    }
    Ok(current)
}

/// Cycles through the partitions until every marginal matches its target to
/// `tol`, or `max_sweeps` full passes. Returns the raked sample and the
/// number of sweeps used.
pub fn rake_until_converged(
    sample: &WeightedSample,
    partitions: &[PartitionAssignment],
    tol: f64,
    max_sweeps: usize,
) -> Result<(WeightedSample, usize), RakingError> {
    let mut current = sample.clone();
    for sweep in 1..=max_sweeps {
        for p in partitions {
            current = rake_step(&current, p)?;
        }
        let err = partitions
            .iter()
            .map(|p| p.marginal_error(&current))
            .fold(0.0, f64::max);
        if err < tol {
            return Ok((current, sweep));
        }
    }
    Ok((current, max_sweeps))
}

// ---------------------------------------------------------------------------
// Variance-reduction design
// ---------------------------------------------------------------------------

/// Covariance factor of a partition's indicator vector:
/// C = Diag(marginal) − marginalᵗ·marginal. PSD with zero row sums;
/// a zero marginal cell is rejected.
pub fn cov_matrix_c(marginal: &[f64]) -> Result<SymMatrix, RakingError> {
    for (i, &p) in marginal.iter().enumerate() {
        if !(p > 0.0) {
            return Err(RakingError::ZeroMarginal(i));
        }
    }
    let m = marginal.len();
    let mut c = SymMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let delta = if i == j { marginal[i] } else { 0.0 };
            c.set_sym(i, j, delta - marginal[i] * marginal[j]);
        }
    }
    Ok(c)
}

/// Row-stochastic conditional matrix from a joint table: entry (k, l) is
/// P(col-cell l | row-cell k). Rows of the joint are the conditioning cells.
pub fn conditional_matrix(joint: &Matrix) -> Result<Matrix, RakingError> {
    let total: f64 = (0..joint.rows())
        .flat_map(|i| (0..joint.cols()).map(move |j| (i, j)))
        .map(|(i, j)| joint.get(i, j))
        .sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RakingError::BadJoint(total));
    }
    let mut cond = Matrix::zeros(joint.rows(), joint.cols());
    for k in 0..joint.rows() {
        let row_sum: f64 = (0..joint.cols()).map(|l| joint.get(k, l)).sum();
        if !(row_sum > 0.0) {
            return Err(RakingError::ZeroMarginal(k));
        }
        for l in 0..joint.cols() {
            cond.set(k, l, joint.get(k, l) / row_sum);
        }
    }
    Ok(cond)
}

/// Both design matrices derived from a joint probability table: the
/// covariance factor of the row partition and the conditional matrix of the
/// column partition given the row partition.
pub fn partition_matrices(joint: &Matrix) -> Result<(SymMatrix, Matrix), RakingError> {
    let marginal: Vec<f64> = (0..joint.rows())
        .map(|k| (0..joint.cols()).map(|l| joint.get(k, l)).sum())
        .collect();
    let c = cov_matrix_c(&marginal)?;
    let cond = conditional_matrix(joint)?;
    Ok((c, cond))
}

/// All design inputs the correction-matrix formula needs, for a fixed
/// schedule and a fixed target vector g of estimands:
///
/// * `c_mats[k]`: covariance factor of scheduled partition k,
/// * `conditionals[k][l]`: conditional matrix of partition l given k (k < l),
/// * `bases[k]`: the m_k × dim(g) matrix of conditional expectations
///   E[g_i | A_j^{(k)}].
#[derive(Debug, Clone)]
pub struct RakingDesign {
    pub c_mats: Vec<SymMatrix>,
    pub conditionals: Vec<Vec<Option<Matrix>>>,
    pub bases: Vec<Matrix>,
}

impl RakingDesign {
    /// Builds from per-slot targets, a joint-table provider for slot pairs
    /// (k < l), and the base conditional-expectation matrices.
    pub fn from_tables(
        targets: &[Vec<f64>],
        joints: &dyn Fn(usize, usize) -> Matrix,
        bases: Vec<Matrix>,
    ) -> Result<Self, RakingError> {
        let n = targets.len();
        if bases.len() != n {
            return Err(RakingError::LengthMismatch(bases.len(), n));
        }
        let mut c_mats = Vec::with_capacity(n);
        for t in targets {
            c_mats.push(cov_matrix_c(t)?);
        }
        let mut conditionals = vec![vec![None; n]; n];
        for k in 0..n {
            for l in (k + 1)..n {
                let joint = joints(k, l);
                conditionals[k][l] = Some(conditional_matrix(&joint)?);
            }
        }
        Ok(RakingDesign {
            c_mats,
            conditionals,
            bases,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.bases.len()
    }

    fn conditional(&self, from: usize, to: usize) -> &Matrix {
        self.conditionals[from][to]
            .as_ref()
            .expect("conditional matrices exist for every ordered slot pair")
    }
}

/// Empirical design: joints and conditional expectations estimated from a
/// sample, targets taken as known. `g` holds one row of estimand values per
/// observation.
pub fn empirical_design(
    assignments: &[Vec<usize>],
    targets: &[Vec<f64>],
    g: &[Vec<f64>],
) -> Result<RakingDesign, RakingError> {
    let slots = assignments.len();
    if targets.len() != slots {
        return Err(RakingError::LengthMismatch(targets.len(), slots));
    }
    let n = g.len();
    if n == 0 {
        return Err(RakingError::LengthMismatch(0, 1));
    }
    let g_dim = g[0].len();
    let sizes: Vec<usize> = targets.iter().map(|t| t.len()).collect();

    let mut bases = Vec::with_capacity(slots);
    for (slot, cells) in assignments.iter().enumerate() {
        if cells.len() != n {
            return Err(RakingError::LengthMismatch(cells.len(), n));
        }
        let m = sizes[slot];
        let mut sums = Matrix::zeros(m, g_dim);
        let mut counts = vec![0usize; m];
        for (obs, &cell) in cells.iter().enumerate() {
            if cell >= m {
                return Err(RakingError::CellOutOfRange(cell, m));
            }
            counts[cell] += 1;
            for d in 0..g_dim {
                sums.set(cell, d, sums.get(cell, d) + g[obs][d]);
            }
        }
        let mut base = Matrix::zeros(m, g_dim);
        for j in 0..m {
            if counts[j] == 0 {
                return Err(RakingError::DegenerateCell(j));
            }
            for d in 0..g_dim {
                base.set(j, d, sums.get(j, d) / counts[j] as f64);
            }
        }
        bases.push(base);
    }

    let joints = |k: usize, l: usize| -> Matrix {
        let mut joint = Matrix::zeros(sizes[k], sizes[l]);
        for obs in 0..n {
            let (a, b) = (assignments[k][obs], assignments[l][obs]);
            joint.set(a, b, joint.get(a, b) + 1.0 / n as f64);
        }
        joint
    };
    RakingDesign::from_tables(targets, &joints, bases)
}

/// Correction matrix Φ_k^{(N)}: the base conditional-expectation matrix of
/// slot k plus the alternating sum over all increasing chains
/// k < l₁ < … < l_L ≤ N of conditional-matrix products applied to the base
/// of the deepest slot. Slots are 1-based in the formula; this takes the
/// 0-based slot index.
pub fn phi_matrix(
    design: &RakingDesign,
    k: usize,
    n_steps: usize,
) -> Result<Matrix, RakingError> {
    if n_steps > design.n_slots() {
        return Err(RakingError::ScheduleTooShort(design.n_slots(), n_steps));
    }
    if n_steps > MAX_PHI_STEPS {
        return Err(RakingError::TooManySteps(n_steps));
    }
    if k >= n_steps {
        return Err(RakingError::ScheduleTooShort(n_steps, k + 1));
    }
    let mut phi = design.bases[k].clone();
    let later: Vec<usize> = ((k + 1)..n_steps).collect();
    let count = later.len();
    for mask in 1u32..(1u32 << count) {
        let chain: Vec<usize> = later
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &slot)| slot)
            .collect();
        let mut product = design.conditional(k, chain[0]).clone();
        for w in chain.windows(2) {
            product = product.mul(design.conditional(w[0], w[1]));
        }
        let term = product.mul(&design.bases[*chain.last().expect("nonempty chain")]);
        let sign = if chain.len() % 2 == 1 { -1.0 } else { 1.0 };
        phi = add_scaled(&phi, &term, sign);
    }
    Ok(phi)
}

fn add_scaled(a: &Matrix, b: &Matrix, s: f64) -> Matrix {
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j) + s * b.get(i, j));
        }
    }
    out
}

/// Sum over slots of Φ_kᵗ C_k Φ_k — the total variance removed by N raking
/// steps, as a dim(g) × dim(g) matrix.
fn correction_total(design: &RakingDesign, n_steps: usize) -> Result<SymMatrix, RakingError> {
    let g_dim = design.bases[0].cols();
    let mut total = SymMatrix::zeros(g_dim);
    for k in 0..n_steps {
        let phi = phi_matrix(design, k, n_steps)?;
        let term = phi.transpose().mul(&design.c_mats[k].as_matrix()).mul(&phi);
        for i in 0..g_dim {
            for j in i..g_dim {
                total.set_sym(i, j, total.get(i, j) + 0.5 * (term.get(i, j) + term.get(j, i)));
            }
        }
    }
    Ok(total)
}

/// σ² − Σ_k Φ_kᵗ C_k Φ_k for a scalar estimand (dim(g) = 1).
pub fn raked_variance(
    sigma2: f64,
    design: &RakingDesign,
    n_steps: usize,
) -> Result<f64, RakingError> {
    if n_steps == 0 {
        return Ok(sigma2);
    }
    let total = correction_total(design, n_steps)?;
    if total.dim() != 1 {
        return Err(RakingError::LengthMismatch(total.dim(), 1));
    }
    Ok(sigma2 - total.get(0, 0))
}

/// Σ₁ − Σ_k Φ_kᵗ C_k Φ_k for a vector estimand.
pub fn raked_covariance(
    sigma1: &SymMatrix,
    design: &RakingDesign,
    n_steps: usize,
) -> Result<SymMatrix, RakingError> {
    if n_steps == 0 {
        return Ok(sigma1.clone());
    }
    let total = correction_total(design, n_steps)?;
    if total.dim() != sigma1.dim() {
        return Err(RakingError::LengthMismatch(total.dim(), sigma1.dim()));
    }
    Ok(sigma1.sub(&total))
}

// ---------------------------------------------------------------------------
// Two-partition closed forms
// ---------------------------------------------------------------------------

/// Inputs for the closed-form variances after raking on two binary
/// partitions {A, Aᶜ} and {B, Bᶜ}.
#[derive(Debug, Clone, Copy)]
pub struct TwoPartitionInputs {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    pub e_x_given_a: f64,
    pub e_x_given_a_c: f64,
    pub e_x_given_b: f64,
    pub e_x_given_b_c: f64,
    pub sigma2: f64,
    pub e_x: f64,
}

/// Closed forms (σ⁽¹⁾², σ⁽²⁾², σ⁽∞⁾²) for the schedule A, B, A, B, …
pub fn two_partition_formulas(
    inp: &TwoPartitionInputs,
) -> Result<(f64, f64, f64), RakingError> {
    let (pa, pb, pab) = (inp.p_a, inp.p_b, inp.p_ab);
    if !(pa > 0.0 && pa < 1.0 && pb > 0.0 && pb < 1.0) {
        return Err(RakingError::ZeroMarginal(0));
    }
    let lo = (pa + pb - 1.0).max(0.0);
    let hi = pa.min(pb);
    if pab < lo - 1e-12 || pab > hi + 1e-12 {
        return Err(RakingError::BadJoint(pab));
    }
    let (qa, qb) = (1.0 - pa, 1.0 - pb);
    let da = inp.e_x_given_a - inp.e_x_given_a_c;
    let db = inp.e_x_given_b - inp.e_x_given_b_c;

    let s1 = inp.sigma2 - pa * qa * da * da;
    let s2 = inp.sigma2
        - pb * qb * db * db
        - (pa * qa + pb * qb * (pab - pa * pb) / (pa * pa * qa * qa)) * da * da;

    let delta_a = inp.e_x_given_a - inp.e_x;
    let delta_b = inp.e_x_given_b - inp.e_x;
    let denom = pa * pb * qa * qb - (pab - pa * pb) * (pab - pa * pb);
    if denom.abs() < 1e-15 {
        return Err(RakingError::DegenerateDesign);
    }
    let numer = pa
        * pb
        * (pa * delta_a * delta_a + pb * delta_b * delta_b
            - pa * pb * (delta_a - delta_b) * (delta_a - delta_b)
            - 2.0 * pab * delta_a * delta_b);
    let s_inf = inp.sigma2 - numer / denom;
    Ok((s1, s2, s_inf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rake_step_is_fixed_point_at_targets() {
        let s = WeightedSample::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = PartitionAssignment::new(vec![0, 0, 1, 1], 2, vec![0.5, 0.5]).unwrap();
        let raked = rake_step(&s, &p).unwrap();
        assert_eq!(raked.weights, s.weights);
    }

    #[test]
    fn rake_step_row_scaling() {
        let s = WeightedSample::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = PartitionAssignment::new(vec![0, 0, 1, 1], 2, vec![0.6, 0.4]).unwrap();
        let raked = rake_step(&s, &p).unwrap();
        assert_eq!(raked.weights, vec![0.3, 0.3, 0.2, 0.2]);
    }

    #[test]
    fn rake_step_calibrates_exactly() {
        let s = WeightedSample::new(
            vec![0.3, -0.2, 1.4, 0.9, -2.0],
            vec![0.11, 0.19, 0.34, 0.16, 0.2],
        )
        .unwrap();
        let p = PartitionAssignment::new(vec![0, 1, 0, 1, 0], 2, vec![0.7, 0.3]).unwrap();
        let raked = rake_step(&s, &p).unwrap();
        let marg = p.marginals(&raked);
        assert!(close(marg[0], 0.7, 1e-15));
        assert!(close(marg[1], 0.3, 1e-15));
        let total = raked.weights.iter().sum::<f64>();
        assert!(close(total, 1.0, 1e-12));
    }

    #[test]
    fn rake_step_rejects_empty_cell() {
        let s = WeightedSample::uniform(vec![1.0, 2.0]).unwrap();
        let p = PartitionAssignment::new(vec![0, 0], 2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            rake_step(&s, &p),
            Err(RakingError::DegenerateCell(1))
        ));
    }

    #[test]
    fn raked_mean_hand_example() {
        // 3 points {−1, 0, 2}, targets (2/3, 1/3) on {x<0.5}/{x≥0.5} → 1/3.
        let s = WeightedSample::uniform(vec![-1.0, 0.0, 2.0]).unwrap();
        let p = PartitionAssignment::new(vec![0, 0, 1], 2, vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let schedule = RakingSchedule::new(vec![p]);
        let m0 = raked_mean(&s, &schedule, 0).unwrap();
        assert!(close(m0, 1.0 / 3.0, 1e-15));
        let m1 = raked_mean(&s, &schedule, 1).unwrap();
        assert!(close(m1, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn independent_partitions_converge_in_two_steps() {
        // One observation per (A, B) cell: the empirical joint is exactly the
        // product of its marginals, so two steps reach the fixed point.
        let s = WeightedSample::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let pa = PartitionAssignment::new(vec![0, 0, 1, 1], 2, vec![0.6, 0.4]).unwrap();
        let pb = PartitionAssignment::new(vec![0, 1, 0, 1], 2, vec![0.3, 0.7]).unwrap();
        let mut steps = Vec::new();
        for i in 0..50 {
            steps.push(if i % 2 == 0 { pa.clone() } else { pb.clone() });
        }
        let schedule = RakingSchedule::new(steps);
        let m2 = raked_mean(&s, &schedule, 2).unwrap();
        let m50 = raked_mean(&s, &schedule, 50).unwrap();
        assert!(close(m2, m50, 1e-10), "m2 {m2} m50 {m50}");
    }

    #[test]
    fn cov_matrix_c_uniform_binary() {
        let c = cov_matrix_c(&[0.5, 0.5]).unwrap();
        assert!(close(c.get(0, 0), 0.25, 1e-15));
        assert!(close(c.get(0, 1), -0.25, 1e-15));
        let rows: f64 = c.get(0, 0) + c.get(0, 1);
        assert!(close(rows, 0.0, 1e-15));
    }

    #[test]
    fn cov_matrix_c_rejects_zero_cell() {
        assert!(matches!(
            cov_matrix_c(&[1.0, 0.0]),
            Err(RakingError::ZeroMarginal(1))
        ));
    }

    #[test]
    fn conditional_matrix_for_independent_joint() {
        let joint = Matrix::from_rows(&[vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        let (c, cond) = partition_matrices(&joint).unwrap();
        // Row marginals (0.4, 0.6); columns (0.3, 0.7) reproduced in each row.
        assert!(close(c.get(0, 0), 0.24, 1e-15));
        for k in 0..2 {
            assert!(close(cond.get(k, 0), 0.3, 1e-12));
            assert!(close(cond.get(k, 1), 0.7, 1e-12));
        }
    }

    #[test]
    fn phi_with_no_later_steps_is_the_base() {
        let bases = vec![Matrix::from_rows(&[vec![0.4], vec![-0.6]]).unwrap()];
        let design = RakingDesign::from_tables(
            &[vec![0.5, 0.5]],
            &|_, _| unreachable!("single slot has no pairs"),
            bases.clone(),
        )
        .unwrap();
        let phi = phi_matrix(&design, 0, 1).unwrap();
        assert_eq!(phi, bases[0]);
    }

    #[test]
    fn phi_single_chain_matches_hand_expansion() {
        // Two slots: Φ₁⁽²⁾ = base₁ − P_{2|1}·base₂.
        let joint = Matrix::from_rows(&[vec![0.2, 0.3], vec![0.25, 0.25]]).unwrap();
        let base1 = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let base2 = Matrix::from_rows(&[vec![0.5], vec![0.25]]).unwrap();
        let design = RakingDesign::from_tables(
            &[vec![0.5, 0.5], vec![0.45, 0.55]],
            &|_, _| joint.clone(),
            vec![base1.clone(), base2.clone()],
        )
        .unwrap();
        let phi = phi_matrix(&design, 0, 2).unwrap();
        let cond = conditional_matrix(&joint).unwrap();
        let expected = add_scaled(&base1, &cond.mul(&base2), -1.0);
        for i in 0..2 {
            assert!(close(phi.get(i, 0), expected.get(i, 0), 1e-15));
        }
    }

    #[test]
    fn raked_variance_zero_steps_returns_base() {
        let bases = vec![Matrix::from_rows(&[vec![0.4], vec![-0.6]]).unwrap()];
        let design =
            RakingDesign::from_tables(&[vec![0.5, 0.5]], &|_, _| unreachable!(), bases).unwrap();
        assert_eq!(raked_variance(0.123, &design, 0).unwrap(), 0.123);
    }

    #[test]
    fn two_partition_reference_values() {
        let inp = TwoPartitionInputs {
            p_a: 0.5,
            p_b: 0.5,
            p_ab: 0.25,
            e_x_given_a: 1.0 / 6.0,
            e_x_given_a_c: -1.0 / 6.0,
            e_x_given_b: -0.5,
            e_x_given_b_c: 0.5,
            sigma2: 7.0 / 24.0,
            e_x: 0.0,
        };
        let (s1, s2, s_inf) = two_partition_formulas(&inp).unwrap();
        assert!(close(s1, 19.0 / 72.0, 1e-15), "s1 {s1}");
        assert!(close(s2, 1.0 / 72.0, 1e-15), "s2 {s2}");
        assert!(close(s_inf, 1.0 / 72.0, 1e-15), "s_inf {s_inf}");
    }

    #[test]
    fn two_partition_no_signal_keeps_sigma2() {
        let inp = TwoPartitionInputs {
            p_a: 0.3,
            p_b: 0.6,
            p_ab: 0.18,
            e_x_given_a: 0.0,
            e_x_given_a_c: 0.0,
            e_x_given_b: 0.0,
            e_x_given_b_c: 0.0,
            sigma2: 1.7,
            e_x: 0.0,
        };
        let (s1, s2, s_inf) = two_partition_formulas(&inp).unwrap();
        assert_eq!(s1, 1.7);
        assert_eq!(s2, 1.7);
        assert_eq!(s_inf, 1.7);
    }

    #[test]
    fn two_partition_rejects_degenerate_denominator() {
        // p_AB = p_A = p_B makes the partitions identical.
        let inp = TwoPartitionInputs {
            p_a: 0.5,
            p_b: 0.5,
            p_ab: 0.5,
            e_x_given_a: 0.1,
            e_x_given_a_c: -0.1,
            e_x_given_b: 0.1,
            e_x_given_b_c: -0.1,
            sigma2: 1.0,
            e_x: 0.0,
        };
        assert!(matches!(
            two_partition_formulas(&inp),
            Err(RakingError::DegenerateDesign)
        ));
    }
}
