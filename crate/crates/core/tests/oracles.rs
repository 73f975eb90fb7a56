//! Independent numeric oracles: every check here recomputes its expected
//! value through a route that shares no code with the implementation it
//! verifies (power series, quadrature, hand expansions, convex projection,
//! Monte-Carlo moments).

use auxinfo::bench::{
    default_schedule, law_marginals, reference_distribution, simulate_statistics, preset,
    Hypothesis, TestKind,
};
use auxinfo::condmean::{theta_star_scalar, CondMeanInfo};
use auxinfo::events::{IntervalPartition, IntervalSet};
use auxinfo::gauss::{normal_quantile, singular_mvn_logdensity, ChiSquared, GaussianSpec};
use auxinfo::matrix::{Matrix, SymMatrix};
use auxinfo::raking::{
    conditional_matrix, phi_matrix, rake_until_converged, PartitionAssignment, RakingDesign,
    WeightedSample,
};
use auxinfo::rng::child_rng;

/// Maclaurin series for erf, accurate to ~1e-15 for |x| ≤ 3.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        let n = n as f64;
        term *= -x * x / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn normal_cdf_series(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Quantile by bisection against the series CDF.
fn normal_quantile_bisect(p: f64) -> f64 {
    let (mut lo, mut hi) = (-8.0f64, 8.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_series(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn normal_quantile_matches_series_bisection() {
    for &p in &[
        0.001, 0.01, 0.025, 0.1, 0.3, 0.5, 0.7, 0.841344746, 0.9, 0.975, 0.99, 0.999,
    ] {
        let got = normal_quantile(p).unwrap();
        let want = normal_quantile_bisect(p);
        assert!(
            (got - want).abs() <= 1e-8,
            "p = {p}: {got} vs series {want}"
        );
    }
}

#[test]
fn chi2_cdf_matches_simpson_quadrature() {
    // Direct pdf integration, no incomplete-gamma machinery.
    for df in [1u32, 2, 3, 4] {
        let chi = ChiSquared::new(df).unwrap();
        for &x in &[0.5f64, 1.0, 3.84, 6.0] {
            let a = df as f64 / 2.0;
            let log_norm = -a * std::f64::consts::LN_2 - ln_gamma_oracle(a);
            let pdf = |t: f64| {
                if t <= 0.0 {
                    0.0
                } else {
                    ((a - 1.0) * t.ln() - t / 2.0 + log_norm).exp()
                }
            };
            // Substitution t = u² tames the df = 1 endpoint singularity.
            let integrand = |u: f64| pdf(u * u) * 2.0 * u;
            let want = simpson(&integrand, 1e-9, x.sqrt(), 20_001);
            assert!(
                (chi.cdf(x) - want).abs() < 1e-6,
                "df {df} x {x}: {} vs {want}",
                chi.cdf(x)
            );
        }
    }
}

/// Stirling-with-correction ln Γ for the quadrature oracle (independent of
/// the library's Lanczos form).
fn ln_gamma_oracle(z: f64) -> f64 {
    // Γ(1/2) = √π, Γ(1) = 1, Γ(3/2) = √π/2, Γ(2) = 1 cover the dfs used here.
    let pi = std::f64::consts::PI;
    if (z - 0.5).abs() < 1e-12 {
        0.5 * pi.ln()
    } else if (z - 1.0).abs() < 1e-12 || (z - 2.0).abs() < 1e-12 {
        0.0
    } else if (z - 1.5).abs() < 1e-12 {
        0.5 * pi.ln() - std::f64::consts::LN_2
    } else {
        unreachable!("oracle covers df ≤ 4")
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let h = (b - a) / (n - 1) as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn singular_density_integrates_to_one() {
    // Dimension 1.
    let spec = GaussianSpec::with_default_tol(SymMatrix::new(1, &[0.7]).unwrap()).unwrap();
    let f = |x: f64| {
        singular_mvn_logdensity(&[x], &spec)
            .unwrap()
            .map_or(0.0, f64::exp)
    };
    let total = simpson(&f, -10.0, 10.0, 4001);
    assert!((total - 1.0).abs() < 1e-4, "dim-1 mass {total}");

    // Rank-1 in dimension 2: integrate along the support line.
    let cov = SymMatrix::new(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
    let spec = GaussianSpec::with_default_tol(cov).unwrap();
    let u = [0.5f64.sqrt(), -(0.5f64.sqrt())];
    let f = |t: f64| {
        singular_mvn_logdensity(&[t * u[0], t * u[1]], &spec)
            .unwrap()
            .map_or(0.0, f64::exp)
    };
    let total = simpson(&f, -10.0, 10.0, 4001);
    assert!((total - 1.0).abs() < 1e-4, "rank-1 mass {total}");
}

/// Hand expansion of the three-step correction matrix for slot 0:
/// base₀ − P₀₁B₁ − P₀₂B₂ + P₀₁P₁₂B₂.
#[test]
fn phi_three_steps_matches_hand_expansion() {
    let joint01 = Matrix::from_rows(&[vec![0.2, 0.3], vec![0.25, 0.25]]).unwrap();
    let joint02 = Matrix::from_rows(&[vec![0.1, 0.4], vec![0.35, 0.15]]).unwrap();
    let joint12 = Matrix::from_rows(&[vec![0.22, 0.23], vec![0.23, 0.32]]).unwrap();
    let b0 = Matrix::from_rows(&[vec![1.0, -0.5], vec![-1.0, 0.5]]).unwrap();
    let b1 = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.25, -0.2]]).unwrap();
    let b2 = Matrix::from_rows(&[vec![-0.3, 0.2], vec![0.6, -0.1]]).unwrap();
    let targets = vec![vec![0.5, 0.5], vec![0.45, 0.55], vec![0.45, 0.55]];
    let joints = move |k: usize, l: usize| match (k, l) {
        (0, 1) => joint01.clone(),
        (0, 2) => joint02.clone(),
        (1, 2) => joint12.clone(),
        _ => unreachable!(),
    };
    let design =
        RakingDesign::from_tables(&targets, &joints, vec![b0.clone(), b1.clone(), b2.clone()])
            .unwrap();

    let p01 = conditional_matrix(&joints(0, 1)).unwrap();
    let p02 = conditional_matrix(&joints(0, 2)).unwrap();
    let p12 = conditional_matrix(&joints(1, 2)).unwrap();
    let mut expected = b0.clone();
    expected = sub(&expected, &p01.mul(&b1));
    expected = sub(&expected, &p02.mul(&b2));
    let chain = p01.mul(&p12).mul(&b2);
    for i in 0..2 {
        for j in 0..2 {
            expected.set(i, j, expected.get(i, j) + chain.get(i, j));
        }
    }

    let phi = phi_matrix(&design, 0, 3).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (phi.get(i, j) - expected.get(i, j)).abs() < 1e-14,
                "({i},{j}): {} vs {}",
                phi.get(i, j),
                expected.get(i, j)
            );
        }
    }
}

fn sub(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j) - b.get(i, j));
        }
    }
    out
}

/// Iterated proportional fitting on a 2×2 table converges to the
/// Kullback–Leibler projection: the table with the prescribed marginals and
/// the seed's odds ratio. The oracle solves that characterization directly
/// by bisection.
#[test]
fn ipf_limit_matches_kl_projection_oracle() {
    let d = reference_distribution();
    let sched = default_schedule();
    let parts: Vec<IntervalPartition> =
        sched.iter().map(|p| p.to_partition().unwrap()).collect();
    let targets: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| law_marginals(&d, p).unwrap())
        .collect();

    let sample = d.sample_vec(&mut child_rng(31, 0), 800);
    let assigns: Vec<Vec<usize>> = parts.iter().map(|p| p.assign(&sample).unwrap()).collect();
    let ws = WeightedSample::uniform(sample.clone()).unwrap();
    let steps: Vec<PartitionAssignment> = assigns
        .iter()
        .zip(&targets)
        .map(|(c, t)| PartitionAssignment::new(c.clone(), t.len(), t.clone()).unwrap())
        .collect();
    let (raked, sweeps) = rake_until_converged(&ws, &steps, 1e-12, 1000).unwrap();
    assert!(sweeps < 1000, "IPF did not converge in {sweeps} sweeps");

    // Aggregate converged weights and the empirical seed per joint cell.
    let mut q = [[0.0f64; 2]; 2];
    let mut p_hat = [[0.0f64; 2]; 2];
    for i in 0..sample.len() {
        let (a, b) = (assigns[0][i], assigns[1][i]);
        q[a][b] += raked.weights[i];
        p_hat[a][b] += 1.0 / sample.len() as f64;
    }

    let odds = |t: &[[f64; 2]; 2]| t[0][0] * t[1][1] / (t[0][1] * t[1][0]);
    let (ra, cb) = (targets[0][0], targets[1][0]);
    let (mut lo, mut hi) = ((ra + cb - 1.0).max(0.0), ra.min(cb));
    let target_odds = odds(&p_hat);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let t = [[mid, ra - mid], [cb - mid, 1.0 - ra - cb + mid]];
        if odds(&t) < target_odds {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q11 = 0.5 * (lo + hi);
    let oracle = [[q11, ra - q11], [cb - q11, 1.0 - ra - cb + q11]];
    for a in 0..2 {
        for b in 0..2 {
            assert!(
                (q[a][b] - oracle[a][b]).abs() < 1e-8,
                "cell ({a},{b}): {} vs {}",
                q[a][b],
                oracle[a][b]
            );
        }
    }
}

/// Fast Monte-Carlo version of the variance-reduction consistency check; the
/// full-scale version lives in the acceptance suite.
#[test]
fn raked_mean_variance_tracks_the_design_prediction() {
    let d = reference_distribution();
    let sched = default_schedule();
    let parts: Vec<IntervalPartition> =
        sched.iter().map(|p| p.to_partition().unwrap()).collect();
    let targets: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| law_marginals(&d, p).unwrap())
        .collect();
    let n = 500;
    let reps = 4000;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for r in 0..reps {
        let sample = d.sample_vec(&mut child_rng(55, r), n);
        let assigns: Vec<Vec<usize>> =
            parts.iter().map(|p| p.assign(&sample).unwrap()).collect();
        let ws = WeightedSample::uniform(sample).unwrap();
        let steps: Vec<PartitionAssignment> = assigns
            .iter()
            .zip(&targets)
            .map(|(c, t)| PartitionAssignment::new(c.clone(), t.len(), t.clone()).unwrap())
            .collect();
        let schedule = auxinfo::raking::RakingSchedule::new(steps);
        let m = auxinfo::raking::raked_mean(&ws, &schedule, 2).unwrap();
        let dev = (n as f64).sqrt() * m;
        sum += dev;
        sumsq += dev * dev;
    }
    let r = reps as f64;
    let var = sumsq / r - (sum / r) * (sum / r);
    let target = 1.0 / 72.0;
    assert!(
        (var / target - 1.0).abs() < 0.10,
        "raked variance {var} vs {target}"
    );
}

/// Same idea for the adjusted-mean estimator.
#[test]
fn theta_star_variance_tracks_the_reduced_limit() {
    let d = reference_distribution();
    let info = CondMeanInfo::new(IntervalSet::single(-0.5, 0.5), 0.0);
    let n = 500;
    let reps = 4000;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for r in 0..reps {
        let sample = d.sample_vec(&mut child_rng(56, r), n);
        let est = theta_star_scalar(&sample, &info).unwrap();
        let dev = (n as f64).sqrt() * est.value;
        sum += dev;
        sumsq += dev * dev;
    }
    let r = reps as f64;
    let var = sumsq / r - (sum / r) * (sum / r);
    let target = 11.0 / 48.0;
    assert!(
        (var / target - 1.0).abs() < 0.10,
        "theta-star variance {var} vs {target}"
    );
}

/// The plug-in ingredients converge to their exact-law limits.
#[test]
fn plugin_k_quantities_converge() {
    let d = reference_distribution();
    let info = CondMeanInfo::new(IntervalSet::single(-0.5, 0.5), 0.0);
    let n = 10_000;
    let sample = d.sample_vec(&mut child_rng(57, 0), n);
    let est = auxinfo::condmean::cond_mean_estimates(&sample, &info, None).unwrap();
    // n·K̂₂₂ → Var(X|C) = 1/8 and the effective scale → Var(X|C)/P(C) = 1/4.
    let n_k22 = est.k22 * n as f64;
    assert!((n_k22 / 0.125 - 1.0).abs() < 0.03, "n·K22 = {n_k22}");
    assert!((est.s22() / 0.25 - 1.0).abs() < 0.03, "s22 = {}", est.s22());
    match est.k12 {
        auxinfo::condmean::K12::Scalar(k12) => {
            let s12 = k12 * n as f64;
            assert!((s12 / 0.125 - 1.0).abs() < 0.05, "s12 = {s12}");
        }
        _ => unreachable!(),
    }
}

/// The two-partition closed forms agree with a brute-force Monte-Carlo
/// raking oracle on a synthetic law unrelated to the bundled one.
#[test]
fn two_partition_closed_forms_match_mc_raking_on_synthetic_law() {
    use auxinfo::bench::DiscreteDist;
    use auxinfo::raking::{two_partition_formulas, TwoPartitionInputs};

    // Four atoms, one per (A, B) cell, with product probabilities: A is the
    // sign of x, B is |x| below/above 2.
    let p_a = 0.4; // P(x < 0)
    let p_b = 0.7; // P(|x| < 2)
    let atoms = vec![-3.0, -1.0, 1.5, 2.5];
    let probs = vec![p_a * (1.0 - p_b), p_a * p_b, (1.0 - p_a) * p_b, (1.0 - p_a) * (1.0 - p_b)];
    let d = DiscreteDist::new(atoms, probs).unwrap();

    let e_x = d.mean();
    let in_a = |x: f64| x < 0.0;
    let in_b = |x: f64| x.abs() < 2.0;
    let cond = |pred: &dyn Fn(f64) -> bool| {
        let mass = d.expect(|x| f64::from(pred(x)));
        d.expect(|x| if pred(x) { x } else { 0.0 }) / mass
    };
    let inputs = TwoPartitionInputs {
        p_a,
        p_b,
        p_ab: d.expect(|x| f64::from(in_a(x) && in_b(x))),
        e_x_given_a: cond(&in_a),
        e_x_given_a_c: cond(&|x| !in_a(x)),
        e_x_given_b: cond(&in_b),
        e_x_given_b_c: cond(&|x| !in_b(x)),
        sigma2: d.variance(),
        e_x,
    };
    let (s1, s2, s_inf) = two_partition_formulas(&inputs).unwrap();
    assert!(s_inf <= s2 + 1e-12 && s2 <= s1 + 1e-12 && s1 <= inputs.sigma2 + 1e-12);
    // Independent partitions: the two-step value is already the limit.
    assert!((s_inf - s2).abs() < 1e-12);

    // Monte-Carlo oracle for σ⁽¹⁾ and σ⁽²⁾.
    let part_a = IntervalPartition::binary(
        "A",
        IntervalSet::new(vec![(f64::NEG_INFINITY, -1e-9)]).unwrap(),
        "Ac",
        IntervalSet::new(vec![(0.0, f64::INFINITY)]).unwrap(),
    );
    let part_b = IntervalPartition::binary(
        "B",
        IntervalSet::single(-2.0 + 1e-9, 2.0 - 1e-9),
        "Bc",
        IntervalSet::new(vec![(f64::NEG_INFINITY, -2.0), (2.0, f64::INFINITY)]).unwrap(),
    );
    let targets = [vec![p_a, 1.0 - p_a], vec![p_b, 1.0 - p_b]];
    let n = 600;
    let reps = 6000;
    let mut sum = [0.0f64; 2];
    let mut sumsq = [0.0f64; 2];
    for r in 0..reps {
        let sample = d.sample_vec(&mut child_rng(58, r), n);
        let assigns = [
            part_a.assign(&sample).unwrap(),
            part_b.assign(&sample).unwrap(),
        ];
        let ws = WeightedSample::uniform(sample).unwrap();
        let steps: Vec<PartitionAssignment> = assigns
            .iter()
            .zip(&targets)
            .map(|(c, t)| PartitionAssignment::new(c.clone(), 2, t.clone()).unwrap())
            .collect();
        let schedule = auxinfo::raking::RakingSchedule::new(steps);
        for (i, k) in [1usize, 2].iter().enumerate() {
            let m = auxinfo::raking::raked_mean(&ws, &schedule, *k).unwrap();
            let dev = (n as f64).sqrt() * (m - e_x);
            sum[i] += dev;
            sumsq[i] += dev * dev;
        }
    }
    let r = reps as f64;
    for (i, target) in [s1, s2].iter().enumerate() {
        let var = sumsq[i] / r - (sum[i] / r).powi(2);
        assert!(
            (var / target - 1.0).abs() < 0.10,
            "N={} variance {var} vs closed form {target}",
            i + 1
        );
    }
}

/// Under the null, the auxiliary chi-square statistic with exact covariances
/// is stochastically close to its nominal limit; a moderate-n snapshot of
/// the full-scale acceptance check.
#[test]
fn aux_chisq_null_statistic_mean_is_near_df() {
    let mut cfg = preset(TestKind::ChisqAuxCondmean, Hypothesis::Null);
    cfg.oracle = true;
    cfg.reps = 4000;
    let sims = simulate_statistics(&cfg, 1000).unwrap();
    assert_eq!(sims.aux_failures, 0);
    let mean = sims.aux.iter().sum::<f64>() / sims.aux.len() as f64;
    // χ²(1) has mean 1; allow generous Monte-Carlo slack.
    assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
}
