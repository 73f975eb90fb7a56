//! Benchmark configuration: a single JSON-serializable document describing
//! one Monte-Carlo run, plus the built-in experiment presets.

use serde::{Deserialize, Serialize};

use crate::events::{IntervalPartition, IntervalSet};

use super::dist::DiscreteDist;

/// Which statistic pair a run exercises. The auxiliary variants compute the
/// classical statistic on the same samples for side-by-side power columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Z,
    ZAuxRaking,
    ZAuxCondmean,
    Chisq,
    ChisqAuxRaking,
    ChisqAuxCondmean,
}

impl TestKind {
    pub fn is_z(self) -> bool {
        matches!(self, TestKind::Z | TestKind::ZAuxRaking | TestKind::ZAuxCondmean)
    }

    pub fn aux_kind(self) -> AuxKind {
        match self {
            TestKind::Z | TestKind::Chisq => AuxKind::None,
            TestKind::ZAuxRaking | TestKind::ChisqAuxRaking => AuxKind::Raking,
            TestKind::ZAuxCondmean | TestKind::ChisqAuxCondmean => AuxKind::Condmean,
        }
    }

    pub fn with_aux(self, aux: AuxKind) -> TestKind {
        match (self.is_z(), aux) {
            (true, AuxKind::None) => TestKind::Z,
            (true, AuxKind::Raking) => TestKind::ZAuxRaking,
            (true, AuxKind::Condmean) => TestKind::ZAuxCondmean,
            (false, AuxKind::None) => TestKind::Chisq,
            (false, AuxKind::Raking) => TestKind::ChisqAuxRaking,
            (false, AuxKind::Condmean) => TestKind::ChisqAuxCondmean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxKind {
    None,
    Raking,
    Condmean,
}

/// Distribution override: atoms and probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistConfig {
    pub atoms: Vec<f64>,
    pub probs: Vec<f64>,
}

/// A partition given by interval cells, with optional raking targets
/// (omitted targets mean "use the exact law marginals").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub labels: Vec<String>,
    pub cells: Vec<IntervalSet>,
    #[serde(default)]
    pub targets: Option<Vec<f64>>,
}

impl PartitionConfig {
    pub fn to_partition(&self) -> Result<IntervalPartition, crate::events::EventError> {
        IntervalPartition::new(self.labels.clone(), self.cells.clone())
    }
}

/// Auxiliary-information parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AuxConfig {
    /// Raking schedule: partitions raked in order (cycled if `steps` exceeds
    /// the list length).
    #[serde(default)]
    pub schedule: Option<Vec<PartitionConfig>>,
    /// Number of raking steps N.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Conditioning event C for the conditional-mean engine.
    #[serde(default)]
    pub c_event: Option<IntervalSet>,
    /// The known value of P(X|C); defaults to the exact law value.
    #[serde(default)]
    pub c_value: Option<f64>,
}

/// One Monte-Carlo run: test kind, law, sample-size grid, replication count,
/// threshold rule, seed, and auxiliary parameters. This struct is the JSON
/// config-file schema; field names match one-to-one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub test: TestKind,
    #[serde(default)]
    pub distribution: Option<DistConfig>,
    pub n: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Fixed thresholds, one per entry of `n` (a single value broadcasts).
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    pub seed: u64,
    /// Null mean for the Z family.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Null cell weights for the chi-square family.
    #[serde(default)]
    pub p0: Option<Vec<f64>>,
    /// Chi-square test partition cells.
    #[serde(default)]
    pub partition: Option<PartitionConfig>,
    /// Use exact law quantities for Σ/K ingredients instead of plug-ins.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub aux: Option<AuxConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// Event A⁽¹⁾ = [−0.5, 0] ∪ [0.5, 1] of the benchmark setups.
pub fn event_a1() -> IntervalSet {
    IntervalSet::new(vec![(-0.5, 0.0), (0.5, 1.0)]).expect("static event")
}

fn event_a1_complement() -> IntervalSet {
    IntervalSet::new(vec![
        (f64::NEG_INFINITY, -0.5),
        (0.0, 0.5),
        (1.0, f64::INFINITY),
    ])
    .expect("static event")
}

/// The two auxiliary partitions raked against in the benchmarks.
pub fn default_schedule() -> Vec<PartitionConfig> {
    vec![
        PartitionConfig {
            labels: vec!["A1".into(), "A1c".into()],
            cells: vec![event_a1(), event_a1_complement()],
            targets: None,
        },
        PartitionConfig {
            labels: vec!["B".into(), "Bc".into()],
            cells: vec![IntervalSet::at_most(0.0), IntervalSet::above(0.0)],
            targets: None,
        },
    ]
}

fn le_half_partition() -> PartitionConfig {
    PartitionConfig {
        labels: vec!["A".into(), "Ac".into()],
        cells: vec![IntervalSet::at_most(0.5), IntervalSet::above(0.5)],
        targets: None,
    }
}

fn le_zero_partition() -> PartitionConfig {
    PartitionConfig {
        labels: vec!["A".into(), "Ac".into()],
        cells: vec![IntervalSet::at_most(0.0), IntervalSet::above(0.0)],
        targets: None,
    }
}

/// Built-in experiment setups on the reference distribution.
///
/// * Z family: null mean 0, alternative mean hypothesis μ = 0.05.
/// * Chi-square with raking: cells split at 0.5 (true weights (3/4, 1/4)),
///   alternative null weights (5/8, 3/8).
/// * Chi-square with conditional-mean info: cells split at 0 (true weights
///   (1/2, 1/2)), alternative null weights (3/8, 5/8).
/// * Conditioning event C = [−0.5, 0.5] with known P(X|C) = 0.
pub fn preset(kind: TestKind, hypothesis: Hypothesis) -> BenchConfig {
    let aux = match kind.aux_kind() {
        AuxKind::None => None,
        AuxKind::Raking => Some(AuxConfig {
            schedule: Some(default_schedule()),
            steps: Some(2),
            c_event: None,
            c_value: None,
        }),
        AuxKind::Condmean => Some(AuxConfig {
            schedule: None,
            steps: None,
            c_event: Some(IntervalSet::single(-0.5, 0.5)),
            c_value: Some(0.0),
        }),
    };
    let (mu, p0, partition) = if kind.is_z() {
        let mu = match hypothesis {
            Hypothesis::Null => 0.0,
            Hypothesis::Alternative => 0.05,
        };
        (Some(mu), None, None)
    } else {
        // Raking benchmarks test the split at 0.5; the conditional-mean ones
        // the split at 0.
        let raking = kind.aux_kind() == AuxKind::Raking;
        let partition = if raking {
            le_half_partition()
        } else {
            le_zero_partition()
        };
        let p0 = match (hypothesis, raking) {
            (Hypothesis::Null, true) => vec![0.75, 0.25],
            (Hypothesis::Alternative, true) => vec![5.0 / 8.0, 3.0 / 8.0],
            (Hypothesis::Null, false) => vec![0.5, 0.5],
            (Hypothesis::Alternative, false) => vec![3.0 / 8.0, 5.0 / 8.0],
        };
        (None, Some(p0), Some(partition))
    };
    BenchConfig {
        test: kind,
        distribution: None,
        n: vec![100, 200, 500, 1000],
        reps: 10_000,
        alpha: Some(0.05),
        t: None,
        seed: 20_240_801,
        mu,
        p0,
        partition,
        oracle: false,
        aux,
    }
}

impl BenchConfig {
    pub fn resolve_distribution(&self) -> Result<DiscreteDist, super::dist::DistError> {
        match &self.distribution {
            None => Ok(super::dist::reference_distribution()),
            Some(d) => DiscreteDist::new(d.atoms.clone(), d.probs.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_roundtrip_through_json() {
        for kind in [
            TestKind::Z,
            TestKind::ZAuxRaking,
            TestKind::ZAuxCondmean,
            TestKind::Chisq,
            TestKind::ChisqAuxRaking,
            TestKind::ChisqAuxCondmean,
        ] {
            let cfg = preset(kind, Hypothesis::Alternative);
            let json = serde_json::to_string(&cfg).unwrap();
            let back: BenchConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back.test, kind);
            assert_eq!(back.n, cfg.n);
        }
    }

    #[test]
    fn kebab_case_test_names() {
        assert_eq!(
            serde_json::to_string(&TestKind::ChisqAuxCondmean).unwrap(),
            "\"chisq-aux-condmean\""
        );
        assert_eq!(
            serde_json::from_str::<TestKind>("\"z-aux-raking\"").unwrap(),
            TestKind::ZAuxRaking
        );
    }

    #[test]
    fn with_aux_maps_families() {
        assert_eq!(TestKind::Z.with_aux(AuxKind::Condmean), TestKind::ZAuxCondmean);
        assert_eq!(TestKind::ChisqAuxRaking.with_aux(AuxKind::None), TestKind::Chisq);
    }
}
