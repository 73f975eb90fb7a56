//! Desk-scale experiment harness: the bundled reference distribution, seeded
//! sampling, Monte-Carlo power and β-risk estimation for the four tests,
//! gain tables, and ECDF exports.

mod config;
mod dist;
mod ecdf;
mod oracle;
mod power;

pub use config::{
    default_schedule, event_a1, preset, AuxConfig, AuxKind, BenchConfig, DistConfig, Hypothesis,
    PartitionConfig, TestKind,
};
pub use dist::{draw_sample, reference_distribution, DiscreteDist};
pub use ecdf::{ecdf_export, ecdf_rows};
pub use oracle::{
    condmean_oracle, design_for_f, design_for_mean, joint_table, law_marginals, CondMeanOracle,
};
pub use power::{
    estimate_power, gain_table, simulate_statistics, BenchError, PowerReport, PowerRow,
    SimulatedStatistics,
};
