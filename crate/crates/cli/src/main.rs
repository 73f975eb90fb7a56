//! `auxpower`: hypothesis tests with auxiliary information and their
//! Monte-Carlo power benchmarks.
//!
//! Exit codes: 0 on success, 2 on configuration or validation failure,
//! 1 on I/O errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use auxinfo::bench::{
    ecdf_export, estimate_power, gain_table, law_marginals, preset, simulate_statistics,
    AuxKind as CoreAuxKind, BenchConfig, BenchError, Hypothesis, TestKind,
};
use auxinfo::chisq::{aux_chi2_statistic, chi2_statistic, PartitionSpec};
use auxinfo::condmean::{theta_star_scalar, theta_star_vector};
use auxinfo::gauss::{normal_quantile, ChiSquared};
use auxinfo::raking::{raked_mean, PartitionAssignment, RakingSchedule, WeightedSample};
use auxinfo::rng::child_rng;
use auxinfo::ztest::{aux_z_statistic, sample_std, z_statistic, MeanAuxEstimate};

#[derive(Parser)]
#[command(
    name = "auxpower",
    about = "Z and chi-square tests boosted by auxiliary information, with Monte-Carlo power benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-shot Z test on a drawn or supplied sample.
    Ztest(TestArgs),
    /// One-shot chi-square test on a drawn or supplied sample.
    Chisq(TestArgs),
    /// Rake a sample against the schedule and report marginals and means.
    Rake(RakeArgs),
    /// Monte-Carlo power estimation over a sample-size grid.
    Power(BenchArgs),
    /// Acceptance-ratio table over an (n, t) grid.
    GainTable(BenchArgs),
    /// Export the empirical CDF of simulated statistics.
    Ecdf(EcdfArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file (fields mirror the benchmark config schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Replications per grid point.
    #[arg(long)]
    reps: Option<usize>,
    /// Nominal level (threshold from the null quantile).
    #[arg(long, conflicts_with = "t")]
    alpha: Option<f64>,
    /// Fixed thresholds, one per sample size (or a single broadcast value).
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use exact law quantities for covariance/coefficient ingredients.
    #[arg(long, conflicts_with = "plugin")]
    oracle: bool,
    /// Use plug-in estimates (the default).
    #[arg(long)]
    plugin: bool,
    /// Auxiliary-information engine.
    #[arg(long, value_enum)]
    aux: Option<AuxArg>,
    /// Null mean for the Z family.
    #[arg(long)]
    mu: Option<f64>,
    /// Null cell weights for the chi-square family, comma-separated.
    #[arg(long, value_delimiter = ',')]
    p0: Option<Vec<f64>>,
    /// Benchmark under the null instead of the alternative setup.
    #[arg(long)]
    null: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AuxArg {
    Raking,
    Condmean,
    None,
}

impl From<AuxArg> for CoreAuxKind {
    fn from(a: AuxArg) -> Self {
        match a {
            AuxArg::Raking => CoreAuxKind::Raking,
            AuxArg::Condmean => CoreAuxKind::Condmean,
            AuxArg::None => CoreAuxKind::None,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Read the sample from a numeric-column CSV instead of drawing one.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct RakeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raking steps to apply.
    #[arg(long, default_value_t = 2)]
    steps: usize,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Statistic family to benchmark.
    #[arg(long, value_enum, default_value_t = Family::Z)]
    family: Family,
}

#[derive(Args)]
struct EcdfArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Family::Chisq)]
    family: Family,
    /// Which statistic stream to export.
    #[arg(long, value_enum, default_value_t = Which::Aux)]
    which: Which,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Z,
    Chisq,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Classic,
    Aux,
}

#[derive(Debug)]
enum CliError {
    Io(std::io::Error),
    Usage(String),
    Bench(BenchError),
    Stat(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Usage(m) => write!(f, "invalid invocation: {m}"),
            CliError::Bench(e) => write!(f, "{e}"),
            CliError::Stat(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(io) => CliError::Io(io),
            other => CliError::Bench(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Bench(BenchError::Io(_)) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("auxpower: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ztest(args) => one_shot(Family::Z, args),
        Command::Chisq(args) => one_shot(Family::Chisq, args),
        Command::Rake(args) => rake(args),
        Command::Power(args) => {
            let cfg = resolve_config(&args.common, args.family, false)?;
            let report = estimate_power(&cfg)?;
            write_out(&args.common.out, report.to_csv_string().as_bytes())
        }
        Command::GainTable(args) => {
            let cfg = resolve_config(&args.common, args.family, true)?;
            let report = gain_table(&cfg)?;
            write_out(&args.common.out, report.to_csv_string().as_bytes())
        }
        Command::Ecdf(args) => {
            let cfg = resolve_config(&args.common, args.family, false)?;
            let n = *cfg
                .n
                .first()
                .ok_or_else(|| CliError::Usage("ecdf needs one sample size".into()))?;
            let sims = simulate_statistics(&cfg, n)?;
            let values = match args.which {
                Which::Classic => &sims.classic,
                Which::Aux => &sims.aux,
            };
            let mut buf = Vec::new();
            ecdf_export(values, &mut buf)?;
            write_out(&args.common.out, &buf)
        }
    }
}

/// Builds the run config: preset for the family/aux pair, then config file,
/// then flag overrides, in increasing precedence.
fn resolve_config(
    common: &CommonArgs,
    family: Family,
    need_t: bool,
) -> Result<BenchConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<BenchConfig>(&text)
                .map_err(|e| CliError::Usage(format!("bad config file: {e}")))?
        }
        None => {
            let base = match family {
                Family::Z => TestKind::Z,
                Family::Chisq => TestKind::Chisq,
            };
            let kind = base.with_aux(common.aux.map_or(CoreAuxKind::None, Into::into));
            let hyp = if common.null {
                Hypothesis::Null
            } else {
                Hypothesis::Alternative
            };
            preset(kind, hyp)
        }
    };
    if let Some(aux) = common.aux {
        cfg.test = cfg.test.with_aux(aux.into());
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = &common.n {
        cfg.n = n.clone();
    }
    if let Some(reps) = common.reps {
        cfg.reps = reps;
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = Some(alpha);
        cfg.t = None;
    }
    if let Some(t) = &common.t {
        cfg.t = Some(t.clone());
        cfg.alpha = None;
    }
    if let Some(mu) = common.mu {
        cfg.mu = Some(mu);
    }
    if let Some(p0) = &common.p0 {
        cfg.p0 = Some(p0.clone());
    }
    if common.oracle {
        cfg.oracle = true;
    }
    if common.plugin {
        cfg.oracle = false;
    }
    if need_t && cfg.t.is_none() {
        return Err(CliError::Usage(
            "gain-table needs --t with one threshold per sample size".into(),
        ));
    }
    Ok(cfg)
}

fn write_out(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Loads the first numeric column of a CSV file (a non-numeric header line
/// is skipped).
fn load_sample(path: &PathBuf) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::Usage(format!(
                    "{}:{}: not a number: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no numeric values",
            path.display()
        )));
    }
    Ok(values)
}

fn obtain_sample(common: &CommonArgs, data: &Option<PathBuf>, cfg: &BenchConfig) -> Result<Vec<f64>, CliError> {
    match data {
        Some(path) => load_sample(path),
        None => {
            let n = common.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(2000);
            let dist = cfg.resolve_distribution().map_err(BenchError::from)?;
            Ok(dist.sample_vec(&mut child_rng(cfg.seed, 0), n))
        }
    }
}

/// One-shot test: statistic(s), threshold, and decision as a small CSV.
fn one_shot(family: Family, args: TestArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&args.common, family, false)?;
    let sample = obtain_sample(&args.common, &args.data, &cfg)?;
    let alpha = cfg.alpha.unwrap_or(0.05);
    let mut out = String::from("statistic,value,threshold,reject\n");

    match family {
        Family::Z => {
            let mu = cfg
                .mu
                .ok_or_else(|| CliError::Usage("z test needs --mu".into()))?;
            let threshold = match &cfg.t {
                Some(t) => t[0],
                None => normal_quantile(1.0 - alpha / 2.0)
                    .map_err(|e| CliError::Stat(e.to_string()))?,
            };
            let sd = sample_std(&sample).map_err(|e| CliError::Stat(e.to_string()))?;
            let z = z_statistic(&sample, mu, sd).map_err(|e| CliError::Stat(e.to_string()))?;
            push_row(&mut out, "z_classic", z, threshold, z.abs() > threshold);
            if let Some(aux) = build_z_aux(&cfg, &sample, mu)? {
                push_row(&mut out, "z_aux", aux, threshold, aux.abs() > threshold);
            }
        }
        Family::Chisq => {
            let part_cfg = cfg
                .partition
                .as_ref()
                .ok_or_else(|| CliError::Usage("chisq test needs a partition".into()))?;
            let part = part_cfg
                .to_partition()
                .map_err(|e| CliError::Stat(e.to_string()))?;
            let spec = PartitionSpec::new(
                part_cfg.labels.clone(),
                cfg.p0
                    .clone()
                    .ok_or_else(|| CliError::Usage("chisq test needs p0".into()))?,
            )
            .map_err(|e| CliError::Stat(e.to_string()))?;
            let threshold = match &cfg.t {
                Some(t) => t[0],
                None => ChiSquared::new(spec.m() as u32 - 1)
                    .and_then(|c| c.quantile(1.0 - alpha))
                    .map_err(|e| CliError::Stat(e.to_string()))?,
            };
            let cells = part.assign(&sample).map_err(|e| CliError::Stat(e.to_string()))?;
            let mut counts = vec![0u64; spec.m()];
            for &c in &cells {
                counts[c] += 1;
            }
            let stat =
                chi2_statistic(&counts, &spec).map_err(|e| CliError::Stat(e.to_string()))?;
            push_row(&mut out, "chisq_classic", stat, threshold, stat > threshold);
            if cfg.test.aux_kind() == CoreAuxKind::Condmean {
                let aux_cfg = cfg.aux.clone().unwrap_or_default();
                let event = aux_cfg
                    .c_event
                    .ok_or_else(|| CliError::Usage("condmean aux needs c_event".into()))?;
                let value = aux_cfg
                    .c_value
                    .ok_or_else(|| CliError::Usage("condmean aux needs c_value".into()))?;
                let info = auxinfo::condmean::CondMeanInfo::new(event, value);
                let est = theta_star_vector(&sample, &info, &spec, &cells)
                    .map_err(|e| CliError::Stat(e.to_string()))?;
                let stat = aux_chi2_statistic(&est, &spec, 5e-2)
                    .map_err(|e| CliError::Stat(e.to_string()))?;
                push_row(&mut out, "chisq_aux", stat, threshold, stat > threshold);
            }
        }
    }
    write_out(&args.common.out, out.as_bytes())
}

fn push_row(out: &mut String, name: &str, value: f64, threshold: f64, reject: bool) {
    out.push_str(&format!(
        "{name},{value:.16e},{threshold:.16e},{}\n",
        if reject { 1 } else { 0 }
    ));
}

/// Auxiliary Z statistic for the one-shot command, when an engine is set.
fn build_z_aux(cfg: &BenchConfig, sample: &[f64], mu: f64) -> Result<Option<f64>, CliError> {
    match cfg.test.aux_kind() {
        CoreAuxKind::None => Ok(None),
        CoreAuxKind::Condmean => {
            let aux_cfg = cfg.aux.clone().unwrap_or_default();
            let event = aux_cfg
                .c_event
                .ok_or_else(|| CliError::Usage("condmean aux needs c_event".into()))?;
            let value = aux_cfg
                .c_value
                .ok_or_else(|| CliError::Usage("condmean aux needs c_value".into()))?;
            let info = auxinfo::condmean::CondMeanInfo::new(event, value);
            let est = theta_star_scalar(sample, &info).map_err(|e| CliError::Stat(e.to_string()))?;
            Ok(Some(aux_z_statistic(&est, mu)))
        }
        CoreAuxKind::Raking => {
            let dist = cfg.resolve_distribution().map_err(BenchError::from)?;
            let aux_cfg = cfg.aux.clone().unwrap_or_default();
            let schedule_cfg = aux_cfg
                .schedule
                .unwrap_or_else(auxinfo::bench::default_schedule);
            let steps = aux_cfg.steps.unwrap_or(2);
            let mut parts = Vec::new();
            let mut targets = Vec::new();
            for pc in &schedule_cfg {
                let part = pc.to_partition().map_err(|e| CliError::Stat(e.to_string()))?;
                let t = match &pc.targets {
                    Some(t) => t.clone(),
                    None => law_marginals(&dist, &part).map_err(|e| CliError::Stat(e.to_string()))?,
                };
                parts.push(part);
                targets.push(t);
            }
            let mut slot_assign = Vec::new();
            let mut slot_targets = Vec::new();
            for i in 0..steps {
                let part = &parts[i % parts.len()];
                slot_assign.push(part.assign(sample).map_err(|e| CliError::Stat(e.to_string()))?);
                slot_targets.push(targets[i % targets.len()].clone());
            }
            let ws = WeightedSample::uniform(sample.to_vec())
                .map_err(|e| CliError::Stat(e.to_string()))?;
            let schedule = RakingSchedule::new(
                slot_assign
                    .iter()
                    .zip(&slot_targets)
                    .map(|(c, t)| PartitionAssignment::new(c.clone(), t.len(), t.clone()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Stat(e.to_string()))?,
            );
            let mean = raked_mean(&ws, &schedule, steps).map_err(|e| CliError::Stat(e.to_string()))?;
            let g: Vec<Vec<f64>> = sample.iter().map(|&x| vec![x]).collect();
            let design = auxinfo::raking::empirical_design(&slot_assign, &slot_targets, &g)
                .map_err(|e| CliError::Stat(e.to_string()))?;
            let m = sample.iter().sum::<f64>() / sample.len() as f64;
            let var_n = sample.iter().map(|&x| (x - m) * (x - m)).sum::<f64>()
                / sample.len() as f64;
            let v = auxinfo::raking::raked_variance(var_n, &design, steps)
                .map_err(|e| CliError::Stat(e.to_string()))?;
            let est = MeanAuxEstimate::new(mean, v.max(1e-12 * var_n).sqrt(), sample.len())
                .map_err(|e| CliError::Stat(e.to_string()))?;
            Ok(Some(aux_z_statistic(&est, mu)))
        }
    }
}

/// Rake and report: per-step maximal marginal error of every scheduled
/// partition plus the running weighted mean.
fn rake(args: RakeArgs) -> Result<(), CliError> {
    let cfg = resolve_config(
        &args.common,
        Family::Z,
        false,
    )?;
    let sample = obtain_sample(&args.common, &args.data, &cfg)?;
    let dist = cfg.resolve_distribution().map_err(BenchError::from)?;
    let aux_cfg = cfg.aux.clone().unwrap_or_default();
    let schedule_cfg = aux_cfg
        .schedule
        .unwrap_or_else(auxinfo::bench::default_schedule);
    let mut parts = Vec::new();
    let mut targets = Vec::new();
    for pc in &schedule_cfg {
        let part = pc.to_partition().map_err(|e| CliError::Stat(e.to_string()))?;
        let t = match &pc.targets {
            Some(t) => t.clone(),
            None => law_marginals(&dist, &part).map_err(|e| CliError::Stat(e.to_string()))?,
        };
        parts.push(part);
        targets.push(t);
    }
    let assignments: Vec<PartitionAssignment> = (0..args.steps)
        .map(|i| {
            let part = &parts[i % parts.len()];
            let cells = part.assign(&sample).map_err(|e| CliError::Stat(e.to_string()))?;
            PartitionAssignment::new(cells, targets[i % targets.len()].len(), targets[i % targets.len()].clone())
                .map_err(|e| CliError::Stat(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::from("step,max_marginal_error,mean\n");
    let mut ws = WeightedSample::uniform(sample).map_err(|e| CliError::Stat(e.to_string()))?;
    let initial_err = assignments
        .iter()
        .map(|a| a.marginal_error(&ws))
        .fold(0.0f64, f64::max);
    out.push_str(&format!("0,{:.16e},{:.16e}\n", initial_err, ws.mean()));
    for (i, a) in assignments.iter().enumerate() {
        ws = auxinfo::raking::rake_step(&ws, a).map_err(|e| CliError::Stat(e.to_string()))?;
        let err = assignments
            .iter()
            .map(|p| p.marginal_error(&ws))
            .fold(0.0f64, f64::max);
        out.push_str(&format!("{},{:.16e},{:.16e}\n", i + 1, err, ws.mean()));
    }
    write_out(&args.common.out, out.as_bytes())
}
