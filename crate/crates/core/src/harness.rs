//! Experiment orchestration: configuration, seeded replication, aggregation
//! and CSV output.
//!
//! Seeds: run `r` of the algorithm with stable id `i` (its position in
//! [`ALGORITHM_IDS`]) uses `mix(base_seed, i + 1, r)`; reward streams use
//! `mix(base_seed, ENV_TAG, r)`, queue arrivals `mix(base_seed, ARRIVAL_TAG, r)`
//! and service variates `mix(base_seed, SERVICE_TAG, r)`. Environment streams
//! are therefore shared by every algorithm within a run.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Conventions, IndexPolicy, IndexRule, Policy, RandomPolicy, ThompsonPolicy};
use crate::belman::{BelManState, StepRecord};
use crate::env::{cumulative_regret, suboptimal_draws, ArmStreams, BanditInstance, Bounding, RunTrace};
use crate::error::{BanditError, Result};
use crate::expfam::RewardFamily;
use crate::manifold::ExposureSchedule;
use crate::queueing::{queue_regret, simulate_with, QueueConfig, QueueSeeds, QueueTrace, SchedulerKind};
use crate::seed::{mix, ARRIVAL_TAG, ENV_TAG, SERVICE_TAG};

/// Current configuration schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Every algorithm name, in seed-id order. Never reorder: seeds depend on it.
pub const ALGORITHM_IDS: [&str; 15] = [
    "belman",
    "belman-explore",
    "belman-exploit",
    "belman-two-phase",
    "ucb",
    "ucb-tuned",
    "kl-ucb",
    "kl-ucb-exp",
    "thompson",
    "bayes-ucb",
    "random",
    "belman-q",
    "q-ucb",
    "q-ths",
    "opt",
];

/// Algorithms accepted in bandit modes.
pub const BANDIT_ALGORITHMS: [&str; 11] = [
    "belman",
    "belman-explore",
    "belman-exploit",
    "belman-two-phase",
    "ucb",
    "ucb-tuned",
    "kl-ucb",
    "kl-ucb-exp",
    "thompson",
    "bayes-ucb",
    "random",
];

/// Which problem is simulated and which exposure plain `belman` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Pure exploration: τ = +∞.
    Explore,
    /// Exploration–exploitation: log schedule.
    Exploit,
    /// Pure exploration for `explore_steps`, then the log schedule.
    TwoPhase,
    /// Queueing bandit.
    Queueing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub family: RewardFamily,
    /// Bernoulli means or exponential rates.
    pub theta: Vec<f64>,
    #[serde(default)]
    pub bounding: Bounding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSpec {
    pub lambda: f64,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureParams {
    /// Constant C of the log schedule.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Length of the pure-exploration phase in two-phase mode.
    #[serde(default)]
    pub explore_steps: usize,
}

fn default_c() -> f64 {
    15.0
}

fn default_one() -> usize {
    1
}

impl Default for ExposureParams {
    fn default() -> Self {
        Self {
            c: default_c(),
            explore_steps: 0,
        }
    }
}

/// A complete, versioned experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue: Option<QueueSpec>,
    pub algorithms: Vec<String>,
    pub horizon: usize,
    pub n_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub exposure: ExposureParams,
    /// Constants of the reference algorithms.
    #[serde(default, skip_serializing_if = "Conventions::is_default")]
    pub baselines: Conventions,
    /// Recompute the pseudobelief every `ri_every` steps.
    #[serde(default = "default_one")]
    pub ri_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses a JSON document; syntax and schema errors are validation errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BanditError::Validation(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| BanditError::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every violation of the config invariants.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.horizon == 0 {
            out.push("horizon must be at least 1".into());
        }
        if self.n_runs == 0 {
            out.push("n_runs must be at least 1".into());
        }
        if self.ri_every == 0 {
            out.push("ri_every must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            out.push("algorithms must not be empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        for a in &self.algorithms {
            if !seen.insert(a) {
                out.push(format!("algorithm {a} listed twice"));
            }
        }
        if !(self.exposure.c > 0.0 && self.exposure.c.is_finite()) {
            out.push(format!("exposure constant c must be positive, got {}", self.exposure.c));
        }
        out.extend(self.baselines.problems());
        if self.mode == Mode::Queueing {
            if self.instance.is_some() {
                out.push("queueing mode takes `queue`, not `instance`".into());
            }
            match &self.queue {
                None => out.push("queueing mode requires a `queue` section".into()),
                Some(q) => out.extend(
                    QueueConfig {
                        lambda: q.lambda,
                        mu: q.mu.clone(),
                        horizon: self.horizon.max(1),
                        n_runs: self.n_runs.max(1),
                    }
                    .problems(),
                ),
            }
            for a in &self.algorithms {
                if SchedulerKind::from_name(a).is_none() {
                    out.push(format!("unknown queueing algorithm {a}"));
                }
            }
        } else {
            if self.queue.is_some() {
                out.push("bandit modes take `instance`, not `queue`".into());
            }
            match &self.instance {
                None => out.push("bandit modes require an `instance` section".into()),
                Some(inst) => {
                    let bi = BanditInstance {
                        family: inst.family,
                        theta: inst.theta.clone(),
                        horizon: self.horizon,
                        bounding: inst.bounding,
                    };
                    out.extend(bi.problems());
                    for a in &self.algorithms {
                        if a == "kl-ucb" && !bi.unit_bounded() {
                            out.push("kl-ucb needs rewards in [0, 1]; use kl-ucb-exp for unbounded exponential rewards".into());
                        }
                        if a == "kl-ucb-exp" && inst.family != RewardFamily::Exponential {
                            out.push("kl-ucb-exp applies to exponential rewards only".into());
                        }
                    }
                }
            }
            for a in &self.algorithms {
                if !BANDIT_ALGORITHMS.contains(&a.as_str()) {
                    out.push(format!("unknown bandit algorithm {a}"));
                }
            }
            if self.mode == Mode::TwoPhase && self.exposure.explore_steps == 0 {
                out.push("two_phase mode needs exposure.explore_steps >= 1".into());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(BanditError::Validation(p))
        }
    }

    /// Exposure schedule of plain `belman` in this mode.
    pub fn schedule(&self) -> ExposureSchedule {
        let c = self.exposure.c;
        match self.mode {
            Mode::Explore => ExposureSchedule::Infinite,
            Mode::Exploit | Mode::Queueing => ExposureSchedule::LogSchedule { c },
            Mode::TwoPhase => ExposureSchedule::TwoPhase {
                explore_steps: self.exposure.explore_steps,
                c,
            },
        }
    }

    pub fn bandit_instance(&self) -> Option<BanditInstance> {
        self.instance.as_ref().map(|i| BanditInstance {
            family: i.family,
            theta: i.theta.clone(),
            horizon: self.horizon,
            bounding: i.bounding,
        })
    }

    pub fn queue_config(&self) -> Option<QueueConfig> {
        self.queue.as_ref().map(|q| QueueConfig {
            lambda: q.lambda,
            mu: q.mu.clone(),
            horizon: self.horizon,
            n_runs: self.n_runs,
        })
    }
}

/// Stable numeric id of an algorithm name.
pub fn algorithm_id(name: &str) -> Option<u64> {
    ALGORITHM_IDS.iter().position(|&a| a == name).map(|i| i as u64)
}

/// Seed of run `r` of algorithm `name`.
pub fn algorithm_seed(base: u64, name: &str, r: u64) -> u64 {
    mix(base, algorithm_id(name).expect("validated algorithm name") + 1, r)
}

/// Builds a bandit policy by name.
pub fn make_policy(name: &str, config: &ExperimentConfig, instance: &BanditInstance, seed: u64) -> Result<Box<dyn Policy>> {
    let (family, k) = (instance.family, instance.k());
    let c = config.exposure.c;
    let belman = |schedule: ExposureSchedule| -> Result<Box<dyn Policy>> {
        Ok(Box::new(
            BelManState::<f64>::new(family, k, schedule, seed)?.with_ri_every(config.ri_every),
        ))
    };
    let index = |rule: IndexRule| -> Result<Box<dyn Policy>> {
        Ok(Box::new(
            IndexPolicy::new(rule, family, k, seed).with_conventions(config.baselines, config.horizon),
        ))
    };
    match name {
        "belman" => belman(config.schedule()),
        "belman-explore" => belman(ExposureSchedule::Infinite),
        "belman-exploit" => belman(ExposureSchedule::LogSchedule { c }),
        "belman-two-phase" => belman(ExposureSchedule::TwoPhase {
            explore_steps: config.exposure.explore_steps,
            c,
        }),
        "ucb" => index(IndexRule::Ucb),
        "ucb-tuned" => index(IndexRule::UcbTuned),
        "kl-ucb" => index(IndexRule::KlUcb),
        "kl-ucb-exp" => index(IndexRule::KlUcbExp),
        "bayes-ucb" => index(IndexRule::BayesUcb),
        "thompson" => Ok(Box::new(ThompsonPolicy::new(family, k, seed))),
        "random" => Ok(Box::new(RandomPolicy::new(k, seed))),
        other => Err(BanditError::Validation(vec![format!("unknown bandit algorithm {other}")])),
    }
}

/// Plays `policy` against `env` for `horizon` steps.
pub fn play(policy: &mut dyn Policy, env: &mut ArmStreams, horizon: usize) -> Result<RunTrace> {
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let arm = policy.select(t)?;
        let reward = env.pull(arm);
        policy.observe(arm, reward)?;
        records.push(StepRecord { t, arm, reward });
    }
    Ok(records.into())
}

/// One bandit replication.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRun {
    pub run_id: usize,
    pub algorithm: String,
    pub trace: RunTrace,
    pub cum_regret: Vec<f64>,
    pub subopt_draws: Vec<u64>,
}

/// One queueing replication.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueRun {
    pub run_id: usize,
    pub algorithm: String,
    pub trace: QueueTrace,
    /// Service-bandit pseudo-regret over the slots where a server was used.
    pub cum_regret: Vec<f64>,
    pub subopt_draws: Vec<u64>,
    pub queue_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Runs {
    Bandit(Vec<BanditRun>),
    Queueing(Vec<QueueRun>),
}

impl Runs {
    pub fn len(&self) -> usize {
        match self {
            Runs::Bandit(r) => r.len(),
            Runs::Queueing(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-step mean and 75th percentile of one metric across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub algorithm: String,
    pub metric: &'static str,
    pub mean: Vec<f64>,
    pub p75: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Runs,
    pub aggregates: Vec<AggregateSeries>,
}

impl ExperimentResult {
    pub fn aggregate(&self, algorithm: &str, metric: &str) -> Option<&AggregateSeries> {
        self.aggregates
            .iter()
            .find(|a| a.algorithm == algorithm && a.metric == metric)
    }

    pub fn bandit_runs(&self, algorithm: &str) -> Vec<&BanditRun> {
        match &self.runs {
            Runs::Bandit(r) => r.iter().filter(|x| x.algorithm == algorithm).collect(),
            Runs::Queueing(_) => Vec::new(),
        }
    }

    pub fn queue_runs(&self, algorithm: &str) -> Vec<&QueueRun> {
        match &self.runs {
            Runs::Queueing(r) => r.iter().filter(|x| x.algorithm == algorithm).collect(),
            Runs::Bandit(_) => Vec::new(),
        }
    }
}

/// Nearest-rank 75th percentile: the `⌈0.75 n⌉`-th smallest value.
pub fn percentile_75(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(BanditError::Empty("percentile input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (3 * v.len()).div_ceil(4);
    Ok(v[rank - 1])
}

/// Mean and 75th percentile at every step of equally long series.
pub fn aggregate_series(series: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = series.first().ok_or(BanditError::Empty("run series"))?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(BanditError::HorizonMismatch(len, bad.len()));
    }
    let n = series.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut p75 = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(series.len());
    for t in 0..len {
        column.clear();
        column.extend(series.iter().map(|s| s[t]));
        mean.push(column.iter().sum::<f64>() / n);
        p75.push(percentile_75(&column)?);
    }
    Ok((mean, p75))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BanditError::Io(e.to_string()))
}

/// Runs every (algorithm, replication) pair on `workers` threads and
/// aggregates in run-id order, so the output does not depend on `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = pool(workers)?;
    let jobs: Vec<(usize, usize)> = (0..config.algorithms.len())
        .flat_map(|a| (0..config.n_runs).map(move |r| (a, r)))
        .collect();
    let (runs, aggregates) = if config.mode == Mode::Queueing {
        let runs = pool.install(|| jobs.par_iter().map(|&(a, r)| queue_job(config, a, r)).collect::<Result<Vec<_>>>())?;
        let mut aggs = Vec::new();
        for name in &config.algorithms {
            let mine: Vec<&[f64]> = runs
                .iter()
                .filter(|x| &x.algorithm == name)
                .map(|x| x.queue_regret.as_slice())
                .collect();
            let (mean, p75) = aggregate_series(&mine)?;
            aggs.push(AggregateSeries {
                algorithm: name.clone(),
                metric: "queue_regret",
                mean,
                p75,
            });
        }
        (Runs::Queueing(runs), aggs)
    } else {
        let runs = pool.install(|| jobs.par_iter().map(|&(a, r)| bandit_job(config, a, r)).collect::<Result<Vec<_>>>())?;
        let mut aggs = Vec::new();
        for name in &config.algorithms {
            let mine: Vec<&BanditRun> = runs.iter().filter(|x| &x.algorithm == name).collect();
            let regret: Vec<&[f64]> = mine.iter().map(|x| x.cum_regret.as_slice()).collect();
            let (mean, p75) = aggregate_series(&regret)?;
            aggs.push(AggregateSeries {
                algorithm: name.clone(),
                metric: "cum_regret",
                mean,
                p75,
            });
            let draws: Vec<Vec<f64>> = mine
                .iter()
                .map(|x| x.subopt_draws.iter().map(|&n| n as f64).collect())
                .collect();
            let refs: Vec<&[f64]> = draws.iter().map(Vec::as_slice).collect();
            let (mean, p75) = aggregate_series(&refs)?;
            aggs.push(AggregateSeries {
                algorithm: name.clone(),
                metric: "subopt_draws",
                mean,
                p75,
            });
        }
        (Runs::Bandit(runs), aggs)
    };
    Ok(ExperimentResult {
        config: config.clone(),
        runs,
        aggregates,
    })
}

fn bandit_job(config: &ExperimentConfig, algo: usize, r: usize) -> Result<BanditRun> {
    let name = &config.algorithms[algo];
    let instance = config.bandit_instance().expect("validated bandit config");
    let seed = algorithm_seed(config.base_seed, name, r as u64);
    let mut policy = make_policy(name, config, &instance, seed)?;
    let mut env = ArmStreams::new(instance.clone(), mix(config.base_seed, ENV_TAG, r as u64));
    let trace = play(policy.as_mut(), &mut env, config.horizon)?;
    Ok(BanditRun {
        run_id: r,
        algorithm: name.clone(),
        cum_regret: cumulative_regret(&trace, &instance),
        subopt_draws: suboptimal_draws(&trace, &instance),
        trace,
    })
}

/// Seeds of run `r` of queueing algorithm `name`.
pub fn queue_seeds(base: u64, name: &str, r: u64) -> QueueSeeds {
    QueueSeeds {
        arrival: mix(base, ARRIVAL_TAG, r),
        service: mix(base, SERVICE_TAG, r),
        scheduler: algorithm_seed(base, name, r),
    }
}

fn queue_job(config: &ExperimentConfig, algo: usize, r: usize) -> Result<QueueRun> {
    let name = &config.algorithms[algo];
    let qc = config.queue_config().expect("validated queue config");
    let schedule = config.schedule();
    let kind = SchedulerKind::from_name(name).expect("validated scheduler name");
    let trace = simulate_with(&qc, kind, schedule, &config.baselines, queue_seeds(config.base_seed, name, r as u64))?;
    let opt = simulate_with(&qc, SchedulerKind::Opt, schedule, &config.baselines, queue_seeds(config.base_seed, "opt", r as u64))?;
    let regret = queue_regret(&trace, &opt)?;
    let best = qc.mu.iter().copied().fold(0.0, f64::max);
    let gaps: Vec<f64> = qc.mu.iter().map(|m| best - m).collect();
    let mut counts = vec![0u64; gaps.len()];
    let mut subopt = 0u64;
    let mut cum_regret = Vec::with_capacity(trace.records.len());
    let mut subopt_draws = Vec::with_capacity(trace.records.len());
    for rec in &trace.records {
        if let Some(a) = rec.arm {
            counts[a] += 1;
            if gaps[a] > 0.0 {
                subopt += 1;
            }
        }
        cum_regret.push(gaps.iter().zip(&counts).map(|(g, &n)| g * n as f64).sum());
        subopt_draws.push(subopt);
    }
    Ok(QueueRun {
        run_id: r,
        algorithm: name.clone(),
        trace,
        cum_regret,
        subopt_draws,
        queue_regret: regret,
    })
}

/// Header of `runs.csv` in bandit modes.
pub const RUNS_HEADER: &str = "run_id,algorithm,t,arm,reward,cum_regret,subopt_draws";
/// Header of `runs.csv` in queueing mode.
pub const QUEUE_RUNS_HEADER: &str = "run_id,algorithm,t,arm,reward,cum_regret,subopt_draws,queue_len,queue_regret";
/// Header of `agg.csv`.
pub const AGG_HEADER: &str = "algorithm,t,metric,mean,p75";

/// Writes `runs.csv` and `agg.csv` into `dir` (created if needed).
///
/// Reals use the shortest decimal representation that parses back to the
/// same `f64`, so the files round-trip exactly.
pub fn emit_csv(result: &ExperimentResult, dir: &Path) -> Result<()> {
    if result.runs.is_empty() {
        return Err(BanditError::Empty("run traces"));
    }
    fs::create_dir_all(dir)?;
    let mut runs = String::new();
    match &result.runs {
        Runs::Bandit(list) => {
            runs.push_str(RUNS_HEADER);
            runs.push('\n');
            for run in list {
                for (i, rec) in run.trace.records.iter().enumerate() {
                    writeln!(
                        runs,
                        "{},{},{},{},{},{},{}",
                        run.run_id, run.algorithm, rec.t, rec.arm, rec.reward, run.cum_regret[i], run.subopt_draws[i]
                    )
                    .expect("write to string");
                }
            }
        }
        Runs::Queueing(list) => {
            runs.push_str(QUEUE_RUNS_HEADER);
            runs.push('\n');
            for run in list {
                for (i, rec) in run.trace.records.iter().enumerate() {
                    let (arm, reward) = match rec.arm {
                        Some(a) => (a.to_string(), if rec.served { "1" } else { "0" }.to_string()),
                        None => (String::new(), String::new()),
                    };
                    writeln!(
                        runs,
                        "{},{},{},{},{},{},{},{},{}",
                        run.run_id,
                        run.algorithm,
                        rec.t,
                        arm,
                        reward,
                        run.cum_regret[i],
                        run.subopt_draws[i],
                        rec.queue_len,
                        run.queue_regret[i]
                    )
                    .expect("write to string");
                }
            }
        }
    }
    let mut agg = String::from(AGG_HEADER);
    agg.push('\n');
    for series in &result.aggregates {
        for (i, (m, p)) in series.mean.iter().zip(&series.p75).enumerate() {
            writeln!(agg, "{},{},{},{},{}", series.algorithm, i + 1, series.metric, m, p).expect("write to string");
        }
    }
    fs::File::create(dir.join("runs.csv"))?.write_all(runs.as_bytes())?;
    fs::File::create(dir.join("agg.csv"))?.write_all(agg.as_bytes())?;
    fs::File::create(dir.join("config.json"))?.write_all(result.config.to_json().as_bytes())?;
    Ok(())
}

/// A named, shipped configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

/// Means of the 20-arm Bernoulli benchmark.
pub const TWENTY_ARM_MEANS: [f64; 20] = [
    0.25, 0.22, 0.2, 0.17, 0.17, 0.2, 0.13, 0.13, 0.1, 0.07, 0.07, 0.05, 0.05, 0.05, 0.02, 0.02, 0.02, 0.01, 0.01, 0.01,
];

/// Service rates of the three queueing benchmarks.
pub const QUEUE_MU: [[f64; 5]; 3] = [
    [0.5, 0.33, 0.33, 0.33, 0.25],
    [0.33, 0.5, 0.25, 0.33, 0.25],
    [0.25, 0.33, 0.5, 0.25, 0.25],
];

/// Default base seed of the presets.
pub const PRESET_SEED: u64 = 20_190_416;

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn bandit_preset(name: &str, mode: Mode, instance: InstanceSpec, algorithms: &[&str], horizon: usize, n_runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        mode,
        instance: Some(instance),
        queue: None,
        algorithms: strings(algorithms),
        horizon,
        n_runs,
        base_seed: PRESET_SEED,
        exposure: ExposureParams::default(),
        baselines: Conventions::default(),
        ri_every: 1,
        output: None,
    }
}

const BERNOULLI_SUITE: [&str; 7] = ["belman", "ucb", "ucb-tuned", "kl-ucb", "thompson", "bayes-ucb", "random"];

/// All shipped presets.
pub fn presets() -> Vec<Preset> {
    let bern = |theta: &[f64]| InstanceSpec {
        family: RewardFamily::Bernoulli,
        theta: theta.to_vec(),
        bounding: Bounding::None,
    };
    let exp5 = InstanceSpec {
        family: RewardFamily::Exponential,
        theta: vec![5.0, 4.0, 3.0, 2.0, 1.0],
        bounding: Bounding::Resample,
    };
    let mut out = vec![
        Preset {
            name: "fig1",
            description: "2-arm Bernoulli (0.8, 0.9), T=1000, 25 runs",
            config: bandit_preset("fig1", Mode::Exploit, bern(&[0.8, 0.9]), &BERNOULLI_SUITE, 1000, 25),
        },
        Preset {
            name: "fig2",
            description: "20-arm Bernoulli benchmark, T=1000, 25 runs",
            config: bandit_preset("fig2", Mode::Exploit, bern(&TWENTY_ARM_MEANS), &BERNOULLI_SUITE, 1000, 25),
        },
        Preset {
            name: "fig3",
            description: "5-arm bounded exponential, rates 5..1 (means 0.2..1 before bounding), T=1000, 25 runs",
            config: bandit_preset(
                "fig3",
                Mode::Exploit,
                exp5,
                &["belman", "ucb", "ucb-tuned", "kl-ucb", "kl-ucb-exp", "thompson", "bayes-ucb", "random"],
                1000,
                25,
            ),
        },
        Preset {
            name: "fig4_longhorizon",
            description: "20-arm Bernoulli, T=20000, 5 runs (desk scale of the long-horizon run)",
            config: bandit_preset(
                "fig4_longhorizon",
                Mode::Exploit,
                bern(&TWENTY_ARM_MEANS),
                &["belman", "ucb", "kl-ucb", "thompson", "bayes-ucb", "random"],
                20_000,
                5,
            ),
        },
        Preset {
            name: "fig4_longhorizon_full",
            description: "20-arm Bernoulli, T=50000, 50 runs (full size; slow)",
            config: bandit_preset(
                "fig4_longhorizon_full",
                Mode::Exploit,
                bern(&TWENTY_ARM_MEANS),
                &["belman", "ucb", "kl-ucb", "thompson", "bayes-ucb", "random"],
                50_000,
                50,
            ),
        },
    ];
    let mut two = bandit_preset(
        "fig5_twophase",
        Mode::TwoPhase,
        bern(&TWENTY_ARM_MEANS),
        &["belman-two-phase", "belman-exploit"],
        1500,
        25,
    );
    two.exposure.explore_steps = 500;
    out.push(Preset {
        name: "fig5_twophase",
        description: "20-arm Bernoulli, 500 pure-exploration steps then the log schedule, T=1500, 25 runs",
        config: two,
    });
    for (i, (name, description)) in [
        ("fig8_queueing_a", "queue, lambda=0.35, mu=[0.5,0.33,0.33,0.33,0.25], T=10000, 50 runs"),
        ("fig8_queueing_b", "queue, lambda=0.35, mu=[0.33,0.5,0.25,0.33,0.25], T=10000, 50 runs"),
        ("fig8_queueing_c", "queue, lambda=0.35, mu=[0.25,0.33,0.5,0.25,0.25], T=10000, 50 runs"),
    ]
    .into_iter()
    .enumerate()
    {
        out.push(Preset {
            name,
            description,
            config: ExperimentConfig {
                schema_version: SCHEMA_VERSION,
                name: name.to_string(),
                mode: Mode::Queueing,
                instance: None,
                queue: Some(QueueSpec {
                    lambda: 0.35,
                    mu: QUEUE_MU[i].to_vec(),
                }),
                algorithms: strings(&["belman-q", "thompson", "q-ucb", "q-ths", "random"]),
                horizon: 10_000,
                n_runs: 50,
                base_seed: PRESET_SEED,
                exposure: ExposureParams::default(),
                baselines: Conventions::default(),
                ri_every: 1,
                output: None,
            },
        });
    }
    out
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|p| p.name == name).map(|p| p.config)
}
