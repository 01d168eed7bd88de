//! Experiment runner: replications, seeding, aggregation and output files.
//!
//! Replication `r` draws all of its randomness from a generator seeded by
//! mixing `(master seed, r)`, so a run's trace depends on nothing but the
//! config and its own index. Adversarial environments are generated once
//! per experiment; stochastic ones are redrawn for every replication.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{Exp3Policy, UniformPolicy};
use crate::environments::{EnvironmentSpec, MatrixFileSpec};
use crate::error::{LabError, Result};
use crate::metrics::{
    adversarial_bound, log_checkpoints, lower_bound, mean_and_se, stochastic_bound, MeanSe,
    RegretTrace, RegretTracker,
};
use crate::policy::{LearningRateScheme, SodaPolicy};
use crate::types::{CountingRow, LossMatrix, LossRow, RoundOutcome};

/// Environment variable capping the worker count (0 or unset = automatic).
pub const THREADS_ENV: &str = "SODA_LAB_THREADS";

pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9)";
pub const SEED_DERIVATION: &str =
    "run seed = splitmix64(master ^ splitmix64(run_id + 1)); environment seed = splitmix64(seed ^ 0x656e7669726f6e6d)";

const ENV_SALT: u64 = 0x656e_7669_726f_6e6d;

/// splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `run_id`'s policy stream.
pub fn run_seed(master: u64, run_id: usize) -> u64 {
    splitmix64(master ^ splitmix64(run_id as u64 + 1))
}

/// Seed used to generate an environment from a run (or master) seed.
pub fn environment_seed(seed: u64) -> u64 {
    splitmix64(seed ^ ENV_SALT)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Soda(LearningRateScheme),
    Exp3,
    Uniform,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Soda(scheme) => write!(f, "soda-{scheme}"),
            Algorithm::Exp3 => f.write_str("exp3"),
            Algorithm::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp3" => Ok(Algorithm::Exp3),
            "uniform" => Ok(Algorithm::Uniform),
            other => match other.strip_prefix("soda-") {
                Some(scheme) => scheme.parse().map(Algorithm::Soda),
                None => Err(LabError::Config(format!("unknown algorithm '{s}'"))),
            },
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One policy instance of any supported algorithm.
#[derive(Debug, Clone)]
pub enum Learner {
    Soda(SodaPolicy),
    Exp3(Exp3Policy),
    Uniform(UniformPolicy),
}

impl Learner {
    pub fn new(algorithm: Algorithm, arms: usize) -> Result<Self> {
        Ok(match algorithm {
            Algorithm::Soda(scheme) => Learner::Soda(SodaPolicy::new(arms, scheme)?),
            Algorithm::Exp3 => Learner::Exp3(Exp3Policy::new(arms)?),
            Algorithm::Uniform => Learner::Uniform(UniformPolicy::new(arms)?),
        })
    }

    pub fn play_round<L: LossRow + ?Sized>(
        &mut self,
        row: &L,
        rng: &mut ChaCha8Rng,
    ) -> Result<RoundOutcome> {
        match self {
            Learner::Soda(p) => p.play_round(row, rng),
            Learner::Exp3(p) => p.play_round(row, rng),
            Learner::Uniform(p) => p.play_round(row, rng),
        }
    }

    pub fn final_state(&self) -> FinalState {
        match self {
            Learner::Soda(p) => FinalState {
                eta: p.last_eta(),
                max_square: Some(p.state().max_square()),
                realized_squares: Some(p.state().realized_squares()),
            },
            Learner::Exp3(p) => FinalState {
                eta: p.last_eta(),
                max_square: None,
                realized_squares: None,
            },
            Learner::Uniform(_) => FinalState {
                eta: 0.0,
                max_square: None,
                realized_squares: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Defaults to the `{1, 2, 5, 10, ...}` grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative matrix path is taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&fs::read_to_string(path)?)?;
        if let EnvironmentSpec::MatrixFile(MatrixFileSpec { path: matrix, .. }) =
            &mut config.environment
        {
            if matrix.is_relative() {
                if let Some(dir) = path.parent() {
                    *matrix = dir.join(&*matrix);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        if self.horizon == 0 {
            return Err(LabError::Config("horizon must be positive".into()));
        }
        if self.replications == 0 {
            return Err(LabError::Config("replications must be positive".into()));
        }
        if let Some(arms) = self.environment.arms() {
            if let Algorithm::Soda(scheme) = self.algorithm {
                scheme.validate(arms)?;
            }
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() {
                return Err(LabError::Config("checkpoint list is empty".into()));
            }
            if cps[0] == 0 {
                return Err(LabError::Config("checkpoints are 1-based rounds".into()));
            }
            if cps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LabError::Config(
                    "checkpoints must be strictly increasing".into(),
                ));
            }
            if *cps.last().unwrap() > self.horizon {
                return Err(LabError::Config(format!(
                    "last checkpoint exceeds horizon {}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn checkpoint_rounds(&self) -> Vec<usize> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| log_checkpoints(self.horizon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalState {
    pub eta: f64,
    pub max_square: Option<f64>,
    pub realized_squares: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub run_id: usize,
    pub algorithm: Algorithm,
    pub environment_digest: String,
    pub seed: u64,
    pub trace: RegretTrace,
    pub final_state: FinalState,
    pub loss_reads: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub t: usize,
    pub cumulative_loss: MeanSe,
    pub regret: MeanSe,
    pub pseudo_regret: Option<MeanSe>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValues {
    pub adversarial: f64,
    pub lower: Option<f64>,
    pub stochastic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RngInfo {
    pub algorithm: &'static str,
    pub derivation: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub environment: EnvironmentSpec,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub arms: usize,
    pub epsilon: f64,
    pub rng: RngInfo,
    pub checkpoints: Vec<CheckpointSummary>,
    pub bounds: BoundValues,
    pub total_loss_reads: u64,
}

impl Summary {
    /// Estimated expected regret at checkpoint `t`: mean pseudo-regret for
    /// stochastic environments, mean realized regret otherwise.
    pub fn expected_regret(&self, t: usize) -> Option<MeanSe> {
        self.checkpoints
            .iter()
            .find(|c| c.t == t)
            .map(|c| c.pseudo_regret.unwrap_or(c.regret))
    }

    pub fn final_expected_regret(&self) -> MeanSe {
        let last = self.checkpoints.last().expect("at least one checkpoint");
        last.pseudo_regret.unwrap_or(last.regret)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub summary: Summary,
}

/// Worker count from [`THREADS_ENV`]; 0 means automatic.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    run_experiment_with_threads(config, threads_from_env())
}

pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<Experiment> {
    config.validate()?;
    let checkpoints = config.checkpoint_rounds();
    let shared = if config.environment.is_stochastic() {
        None
    } else {
        Some(
            config
                .environment
                .generate(config.horizon, environment_seed(config.seed))?,
        )
    };
    let arms = match (&shared, config.environment.arms()) {
        (Some(m), _) => m.arms(),
        (None, Some(k)) => k,
        (None, None) => unreachable!("file environments are never stochastic"),
    };
    if let Algorithm::Soda(scheme) = config.algorithm {
        scheme.validate(arms)?;
    }
    let means = config.environment.means(config.horizon);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|run_id| {
                run_replication(
                    config,
                    run_id,
                    shared.as_ref(),
                    means.as_deref(),
                    &checkpoints,
                )
                .map_err(|e| LabError::Run {
                    run_id,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let summary = summarize(config, arms, &checkpoints, &runs)?;
    Ok(Experiment {
        config: config.clone(),
        runs,
        summary,
    })
}

/// Plays one replication and records its trace at `checkpoints`.
pub fn run_replication(
    config: &ExperimentConfig,
    run_id: usize,
    shared: Option<&LossMatrix>,
    means: Option<&[f64]>,
    checkpoints: &[usize],
) -> Result<RunResult> {
    let seed = run_seed(config.seed, run_id);
    let owned;
    let matrix = match shared {
        Some(m) => m,
        None => {
            owned = config
                .environment
                .generate(config.horizon, environment_seed(seed))?;
            &owned
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = Learner::new(config.algorithm, matrix.arms())?;
    let mut tracker = RegretTracker::new(matrix.arms(), means);
    let mut trace = RegretTrace::default();
    let mut reads = 0u64;
    let mut next = checkpoints.iter().peekable();
    for t in 0..config.horizon {
        let row = matrix.row(t);
        let counted = CountingRow::new(row);
        let outcome = learner.play_round(&counted, &mut rng)?;
        reads += counted.reads() as u64;
        tracker.record(row, outcome.primary);
        if next.peek() == Some(&&(t + 1)) {
            trace.points.push(tracker.point(outcome.eta));
            next.next();
        }
    }
    Ok(RunResult {
        run_id,
        algorithm: config.algorithm,
        environment_digest: matrix_digest(matrix),
        seed,
        trace,
        final_state: learner.final_state(),
        loss_reads: reads,
    })
}

/// SHA-256 over the little-endian bytes of every loss, with the shape.
pub fn matrix_digest(m: &LossMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update((m.horizon() as u64).to_le_bytes());
    hasher.update((m.arms() as u64).to_le_bytes());
    for l in m.as_flat() {
        hasher.update(l.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn summarize(
    config: &ExperimentConfig,
    arms: usize,
    checkpoints: &[usize],
    runs: &[RunResult],
) -> Result<Summary> {
    let epsilon = config.environment.epsilon();
    let means = config.environment.means(config.horizon);
    let stochastic = match &means {
        Some(m) => {
            let gaps = crate::environments::gaps_of(m);
            Some(stochastic_bound(arms, epsilon, &gaps)?)
        }
        None => None,
    };
    let column = |i: usize, f: &dyn Fn(&crate::metrics::TracePoint) -> f64| -> Vec<f64> {
        runs.iter().map(|r| f(&r.trace.points[i])).collect()
    };
    let checkpoint_summaries = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &t)| CheckpointSummary {
            t,
            cumulative_loss: mean_and_se(&column(i, &|p| p.cumulative_loss)),
            regret: mean_and_se(&column(i, &|p| p.regret)),
            pseudo_regret: means
                .as_ref()
                .map(|_| mean_and_se(&column(i, &|p| p.pseudo_regret.unwrap_or(f64::NAN)))),
        })
        .collect();
    Ok(Summary {
        algorithm: config.algorithm,
        environment: config.environment.clone(),
        horizon: config.horizon,
        replications: config.replications,
        seed: config.seed,
        arms,
        epsilon,
        rng: RngInfo {
            algorithm: RNG_ALGORITHM,
            derivation: SEED_DERIVATION,
        },
        checkpoints: checkpoint_summaries,
        bounds: BoundValues {
            adversarial: adversarial_bound(config.horizon, arms, epsilon)?,
            lower: lower_bound(config.horizon, arms, epsilon),
            stochastic,
        },
        total_loss_reads: runs.iter().map(|r| r.loss_reads).sum(),
    })
}

pub const TRACE_HEADER: [&str; 7] = [
    "run_id",
    "algo",
    "t",
    "cum_loss",
    "regret",
    "pseudo_regret",
    "eta",
];

impl Experiment {
    /// Per-checkpoint rows `run_id,algo,t,cum_loss,regret,pseudo_regret,eta`;
    /// `pseudo_regret` is empty for adversarial environments.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(TRACE_HEADER)?;
        for run in &self.runs {
            let algo = run.algorithm.to_string();
            for p in &run.trace.points {
                wtr.write_record([
                    run.run_id.to_string(),
                    algo.clone(),
                    p.t.to_string(),
                    p.cumulative_loss.to_string(),
                    p.regret.to_string(),
                    p.pseudo_regret.map(|v| v.to_string()).unwrap_or_default(),
                    p.eta.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    /// Writes `trace.csv` and `summary.json` into `dir`, creating it.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_trace_csv(fs::File::create(dir.join("trace.csv"))?)?;
        let mut json = self.summary_json()?;
        json.push('\n');
        fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }
}
