use approx::assert_relative_eq;
use soda_lab::environments::{
    AdversarialPattern, AdversarialSpec, EnvironmentSpec, MatrixFileSpec, StochasticSpec,
    DEFAULT_PERIOD,
};
use soda_lab::harness::{
    run_experiment_with_threads, run_replication, Algorithm, Experiment, ExperimentConfig,
    TRACE_HEADER,
};
use soda_lab::metrics::stochastic_bound;
use soda_lab::policy::LearningRateScheme;
use soda_lab::types::LossMatrix;
use soda_lab::LabError;

const ANYTIME: Algorithm = Algorithm::Soda(LearningRateScheme::Anytime);

fn stochastic(epsilon: f64, base: f64, biases: &[f64]) -> EnvironmentSpec {
    EnvironmentSpec::Stochastic(StochasticSpec::new(epsilon, base, biases.to_vec()).unwrap())
}

fn adversarial(pattern: AdversarialPattern, arms: usize, epsilon: f64) -> EnvironmentSpec {
    EnvironmentSpec::Adversarial(AdversarialSpec {
        pattern,
        arms,
        epsilon,
        period: DEFAULT_PERIOD,
    })
}

fn config(
    env: EnvironmentSpec,
    algorithm: Algorithm,
    horizon: usize,
    reps: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        environment: env,
        algorithm,
        horizon,
        replications: reps,
        seed: 11,
        checkpoints: None,
    }
}

fn trace_csv(exp: &Experiment) -> String {
    let mut bytes = Vec::new();
    exp.write_trace_csv(&mut bytes).unwrap();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn equal_losses_give_zero_regret() {
    let cfg = config(stochastic(0.0, 0.4, &[0.3, 0.6, 0.9]), ANYTIME, 500, 1);
    let exp = run_experiment_with_threads(&cfg, 1).unwrap();
    for p in &exp.runs[0].trace.points {
        assert_eq!(p.regret, 0.0);
        assert_eq!(p.pseudo_regret, Some(0.0));
    }
}

#[test]
fn output_independent_of_thread_count() {
    let cfg = config(
        adversarial(AdversarialPattern::Sinusoidal, 3, 0.5),
        Algorithm::Exp3,
        3_000,
        9,
    );
    let one = run_experiment_with_threads(&cfg, 1).unwrap();
    let four = run_experiment_with_threads(&cfg, 4).unwrap();
    assert_eq!(trace_csv(&one), trace_csv(&four));
    assert_eq!(one.summary_json().unwrap(), four.summary_json().unwrap());
}

#[test]
fn every_replication_reads_two_losses_per_round() {
    for algorithm in [ANYTIME, Algorithm::Exp3, Algorithm::Uniform] {
        let cfg = config(
            stochastic(1.0, 0.0, &[0.2, 0.5, 0.7, 0.9]),
            algorithm,
            777,
            4,
        );
        let exp = run_experiment_with_threads(&cfg, 2).unwrap();
        for run in &exp.runs {
            assert_eq!(run.loss_reads, 2 * 777);
        }
        assert_eq!(exp.summary.total_loss_reads, 4 * 2 * 777);
    }
}

#[test]
fn dropping_replications_leaves_the_others_unchanged() {
    let env = stochastic(0.8, 0.1, &[0.5, 0.4, 0.6]);
    let big = run_experiment_with_threads(&config(env.clone(), ANYTIME, 400, 6), 3).unwrap();
    let small = run_experiment_with_threads(&config(env, ANYTIME, 400, 2), 1).unwrap();
    assert_eq!(
        big.runs[..2].iter().map(|r| &r.trace).collect::<Vec<_>>(),
        small.runs.iter().map(|r| &r.trace).collect::<Vec<_>>()
    );

    // Replaying one run on its own reproduces it exactly.
    let cfg = &big.config;
    let checkpoints = cfg.checkpoint_rounds();
    let means = cfg.environment.means(cfg.horizon);
    let alone = run_replication(cfg, 4, None, means.as_deref(), &checkpoints).unwrap();
    assert_eq!(alone.trace, big.runs[4].trace);
    assert_eq!(alone.seed, big.runs[4].seed);
}

#[test]
fn adversarial_sequences_are_shared_and_stochastic_ones_redrawn() {
    let adv = run_experiment_with_threads(
        &config(
            adversarial(AdversarialPattern::RandomWithinRange, 3, 0.4),
            ANYTIME,
            100,
            5,
        ),
        1,
    )
    .unwrap();
    assert!(adv
        .runs
        .iter()
        .all(|r| r.environment_digest == adv.runs[0].environment_digest));

    let sto = run_experiment_with_threads(
        &config(stochastic(1.0, 0.0, &[0.5, 0.5]), ANYTIME, 100, 5),
        1,
    )
    .unwrap();
    let mut digests: Vec<_> = sto
        .runs
        .iter()
        .map(|r| r.environment_digest.clone())
        .collect();
    digests.dedup();
    assert_eq!(digests.len(), 5);
    let mut seeds: Vec<_> = sto.runs.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), 5);
}

#[test]
fn two_arm_stochastic_regret_within_bound() {
    let env = EnvironmentSpec::Stochastic(
        StochasticSpec::from_gaps(1.0, 0.0, 0.25, &[0.0, 0.5]).unwrap(),
    );
    let mut cfg = config(env, ANYTIME, 10_000, 100);
    cfg.checkpoints = Some(vec![10_000]);
    let exp = run_experiment_with_threads(&cfg, 4).unwrap();
    let regret = exp.summary.final_expected_regret().mean;
    let bound = stochastic_bound(2, 1.0, &[0.0, 0.5]).unwrap();
    assert_eq!(exp.summary.bounds.stochastic, Some(bound));
    assert!(regret <= bound, "{regret} > {bound}");
}

#[test]
fn uniform_play_regret_grows_with_mean_gap_slope() {
    let means = [0.2, 0.4, 0.5, 0.8];
    let env = stochastic(1.0, 0.0, &means);
    let mut cfg = config(env, Algorithm::Uniform, 20_000, 20);
    cfg.checkpoints = Some((1..=10).map(|i| i * 2_000).collect());
    let exp = run_experiment_with_threads(&cfg, 2).unwrap();

    // Least-squares slope of mean pseudo-regret against t.
    let points: Vec<(f64, f64)> = exp
        .summary
        .checkpoints
        .iter()
        .map(|c| (c.t as f64, c.pseudo_regret.unwrap().mean))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let mean_gap = means.iter().map(|m| m - 0.2).sum::<f64>() / 4.0;
    assert_relative_eq!(slope, mean_gap, max_relative = 0.02);
}

#[test]
fn outputs_have_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        adversarial(AdversarialPattern::ShiftingBestArm, 3, 1.0),
        ANYTIME,
        100,
        2,
    );
    let exp = run_experiment_with_threads(&cfg, 1).unwrap();
    exp.write_outputs(dir.path()).unwrap();

    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[..3], ["0", "soda-anytime", "1"]);
    assert_eq!(first[5], "", "adversarial runs have no pseudo-regret");
    assert_eq!(csv.lines().count(), 1 + 2 * cfg.checkpoint_rounds().len());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["replications"], 2);
    assert!(summary["rng"]["algorithm"]
        .as_str()
        .unwrap()
        .contains("ChaCha8"));
    assert!(summary["bounds"]["adversarial"].as_f64().unwrap() > 0.0);
    assert!(summary["bounds"]["stochastic"].is_null());
    let last = summary["checkpoints"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .clone();
    assert_eq!(last["t"], 100);
}

#[test]
fn config_rejects_unknown_fields_and_bad_values() {
    let good = r#"{"environment": {"kind": "stochastic", "epsilon": 1.0, "biases": [0.3, 0.6]},
        "algorithm": "soda-adaptive", "horizon": 10, "replications": 2, "seed": 5}"#;
    let cfg = ExperimentConfig::from_json(good).unwrap();
    assert_eq!(cfg.algorithm, Algorithm::Soda(LearningRateScheme::Adaptive));

    let typo = good.replace("\"seed\"", "\"sed\"");
    assert!(matches!(
        ExperimentConfig::from_json(&typo),
        Err(LabError::Config(_))
    ));
    let extra = good.replace("\"seed\": 5", "\"seed\": 5, \"threads\": 4");
    assert!(ExperimentConfig::from_json(&extra).is_err());
    let too_fast = good.replace("soda-adaptive", "soda-fixed:0.9");
    assert!(ExperimentConfig::from_json(&too_fast)
        .unwrap_err()
        .is_validation());
    let late = good.replace("\"seed\": 5", "\"seed\": 5, \"checkpoints\": [5, 11]");
    assert!(ExperimentConfig::from_json(&late).is_err());
}

#[test]
fn matrix_file_environment_is_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let m = LossMatrix::from_rows(&[vec![0.1, 0.6], vec![0.2, 0.5], vec![0.0, 0.3]]).unwrap();
    m.write_csv(
        std::fs::File::create(dir.path().join("losses.csv")).unwrap(),
        true,
    )
    .unwrap();
    let text = r#"{"environment": {"kind": "matrix_file", "path": "losses.csv", "epsilon": 0.5},
        "algorithm": "uniform", "horizon": 3, "replications": 3, "seed": 1}"#;
    let path = dir.path().join("config.json");
    std::fs::write(&path, text).unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    assert!(
        matches!(&cfg.environment, EnvironmentSpec::MatrixFile(MatrixFileSpec { path, .. }) if path.is_absolute())
    );
    let exp = run_experiment_with_threads(&cfg, 1).unwrap();
    assert!(exp.summary.bounds.stochastic.is_none());
    for run in &exp.runs {
        let p = run.trace.last().unwrap();
        assert_relative_eq!(p.best_arm_loss, 0.3, epsilon = 1e-12);
    }

    // A declared range below the measured one is refused with run context.
    std::fs::write(&path, text.replace("0.5}", "0.2}")).unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    let err = run_experiment_with_threads(&cfg, 1).unwrap_err();
    assert_eq!(err.category(), "range");
}
