//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails after all of them have run if any line is FAIL.
//!
//! Run with `cargo test -p soda-lab --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soda_lab::environments::{
    AdversarialPattern, AdversarialSpec, EnvironmentSpec, LowerBoundSpec, StochasticSpec,
    DEFAULT_PERIOD,
};
use soda_lab::harness::{run_experiment_with_threads, Algorithm, Experiment, ExperimentConfig};
use soda_lab::metrics::{adversarial_bound, stochastic_bound};
use soda_lab::policy::LearningRateScheme;
use soda_lab::verification::{
    check_series_lemma, estimator_suite, lemma1_suite, shat_suite, sigma_suite, SERIES_CONSTANTS,
};

const SODA_ANYTIME: Algorithm = Algorithm::Soda(LearningRateScheme::Anytime);
const SODA_ADAPTIVE: Algorithm = Algorithm::Soda(LearningRateScheme::Adaptive);
const REPLICATIONS: usize = 100;
const WORKERS: usize = 4;

struct Verdict {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn criterion(id: usize, name: &'static str, check: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (passed, detail) = check();
    let v = Verdict {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    };
    println!(
        "[{}] criterion {} {}: {} ({:.2?})",
        if v.passed { "PASS" } else { "FAIL" },
        v.id,
        v.name,
        v.detail,
        v.elapsed
    );
    v
}

fn config(
    environment: EnvironmentSpec,
    algorithm: Algorithm,
    horizon: usize,
    checkpoints: Vec<usize>,
) -> ExperimentConfig {
    ExperimentConfig {
        environment,
        algorithm,
        horizon,
        replications: REPLICATIONS,
        seed: 2024,
        checkpoints: Some(checkpoints),
    }
}

fn run(cfg: &ExperimentConfig) -> Experiment {
    run_experiment_with_threads(cfg, WORKERS).expect("experiment runs")
}

/// Mean pseudo-regret where the environment has means, else mean regret.
fn mean_regret(exp: &Experiment, t: usize) -> f64 {
    let cp = exp
        .summary
        .checkpoints
        .iter()
        .find(|c| c.t == t)
        .expect("checkpoint present");
    cp.pseudo_regret.unwrap_or(cp.regret).mean
}

fn flattening_env() -> EnvironmentSpec {
    EnvironmentSpec::Stochastic(
        StochasticSpec::from_gaps(1.0, 0.0, 0.3, &[0.0, 0.2, 0.2, 0.4, 0.4]).unwrap(),
    )
}

fn estimator_identities() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let line = estimator_suite(&mut rng, 1000).unwrap();
    let elapsed = start.elapsed();
    let ok = line.passed && line.cases == 1000 && elapsed < Duration::from_secs(1);
    (
        ok,
        format!(
            "{} triples, worst slack {:.3e}, {:.2?} (limit 1s)",
            line.cases, line.worst_slack, elapsed
        ),
    )
}

fn lemmas(harvested: &mut Vec<Vec<f64>>) -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (line, seqs) = lemma1_suite(&mut rng, 500).unwrap();
    let elapsed = start.elapsed();
    *harvested = seqs;
    let ok = line.passed && elapsed < Duration::from_secs(30);
    (
        ok,
        format!(
            "500 runs, {} arm checks, worst margin {:.3e} (limit -1e-9), {:.2?} (limit 30s)",
            line.cases, line.worst_slack, elapsed
        ),
    )
}

fn technical_lemmas(harvested: &[Vec<f64>]) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigma = sigma_suite(&mut rng, 1000).unwrap();
    let shat = shat_suite(&mut rng, 1000, harvested).unwrap();
    let mut series_ok = true;
    for c in SERIES_CONSTANTS {
        series_ok &= check_series_lemma(c, None).unwrap().holds;
    }
    (
        sigma.passed && shat.passed && series_ok && shat.cases == 1000 + harvested.len(),
        format!(
            "sigma {} seqs (worst {:.3e}), S_hat {} seqs (worst {:.3e}), series c={:?} {}",
            sigma.cases,
            sigma.worst_slack,
            shat.cases,
            shat.worst_slack,
            SERIES_CONSTANTS,
            if series_ok { "ok" } else { "violated" }
        ),
    )
}

fn adversarial_dominance() -> (bool, String) {
    let start = Instant::now();
    let horizon = 10_000;
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    let mut worst = String::new();
    for arms in [2, 5, 10] {
        for epsilon in [0.1, 1.0] {
            for pattern in AdversarialPattern::ALL {
                let env = EnvironmentSpec::Adversarial(AdversarialSpec {
                    pattern,
                    arms,
                    epsilon,
                    period: DEFAULT_PERIOD,
                });
                let exp = run(&config(env, SODA_ADAPTIVE, horizon, vec![horizon]));
                let regret = mean_regret(&exp, horizon);
                let bound = adversarial_bound(horizon, arms, epsilon).unwrap();
                ok &= regret <= bound;
                if regret / bound > worst_ratio {
                    worst_ratio = regret / bound;
                    worst = format!("K={arms} eps={epsilon} {pattern}: {regret:.2} vs {bound:.2}");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    (
        ok,
        format!(
            "18 settings, largest regret/bound {worst_ratio:.3} ({worst}), {elapsed:.2?} (limit 120s)"
        ),
    )
}

fn epsilon_scaling() -> (bool, String) {
    let horizon = 10_000;
    let regret_at = |epsilon: f64| {
        let env = EnvironmentSpec::LowerBound(LowerBoundSpec {
            arms: 5,
            epsilon,
            special_arm: 0,
            delta: None,
        });
        mean_regret(
            &run(&config(env, SODA_ADAPTIVE, horizon, vec![horizon])),
            horizon,
        )
    };
    let small = regret_at(0.1);
    let full = regret_at(1.0);
    let ratio = small / (0.1 * full);
    (
        (0.5..=2.0).contains(&ratio),
        format!("regret eps=0.1 {small:.3}, eps=1 {full:.3}, ratio to linear {ratio:.3} (limit [0.5, 2])"),
    )
}

fn stochastic_flattening(soda: &Experiment) -> (bool, String) {
    let bound = stochastic_bound(5, 1.0, &[0.0, 0.2, 0.2, 0.4, 0.4]).unwrap();
    let half = mean_regret(soda, 50_000);
    let full = mean_regret(soda, 100_000);
    let growth = (full - half) / half;
    (
        full <= bound && growth <= 0.10,
        format!(
            "pseudo-regret 5e4 {half:.3}, 1e5 {full:.3}, bound {bound:.1}, growth {:.2}% (limit 10%)",
            100.0 * growth
        ),
    )
}

fn baseline_contrast(soda: &Experiment) -> (bool, String) {
    let horizon = 100_000;
    let exp3 = mean_regret(
        &run(&config(
            flattening_env(),
            Algorithm::Exp3,
            horizon,
            vec![horizon],
        )),
        horizon,
    );
    let uniform = mean_regret(
        &run(&config(
            flattening_env(),
            Algorithm::Uniform,
            horizon,
            vec![horizon],
        )),
        horizon,
    );
    let ours = mean_regret(soda, horizon);
    (
        ours < exp3 && ours < uniform,
        format!("pseudo-regret at 1e5: soda {ours:.2}, exp3 {exp3:.2}, uniform {uniform:.2}"),
    )
}

fn determinism() -> (bool, String) {
    let configs = [
        config(
            flattening_env(),
            SODA_ANYTIME,
            2_000,
            vec![10, 100, 1_000, 2_000],
        ),
        config(
            EnvironmentSpec::Adversarial(AdversarialSpec {
                pattern: AdversarialPattern::RandomWithinRange,
                arms: 4,
                epsilon: 0.3,
                period: DEFAULT_PERIOD,
            }),
            SODA_ADAPTIVE,
            2_000,
            vec![1, 500, 2_000],
        ),
    ];
    let mut ok = true;
    for cfg in &configs {
        // Round-trip through JSON so the check covers a config file's content.
        let text = serde_json::to_string(cfg).unwrap();
        let csv = |threads: usize| {
            let exp =
                run_experiment_with_threads(&ExperimentConfig::from_json(&text).unwrap(), threads)
                    .unwrap();
            let mut bytes = Vec::new();
            exp.write_trace_csv(&mut bytes).unwrap();
            (bytes, exp.summary_json().unwrap())
        };
        let first = csv(WORKERS);
        let second = csv(WORKERS);
        let serial = csv(1);
        ok &= !first.0.is_empty() && first == second && first == serial;
    }
    (
        ok,
        format!(
            "{} configs run twice and single-threaded, CSV and summary byte-identical",
            configs.len()
        ),
    )
}

fn performance() -> (bool, String) {
    let horizon = 100_000;
    let env = EnvironmentSpec::Stochastic(
        StochasticSpec::new(1.0, 0.0, (0..10).map(|a| 0.2 + 0.05 * a as f64).collect()).unwrap(),
    );
    let cfg = config(env, SODA_ANYTIME, horizon, vec![horizon]);
    let start = Instant::now();
    let exp = run(&cfg);
    let elapsed = start.elapsed();
    (
        elapsed < Duration::from_secs(60) && exp.runs.len() == REPLICATIONS,
        format!("K=10, T=1e5, 100 replications in {elapsed:.2?} (limit 60s)"),
    )
}

#[test]
fn acceptance_criteria() {
    let mut harvested = Vec::new();
    let mut verdicts = vec![
        criterion(1, "estimator identities", estimator_identities),
        criterion(2, "trace inequality", || lemmas(&mut harvested)),
    ];
    verdicts.push(criterion(3, "sequence and series lemmas", || {
        technical_lemmas(&harvested)
    }));
    verdicts.push(criterion(
        4,
        "adversarial bound dominance",
        adversarial_dominance,
    ));
    verdicts.push(criterion(5, "linear scaling in eps", epsilon_scaling));
    let soda = run(&config(
        flattening_env(),
        SODA_ANYTIME,
        100_000,
        vec![50_000, 100_000],
    ));
    verdicts.push(criterion(6, "stochastic flattening", || {
        stochastic_flattening(&soda)
    }));
    verdicts.push(criterion(7, "baseline contrast", || {
        baseline_contrast(&soda)
    }));
    verdicts.push(criterion(8, "determinism", determinism));
    verdicts.push(criterion(9, "performance", performance));

    let failed: Vec<_> = verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| (v.id, v.name))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
