//! Compares both learning-rate schedules against EXP3 and uniform play on
//! one stochastic environment and on one adversarial sequence.
//!
//!     cargo run --release --example baseline_contrast

use soda_lab::environments::{
    AdversarialPattern, AdversarialSpec, EnvironmentSpec, StochasticSpec, DEFAULT_PERIOD,
};
use soda_lab::harness::{run_experiment, Algorithm, ExperimentConfig};
use soda_lab::policy::LearningRateScheme;

fn main() -> soda_lab::Result<()> {
    let horizon = 20_000;
    let environments = [
        EnvironmentSpec::Stochastic(StochasticSpec::from_gaps(
            1.0,
            0.0,
            0.3,
            &[0.0, 0.2, 0.2, 0.4, 0.4],
        )?),
        EnvironmentSpec::Adversarial(AdversarialSpec {
            pattern: AdversarialPattern::ShiftingBestArm,
            arms: 5,
            epsilon: 0.2,
            period: DEFAULT_PERIOD,
        }),
    ];
    let algorithms = [
        Algorithm::Soda(LearningRateScheme::Anytime),
        Algorithm::Soda(LearningRateScheme::Adaptive),
        Algorithm::Exp3,
        Algorithm::Uniform,
    ];
    for env in environments {
        println!("{}", serde_json::to_string(&env)?);
        for algorithm in algorithms {
            let cfg = ExperimentConfig {
                environment: env.clone(),
                algorithm,
                horizon,
                replications: 30,
                seed: 17,
                checkpoints: Some(vec![horizon / 10, horizon / 2, horizon]),
            };
            let exp = run_experiment(&cfg)?;
            let cells: Vec<String> = exp
                .summary
                .checkpoints
                .iter()
                .map(|c| {
                    let m = c.pseudo_regret.unwrap_or(c.regret);
                    format!("t={}: {:>8.2}", c.t, m.mean)
                })
                .collect();
            println!("  {:<14} {}", algorithm.to_string(), cells.join("  "));
        }
    }
    Ok(())
}
