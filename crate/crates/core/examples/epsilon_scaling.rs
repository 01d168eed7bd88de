//! Shows regret shrinking linearly with the loss range: the same Bernoulli
//! draws are scaled by eps, so only the range changes between rows.
//!
//!     cargo run --release --example epsilon_scaling

use soda_lab::environments::{EnvironmentSpec, LowerBoundSpec};
use soda_lab::harness::{run_experiment, Algorithm, ExperimentConfig};
use soda_lab::metrics::adversarial_bound;
use soda_lab::policy::LearningRateScheme;

fn main() -> soda_lab::Result<()> {
    let (arms, horizon) = (5, 10_000);
    println!(
        "{:>6} {:>12} {:>14} {:>12}",
        "eps", "regret", "regret/eps", "bound"
    );
    for eps in [1.0, 0.5, 0.25, 0.1, 0.05] {
        let cfg = ExperimentConfig {
            environment: EnvironmentSpec::LowerBound(LowerBoundSpec {
                arms,
                epsilon: eps,
                special_arm: 0,
                delta: None,
            }),
            algorithm: Algorithm::Soda(LearningRateScheme::Adaptive),
            horizon,
            replications: 50,
            seed: 2,
            checkpoints: Some(vec![horizon]),
        };
        let exp = run_experiment(&cfg)?;
        let cp = &exp.summary.checkpoints[0];
        let regret = cp.pseudo_regret.unwrap_or(cp.regret).mean;
        let per_eps = regret / eps;
        println!(
            "{eps:>6} {regret:>12.4} {per_eps:>14.4} {:>12.1}",
            adversarial_bound(horizon, arms, eps)?
        );
    }
    Ok(())
}
