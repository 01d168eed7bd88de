//! Generates one loss matrix of every built-in kind, checks its declared
//! range and prints the first rounds. Pass a directory to also export CSVs.
//!
//!     cargo run --example environments -- /tmp/soda-envs

use soda_lab::environments::{
    AdversarialPattern, AdversarialSpec, EnvironmentSpec, LowerBoundSpec, StochasticSpec,
    DEFAULT_PERIOD,
};
use soda_lab::types::{validate_loss_matrix, EffectiveRange};

fn main() -> soda_lab::Result<()> {
    let export = std::env::args().nth(1).map(std::path::PathBuf::from);
    let horizon = 1_000;
    let mut specs = vec![
        (
            "stochastic".to_string(),
            EnvironmentSpec::Stochastic(StochasticSpec::from_gaps(
                0.5,
                0.2,
                0.3,
                &[0.0, 0.1, 0.2],
            )?),
        ),
        (
            "lower-bound".to_string(),
            EnvironmentSpec::LowerBound(LowerBoundSpec {
                arms: 3,
                epsilon: 0.5,
                special_arm: 1,
                delta: None,
            }),
        ),
    ];
    for pattern in AdversarialPattern::ALL {
        specs.push((
            pattern.to_string(),
            EnvironmentSpec::Adversarial(AdversarialSpec {
                pattern,
                arms: 3,
                epsilon: 0.5,
                period: DEFAULT_PERIOD,
            }),
        ));
    }

    for (name, spec) in &specs {
        let m = spec.generate(horizon, 5)?;
        let report = validate_loss_matrix(&m, EffectiveRange::new(spec.epsilon())?)?;
        println!(
            "{name}: {} x {}, measured range {:.4} <= declared {}",
            report.horizon, report.arms, report.measured_range, report.declared_range
        );
        if let Some(means) = spec.means(horizon) {
            println!("  means {means:.4?}");
        }
        for t in 0..3 {
            println!("  t={} {:.4?}", t + 1, m.row(t));
        }
        if let Some(dir) = &export {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.csv"));
            m.write_csv(std::fs::File::create(&path)?, true)?;
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}
