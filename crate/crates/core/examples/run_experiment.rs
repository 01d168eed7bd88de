//! Runs a JSON experiment config and writes `trace.csv` and `summary.json`.
//!
//!     cargo run --release --example run_experiment -- examples/configs/stochastic_gaps.json /tmp/soda-run

use std::path::PathBuf;

use soda_lab::harness::{run_experiment, ExperimentConfig};

fn main() -> soda_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/shifting_adversary.json")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("soda-run"));

    let cfg = ExperimentConfig::from_file(&config)?;
    let exp = run_experiment(&cfg)?;
    exp.write_outputs(&out)?;

    let s = &exp.summary;
    println!(
        "{} on {} arms, eps {}, {} replications",
        s.algorithm, s.arms, s.epsilon, s.replications
    );
    for cp in &s.checkpoints {
        let pseudo = cp.pseudo_regret.map_or(String::new(), |p| {
            format!("  pseudo {:.3} +- {:.3}", p.mean, p.standard_error)
        });
        println!(
            "  t={:>7} regret {:>9.3} +- {:.3}{pseudo}",
            cp.t, cp.regret.mean, cp.regret.standard_error
        );
    }
    println!(
        "bounds: adversarial {:.1}, lower {:?}, stochastic {:?}",
        s.bounds.adversarial, s.bounds.lower, s.bounds.stochastic
    );
    println!("outputs in {}", out.display());
    Ok(())
}
