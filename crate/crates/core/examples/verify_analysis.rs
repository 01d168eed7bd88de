//! Runs the numerical checks of the regret analysis: the per-run trace
//! inequality, the sequence lemmas, the series bounds and the estimator
//! identities. Also prints the term breakdown of one run.
//!
//!     cargo run --release --example verify_analysis

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soda_lab::environments::{generate_adversarial, AdversarialPattern};
use soda_lab::policy::{LearningRateScheme, SodaPolicy};
use soda_lab::verification::{check_lemma1_all_arms, run_suite, SuiteSizes, VerifySuite};

fn main() -> soda_lab::Result<()> {
    for line in run_suite(VerifySuite::All, SuiteSizes::default(), 0)? {
        println!(
            "{:<34} {:>6} cases  {}  worst slack {:.3e}",
            line.name,
            line.cases,
            if line.passed { "PASS" } else { "FAIL" },
            line.worst_slack
        );
    }

    let m = generate_adversarial(AdversarialPattern::ShiftingBestArm, 4, 500, 0.6, 9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut policy = SodaPolicy::new(4, LearningRateScheme::Anytime)?;
    let log: Vec<_> = m
        .rows()
        .map(|r| policy.play_round(r, &mut rng))
        .collect::<Result<_, _>>()?;
    println!("\nterm breakdown on a 500-round shifting sequence:");
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "arm", "lhs", "log", "variance", "mean", "potential", "margin"
    );
    for r in check_lemma1_all_arms(&log)? {
        println!(
            "{:>4} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            r.arm + 1,
            r.lhs,
            r.log_term,
            r.variance_term,
            r.mean_term,
            r.potential_term,
            r.margin
        );
    }
    Ok(())
}
