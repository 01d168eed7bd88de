//! Steps the difference-adjusted policy through a few rounds of a fixed loss
//! matrix and prints what it sees and how its statistics move.
//!
//!     cargo run --example policy_walkthrough

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soda_lab::policy::{rate_cap, LearningRateScheme, SodaPolicy};
use soda_lab::types::LossMatrix;

fn main() -> soda_lab::Result<()> {
    let losses = LossMatrix::from_rows(&[
        vec![0.20, 0.60, 0.50],
        vec![0.10, 0.70, 0.40],
        vec![0.30, 0.50, 0.60],
        vec![0.20, 0.60, 0.50],
        vec![0.10, 0.60, 0.45],
        vec![0.25, 0.65, 0.55],
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    for scheme in [LearningRateScheme::Anytime, LearningRateScheme::Adaptive] {
        println!("== {scheme} (cap {:.4})", rate_cap(losses.arms()));
        let mut policy = SodaPolicy::new(losses.arms(), scheme)?;
        for row in losses.rows() {
            let out = policy.play_round(row, &mut rng)?;
            println!(
                "t={} eta={:.4} p={:.3?} played {} saw {} -> estimates {:+.2?}",
                out.t,
                out.eta,
                out.probabilities,
                out.primary + 1,
                out.secondary + 1,
                out.estimates
            );
        }
        let state = policy.state();
        println!(
            "D={:+.2?} S={:.2?} max S={:.2} S_hat={:.3}\n",
            state.diffs(),
            state.squares(),
            state.max_square(),
            state.realized_squares()
        );
    }
    Ok(())
}
