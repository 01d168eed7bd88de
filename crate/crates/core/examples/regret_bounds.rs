//! Tabulates the closed-form regret bounds over a grid of horizons, arm
//! counts and loss ranges.
//!
//!     cargo run --example regret_bounds

use soda_lab::metrics::{adversarial_bound, lower_bound, stochastic_bound};

fn main() -> soda_lab::Result<()> {
    println!(
        "{:>4} {:>6} {:>9} {:>14} {:>12} {:>8}",
        "K", "eps", "T", "upper", "lower", "ratio"
    );
    for arms in [2, 5, 10] {
        for eps in [0.1, 1.0] {
            for horizon in [100, 10_000, 1_000_000] {
                let upper = adversarial_bound(horizon, arms, eps)?;
                let lower = lower_bound(horizon, arms, eps);
                let lower_text = lower.map_or("n/a".to_string(), |v| format!("{v:.3}"));
                let ratio = lower.map_or("n/a".to_string(), |v| format!("{:.1}", upper / v));
                println!(
                    "{arms:>4} {eps:>6} {horizon:>9} {upper:>14.3} {lower_text:>12} {ratio:>8}"
                );
            }
        }
    }

    println!("\nstochastic bound (horizon free) for K=5, gaps (0, .2, .2, .4, .4):");
    let gaps = [0.0, 0.2, 0.2, 0.4, 0.4];
    for eps in [0.1, 0.5, 1.0] {
        println!("  eps={eps}: {:.1}", stochastic_bound(5, eps, &gaps)?);
    }
    Ok(())
}
