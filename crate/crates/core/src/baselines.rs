//! Comparison policies run under the same two-observation protocol.
//!
//! Both baselines draw and read a secondary arm every round so that the
//! access pattern matches the difference-adjusted policy, but neither
//! learns from it.

use rand::Rng;

use crate::error::{LabError, Result};
use crate::policy::{difference_estimates, initial_distribution, select_secondary};
use crate::sampling::{sample_arm, softmax};
use crate::types::{LossRow, RoundOutcome};

/// Loss-based EXP3 with importance-weighted estimates `l(A)/p(A)` and
/// anytime rate `sqrt(ln K / (t K))`. No explicit exploration mixing.
#[derive(Debug, Clone)]
pub struct Exp3Policy {
    loss_estimates: Vec<f64>,
    round: u64,
    last_eta: f64,
}

impl Exp3Policy {
    pub fn new(arms: usize) -> Result<Self> {
        initial_distribution(arms)?;
        Ok(Self {
            loss_estimates: vec![0.0; arms],
            round: 1,
            last_eta: exp3_rate(arms, 1),
        })
    }

    pub fn arms(&self) -> usize {
        self.loss_estimates.len()
    }

    pub fn loss_estimates(&self) -> &[f64] {
        &self.loss_estimates
    }

    pub fn last_eta(&self) -> f64 {
        self.last_eta
    }

    /// Distribution for the next round.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        let eta = exp3_rate(self.arms(), self.round);
        let logits: Vec<f64> = self.loss_estimates.iter().map(|l| -eta * l).collect();
        softmax(&logits)
    }

    pub fn play_round<L, R>(&mut self, row: &L, rng: &mut R) -> Result<RoundOutcome>
    where
        L: LossRow + ?Sized,
        R: Rng + ?Sized,
    {
        let arms = self.arms();
        if row.arms() != arms {
            return Err(LabError::Round(format!(
                "loss row has {} arms, policy has {arms}",
                row.arms()
            )));
        }
        let eta = exp3_rate(arms, self.round);
        let probabilities = self.distribution()?;
        let primary = sample_arm(&probabilities, rng);
        let secondary = select_secondary(arms, primary, rng);
        let loss_primary = row.observe(primary);
        let loss_secondary = row.observe(secondary);
        let p = probabilities[primary];
        if p <= 0.0 {
            return Err(LabError::Numerical(format!(
                "probability of played arm {} underflowed to zero",
                primary + 1
            )));
        }
        self.loss_estimates[primary] += loss_primary / p;
        let estimates =
            difference_estimates(arms, primary, secondary, loss_primary, loss_secondary)?;
        let t = self.round;
        self.round += 1;
        self.last_eta = eta;
        Ok(RoundOutcome {
            t,
            primary,
            secondary,
            loss_primary,
            loss_secondary,
            estimates,
            eta,
            probabilities,
        })
    }
}

pub fn exp3_rate(arms: usize, round: u64) -> f64 {
    let k = arms as f64;
    (k.ln() / (round as f64 * k)).sqrt()
}

/// Plays uniformly at random and never learns.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    arms: usize,
    round: u64,
}

impl UniformPolicy {
    pub fn new(arms: usize) -> Result<Self> {
        initial_distribution(arms)?;
        Ok(Self { arms, round: 1 })
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn play_round<L, R>(&mut self, row: &L, rng: &mut R) -> Result<RoundOutcome>
    where
        L: LossRow + ?Sized,
        R: Rng + ?Sized,
    {
        let outcome = uniform_round(self.arms, self.round, row, rng)?;
        self.round += 1;
        Ok(outcome)
    }
}

pub fn uniform_round<L, R>(arms: usize, t: u64, row: &L, rng: &mut R) -> Result<RoundOutcome>
where
    L: LossRow + ?Sized,
    R: Rng + ?Sized,
{
    let probabilities = initial_distribution(arms)?;
    if row.arms() != arms {
        return Err(LabError::Round(format!(
            "loss row has {} arms, policy has {arms}",
            row.arms()
        )));
    }
    let primary = rng.random_range(0..arms);
    let secondary = select_secondary(arms, primary, rng);
    let loss_primary = row.observe(primary);
    let loss_secondary = row.observe(secondary);
    Ok(RoundOutcome {
        t,
        primary,
        secondary,
        loss_primary,
        loss_secondary,
        estimates: difference_estimates(arms, primary, secondary, loss_primary, loss_secondary)?,
        eta: 0.0,
        probabilities,
    })
}
