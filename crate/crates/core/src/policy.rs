//! Second-order difference-adjusted exponential weights with one extra
//! observation per round.
//!
//! Each round the policy plays a primary arm `A` drawn from an exponential
//! weights distribution, observes one secondary arm `B` drawn uniformly from
//! the other `K - 1` arms, and feeds the importance-weighted difference
//! `(K - 1) * (l^B - l^A)` into cumulative statistics for arm `B`. The
//! weights penalize both the cumulative differences `D(a)` and their
//! cumulative squares `S(a)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::sampling::{sample_arm, softmax};
use crate::types::{LossRow, PolicyState, RoundOutcome};

/// How the learning rate for round `t` is derived from statistics through
/// round `t - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearningRateScheme {
    /// `min{ sqrt(ln K / (max_a S(a) + (K-1)^2)), 1/(2(K-1)) }`
    Anytime,
    /// `min{ sqrt(ln K / (S_hat + 1)) / (K-1), 1/(2(K-1)) }`
    Adaptive,
    /// A constant rate; must not exceed `1/(2(K-1))`.
    Fixed(f64),
}

impl LearningRateScheme {
    pub fn validate(self, arms: usize) -> Result<()> {
        if let LearningRateScheme::Fixed(eta) = self {
            let cap = rate_cap(arms);
            if !(eta > 0.0 && eta <= cap) {
                return Err(LabError::Config(format!(
                    "fixed learning rate {eta} must lie in (0, {cap}] for {arms} arms"
                )));
            }
        }
        Ok(())
    }

    pub fn rate(self, state: &PolicyState) -> f64 {
        match self {
            LearningRateScheme::Anytime => learning_rate_anytime(state),
            LearningRateScheme::Adaptive => learning_rate_adaptive(state),
            LearningRateScheme::Fixed(eta) => eta,
        }
    }
}

impl fmt::Display for LearningRateScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearningRateScheme::Anytime => f.write_str("anytime"),
            LearningRateScheme::Adaptive => f.write_str("adaptive"),
            LearningRateScheme::Fixed(eta) => write!(f, "fixed:{eta}"),
        }
    }
}

impl FromStr for LearningRateScheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anytime" => Ok(Self::Anytime),
            "adaptive" => Ok(Self::Adaptive),
            other => match other.strip_prefix("fixed:") {
                Some(v) => v
                    .parse()
                    .map(Self::Fixed)
                    .map_err(|_| LabError::Config(format!("bad fixed learning rate '{v}'"))),
                None => Err(LabError::Config(format!(
                    "unknown learning rate scheme '{s}'"
                ))),
            },
        }
    }
}

/// Upper limit `1/(2(K-1))` shared by every scheme.
pub fn rate_cap(arms: usize) -> f64 {
    1.0 / (2.0 * (arms as f64 - 1.0))
}

pub fn initial_distribution(arms: usize) -> Result<Vec<f64>> {
    if arms < 2 {
        return Err(LabError::Config(format!(
            "need at least 2 arms to draw a secondary arm, got {arms}"
        )));
    }
    Ok(vec![1.0 / arms as f64; arms])
}

/// Importance-weighted loss differences for one round: only the secondary
/// arm's coordinate is non-zero.
pub fn difference_estimates(
    arms: usize,
    primary: usize,
    secondary: usize,
    loss_primary: f64,
    loss_secondary: f64,
) -> Result<Vec<f64>> {
    if primary == secondary {
        return Err(LabError::Round(format!(
            "primary and secondary arm coincide (arm {})",
            primary + 1
        )));
    }
    if primary >= arms || secondary >= arms {
        return Err(LabError::Round(format!(
            "arm index out of range for {arms} arms"
        )));
    }
    let mut v = vec![0.0; arms];
    v[secondary] = (arms as f64 - 1.0) * (loss_secondary - loss_primary);
    Ok(v)
}

impl PolicyState {
    /// Rebuilds a state from raw statistics.
    pub fn from_parts(
        diffs: Vec<f64>,
        squares: Vec<f64>,
        realized_squares: f64,
        round: u64,
    ) -> Result<Self> {
        if diffs.len() != squares.len() || diffs.len() < 2 {
            return Err(LabError::Config(
                "statistics vectors must share a length of at least 2".into(),
            ));
        }
        if squares.iter().any(|&s| s < 0.0) || realized_squares < 0.0 || round == 0 {
            return Err(LabError::Config(
                "squared statistics must be non-negative and round >= 1".into(),
            ));
        }
        let max_square = squares.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            diffs,
            squares,
            realized_squares,
            max_square,
            round,
        })
    }

    /// Accumulates one round: `D += v`, `S += v^2`,
    /// `S_hat += (l^B - l^A)^2`, `t += 1`.
    pub fn update(&mut self, estimates: &[f64], loss_primary: f64, loss_secondary: f64) {
        debug_assert_eq!(estimates.len(), self.diffs.len());
        for ((d, s), &v) in self
            .diffs
            .iter_mut()
            .zip(self.squares.iter_mut())
            .zip(estimates)
        {
            *d += v;
            *s += v * v;
            self.max_square = self.max_square.max(*s);
        }
        let gap = loss_secondary - loss_primary;
        self.realized_squares += gap * gap;
        self.round += 1;
    }
}

/// Functional form of [`PolicyState::update`].
pub fn update_statistics(
    state: &PolicyState,
    estimates: &[f64],
    loss_primary: f64,
    loss_secondary: f64,
) -> PolicyState {
    let mut next = state.clone();
    next.update(estimates, loss_primary, loss_secondary);
    next
}

/// The anytime rate before clamping, `sqrt(ln K / (max_a S(a) + (K-1)^2))`.
pub fn anytime_candidate(state: &PolicyState) -> f64 {
    let k = state.arms() as f64;
    (k.ln() / (state.max_square() + (k - 1.0).powi(2))).sqrt()
}

pub fn learning_rate_anytime(state: &PolicyState) -> f64 {
    anytime_candidate(state).min(rate_cap(state.arms()))
}

/// The realized-difference rate before clamping,
/// `sqrt(ln K / (S_hat + 1)) / (K-1)`.
pub fn adaptive_candidate(state: &PolicyState) -> f64 {
    let k = state.arms() as f64;
    (k.ln() / (state.realized_squares() + 1.0)).sqrt() / (k - 1.0)
}

pub fn learning_rate_adaptive(state: &PolicyState) -> f64 {
    adaptive_candidate(state).min(rate_cap(state.arms()))
}

/// Exponential weights `p(a) ~ exp(-eta D(a) - eta^2 S(a))`.
pub fn action_distribution(state: &PolicyState, eta: f64) -> Result<Vec<f64>> {
    weights_distribution(state.diffs(), state.squares(), eta)
}

pub(crate) fn weights_distribution(diffs: &[f64], squares: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(LabError::Numerical(format!(
            "learning rate {eta} is not positive"
        )));
    }
    let logits: Vec<f64> = diffs
        .iter()
        .zip(squares)
        .map(|(d, s)| -eta * d - eta * eta * s)
        .collect();
    softmax(&logits)
}

/// Uniform draw from every arm except `primary`.
pub fn select_secondary<R: Rng + ?Sized>(arms: usize, primary: usize, rng: &mut R) -> usize {
    let j = rng.random_range(0..arms - 1);
    if j >= primary {
        j + 1
    } else {
        j
    }
}

#[derive(Debug, Clone)]
pub struct SodaPolicy {
    state: PolicyState,
    scheme: LearningRateScheme,
    last_eta: f64,
}

impl SodaPolicy {
    pub fn new(arms: usize, scheme: LearningRateScheme) -> Result<Self> {
        scheme.validate(arms)?;
        let state = PolicyState::new(arms)?;
        let last_eta = scheme.rate(&state);
        Ok(Self {
            state,
            scheme,
            last_eta,
        })
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn scheme(&self) -> LearningRateScheme {
        self.scheme
    }

    /// Learning rate used in the most recent round.
    pub fn last_eta(&self) -> f64 {
        self.last_eta
    }

    /// Plays one round, reading exactly two losses from `row`.
    pub fn play_round<L, R>(&mut self, row: &L, rng: &mut R) -> Result<RoundOutcome>
    where
        L: LossRow + ?Sized,
        R: Rng + ?Sized,
    {
        let arms = self.state.arms();
        if row.arms() != arms {
            return Err(LabError::Round(format!(
                "loss row has {} arms, policy has {arms}",
                row.arms()
            )));
        }
        let eta = self.scheme.rate(&self.state);
        let probabilities = action_distribution(&self.state, eta)?;
        let primary = sample_arm(&probabilities, rng);
        let secondary = select_secondary(arms, primary, rng);
        let loss_primary = row.observe(primary);
        let loss_secondary = row.observe(secondary);
        let estimates =
            difference_estimates(arms, primary, secondary, loss_primary, loss_secondary)?;
        let t = self.state.round();
        self.state.update(&estimates, loss_primary, loss_secondary);
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
