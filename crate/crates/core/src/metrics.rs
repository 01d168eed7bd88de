//! Regret bookkeeping and closed-form regret bounds.

use serde::{Deserialize, Serialize};

use crate::environments::{gaps_of, EnvironmentSpec};
use crate::error::{LabError, Result};
use crate::types::{LossMatrix, RoundOutcome};

/// Regret and cumulative losses at one checkpoint of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: usize,
    pub cumulative_loss: f64,
    pub best_arm_loss: f64,
    pub regret: f64,
    pub pseudo_regret: Option<f64>,
    /// Learning rate used in round `t`.
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub points: Vec<TracePoint>,
}

impl RegretTrace {
    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn at(&self, t: usize) -> Option<&TracePoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

fn check_log_covers(log: &[RoundOutcome], t: usize) -> Result<()> {
    if t > log.len() {
        return Err(LabError::IncompleteLog(format!(
            "log covers {} rounds, regret requested at {t}",
            log.len()
        )));
    }
    Ok(())
}

/// `sum_{s<=t} l_s^{A_s} - min_a sum_{s<=t} l_s^a` for one realization.
pub fn empirical_regret(log: &[RoundOutcome], m: &LossMatrix, t: usize) -> Result<f64> {
    check_log_covers(log, t)?;
    if t > m.horizon() {
        return Err(LabError::IncompleteLog(format!(
            "matrix has {} rounds, regret requested at {t}",
            m.horizon()
        )));
    }
    let played: f64 = log[..t]
        .iter()
        .map(|o| m.get((o.t - 1) as usize, o.primary))
        .sum();
    let best = (0..m.arms())
        .map(|a| (0..t).map(|s| m.get(s, a)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(played - best)
}

/// `sum_{a: gap > 0} gap_a N_t(a)` given the arm means.
pub fn pseudo_regret(log: &[RoundOutcome], means: &[f64], t: usize) -> Result<f64> {
    check_log_covers(log, t)?;
    let gaps = gaps_of(means);
    let mut plays = vec![0usize; means.len()];
    for o in &log[..t] {
        plays[o.primary] += 1;
    }
    Ok(gaps
        .iter()
        .zip(&plays)
        .filter(|(g, _)| **g > 0.0)
        .map(|(g, &n)| g * n as f64)
        .sum())
}

/// [`pseudo_regret`] for an environment spec; fails for adversarial ones.
pub fn pseudo_regret_for(
    log: &[RoundOutcome],
    env: &EnvironmentSpec,
    horizon: usize,
    t: usize,
) -> Result<f64> {
    let means = env.means(horizon).ok_or(LabError::NotStochastic)?;
    pseudo_regret(log, &means, t)
}

/// Streaming regret bookkeeping for long runs where keeping the full log is
/// too expensive.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    arm_losses: Vec<f64>,
    policy_loss: f64,
    gaps: Option<Vec<f64>>,
    pseudo: f64,
    rounds: usize,
}

impl RegretTracker {
    pub fn new(arms: usize, means: Option<&[f64]>) -> Self {
        Self {
            arm_losses: vec![0.0; arms],
            policy_loss: 0.0,
            gaps: means.map(gaps_of),
            pseudo: 0.0,
            rounds: 0,
        }
    }

    /// Adds one round given the full loss row and the played arm.
    pub fn record(&mut self, row: &[f64], primary: usize) {
        for (total, l) in self.arm_losses.iter_mut().zip(row) {
            *total += l;
        }
        self.policy_loss += row[primary];
        if let Some(gaps) = &self.gaps {
            self.pseudo += gaps[primary];
        }
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn point(&self, eta: f64) -> TracePoint {
        let best = self
            .arm_losses
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        TracePoint {
            t: self.rounds,
            cumulative_loss: self.policy_loss,
            best_arm_loss: best,
            regret: self.policy_loss - best,
            pseudo_regret: self.gaps.as_ref().map(|_| self.pseudo),
            eta,
        }
    }
}

/// Adversarial upper bound:
/// `4 eps sqrt((K-1) ln K) sqrt(T + (K-1) sqrt(T) (2 + sqrt(ln(sqrt(T)(K-1))/2))) + 4 (K-1) ln K`.
pub fn adversarial_bound(horizon: usize, arms: usize, epsilon: f64) -> Result<f64> {
    check_bound_inputs(horizon, arms, epsilon)?;
    let t = horizon as f64;
    let k1 = arms as f64 - 1.0;
    let ln_k = (arms as f64).ln();
    // sqrt(T)(K-1) >= 1, so the inner log is non-negative.
    let inner_log = (t.sqrt() * k1).ln();
    let spread = t + k1 * t.sqrt() * (2.0 + (inner_log / 2.0).sqrt());
    Ok(4.0 * epsilon * (k1 * ln_k).sqrt() * spread.sqrt() + 4.0 * k1 * ln_k)
}

/// Minimax lower bound `0.02 eps sqrt(K T)`, defined only for `T >= 3K/32`.
pub fn lower_bound(horizon: usize, arms: usize, epsilon: f64) -> Option<f64> {
    if (horizon as f64) < 3.0 * arms as f64 / 32.0 {
        return None;
    }
    Some(0.02 * epsilon * ((arms * horizon) as f64).sqrt())
}

/// Stochastic pseudo-regret bound
/// `sum_{a: gap>0} [ (16K^3/ln K + 16K^2) eps^2/gap + 4K^2 + gap/K ]`.
pub fn stochastic_bound(arms: usize, epsilon: f64, gaps: &[f64]) -> Result<f64> {
    if arms < 2 {
        return Err(LabError::Config(format!(
            "stochastic bound needs K >= 2 (ln K > 0), got {arms}"
        )));
    }
    if gaps.iter().any(|g| g.is_nan() || *g < 0.0) {
        return Err(LabError::Config("gaps must be non-negative".into()));
    }
    if !gaps.contains(&0.0) {
        return Err(LabError::Config(
            "gaps must include the best arm's zero".into(),
        ));
    }
    let k = arms as f64;
    let lead = 16.0 * k.powi(3) / k.ln() + 16.0 * k * k;
    Ok(gaps
        .iter()
        .filter(|g| **g > 0.0)
        .map(|g| lead * epsilon * epsilon / g + 4.0 * k * k + g / k)
        .sum())
}

fn check_bound_inputs(horizon: usize, arms: usize, epsilon: f64) -> Result<()> {
    if horizon == 0 || arms < 2 || !(0.0..=1.0).contains(&epsilon) {
        return Err(LabError::Config(format!(
            "bound needs T >= 1, K >= 2, eps in [0, 1]; got T={horizon}, K={arms}, eps={epsilon}"
        )));
    }
    Ok(())
}

/// `{1, 2, 5, 10, 20, 50, ...}` up to and including `horizon`.
pub fn log_checkpoints(horizon: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for m in [1, 2, 5] {
            let t = m * decade;
            if t >= horizon {
                break 'outer;
            }
            points.push(t);
        }
        decade *= 10;
    }
    points.push(horizon);
    points
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub standard_error: f64,
}

/// Sums in slice order, so results are bit-stable for a fixed order.
pub fn mean_and_se(values: &[f64]) -> MeanSe {
    let n = values.len() as f64;
    if values.is_empty() {
        return MeanSe {
            mean: f64::NAN,
            standard_error: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n;
    let standard_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MeanSe {
        mean,
        standard_error,
    }
}
