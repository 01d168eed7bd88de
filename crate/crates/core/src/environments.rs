//! Loss-sequence generators.
//!
//! Every generator is a pure function of its spec, the horizon and a seed,
//! and never sees policy state, so the resulting sequences are oblivious by
//! construction.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::types::{validate_loss_matrix, EffectiveRange, LossMatrix};

/// Default period of the sinusoidal pattern, in rounds.
pub const DEFAULT_PERIOD: usize = 200;

/// I.i.d. losses `c + eps * X_a` where `X_a` has mean `q_a`.
///
/// By default `X_a` is Bernoulli(`q_a`), so every loss is one of the two
/// points `{c, c + eps}`. With `continuous` set, `X_a` is uniform on
/// `[q_a - w, q_a + w]`, `w = min(q_a, 1 - q_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub base: f64,
    pub biases: Vec<f64>,
    #[serde(default)]
    pub continuous: bool,
}

impl StochasticSpec {
    pub fn new(epsilon: f64, base: f64, biases: Vec<f64>) -> Result<Self> {
        let spec = Self {
            epsilon,
            base,
            biases,
            continuous: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds biases `q_a = lowest + gap_a / eps` so that the arm means have
    /// exactly the requested gaps.
    pub fn from_gaps(epsilon: f64, base: f64, lowest: f64, gaps: &[f64]) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(LabError::Spec("gaps need a positive range".into()));
        }
        Self::new(
            epsilon,
            base,
            gaps.iter().map(|g| lowest + g / epsilon).collect(),
        )
    }

    pub fn arms(&self) -> usize {
        self.biases.len()
    }

    pub fn validate(&self) -> Result<()> {
        EffectiveRange::new(self.epsilon).map_err(|e| LabError::Spec(e.to_string()))?;
        if self.biases.len() < 2 {
            return Err(LabError::Spec("need at least 2 arms".into()));
        }
        if !(self.base >= 0.0 && self.base + self.epsilon <= 1.0) {
            return Err(LabError::Spec(format!(
                "base {} plus range {} leaves [0, 1]",
                self.base, self.epsilon
            )));
        }
        if let Some(q) = self.biases.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(LabError::Spec(format!("bias {q} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.biases
            .iter()
            .map(|q| self.base + self.epsilon * q)
            .collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        gaps_of(&self.means())
    }
}

/// Scaled-Bernoulli construction: the special arm has mean
/// `eps * (1/2 - delta)`, every other arm `eps / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundSpec {
    pub arms: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub special_arm: usize,
    /// Bias gap; `None` selects [`default_bias_gap`] for the horizon.
    #[serde(default)]
    pub delta: Option<f64>,
}

impl LowerBoundSpec {
    pub fn validate(&self) -> Result<()> {
        EffectiveRange::new(self.epsilon).map_err(|e| LabError::Spec(e.to_string()))?;
        if self.arms < 2 {
            return Err(LabError::Spec("need at least 2 arms".into()));
        }
        if self.special_arm >= self.arms {
            return Err(LabError::Spec(format!(
                "special arm {} out of range",
                self.special_arm + 1
            )));
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta <= 0.5) {
                return Err(LabError::Spec(format!("bias gap {delta} outside (0, 1/2]")));
            }
        }
        Ok(())
    }

    pub fn delta_for(&self, horizon: usize) -> f64 {
        self.delta
            .unwrap_or_else(|| default_bias_gap(self.arms, horizon))
    }

    pub fn means(&self, horizon: usize) -> Vec<f64> {
        let delta = self.delta_for(horizon);
        (0..self.arms)
            .map(|a| {
                if a == self.special_arm {
                    self.epsilon * (0.5 - delta)
                } else {
                    self.epsilon * 0.5
                }
            })
            .collect()
    }
}

/// `min(1/2, sqrt(K/T)/4)`.
pub fn default_bias_gap(arms: usize, horizon: usize) -> f64 {
    ((arms as f64 / horizon.max(1) as f64).sqrt() / 4.0).min(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarialPattern {
    /// The low-loss arm rotates every `ceil(T/K)` rounds.
    ShiftingBestArm,
    /// `l_t^a = 1/2 + (eps/2) sin(2 pi t / P + 2 pi a / K)`.
    Sinusoidal,
    /// Each row uniform inside a randomly placed band of width `eps`.
    RandomWithinRange,
}

impl AdversarialPattern {
    pub const ALL: [AdversarialPattern; 3] = [
        AdversarialPattern::ShiftingBestArm,
        AdversarialPattern::Sinusoidal,
        AdversarialPattern::RandomWithinRange,
    ];
}

impl fmt::Display for AdversarialPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversarialPattern::ShiftingBestArm => "shifting-best-arm",
            AdversarialPattern::Sinusoidal => "sinusoidal",
            AdversarialPattern::RandomWithinRange => "random-within-range",
        })
    }
}

impl FromStr for AdversarialPattern {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| LabError::Spec(format!("unknown adversarial pattern '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialSpec {
    pub pattern: AdversarialPattern,
    pub arms: usize,
    pub epsilon: f64,
    #[serde(default = "default_period")]
    pub period: usize,
}

fn default_period() -> usize {
    DEFAULT_PERIOD
}

/// A loss matrix read from the CSV format, replayed as an oblivious sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFileSpec {
    pub path: PathBuf,
    pub epsilon: f64,
}

/// Environment section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    Stochastic(StochasticSpec),
    LowerBound(LowerBoundSpec),
    Adversarial(AdversarialSpec),
    MatrixFile(MatrixFileSpec),
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentSpec::Stochastic(s) => s.validate(),
            EnvironmentSpec::LowerBound(s) => s.validate(),
            EnvironmentSpec::Adversarial(s) => {
                EffectiveRange::new(s.epsilon).map_err(|e| LabError::Spec(e.to_string()))?;
                if s.arms < 2 {
                    return Err(LabError::Spec("need at least 2 arms".into()));
                }
                if s.period == 0 {
                    return Err(LabError::Spec("period must be positive".into()));
                }
                Ok(())
            }
            EnvironmentSpec::MatrixFile(s) => EffectiveRange::new(s.epsilon)
                .map(|_| ())
                .map_err(|e| LabError::Spec(e.to_string())),
        }
    }

    /// Declared effective range.
    pub fn epsilon(&self) -> f64 {
        match self {
            EnvironmentSpec::Stochastic(s) => s.epsilon,
            EnvironmentSpec::LowerBound(s) => s.epsilon,
            EnvironmentSpec::Adversarial(s) => s.epsilon,
            EnvironmentSpec::MatrixFile(s) => s.epsilon,
        }
    }

    /// Number of arms, when known without reading a file.
    pub fn arms(&self) -> Option<usize> {
        match self {
            EnvironmentSpec::Stochastic(s) => Some(s.arms()),
            EnvironmentSpec::LowerBound(s) => Some(s.arms),
            EnvironmentSpec::Adversarial(s) => Some(s.arms),
            EnvironmentSpec::MatrixFile(_) => None,
        }
    }

    /// Stochastic environments are redrawn for every replication.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            EnvironmentSpec::Stochastic(_) | EnvironmentSpec::LowerBound(_)
        )
    }

    /// Arm means for stochastic environments, `None` otherwise.
    pub fn means(&self, horizon: usize) -> Option<Vec<f64>> {
        match self {
            EnvironmentSpec::Stochastic(s) => Some(s.means()),
            EnvironmentSpec::LowerBound(s) => Some(s.means(horizon)),
            _ => None,
        }
    }

    pub fn generate(&self, horizon: usize, seed: u64) -> Result<LossMatrix> {
        match self {
            EnvironmentSpec::Stochastic(s) => generate_stochastic(s, horizon, seed),
            EnvironmentSpec::LowerBound(s) => generate_lower_bound(s, horizon, seed),
            EnvironmentSpec::Adversarial(s) => generate_adversarial_with_period(
                s.pattern, s.arms, horizon, s.epsilon, s.period, seed,
            ),
            EnvironmentSpec::MatrixFile(s) => {
                let file = std::fs::File::open(&s.path)?;
                let m = LossMatrix::read_csv(file)?.truncated(horizon)?;
                validate_loss_matrix(&m, EffectiveRange::new(s.epsilon)?)?;
                Ok(m)
            }
        }
    }
}

pub(crate) fn gaps_of(means: &[f64]) -> Vec<f64> {
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    means.iter().map(|m| m - best).collect()
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(LabError::Spec("horizon must be positive".into()));
    }
    Ok(())
}

pub fn generate_stochastic(spec: &StochasticSpec, horizon: usize, seed: u64) -> Result<LossMatrix> {
    spec.validate()?;
    check_horizon(horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arms = spec.arms();
    let mut losses = Vec::with_capacity(horizon * arms);
    for _ in 0..horizon {
        for &q in &spec.biases {
            let x = if spec.continuous {
                let w = q.min(1.0 - q);
                q - w + 2.0 * w * rng.random::<f64>()
            } else if rng.random::<f64>() < q {
                1.0
            } else {
                0.0
            };
            losses.push((spec.base + spec.epsilon * x).clamp(0.0, 1.0));
        }
    }
    LossMatrix::from_flat(horizon, arms, losses)
}

pub fn generate_lower_bound(
    spec: &LowerBoundSpec,
    horizon: usize,
    seed: u64,
) -> Result<LossMatrix> {
    spec.validate()?;
    check_horizon(horizon)?;
    let delta = spec.delta_for(horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut losses = Vec::with_capacity(horizon * spec.arms);
    for _ in 0..horizon {
        for a in 0..spec.arms {
            let bias = if a == spec.special_arm {
                0.5 - delta
            } else {
                0.5
            };
            let hit = rng.random::<f64>() < bias;
            losses.push(if hit { spec.epsilon } else { 0.0 });
        }
    }
    LossMatrix::from_flat(horizon, spec.arms, losses)
}

pub fn generate_adversarial(
    pattern: AdversarialPattern,
    arms: usize,
    horizon: usize,
    epsilon: f64,
    seed: u64,
) -> Result<LossMatrix> {
    generate_adversarial_with_period(pattern, arms, horizon, epsilon, DEFAULT_PERIOD, seed)
}

pub fn generate_adversarial_with_period(
    pattern: AdversarialPattern,
    arms: usize,
    horizon: usize,
    epsilon: f64,
    period: usize,
    seed: u64,
) -> Result<LossMatrix> {
    EffectiveRange::new(epsilon).map_err(|e| LabError::Spec(e.to_string()))?;
    check_horizon(horizon)?;
    if arms < 2 {
        return Err(LabError::Spec("need at least 2 arms".into()));
    }
    if period == 0 {
        return Err(LabError::Spec("period must be positive".into()));
    }
    let mut losses = Vec::with_capacity(horizon * arms);
    match pattern {
        AdversarialPattern::ShiftingBestArm => {
            let block = horizon.div_ceil(arms);
            let (low, high) = (0.5 - epsilon / 2.0, 0.5 + epsilon / 2.0);
            for t in 0..horizon {
                let best = (t / block) % arms;
                losses.extend((0..arms).map(|a| if a == best { low } else { high }));
            }
        }
        AdversarialPattern::Sinusoidal => {
            use std::f64::consts::TAU;
            for t in 1..=horizon {
                let phase = TAU * t as f64 / period as f64;
                losses.extend(
                    (0..arms).map(|a| {
                        0.5 + epsilon / 2.0 * (phase + TAU * a as f64 / arms as f64).sin()
                    }),
                );
            }
        }
        AdversarialPattern::RandomWithinRange => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..horizon {
                let floor = (1.0 - epsilon) * rng.random::<f64>();
                losses.extend((0..arms).map(|_| floor + epsilon * rng.random::<f64>()));
            }
        }
    }
    LossMatrix::from_flat(horizon, arms, losses)
}
