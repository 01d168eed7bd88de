//! Numerical checks of the inequalities and identities behind the regret
//! analysis, evaluated on concrete run logs and sequences.
//!
//! Nothing here feeds back into the policy. Each check recomputes its terms
//! from logged observations so it can serve as an oracle for the policy
//! implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::environments::{
    generate_adversarial, generate_stochastic, AdversarialPattern, StochasticSpec,
};
use crate::error::{LabError, Result};
use crate::policy::{difference_estimates, LearningRateScheme, SodaPolicy};
use crate::sampling::log_sum_exp;
use crate::types::{LossMatrix, RoundOutcome};

/// Margin below which the trace inequality counts as violated; absorbs
/// floating-point accumulation over `T` terms.
pub const LEMMA1_TOLERANCE: f64 = 1e-9;

/// Relative slack for the closed-form sequence inequalities.
pub const SEQUENCE_TOLERANCE: f64 = 1e-12;

/// Tolerance for the exhaustive estimator identities.
pub const ESTIMATOR_TOLERANCE: f64 = 1e-12;

/// Target size of the analytic tail when choosing a series truncation.
pub const SERIES_TAIL_TARGET: f64 = 1e-9;

const MAX_SERIES_TERMS: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialInput<'a> {
    pub diffs: &'a [f64],
    pub squares: &'a [f64],
    pub eta: f64,
}

/// `(1/eta) ln((1/K) sum_a exp(-eta D(a) - eta^2 S(a)))`, in log space.
pub fn potential(input: &PotentialInput<'_>) -> Result<f64> {
    let PotentialInput {
        diffs,
        squares,
        eta,
    } = *input;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(LabError::Numerical(format!(
            "potential needs eta > 0, got {eta}"
        )));
    }
    if diffs.len() != squares.len() || diffs.is_empty() {
        return Err(LabError::Precondition(
            "D and S must be non-empty and equal length".into(),
        ));
    }
    if diffs.iter().chain(squares).any(|x| !x.is_finite()) {
        return Err(LabError::Numerical(
            "non-finite statistics in potential".into(),
        ));
    }
    if squares.iter().any(|&s| s < 0.0) {
        return Err(LabError::Precondition("S must be non-negative".into()));
    }
    let logits: Vec<f64> = diffs
        .iter()
        .zip(squares)
        .map(|(d, s)| -eta * d - eta * eta * s)
        .collect();
    Ok((log_sum_exp(&logits) - (diffs.len() as f64).ln()) / eta)
}

/// Both sides of the per-arm trace inequality at the final round `T`:
///
/// `-sum_t v_t(a) <= ln K / eta_T + eta_T sum_t v_t(a)^2 - sum_t E_{p_t}[v_t]
///                   + sum_{t<T} (Phi_t(eta_{t+1}) - Phi_t(eta_t))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub arm: usize,
    pub lhs: f64,
    pub log_term: f64,
    pub variance_term: f64,
    pub mean_term: f64,
    pub potential_term: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Lemma1Report {
    pub fn holds(&self) -> bool {
        self.margin >= -LEMMA1_TOLERANCE
    }
}

fn check_log(log: &[RoundOutcome]) -> Result<usize> {
    let first = log
        .first()
        .ok_or_else(|| LabError::IncompleteLog("empty run log".into()))?;
    let arms = first.arms();
    for (i, o) in log.iter().enumerate() {
        if o.t != i as u64 + 1 {
            return Err(LabError::IncompleteLog(format!(
                "entry {} records round {}, expected {}",
                i + 1,
                o.t,
                i + 1
            )));
        }
        if o.estimates.len() != arms || o.probabilities.len() != arms {
            return Err(LabError::IncompleteLog(format!(
                "round {} has inconsistent vector lengths",
                o.t
            )));
        }
        if o.eta.is_nan() || o.eta <= 0.0 {
            return Err(LabError::IncompleteLog(format!(
                "round {} has no positive learning rate",
                o.t
            )));
        }
    }
    Ok(arms)
}

/// Evaluates every term of the trace inequality for arm `arm` from the log.
pub fn check_lemma1(log: &[RoundOutcome], arm: usize) -> Result<Lemma1Report> {
    let arms = check_log(log)?;
    if arm >= arms {
        return Err(LabError::Precondition(format!(
            "arm {} out of range",
            arm + 1
        )));
    }
    let horizon = log.len();
    let mut diffs = vec![0.0; arms];
    let mut squares = vec![0.0; arms];
    let mut own_squares = 0.0;
    let mut mean_term = 0.0;
    let mut potential_term = 0.0;
    for (i, o) in log.iter().enumerate() {
        mean_term += o
            .probabilities
            .iter()
            .zip(&o.estimates)
            .map(|(p, v)| p * v)
            .sum::<f64>();
        for ((d, s), v) in diffs.iter_mut().zip(squares.iter_mut()).zip(&o.estimates) {
            *d += v;
            *s += v * v;
        }
        own_squares += o.estimates[arm] * o.estimates[arm];
        if let Some(next) = log.get(i + 1) {
            if next.eta != o.eta {
                let at = |eta| {
                    potential(&PotentialInput {
                        diffs: &diffs,
                        squares: &squares,
                        eta,
                    })
                };
                let step = at(next.eta)? - at(o.eta)?;
                log::trace!("round {}: potential step {step}", o.t);
                potential_term += step;
            }
        }
    }
    let eta_final = log[horizon - 1].eta;
    let lhs = -diffs[arm];
    let log_term = (arms as f64).ln() / eta_final;
    let variance_term = eta_final * own_squares;
    let rhs = log_term + variance_term - mean_term + potential_term;
    Ok(Lemma1Report {
        arm,
        lhs,
        log_term,
        variance_term,
        mean_term,
        potential_term,
        rhs,
        margin: rhs - lhs,
    })
}

/// [`check_lemma1`] for every arm.
pub fn check_lemma1_all_arms(log: &[RoundOutcome]) -> Result<Vec<Lemma1Report>> {
    let arms = check_log(log)?;
    (0..arms).map(|a| check_lemma1(log, a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            holds: slack >= -SEQUENCE_TOLERANCE * rhs.abs().max(1.0),
        }
    }
}

fn check_sequence(seq: &[f64], max_step: f64, name: &str) -> Result<()> {
    if seq.len() < 2 {
        return Err(LabError::Precondition(format!(
            "{name} needs at least the initial value and one round"
        )));
    }
    if seq[0] != 0.0 {
        return Err(LabError::Precondition(format!("{name} must start at 0")));
    }
    for (t, w) in seq.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !step.is_finite() || step < 0.0 {
            return Err(LabError::Precondition(format!(
                "{name} decreases at round {}",
                t + 1
            )));
        }
        if step > max_step * (1.0 + SEQUENCE_TOLERANCE) {
            return Err(LabError::Precondition(format!(
                "{name} step {step} at round {} exceeds {max_step}",
                t + 1
            )));
        }
    }
    Ok(())
}

fn telescoped_sum(seq: &[f64], c: f64) -> f64 {
    seq.windows(2)
        .map(|w| w[1] * (1.0 / (w[0] + c).sqrt() - 1.0 / (w[1] + c).sqrt()))
        .sum()
}

/// For `sigma_0 = 0 <= sigma_1 <= ... <= sigma_T` with steps at most `c`:
/// `sum_t sigma_t (1/sqrt(sigma_{t-1}+c) - 1/sqrt(sigma_t+c)) <= 2 sqrt(sigma_{T-1}+c)`.
///
/// `sigma` includes the leading zero.
pub fn check_sigma_lemma(sigma: &[f64], c: f64) -> Result<InequalityCheck> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(LabError::Precondition(format!(
            "step bound c must be positive, got {c}"
        )));
    }
    check_sequence(sigma, c, "sigma")?;
    let horizon = sigma.len() - 1;
    let lhs = telescoped_sum(sigma, c);
    let rhs = 2.0 * (sigma[horizon - 1] + c).sqrt();
    Ok(InequalityCheck::new(lhs, rhs))
}

/// Same telescoped sum with `c = 1`, steps at most 1 and bound
/// `1 + 2 sqrt(S_hat_{T-1} + 1)`. `shat` includes the leading zero.
pub fn check_shat_lemma(shat: &[f64]) -> Result<InequalityCheck> {
    check_sequence(shat, 1.0, "S_hat")?;
    let horizon = shat.len() - 1;
    let lhs = telescoped_sum(shat, 1.0);
    let rhs = 1.0 + 2.0 * (shat[horizon - 1] + 1.0).sqrt();
    Ok(InequalityCheck::new(lhs, rhs))
}

/// Cumulative squared realized differences `S_hat_0 = 0, S_hat_1, ...`
/// rebuilt from a run log.
pub fn realized_square_sequence(log: &[RoundOutcome]) -> Vec<f64> {
    let mut seq = Vec::with_capacity(log.len() + 1);
    let mut acc = 0.0;
    seq.push(acc);
    for o in log {
        let gap = o.loss_secondary - o.loss_primary;
        acc += gap * gap;
        seq.push(acc);
    }
    seq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub c: f64,
    pub terms: usize,
    /// `sum_{t<=N} exp(-c sqrt t)` against `2/c^2`.
    pub root_sum: f64,
    pub root_bound: f64,
    pub root_tail: f64,
    /// `sum_{t<=N} exp(-c t)` against `1/c`.
    pub geometric_sum: f64,
    pub geometric_bound: f64,
    pub geometric_tail: f64,
    /// Closed form `1/(e^c - 1)` of the full geometric series.
    pub geometric_limit: f64,
    pub holds: bool,
}

/// Analytic bound on `sum_{t>N} exp(-c sqrt t)`.
pub fn root_series_tail(c: f64, n: usize) -> f64 {
    let r = (n as f64).sqrt();
    (-c * r).exp() * (2.0 * r / c + 2.0 / (c * c))
}

/// Exact `sum_{t>N} exp(-c t)`.
pub fn geometric_series_tail(c: f64, n: usize) -> f64 {
    (-c * (n as f64 + 1.0)).exp() / (-(-c).exp_m1())
}

/// Smallest `N` whose analytic tails are both below [`SERIES_TAIL_TARGET`],
/// capped at 10^8 terms.
pub fn default_series_terms(c: f64) -> usize {
    let below = |n: usize| {
        root_series_tail(c, n) < SERIES_TAIL_TARGET
            && geometric_series_tail(c, n) < SERIES_TAIL_TARGET
    };
    let mut hi = 1usize;
    while !below(hi) {
        if hi >= MAX_SERIES_TERMS {
            return MAX_SERIES_TERMS;
        }
        hi = (hi * 2).min(MAX_SERIES_TERMS);
    }
    // The root tail bound is not monotone for tiny N; search upward from the
    // last failing power of two.
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Partial sums of `exp(-c sqrt t)` and `exp(-c t)` against `2/c^2` and `1/c`.
pub fn check_series_lemma(c: f64, terms: Option<usize>) -> Result<SeriesCheck> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(LabError::Precondition(format!(
            "series constant must be positive, got {c}"
        )));
    }
    let n = terms.unwrap_or_else(|| default_series_terms(c));
    if n == 0 {
        return Err(LabError::Precondition(
            "truncation must be at least 1".into(),
        ));
    }
    // Smallest terms first.
    let root_sum: f64 = (1..=n).rev().map(|t| (-c * (t as f64).sqrt()).exp()).sum();
    let geometric_sum: f64 = (1..=n).rev().map(|t| (-c * t as f64).exp()).sum();
    let root_bound = 2.0 / (c * c);
    let geometric_bound = 1.0 / c;
    let geometric_limit = 1.0 / c.exp_m1();
    Ok(SeriesCheck {
        c,
        terms: n,
        root_sum,
        root_bound,
        root_tail: root_series_tail(c, n),
        geometric_sum,
        geometric_bound,
        geometric_tail: geometric_series_tail(c, n),
        geometric_limit,
        holds: root_sum <= root_bound
            && geometric_sum <= geometric_bound
            && geometric_limit <= geometric_bound,
    })
}

/// Exhaustive average of the difference estimates over every secondary arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorCheck {
    pub mean: Vec<f64>,
    pub second_moment: f64,
    /// `l(a) - l(A)` for every arm.
    pub target_mean: Vec<f64>,
    /// `(K-1) sum_a (l(a) - l(A))^2`.
    pub target_second_moment: f64,
    pub max_error: f64,
}

impl EstimatorCheck {
    pub fn holds(&self) -> bool {
        self.max_error <= ESTIMATOR_TOLERANCE
    }
}

pub fn estimator_oracle(arms: usize, primary: usize, row: &[f64]) -> Result<EstimatorCheck> {
    if arms < 2 || row.len() != arms || primary >= arms {
        return Err(LabError::Precondition(format!(
            "need K >= 2, a row of K losses and a primary arm in range (K={arms}, row={})",
            row.len()
        )));
    }
    let weight = 1.0 / (arms as f64 - 1.0);
    let mut mean = vec![0.0; arms];
    let mut second_moment = 0.0;
    for secondary in (0..arms).filter(|&b| b != primary) {
        let v = difference_estimates(arms, primary, secondary, row[primary], row[secondary])?;
        for (m, x) in mean.iter_mut().zip(&v) {
            *m += weight * x;
        }
        second_moment += weight * v.iter().map(|x| x * x).sum::<f64>();
    }
    let target_mean: Vec<f64> = row.iter().map(|l| l - row[primary]).collect();
    let target_second_moment = (arms as f64 - 1.0) * target_mean.iter().map(|d| d * d).sum::<f64>();
    let max_error = mean
        .iter()
        .zip(&target_mean)
        .map(|(m, t)| (m - t).abs())
        .fold((second_moment - target_second_moment).abs(), f64::max);
    Ok(EstimatorCheck {
        mean,
        second_moment,
        target_mean,
        target_second_moment,
        max_error,
    })
}

/// Plays a short run on a random environment whose range is drawn at random.
/// Used by the lemma suites.
pub fn random_short_run(
    rng: &mut ChaCha8Rng,
    scheme: LearningRateScheme,
    max_arms: usize,
    max_horizon: usize,
) -> Result<Vec<RoundOutcome>> {
    let arms = rng.random_range(2..=max_arms);
    let horizon = rng.random_range(1..=max_horizon);
    let epsilon = rng.random_range(0.0..=1.0);
    let seed = rng.random::<u64>();
    let matrix: LossMatrix = match rng.random_range(0..3) {
        0 => {
            let base = rng.random_range(0.0..=1.0 - epsilon);
            let biases = (0..arms).map(|_| rng.random::<f64>()).collect();
            generate_stochastic(&StochasticSpec::new(epsilon, base, biases)?, horizon, seed)?
        }
        1 => generate_adversarial(
            AdversarialPattern::RandomWithinRange,
            arms,
            horizon,
            epsilon,
            seed,
        )?,
        _ => {
            let pattern = if rng.random::<bool>() {
                AdversarialPattern::Sinusoidal
            } else {
                AdversarialPattern::ShiftingBestArm
            };
            generate_adversarial(pattern, arms, horizon, epsilon, seed)?
        }
    };
    let mut policy = SodaPolicy::new(arms, scheme)?;
    matrix
        .rows()
        .map(|row| policy.play_round(row, rng))
        .collect()
}

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifySuite {
    All,
    Lemmas,
    Estimators,
}

/// Sizes of the randomized suites.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSizes {
    pub estimator_cases: usize,
    pub lemma1_runs: usize,
    pub sequences: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            estimator_cases: 1000,
            lemma1_runs: 500,
            sequences: 1000,
        }
    }
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub cases: usize,
    pub passed: bool,
    /// Smallest slack observed (negative means violated).
    pub worst_slack: f64,
}

fn line(name: &str, slacks: impl IntoIterator<Item = (bool, f64)>) -> CheckLine {
    let mut cases = 0;
    let mut passed = true;
    let mut worst = f64::INFINITY;
    for (ok, slack) in slacks {
        cases += 1;
        passed &= ok;
        worst = worst.min(slack);
    }
    CheckLine {
        name: name.to_string(),
        cases,
        passed,
        worst_slack: worst,
    }
}

/// Random `(K, row, A)` triples run through [`estimator_oracle`].
pub fn estimator_suite(rng: &mut ChaCha8Rng, cases: usize) -> Result<CheckLine> {
    let mut results = Vec::with_capacity(cases);
    for _ in 0..cases {
        let arms = rng.random_range(2..=10);
        let row: Vec<f64> = (0..arms).map(|_| rng.random::<f64>()).collect();
        let primary = rng.random_range(0..arms);
        let check = estimator_oracle(arms, primary, &row)?;
        results.push((check.holds(), ESTIMATOR_TOLERANCE - check.max_error));
    }
    Ok(line("estimator identities", results))
}

/// Random short runs under both schemes; returns the table line and the
/// harvested `S_hat` sequences.
pub fn lemma1_suite(rng: &mut ChaCha8Rng, runs: usize) -> Result<(CheckLine, Vec<Vec<f64>>)> {
    let mut results = Vec::new();
    let mut harvested = Vec::with_capacity(runs);
    for i in 0..runs {
        let scheme = if i % 2 == 0 {
            LearningRateScheme::Anytime
        } else {
            LearningRateScheme::Adaptive
        };
        let log = random_short_run(rng, scheme, 6, 200)?;
        for report in check_lemma1_all_arms(&log)? {
            results.push((report.holds(), report.margin));
        }
        harvested.push(realized_square_sequence(&log));
    }
    Ok((line("trace inequality (all arms)", results), harvested))
}

/// Random non-decreasing sequence starting at zero with steps in `[0, max_step]`.
pub fn random_bounded_sequence(rng: &mut ChaCha8Rng, len: usize, max_step: f64) -> Vec<f64> {
    let mut seq = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    seq.push(acc);
    for _ in 0..len {
        // Mix full steps, zero steps and fractional steps.
        let step = match rng.random_range(0..4) {
            0 => max_step,
            1 => 0.0,
            _ => rng.random_range(0.0..=max_step),
        };
        acc += step;
        seq.push(acc);
    }
    seq
}

pub fn sigma_suite(rng: &mut ChaCha8Rng, sequences: usize) -> Result<CheckLine> {
    let mut results = Vec::with_capacity(sequences);
    for _ in 0..sequences {
        let c = rng.random_range(0.01..=25.0);
        let len = rng.random_range(1..=300);
        let seq = random_bounded_sequence(rng, len, c);
        let check = check_sigma_lemma(&seq, c)?;
        results.push((check.holds, check.slack));
    }
    Ok(line("bounded-increment sequence lemma", results))
}

pub fn shat_suite(
    rng: &mut ChaCha8Rng,
    sequences: usize,
    harvested: &[Vec<f64>],
) -> Result<CheckLine> {
    let mut results = Vec::with_capacity(sequences + harvested.len());
    for _ in 0..sequences {
        let eps: f64 = rng.random_range(0.0..=1.0);
        let len = rng.random_range(1..=300);
        let seq = random_bounded_sequence(rng, len, eps * eps);
        let check = check_shat_lemma(&seq)?;
        results.push((check.holds, check.slack));
    }
    for seq in harvested {
        let check = check_shat_lemma(seq)?;
        results.push((check.holds, check.slack));
    }
    Ok(line("realized-square sequence lemma", results))
}

pub const SERIES_CONSTANTS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

pub fn series_suite() -> Result<CheckLine> {
    let mut results = Vec::new();
    for c in SERIES_CONSTANTS {
        let check = check_series_lemma(c, None)?;
        let slack =
            (check.root_bound - check.root_sum).min(check.geometric_bound - check.geometric_sum);
        results.push((check.holds, slack));
    }
    Ok(line("exponential series bounds", results))
}

/// Runs the requested suite with a fixed seed.
pub fn run_suite(suite: VerifySuite, sizes: SuiteSizes, seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    if matches!(suite, VerifySuite::All | VerifySuite::Estimators) {
        lines.push(estimator_suite(&mut rng, sizes.estimator_cases)?);
    }
    if matches!(suite, VerifySuite::All | VerifySuite::Lemmas) {
        let (trace_line, harvested) = lemma1_suite(&mut rng, sizes.lemma1_runs)?;
        lines.push(trace_line);
        lines.push(sigma_suite(&mut rng, sizes.sequences)?);
        lines.push(shat_suite(&mut rng, sizes.sequences, &harvested)?);
        lines.push(series_suite()?);
    }
    Ok(lines)
}
