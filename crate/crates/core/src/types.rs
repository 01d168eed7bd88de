//! Shared domain types: loss matrices, effective ranges, policy statistics
//! and per-round records.
//!
//! Arm indices are 0-based everywhere in the API. Anything printed for a
//! human (error messages, CSV headers) is 1-based.

use std::cell::Cell;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance for "sums to one" checks on probability vectors.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Absolute slack allowed when comparing a measured range to a declared one;
/// covers rounding in generators that place losses at `1/2 +- eps/2`.
pub const RANGE_TOLERANCE: f64 = 1e-12;

/// A `T x K` table of losses in `[0, 1]`, fixed before any policy runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    horizon: usize,
    arms: usize,
    losses: Vec<f64>,
}

impl LossMatrix {
    /// Builds a matrix from row-major data.
    pub fn from_flat(horizon: usize, arms: usize, losses: Vec<f64>) -> Result<Self> {
        if arms < 2 {
            return Err(LabError::Config(format!(
                "need at least 2 arms, got {arms}"
            )));
        }
        if horizon == 0 {
            return Err(LabError::Config("horizon must be positive".into()));
        }
        if losses.len() != horizon * arms {
            return Err(LabError::Config(format!(
                "expected {} entries for a {horizon}x{arms} matrix, got {}",
                horizon * arms,
                losses.len()
            )));
        }
        for (i, &value) in losses.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(LabError::Domain {
                    round: i / arms + 1,
                    arm: i % arms + 1,
                    value,
                });
            }
        }
        Ok(Self {
            horizon,
            arms,
            losses,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let arms = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != arms) {
            return Err(LabError::Config(format!(
                "row {} has {} entries, expected {arms}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::from_flat(rows.len(), arms, rows.concat())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Losses of round `t` (0-based).
    pub fn row(&self, t: usize) -> &[f64] {
        &self.losses[t * self.arms..(t + 1) * self.arms]
    }

    pub fn get(&self, t: usize, arm: usize) -> f64 {
        self.losses[t * self.arms + arm]
    }

    pub fn rows(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator {
        self.losses.chunks_exact(self.arms)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.losses
    }

    /// Keeps the first `horizon` rounds.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon > self.horizon {
            return Err(LabError::Config(format!(
                "matrix has {} rounds, {horizon} requested",
                self.horizon
            )));
        }
        Self::from_flat(
            horizon,
            self.arms,
            self.losses[..horizon * self.arms].to_vec(),
        )
    }

    /// Multiplies every entry by `factor` in `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_flat(
            self.horizon,
            self.arms,
            self.losses.iter().map(|l| l * factor).collect(),
        )
    }

    /// Largest within-round spread `max_t max_{a,a'} |l_t^a - l_t^a'|`.
    pub fn measured_range(&self) -> f64 {
        self.rows().map(row_spread).fold(0.0, f64::max)
    }

    /// Reads the CSV format: one row per round, `K` comma-separated decimals,
    /// optional `arm_1,...,arm_K` header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if i == 0 && is_header(&record) {
                continue;
            }
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        LabError::Parse(format!("line {}: '{field}' is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        if header {
            wtr.write_record((1..=self.arms).map(|a| format!("arm_{a}")))?;
        }
        for row in self.rows() {
            wtr.write_record(row.iter().map(|l| l.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn is_header(record: &csv::StringRecord) -> bool {
    record
        .iter()
        .enumerate()
        .all(|(a, field)| field == format!("arm_{}", a + 1))
}

pub(crate) fn row_spread(row: &[f64]) -> f64 {
    let (lo, hi) = row
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
    hi - lo
}

/// Declared bound on the within-round spread of losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EffectiveRange(f64);

impl EffectiveRange {
    pub fn new(epsilon: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&epsilon) {
            Ok(Self(epsilon))
        } else {
            Err(LabError::Config(format!(
                "effective range must lie in [0, 1], got {epsilon}"
            )))
        }
    }

    pub fn unrestricted() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for EffectiveRange {
    type Error = LabError;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EffectiveRange> for f64 {
    fn from(r: EffectiveRange) -> f64 {
        r.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub horizon: usize,
    pub arms: usize,
    pub measured_range: f64,
    pub declared_range: f64,
}

/// Measures the effective range of `m` and checks it against `declared`.
pub fn validate_loss_matrix(m: &LossMatrix, declared: EffectiveRange) -> Result<ValidationReport> {
    for (i, &value) in m.as_flat().iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(LabError::Domain {
                round: i / m.arms() + 1,
                arm: i % m.arms() + 1,
                value,
            });
        }
    }
    let mut measured = 0.0f64;
    for (t, row) in m.rows().enumerate() {
        let spread = row_spread(row);
        if spread > declared.value() + RANGE_TOLERANCE {
            return Err(LabError::Range {
                round: t + 1,
                measured: spread,
                declared: declared.value(),
            });
        }
        measured = measured.max(spread);
    }
    Ok(ValidationReport {
        horizon: m.horizon(),
        arms: m.arms(),
        measured_range: measured,
        declared_range: declared.value(),
    })
}

/// One round of losses as seen by a policy. Policies may only look at the
/// arms they play or observe.
pub trait LossRow {
    fn arms(&self) -> usize;
    fn observe(&self, arm: usize) -> f64;
}

impl LossRow for [f64] {
    fn arms(&self) -> usize {
        self.len()
    }

    fn observe(&self, arm: usize) -> f64 {
        self[arm]
    }
}

impl LossRow for Vec<f64> {
    fn arms(&self) -> usize {
        self.len()
    }

    fn observe(&self, arm: usize) -> f64 {
        self[arm]
    }
}

/// Wraps a row and counts how many losses were read from it.
#[derive(Debug)]
pub struct CountingRow<'a> {
    row: &'a [f64],
    reads: Cell<usize>,
}

impl<'a> CountingRow<'a> {
    pub fn new(row: &'a [f64]) -> Self {
        Self {
            row,
            reads: Cell::new(0),
        }
    }

    pub fn reads(&self) -> usize {
        self.reads.get()
    }
}

impl LossRow for CountingRow<'_> {
    fn arms(&self) -> usize {
        self.row.len()
    }

    fn observe(&self, arm: usize) -> f64 {
        self.reads.set(self.reads.get() + 1);
        self.row[arm]
    }
}

/// Cumulative statistics of the difference-adjusted policy.
///
/// `round` is the index of the next round to be played, starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub(crate) diffs: Vec<f64>,
    pub(crate) squares: Vec<f64>,
    pub(crate) realized_squares: f64,
    pub(crate) max_square: f64,
    pub(crate) round: u64,
}

impl PolicyState {
    pub fn new(arms: usize) -> Result<Self> {
        if arms < 2 {
            return Err(LabError::Config(format!(
                "need at least 2 arms, got {arms}"
            )));
        }
        Ok(Self {
            diffs: vec![0.0; arms],
            squares: vec![0.0; arms],
            realized_squares: 0.0,
            max_square: 0.0,
            round: 1,
        })
    }

    pub fn arms(&self) -> usize {
        self.diffs.len()
    }

    /// Cumulative difference estimates `D(a)`.
    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    /// Cumulative squared estimates `S(a)`.
    pub fn squares(&self) -> &[f64] {
        &self.squares
    }

    /// Cumulative squared realized differences between the two observed arms.
    pub fn realized_squares(&self) -> f64 {
        self.realized_squares
    }

    pub fn max_square(&self) -> f64 {
        self.max_square
    }

    pub fn round(&self) -> u64 {
        self.round
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// 1-based round index.
    pub t: u64,
    pub primary: usize,
    pub secondary: usize,
    pub loss_primary: f64,
    pub loss_secondary: f64,
    /// Difference estimates, zero everywhere except at `secondary`.
    pub estimates: Vec<f64>,
    pub eta: f64,
    pub probabilities: Vec<f64>,
}

impl RoundOutcome {
    pub fn arms(&self) -> usize {
        self.probabilities.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn range(e: f64) -> EffectiveRange {
        EffectiveRange::new(e).unwrap()
    }

    #[test]
    fn identical_columns_have_zero_range() {
        let m = LossMatrix::from_rows(&[vec![0.1, 0.1], vec![0.5, 0.5]]).unwrap();
        let report = validate_loss_matrix(&m, range(0.0)).unwrap();
        assert_eq!(report.measured_range, 0.0);
    }

    #[test]
    fn range_violation_reports_round() {
        let m = LossMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        match validate_loss_matrix(&m, range(0.5)) {
            Err(LabError::Range {
                round, measured, ..
            }) => {
                assert_eq!(round, 1);
                assert_eq!(measured, 1.0);
            }
            other => panic!("expected range violation, got {other:?}"),
        }
    }

    #[test]
    fn measured_range_matches_pairwise_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(0.4..=0.6)).collect())
            .collect();
        let mut oracle = 0.0f64;
        for row in &rows {
            for a in row {
                for b in row {
                    oracle = oracle.max((a - b).abs());
                }
            }
        }
        let m = LossMatrix::from_rows(&rows).unwrap();
        let report = validate_loss_matrix(&m, range(0.2)).unwrap();
        assert_eq!(report.measured_range, oracle);
    }

    #[test]
    fn out_of_domain_entry_rejected() {
        let err = LossMatrix::from_rows(&[vec![0.2, 1.5]]).unwrap_err();
        assert!(matches!(
            err,
            LabError::Domain {
                round: 1,
                arm: 2,
                ..
            }
        ));
        assert!(LossMatrix::from_rows(&[vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(LossMatrix::from_rows(&[vec![0.2]]).is_err());
        assert!(LossMatrix::from_rows(&[]).is_err());
        assert!(LossMatrix::from_rows(&[vec![0.2, 0.1], vec![0.3]]).is_err());
        assert!(EffectiveRange::new(1.2).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let with = "arm_1,arm_2,arm_3\n0.1,0.2,0.3\n0.5,0.5,0.25\n";
        let without = "0.1,0.2,0.3\n0.5,0.5,0.25\n";
        let a = LossMatrix::read_csv(with.as_bytes()).unwrap();
        let b = LossMatrix::read_csv(without.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get(1, 2), 0.25);

        let mut out = Vec::new();
        a.write_csv(&mut out, true).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), with);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(matches!(
            LossMatrix::read_csv("0.1,x\n".as_bytes()),
            Err(LabError::Parse(_))
        ));
    }

    #[test]
    fn counting_row_counts() {
        let row = [0.1, 0.2, 0.3];
        let counted = CountingRow::new(&row);
        assert_eq!(counted.observe(2), 0.3);
        assert_eq!(counted.observe(0), 0.1);
        assert_eq!(counted.reads(), 2);
    }
}
