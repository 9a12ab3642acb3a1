//! Summability matrices, A-transforms, and A-density diagnostics.
//!
//! An infinite non-negative matrix `A = (a_jn)` turns a sequence `x` into
//! the transformed sequence `(Ax)_j = sum_n a_jn x_n`. When `A` is regular
//! (maps every convergent sequence to a sequence with the same limit) the
//! weighted densities `sum_{n in S} a_jn` of index sets `S` give a notion
//! of convergence "outside a set of A-density zero": `x` converges
//! A-statistically to `L` when for every `epsilon > 0` the density of
//! `{n : |x_n - L| >= epsilon}` tends to zero along `j`.
//!
//! Rows and columns are indexed from 1 to match the usual notation.
//! Everything here works with explicit truncation bounds: a row must
//! either declare finite support or a computable tail bound before it can
//! be summed, so a silent truncation can never masquerade as a converged
//! transform.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::accum::CompensatedSum;

/// Absolute slack added on top of the caller's trend tolerance when the
/// final tail is compared against it. Tails are compensated sums of exact
/// binary rationals and routinely land exactly on a round tolerance such
/// as 0.01; the slack keeps a half-ulp of rounding from flipping the
/// verdict.
const TREND_ROUNDING_GUARD: f64 = 1e-12;

/// Errors from transforms and density computations.
#[derive(Debug, Error)]
pub enum SummabilityError {
    /// The row neither declares finite support nor provides a tail bound,
    /// so any truncated sum would be unaccountable.
    #[error("row j={j} declares no support bound and no tail estimate; refusing to truncate")]
    UnboundedTruncation { j: usize },

    /// A probed sequence value was NaN or infinite.
    #[error("sequence value x_{n} = {value} is not finite")]
    NonFiniteValue { n: usize, value: f64 },

    /// Square-perturbation sequences must stay non-negative.
    #[error("spike value {value} is negative; the perturbed sequence must be non-negative")]
    NegativeSpike { value: f64 },

    /// Row schedules must be non-empty and strictly increasing.
    #[error("j schedule must be non-empty and strictly increasing")]
    InvalidSchedule,

    /// Density thresholds must be positive.
    #[error("epsilon list must be non-empty with strictly positive entries")]
    InvalidEpsilons,
}

/// What is known about the support of one matrix row.
#[derive(Clone)]
pub enum RowSupport {
    /// All entries beyond the given column index are zero.
    FiniteBound(usize),
    /// Entries may extend indefinitely, but `bound(j, n0)` dominates the
    /// tail `sum_{n > n0} a_jn`.
    TailEstimate(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
    /// Nothing is known; summing such a row is an error.
    Undeclared,
}

impl fmt::Debug for RowSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowSupport::FiniteBound(n) => write!(f, "FiniteBound({n})"),
            RowSupport::TailEstimate(_) => write!(f, "TailEstimate(..)"),
            RowSupport::Undeclared => write!(f, "Undeclared"),
        }
    }
}

/// A non-negative summability matrix given by an entry rule plus a
/// declaration of row support.
#[derive(Clone)]
pub struct SummabilityMatrix {
    name: String,
    entry: Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>,
    support: Arc<dyn Fn(usize) -> RowSupport + Send + Sync>,
}

impl fmt::Debug for SummabilityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SummabilityMatrix")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl SummabilityMatrix {
    /// Builds a matrix from an entry rule and a row-support declaration.
    /// Entries must be non-negative for every `(j, n)` the rule is probed
    /// at; this is checked with a debug assertion at each access.
    pub fn from_rule<E, S>(name: impl Into<String>, entry: E, support: S) -> Self
    where
        E: Fn(usize, usize) -> f64 + Send + Sync + 'static,
        S: Fn(usize) -> RowSupport + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            entry: Arc::new(entry),
            support: Arc::new(support),
        }
    }

    /// Cesaro matrix C1: row j averages the first j terms.
    pub fn cesaro_c1() -> Self {
        Self::from_rule(
            "c1",
            |j, n| {
                if n >= 1 && n <= j {
                    1.0 / j as f64
                } else {
                    0.0
                }
            },
            RowSupport::FiniteBound,
        )
    }

    /// Identity matrix: the A-transform is the sequence itself, so
    /// A-statistical convergence collapses to ordinary convergence.
    pub fn identity() -> Self {
        Self::from_rule(
            "identity",
            |j, n| if j == n { 1.0 } else { 0.0 },
            RowSupport::FiniteBound,
        )
    }

    /// A deliberately non-regular specimen: C1 with every entry doubled.
    /// Rows sum to 2, so the row-sum diagnostic must flag it.
    pub fn doubled_c1() -> Self {
        Self::from_rule(
            "doubled-c1",
            |j, n| {
                if n >= 1 && n <= j {
                    2.0 / j as f64
                } else {
                    0.0
                }
            },
            RowSupport::FiniteBound,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Entry `a_jn` (both indices 1-based).
    pub fn entry(&self, j: usize, n: usize) -> f64 {
        debug_assert!(j >= 1 && n >= 1, "matrix indices are 1-based");
        let a = (self.entry)(j, n);
        debug_assert!(a >= 0.0, "matrix entry a_({j},{n}) = {a} is negative");
        a
    }

    pub fn row_support(&self, j: usize) -> RowSupport {
        (self.support)(j)
    }

    /// How far row `j` must be probed: the declared support capped at
    /// `depth` for finite rows, `depth` itself when a tail bound exists,
    /// and an error when nothing is declared.
    fn probe_extent(&self, j: usize, depth: usize) -> Result<usize, SummabilityError> {
        match self.row_support(j) {
            RowSupport::FiniteBound(n_j) => Ok(n_j.min(depth)),
            RowSupport::TailEstimate(_) => Ok(depth),
            RowSupport::Undeclared => Err(SummabilityError::UnboundedTruncation { j }),
        }
    }

    /// Upper bound on the discarded mass `sum_{n > extent} a_jn` for the
    /// extent that `probe_extent` selects, when one is available.
    pub fn truncation_bound(&self, j: usize, depth: usize) -> Option<f64> {
        match self.row_support(j) {
            RowSupport::FiniteBound(n_j) => {
                if n_j <= depth {
                    Some(0.0)
                } else {
                    // Finite but deeper than the probe: sum the skipped
                    // entries explicitly.
                    let mut acc = CompensatedSum::new();
                    for n in (depth + 1)..=n_j {
                        acc.add(self.entry(j, n));
                    }
                    Some(acc.value())
                }
            }
            RowSupport::TailEstimate(bound) => Some(bound(j, depth)),
            RowSupport::Undeclared => None,
        }
    }

    /// The transformed value `(Ax)_j = sum_n a_jn x_n`, summed over the
    /// probed extent of row `j`.
    ///
    /// Zero entries are skipped without probing `x` there (the usual
    /// `0 * undefined = 0` convention), so identity rows only ever look at
    /// `x_j`. Probed values must be finite.
    pub fn a_transform(
        &self,
        x: &SequenceSpec,
        j: usize,
        depth: usize,
    ) -> Result<f64, SummabilityError> {
        let extent = self.probe_extent(j, depth)?;
        let mut acc = CompensatedSum::new();
        for n in 1..=extent {
            let a = self.entry(j, n);
            if a == 0.0 {
                continue;
            }
            let value = x.value(n);
            if !value.is_finite() {
                return Err(SummabilityError::NonFiniteValue { n, value });
            }
            acc.add(a * value);
        }
        Ok(acc.value())
    }

    /// The A-density tail at row `j`: the row mass sitting on indices
    /// where `|x_n - limit| >= epsilon`.
    pub fn density_tail(
        &self,
        x: &SequenceSpec,
        limit: f64,
        epsilon: f64,
        j: usize,
        depth: usize,
    ) -> Result<f64, SummabilityError> {
        if !(epsilon > 0.0) {
            return Err(SummabilityError::InvalidEpsilons);
        }
        let extent = self.probe_extent(j, depth)?;
        let mut acc = CompensatedSum::new();
        for n in 1..=extent {
            let a = self.entry(j, n);
            if a == 0.0 {
                continue;
            }
            let value = x.value(n);
            if !value.is_finite() {
                return Err(SummabilityError::NonFiniteValue { n, value });
            }
            if (value - limit).abs() >= epsilon {
                acc.add(a);
            }
        }
        Ok(acc.value())
    }

    /// Row mass carried by an explicit index set: `sum_{n in set} a_jn`.
    pub fn set_mass(&self, j: usize, set: &[usize]) -> f64 {
        let mut acc = CompensatedSum::new();
        for &n in set {
            acc.add(self.entry(j, n));
        }
        acc.value()
    }

    /// Checks the three Silverman-Toeplitz-style regularity diagnostics
    /// along a row schedule: row sums tending to 1, individual columns
    /// tending to 0, and (the condition specific to non-negative matrices)
    /// the largest row entry tending to 0. The last is exactly what makes
    /// A-density nontrivial: the identity matrix passes the first two and
    /// fails it.
    pub fn check_regularity(
        &self,
        j_schedule: &[usize],
        depth: usize,
        tol: f64,
    ) -> Result<RegularityReport, SummabilityError> {
        validate_schedule(j_schedule)?;
        let mut rows = Vec::with_capacity(j_schedule.len());
        for &j in j_schedule {
            let extent = self.probe_extent(j, depth)?;
            let mut acc = CompensatedSum::new();
            let mut max_entry = 0.0f64;
            for n in 1..=extent {
                let a = self.entry(j, n);
                acc.add(a);
                if a > max_entry {
                    max_entry = a;
                }
            }
            let row_sum = acc.value();
            rows.push(RowDiagnostics {
                j,
                row_sum,
                row_sum_deviation: (row_sum - 1.0).abs(),
                max_entry,
                truncation_bound: self.truncation_bound(j, depth),
            });
        }

        let sample_columns = [1usize, 2, 5, 10];
        let columns: Vec<ColumnDecay> = sample_columns
            .iter()
            .map(|&n0| ColumnDecay {
                column: n0,
                entries: j_schedule.iter().map(|&j| (j, self.entry(j, n0))).collect(),
            })
            .collect();

        let last = rows.last().expect("schedule validated non-empty");
        let row_sums_ok = last.row_sum_deviation <= tol;
        let columns_ok = columns
            .iter()
            .all(|c| c.entries.last().is_none_or(|&(_, a)| a <= tol));
        let max_entries: Vec<f64> = rows.iter().map(|r| r.max_entry).collect();
        let max_entry_ok = max_entries.windows(2).all(|w| w[1] <= w[0] + tol)
            && *max_entries.last().unwrap() <= tol;

        Ok(RegularityReport {
            matrix: self.name.clone(),
            tol,
            rows,
            columns,
            row_sums_ok,
            columns_ok,
            max_entry_ok,
        })
    }

    /// Traces the density tails of `{n : |x_n - limit| >= epsilon}` along
    /// a row schedule, one trace per epsilon, and classifies each trend.
    pub fn estimate_st_a_limit(
        &self,
        x: &SequenceSpec,
        limit: f64,
        epsilons: &[f64],
        j_schedule: &[usize],
        depth: usize,
        tol: f64,
    ) -> Result<Vec<DensityTrace>, SummabilityError> {
        validate_schedule(j_schedule)?;
        if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(SummabilityError::InvalidEpsilons);
        }
        let mut traces = Vec::with_capacity(epsilons.len());
        for &epsilon in epsilons {
            let mut tails = Vec::with_capacity(j_schedule.len());
            for &j in j_schedule {
                tails.push((j, self.density_tail(x, limit, epsilon, j, depth)?));
            }
            let values: Vec<f64> = tails.iter().map(|&(_, t)| t).collect();
            let trend = classify_trend(&values, tol);
            traces.push(DensityTrace {
                epsilon,
                tails,
                trend,
            });
        }
        Ok(traces)
    }
}

pub(crate) fn validate_schedule(j_schedule: &[usize]) -> Result<(), SummabilityError> {
    if j_schedule.is_empty() || j_schedule[0] == 0 {
        return Err(SummabilityError::InvalidSchedule);
    }
    if j_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SummabilityError::InvalidSchedule);
    }
    Ok(())
}

/// Per-row regularity diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RowDiagnostics {
    pub j: usize,
    pub row_sum: f64,
    pub row_sum_deviation: f64,
    pub max_entry: f64,
    /// Bound on mass beyond the probed extent, if the row declares one.
    pub truncation_bound: Option<f64>,
}

/// Entries of one sampled column along the row schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnDecay {
    pub column: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Result of `check_regularity`.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub matrix: String,
    pub tol: f64,
    pub rows: Vec<RowDiagnostics>,
    pub columns: Vec<ColumnDecay>,
    /// Row sums reach 1 within tolerance at the last scheduled row.
    pub row_sums_ok: bool,
    /// Every sampled column has decayed within tolerance at the last row.
    pub columns_ok: bool,
    /// Largest row entry decays monotonically (within tolerance) to below
    /// tolerance. Required for the matrix to produce a nontrivial density.
    pub max_entry_ok: bool,
}

impl RegularityReport {
    pub fn all_ok(&self) -> bool {
        self.row_sums_ok && self.columns_ok && self.max_entry_ok
    }
}

/// Classification of a tail sequence along the row schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrendVerdict {
    /// Non-increasing within tolerance and finally below tolerance.
    Decaying,
    /// Still above tolerance at the last row without net decrease.
    Stagnant,
    /// Anything else (non-monotone, or decreasing but not yet small).
    Inconclusive,
}

impl fmt::Display for TrendVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrendVerdict::Decaying => "DECAYING",
            TrendVerdict::Stagnant => "STAGNANT",
            TrendVerdict::Inconclusive => "INCONCLUSIVE",
        };
        f.write_str(s)
    }
}

/// Classifies a finite tail sequence: decaying when it is pairwise
/// non-increasing within `tol` and its final value is at most `tol`;
/// stagnant when the final value stays above `tol` with no net decrease
/// from the first; inconclusive otherwise.
pub fn classify_trend(tails: &[f64], tol: f64) -> TrendVerdict {
    if tails.is_empty() {
        return TrendVerdict::Inconclusive;
    }
    let first = tails[0];
    let last = *tails.last().unwrap();
    let non_increasing = tails.windows(2).all(|w| w[1] <= w[0] + tol);
    if non_increasing && last <= tol + TREND_ROUNDING_GUARD {
        TrendVerdict::Decaying
    } else if last > tol + TREND_ROUNDING_GUARD && last >= first - tol {
        TrendVerdict::Stagnant
    } else {
        TrendVerdict::Inconclusive
    }
}

/// One density trace: tails of a fixed-epsilon exceedance set along the
/// row schedule.
#[derive(Debug, Clone, Serialize)]
pub struct DensityTrace {
    pub epsilon: f64,
    pub tails: Vec<(usize, f64)>,
    pub trend: TrendVerdict,
}

/// A real sequence given by a rule on indices `n >= 1`, with an optional
/// claimed limit used by density diagnostics.
#[derive(Clone)]
pub struct SequenceSpec {
    name: String,
    rule: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    claimed_limit: Option<f64>,
}

impl fmt::Debug for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceSpec")
            .field("name", &self.name)
            .field("claimed_limit", &self.claimed_limit)
            .finish_non_exhaustive()
    }
}

impl SequenceSpec {
    pub fn new<F>(name: impl Into<String>, rule: F, claimed_limit: Option<f64>) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            rule: Arc::new(rule),
            claimed_limit,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn claimed_limit(&self) -> Option<f64> {
        self.claimed_limit
    }

    /// The value `x_n` (1-based).
    pub fn value(&self, n: usize) -> f64 {
        debug_assert!(n >= 1, "sequence indices are 1-based");
        (self.rule)(n)
    }

    /// The constant sequence 1, 1, 1, ...
    pub fn ones() -> Self {
        Self::new("ones", |_| 1.0, Some(1.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c, Some(c))
    }

    /// 1/n, converging to 0.
    pub fn one_over_n() -> Self {
        Self::new("1/n", |n| 1.0 / n as f64, Some(0.0))
    }

    /// 1 + 1/n, converging to 1.
    pub fn one_plus_one_over_n() -> Self {
        Self::new("1+1/n", |n| 1.0 + 1.0 / n as f64, Some(1.0))
    }

    /// (-1)^n, divergent; its C1 transform still tends to 0.
    pub fn alternating() -> Self {
        Self::new("alternating", |n| if n % 2 == 0 { 1.0 } else { -1.0 }, None)
    }

    /// The square-perturbed sequence: `spike` at perfect squares and 1
    /// elsewhere. For `spike != 1` it diverges classically, yet the set of
    /// spiked indices has C1-density zero (the tail at row j is
    /// `floor(sqrt(j)) / j`), so it converges C1-statistically to 1.
    pub fn square_perturbation(spike: f64) -> Result<Self, SummabilityError> {
        if !(spike >= 0.0) {
            return Err(SummabilityError::NegativeSpike { value: spike });
        }
        Ok(Self::new(
            format!("squares:{spike}"),
            move |n| if is_perfect_square(n) { spike } else { 1.0 },
            Some(1.0),
        ))
    }

    /// A sequence backed by a finite table; probing past the table yields
    /// NaN, which the transforms report as `NonFiniteValue` rather than
    /// silently extending the data.
    pub fn from_values(name: impl Into<String>, values: Vec<f64>, claimed_limit: Option<f64>) -> Self {
        Self::new(
            name,
            move |n| values.get(n - 1).copied().unwrap_or(f64::NAN),
            claimed_limit,
        )
    }
}

/// Exact perfect-square test for 1-based indices.
pub fn is_perfect_square(n: usize) -> bool {
    let mut r = (n as f64).sqrt().round() as usize;
    while r > 0 && r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r * r == n
}
