//! Monte-Carlo engine for the expected discrepancy ratio.
//!
//! `E r_alpha` is estimated by the plain trial average of `phi_alpha / alpha`,
//! which equals it by the tower property. The conditional table (one row per
//! reachable level, or per bin for the continuum rule) is a diagnostic built
//! from the same trials.
//!
//! Trials are grouped into fixed-size blocks. Trial `i` draws from the
//! substream keyed by `(seed, i)`, each block is accumulated in trial order and
//! blocks are merged in block order, so a report is bit-identical for any
//! number of workers.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::analytic::{closed_form, ClosedFormReport};
use crate::error::{Error, Result};
use crate::evidence::EvidenceModel;
use crate::model::{Cell, DiscrepancyRow, TrialRecord};
use crate::rng::TrialRng;
use crate::strategy::{Reachable, StrategySpec};
use crate::summation::NeumaierSum;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_Z_SLACK: f64 = 3.0;

/// Trials per accumulation block. Part of the reproducibility contract:
/// changing it changes the last bits of every estimate.
const BLOCK_TRIALS: u64 = 1 << 14;

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_trials: u64,
    pub seed: u64,
    pub strategy: StrategySpec,
    pub evidence: EvidenceModel,
    /// Bin edges for the continuum rule's conditional table. Defaults to
    /// [`DEFAULT_BINS`] geometric bins from the floor to the cap.
    pub bin_edges: Option<Vec<f64>>,
    /// Does not affect results, so it is left out of serialized reports.
    #[serde(skip, default = "one")]
    pub workers: usize,
}

impl SimulationConfig {
    pub fn new(strategy: StrategySpec, evidence: EvidenceModel, n_trials: u64, seed: u64) -> Self {
        Self {
            n_trials,
            seed,
            strategy,
            evidence,
            bin_edges: None,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_bin_edges(mut self, edges: Vec<f64>) -> Self {
        self.bin_edges = Some(edges);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidParameter("n_trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        self.strategy.validate()?;
        self.evidence.validate()?;
        if let Some(edges) = &self.bin_edges {
            if !self.strategy.is_continuum() {
                return Err(Error::InvalidParameter(
                    "bin edges only apply to the continuum rule".into(),
                ));
            }
            if edges.len() < 2 {
                return Err(Error::InvalidParameter("need at least two bin edges".into()));
            }
            if edges.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                return Err(Error::InvalidParameter("bin edges must lie in (0, 1]".into()));
            }
            if edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "bin edges must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// The conditioning cells this configuration reports on.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        match self.strategy.reachable_alphas() {
            Reachable::Finite(points) => Ok(points.into_iter().map(|a| Cell::Point { a }).collect()),
            Reachable::Interval { lo, hi } => {
                if lo >= hi.value() {
                    return Ok(vec![Cell::Point { a: hi }]);
                }
                let edges = match &self.bin_edges {
                    Some(edges) => edges.clone(),
                    None => geometric_edges(lo, hi.value(), DEFAULT_BINS),
                };
                let mut cells = vec![Cell::Point { a: crate::model::Alpha::new(lo)? }];
                cells.extend(edges.windows(2).map(|w| Cell::Bin { lo: w[0], hi: w[1] }));
                cells.push(Cell::Point { a: hi });
                Ok(cells)
            }
        }
    }
}

/// `bins + 1` log-spaced edges from `lo` to `hi`, endpoints exact.
pub fn geometric_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let mut edges: Vec<f64> = (0..=bins)
        .map(|k| lo * (ratio * k as f64 / bins as f64).exp())
        .collect();
    edges[0] = lo;
    edges[bins] = hi;
    edges
}

/// Point estimate with normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl Estimate {
    /// From the sum and sum of squares of `n` observations; sample standard
    /// deviation with `n - 1` in the denominator.
    pub fn from_sums(n: u64, sum: f64, sum_sq: f64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let std_error = (var / nf).sqrt();
        Self {
            mean,
            std_error,
            n,
            ci95_low: mean - 1.96 * std_error,
            ci95_high: mean + 1.96 * std_error,
        }
    }
}

/// Cell lookup: exact match on point cells first, then the bin `(lo, hi]`.
#[derive(Debug, Clone)]
pub struct CellIndex {
    cells: Vec<Cell>,
    points: Vec<(f64, usize)>,
    /// `(lo, hi, cell index)` sorted by `lo`.
    bins: Vec<(f64, f64, usize)>,
}

impl CellIndex {
    pub fn new(cells: Vec<Cell>) -> Self {
        let mut points = Vec::new();
        let mut bins = Vec::new();
        for (i, cell) in cells.iter().enumerate() {
            match *cell {
                Cell::Point { a } => points.push((a.value(), i)),
                Cell::Bin { lo, hi } => bins.push((lo, hi, i)),
            }
        }
        bins.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self { cells, points, bins }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn lookup(&self, alpha: f64) -> Option<usize> {
        if let Some(&(_, i)) = self.points.iter().find(|(a, _)| *a == alpha) {
            return Some(i);
        }
        let idx = self.bins.partition_point(|&(lo, _, _)| lo < alpha);
        let &(_, hi, i) = self.bins.get(idx.checked_sub(1)?)?;
        (alpha <= hi).then_some(i)
    }
}

/// Conditional rejection counts and discrepancies per cell.
///
/// Every record must fall into some cell; a level outside all cells means the
/// cells do not match the strategy and is an error.
pub fn conditional_rate_table<I>(records: I, cells: &[Cell]) -> Result<Vec<DiscrepancyRow>>
where
    I: IntoIterator<Item = TrialRecord>,
{
    let index = CellIndex::new(cells.to_vec());
    let mut tallies = vec![[0u64; 2]; cells.len()];
    for rec in records {
        let alpha = rec.alpha.value();
        let cell = index.lookup(alpha).ok_or(Error::UncoveredAlpha { alpha })?;
        tallies[cell][0] += 1;
        tallies[cell][1] += u64::from(rec.rejected);
    }
    Ok(rows_from_tallies(cells, &tallies))
}

fn rows_from_tallies(cells: &[Cell], tallies: &[[u64; 2]]) -> Vec<DiscrepancyRow> {
    cells
        .iter()
        .zip(tallies)
        .map(|(&cell, &[n, k])| DiscrepancyRow::from_counts(cell, n, k))
        .collect()
}

/// Runs trial `trial` of a configuration.
pub fn simulate_trial(config: &SimulationConfig, trial: u64) -> Result<TrialRecord> {
    let mut rng = TrialRng::new(config.seed, trial);
    let draw = config.evidence.draw(&mut rng)?;
    let alpha = config.strategy.select_alpha(draw.p);
    Ok(TrialRecord::new(draw.statistic, draw.p, draw.e, alpha))
}

/// The trial records of a configuration, in trial order.
pub fn trial_records(config: &SimulationConfig) -> impl Iterator<Item = Result<TrialRecord>> + '_ {
    (0..config.n_trials).map(move |i| simulate_trial(config, i))
}

#[derive(Debug, Clone)]
struct Accumulator {
    ratio: NeumaierSum,
    ratio_sq: NeumaierSum,
    max_ratio: f64,
    n: u64,
    n_rejected: u64,
    tallies: Vec<[u64; 2]>,
    e: NeumaierSum,
    e_sq: NeumaierSum,
}

impl Accumulator {
    fn new(cells: usize) -> Self {
        Self {
            ratio: NeumaierSum::new(),
            ratio_sq: NeumaierSum::new(),
            max_ratio: 0.0,
            n: 0,
            n_rejected: 0,
            tallies: vec![[0; 2]; cells],
            e: NeumaierSum::new(),
            e_sq: NeumaierSum::new(),
        }
    }

    #[inline]
    fn push(&mut self, rec: &TrialRecord, cell: usize) {
        let term = rec.ratio_term;
        self.ratio.add(term);
        self.ratio_sq.add(term * term);
        self.max_ratio = self.max_ratio.max(term);
        self.n += 1;
        self.n_rejected += u64::from(rec.rejected);
        self.tallies[cell][0] += 1;
        self.tallies[cell][1] += u64::from(rec.rejected);
        if let Some(e) = rec.e {
            let e = e.value();
            self.e.add(e);
            self.e_sq.add(e * e);
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.ratio.merge(&other.ratio);
        self.ratio_sq.merge(&other.ratio_sq);
        self.max_ratio = self.max_ratio.max(other.max_ratio);
        self.n += other.n;
        self.n_rejected += other.n_rejected;
        for (mine, theirs) in self.tallies.iter_mut().zip(&other.tallies) {
            mine[0] += theirs[0];
            mine[1] += theirs[1];
        }
        self.e.merge(&other.e);
        self.e_sq.merge(&other.e_sq);
    }
}

fn run_block(config: &SimulationConfig, index: &CellIndex, block: u64) -> Result<Accumulator> {
    let start = block * BLOCK_TRIALS;
    let end = (start + BLOCK_TRIALS).min(config.n_trials);
    let mut acc = Accumulator::new(index.cells().len());
    for trial in start..end {
        let rec = simulate_trial(config, trial)?;
        let alpha = rec.alpha.value();
        let cell = index.lookup(alpha).ok_or(Error::UncoveredAlpha { alpha })?;
        acc.push(&rec, cell);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    /// Estimate of `E r_alpha` as the average of `phi_alpha / alpha`.
    pub expected_ratio: Estimate,
    pub overall_rejection_rate: Estimate,
    pub rows: Vec<DiscrepancyRow>,
    /// Rows include bins of a continuum of levels, reported at their geometric midpoints.
    pub binned_rows: bool,
    pub max_ratio_term: f64,
    /// Set when a single trial's `1/alpha` exceeds 1% of the trial count,
    /// i.e. individual trials can dominate the mean.
    pub tail_warning: bool,
    /// Mean of the e-values, for e-value evidence models.
    pub e_value_mean: Option<Estimate>,
    pub analytic_reference: Option<ClosedFormReport>,
}

impl SimulationReport {
    /// `E r_alpha` recomputed from the conditional table as
    /// `sum_cells (n_cond / n) * cond_rate / a`. Only defined for point cells.
    pub fn expected_ratio_from_table(&self) -> Option<f64> {
        if self.binned_rows {
            return None;
        }
        let n = self.expected_ratio.n as f64;
        let total: NeumaierSum = self
            .rows
            .iter()
            .filter_map(|row| row.cond_rate.map(|rate| (row.n_conditional as f64 / n) * rate / row.a))
            .collect();
        Some(total.value())
    }

    /// Distance between the estimate and the closed form, in standard errors.
    pub fn oracle_z(&self) -> Option<f64> {
        let exact = self.analytic_reference.as_ref()?.expected_ratio.finite()?;
        let diff = (self.expected_ratio.mean - exact).abs();
        Some(if diff == 0.0 {
            0.0
        } else {
            diff / self.expected_ratio.std_error
        })
    }
}

/// Runs every trial of `config` and summarizes.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let index = CellIndex::new(config.cells()?);
    let n_blocks = config.n_trials.div_ceil(BLOCK_TRIALS);
    let workers = (config.workers as u64).min(n_blocks) as usize;

    let mut blocks: Vec<Option<Result<Accumulator>>> = vec![None; n_blocks as usize];
    if workers <= 1 {
        for (b, slot) in blocks.iter_mut().enumerate() {
            *slot = Some(run_block(config, &index, b as u64));
        }
    } else {
        let per_worker: Vec<Vec<(u64, Result<Accumulator>)>> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let index = &index;
                    s.spawn(move || {
                        (w as u64..n_blocks)
                            .step_by(workers)
                            .map(|b| (b, run_block(config, index, b)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .collect()
        });
        for (b, acc) in per_worker.into_iter().flatten() {
            blocks[b as usize] = Some(acc);
        }
    }

    let mut total = Accumulator::new(index.cells().len());
    for block in blocks {
        total.merge(&block.expect("every block was scheduled")?);
    }

    let n = total.n;
    let rows = rows_from_tallies(index.cells(), &total.tallies);
    let rejected = total.n_rejected as f64;
    let analytic_reference = if config.evidence.is_exact() {
        Some(closed_form(&config.strategy)?)
    } else {
        None
    };

    Ok(SimulationReport {
        config: config.clone(),
        expected_ratio: Estimate::from_sums(n, total.ratio.value(), total.ratio_sq.value()),
        overall_rejection_rate: Estimate::from_sums(n, rejected, rejected),
        binned_rows: index.cells().iter().any(Cell::is_bin),
        rows,
        max_ratio_term: total.max_ratio,
        tail_warning: total.max_ratio > 0.01 * n as f64,
        e_value_mean: (!config.evidence.is_exact())
            .then(|| Estimate::from_sums(n, total.e.value(), total.e_sq.value())),
        analytic_reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    /// `margin` is how far the estimate lies above 1.
    Violated { margin: f64 },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Checks `E r_alpha <= 1`, allowing `z_slack` standard errors of noise.
pub fn verify_post_hoc_validity(report: &SimulationReport, z_slack: f64) -> Verdict {
    let est = &report.expected_ratio;
    if est.mean <= 1.0 + z_slack * est.std_error {
        Verdict::Valid
    } else {
        Verdict::Violated {
            margin: est.mean - 1.0,
        }
    }
}
