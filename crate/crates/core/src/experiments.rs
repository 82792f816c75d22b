//! Evidence harness: the origin-visit sweep over nested boxes, rotor
//! stabilization at box exits, direction balance, and a seeded simple
//! random walk baseline.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::checkpoint::{self, Checkpoint};
use crate::config::ConfigRule;
use crate::error::{Error, Result};
use crate::lattice::{Dimension, Direction, LatticeBox, LatticePoint};
use crate::output::{coord_headers, CsvDoc};
use crate::rotor::{default_cap_for_box, ExitRecord, RotorOrder, WalkState};

/// Progress callbacks fire every this many steps.
pub const PROGRESS_INTERVAL: u64 = 100_000_000;

/// Origin visits predicted before the first exit of `B[0,n]`. Only stated
/// for d = 3, where it is `6n + 1`.
pub fn expected_origin_visits(dim: Dimension, n: u64) -> Option<u64> {
    (dim.get() == 3).then(|| 6 * n + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureRow {
    pub n: u64,
    pub origin_visits: u64,
    pub expected: Option<u64>,
    pub matches: bool,
    pub first_exit_step: u64,
    /// Wall seconds since the sweep started; `None` unless timing is on.
    pub elapsed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Complete,
    /// Stopped by the step budget; resumable from the last checkpoint.
    Paused,
}

/// Knobs for one call of [`ConjectureSweep::run`].
#[derive(Default)]
pub struct SweepControl<'a> {
    /// Stop (paused) after this many steps in this call.
    pub step_budget: Option<u64>,
    /// Save a checkpoint here every `checkpoint_every` steps, and when pausing.
    pub checkpoint_path: Option<PathBuf>,
    pub checkpoint_every: Option<u64>,
    pub record_timing: bool,
    pub progress: Option<&'a mut dyn FnMut(&WalkState)>,
}

/// One walk from the origin, recording an exit row the first time it
/// leaves each box `B[0,m]` for `m = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct ConjectureSweep {
    state: WalkState,
    n_max: u64,
    records: Vec<ExitRecord>,
    elapsed: Vec<Option<f64>>,
    cap: u64,
}

impl ConjectureSweep {
    pub fn new(rule: ConfigRule, order: RotorOrder, n_max: u64) -> Result<Self> {
        let dim = rule.dim();
        let state = WalkState::new(rule, order)?;
        Ok(Self::from_parts(state, Vec::new(), n_max, dim))
    }

    /// Continues a sweep from a checkpoint. Rows already recorded are kept.
    pub fn resume(ck: Checkpoint, n_max: u64) -> Result<Self> {
        let dim = ck.state.dim();
        let recorded = ck.exit_records.len() as u64;
        let reached = ck.state.max_norm_seen();
        let consistent = (recorded == reached || recorded + 1 == reached)
            && ck
                .exit_records
                .iter()
                .enumerate()
                .all(|(i, r)| r.radius == i as u64);
        if !consistent {
            return Err(Error::InvalidConfig {
                field: "resume".into(),
                message: "checkpoint exit records do not match its walk".into(),
            });
        }
        Ok(Self::from_parts(ck.state, ck.exit_records, n_max, dim))
    }

    fn from_parts(
        mut state: WalkState,
        records: Vec<ExitRecord>,
        n_max: u64,
        dim: Dimension,
    ) -> Self {
        // the walk cannot pass radius n_max + 1 before the last row is due
        state.declare_box(n_max + 1, crate::rotor::DEFAULT_DENSE_SITE_LIMIT);
        let elapsed = vec![None; records.len()];
        ConjectureSweep {
            state,
            n_max,
            records,
            elapsed,
            cap: default_cap_for_box(LatticeBox::new(dim, n_max)),
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_instrumentation(mut self) -> Self {
        self.state.enable_instrumentation();
        self
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn records(&self) -> &[ExitRecord] {
        &self.records
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() as u64 > self.n_max
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<()> {
        checkpoint::save(&self.state, &self.records, path)
    }

    pub fn run(&mut self, control: &mut SweepControl<'_>) -> Result<SweepStatus> {
        let started = Instant::now();
        let mut taken = 0u64;
        while !self.is_complete() {
            let next = self.records.len() as u64;
            if self.state.position().infinity_norm() > next {
                self.records.push(ExitRecord {
                    radius: next,
                    first_exit_step: self.state.step_count(),
                    origin_visits: self.state.origin_visits(),
                    digest: None,
                });
                self.elapsed.push(
                    control
                        .record_timing
                        .then(|| started.elapsed().as_secs_f64()),
                );
                continue;
            }
            if control.step_budget == Some(taken) {
                if let Some(path) = &control.checkpoint_path {
                    self.save_checkpoint(path)?;
                }
                return Ok(SweepStatus::Paused);
            }
            if self.state.step_count() >= self.cap {
                return Err(Error::CapExhausted { cap: self.cap });
            }
            self.state.step()?;
            taken += 1;
            let count = self.state.step_count();
            if let (Some(every), Some(path)) = (control.checkpoint_every, &control.checkpoint_path)
            {
                if every > 0 && count.is_multiple_of(every) {
                    self.save_checkpoint(path)?;
                }
            }
            if count.is_multiple_of(PROGRESS_INTERVAL) {
                if let Some(cb) = control.progress.as_mut() {
                    cb(&self.state);
                }
            }
        }
        Ok(SweepStatus::Complete)
    }

    pub fn rows(&self) -> Vec<ConjectureRow> {
        let dim = self.state.dim();
        self.records
            .iter()
            .zip(&self.elapsed)
            .map(|(r, elapsed)| {
                let expected = expected_origin_visits(dim, r.radius);
                ConjectureRow {
                    n: r.radius,
                    origin_visits: r.origin_visits,
                    expected,
                    matches: expected == Some(r.origin_visits),
                    first_exit_step: r.first_exit_step,
                    elapsed: *elapsed,
                }
            })
            .collect()
    }

    pub fn into_state(self) -> WalkState {
        self.state
    }
}

/// Runs a full sweep in one call.
pub fn conjecture_sweep(
    rule: ConfigRule,
    order: RotorOrder,
    n_max: u64,
) -> Result<Vec<ConjectureRow>> {
    let mut sweep = ConjectureSweep::new(rule, order, n_max)?;
    sweep.run(&mut SweepControl::default())?;
    Ok(sweep.rows())
}

pub fn conjecture_csv(rows: &[ConjectureRow], comment: &str) -> CsvDoc {
    let mut doc = CsvDoc::new(
        comment,
        &[
            "n",
            "origin_visits",
            "expected",
            "match",
            "first_exit_step",
            "elapsed_s",
        ],
    );
    for r in rows {
        doc.row([
            r.n.to_string(),
            r.origin_visits.to_string(),
            r.expected.map(|e| e.to_string()).unwrap_or_default(),
            r.matches.to_string(),
            r.first_exit_step.to_string(),
            r.elapsed.map(|e| format!("{e:.3}")).unwrap_or_default(),
        ]);
    }
    doc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationRow {
    pub site: LatticePoint,
    /// Label at the site when the walk first left `B[0,m]`, for `m = 0, 1, ...`.
    pub labels_at_exits: Vec<Direction>,
    /// Start of the final run of equal labels. `None` when that run is a
    /// single observation out of several, i.e. no repeat was seen.
    pub stabilized_at: Option<u64>,
}

fn stabilization_radius(labels: &[Direction]) -> Option<u64> {
    let last = *labels.last()?;
    let start = labels.iter().rposition(|&l| l != last).map_or(0, |i| i + 1);
    if labels.len() > 1 && start == labels.len() - 1 {
        None
    } else {
        Some(start as u64)
    }
}

/// Records the labels of `B[0, inner_radius]` at each first exit of
/// `B[0,m]`, `m = 0..=n_max`, along one walk from the origin.
pub fn stabilization_study(
    rule: ConfigRule,
    order: RotorOrder,
    n_max: u64,
    inner_radius: u64,
    cap: Option<u64>,
) -> Result<Vec<StabilizationRow>> {
    if inner_radius > n_max {
        return Err(Error::InvalidConfig {
            field: "inner_radius".into(),
            message: format!("{inner_radius} exceeds n_max {n_max}"),
        });
    }
    let dim = rule.dim();
    let cap = cap.unwrap_or_else(|| default_cap_for_box(LatticeBox::new(dim, n_max)));
    let inner = LatticeBox::new(dim, inner_radius);
    let mut state = WalkState::new(rule, order)?.with_dense_box(n_max + 1);
    let mut history: Vec<Vec<u8>> = Vec::with_capacity(n_max as usize + 1);
    for m in 0..=n_max {
        let remaining = cap.saturating_sub(state.step_count());
        state.advance_past(m, remaining).map_err(|e| match e {
            Error::CapExhausted { .. } => Error::CapExhausted { cap },
            other => other,
        })?;
        history.push(state.snapshot(inner));
    }
    Ok(inner
        .points()
        .enumerate()
        .map(|(i, site)| {
            let labels: Vec<Direction> = history.iter().map(|snap| Direction(snap[i])).collect();
            StabilizationRow {
                stabilized_at: stabilization_radius(&labels),
                labels_at_exits: labels,
                site,
            }
        })
        .collect())
}

pub fn stabilization_csv(rows: &[StabilizationRow], dim: Dimension, comment: &str) -> CsvDoc {
    let observations = rows.first().map_or(0, |r| r.labels_at_exits.len());
    let mut header = coord_headers(dim.get());
    header.push("stabilized_at".into());
    header.extend((0..observations).map(|m| format!("exit_{m}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut doc = CsvDoc::new(comment, &header);
    for r in rows {
        let mut fields: Vec<String> = r.site.coords().iter().map(|c| c.to_string()).collect();
        fields.push(
            r.stabilized_at
                .map(|m| m.to_string())
                .unwrap_or_else(|| "unstable".into()),
        );
        fields.extend(r.labels_at_exits.iter().map(|l| l.to_string()));
        doc.row(fields);
    }
    doc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceRow {
    pub site: LatticePoint,
    pub initial: Direction,
    pub departures: u64,
    /// Departures per direction, indexed by label.
    pub counts: Vec<u64>,
    pub current: Direction,
    /// Counts follow the rotor cycle from `initial` and the current label
    /// is `successor^departures(initial)`.
    pub balanced: bool,
}

/// Departure counts forced by `k` departures from a site whose first label
/// is `initial`.
pub fn cycle_counts(order: &RotorOrder, initial: Direction, k: u64) -> Vec<u64> {
    let len = order.len() as u64;
    let mut counts = vec![k / len; order.len()];
    let mut label = initial;
    for _ in 0..(k % len) {
        counts[label.index()] += 1;
        label = order.next(label);
    }
    counts
}

/// Per-site direction balance table, sorted by site.
pub fn balance_report(state: &WalkState) -> Result<Vec<BalanceRow>> {
    let departures = state.departures().ok_or(Error::InstrumentationDisabled)?;
    let order = state.order();
    let mut rows: Vec<BalanceRow> = departures
        .iter()
        .map(|(site, counts)| {
            let initial = state.rule().initial_label(site);
            let k: u64 = counts.iter().sum();
            let current = state.label_at(site);
            let balanced =
                *counts == cycle_counts(order, initial, k) && current == order.advance(initial, k);
            BalanceRow {
                site: site.clone(),
                initial,
                departures: k,
                counts: counts.clone(),
                current,
                balanced,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.site.cmp(&b.site));
    Ok(rows)
}

pub fn balance_csv(rows: &[BalanceRow], dim: Dimension, comment: &str) -> CsvDoc {
    let mut header = coord_headers(dim.get());
    header.extend(["departures", "initial", "current"].map(String::from));
    header.extend((0..dim.directions()).map(|i| format!("count_{i}")));
    header.push("balanced".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut doc = CsvDoc::new(comment, &header);
    for r in rows {
        let mut fields: Vec<String> = r.site.coords().iter().map(|c| c.to_string()).collect();
        fields.push(r.departures.to_string());
        fields.push(r.initial.to_string());
        fields.push(r.current.to_string());
        fields.extend(r.counts.iter().map(|c| c.to_string()));
        fields.push(r.balanced.to_string());
        doc.row(fields);
    }
    doc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrwSummary {
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub mean_origin_visits: f64,
    pub min: u64,
    pub max: u64,
    /// Standard error of the mean.
    pub std_error: f64,
}

/// Origin visits of one simple random walk before it first leaves `B[0,n]`,
/// counted with the same convention as the rotor walk.
fn srw_origin_visits(dim: Dimension, n: u64, rng: &mut ChaCha8Rng) -> u64 {
    let mut pos = LatticePoint::origin(dim);
    let mut visits = 1u64;
    let k = dim.directions() as u8;
    loop {
        let label = Direction(rng.random_range(0..k));
        pos.step_mut(label)
            .expect("walk stays within a bounded box");
        if pos.infinity_norm() > n {
            return visits;
        }
        if pos.is_origin() {
            visits += 1;
        }
    }
}

/// Seeded Monte Carlo baseline. Trial `i` draws from ChaCha8 seeded with
/// `seed`, stream `i`, so results do not depend on thread count.
pub fn srw_comparison(dim: Dimension, n: u64, trials: u64, seed: u64) -> Result<SrwSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig {
            field: "trials".into(),
            message: "must be at least 1".into(),
        });
    }
    let visits: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            srw_origin_visits(dim, n, &mut rng)
        })
        .collect();
    let total: u64 = visits.iter().sum();
    let mean = total as f64 / trials as f64;
    let var = if trials > 1 {
        visits
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(SrwSummary {
        n,
        trials,
        seed,
        mean_origin_visits: mean,
        min: *visits.iter().min().expect("trials >= 1"),
        max: *visits.iter().max().expect("trials >= 1"),
        std_error: (var / trials as f64).sqrt(),
    })
}

pub fn srw_csv(summary: &SrwSummary, comment: &str) -> CsvDoc {
    let mut doc = CsvDoc::new(comment, &["n", "trials", "seed", "mean", "min", "max"]);
    doc.row([
        summary.n.to_string(),
        summary.trials.to_string(),
        summary.seed.to_string(),
        summary.mean_origin_visits.to_string(),
        summary.min.to_string(),
        summary.max.to_string(),
    ]);
    doc
}
