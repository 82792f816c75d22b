//! The rotor walk engine.
//!
//! A walk state is a position plus a total labeling of Z^d. One step moves
//! the walker along the label found at its current site, then advances that
//! site's label to its successor in the rotor order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::ConfigRule;
use crate::error::{Error, Result};
use crate::lattice::{Dimension, Direction, LatticeBox, LatticePoint};

/// Dense storage is used only for declared boxes with at most this many
/// sites (a radius-300 box in d=3).
pub const DEFAULT_DENSE_SITE_LIMIT: u64 = 601 * 601 * 601;

const UNSET: u8 = u8::MAX;

/// Cyclic permutation applied to a site's label after each departure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotorOrder {
    successor: Vec<u8>,
}

impl RotorOrder {
    /// `i -> i + 1 mod 2d`.
    pub fn cyclic(dim: Dimension) -> Self {
        let k = dim.directions();
        RotorOrder {
            successor: (0..k).map(|i| ((i + 1) % k) as u8).collect(),
        }
    }

    /// Builds the order that visits `sequence` in turn and wraps around.
    pub fn from_sequence(dim: Dimension, sequence: &[Direction]) -> Result<Self> {
        let k = dim.directions();
        if sequence.len() != k {
            return Err(Error::InvalidOrder(format!(
                "sequence has {} labels, expected {k}",
                sequence.len()
            )));
        }
        let mut successor = vec![UNSET; k];
        for (pos, label) in sequence.iter().enumerate() {
            if label.index() >= k {
                return Err(Error::InvalidOrder(format!("label {label} out of range")));
            }
            if successor[label.index()] != UNSET {
                return Err(Error::InvalidOrder(format!("label {label} repeated")));
            }
            successor[label.index()] = sequence[(pos + 1) % k].0;
        }
        Ok(RotorOrder { successor })
    }

    /// Validates an explicit successor table: it must be a single `2d`-cycle.
    pub fn from_successors(dim: Dimension, successor: Vec<u8>) -> Result<Self> {
        let k = dim.directions();
        if successor.len() != k || successor.iter().any(|&s| s as usize >= k) {
            return Err(Error::InvalidOrder(
                "successor table has wrong shape".into(),
            ));
        }
        let mut label = 0usize;
        for step in 1..=k {
            label = successor[label] as usize;
            if label == 0 && step != k {
                return Err(Error::InvalidOrder(
                    "successor is not a single cycle".into(),
                ));
            }
        }
        if label != 0 {
            return Err(Error::InvalidOrder("successor is not a permutation".into()));
        }
        Ok(RotorOrder { successor })
    }

    /// `"default"` or a comma-separated cycle such as `"0,2,1,3"`.
    pub fn parse(spec: &str, dim: Dimension) -> Result<Self> {
        let spec = spec.trim();
        if spec == "default" {
            return Ok(Self::cyclic(dim));
        }
        let sequence = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidOrder(format!("bad label {s:?}")))
                    .and_then(|l| {
                        dim.check_label(l)
                            .map_err(|_| Error::InvalidOrder(format!("label {l} out of range")))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sequence(dim, &sequence)
    }

    #[inline]
    pub fn next(&self, label: Direction) -> Direction {
        Direction(self.successor[label.index()])
    }

    pub fn len(&self) -> usize {
        self.successor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successor.is_empty()
    }

    pub fn successors(&self) -> &[u8] {
        &self.successor
    }

    pub fn is_default(&self) -> bool {
        self.successor
            .iter()
            .enumerate()
            .all(|(i, &s)| s as usize == (i + 1) % self.successor.len())
    }

    /// `successor^k(label)`.
    pub fn advance(&self, label: Direction, k: u64) -> Direction {
        let r = k % self.successor.len() as u64;
        (0..r).fold(label, |l, _| self.next(l))
    }
}

impl fmt::Display for RotorOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_default() {
            return write!(f, "default");
        }
        let mut label = 0u8;
        for i in 0..self.successor.len() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{label}")?;
            label = self.successor[label as usize];
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct DenseLabels {
    region: LatticeBox,
    labels: Vec<u8>,
}

/// Total labeling of Z^d: the initial rule plus the sites whose rotor has
/// moved. Sites inside a declared box are stored in a flat byte array.
#[derive(Debug, Clone)]
pub struct RotorField {
    rule: ConfigRule,
    sparse: HashMap<LatticePoint, Direction>,
    dense: Option<DenseLabels>,
    dense_modified: usize,
}

impl RotorField {
    pub fn new(rule: ConfigRule) -> Self {
        RotorField {
            rule,
            sparse: HashMap::new(),
            dense: None,
            dense_modified: 0,
        }
    }

    pub fn rule(&self) -> &ConfigRule {
        &self.rule
    }

    pub fn dim(&self) -> Dimension {
        self.rule.dim()
    }

    /// Moves storage for sites inside `region` into a flat array. Returns
    /// false (and keeps the current storage) when the box exceeds `limit`
    /// sites. Lookups are unaffected either way.
    pub fn declare_box(&mut self, region: LatticeBox, limit: u64) -> bool {
        let Some(count) = region.site_count().filter(|&c| c <= limit) else {
            return false;
        };
        let Ok(count) = usize::try_from(count) else {
            return false;
        };
        if region.dim != self.dim() {
            return false;
        }
        let entries: Vec<(LatticePoint, Direction)> = self.sparse.drain().collect();
        let old = self.dense.replace(DenseLabels {
            region,
            labels: vec![UNSET; count],
        });
        self.dense_modified = 0;
        if let Some(old) = old {
            for (i, &label) in old.labels.iter().enumerate() {
                if label != UNSET {
                    let p = old.region.point_at(i as u64).expect("index within box");
                    self.set(p, Direction(label));
                }
            }
        }
        for (p, label) in entries {
            self.set(p, label);
        }
        true
    }

    pub fn dense_region(&self) -> Option<LatticeBox> {
        self.dense.as_ref().map(|d| d.region)
    }

    #[inline]
    fn overlay(&self, p: &LatticePoint) -> Option<Direction> {
        if let Some(dense) = &self.dense {
            if let Some(i) = dense.region.index_unchecked(p) {
                let raw = dense.labels[i as usize];
                return (raw != UNSET).then_some(Direction(raw));
            }
        }
        self.sparse.get(p).copied()
    }

    #[inline]
    pub fn label(&self, p: &LatticePoint) -> Direction {
        self.overlay(p)
            .unwrap_or_else(|| self.rule.initial_label(p))
    }

    /// True when the site's rotor differs from the rule's record, i.e. it
    /// has an overlay entry.
    pub fn is_modified(&self, p: &LatticePoint) -> bool {
        self.overlay(p).is_some()
    }

    #[inline]
    pub fn set(&mut self, p: LatticePoint, label: Direction) {
        if let Some(dense) = &mut self.dense {
            if let Some(i) = dense.region.index_unchecked(&p) {
                let slot = &mut dense.labels[i as usize];
                if *slot == UNSET {
                    self.dense_modified += 1;
                }
                *slot = label.0;
                return;
            }
        }
        self.sparse.insert(p, label);
    }

    /// Number of overlay entries.
    pub fn overlay_len(&self) -> usize {
        self.sparse.len() + self.dense_modified
    }

    /// Overlay entries sorted by point.
    pub fn overlay_entries(&self) -> Vec<(LatticePoint, Direction)> {
        self.overlay_iter().collect()
    }

    /// Overlay entries in sorted order, without materializing the dense part.
    pub fn overlay_iter(&self) -> impl Iterator<Item = (LatticePoint, Direction)> + '_ {
        let mut sparse: Vec<_> = self.sparse.iter().map(|(p, l)| (p.clone(), *l)).collect();
        sparse.sort();
        let mut sparse = sparse.into_iter().peekable();
        // dense index order is lexicographic order of points
        let mut dense = self
            .dense
            .iter()
            .flat_map(|d| {
                d.labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &raw)| raw != UNSET)
                    .map(move |(i, &raw)| {
                        (
                            d.region.point_at(i as u64).expect("index within box"),
                            Direction(raw),
                        )
                    })
            })
            .peekable();
        std::iter::from_fn(move || match (sparse.peek(), dense.peek()) {
            (Some(a), Some(b)) if a.0 > b.0 => dense.next(),
            (Some(_), _) => sparse.next(),
            (None, _) => dense.next(),
        })
    }
}

/// A finite set of sites the walker is confined to.
pub trait Region {
    fn contains(&self, p: &LatticePoint) -> bool;
}

impl Region for LatticeBox {
    fn contains(&self, p: &LatticePoint) -> bool {
        LatticeBox::contains(self, p)
    }
}

impl Region for HashSet<LatticePoint> {
    fn contains(&self, p: &LatticePoint) -> bool {
        HashSet::contains(self, p)
    }
}

impl Region for BTreeSet<LatticePoint> {
    fn contains(&self, p: &LatticePoint) -> bool {
        BTreeSet::contains(self, p)
    }
}

/// Generous step bound for leaving a finite region: `2d * |A|^2 * (diam(A) + 1)`,
/// where `diam` is the largest coordinate extent of the region. Saturates.
pub fn default_cap<'a>(dim: Dimension, region: impl IntoIterator<Item = &'a LatticePoint>) -> u64 {
    let d = dim.get();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    let mut size = 0u64;
    for p in region {
        size += 1;
        for (i, &c) in p.coords().iter().enumerate() {
            lo[i] = lo[i].min(c);
            hi[i] = hi[i].max(c);
        }
    }
    let diam = if size == 0 {
        0
    } else {
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    };
    (dim.directions() as u64)
        .saturating_mul(size.saturating_mul(size))
        .saturating_mul(diam.saturating_add(1))
}

pub fn default_cap_for_box(region: LatticeBox) -> u64 {
    let size = region.site_count().unwrap_or(u64::MAX);
    (region.dim.directions() as u64)
        .saturating_mul(size.saturating_mul(size))
        .saturating_mul(2 * region.radius + 1)
}

/// Observation made when the walker first leaves `B[0, radius]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub radius: u64,
    /// Step index of the first position outside the box.
    pub first_exit_step: u64,
    /// Arrivals at the origin before that step, counting the start.
    pub origin_visits: u64,
    /// FNV-1a digest of the box's labels at the exit instant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<u64>,
}

/// An ordered lattice path.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub points: Vec<LatticePoint>,
}

impl Trajectory {
    pub fn is_lattice_path(&self) -> bool {
        self.points.windows(2).all(|w| w[0].is_neighbor(&w[1]))
    }
}

/// Position, rotor field, order and counters of one rotor walk.
#[derive(Debug, Clone)]
pub struct WalkState {
    pub(crate) position: LatticePoint,
    pub(crate) field: RotorField,
    pub(crate) order: RotorOrder,
    pub(crate) step_count: u64,
    pub(crate) origin_visits: u64,
    pub(crate) max_norm_seen: u64,
    /// Per-site departure counts split by direction, when instrumented.
    pub(crate) departures: Option<HashMap<LatticePoint, Vec<u64>>>,
}

impl WalkState {
    /// A walk at the origin with an untouched field. The initial placement
    /// counts as the first origin visit.
    pub fn new(rule: ConfigRule, order: RotorOrder) -> Result<Self> {
        let dim = rule.dim();
        Self::starting_at(rule, order, LatticePoint::origin(dim))
    }

    pub fn starting_at(rule: ConfigRule, order: RotorOrder, start: LatticePoint) -> Result<Self> {
        let dim = rule.dim();
        start.check_dim(dim)?;
        if order.len() != dim.directions() {
            return Err(Error::InvalidOrder(format!(
                "order has {} labels, rule has d={dim}",
                order.len()
            )));
        }
        Ok(WalkState {
            origin_visits: u64::from(start.is_origin()),
            max_norm_seen: start.infinity_norm(),
            position: start,
            field: RotorField::new(rule),
            order,
            step_count: 0,
            departures: None,
        })
    }

    pub fn with_instrumentation(mut self) -> Self {
        self.enable_instrumentation();
        self
    }

    /// Starts per-site, per-direction departure counting. Only valid before
    /// the first step, so totals always equal `step_count`.
    pub fn enable_instrumentation(&mut self) {
        assert_eq!(
            self.step_count, 0,
            "instrumentation must be enabled before stepping"
        );
        self.departures.get_or_insert_with(HashMap::new);
    }

    pub fn with_dense_box(mut self, radius: u64) -> Self {
        self.declare_box(radius, DEFAULT_DENSE_SITE_LIMIT);
        self
    }

    pub fn declare_box(&mut self, radius: u64, limit: u64) -> bool {
        let region = LatticeBox::new(self.dim(), radius);
        self.field.declare_box(region, limit)
    }

    pub fn dim(&self) -> Dimension {
        self.field.dim()
    }

    pub fn position(&self) -> &LatticePoint {
        &self.position
    }

    pub fn field(&self) -> &RotorField {
        &self.field
    }

    pub fn field_mut(&mut self) -> &mut RotorField {
        &mut self.field
    }

    pub fn order(&self) -> &RotorOrder {
        &self.order
    }

    pub fn rule(&self) -> &ConfigRule {
        self.field.rule()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn origin_visits(&self) -> u64 {
        self.origin_visits
    }

    pub fn max_norm_seen(&self) -> u64 {
        self.max_norm_seen
    }

    pub fn departures(&self) -> Option<&HashMap<LatticePoint, Vec<u64>>> {
        self.departures.as_ref()
    }

    pub fn label_at(&self, p: &LatticePoint) -> Direction {
        self.field.label(p)
    }

    /// One application of the step map: move along the current label, then
    /// rotate the departed site's rotor.
    #[inline]
    pub fn step(&mut self) -> Result<()> {
        let here = self.field.label(&self.position);
        let mut next = self.position.clone();
        next.step_mut(here)?;
        let departed = std::mem::replace(&mut self.position, next);
        if let Some(counts) = &mut self.departures {
            let k = self.order.len();
            counts.entry(departed.clone()).or_insert_with(|| vec![0; k])[here.index()] += 1;
        }
        self.field.set(departed, self.order.next(here));
        self.step_count += 1;
        if self.position.is_origin() {
            self.origin_visits += 1;
        }
        let norm = self.position.infinity_norm();
        if norm > self.max_norm_seen {
            self.max_norm_seen = norm;
        }
        Ok(())
    }

    /// Steps until the walker is outside `region`. Returns the number of
    /// steps taken; exceeding `cap` steps is an error.
    pub fn run_until_exit<R: Region + ?Sized>(&mut self, region: &R, cap: u64) -> Result<u64> {
        let mut taken = 0u64;
        while region.contains(&self.position) {
            if taken == cap {
                return Err(Error::CapExhausted { cap });
            }
            self.step()?;
            taken += 1;
        }
        Ok(taken)
    }

    /// Steps until `|position|_inf > radius`, without taking a snapshot.
    /// Returns immediately if the walker is already outside.
    pub fn advance_past(&mut self, radius: u64, cap: u64) -> Result<u64> {
        let mut taken = 0u64;
        while self.position.infinity_norm() <= radius {
            if taken == cap {
                return Err(Error::CapExhausted { cap });
            }
            self.step()?;
            taken += 1;
        }
        Ok(taken)
    }

    /// Runs until the walker first leaves `B[0, radius]` and records the
    /// exit, including a digest of the box's labels at that instant.
    pub fn run_until_norm_exceeds(&mut self, radius: u64, cap: u64) -> Result<ExitRecord> {
        if self.position.infinity_norm() > radius {
            return Err(Error::InvalidConfig {
                field: "radius".into(),
                message: format!(
                    "walker at {} is already outside radius {radius}",
                    self.position
                ),
            });
        }
        self.advance_past(radius, cap)?;
        Ok(ExitRecord {
            radius,
            first_exit_step: self.step_count,
            origin_visits: self.origin_visits,
            digest: Some(snapshot_digest(
                &self.snapshot(LatticeBox::new(self.dim(), radius)),
            )),
        })
    }

    /// Like [`WalkState::run_until_norm_exceeds`], also returning every
    /// position held from the call until the exit.
    pub fn trace_until_norm_exceeds(
        &mut self,
        radius: u64,
        cap: u64,
    ) -> Result<(ExitRecord, Trajectory)> {
        let mut points = vec![self.position.clone()];
        let mut taken = 0u64;
        while self.position.infinity_norm() <= radius {
            if taken == cap {
                return Err(Error::CapExhausted { cap });
            }
            self.step()?;
            taken += 1;
            points.push(self.position.clone());
        }
        let record = ExitRecord {
            radius,
            first_exit_step: self.step_count,
            origin_visits: self.origin_visits,
            digest: Some(snapshot_digest(
                &self.snapshot(LatticeBox::new(self.dim(), radius)),
            )),
        };
        Ok((record, Trajectory { points }))
    }

    /// Labels of every site of `region`, in dense-index order.
    pub fn snapshot(&self, region: LatticeBox) -> Vec<u8> {
        region.points().map(|p| self.field.label(&p).0).collect()
    }

    /// Returns the walker to `start` without touching the rotor field or
    /// the counters. Used between aggregation particles.
    pub(crate) fn relocate(&mut self, start: LatticePoint) {
        self.position = start;
    }
}

/// 64-bit FNV-1a over the label bytes.
pub fn snapshot_digest(labels: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    labels
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}
