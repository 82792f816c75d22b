//! Rotor-router aggregation and its random (IDLA) counterpart.
//!
//! Particles start at the origin one at a time and walk until they first
//! step outside the occupied set; the exit site is then occupied. The rotor
//! field persists from one particle to the next.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ConfigRule;
use crate::error::{Error, Result};
use crate::lattice::{Dimension, Direction, LatticePoint};
use crate::output::CsvDoc;
use crate::rotor::{default_cap, RotorOrder, WalkState};

#[derive(Debug, Clone)]
pub struct AggregationState {
    occupied: HashSet<LatticePoint>,
    walk: WalkState,
    particles_released: u64,
}

impl AggregationState {
    pub fn new(rule: ConfigRule, order: RotorOrder) -> Result<Self> {
        let walk = WalkState::new(rule, order)?;
        let occupied = [walk.position().clone()].into_iter().collect();
        Ok(AggregationState {
            occupied,
            walk,
            particles_released: 0,
        })
    }

    pub fn dim(&self) -> Dimension {
        self.walk.dim()
    }

    pub fn occupied(&self) -> &HashSet<LatticePoint> {
        &self.occupied
    }

    pub fn sorted_sites(&self) -> Vec<LatticePoint> {
        let sorted: BTreeSet<_> = self.occupied.iter().cloned().collect();
        sorted.into_iter().collect()
    }

    pub fn particles_released(&self) -> u64 {
        self.particles_released
    }

    pub fn walk(&self) -> &WalkState {
        &self.walk
    }

    /// Releases one particle and returns the site it adjoined.
    pub fn release(&mut self, cap: Option<u64>) -> Result<LatticePoint> {
        let dim = self.dim();
        let cap = cap.unwrap_or_else(|| default_cap(dim, self.occupied.iter()));
        self.walk.relocate(LatticePoint::origin(dim));
        self.walk.run_until_exit(&self.occupied, cap)?;
        let site = self.walk.position().clone();
        self.occupied.insert(site.clone());
        self.particles_released += 1;
        Ok(site)
    }

    pub fn shape_report(&self) -> ShapeReport {
        shape_report(&self.occupied, self.dim())
    }
}

/// Grows a cluster of `k + 1` sites from the origin.
pub fn aggregate(k: u64, rule: ConfigRule, order: RotorOrder) -> Result<AggregationState> {
    let mut state = AggregationState::new(rule, order)?;
    for _ in 0..k {
        state.release(None)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    /// Largest `r` with every site of `B[0,r]` occupied.
    pub inradius: u64,
    /// Largest ∞-norm among occupied sites.
    pub outradius: u64,
    /// `inradius / outradius`, and 1 for the single-site cluster.
    pub sphericity: f64,
}

/// Sites of ∞-norm exactly `r` in dimension `d`.
pub fn shell_capacity(dim: Dimension, r: u64) -> u64 {
    let d = dim.get() as u32;
    if r == 0 {
        1
    } else {
        (2 * r + 1).pow(d) - (2 * r - 1).pow(d)
    }
}

/// Occupied-site count per ∞-norm shell, `0..=outradius`.
pub fn shell_occupancy(sites: &HashSet<LatticePoint>) -> Vec<u64> {
    let out = sites
        .iter()
        .map(LatticePoint::infinity_norm)
        .max()
        .unwrap_or(0);
    let mut counts = vec![0u64; out as usize + 1];
    for p in sites {
        counts[p.infinity_norm() as usize] += 1;
    }
    counts
}

pub fn shape_report(sites: &HashSet<LatticePoint>, dim: Dimension) -> ShapeReport {
    let shells = shell_occupancy(sites);
    let outradius = shells.len() as u64 - 1;
    let mut inradius = 0u64;
    // the origin shell counts as full only if the origin is present
    if shells[0] == 1 {
        while inradius < outradius
            && shells[inradius as usize + 1] == shell_capacity(dim, inradius + 1)
        {
            inradius += 1;
        }
    }
    let sphericity = if outradius == 0 {
        1.0
    } else {
        inradius as f64 / outradius as f64
    };
    ShapeReport {
        inradius,
        outradius,
        sphericity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdlaSummary {
    pub k: u64,
    pub trials: u64,
    pub seed: u64,
    pub mean_sphericity: f64,
    pub min_sphericity: f64,
    pub max_sphericity: f64,
}

/// One IDLA cluster of `k + 1` sites grown with simple random walks.
pub fn idla_cluster(dim: Dimension, k: u64, rng: &mut impl Rng) -> HashSet<LatticePoint> {
    let origin = LatticePoint::origin(dim);
    let mut occupied: HashSet<LatticePoint> = [origin.clone()].into_iter().collect();
    let labels = dim.directions() as u8;
    for _ in 0..k {
        let mut pos = origin.clone();
        while occupied.contains(&pos) {
            pos.step_mut(Direction(rng.random_range(0..labels)))
                .expect("cluster is bounded");
        }
        occupied.insert(pos);
    }
    occupied
}

/// Seeded Monte Carlo IDLA. Trial `i` uses ChaCha8 seeded with `seed`,
/// stream `i`.
pub fn idla_baseline(dim: Dimension, k: u64, seed: u64, trials: u64) -> Result<IdlaSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig {
            field: "trials".into(),
            message: "must be at least 1".into(),
        });
    }
    let reports: Vec<ShapeReport> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            shape_report(&idla_cluster(dim, k, &mut rng), dim)
        })
        .collect();
    let values: Vec<f64> = reports.iter().map(|r| r.sphericity).collect();
    Ok(IdlaSummary {
        k,
        trials,
        seed,
        mean_sphericity: values.iter().sum::<f64>() / trials as f64,
        min_sphericity: values.iter().copied().fold(f64::INFINITY, f64::min),
        max_sphericity: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// `{"d": .., "k": .., "sites": [[coords], ..]}` with sites sorted.
pub fn cluster_json(state: &AggregationState) -> serde_json::Value {
    serde_json::json!({
        "d": state.dim().get(),
        "k": state.particles_released(),
        "sites": state.sorted_sites(),
    })
}

pub fn shells_csv(sites: &HashSet<LatticePoint>, dim: Dimension, comment: &str) -> CsvDoc {
    let mut doc = CsvDoc::new(comment, &["radius", "occupied", "capacity"]);
    for (r, occupied) in shell_occupancy(sites).into_iter().enumerate() {
        doc.row([
            r.to_string(),
            occupied.to_string(),
            shell_capacity(dim, r as u64).to_string(),
        ]);
    }
    doc
}

/// True when every site is joined to the origin through occupied
/// nearest-neighbour steps.
pub fn is_connected(sites: &HashSet<LatticePoint>, dim: Dimension) -> bool {
    let origin = LatticePoint::origin(dim);
    let mut seen: HashSet<&LatticePoint> = HashSet::new();
    let Some(start) = sites.get(&origin) else {
        return false;
    };
    let mut stack = vec![start];
    seen.insert(start);
    while let Some(p) = stack.pop() {
        for label in dim.labels() {
            if let Ok(q) = p.translate(label) {
                if let Some(found) = sites.get(&q) {
                    if seen.insert(found) {
                        stack.push(found);
                    }
                }
            }
        }
    }
    seen.len() == sites.len()
}
