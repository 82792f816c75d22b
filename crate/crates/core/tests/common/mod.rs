#![allow(dead_code)]

pub mod naive;

use rotorlab::{ConfigRule, Dimension, LatticePoint, RotorOrder, WalkState};

pub fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

pub fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::from_slice(c)
}

pub fn toward_walk(d: usize) -> WalkState {
    let dim = dim(d);
    WalkState::new(ConfigRule::toward_origin(dim), RotorOrder::cyclic(dim)).unwrap()
}

/// Labels of B[0,2] in d=3 when the toward-origin walk first leaves it,
/// in dense-index order. Produced by a standalone reference simulator.
pub const SNAPSHOT_B2_AFTER_EXIT_2: &str = "11111101111111111111111111122123110311103111015551112212321033200320102055111121214002440025000155511111113331134311333111111";

/// Origin visits and exit step at the first exit of B[0,n], n = 0..=20,
/// d = 3, toward-origin rule.
pub const TOWARD_ORIGIN_SWEEP_20: [(u64, u64); 21] = [
    (1, 1),
    (7, 15),
    (13, 189),
    (19, 913),
    (25, 2877),
    (31, 7055),
    (37, 14707),
    (43, 27381),
    (49, 46913),
    (55, 75427),
    (61, 115335),
    (67, 169337),
    (73, 240421),
    (79, 331863),
    (85, 447227),
    (91, 590365),
    (97, 765417),
    (103, 976811),
    (109, 1229263),
    (115, 1527777),
    (121, 1877645),
];

/// Stabilization radius of each site of B[0,3] (dense-index order) over
/// exits m = 0..=15, d = 3, toward-origin rule.
pub const STABILIZATION_B3_N15: &str = "4 4 4 0 0 0 0 0 0 0 3 3 3 0 0 3 3 3 3 3 0 0 3 3 3 3 3 0 0 3 3 3 3 3 0 0 3 3 3 3 3 0 0 0 0 0 0 0 0 4 4 4 3 3 3 0 0 3 3 0 0 0 3 3 0 0 2 2 0 3 3 0 2 2 2 0 3 3 0 2 2 2 0 3 3 0 0 0 0 0 3 0 3 3 3 3 3 0 4 4 4 3 3 3 0 0 3 3 2 2 0 3 3 0 2 0 0 2 3 3 2 0 1 0 2 3 3 2 0 0 0 2 3 3 0 2 2 2 0 3 0 3 3 3 3 3 0 4 4 4 3 3 3 0 0 3 3 2 2 0 3 3 0 2 1 0 2 3 3 2 1 0 1 2 3 3 2 1 1 0 2 3 3 2 2 2 2 0 3 3 3 3 3 3 3 0 0 4 4 4 3 3 0 4 0 3 3 2 0 3 4 3 0 2 2 2 3 4 3 2 1 2 2 3 4 3 2 2 2 2 3 4 3 2 2 2 0 3 4 3 3 3 3 3 0 0 4 4 4 4 3 0 4 0 3 3 3 3 3 4 3 3 3 3 3 3 4 3 0 2 3 3 3 4 3 3 3 3 3 3 4 3 3 3 3 3 3 4 3 3 3 3 3 0 0 4 4 4 4 4 4 4 4 4 4 4 4 4 4 0 3 3 4 4 4 4 0 3 3 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4 4";

pub fn stabilization_fixture() -> Vec<u64> {
    STABILIZATION_B3_N15
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect()
}

/// Rotor aggregation, d = 2, toward-origin, k = 500: (inradius, outradius).
pub const AGGREGATE_500_D2_RADII: (u64, u64) = (9, 12);

/// Sphericity threshold: reference value 9/12 = 0.75 minus a 0.05 margin.
pub const SPHERICITY_THRESHOLD_T0: f64 = 0.70;
