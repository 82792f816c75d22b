//! A deliberately plain rotor walk used as an oracle: coordinates are
//! `Vec<i64>`, labels `usize`, the field is a `HashMap` overlay over a rule
//! closure, and nothing is shared with the library's engine.

#![allow(dead_code)]

use std::collections::HashMap;

pub type Pt = Vec<i64>;

pub fn unit(label: usize, d: usize) -> Pt {
    let mut v = vec![0; d];
    if label < d {
        v[label] = 1;
    } else {
        v[label - d] = -1;
    }
    v
}

fn dominant_axis(p: &[i64]) -> Option<usize> {
    let abs: Vec<i64> = p.iter().map(|c| c.abs()).collect();
    (0..p.len()).find(|&i| p[i] != 0 && (0..p.len()).all(|j| j == i || abs[i] > abs[j]))
}

/// First-visit label sends the walker one step toward the origin along
/// the strictly dominant axis, else label 1.
pub fn toward_origin(p: &[i64]) -> usize {
    let d = p.len();
    match dominant_axis(p) {
        Some(i) if p[i] < 0 => i,
        Some(i) => d + i,
        None => 1,
    }
}

/// The case table exactly as printed.
pub fn paper_literal(p: &[i64]) -> usize {
    let d = p.len();
    match dominant_axis(p) {
        Some(0) if p[0] < 0 => 2 * d - 1,
        Some(i) if p[i] < 0 => i,
        Some(i) if i == d - 1 => 2 * d - 2,
        Some(i) => d + i,
        None => 1,
    }
}

pub fn norm(p: &[i64]) -> i64 {
    p.iter().map(|c| c.abs()).max().unwrap_or(0)
}

pub fn box_points(n: i64, d: usize) -> Vec<Pt> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &out {
            for c in -n..=n {
                let mut q = prefix.clone();
                q.push(c);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// The one-line step map on a (position, overlay) pair: move along the
/// current label, then advance that site's label by one mod 2d.
pub fn g(x: &Pt, l: &mut HashMap<Pt, usize>, rule: &dyn Fn(&[i64]) -> usize) -> Pt {
    let d = x.len();
    let c = *l.get(x).unwrap_or(&rule(x));
    l.insert(x.clone(), (c + 1) % (2 * d));
    x.iter().zip(unit(c, d)).map(|(a, b)| a + b).collect()
}

pub struct NaiveWalk<'r> {
    pub d: usize,
    pub pos: Pt,
    pub labels: HashMap<Pt, usize>,
    pub rule: &'r dyn Fn(&[i64]) -> usize,
    pub steps: u64,
    pub origin_visits: u64,
    pub max_norm: i64,
    pub departures: HashMap<Pt, Vec<u64>>,
}

impl<'r> NaiveWalk<'r> {
    pub fn new(d: usize, rule: &'r dyn Fn(&[i64]) -> usize) -> Self {
        NaiveWalk {
            d,
            pos: vec![0; d],
            labels: HashMap::new(),
            rule,
            steps: 0,
            origin_visits: 1,
            max_norm: 0,
            departures: HashMap::new(),
        }
    }

    pub fn label(&self, p: &[i64]) -> usize {
        self.labels
            .get(p)
            .copied()
            .unwrap_or_else(|| (self.rule)(p))
    }

    pub fn step(&mut self) {
        let here = self.label(&self.pos);
        self.departures
            .entry(self.pos.clone())
            .or_insert_with(|| vec![0; 2 * self.d])[here] += 1;
        self.pos = g(&self.pos, &mut self.labels, self.rule);
        self.steps += 1;
        if self.pos.iter().all(|&c| c == 0) {
            self.origin_visits += 1;
        }
        self.max_norm = self.max_norm.max(norm(&self.pos));
    }

    /// (origin visits, exit step) at the first exit of each B[0,m], m <= n_max.
    pub fn sweep(&mut self, n_max: i64) -> Vec<(u64, u64)> {
        let mut rows = Vec::new();
        for m in 0..=n_max {
            while norm(&self.pos) <= m {
                self.step();
            }
            rows.push((self.origin_visits, self.steps));
        }
        rows
    }

    pub fn snapshot(&self, n: i64) -> Vec<u8> {
        box_points(n, self.d)
            .iter()
            .map(|p| self.label(p) as u8)
            .collect()
    }
}
